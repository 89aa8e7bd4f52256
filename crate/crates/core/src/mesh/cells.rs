//! Exact cell averages of radial powers `d(x, 0)^gamma`.

use super::Grid;
use crate::quadrature::gauss_legendre;
use crate::real::Real;

const TENSOR_POINTS: usize = 16;
const ANGLE_POINTS: usize = 24;

/// Average of `d(x, 0)^gamma` over every cell, with `d` the periodic distance.
///
/// Cells touching the origin get `+inf` when `gamma <= -dim` (the power is not
/// integrable there). Exact in one dimension; in two dimensions a tensor
/// Gauss–Legendre rule is used away from the origin and a polar rule on the
/// four cells sharing the origin as a corner.
pub fn power_cell_means<T: Real>(grid: &Grid, gamma: f64) -> Vec<T> {
    let n = grid.cells_per_side();
    let h = 1.0 / n as f64;
    // per-axis distance interval of cell k: [m h, min((m+1) h, 1/2)]
    let axis: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let m = k.min(n - 1 - k) as f64;
            (m * h, ((m + 1.0) * h).min(0.5))
        })
        .collect();
    match grid.dim() {
        1 => axis
            .iter()
            .map(|&(a, b)| T::of(mean_1d(a, b, gamma)))
            .collect(),
        _ => {
            let (x, w) = gauss_legendre(TENSOR_POINTS);
            let (xa, wa) = gauss_legendre(ANGLE_POINTS);
            (0..grid.num_cells())
                .map(|c| {
                    let [i, j] = grid.coords(c);
                    T::of(mean_2d(axis[i], axis[j], gamma, (&x, &w), (&xa, &wa)))
                })
                .collect()
        }
    }
}

/// Per-cell `(inf, sup)` of `d(x, 0)^gamma` over the closed cell.
pub fn power_cell_extremes<T: Real>(grid: &Grid, gamma: f64) -> (Vec<T>, Vec<T>) {
    let n = grid.cells_per_side();
    let h = 1.0 / n as f64;
    let axis: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let m = k.min(n - 1 - k) as f64;
            (m * h, ((m + 1.0) * h).min(0.5))
        })
        .collect();
    let span = |c: usize| -> (f64, f64) {
        let [i, j] = grid.coords(c);
        if grid.dim() == 1 {
            axis[i]
        } else {
            let (a1, b1) = axis[i];
            let (a2, b2) = axis[j];
            ((a1 * a1 + a2 * a2).sqrt(), (b1 * b1 + b2 * b2).sqrt())
        }
    };
    (0..grid.num_cells())
        .map(|c| {
            let (near, far) = span(c);
            let (lo, hi) = (near.powf(gamma), far.powf(gamma));
            let (lo, hi) = if gamma >= 0.0 { (lo, hi) } else { (hi, lo) };
            (T::of(lo), T::of(hi))
        })
        .unzip()
}

fn mean_1d(a: f64, b: f64, gamma: f64) -> f64 {
    let e = gamma + 1.0;
    if a == 0.0 && e <= 0.0 {
        return f64::INFINITY;
    }
    let integral = if e.abs() < 1e-12 {
        (b / a).ln()
    } else {
        (b.powf(e) - a.powf(e)) / e
    };
    integral / (b - a)
}

type Rule<'a> = (&'a [f64], &'a [f64]);

fn mean_2d(xr: (f64, f64), yr: (f64, f64), gamma: f64, tensor: Rule<'_>, polar: Rule<'_>) -> f64 {
    let (a1, b1) = xr;
    let (a2, b2) = yr;
    let area = (b1 - a1) * (b2 - a2);
    if a1 == 0.0 && a2 == 0.0 {
        let e = gamma + 2.0;
        if e <= 0.0 {
            return f64::INFINITY;
        }
        // integral over the rectangle [0,b1]x[0,b2] in polar coordinates
        let split = (b2 / b1).atan();
        let seg = |lo: f64, hi: f64, edge: &dyn Fn(f64) -> f64| -> f64 {
            let (x, w) = polar;
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            x.iter()
                .zip(w)
                .map(|(&t, &wt)| {
                    let theta = mid + half * t;
                    wt * edge(theta).powf(e) / e
                })
                .sum::<f64>()
                * half
        };
        let total = seg(0.0, split, &|t| b1 / t.cos())
            + seg(split, std::f64::consts::FRAC_PI_2, &|t| b2 / t.sin());
        return total / area;
    }
    let (x, w) = tensor;
    let (h1, m1) = (0.5 * (b1 - a1), 0.5 * (b1 + a1));
    let (h2, m2) = (0.5 * (b2 - a2), 0.5 * (b2 + a2));
    let mut acc = 0.0;
    for (&s, &ws) in x.iter().zip(w) {
        let px = m1 + h1 * s;
        for (&t, &wt) in x.iter().zip(w) {
            let py = m2 + h2 * t;
            acc += ws * wt * (px * px + py * py).powf(0.5 * gamma);
        }
    }
    acc * 0.25
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremes_bracket_the_means() {
        for dim in [1, 2] {
            let g = Grid::new(dim, 8).unwrap();
            for gamma in [-0.5, 0.0, 1.5] {
                let m: Vec<f64> = power_cell_means(&g, gamma);
                let (lo, hi): (Vec<f64>, Vec<f64>) = power_cell_extremes(&g, gamma);
                for c in 0..g.num_cells() {
                    assert!(lo[c] <= m[c] * (1.0 + 1e-13) && m[c] <= hi[c] * (1.0 + 1e-13));
                }
            }
            let (lo, hi): (Vec<f64>, Vec<f64>) = power_cell_extremes(&g, -1.0);
            assert!(hi[0].is_infinite() && lo[0] > 0.0);
            let (lo, _): (Vec<f64>, Vec<f64>) = power_cell_extremes(&g, 1.0);
            assert_eq!(lo[0], 0.0);
        }
    }

    #[test]
    fn one_dimensional_means_are_exact() {
        let g = Grid::new(1, 8).unwrap();
        let m: Vec<f64> = power_cell_means(&g, 1.0);
        // cell 0 covers distances [0, 1/8]: mean 1/16
        assert!((m[0] - 1.0 / 16.0).abs() < 1e-15);
        assert!((m[7] - 1.0 / 16.0).abs() < 1e-15);
        assert!((m[3] - 7.0 / 16.0).abs() < 1e-15);
        let m: Vec<f64> = power_cell_means(&g, -1.0);
        assert!(m[0].is_infinite());
        assert!((m[1] - 8.0 * 2f64.ln()).abs() < 1e-12);
        let m: Vec<f64> = power_cell_means(&g, 0.0);
        assert!(m.iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn total_integral_matches_closed_form_in_2d() {
        // integral of |x|^2 over [-1/2,1/2]^2 is 1/6
        let g = Grid::new(2, 8).unwrap();
        let m: Vec<f64> = power_cell_means(&g, 2.0);
        let total: f64 = m.iter().sum::<f64>() / 64.0;
        assert!((total - 1.0 / 6.0).abs() < 1e-13);
        // integral of |x|^{-1} over [0,h]^2 is 2 h ln(1 + sqrt 2)
        let m: Vec<f64> = power_cell_means(&g, -1.0);
        let h = 0.125;
        let exact = 2.0 * h * (1.0 + 2f64.sqrt()).ln() / (h * h);
        assert!((m[0] - exact).abs() < 1e-12 * exact);
        assert!(m.iter().all(|x| x.is_finite()));
        let m: Vec<f64> = power_cell_means(&g, -2.0);
        assert!(
            m[0].is_infinite() && m[7].is_infinite() && m[56].is_infinite() && m[63].is_infinite()
        );
        assert!(m[1].is_finite());
    }

    #[test]
    fn near_singular_cells_are_accurate() {
        // cell [h,2h]x[0,h] for gamma = -1.9 against a refined rule
        let (x, w) = gauss_legendre(16);
        let (xa, wa) = gauss_legendre(24);
        let h = 1.0 / 32.0;
        let coarse = mean_2d((h, 2.0 * h), (0.0, h), -1.9, (&x, &w), (&xa, &wa));
        let mut fine = 0.0;
        let k = 64;
        for i in 0..k {
            for j in 0..k {
                let a = (
                    h + h * i as f64 / k as f64,
                    h + h * (i + 1) as f64 / k as f64,
                );
                let b = (h * j as f64 / k as f64, h * (j + 1) as f64 / k as f64);
                fine += mean_2d(a, b, -1.9, (&x, &w), (&xa, &wa));
            }
        }
        fine /= (k * k) as f64;
        assert!((coarse - fine).abs() < 1e-12 * fine);
    }
}
