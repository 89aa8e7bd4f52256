//! `e^{-t sqrt(lambda)} = pi^{-1/2} int_0^inf e^{-u} u^{1/2} e^{-t^2 lambda / 4u} du/u`.
//!
//! With `u = e^v` the measure `du/u` becomes `dv` and the integrand is smooth
//! with doubly exponential decay to the right and `e^{v/2}` decay to the left.

use crate::error::{invalid, Result};
use crate::quadrature::{adaptive_gk, Integral};
use crate::real::Real;

/// Absolute tolerance of the adaptive quadrature (relative to `||c||_2` for fields).
pub const SUBORDINATION_TOL: f64 = 1e-10;

const MAX_PIECES: usize = 20_000;

/// Maximizer of the integrand in `v` for `c = t^2 lambda / 4`.
fn peak(c: f64) -> f64 {
    ((1.0 + (1.0 + 16.0 * c).sqrt()) / 4.0).ln()
}

fn kernel(v: f64, c: f64) -> f64 {
    let e = v.exp();
    (-e + 0.5 * v - c / e).exp() / std::f64::consts::PI.sqrt()
}

/// Half-width of the integration window around `center`: grown until the
/// neglected tails are below `tol`. Left of the peaks the log-derivative of
/// the kernel is at least `1/2 - e^v`, right of them at most `1/2 - e^v`.
fn window(center: f64, cs: &[f64], tol: f64) -> f64 {
    let mut half = 8.0;
    loop {
        let (a, b) = (center - half, center + half);
        let left: f64 = cs
            .iter()
            .map(|&c| kernel(a, c) / (0.5 - a.exp()).max(0.25))
            .fold(0.0, f64::max);
        let right: f64 = cs
            .iter()
            .map(|&c| {
                let slope = b.exp() - 0.5 - c * (-b).exp();
                if slope > 0.25 {
                    kernel(b, c) / slope
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max);
        if left + right < tol * 1e-2 || half > 512.0 {
            return half;
        }
        half *= 1.5;
    }
}

/// Scalar subordination quadrature for `e^{-t sqrt(lambda)}`.
pub fn subordinated_exp(lambda: f64, t: f64) -> Result<Integral<f64>> {
    if !(lambda >= 0.0 && t >= 0.0 && lambda.is_finite() && t.is_finite()) {
        return invalid(format!(
            "subordination needs lambda, t >= 0, got ({lambda}, {t})"
        ));
    }
    let c = t * t * lambda / 4.0;
    let center = peak(c);
    let half = window(center, &[c], SUBORDINATION_TOL);
    adaptive_gk(
        &|v: f64| vec![kernel(v, c)],
        center - half,
        center + half,
        SUBORDINATION_TOL,
        MAX_PIECES,
    )
}

/// Coefficients of `e^{-t sqrt L} f` from those of `f`, integrating all modes
/// together (vector-valued quadrature) over a window covering every peak.
pub fn subordinated_poisson<T: Real>(
    eigenvalues: &[T],
    coefficients: &[T],
    t: T,
) -> Result<Vec<T>> {
    let t = t.as_f64();
    let cs: Vec<f64> = eigenvalues
        .iter()
        .map(|l| t * t * l.as_f64().max(0.0) / 4.0)
        .collect();
    let amps: Vec<f64> = coefficients.iter().map(|c| c.as_f64()).collect();
    let scale = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    if scale == 0.0 {
        return Ok(vec![T::zero(); coefficients.len()]);
    }
    let (lo, hi) = cs
        .iter()
        .map(|&c| peak(c))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p), b.max(p))
        });
    let center = 0.5 * (lo + hi);
    let tol = SUBORDINATION_TOL * scale;
    let half = window(center, &cs, SUBORDINATION_TOL) + 0.5 * (hi - lo);
    let integrand = |v: f64| -> Vec<f64> {
        cs.iter()
            .zip(&amps)
            .map(|(&c, &a)| a * kernel(v, c))
            .collect()
    };
    let r = adaptive_gk(&integrand, center - half, center + half, tol, MAX_PIECES)?;
    Ok(r.value.into_iter().map(T::of).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_closed_form() {
        let one = subordinated_exp(0.0, 1.0).unwrap();
        assert!((one.value[0] - 1.0).abs() < 1e-10);
        let r = subordinated_exp(4.0, 1.0).unwrap();
        assert!((r.value[0] - 0.1353352832366127).abs() < 1e-10);
        assert!(subordinated_exp(-1.0, 1.0).is_err());
    }

    #[test]
    fn scalar_grid_sweep() {
        let mut worst = 0.0f64;
        for i in 0..10 {
            let lambda = 100.0 * i as f64 / 9.0;
            for j in 0..10 {
                let t = 0.1 * 100f64.powf(j as f64 / 9.0);
                let q = subordinated_exp(lambda, t).unwrap().value[0];
                worst = worst.max((q - (-t * lambda.sqrt()).exp()).abs());
            }
        }
        assert!(worst <= 1e-8, "{worst}");
    }

    #[test]
    fn vector_form_matches_scalar_form() {
        let lam = [0.0f64, 1.0, 37.0, 900.0];
        let c = [0.5, -1.0, 2.0, 0.25];
        let v = subordinated_poisson(&lam, &c, 0.3).unwrap();
        for k in 0..4 {
            let exact = c[k] * (-0.3 * lam[k].sqrt()).exp();
            assert!((v[k] - exact).abs() < 1e-10);
        }
        assert_eq!(
            subordinated_poisson(&lam, &[0.0; 4], 0.3).unwrap(),
            vec![0.0; 4]
        );
    }
}
