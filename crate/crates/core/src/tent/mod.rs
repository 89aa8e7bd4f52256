//! Fields on the discrete upper half-space `grid x ladder`, the cone functional
//! `A_w^alpha`, the Carleson functionals `C_w` and `C_{w,p0}`, and the
//! change-of-aperture comparison.
//!
//! The measure element at `(y, t_j)` is `w(y) h^n ln(rho)`; cones and balls
//! use the strict, tie-broken distance test of [`Grid::within`].

mod field;

pub use field::HalfSpaceField;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mesh::{BallFamily, Grid, WeightModel};
use crate::real::Real;
use crate::semigroup::TimeLadder;

/// Grid, weight and ladder with the ball measures `w(B(y, t_j))` cached.
#[derive(Clone, Debug)]
pub struct TentSpace<T> {
    grid: Grid,
    weight: WeightModel<T>,
    ladder: TimeLadder<T>,
    nodes: Vec<T>,
    masses: Vec<T>,
    /// `w(B(y, t_j))` at `j * n + y`.
    ball_measures: Vec<T>,
}

impl<T: Real> TentSpace<T> {
    pub fn new(grid: &Grid, weight: &WeightModel<T>, ladder: TimeLadder<T>) -> Result<Self> {
        crate::error::check_len(grid.num_cells(), weight.len())?;
        let masses = weight.masses(grid);
        let nodes = ladder.nodes();
        let ball_measures = nodes
            .par_iter()
            .map(|&t| grid.ball_sums(&masses, t))
            .collect::<Vec<_>>()
            .concat();
        Ok(Self {
            grid: grid.clone(),
            weight: weight.clone(),
            ladder,
            nodes,
            masses,
            ball_measures,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn weight(&self) -> &WeightModel<T> {
        &self.weight
    }

    pub fn ladder(&self) -> &TimeLadder<T> {
        &self.ladder
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    /// `w(B(y, t_j))`.
    pub fn ball_measure(&self, j: usize, y: usize) -> T {
        self.ball_measures[j * self.grid.num_cells() + y]
    }

    fn check(&self, f: &HalfSpaceField<T>) -> Result<()> {
        if f.num_cells() != self.grid.num_cells() || f.num_nodes() != self.nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.num_cells() * self.nodes.len(),
                got: f.num_cells() * f.num_nodes(),
            });
        }
        Ok(())
    }

    /// `|F(y, t_j)|^2 w(y) h^n ln(rho) / w(B(y, t_j))` for node `j`.
    fn cone_density(&self, f: &HalfSpaceField<T>, j: usize) -> Vec<T> {
        let lr = self.ladder.weight();
        (0..self.grid.num_cells())
            .map(|y| f.norm2(j, y) * self.masses[y] * lr / self.ball_measure(j, y))
            .collect()
    }

    /// `A_w^alpha F` at every vertex.
    pub fn cone(&self, f: &HalfSpaceField<T>, alpha: T) -> Result<Vec<T>> {
        Ok(self
            .cone_squared(f, alpha)?
            .into_iter()
            .map(|v| v.sqrt())
            .collect())
    }

    /// `(A_w^alpha F)^2` at every vertex.
    pub fn cone_squared(&self, f: &HalfSpaceField<T>, alpha: T) -> Result<Vec<T>> {
        if !(alpha > T::zero()) {
            return invalid(format!("cone aperture must be positive, got {alpha}"));
        }
        self.check(f)?;
        let per_node: Vec<Vec<T>> = (0..self.nodes.len())
            .into_par_iter()
            .map(|j| {
                self.grid
                    .ball_sums(&self.cone_density(f, j), alpha * self.nodes[j])
            })
            .collect();
        Ok(sum_rows(&per_node, self.grid.num_cells()))
    }

    /// `A_w^alpha F(x)` at a single vertex.
    pub fn cone_at(&self, f: &HalfSpaceField<T>, alpha: T, x: usize) -> Result<T> {
        if !(alpha > T::zero()) {
            return invalid(format!("cone aperture must be positive, got {alpha}"));
        }
        self.check(f)?;
        let mut acc = T::zero();
        for j in 0..self.nodes.len() {
            acc += self
                .grid
                .ball_sum(&self.cone_density(f, j), x, alpha * self.nodes[j]);
        }
        Ok(acc.sqrt())
    }

    /// `sum_{y, j} |F|^2 w(y) h^n ln(rho)`, which equals `||A_w F||^2_{L^2(w)}`.
    pub fn fubini_sum(&self, f: &HalfSpaceField<T>) -> Result<T> {
        self.check(f)?;
        let lr = self.ladder.weight();
        let mut acc = T::zero();
        for j in 0..self.nodes.len() {
            for y in 0..self.grid.num_cells() {
                acc += f.norm2(j, y) * self.masses[y] * lr;
            }
        }
        Ok(acc)
    }

    /// `||A_w^beta F||^2_{L^2(v dw)}` summed in the other order:
    /// `sum_{y, j} |F|^2 w(y) h^n ln(rho) vw(B(y, beta t_j)) / w(B(y, t_j))`.
    pub fn angle_fubini_sum(
        &self,
        f: &HalfSpaceField<T>,
        beta: T,
        v: &WeightModel<T>,
    ) -> Result<T> {
        if !(beta > T::zero()) {
            return invalid(format!("cone aperture must be positive, got {beta}"));
        }
        self.check(f)?;
        crate::error::check_len(self.grid.num_cells(), v.len())?;
        let vw: Vec<T> = self
            .masses
            .iter()
            .zip(v.values())
            .map(|(m, v)| *m * *v)
            .collect();
        let parts: Vec<T> = (0..self.nodes.len())
            .into_par_iter()
            .map(|j| {
                let vwb = self.grid.ball_sums(&vw, beta * self.nodes[j]);
                self.cone_density(f, j)
                    .iter()
                    .zip(&vwb)
                    .map(|(d, b)| *d * *b)
                    .sum()
            })
            .collect();
        Ok(parts.into_iter().sum())
    }

    /// `C_w F`: ball supremum of `(1/w(B) sum_{t_j < r_B} sum_{y in B} |F|^2 w h^n ln rho)^{1/2}`
    /// over `family` with all centers, at every vertex.
    pub fn carleson_box(&self, f: &HalfSpaceField<T>, family: &BallFamily<T>) -> Result<Vec<T>> {
        self.check(f)?;
        let n = self.grid.num_cells();
        let lr = self.ladder.weight();
        let mut best = vec![T::zero(); n];
        for &r in family.radii() {
            let mut box_density = vec![T::zero(); n];
            for (j, &t) in self.nodes.iter().enumerate() {
                if t >= r {
                    break;
                }
                for (y, slot) in box_density.iter_mut().enumerate() {
                    *slot += f.norm2(j, y) * self.masses[y] * lr;
                }
            }
            let num = self.grid.ball_sums(&box_density, r);
            let den = self.grid.ball_sums(&self.masses, r);
            let avg: Vec<T> = num.iter().zip(&den).map(|(a, b)| *a / *b).collect();
            self.sup_over_balls(&mut best, &avg, r);
        }
        Ok(best.into_iter().map(|v| v.sqrt()).collect())
    }

    /// `C_{w,p0} F`: ball supremum of the `L^{p0}(dw)` average over `B` of the
    /// cone truncated at height `r_B`, at every vertex.
    pub fn carleson_p(
        &self,
        f: &HalfSpaceField<T>,
        p0: T,
        family: &BallFamily<T>,
    ) -> Result<Vec<T>> {
        Ok(self.carleson_p_many(f, &[p0], family)?.remove(0))
    }

    /// [`carleson_p`](Self::carleson_p) for several exponents, sharing the cone sums.
    pub fn carleson_p_many(
        &self,
        f: &HalfSpaceField<T>,
        p0s: &[T],
        family: &BallFamily<T>,
    ) -> Result<Vec<Vec<T>>> {
        if let Some(p0) = p0s.iter().find(|p| !(**p > T::zero())) {
            return invalid(format!("Carleson exponent must be positive, got {p0}"));
        }
        self.check(f)?;
        let n = self.grid.num_cells();
        let per_node: Vec<Vec<T>> = (0..self.nodes.len())
            .into_par_iter()
            .map(|j| self.grid.ball_sums(&self.cone_density(f, j), self.nodes[j]))
            .collect();
        let density = self.weight.values();
        let den: Vec<Vec<T>> = family
            .radii()
            .iter()
            .map(|&r| self.grid.ball_sums(density, r))
            .collect();
        let mut best = vec![vec![T::zero(); n]; p0s.len()];
        for (&r, den) in family.radii().iter().zip(&den) {
            // truncated cone, summed over nodes in the same order as the full cone
            let mut trunc = vec![T::zero(); n];
            for (j, row) in per_node.iter().enumerate() {
                if self.nodes[j] >= r {
                    break;
                }
                for (a, b) in trunc.iter_mut().zip(row) {
                    *a += *b;
                }
            }
            for (&p0, best) in p0s.iter().zip(best.iter_mut()) {
                let half = p0 * T::of(0.5);
                let powered: Vec<T> = trunc
                    .iter()
                    .zip(density)
                    .map(|(a, d)| a.powf(half) * *d)
                    .collect();
                let num = self.grid.ball_sums(&powered, r);
                let avg: Vec<T> = num.iter().zip(den).map(|(a, b)| *a / *b).collect();
                self.sup_over_balls(best, &avg, r);
            }
        }
        Ok(best
            .into_iter()
            .zip(p0s)
            .map(|(b, &p0)| b.into_iter().map(|m| m.powf(p0.recip())).collect())
            .collect())
    }

    /// Balls of radius `r` containing `x` are exactly those centered in `B(x, r)`.
    fn sup_over_balls(&self, best: &mut [T], per_center: &[T], r: T) {
        let offs = self.grid.offsets_within(r);
        best.par_iter_mut().enumerate().for_each(|(x, slot)| {
            for o in offs {
                let a = per_center[self.grid.shift(x, o.delta)];
                if a > *slot {
                    *slot = a;
                }
            }
        });
    }

    /// `||A_w^beta F|| / ||A_w^alpha F||` in `L^p(v dw)` next to the predicted powers.
    pub fn change_of_angle(
        &self,
        f: &HalfSpaceField<T>,
        alpha: T,
        beta: T,
        p: T,
        v: &WeightModel<T>,
        classes: AngleClasses,
    ) -> Result<AngleReport> {
        if !(alpha > T::zero() && beta >= alpha) {
            return invalid(format!(
                "apertures need 0 < alpha <= beta, got ({alpha}, {beta})"
            ));
        }
        let unit = WeightModel::uniform(&self.grid);
        let a = self.cone(f, alpha)?;
        let b = self.cone(f, beta)?;
        let vw = v.product(&self.weight)?;
        let na = crate::mesh::lp_norm(&a, p, &unit, &vw)?.as_f64();
        let nb = crate::mesh::lp_norm(&b, p, &unit, &vw)?.as_f64();
        let n = self.grid.dim() as f64;
        let (pf, q) = (p.as_f64(), beta.as_f64() / alpha.as_f64());
        let widening = match (classes.r_tilde, classes.r) {
            (Some(rt), Some(r)) if pf <= 2.0 * r => Some(n * rt * r / pf),
            _ => None,
        };
        let narrowing = match (classes.s_tilde, classes.s) {
            (Some(st), Some(s)) if pf >= 2.0 / s => Some(n / (s * st * pf)),
            _ => None,
        };
        let ratio = (na > 0.0).then(|| nb / na);
        Ok(AngleReport {
            alpha: alpha.as_f64(),
            beta: beta.as_f64(),
            p: pf,
            norm_alpha: na,
            norm_beta: nb,
            ratio,
            widening_exponent: widening,
            widening_factor: widening.map(|e| q.powf(e)),
            narrowing_exponent: narrowing,
            narrowing_factor: narrowing.map(|e| q.recip().powf(e)),
            monotone: ratio.map(|r| r >= 1.0 - 1e-12),
        })
    }
}

fn sum_rows<T: Real>(rows: &[Vec<T>], n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n];
    for row in rows {
        for (a, b) in out.iter_mut().zip(row) {
            *a += *b;
        }
    }
    out
}

/// Class parameters for the change-of-aperture bounds: `w in A_{r~}`,
/// `v in A_r(w)` for widening and `w in RH_{s~'}`, `v in RH_{s'}(w)` for narrowing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AngleClasses {
    pub r_tilde: Option<f64>,
    pub r: Option<f64>,
    pub s_tilde: Option<f64>,
    pub s: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleReport {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub norm_alpha: f64,
    pub norm_beta: f64,
    /// `None` when the `alpha` norm vanishes.
    pub ratio: Option<f64>,
    /// `n r~ r / p` when `p <= 2r`.
    pub widening_exponent: Option<f64>,
    pub widening_factor: Option<f64>,
    /// `n / (s s~ p)` when `p >= 2/s`.
    pub narrowing_exponent: Option<f64>,
    pub narrowing_factor: Option<f64>,
    pub monotone: Option<bool>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{maximal, MaximalBase};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space(dim: usize, n: usize, alpha: f64) -> TentSpace<f64> {
        let g = Grid::new(dim, n).unwrap();
        let w = WeightModel::power(&g, alpha).unwrap();
        let ladder = TimeLadder::new(g.spacing::<f64>() * 0.5, 1.0, 2f64.powf(0.25)).unwrap();
        TentSpace::new(&g, &w, ladder).unwrap()
    }

    fn random_field(ts: &TentSpace<f64>, seed: u64) -> HalfSpaceField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = ts.grid().num_cells() * ts.nodes().len();
        HalfSpaceField::new(
            ts.grid(),
            ts.nodes().len(),
            1,
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    /// Direct loop over every (x, y, j) triple.
    fn cone_bruteforce(ts: &TentSpace<f64>, f: &HalfSpaceField<f64>, alpha: f64, x: usize) -> f64 {
        let g = ts.grid();
        let lr = ts.ladder().weight();
        let mut acc = 0.0;
        for (j, &t) in ts.nodes().iter().enumerate() {
            for y in 0..g.num_cells() {
                if g.within(x, y, alpha * t) {
                    let wb: f64 = (0..g.num_cells())
                        .filter(|&z| g.within(y, z, t))
                        .map(|z| ts.masses()[z])
                        .sum();
                    acc += f.norm2(j, y) * ts.masses()[y] * lr / wb;
                }
            }
        }
        acc.sqrt()
    }

    #[test]
    fn cone_matches_bruteforce_and_single_node() {
        let ts = space(1, 16, 0.5);
        let f = random_field(&ts, 1);
        let fast = ts.cone(&f, 1.5).unwrap();
        for x in [0, 5, 11] {
            let slow = cone_bruteforce(&ts, &f, 1.5, x);
            assert!((fast[x] - slow).abs() < 1e-12 * slow.max(1.0));
            assert!((ts.cone_at(&f, 1.5, x).unwrap() - fast[x]).abs() < 1e-12);
        }
        // single node indicator
        let (j0, y0) = (5, 3);
        let mut single = HalfSpaceField::zeros(ts.grid(), ts.nodes().len(), 1);
        single.set(j0, y0, 0, 1.0);
        let a = ts.cone(&single, 1.0).unwrap();
        let t0 = ts.nodes()[j0];
        let expected = (ts.masses()[y0] * ts.ladder().weight() / ts.ball_measure(j0, y0)).sqrt();
        for x in 0..16 {
            let inside = ts.grid().within(x, y0, t0);
            assert!((a[x] - if inside { expected } else { 0.0 }).abs() < 1e-14);
        }
        assert!(ts.cone(&f, 0.0).is_err());
    }

    #[test]
    fn fubini_and_monotonicity() {
        let ts = space(2, 8, 1.0);
        let f = random_field(&ts, 2);
        let a = ts.cone_squared(&f, 1.0).unwrap();
        let lhs: f64 = a.iter().zip(ts.masses()).map(|(a, m)| a * m).sum();
        let rhs = ts.fubini_sum(&f).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        let v = WeightModel::power(ts.grid(), -0.5).unwrap();
        let b = ts.cone_squared(&f, 2.0).unwrap();
        let lhs: f64 = b
            .iter()
            .zip(ts.masses())
            .zip(v.values())
            .map(|((a, m), v)| a * m * v)
            .sum();
        let rhs = ts.angle_fubini_sum(&f, 2.0, &v).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        for (x, y) in a.iter().zip(&b) {
            assert!(x <= y);
        }
    }

    #[test]
    fn carleson_box_of_a_constant_layer() {
        let ts = space(1, 16, 0.0);
        let j0 = 2;
        let mut f = HalfSpaceField::zeros(ts.grid(), ts.nodes().len(), 1);
        for y in 0..16 {
            f.set(j0, y, 0, 3.0);
        }
        let c = ts
            .carleson_box(&f, &BallFamily::maximal(ts.grid()))
            .unwrap();
        let expected = 3.0 * ts.ladder().weight().sqrt();
        assert!(
            c.iter().all(|v| (v - expected).abs() < 1e-12),
            "{c:?} {expected}"
        );
        let zero = HalfSpaceField::zeros(ts.grid(), ts.nodes().len(), 1);
        assert!(ts
            .carleson_box(&zero, &BallFamily::maximal(ts.grid()))
            .unwrap()
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn carleson_is_dominated_by_the_maximal_cone() {
        let ts = space(2, 8, 1.0);
        let fam = BallFamily::maximal(ts.grid());
        for seed in 0..3 {
            let f = random_field(&ts, seed);
            let a = ts.cone(&f, 1.0).unwrap();
            for p0 in [1.0, 2.0] {
                let c = ts.carleson_p(&f, p0, &fam).unwrap();
                let m = maximal(ts.grid(), &a, MaximalBase::Weighted(ts.weight()), p0).unwrap();
                for (c, m) in c.iter().zip(&m) {
                    assert!(*c <= m + 1e-10);
                }
            }
        }
        assert!(ts.carleson_p(&random_field(&ts, 0), 0.0, &fam).is_err());
    }

    #[test]
    fn carleson_band_from_doubling() {
        let ts = space(2, 8, 1.0);
        let small = BallFamily::dyadic(ts.grid(), 0.25);
        let large = BallFamily::maximal(ts.grid());
        let d = crate::mesh::doubling_constant(ts.grid(), ts.weight(), &small).sqrt();
        let f = random_field(&ts, 9);
        let cb_small = ts.carleson_box(&f, &small).unwrap();
        let cb_large = ts.carleson_box(&f, &large).unwrap();
        let c2_small = ts.carleson_p(&f, 2.0, &small).unwrap();
        let c2_large = ts.carleson_p(&f, 2.0, &large).unwrap();
        for x in 0..64 {
            assert!(cb_small[x] <= d * c2_large[x] * (1.0 + 1e-12));
            assert!(c2_small[x] <= d * cb_large[x] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn change_of_angle_report() {
        let ts = space(1, 16, 0.0);
        let f = random_field(&ts, 4);
        let v = WeightModel::uniform(ts.grid());
        let classes = AngleClasses {
            r_tilde: Some(1.0),
            r: Some(1.0),
            ..Default::default()
        };
        let same = ts.change_of_angle(&f, 1.0, 1.0, 2.0, &v, classes).unwrap();
        assert!((same.ratio.unwrap() - 1.0).abs() < 1e-15);
        let wide = ts.change_of_angle(&f, 1.0, 2.0, 2.0, &v, classes).unwrap();
        assert!(wide.ratio.unwrap() >= 1.0 && wide.ratio.unwrap().is_finite());
        assert_eq!(wide.widening_exponent, Some(0.5));
        assert_eq!(wide.monotone, Some(true));
        let zero = HalfSpaceField::zeros(ts.grid(), ts.nodes().len(), 1);
        assert_eq!(
            ts.change_of_angle(&zero, 1.0, 2.0, 2.0, &v, classes)
                .unwrap()
                .ratio,
            None
        );
        assert!(ts.change_of_angle(&f, 2.0, 1.0, 2.0, &v, classes).is_err());
    }
}
