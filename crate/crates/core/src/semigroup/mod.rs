//! Heat and Poisson families built on the spectral calculus of a
//! [`SpectralOperator`], their space-time gradients, the subordination
//! quadrature and an off-diagonal decay probe.
//!
//! Time is rescaled as in the square functions: the heat family is
//! `(t^2 L)^m e^{-t^2 L}` and the Poisson family `(t sqrt L)^{2K} e^{-t sqrt L}`.

mod offdiag;
mod subordination;

pub use offdiag::{offdiag_probe, AnnulusReport, OffDiagReport, ProbeFamily};
pub use subordination::{subordinated_exp, subordinated_poisson, SUBORDINATION_TOL};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mesh::Grid;
use crate::operator::SpectralOperator;
use crate::real::{powi, Real};

/// Largest `m` / `K` accepted by [`Family`].
pub const MAX_POWER: u32 = 4;

/// Log-uniform time nodes `t_j = t_min rho^j`, `t_j <= t_max`, each carrying
/// the `dt/t` weight `ln rho`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeLadder<T> {
    pub t_min: T,
    pub t_max: T,
    pub ratio: T,
}

impl<T: Real> TimeLadder<T> {
    pub fn new(t_min: T, t_max: T, ratio: T) -> Result<Self> {
        if !(t_min > T::zero() && t_max >= t_min && ratio > T::one() && t_max.is_finite()) {
            return invalid(format!(
                "time ladder needs 0 < t_min <= t_max and ratio > 1, got ({t_min}, {t_max}, {ratio})"
            ));
        }
        Ok(Self {
            t_min,
            t_max,
            ratio,
        })
    }

    /// `[h/4, 1]` with `rho = 2^{1/16}`.
    pub fn default_for(grid: &Grid) -> Self {
        Self {
            t_min: grid.spacing::<T>() * T::of(0.25),
            t_max: T::one(),
            ratio: T::of(2f64.powf(1.0 / 16.0)),
        }
    }

    pub fn with_t_max(self, t_max: T) -> Result<Self> {
        Self::new(self.t_min, t_max, self.ratio)
    }

    pub fn count(&self) -> usize {
        let span = (self.t_max / self.t_min).ln() / self.ratio.ln();
        (span.as_f64() + 1e-9).floor() as usize + 1
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.count())
            .map(|j| self.t_min * self.ratio.powi(j as i32))
            .collect()
    }

    /// Quadrature weight of each node for `dt/t`.
    pub fn weight(&self) -> T {
        self.ratio.ln()
    }
}

/// Semigroup family with its integer power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `(t^2 L)^m e^{-t^2 L}`.
    Heat { m: u32 },
    /// `(t sqrt L)^{2K} e^{-t sqrt L}`.
    Poisson { k: u32 },
}

impl Family {
    pub fn heat(m: u32) -> Result<Self> {
        Self::Heat { m }.validated()
    }

    pub fn poisson(k: u32) -> Result<Self> {
        Self::Poisson { k }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.power() > MAX_POWER {
            return invalid(format!(
                "semigroup power {} exceeds the cap {MAX_POWER}",
                self.power()
            ));
        }
        Ok(self)
    }

    pub fn power(&self) -> u32 {
        match *self {
            Family::Heat { m } => m,
            Family::Poisson { k } => k,
        }
    }

    /// The spectral multiplier at time `t` and eigenvalue `lambda`.
    pub fn multiplier<T: Real>(&self, t: T, lambda: T) -> T {
        match *self {
            Family::Heat { m } => {
                let s = t * t * lambda;
                powi(s, m) * (-s).exp()
            }
            Family::Poisson { k } => {
                let u = t * lambda.sqrt();
                powi(u, 2 * k) * (-u).exp()
            }
        }
    }

    /// `t d/dt` of [`Family::multiplier`].
    pub fn time_multiplier<T: Real>(&self, t: T, lambda: T) -> T {
        match *self {
            Family::Heat { m } => {
                let s = t * t * lambda;
                let two = T::of(2.0);
                (two * T::of(m as f64) * powi(s, m) - two * powi(s, m + 1)) * (-s).exp()
            }
            Family::Poisson { k } => {
                let u = t * lambda.sqrt();
                (T::of(2.0 * k as f64) * powi(u, 2 * k) - powi(u, 2 * k + 1)) * (-u).exp()
            }
        }
    }
}

/// `t grad_{y,t}` of a semigroup output: `spatial[d][x]` and `time[x]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField<T> {
    pub spatial: Vec<Vec<T>>,
    pub time: Vec<T>,
}

impl<T: Real> GradientField<T> {
    /// `|t grad_y|^2` at `x`.
    pub fn spatial_norm2(&self, x: usize) -> T {
        self.spatial.iter().map(|d| d[x] * d[x]).sum()
    }

    /// `|t grad_{y,t}|^2` at `x`.
    pub fn full_norm2(&self, x: usize) -> T {
        self.spatial_norm2(x) + self.time[x] * self.time[x]
    }
}

/// `f` expanded in the eigenbasis once, so the families can be evaluated at
/// many times cheaply.
#[derive(Clone, Debug)]
pub struct Expansion<'a, T> {
    op: &'a SpectralOperator<T>,
    coefficients: Vec<T>,
}

impl<'a, T: Real> Expansion<'a, T> {
    pub fn new(op: &'a SpectralOperator<T>, f: &[T]) -> Result<Self> {
        Ok(Self {
            op,
            coefficients: op.coefficients(f)?,
        })
    }

    pub fn operator(&self) -> &'a SpectralOperator<T> {
        self.op
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    /// `sum_k m(lambda_k) c_k phi_k`.
    pub fn map(&self, m: impl Fn(T) -> T) -> Vec<T> {
        let scaled: Vec<T> = self
            .coefficients
            .iter()
            .zip(self.op.eigenvalues())
            .map(|(c, l)| *c * m(*l))
            .collect();
        self.op.synthesize(&scaled)
    }

    pub fn value(&self, family: Family, t: T) -> Vec<T> {
        self.map(|l| family.multiplier(t, l))
    }

    pub fn time_derivative(&self, family: Family, t: T) -> Vec<T> {
        self.map(|l| family.time_multiplier(t, l))
    }

    /// Spatial part from centered differences of the value, time part from the
    /// analytic `t d/dt` multiplier.
    pub fn gradient(&self, family: Family, t: T) -> GradientField<T> {
        let value = self.value(family, t);
        let spatial = self
            .op
            .grid()
            .centered_gradient(&value)
            .into_iter()
            .map(|d| d.into_iter().map(|v| v * t).collect())
            .collect();
        GradientField {
            spatial,
            time: self.time_derivative(family, t),
        }
    }

    /// Values at every ladder node, computed in parallel.
    pub fn values_on(&self, family: Family, times: &[T]) -> Vec<Vec<T>> {
        times.par_iter().map(|&t| self.value(family, t)).collect()
    }

    pub fn gradients_on(&self, family: Family, times: &[T]) -> Vec<GradientField<T>> {
        times
            .par_iter()
            .map(|&t| self.gradient(family, t))
            .collect()
    }
}

/// `(t^2 L)^m e^{-t^2 L} f`.
pub fn heat_eval<T: Real>(op: &SpectralOperator<T>, m: u32, t: T, f: &[T]) -> Result<Vec<T>> {
    check_time(t)?;
    Ok(Expansion::new(op, f)?.value(Family::heat(m)?, t))
}

/// `t grad_{y,t} (t^2 L)^m e^{-t^2 L} f`.
pub fn grad_eval<T: Real>(
    op: &SpectralOperator<T>,
    m: u32,
    t: T,
    f: &[T],
) -> Result<GradientField<T>> {
    check_time(t)?;
    Ok(Expansion::new(op, f)?.gradient(Family::heat(m)?, t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoissonMethod {
    Spectral,
    Subordination,
}

/// `(t sqrt L)^{2K} e^{-t sqrt L} f`, either directly on the spectrum or with
/// `e^{-t sqrt L}` obtained from the heat semigroup by subordination and
/// `(t sqrt L)^{2K} = (t^2 L)^K` applied afterwards.
pub fn poisson_eval<T: Real>(
    op: &SpectralOperator<T>,
    k: u32,
    t: T,
    f: &[T],
    method: PoissonMethod,
) -> Result<Vec<T>> {
    check_time(t)?;
    let family = Family::poisson(k)?;
    let ex = Expansion::new(op, f)?;
    match method {
        PoissonMethod::Spectral => Ok(ex.value(family, t)),
        PoissonMethod::Subordination => {
            let c = subordinated_poisson(op.eigenvalues(), ex.coefficients(), t)?;
            let scaled: Vec<T> = c
                .iter()
                .zip(op.eigenvalues())
                .map(|(c, l)| *c * powi(t * t * *l, k))
                .collect();
            Ok(op.synthesize(&scaled))
        }
    }
}

/// `t grad_{y,t} (t sqrt L)^{2K} e^{-t sqrt L} f`.
pub fn poisson_grad_eval<T: Real>(
    op: &SpectralOperator<T>,
    k: u32,
    t: T,
    f: &[T],
) -> Result<GradientField<T>> {
    check_time(t)?;
    Ok(Expansion::new(op, f)?.gradient(Family::poisson(k)?, t))
}

fn check_time<T: Real>(t: T) -> Result<()> {
    if !(t >= T::zero() && t.is_finite()) {
        return invalid(format!("time must be finite and nonnegative, got {t}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::WeightModel;
    use crate::operator::CoefficientField;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn op(dim: usize, n: usize, alpha: f64) -> SpectralOperator<f64> {
        let g = Grid::new(dim, n).unwrap();
        let w = WeightModel::power(&g, alpha).unwrap();
        SpectralOperator::assemble(&g, &CoefficientField::rotating(&g, 0.5).unwrap(), &w).unwrap()
    }

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn ladder_nodes() {
        let g = Grid::new(1, 16).unwrap();
        let l = TimeLadder::<f64>::default_for(&g);
        let nodes = l.nodes();
        assert_eq!(nodes.len(), 6 * 16 + 1);
        assert!((nodes[0] - 1.0 / 64.0).abs() < 1e-15);
        assert!((nodes.last().unwrap() - 1.0).abs() < 1e-12);
        assert!((l.weight() - 2f64.ln() / 16.0).abs() < 1e-15);
        assert!(TimeLadder::new(1.0, 0.5, 2.0).is_err());
        assert!(TimeLadder::new(0.1, 0.5, 1.0).is_err());
    }

    #[test]
    fn heat_is_strongly_continuous_and_kills_constants() {
        let o = op(1, 16, 1.0);
        let f = random(16, 2);
        let near = heat_eval(&o, 0, 1e-6, &f).unwrap();
        assert!(max_diff(&near, &f) <= 1e-8);
        assert_eq!(heat_eval(&o, 0, 0.0, &f).unwrap().len(), 16);
        assert!(max_diff(&heat_eval(&o, 0, 0.0, &f).unwrap(), &f) < 1e-12);
        for m in 1..=4 {
            let z = heat_eval(&o, m, 0.3, &[2.0; 16]).unwrap();
            assert!(z.iter().all(|v| v.abs() < 1e-12));
            assert!(heat_eval(&o, m, 0.0, &f)
                .unwrap()
                .iter()
                .all(|v| v.abs() < 1e-12));
        }
        assert!(heat_eval(&o, 5, 0.3, &f).is_err());
        assert!(heat_eval(&o, 0, -0.3, &f).is_err());
    }

    #[test]
    fn contraction_and_commutation() {
        let o = op(2, 8, -0.5);
        let f = random(64, 4);
        let nf = o.norm(&f);
        let ex = Expansion::new(&o, &f).unwrap();
        for t in [0.01, 0.05, 0.2, 1.0, 3.0] {
            let h0 = ex.value(Family::Heat { m: 0 }, t);
            assert!(o.norm(&h0) <= nf * (1.0 + 1e-12));
            let p0 = ex.value(Family::Poisson { k: 0 }, t);
            assert!(o.norm(&p0) <= nf * (1.0 + 1e-12));
            // lifting amplifies rounding in the damped modes by (t^2 lambda_max)^m
            if t > 0.2 {
                continue;
            }
            for m in 1..=3u32 {
                let direct = ex.value(Family::Heat { m }, t);
                let lifted = o
                    .apply_spectral(&h0, |l| (t * t * l).powi(m as i32))
                    .unwrap();
                assert!(
                    o.norm(
                        &direct
                            .iter()
                            .zip(&lifted)
                            .map(|(a, b)| a - b)
                            .collect::<Vec<_>>()
                    ) <= 1e-10 * nf
                );
            }
        }
    }

    #[test]
    fn time_part_of_heat_is_minus_two_t2l() {
        let o = op(1, 16, 0.5);
        let f = random(16, 5);
        let ex = Expansion::new(&o, &f).unwrap();
        let t = 0.07;
        let time = ex.time_derivative(Family::Heat { m: 0 }, t);
        let twice = ex.map(|l| -2.0 * t * t * l * (-t * t * l).exp());
        assert_eq!(time, twice);
    }

    #[test]
    fn time_multipliers_match_finite_differences() {
        for family in [
            Family::Heat { m: 0 },
            Family::Heat { m: 2 },
            Family::Poisson { k: 0 },
            Family::Poisson { k: 3 },
        ] {
            for lambda in [0.5f64, 3.0, 40.0] {
                for t in [0.05f64, 0.3, 1.2] {
                    let h = 1e-5;
                    let fd = t
                        * (family.multiplier(t + h, lambda) - family.multiplier(t - h, lambda))
                        / (2.0 * h);
                    let exact = family.time_multiplier(t, lambda);
                    assert!(
                        (fd - exact).abs() <= 1e-6 * exact.abs().max(1e-3),
                        "{family:?} {lambda} {t}"
                    );
                }
            }
        }
    }

    #[test]
    fn spatial_gradient_of_flat_modes() {
        let n = 16;
        let g = Grid::new(1, n).unwrap();
        let o = SpectralOperator::assemble(
            &g,
            &CoefficientField::<f64>::identity(&g),
            &WeightModel::uniform(&g),
        )
        .unwrap();
        let h = 1.0 / n as f64;
        let t = 0.01;
        for idx in 1..n {
            let phi = o.eigenvector(idx).to_vec();
            let lam = o.eigenvalues()[idx];
            // frequency from the closed-form eigenvalue
            let k = ((lam * h * h / 4.0).sqrt().asin() * n as f64 / std::f64::consts::PI).round();
            let x: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
            let w = 2.0 * std::f64::consts::PI * k;
            let a = 2.0
                * h
                * x.iter()
                    .zip(&phi)
                    .map(|(x, p)| p * (w * x).cos())
                    .sum::<f64>();
            let b = 2.0
                * h
                * x.iter()
                    .zip(&phi)
                    .map(|(x, p)| p * (w * x).sin())
                    .sum::<f64>();
            let (a, b) = if 2 * k as usize == n {
                (a / 2.0, 0.0)
            } else {
                (a, b)
            };
            let slope = (w * h).sin() / h;
            let expected: Vec<f64> = x
                .iter()
                .map(|x| {
                    t * slope * (-a * (w * x).sin() + b * (w * x).cos()) * (-t * t * lam).exp()
                })
                .collect();
            let grad = grad_eval(&o, 0, t, &phi).unwrap();
            assert!(max_diff(&grad.spatial[0], &expected) < 1e-8, "mode {idx}");
        }
    }

    #[test]
    fn gradients_of_constants_vanish() {
        let o = op(2, 8, 1.0);
        for m in 0..3 {
            let gh = grad_eval(&o, m, 0.2, &[3.0; 64]).unwrap();
            let gp = poisson_grad_eval(&o, m, 0.2, &[3.0; 64]).unwrap();
            for x in 0..64 {
                assert!(gh.full_norm2(x) < 1e-20);
                assert!(gp.full_norm2(x) < 1e-20);
            }
        }
    }

    #[test]
    fn poisson_methods_agree_and_satisfy_the_semigroup_law() {
        let o = op(1, 16, 1.0);
        let f = random(16, 8);
        let nf = o.norm(&f);
        for k in 0..=2 {
            for t in [0.01, 0.1, 1.0] {
                let a = poisson_eval(&o, k, t, &f, PoissonMethod::Spectral).unwrap();
                let b = poisson_eval(&o, k, t, &f, PoissonMethod::Subordination).unwrap();
                let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
                assert!(o.norm(&d) <= 1e-8 * nf.max(1.0), "k {k} t {t}");
            }
        }
        let (s, t) = (0.03, 0.11);
        let inner = poisson_eval(&o, 0, s, &f, PoissonMethod::Spectral).unwrap();
        let twice = poisson_eval(&o, 0, t, &inner, PoissonMethod::Spectral).unwrap();
        let once = poisson_eval(&o, 0, s + t, &f, PoissonMethod::Spectral).unwrap();
        assert!(max_diff(&twice, &once) < 1e-8);
    }
}
