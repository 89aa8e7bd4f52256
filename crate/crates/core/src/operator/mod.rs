//! The discretized operator `L_w f = -w^{-1} div(w A grad f)` on the torus and
//! its `L^2(w)`-orthonormal eigendecomposition.
//!
//! The stiffness matrix comes from the quadrant energy form
//!
//! ```text
//! E(f, g) = h^n sum_x 2^{-n} sum_{q in {+,-}^n} (G_q f)(x)^T (w A)(x) (G_q g)(x)
//! ```
//!
//! where `G_q` takes the one-sided difference in direction `q_d` along axis `d`.
//! Its diagonal part is the finite-volume flux form with face coefficient equal
//! to the arithmetic mean of `w A` at the two adjacent centers; the full form is
//! symmetric, annihilates constants and satisfies `E(f, f) >= lambda ||grad_h f||^2`
//! pointwise in `x`. `L_w = W^{-1} S` with `W = diag(w h^n)`.

mod coefficients;
mod complex;
mod spec;

pub use coefficients::CoefficientField;
pub use complex::ComplexOperator;
pub use spec::{CoefficientSpec, OperatorSpec, WeightSpec};

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::NumAssign;
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::mesh::{Grid, WeightModel};
use crate::real::Real;

/// Eigenvalues below this are treated as an assembly failure.
pub const NEGATIVE_EIGENVALUE_LIMIT: f64 = -1e-8;

/// Dense stiffness matrix (row-major) of the quadrant energy form, with
/// `wa(x, d, e)` the `(d, e)` entry of `(w A)(x)` and `factor = h^n / (2^n h^2)`.
pub(crate) fn stiffness<S: Copy + NumAssign>(
    grid: &Grid,
    wa: impl Fn(usize, usize, usize) -> S,
    factor: S,
) -> Vec<S> {
    let n = grid.num_cells();
    let dim = grid.dim();
    let mut s = vec![S::zero(); n * n];
    for x in 0..n {
        for q in 0..(1usize << dim) {
            let step = |d: usize| if (q >> d) & 1 == 0 { 1 } else { -1 };
            for d in 0..dim {
                let yd = grid.neighbor(x, d, step(d));
                for e in 0..dim {
                    let ye = grid.neighbor(x, e, step(e));
                    let mut a = wa(x, d, e) * factor;
                    if step(d) != step(e) {
                        a = S::zero() - a;
                    }
                    // G_q f(x)_d = +-(f(yd) - f(x)) / h
                    for (i, si) in [(yd, true), (x, false)] {
                        for (j, sj) in [(ye, true), (x, false)] {
                            let slot = &mut s[i * n + j];
                            if si == sj {
                                *slot += a;
                            } else {
                                *slot -= a;
                            }
                        }
                    }
                }
            }
        }
    }
    s
}

/// Assembled `L_w` with eigenpairs `L_w phi_k = lambda_k phi_k`,
/// `<phi_j, phi_k>_w = delta_jk`, `lambda_0 = 0`, `phi_0` constant.
#[derive(Clone, Debug)]
pub struct SpectralOperator<T> {
    grid: Grid,
    weight: WeightModel<T>,
    coefficients: CoefficientField<T>,
    /// `w(x) h^n`.
    masses: Vec<T>,
    /// `L_w`, row-major.
    matrix: Vec<T>,
    eigenvalues: Vec<T>,
    /// `phi_k(x)` at `k * n + x`.
    eigenvectors: Vec<T>,
}

/// See [`SpectralOperator::assemble`].
pub fn assemble<T: Real>(
    grid: &Grid,
    a: &CoefficientField<T>,
    w: &WeightModel<T>,
) -> Result<SpectralOperator<T>> {
    SpectralOperator::assemble(grid, a, w)
}

impl<T: Real> SpectralOperator<T> {
    /// Builds the stiffness matrix and diagonalizes the symmetrized operator
    /// `W^{-1/2} S W^{-1/2}` densely (in `f64` whatever `T` is).
    pub fn assemble(grid: &Grid, a: &CoefficientField<T>, w: &WeightModel<T>) -> Result<Self> {
        let n = grid.num_cells();
        check_len(n, w.len())?;
        check_len(n, a.matrices().len())?;
        if a.dim() != grid.dim() {
            return Err(Error::Assembly(format!(
                "coefficient dimension {} does not match grid dimension {}",
                a.dim(),
                grid.dim()
            )));
        }
        let h = grid.spacing::<f64>();
        let factor = grid.cell_volume::<f64>() / ((1u32 << grid.dim()) as f64 * h * h);
        let s = stiffness(
            grid,
            |x, d, e| w.value(x).as_f64() * a.matrix(x)[d][e].as_f64(),
            factor,
        );
        let masses64: Vec<f64> = w.masses(grid).iter().map(|m| m.as_f64()).collect();
        let root: Vec<f64> = masses64.iter().map(|m| m.sqrt()).collect();

        let sym = DMatrix::from_fn(n, n, |i, j| {
            // average the two triangles so the input is symmetric to the last bit
            0.5 * (s[i * n + j] + s[j * n + i]) / (root[i] * root[j])
        });
        let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
            .ok_or_else(|| Error::Assembly("symmetric eigensolver did not converge".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

        if let Some(&k) = order.first() {
            let low = eig.eigenvalues[k];
            if low < NEGATIVE_EIGENVALUE_LIMIT {
                return Err(Error::Assembly(format!("negative eigenvalue {low:e}")));
            }
        }
        let total: f64 = masses64.iter().sum();
        let mut eigenvalues = Vec::with_capacity(n);
        let mut eigenvectors = Vec::with_capacity(n * n);
        for (rank, &k) in order.iter().enumerate() {
            if rank == 0 {
                eigenvalues.push(T::zero());
                eigenvectors.extend(std::iter::repeat_n(T::of(1.0 / total.sqrt()), n));
                continue;
            }
            eigenvalues.push(T::of(eig.eigenvalues[k].max(0.0)));
            let col = eig.eigenvectors.column(k);
            eigenvectors.extend((0..n).map(|i| T::of(col[i] / root[i])));
        }

        let matrix = (0..n * n)
            .map(|ij| T::of(s[ij] / masses64[ij / n]))
            .collect();
        let op = Self {
            grid: grid.clone(),
            weight: w.clone(),
            coefficients: a.clone(),
            masses: w.masses(grid),
            matrix,
            eigenvalues,
            eigenvectors,
        };
        op.probe_orthonormality()?;
        Ok(op)
    }

    /// Cheap check that the eigenbasis reproduces a fixed probe vector.
    fn probe_orthonormality(&self) -> Result<()> {
        let f: Vec<T> = (0..self.len())
            .map(|i| T::of((1.3 * i as f64 + 0.1).sin()))
            .collect();
        let back = self.synthesize(&self.coefficients(&f)?);
        let err = self.norm(
            &f.iter()
                .zip(&back)
                .map(|(a, b)| *a - *b)
                .collect::<Vec<_>>(),
        );
        let tol = T::of(1e-10).max(T::epsilon() * T::of(1e3)) * self.norm(&f);
        if !(err <= tol) {
            return Err(Error::Assembly(format!(
                "w-orthonormalization failed: reconstruction error {err}"
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn weight(&self) -> &WeightModel<T> {
        &self.weight
    }

    pub fn coefficient_field(&self) -> &CoefficientField<T> {
        &self.coefficients
    }

    /// Number of cells (and eigenpairs).
    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// `w(x) h^n` per cell.
    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    /// `w(T^n)`.
    pub fn total_mass(&self) -> T {
        self.masses.iter().copied().sum()
    }

    /// `L_w` as a dense row-major matrix.
    pub fn matrix(&self) -> &[T] {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, k: usize) -> &[T] {
        let n = self.len();
        &self.eigenvectors[k * n..(k + 1) * n]
    }

    /// `<f, g>_{L^2(w)}`.
    pub fn inner(&self, f: &[T], g: &[T]) -> T {
        f.iter()
            .zip(g)
            .zip(&self.masses)
            .map(|((a, b), m)| *a * *b * *m)
            .sum()
    }

    pub fn norm(&self, f: &[T]) -> T {
        self.inner(f, f).sqrt()
    }

    /// `c_k = <f, phi_k>_w`.
    pub fn coefficients(&self, f: &[T]) -> Result<Vec<T>> {
        check_len(self.len(), f.len())?;
        let weighted: Vec<T> = f.iter().zip(&self.masses).map(|(a, m)| *a * *m).collect();
        Ok((0..self.len())
            .into_par_iter()
            .map(|k| {
                self.eigenvector(k)
                    .iter()
                    .zip(&weighted)
                    .map(|(p, g)| *p * *g)
                    .sum()
            })
            .collect())
    }

    /// `sum_k c_k phi_k`.
    pub fn synthesize(&self, c: &[T]) -> Vec<T> {
        let n = self.len();
        let mut out = vec![T::zero(); n];
        for (k, &ck) in c.iter().enumerate() {
            if ck == T::zero() {
                continue;
            }
            for (o, p) in out.iter_mut().zip(self.eigenvector(k)) {
                *o += ck * *p;
            }
        }
        out
    }

    /// `sum_k m(lambda_k) <f, phi_k>_w phi_k`.
    pub fn apply_spectral(&self, f: &[T], m: impl Fn(T) -> T) -> Result<Vec<T>> {
        let c = self.coefficients(f)?;
        let scaled: Vec<T> = c
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, l)| *c * m(*l))
            .collect();
        Ok(self.synthesize(&scaled))
    }

    /// Direct product `L_w f`.
    pub fn apply(&self, f: &[T]) -> Result<Vec<T>> {
        let n = self.len();
        check_len(n, f.len())?;
        Ok(self
            .matrix
            .par_chunks(n)
            .map(|row| row.iter().zip(f).map(|(a, b)| *a * *b).sum())
            .collect())
    }

    /// `||grad_h f||^2_{L^2(w)} = h^n sum_x w(x) 1/2 sum_d [(D+_d f)^2 + (D-_d f)^2]`.
    pub fn gradient_energy(&self, f: &[T]) -> T {
        let g = &self.grid;
        let inv_h = T::of_usize(g.cells_per_side());
        let mut acc = T::zero();
        for x in 0..self.len() {
            let mut local = T::zero();
            for d in 0..g.dim() {
                let fwd = (f[g.neighbor(x, d, 1)] - f[x]) * inv_h;
                let bwd = (f[x] - f[g.neighbor(x, d, -1)]) * inv_h;
                local += (fwd * fwd + bwd * bwd) * T::of(0.5);
            }
            acc += local * self.masses[x];
        }
        acc
    }

    /// `max_{j,k} |<phi_j, phi_k>_w - delta_jk|` (cubic cost).
    pub fn orthonormality_residual(&self) -> T {
        let n = self.len();
        (0..n)
            .into_par_iter()
            .map(|j| {
                let pj = self.eigenvector(j);
                (0..n)
                    .map(|k| {
                        let ip = self.inner(pj, self.eigenvector(k));
                        let target = if j == k { T::one() } else { T::zero() };
                        (ip - target).abs()
                    })
                    .fold(T::zero(), T::max)
            })
            .reduce(T::zero, T::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn flat_one_dimensional_spectrum_is_the_discrete_laplacian() {
        let n = 16;
        let g = Grid::new(1, n).unwrap();
        let op = assemble(
            &g,
            &CoefficientField::identity(&g),
            &WeightModel::<f64>::uniform(&g),
        )
        .unwrap();
        let h = 1.0 / n as f64;
        let mut expected: Vec<f64> = (0..n)
            .map(|k| 4.0 / (h * h) * (std::f64::consts::PI * k as f64 / n as f64).sin().powi(2))
            .collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in op.eigenvalues().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b), "{a} {b}");
        }
    }

    #[test]
    fn constants_are_annihilated_exactly() {
        let g = Grid::new(2, 8).unwrap();
        let w = WeightModel::power(&g, 1.0f64).unwrap();
        let a = CoefficientField::rotating(&g, 0.7).unwrap();
        let op = assemble(&g, &a, &w).unwrap();
        let lf = op.apply(&vec![2.5; 64]).unwrap();
        assert!(
            lf.iter().all(|v| v.abs() < 1e-9),
            "{:?}",
            lf.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        );
        assert_eq!(op.eigenvalues()[0], 0.0);
        let c = 1.0 / op.total_mass().sqrt();
        assert!(op.eigenvector(0).iter().all(|&p| p == c));
    }

    #[test]
    fn eigenbasis_is_w_orthonormal() {
        let g = Grid::new(1, 16).unwrap();
        let w = WeightModel::power(&g, 1.0f64).unwrap();
        let op = assemble(&g, &CoefficientField::identity(&g), &w).unwrap();
        assert!(op.orthonormality_residual() <= 1e-10);
        let g2 = Grid::new(2, 8).unwrap();
        let w2 = WeightModel::power(&g2, -1.0f64).unwrap();
        let op2 = assemble(&g2, &CoefficientField::rotating(&g2, 1.0).unwrap(), &w2).unwrap();
        assert!(op2.orthonormality_residual() <= 1e-10);
    }

    #[test]
    fn direct_and_spectral_products_agree() {
        let g = Grid::new(1, 16).unwrap();
        let w = WeightModel::power(&g, 0.5f64).unwrap();
        let op = assemble(&g, &CoefficientField::rotating(&g, 0.5).unwrap(), &w).unwrap();
        let f = random(16, 1);
        let direct = op.apply(&f).unwrap();
        let spectral = op.apply_spectral(&f, |l| l).unwrap();
        let scale = op.norm(&direct);
        let diff: Vec<f64> = direct.iter().zip(&spectral).map(|(a, b)| a - b).collect();
        assert!(op.norm(&diff) <= 1e-8 * scale);
        for k in [1, 5, 15] {
            let phi = op.eigenvector(k).to_vec();
            let lphi = op.apply(&phi).unwrap();
            let lam = op.eigenvalues()[k];
            for (a, b) in lphi.iter().zip(&phi) {
                assert!((a - lam * b).abs() <= 1e-8 * lam.max(1.0));
            }
        }
    }

    #[test]
    fn diagonal_part_matches_face_flux_form() {
        // for diagonal A the quadrant form reduces to face-averaged flux differences
        let g = Grid::new(2, 6).unwrap();
        let w = WeightModel::power(&g, 1.0f64).unwrap();
        let a = CoefficientField::from_fn(&g, |x| [[1.0 + x[0], 0.0], [0.0, 2.0 - x[1]]]).unwrap();
        let op = assemble(&g, &a, &w).unwrap();
        let f = random(36, 3);
        let h = 1.0 / 6.0;
        let lf = op.apply(&f).unwrap();
        for x in 0..36 {
            let mut acc = 0.0;
            for d in 0..2 {
                for step in [1, -1] {
                    let y = g.neighbor(x, d, step);
                    let face =
                        0.5 * (w.value(x) * a.matrix(x)[d][d] + w.value(y) * a.matrix(y)[d][d]);
                    acc += face * (f[y] - f[x]) / h;
                }
            }
            let flux = -acc / h / w.value(x);
            assert!(
                (flux - lf[x]).abs() < 1e-9 * (1.0 + flux.abs()),
                "{flux} {}",
                lf[x]
            );
        }
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let g = Grid::new(1, 8).unwrap();
        let g2 = Grid::new(2, 4).unwrap();
        let w = WeightModel::<f64>::uniform(&g);
        assert!(assemble(&g, &CoefficientField::identity(&g2), &w).is_err());
        let op = assemble(&g, &CoefficientField::identity(&g), &w).unwrap();
        assert!(op.apply(&[1.0; 3]).is_err());
        assert!(op.coefficients(&[1.0; 9]).is_err());
    }

    #[test]
    fn single_precision_instance() {
        let g = Grid::new(1, 8).unwrap();
        let op = assemble(
            &g,
            &CoefficientField::<f32>::identity(&g),
            &WeightModel::<f32>::uniform(&g),
        )
        .unwrap();
        let lam = op.eigenvalues()[7];
        assert!((lam - 256.0).abs() < 1e-2);
    }
}
