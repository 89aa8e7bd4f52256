use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};
use crate::mesh::Grid;
use crate::real::Real;

/// Per-cell real symmetric coefficient matrix `A(x)` with ellipticity bounds
/// `lambda |xi|^2 <= A xi . xi` and `|A xi . zeta| <= Lambda |xi| |zeta|`.
///
/// Matrices are stored as `2 x 2` arrays; in one dimension only `[0][0]` is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField<T> {
    dim: usize,
    matrices: Vec<[[T; 2]; 2]>,
    lambda: T,
    big_lambda: T,
}

impl<T: Real> CoefficientField<T> {
    pub fn identity(grid: &Grid) -> Self {
        Self::diagonal(grid, [T::one(), T::one()]).expect("identity is elliptic")
    }

    /// Constant diagonal matrix `diag(d0, d1)`.
    pub fn diagonal(grid: &Grid, diag: [T; 2]) -> Result<Self> {
        let m = [[diag[0], T::zero()], [T::zero(), diag[1]]];
        Self::from_matrices(grid, vec![m; grid.num_cells()])
    }

    /// `A(x) = f(center of x)`.
    pub fn from_fn(grid: &Grid, f: impl Fn([T; 2]) -> [[T; 2]; 2]) -> Result<Self> {
        let matrices = (0..grid.num_cells()).map(|c| f(grid.center(c))).collect();
        Self::from_matrices(grid, matrices)
    }

    /// Smoothly rotating anisotropic field with eigenvalues `1` and
    /// `1 + anisotropy`: `R(theta) diag(1, 1 + a) R(theta)^T`,
    /// `theta = 2 pi (x0 + x1)`. In one dimension `A = 1 + a sin^2(2 pi x)`.
    pub fn rotating(grid: &Grid, anisotropy: T) -> Result<Self> {
        if !(anisotropy >= T::zero()) {
            return invalid(format!("anisotropy must be nonnegative, got {anisotropy}"));
        }
        let two_pi = T::PI() + T::PI();
        let dim = grid.dim();
        Self::from_fn(grid, |x| {
            if dim == 1 {
                let s = (two_pi * x[0]).sin();
                [
                    [T::one() + anisotropy * s * s, T::zero()],
                    [T::zero(), T::zero()],
                ]
            } else {
                let theta = two_pi * (x[0] + x[1]);
                let (s, c) = theta.sin_cos();
                let big = T::one() + anisotropy;
                let off = (big - T::one()) * s * c;
                [[c * c + big * s * s, -off], [-off, s * s + big * c * c]]
            }
        })
    }

    pub fn from_matrices(grid: &Grid, matrices: Vec<[[T; 2]; 2]>) -> Result<Self> {
        check_len(grid.num_cells(), matrices.len())?;
        let dim = grid.dim();
        let mut lambda = T::infinity();
        let mut big_lambda = T::zero();
        for (cell, m) in matrices.iter().enumerate() {
            if m.iter()
                .flatten()
                .take(if dim == 1 { 1 } else { 4 })
                .any(|v| !v.is_finite())
            {
                return invalid(format!("non-finite coefficient at cell {cell}"));
            }
            let (lo, hi) = if dim == 1 {
                (m[0][0], m[0][0].abs())
            } else {
                let scale = m[0][0].abs().max(m[1][1].abs()).max(T::one());
                if (m[0][1] - m[1][0]).abs() > T::of(1e-12) * scale {
                    return invalid(format!(
                        "coefficient matrix at cell {cell} is not symmetric"
                    ));
                }
                let (a, b, d) = (m[0][0], m[0][1], m[1][1]);
                let mid = (a + d) * T::of(0.5);
                let rad = ((a - d) * (a - d) * T::of(0.25) + b * b).sqrt();
                (mid - rad, (mid + rad).abs().max((mid - rad).abs()))
            };
            lambda = lambda.min(lo);
            big_lambda = big_lambda.max(hi);
        }
        if !(lambda > T::zero()) {
            return invalid(format!(
                "coefficients are not uniformly elliptic (lambda = {lambda})"
            ));
        }
        let field = Self {
            dim,
            matrices,
            lambda,
            big_lambda,
        };
        field.check_samples()?;
        Ok(field)
    }

    /// Checks both ellipticity inequalities on a fan of unit vectors per cell.
    fn check_samples(&self) -> Result<()> {
        let dirs: Vec<[T; 2]> = if self.dim == 1 {
            vec![[T::one(), T::zero()]]
        } else {
            (0..8)
                .map(|k| {
                    let t = T::PI() * T::of(k as f64 / 8.0);
                    [t.cos(), t.sin()]
                })
                .collect()
        };
        let slack = T::of(1e-10);
        for (cell, m) in self.matrices.iter().enumerate() {
            for xi in &dirs {
                let a_xi = self.mul(m, xi);
                let quad = a_xi[0] * xi[0] + a_xi[1] * xi[1];
                if quad < self.lambda * (T::one() - slack) {
                    return invalid(format!("lower ellipticity bound fails at cell {cell}"));
                }
                for zeta in &dirs {
                    let pair = a_xi[0] * zeta[0] + a_xi[1] * zeta[1];
                    if pair.abs() > self.big_lambda * (T::one() + slack) {
                        return invalid(format!("upper ellipticity bound fails at cell {cell}"));
                    }
                }
            }
        }
        Ok(())
    }

    fn mul(&self, m: &[[T; 2]; 2], v: &[T; 2]) -> [T; 2] {
        if self.dim == 1 {
            [m[0][0] * v[0], T::zero()]
        } else {
            [
                m[0][0] * v[0] + m[0][1] * v[1],
                m[1][0] * v[0] + m[1][1] * v[1],
            ]
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self, cell: usize) -> &[[T; 2]; 2] {
        &self.matrices[cell]
    }

    pub fn matrices(&self) -> &[[[T; 2]; 2]] {
        &self.matrices
    }

    /// `(lambda, Lambda)`.
    pub fn ellipticity(&self) -> (T, T) {
        (self.lambda, self.big_lambda)
    }
}
