//! Experimental path for complex, possibly non-symmetric coefficients. There
//! is no spectral calculus here: the heat semigroup is a dense matrix exponential.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::stiffness;
use crate::error::{check_len, invalid, Result};
use crate::mesh::{Grid, WeightModel};
use crate::real::Real;

/// `L_w = W^{-1} S` assembled from complex `A(x)`, with the same quadrant form as
/// the real operator.
#[derive(Clone, Debug)]
pub struct ComplexOperator {
    grid: Grid,
    matrix: DMatrix<Complex64>,
}

impl ComplexOperator {
    /// Requires `Re (A xi . conj xi) >= lambda |xi|^2` with `lambda > 0`, checked
    /// on a handful of real directions per cell.
    pub fn assemble<T: Real>(
        grid: &Grid,
        a: &[[[Complex64; 2]; 2]],
        w: &WeightModel<T>,
    ) -> Result<Self> {
        let n = grid.num_cells();
        check_len(n, a.len())?;
        check_len(n, w.len())?;
        let dim = grid.dim();
        for (x, m) in a.iter().enumerate() {
            for k in 0..8 {
                let t = std::f64::consts::PI * k as f64 / 8.0;
                let xi = if dim == 1 {
                    [1.0, 0.0]
                } else {
                    [t.cos(), t.sin()]
                };
                let mut q = 0.0;
                for d in 0..dim {
                    for e in 0..dim {
                        q += (m[d][e] * xi[e] * xi[d]).re;
                    }
                }
                if !(q > 0.0) {
                    return invalid(format!("coefficient at cell {x} is not elliptic"));
                }
            }
        }
        let h = grid.spacing::<f64>();
        let factor = Complex64::new(
            grid.cell_volume::<f64>() / ((1u32 << dim) as f64 * h * h),
            0.0,
        );
        let s = stiffness(grid, |x, d, e| a[x][d][e] * w.value(x).as_f64(), factor);
        let masses = w.masses(grid);
        let matrix = DMatrix::from_fn(n, n, |i, j| s[i * n + j] / masses[i].as_f64());
        Ok(Self {
            grid: grid.clone(),
            matrix,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn apply(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.matrix.nrows(), f.len())?;
        let v = &self.matrix * nalgebra::DVector::from_column_slice(f);
        Ok(v.iter().copied().collect())
    }

    /// `e^{-tL} f` via the dense matrix exponential.
    pub fn heat(&self, t: f64, f: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.matrix.nrows(), f.len())?;
        let e = (&self.matrix * Complex64::new(-t, 0.0)).exp();
        let v = e * nalgebra::DVector::from_column_slice(f);
        Ok(v.iter().copied().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{CoefficientField, SpectralOperator};

    #[test]
    fn real_symmetric_case_matches_the_spectral_operator() {
        let g = Grid::new(1, 8).unwrap();
        let w = WeightModel::power(&g, 0.5f64).unwrap();
        let real = CoefficientField::rotating(&g, 0.4).unwrap();
        let op = SpectralOperator::assemble(&g, &real, &w).unwrap();
        let a: Vec<_> = real
            .matrices()
            .iter()
            .map(|m| m.map(|r| r.map(|v| Complex64::new(v, 0.0))))
            .collect();
        let c = ComplexOperator::assemble(&g, &a, &w).unwrap();
        let f: Vec<f64> = (0..8).map(|i| (i as f64).cos()).collect();
        let fc: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let t = 1e-3;
        let direct = c.heat(t, &fc).unwrap();
        let spectral = op.apply_spectral(&f, |l| (-t * l).exp()).unwrap();
        for (a, b) in direct.iter().zip(&spectral) {
            assert!((a.re - b).abs() < 1e-10 && a.im.abs() < 1e-10);
        }
    }

    #[test]
    fn complex_coefficients_conserve_mass_and_annihilate_constants() {
        let g = Grid::new(2, 4).unwrap();
        let w = WeightModel::<f64>::uniform(&g);
        let m = [
            [Complex64::new(1.0, 0.3), Complex64::new(0.2, -0.1)],
            [Complex64::new(-0.2, 0.4), Complex64::new(1.5, 0.0)],
        ];
        let c = ComplexOperator::assemble(&g, &vec![m; 16], &w).unwrap();
        let lf = c.apply(&[Complex64::new(1.0, 0.0); 16]).unwrap();
        assert!(lf.iter().all(|v| v.norm() < 1e-10));
        let bad = [[Complex64::new(-1.0, 0.0); 2]; 2];
        assert!(ComplexOperator::assemble(&g, &vec![bad; 16], &w).is_err());
    }
}
