use serde::{Deserialize, Serialize};

use super::Grid;
use crate::error::{check_len, invalid, Result};
use crate::real::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum WeightKind<T> {
    /// `|x|^alpha` measured with the periodic distance to the origin.
    Power {
        alpha: T,
    },
    Tabulated,
}

/// A weight sampled at cell centers.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightModel<T> {
    kind: WeightKind<T>,
    values: Vec<T>,
}

impl<T: Real> WeightModel<T> {
    /// `w == 1`.
    pub fn uniform(grid: &Grid) -> Self {
        Self {
            kind: WeightKind::Power { alpha: T::zero() },
            values: vec![T::one(); grid.num_cells()],
        }
    }

    /// Power weight `d(x, 0)^alpha`; requires `alpha > -dim` so that the
    /// weight is locally integrable.
    pub fn power(grid: &Grid, alpha: T) -> Result<Self> {
        if !alpha.is_finite() || alpha <= -T::of_usize(grid.dim()) {
            return invalid(format!(
                "power weight exponent {alpha} must exceed -dim = -{}",
                grid.dim()
            ));
        }
        let values = (0..grid.num_cells())
            .map(|c| grid.distance_to_origin::<T>(c).powf(alpha))
            .collect();
        Ok(Self {
            kind: WeightKind::Power { alpha },
            values,
        })
    }

    /// `d(x, 0)^alpha` for any finite `alpha`, e.g. a relative weight `w^{-1}`
    /// that need not be locally integrable itself.
    pub(crate) fn power_unchecked(grid: &Grid, alpha: T) -> Self {
        let values = (0..grid.num_cells())
            .map(|c| grid.distance_to_origin::<T>(c).powf(alpha))
            .collect();
        Self {
            kind: WeightKind::Power { alpha },
            values,
        }
    }

    pub fn tabulated(grid: &Grid, values: Vec<T>) -> Result<Self> {
        check_len(grid.num_cells(), values.len())?;
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > T::zero())) {
            return invalid(format!(
                "weight samples must be positive and finite, found {bad}"
            ));
        }
        Ok(Self {
            kind: WeightKind::Tabulated,
            values,
        })
    }

    pub fn kind(&self) -> &WeightKind<T> {
        &self.kind
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, cell: usize) -> T {
        self.values[cell]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        self.values.iter().all(|&v| v == T::one())
    }

    /// `w^delta`, kept as a power weight when possible.
    pub fn pow(&self, delta: T) -> Self {
        let kind = match self.kind {
            WeightKind::Power { alpha } => WeightKind::Power {
                alpha: alpha * delta,
            },
            WeightKind::Tabulated => WeightKind::Tabulated,
        };
        Self {
            kind,
            values: self.values.iter().map(|v| v.powf(delta)).collect(),
        }
    }

    pub fn recip(&self) -> Self {
        self.pow(-T::one())
    }

    /// Pointwise product, e.g. the density of `v dw`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        let kind = match (&self.kind, &other.kind) {
            (WeightKind::Power { alpha: a }, WeightKind::Power { alpha: b }) => {
                WeightKind::Power { alpha: *a + *b }
            }
            _ => WeightKind::Tabulated,
        };
        Ok(Self {
            kind,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| *a * *b)
                .collect(),
        })
    }

    /// The weight as a density on `grid`: `w(cell) * h^dim`.
    pub fn masses(&self, grid: &Grid) -> Vec<T> {
        let vol = grid.cell_volume::<T>();
        self.values.iter().map(|&v| v * vol).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_weight_requires_local_integrability() {
        let g = Grid::new(1, 8).unwrap();
        assert!(WeightModel::power(&g, -1.0f64).is_err());
        assert!(WeightModel::power(&g, -0.8f64).is_ok());
        // positive exponents above dim are integrable
        assert!(WeightModel::power(&g, 1.5f64).is_ok());
    }

    #[test]
    fn tabulated_rejects_nonpositive() {
        let g = Grid::new(1, 4).unwrap();
        assert!(WeightModel::tabulated(&g, vec![1.0, 2.0, 0.0, 1.0]).is_err());
        assert!(WeightModel::tabulated(&g, vec![1.0, 2.0, f64::NAN, 1.0]).is_err());
        assert!(WeightModel::tabulated(&g, vec![1.0, 2.0]).is_err());
        assert!(WeightModel::tabulated(&g, vec![1.0, 2.0, 3.0, 1.0]).is_ok());
    }

    #[test]
    fn pow_tracks_exponent() {
        let g = Grid::new(2, 8).unwrap();
        let w = WeightModel::power(&g, 1.0f64).unwrap();
        let v = w.recip();
        assert_eq!(v.kind(), &WeightKind::Power { alpha: -1.0 });
        let one = w.product(&v).unwrap();
        assert!(one.values().iter().all(|x| (x - 1.0).abs() < 1e-14));
    }
}
