use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CoefficientField, SpectralOperator};
use crate::error::{invalid, Error, Result};
use crate::mesh::{Grid, WeightModel};
use crate::real::Real;

/// JSON description of an operator instance:
///
/// ```json
/// {"dim": 2, "N": 16,
///  "weight": {"kind": "power", "alpha": 1.0},
///  "A": {"kind": "rotating", "anisotropy": 0.5}}
/// ```
///
/// File-backed weights are one value per line (cells in row-major order); file
/// matrices have one row per cell with either 1 or 4 comma-separated entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub dim: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default)]
    pub weight: WeightSpec,
    #[serde(rename = "A", default)]
    pub a: CoefficientSpec,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    #[default]
    Uniform,
    Power {
        alpha: f64,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    #[default]
    Identity,
    Diag {
        values: Vec<f64>,
    },
    File {
        path: PathBuf,
    },
    Rotating {
        anisotropy: f64,
    },
}

fn resolve(base: Option<&Path>, path: &Path) -> PathBuf {
    match base {
        Some(b) if path.is_relative() => b.join(path),
        _ => path.to_path_buf(),
    }
}

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = vec![];
    for record in reader.records() {
        let record = record?;
        let row = record
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>().map_err(|e| {
                    Error::InvalidArgument(format!("{}: bad number {s:?}: {e}", path.display()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if !row.is_empty() {
            rows.push(row);
        }
    }
    Ok(rows)
}

impl OperatorSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n)
    }

    /// Relative file paths are resolved against `base`.
    pub fn weight<T: Real>(&self, grid: &Grid, base: Option<&Path>) -> Result<WeightModel<T>> {
        match &self.weight {
            WeightSpec::Uniform => Ok(WeightModel::uniform(grid)),
            WeightSpec::Power { alpha } => WeightModel::power(grid, T::of(*alpha)),
            WeightSpec::File { path } => {
                let rows = read_rows(&resolve(base, path))?;
                let values = rows.into_iter().flatten().map(T::of).collect();
                WeightModel::tabulated(grid, values)
            }
        }
    }

    pub fn coefficients<T: Real>(
        &self,
        grid: &Grid,
        base: Option<&Path>,
    ) -> Result<CoefficientField<T>> {
        match &self.a {
            CoefficientSpec::Identity => Ok(CoefficientField::identity(grid)),
            CoefficientSpec::Diag { values } => match values.as_slice() {
                [d] => CoefficientField::diagonal(grid, [T::of(*d), T::of(*d)]),
                [d0, d1] => CoefficientField::diagonal(grid, [T::of(*d0), T::of(*d1)]),
                _ => invalid(format!("diag expects 1 or 2 values, got {}", values.len())),
            },
            CoefficientSpec::Rotating { anisotropy } => {
                CoefficientField::rotating(grid, T::of(*anisotropy))
            }
            CoefficientSpec::File { path } => {
                let path = resolve(base, path);
                let rows = read_rows(&path)?;
                let matrices = rows
                    .iter()
                    .map(|r| match r.as_slice() {
                        [a] => Ok([[T::of(*a), T::zero()], [T::zero(), T::of(*a)]]),
                        [a, b, c, d] => Ok([[T::of(*a), T::of(*b)], [T::of(*c), T::of(*d)]]),
                        _ => invalid(format!(
                            "{}: rows need 1 or 4 entries, got {}",
                            path.display(),
                            r.len()
                        )),
                    })
                    .collect::<Result<Vec<_>>>()?;
                CoefficientField::from_matrices(grid, matrices)
            }
        }
    }

    pub fn build<T: Real>(&self, base: Option<&Path>) -> Result<SpectralOperator<T>> {
        let grid = self.grid()?;
        let w = self.weight(&grid, base)?;
        let a = self.coefficients(&grid, base)?;
        SpectralOperator::assemble(&grid, &a, &w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_builds() {
        let s = OperatorSpec::from_json(
            r#"{"dim":1,"N":8,"weight":{"kind":"power","alpha":0.5},"A":{"kind":"diag","values":[2.0]}}"#,
        )
        .unwrap();
        assert_eq!(s.weight, WeightSpec::Power { alpha: 0.5 });
        let op = s.build::<f64>(None).unwrap();
        assert_eq!(op.len(), 8);
        let d = OperatorSpec::from_json(r#"{"dim":2,"N":4}"#).unwrap();
        assert_eq!(d.a, CoefficientSpec::Identity);
        assert_eq!(d.weight, WeightSpec::Uniform);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        assert!(OperatorSpec::from_json(r#"{"dim":1,"N":8,"extra":1}"#).is_err());
        assert!(OperatorSpec::from_json(r#"{"dim":1,"N":8,"weight":{"kind":"power"}}"#).is_err());
        let s = OperatorSpec::from_json(r#"{"dim":3,"N":8}"#).unwrap();
        assert!(s.build::<f64>(None).is_err());
        let s = OperatorSpec::from_json(r#"{"dim":1,"N":8,"A":{"kind":"diag","values":[1,2,3]}}"#)
            .unwrap();
        assert!(s.build::<f64>(None).is_err());
    }

    #[test]
    fn reads_files_relative_to_base() {
        let dir = std::env::temp_dir().join(format!("tentcalc-spec-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("w.csv"), "# weight\n1\n2\n3\n4\n").unwrap();
        std::fs::write(dir.join("a.csv"), "1\n1.5\n2\n1\n").unwrap();
        let s = OperatorSpec::from_json(
            r#"{"dim":1,"N":4,"weight":{"kind":"file","path":"w.csv"},"A":{"kind":"file","path":"a.csv"}}"#,
        )
        .unwrap();
        let g = s.grid().unwrap();
        let w = s.weight::<f64>(&g, Some(&dir)).unwrap();
        assert_eq!(w.values(), &[1.0, 2.0, 3.0, 4.0]);
        let a = s.coefficients::<f64>(&g, Some(&dir)).unwrap();
        assert_eq!(a.matrix(1)[0][0], 1.5);
        std::fs::write(dir.join("w.csv"), "1\n-2\n3\n4\n").unwrap();
        assert!(s.weight::<f64>(&g, Some(&dir)).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
