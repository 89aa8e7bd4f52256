//! Conical square functions of the heat and Poisson families and the vertical
//! square function, all with aperture 1 and the `dw dt / (t w(B(y,t)))` measure.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mesh::WeightModel;
use crate::operator::SpectralOperator;
use crate::real::Real;
use crate::semigroup::{Expansion, Family, TimeLadder, MAX_POWER};
use crate::tent::{HalfSpaceField, TentSpace};

/// Which integrand is fed to the cone functional.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SquareFunctionKind {
    /// `(t^2 L)^m e^{-t^2 L} f`, `m >= 1`.
    #[serde(rename = "s_h")]
    SHeat { m: u32 },
    /// `t grad_y (t^2 L)^m e^{-t^2 L} f`.
    #[serde(rename = "g_h")]
    GHeat { m: u32 },
    /// `t grad_{y,t} (t^2 L)^m e^{-t^2 L} f`.
    #[serde(rename = "gcal_h")]
    GcalHeat { m: u32 },
    /// `(t sqrt L)^{2K} e^{-t sqrt L} f`, `K >= 1`.
    #[serde(rename = "s_p")]
    SPoisson { k: u32 },
    #[serde(rename = "g_p")]
    GPoisson { k: u32 },
    #[serde(rename = "gcal_p")]
    GcalPoisson { k: u32 },
    /// Pointwise `(int |t grad_{y,t} e^{-t^2 L} f|^2 dt/t)^{1/2}`; not conical.
    #[serde(rename = "vertical_g_h")]
    VerticalHeat,
}

use SquareFunctionKind::*;

impl SquareFunctionKind {
    /// `S_H`, `G_H`, `Gcal_H`, `S_P`, `G_P`, `Gcal_P` or `g_H` with the power.
    pub fn from_name(name: &str, power: Option<u32>) -> Result<Self> {
        let key = name.to_ascii_lowercase().replace(['-', ' ', '_'], "");
        let kind = match key.as_str() {
            "sh" => SHeat {
                m: power.unwrap_or(1),
            },
            "gh" => GHeat {
                m: power.unwrap_or(0),
            },
            "gcalh" => GcalHeat {
                m: power.unwrap_or(0),
            },
            "sp" => SPoisson {
                k: power.unwrap_or(1),
            },
            "gp" => GPoisson {
                k: power.unwrap_or(0),
            },
            "gcalp" => GcalPoisson {
                k: power.unwrap_or(0),
            },
            "verticalgh" | "vertical" => VerticalHeat,
            _ => return invalid(format!("unknown square function {name:?}")),
        };
        kind.validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            SHeat { m: 0 } => return invalid("S_H requires m >= 1"),
            SPoisson { k: 0 } => return invalid("S_P requires K >= 1"),
            _ => {}
        }
        let ok = match self {
            SHeat { m } => m <= MAX_POWER,
            SPoisson { k } => k <= MAX_POWER,
            GHeat { m } | GcalHeat { m } => m <= MAX_POWER,
            GPoisson { k } | GcalPoisson { k } => k <= MAX_POWER,
            VerticalHeat => true,
        };
        if !ok {
            return invalid(format!("parameter out of range for {self}"));
        }
        Ok(self)
    }

    pub fn family(&self) -> Family {
        match *self {
            SHeat { m } | GHeat { m } | GcalHeat { m } => Family::Heat { m },
            SPoisson { k } | GPoisson { k } | GcalPoisson { k } => Family::Poisson { k },
            VerticalHeat => Family::Heat { m: 0 },
        }
    }

    pub fn is_gradient(&self) -> bool {
        !matches!(self, SHeat { .. } | SPoisson { .. })
    }

    /// Whether the time derivative is part of the integrand.
    pub fn uses_time(&self) -> bool {
        matches!(self, GcalHeat { .. } | GcalPoisson { .. } | VerticalHeat)
    }
}

impl fmt::Display for SquareFunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SHeat { m } => write!(f, "S_{{{m},H}}"),
            GHeat { m } => write!(f, "G_{{{m},H}}"),
            GcalHeat { m } => write!(f, "Gcal_{{{m},H}}"),
            SPoisson { k } => write!(f, "S_{{{k},P}}"),
            GPoisson { k } => write!(f, "G_{{{k},P}}"),
            GcalPoisson { k } => write!(f, "Gcal_{{{k},P}}"),
            VerticalHeat => write!(f, "g_H"),
        }
    }
}

impl FromStr for SquareFunctionKind {
    type Err = Error;

    /// `"S_H"`, `"S_2_H"`-style or `"gcal_p:1"`.
    fn from_str(s: &str) -> Result<Self> {
        if let Some((name, power)) = s.split_once(':') {
            let p = power
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad power in {s:?}")))?;
            return Self::from_name(name, Some(p));
        }
        Self::from_name(s, None)
    }
}

/// Evaluates square functions of one operator on one ladder.
#[derive(Clone, Debug)]
pub struct SquareFunctionEngine<'a, T> {
    op: &'a SpectralOperator<T>,
    tent: TentSpace<T>,
}

impl<'a, T: Real> SquareFunctionEngine<'a, T> {
    pub fn new(op: &'a SpectralOperator<T>, ladder: TimeLadder<T>) -> Result<Self> {
        Ok(Self {
            op,
            tent: TentSpace::new(op.grid(), op.weight(), ladder)?,
        })
    }

    /// Reuses a tent space built for the same grid and weight.
    pub fn with_tent(op: &'a SpectralOperator<T>, tent: TentSpace<T>) -> Result<Self> {
        if tent.grid() != op.grid() || tent.weight() != op.weight() {
            return invalid("tent space does not match the operator's grid and weight");
        }
        Ok(Self { op, tent })
    }

    pub fn operator(&self) -> &'a SpectralOperator<T> {
        self.op
    }

    pub fn tent(&self) -> &TentSpace<T> {
        &self.tent
    }

    pub fn weight(&self) -> &WeightModel<T> {
        self.op.weight()
    }

    /// The integrand `F(y, t_j)` of `kind` for `f`.
    pub fn field(&self, kind: SquareFunctionKind, f: &[T]) -> Result<HalfSpaceField<T>> {
        let kind = kind.validated()?;
        let ex = Expansion::new(self.op, f)?;
        let family = kind.family();
        let layers: Vec<Vec<Vec<T>>> = self
            .tent
            .nodes()
            .par_iter()
            .map(|&t| {
                if !kind.is_gradient() {
                    return vec![ex.value(family, t)];
                }
                let g = ex.gradient(family, t);
                let mut comps = g.spatial;
                if kind.uses_time() {
                    comps.push(g.time);
                }
                comps
            })
            .collect();
        HalfSpaceField::from_layers(self.op.grid(), &layers)
    }

    /// The square function at every cell.
    pub fn evaluate(&self, kind: SquareFunctionKind, f: &[T]) -> Result<Vec<T>> {
        let field = self.field(kind, f)?;
        if kind == VerticalHeat {
            return Ok(self.vertical_from_field(&field));
        }
        self.tent.cone(&field, T::one())
    }

    /// `g_H f`.
    pub fn vertical_g(&self, f: &[T]) -> Result<Vec<T>> {
        self.evaluate(VerticalHeat, f)
    }

    fn vertical_from_field(&self, field: &HalfSpaceField<T>) -> Vec<T> {
        let lr = self.tent.ladder().weight();
        (0..field.num_cells())
            .map(|y| {
                let mut acc = T::zero();
                for j in 0..field.num_nodes() {
                    acc += field.norm2(j, y);
                }
                (acc * lr).sqrt()
            })
            .collect()
    }

    /// `||S f||^2_{L^2(w)}` computed on the spectrum:
    /// `sum_k |<f, phi_k>_w|^2 sum_j m(t_j, lambda_k)^2 ln(rho)` for the
    /// non-gradient kinds.
    pub fn spectral_square_norm(&self, kind: SquareFunctionKind, f: &[T]) -> Result<T> {
        let kind = kind.validated()?;
        if kind.is_gradient() {
            return invalid(format!("{kind} has no spectral norm identity"));
        }
        let family = kind.family();
        let c = self.op.coefficients(f)?;
        let lr = self.tent.ladder().weight();
        let nodes = self.tent.nodes();
        Ok(c.iter()
            .zip(self.op.eigenvalues())
            .map(|(c, &l)| {
                let q: T = nodes.iter().map(|&t| family.multiplier(t, l).powi(2)).sum();
                *c * *c * q * lr
            })
            .sum())
    }
}

/// `int_0^inf (t^2 lambda)^{2m} e^{-2 t^2 lambda} dt/t = Gamma(2m) / (2 * 2^{2m})`
/// and `int_0^inf (t sqrt lambda)^{4K} e^{-2 t sqrt lambda} dt/t = Gamma(4K) / 2^{4K}`:
/// the squared `L^2(w)` norm of `S` applied to a unit eigenfunction.
pub fn modal_constant(kind: SquareFunctionKind) -> Result<f64> {
    let gamma = |n: u32| (1..n).map(f64::from).product::<f64>();
    match kind.validated()? {
        SHeat { m } => Ok(gamma(2 * m) / (2.0 * 4f64.powi(m as i32))),
        SPoisson { k } => Ok(gamma(4 * k) / 16f64.powi(k as i32)),
        other => invalid(format!("no modal constant for {other}")),
    }
}
