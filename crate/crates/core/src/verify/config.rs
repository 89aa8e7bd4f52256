use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};
use crate::mesh::Grid;
use crate::semigroup::{TimeLadder, MAX_POWER};

/// `t_min = t_min_cells * h`, `t_max`, `rho = 2^{1/steps_per_octave}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub t_min_cells: f64,
    pub t_max: f64,
    pub steps_per_octave: u32,
}

impl LadderConfig {
    pub fn build(&self, grid: &Grid) -> Result<TimeLadder<f64>> {
        if self.steps_per_octave == 0 {
            return invalid("ladder needs at least one step per octave");
        }
        TimeLadder::new(
            self.t_min_cells * grid.spacing::<f64>(),
            self.t_max,
            2f64.powf(1.0 / self.steps_per_octave as f64),
        )
    }

    pub fn describe(&self) -> String {
        format!(
            "t in [{} h, {}], rho = 2^(1/{})",
            self.t_min_cells, self.t_max, self.steps_per_octave
        )
    }
}

/// One `(w, r, s, q)` configuration of the aperture-reduction experiment:
/// `w = |x|^weight_alpha in A_r`, `v = 1 in RH_{s'}(w)`, `1 <= q <= s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppendixCase {
    pub weight_alpha: f64,
    pub r: f64,
    pub s: f64,
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppendixConfig {
    pub t: f64,
    pub alphas: Vec<f64>,
    pub cases: Vec<AppendixCase>,
}

impl Default for AppendixConfig {
    fn default() -> Self {
        Self {
            t: 0.5,
            alphas: vec![1.0, 0.5, 0.25],
            cases: vec![
                AppendixCase {
                    weight_alpha: 0.0,
                    r: 1.0,
                    s: 2.0,
                    q: 2.0,
                },
                AppendixCase {
                    weight_alpha: 1.0,
                    r: 2.0,
                    s: 2.0,
                    q: 1.0,
                },
            ],
        }
    }
}

/// Configuration of a `verify` run. Every field has a default; unknown fields
/// are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub dim: usize,
    /// The operator weight is `|x|^weight_alpha`.
    pub weight_alpha: f64,
    /// Rotating coefficient field with eigenvalues `1` and `1 + anisotropy`.
    pub anisotropy: f64,
    /// Grid sizes compared for refinement stability.
    pub refinements: Vec<usize>,
    pub bank_size: usize,
    pub ladder: LadderConfig,
    /// Wider ladder used where a `dt/t` integral is compared with its closed form.
    pub modal_ladder: LadderConfig,
    /// Number of eigenmodes in the modal checks.
    pub modes: usize,
    pub m_list: Vec<u32>,
    pub k_list: Vec<u32>,
    pub p_list: Vec<f64>,
    /// Exponents `delta` of the secondary weights `v = w^delta`.
    pub deltas: Vec<f64>,
    pub carleson_p0: Vec<f64>,
    pub drift_tolerance: f64,
    pub appendix: AppendixConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            dim: 2,
            weight_alpha: 1.0,
            anisotropy: 0.5,
            refinements: vec![16, 32],
            bank_size: 20,
            ladder: LadderConfig {
                t_min_cells: 0.25,
                t_max: 1.0,
                steps_per_octave: 16,
            },
            modal_ladder: LadderConfig {
                t_min_cells: 1.0 / 256.0,
                t_max: 4.0,
                steps_per_octave: 16,
            },
            modes: 5,
            m_list: vec![1, 2],
            k_list: vec![1],
            p_list: vec![1.5, 2.0, 3.0],
            deltas: vec![-1.0, 0.5],
            carleson_p0: vec![1.0, 2.0],
            drift_tolerance: 0.15,
            appendix: AppendixConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.refinements.is_empty() {
            return invalid("at least one refinement is required");
        }
        if self.refinements.windows(2).any(|p| p[0] >= p[1]) {
            return invalid(format!(
                "refinements must increase, got {:?}",
                self.refinements
            ));
        }
        for &n in &self.refinements {
            let g = Grid::new(self.dim, n)?;
            self.ladder.build(&g)?;
            self.modal_ladder.build(&g)?;
        }
        let dim = self.dim as f64;
        if !(self.weight_alpha > -dim && self.weight_alpha < dim) {
            return invalid(format!(
                "weight exponent must lie in (-dim, dim), got {}",
                self.weight_alpha
            ));
        }
        if !(self.anisotropy >= 0.0 && self.anisotropy.is_finite()) {
            return invalid("anisotropy must be finite and nonnegative");
        }
        if self.bank_size == 0 || self.modes == 0 {
            return invalid("bank_size and modes must be positive");
        }
        if self.m_list.iter().any(|&m| m == 0 || m >= MAX_POWER) {
            return invalid(format!("m_list entries must lie in 1..{MAX_POWER}"));
        }
        if self.k_list.iter().any(|&k| k == 0 || k > MAX_POWER) {
            return invalid(format!("k_list entries must lie in 1..={MAX_POWER}"));
        }
        if self.p_list.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return invalid("p_list entries must be positive and finite");
        }
        // v = w^delta must be a power weight locally integrable against dw
        if self
            .deltas
            .iter()
            .any(|&d| !(d.is_finite() && d * self.weight_alpha > -(dim + self.weight_alpha)))
        {
            return invalid("every delta must give v = w^delta in A_inf(w)");
        }
        if self.carleson_p0.iter().any(|&p| !(p > 0.0)) {
            return invalid("carleson_p0 entries must be positive");
        }
        if !(self.drift_tolerance > 0.0) {
            return invalid("drift_tolerance must be positive");
        }
        let a = &self.appendix;
        if !(a.t > 0.0) || a.alphas.is_empty() || a.alphas.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
            return invalid("appendix needs t > 0 and apertures in (0, 1]");
        }
        for c in &a.cases {
            if !(c.r >= 1.0 && c.s >= 1.0 && c.q >= 1.0) {
                return invalid("appendix cases need r, s, q >= 1");
            }
            if c.q > c.s {
                return invalid(format!(
                    "appendix case needs 1 <= q <= s, got q = {} > s = {}",
                    c.q, c.s
                ));
            }
            // |x|^a is in A_1 iff -n < a <= 0 and in A_r, r > 1, iff -n < a < n (r - 1)
            let in_class = c.weight_alpha > -dim
                && if c.r == 1.0 {
                    c.weight_alpha <= 0.0
                } else {
                    c.weight_alpha < dim * (c.r - 1.0)
                };
            if !in_class {
                return invalid(format!(
                    "appendix weight |x|^{} is not in A_{}",
                    c.weight_alpha, c.r
                ));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, in hex.
    pub fn hash(&self) -> String {
        json_hash(self)
    }
}

/// SHA-256 of `serde_json::to_string(value)`, in hex.
pub fn json_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("value serializes");
    Sha256::digest(json.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
