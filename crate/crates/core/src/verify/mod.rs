//! Verification suites: pass/fail checks of exact identities and pointwise
//! inequalities, and refinement-stability checks of the norm comparisons whose
//! constants are unspecified.

mod angles;
mod appendix;
mod bank;
mod boundedness;
mod config;
mod heat;
mod poisson;
mod report;

pub use bank::{function_bank, TestFunction};
pub use config::{json_hash, AppendixCase, AppendixConfig, LadderConfig, RunConfig};
pub use report::{Check, CheckKind, Environment, Measurement, Report, SuiteReport, Verdict};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exponents::parse_ratio;
use crate::mesh::{lp_norm, Grid, WeightModel};
use crate::operator::{CoefficientField, SpectralOperator};
use crate::squarefn::{SquareFunctionEngine, SquareFunctionKind};
use crate::tent::TentSpace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Heat,
    Poisson,
    Boundedness,
    Angles,
    AppendixQ,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Heat,
        Suite::Poisson,
        Suite::Boundedness,
        Suite::Angles,
        Suite::AppendixQ,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Heat => "heat",
            Suite::Poisson => "poisson",
            Suite::Boundedness => "boundedness",
            Suite::Angles => "angles",
            Suite::AppendixQ => "appendix_q",
        }
    }

    /// Parses a suite name; `"all"` expands to every suite.
    pub fn parse_list(name: &str) -> Result<Vec<Suite>> {
        if name == "all" {
            return Ok(Suite::ALL.to_vec());
        }
        name.split(',').map(|s| s.trim().parse()).collect()
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heat" | "heat_control" => Ok(Suite::Heat),
            "poisson" | "poisson_control" => Ok(Suite::Poisson),
            "boundedness" | "bounded" => Ok(Suite::Boundedness),
            "angles" | "angles_carleson" => Ok(Suite::Angles),
            "appendix_q" | "appendix" => Ok(Suite::AppendixQ),
            _ => invalid(format!("unknown suite {s:?}")),
        }
    }
}

type ValueKey = (usize, SquareFunctionKind, usize);

/// Operators, tent spaces and square-function values shared by the suites,
/// computed on first use.
pub struct Context {
    config: RunConfig,
    bank: Vec<TestFunction>,
    operators: Mutex<BTreeMap<usize, Arc<SpectralOperator<f64>>>>,
    tents: Mutex<BTreeMap<(usize, bool), Arc<TentSpace<f64>>>>,
    values: Mutex<BTreeMap<ValueKey, Arc<Vec<f64>>>>,
    modal: Mutex<BTreeMap<ValueKey, f64>>,
}

impl Context {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let bank = function_bank(config.dim, config.bank_size, config.seed);
        Ok(Self {
            config,
            bank,
            operators: Mutex::new(BTreeMap::new()),
            tents: Mutex::new(BTreeMap::new()),
            values: Mutex::new(BTreeMap::new()),
            modal: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn bank(&self) -> &[TestFunction] {
        &self.bank
    }

    pub fn grid(&self, n: usize) -> Result<Grid> {
        Grid::new(self.config.dim, n)
    }

    pub fn weight(&self, n: usize) -> Result<WeightModel<f64>> {
        WeightModel::power(&self.grid(n)?, self.config.weight_alpha)
    }

    pub fn operator(&self, n: usize) -> Result<Arc<SpectralOperator<f64>>> {
        if let Some(op) = self.operators.lock().expect("lock").get(&n) {
            return Ok(op.clone());
        }
        let g = self.grid(n)?;
        let a = CoefficientField::rotating(&g, self.config.anisotropy)?;
        let op = Arc::new(SpectralOperator::assemble(&g, &a, &self.weight(n)?)?);
        Ok(self
            .operators
            .lock()
            .expect("lock")
            .entry(n)
            .or_insert(op)
            .clone())
    }

    /// Tent space on the default ladder, or on the wide ladder used for the
    /// modal constants.
    pub fn tent(&self, n: usize, modal: bool) -> Result<Arc<TentSpace<f64>>> {
        if let Some(t) = self.tents.lock().expect("lock").get(&(n, modal)) {
            return Ok(t.clone());
        }
        let g = self.grid(n)?;
        let ladder = if modal {
            &self.config.modal_ladder
        } else {
            &self.config.ladder
        }
        .build(&g)?;
        let tent = Arc::new(TentSpace::new(&g, &self.weight(n)?, ladder)?);
        Ok(self
            .tents
            .lock()
            .expect("lock")
            .entry((n, modal))
            .or_insert(tent)
            .clone())
    }

    pub fn with_engine<R>(
        &self,
        n: usize,
        modal: bool,
        body: impl FnOnce(&SquareFunctionEngine<'_, f64>) -> Result<R>,
    ) -> Result<R> {
        let op = self.operator(n)?;
        let tent = self.tent(n, modal)?;
        let engine = SquareFunctionEngine::with_tent(&op, (*tent).clone())?;
        body(&engine)
    }

    pub fn sample(&self, n: usize, index: usize) -> Result<Vec<f64>> {
        Ok(self.bank[index].sample(&self.grid(n)?))
    }

    /// `kind` applied to bank function `index` on the default ladder.
    pub fn square(
        &self,
        n: usize,
        kind: SquareFunctionKind,
        index: usize,
    ) -> Result<Arc<Vec<f64>>> {
        if let Some(v) = self.values.lock().expect("lock").get(&(n, kind, index)) {
            return Ok(v.clone());
        }
        let f = self.sample(n, index)?;
        let v = Arc::new(self.with_engine(n, false, |e| e.evaluate(kind, &f))?);
        Ok(self
            .values
            .lock()
            .expect("lock")
            .entry((n, kind, index))
            .or_insert(v)
            .clone())
    }

    /// `||S phi_k||^2_{L^2(w)} / ||phi_k||^2_{L^2(w)}` on the wide ladder.
    pub fn modal_ratio(&self, n: usize, kind: SquareFunctionKind, k: usize) -> Result<f64> {
        if let Some(v) = self.modal.lock().expect("lock").get(&(n, kind, k)) {
            return Ok(*v);
        }
        let op = self.operator(n)?;
        if k >= op.len() {
            return invalid(format!("eigenmode {k} out of range"));
        }
        let phi = op.eigenvector(k).to_vec();
        let s = self.with_engine(n, true, |e| e.evaluate(kind, &phi))?;
        let unit = WeightModel::uniform(&self.grid(n)?);
        let r = (self.norm(n, &s, 2.0, &unit)? / self.norm(n, &phi, 2.0, &unit)?).powi(2);
        self.modal.lock().expect("lock").insert((n, kind, k), r);
        Ok(r)
    }

    /// `max over the bank of ||num f|| / ||den f||` in `L^p(v dw)`; undefined
    /// when every ratio is.
    pub fn sup_ratio(
        &self,
        n: usize,
        num: SquareFunctionKind,
        den: SquareFunctionKind,
        p: f64,
        v: &WeightModel<f64>,
    ) -> Result<Option<f64>> {
        let ratios = (0..self.bank.len())
            .into_par_iter()
            .map(|i| {
                let a = self.norm(n, &self.square(n, num, i)?, p, v)?;
                let b = self.norm(n, &self.square(n, den, i)?, p, v)?;
                Ok(ratio(a, b))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ratios.into_iter().flatten().reduce(f64::max))
    }

    /// `max over the bank of ||kind f|| / ||f||` in `L^p(v dw)`.
    pub fn sup_operator_ratio(
        &self,
        n: usize,
        kind: SquareFunctionKind,
        p: f64,
        v: &WeightModel<f64>,
    ) -> Result<Option<f64>> {
        let ratios = (0..self.bank.len())
            .into_par_iter()
            .map(|i| {
                let a = self.norm(n, &self.square(n, kind, i)?, p, v)?;
                let b = self.norm(n, &self.sample(n, i)?, p, v)?;
                Ok(ratio(a, b))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ratios.into_iter().flatten().reduce(f64::max))
    }

    /// Evaluates `kinds` on every bank function and refinement in one parallel pass.
    pub fn prefetch(&self, kinds: &[SquareFunctionKind]) -> Result<()> {
        for &n in &self.config.refinements {
            self.operator(n)?;
            self.tent(n, false)?;
            let jobs: Vec<_> = kinds
                .iter()
                .flat_map(|&k| (0..self.bank.len()).map(move |i| (k, i)))
                .collect();
            jobs.into_par_iter()
                .map(|(k, i)| self.square(n, k, i).map(|_| ()))
                .collect::<Result<()>>()?;
        }
        Ok(())
    }

    /// `||f||_{L^p(v dw)}` on the refinement `n`.
    pub fn norm(&self, n: usize, f: &[f64], p: f64, v: &WeightModel<f64>) -> Result<f64> {
        let w = self.weight(n)?;
        lp_norm(f, p, v, &w)
    }

    pub fn environment(&self) -> Environment {
        let c = &self.config;
        Environment {
            dim: c.dim,
            refinements: c.refinements.clone(),
            ladder: c.ladder.describe(),
            weight: format!("|x|^{}", c.weight_alpha),
            coefficients: format!("rotating, anisotropy {}", c.anisotropy),
            seed: c.seed,
            bank_size: c.bank_size,
        }
    }
}

/// Exact rational form of a configured decimal.
pub(crate) fn exact(x: f64) -> Result<Ratio<i64>> {
    parse_ratio(&format!("{x}"))
}

/// `|b - a| / |a|`, undefined when either side is undefined or `a = 0`.
pub(crate) fn drift(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if a != 0.0 && a.is_finite() && b.is_finite() => {
            Some((b - a).abs() / a.abs())
        }
        _ => None,
    }
}

/// `num / den` with `0/0` undefined.
pub(crate) fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0 && num.is_finite()).then(|| num / den)
}

/// Adds one drift check comparing consecutive refinements of a per-refinement
/// series; with a single refinement the series is only reported.
pub(crate) fn drift_check(
    id: String,
    refinements: &[usize],
    series: &[Option<f64>],
    tol: f64,
    predicted: &str,
) -> Check {
    let mut check = if refinements.len() < 2 {
        Check::report(id, predicted)
    } else {
        let ok = series
            .windows(2)
            .all(|w| drift(w[0], w[1]).is_some_and(|d| d < tol));
        Check::pass_fail(id, ok, tol).predicting(predicted)
    };
    for (n, v) in refinements.iter().zip(series) {
        check = check.with(format!("N={n}"), *v);
    }
    for (i, w) in series.windows(2).enumerate() {
        check = check.with(
            format!("drift {}->{}", refinements[i], refinements[i + 1]),
            drift(w[0], w[1]),
        );
    }
    check
}

pub fn run_suite(ctx: &Context, suite: Suite) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Heat => heat::suite_heat_control(ctx)?,
        Suite::Poisson => poisson::suite_poisson_control(ctx)?,
        Suite::Boundedness => boundedness::suite_boundedness(ctx)?,
        Suite::Angles => angles::suite_angles_carleson(ctx)?,
        Suite::AppendixQ => appendix::suite_appendix_q(ctx)?,
    };
    Ok(SuiteReport::new(suite.name(), ctx.environment(), checks))
}

/// Runs `suites` in order on a shared context.
pub fn run(config: &RunConfig, suites: &[Suite]) -> Result<Report> {
    let ctx = Context::new(config.clone())?;
    let reports = suites
        .iter()
        .map(|&s| run_suite(&ctx, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(Report::new(config, reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        assert_eq!(Suite::parse_list("all").unwrap().len(), 5);
        assert_eq!(
            Suite::parse_list("heat,angles").unwrap(),
            vec![Suite::Heat, Suite::Angles]
        );
        assert!(Suite::parse_list("nope").is_err());
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
    }

    #[test]
    fn drift_and_ratio_helpers() {
        assert_eq!(
            drift(Some(2.0), Some(2.2)).map(|d| (d * 10.0).round()),
            Some(1.0)
        );
        assert_eq!(drift(Some(0.0), Some(1.0)), None);
        assert_eq!(drift(None, Some(1.0)), None);
        assert_eq!(ratio(0.0, 0.0), None);
        assert_eq!(ratio(1.0, 2.0), Some(0.5));
        let c = drift_check(
            "x".into(),
            &[16, 32],
            &[Some(1.0), Some(1.1)],
            0.15,
            "bounded",
        );
        assert_eq!(c.verdict, Verdict::Pass);
        let c = drift_check("x".into(), &[16, 32], &[Some(1.0), None], 0.15, "bounded");
        assert_eq!(c.verdict, Verdict::Fail);
        let c = drift_check("x".into(), &[16], &[Some(1.0)], 0.15, "bounded");
        assert_eq!(c.verdict, Verdict::Report);
    }
}
