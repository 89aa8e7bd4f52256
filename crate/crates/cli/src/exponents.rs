use clap::ValueEnum;
use serde_json::{json, Map, Value};
use tentcalc::exponents::{
    corollary_ranges, parse_ratio, poisson_upper, power_weight_criticals, range_w,
    surrogate_endpoints, two_star, CorollaryQuery, CriticalPair, ExtReal, Rational,
    SemigroupFamily, SignedInterval,
};

use crate::{CliResult, Failure};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Corollary {
    Heat,
    Poisson,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Power-weight exponent, as an integer, "p/q" or a finite decimal.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Dimension.
    #[arg(long)]
    n: u32,
    /// Order K of the Poisson upper exponent.
    #[arg(long = "K")]
    k: Option<u32>,
    /// Lower end of the range W(p0, q0).
    #[arg(long)]
    p0: Option<String>,
    /// Upper end of the range W(p0, q0); "inf" allowed.
    #[arg(long)]
    q0: Option<String>,
    /// Closed-form corollary ranges instead of weight exponents.
    #[arg(long, value_enum)]
    corollary: Option<Corollary>,
    /// Muckenhoupt index r of the unweighted corollaries.
    #[arg(long)]
    r: Option<String>,
    /// Exponent p tested against the unweighted corollaries.
    #[arg(long)]
    p: Option<String>,
}

fn ratio(text: &str, flag: &str) -> CliResult<Rational<i64>> {
    parse_ratio(text)
        .map_err(|_| Failure::Usage(format!("--{flag}: not a rational number: {text:?}")))
}

fn ext(text: &str, flag: &str) -> CliResult<ExtReal> {
    if matches!(text, "inf" | "infinity" | "∞") {
        return Ok(ExtReal::Infinite);
    }
    Ok(ExtReal::new(ratio(text, flag)?)?)
}

fn interval(i: &SignedInterval) -> Value {
    let [lo, hi] = i.endpoints();
    json!([lo, hi])
}

fn text(x: &ExtReal) -> Value {
    Value::String(x.to_string())
}

pub fn run(args: Args) -> CliResult<()> {
    let out = match args.corollary {
        Some(c) => corollary(&args, c)?,
        None => weight_exponents(&args)?,
    };
    println!("{}", Value::Object(out));
    Ok(())
}

fn corollary(args: &Args, c: Corollary) -> CliResult<Map<String, Value>> {
    let n = args.n;
    let r = args.r.as_deref().map(|r| ratio(r, "r")).transpose()?;
    let p = args.p.as_deref().map(|p| ratio(p, "p")).transpose()?;
    let query = match (c, r) {
        (Corollary::Heat, None) => CorollaryQuery::PowerWeight {
            family: SemigroupFamily::Heat,
            n,
        },
        (Corollary::Poisson, None) => CorollaryQuery::PowerWeight {
            family: SemigroupFamily::Poisson,
            n,
        },
        (Corollary::Heat, Some(r)) if p.is_none() => CorollaryQuery::HeatL2 { n, r },
        (Corollary::Poisson, Some(r)) if p.is_none() => CorollaryQuery::PoissonL2 { n, r },
        (Corollary::Heat, Some(r)) => CorollaryQuery::HeatLp { n, r, p },
        (Corollary::Poisson, Some(r)) => CorollaryQuery::PoissonLp { n, r, p },
    };
    let rep = corollary_ranges(&query)?;
    let mut out = Map::new();
    if let Some(i) = &rep.alpha_range {
        out.insert("alpha_range".into(), interval(i));
    }
    if let Some(i) = &rep.p_range {
        out.insert("p_range".into(), interval(i));
        out.insert("p_interval".into(), Value::String(i.to_string()));
    }
    if let Some(a) = &rep.ap_index {
        out.insert("ap_index".into(), text(&ExtReal::Finite(*a)));
    }
    if let Some(s) = &rep.rh_index {
        out.insert("rh_index".into(), text(s));
    }
    if let Some(ok) = rep.p_admissible {
        out.insert("p_admissible".into(), Value::Bool(ok));
    }
    if !rep.covered {
        out.insert("covered".into(), Value::Bool(false));
    }
    Ok(out)
}

fn weight_exponents(args: &Args) -> CliResult<Map<String, Value>> {
    let alpha = args
        .alpha
        .as_deref()
        .ok_or_else(|| Failure::Usage("--alpha is required without --corollary".into()))?;
    let alpha = ratio(alpha, "alpha")?;
    let n = args.n;
    let crit = power_weight_criticals(&alpha, n)?;
    let mut out = Map::new();
    out.insert("r_w".into(), text(&crit.r_w));
    out.insert("s_w".into(), text(&crit.s_w));
    if let Some(k) = args.k {
        let (lo, hi) = surrogate_endpoints(&crit.r_w, n)?;
        out.insert("two_star".into(), text(&two_star(&crit.r_w, n)?));
        out.insert("p_minus".into(), text(&lo));
        out.insert("p_plus".into(), text(&hi));
        out.insert(
            "poisson_upper".into(),
            text(&poisson_upper(&hi, k, &crit.r_w, n)?),
        );
    }
    match (&args.p0, &args.q0) {
        (Some(p0), Some(q0)) => {
            let range = range_w(
                &ext(p0, "p0")?,
                &ext(q0, "q0")?,
                &CriticalPair::clone(&crit),
            )?;
            out.insert(
                "range".into(),
                json!([range.lo.to_string(), range.hi.to_string()]),
            );
            if range.empty {
                out.insert("range_empty".into(), Value::Bool(true));
            }
        }
        (None, None) => {}
        _ => {
            return Err(Failure::Usage(
                "--p0 and --q0 must be given together".into(),
            ))
        }
    }
    Ok(out)
}
