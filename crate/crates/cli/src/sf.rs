use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;
use tentcalc::mesh::{lp_norm, Grid, WeightModel};
use tentcalc::operator::{CoefficientSpec, OperatorSpec, SpectralOperator, WeightSpec};
use tentcalc::semigroup::TimeLadder;
use tentcalc::squarefn::{SquareFunctionEngine, SquareFunctionKind};
use tentcalc::verify::{function_bank, json_hash};

use crate::{read_file, write_file, CliResult, Failure};

#[derive(clap::Args, Debug, Serialize)]
pub struct Args {
    /// S_H, G_H, Gcal_H, S_P, G_P, Gcal_P or vertical (SH, SP, ... also accepted).
    #[arg(long)]
    kind: String,
    /// Power m of a heat kind.
    #[arg(long)]
    m: Option<u32>,
    /// Power K of a Poisson kind.
    #[arg(long = "K")]
    k: Option<u32>,
    /// Input: constant, eig:<k>, bank:<i> or file:<path> (one value per line).
    #[arg(long, default_value = "bank:0")]
    f: String,
    /// Operator description (JSON with dim, N, weight, A); a rotating
    /// anisotropic field with the weight |x| on a 16 x 16 grid otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Smallest time as a multiple of the grid spacing.
    #[arg(long, default_value_t = 0.25)]
    t_min_cells: f64,
    #[arg(long, default_value_t = 1.0)]
    t_max: f64,
    /// Ladder nodes per doubling of t.
    #[arg(long, default_value_t = 16)]
    steps_per_octave: u32,
    /// Exponents p of the reported L^p(v dw) norms.
    #[arg(long, num_args = 1.., default_values_t = [2.0])]
    p: Vec<f64>,
    /// Secondary weights v: "1" or "w^<delta>".
    #[arg(long, num_args = 1.., default_values_t = ["1".to_string()])]
    v: Vec<String>,
    /// Seed of the bank used by bank:<i>.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Per-cell CSV of the square function.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary JSON; printed to stdout when absent.
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn kind(args: &Args) -> CliResult<SquareFunctionKind> {
    let base: SquareFunctionKind = SquareFunctionKind::from_name(&args.kind, None)?;
    let power = match (base.family(), args.m, args.k) {
        (_, Some(_), Some(_)) => {
            return Err(Failure::Domain("give either --m or --K, not both".into()))
        }
        (tentcalc::semigroup::Family::Heat { .. }, _, Some(_)) => {
            return Err(Failure::Domain(format!(
                "{} is a heat square function; use --m",
                args.kind
            )))
        }
        (tentcalc::semigroup::Family::Poisson { .. }, Some(_), _) => {
            return Err(Failure::Domain(format!(
                "{} is a Poisson square function; use --K",
                args.kind
            )))
        }
        (_, m, k) => m.or(k),
    };
    if base == SquareFunctionKind::VerticalHeat && power.is_some() {
        return Err(Failure::Domain(
            "the vertical square function takes no power".into(),
        ));
    }
    Ok(SquareFunctionKind::from_name(&args.kind, power)?)
}

fn input(args: &Args, op: &SpectralOperator<f64>) -> CliResult<Vec<f64>> {
    let n = op.len();
    let f = &args.f;
    if f == "constant" {
        return Ok(vec![1.0; n]);
    }
    let (tag, rest) = f.split_once(':').ok_or_else(|| {
        Failure::Usage(format!(
            "--f: expected constant, eig:<k>, bank:<i> or file:<path>, got {f:?}"
        ))
    })?;
    let index = || {
        rest.parse::<usize>()
            .map_err(|_| Failure::Usage(format!("--f: bad index in {f:?}")))
    };
    match tag {
        "eig" => {
            let k = index()?;
            if k >= n {
                return Err(Failure::Domain(format!(
                    "eigenmode {k} out of range (grid has {n} cells)"
                )));
            }
            Ok(op.eigenvector(k).to_vec())
        }
        "bank" => {
            let i = index()?;
            let bank = function_bank(op.grid().dim(), i + 1, args.seed);
            Ok(bank[i].sample(op.grid()))
        }
        "file" => {
            let text = read_file(&PathBuf::from(rest))?;
            let values = text
                .lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(|l| {
                    l.parse::<f64>()
                        .map_err(|_| Failure::Usage(format!("{rest}: not a number: {l:?}")))
                })
                .collect::<CliResult<Vec<f64>>>()?;
            if values.len() != n {
                return Err(Failure::Domain(format!(
                    "{rest}: expected {n} values, got {}",
                    values.len()
                )));
            }
            Ok(values)
        }
        _ => Err(Failure::Usage(format!("--f: unknown input {tag:?}"))),
    }
}

fn secondary(name: &str, grid: &Grid, w: &WeightModel<f64>) -> CliResult<WeightModel<f64>> {
    if name == "1" {
        return Ok(WeightModel::uniform(grid));
    }
    let delta = name
        .strip_prefix("w^")
        .and_then(|d| d.parse::<f64>().ok())
        .ok_or_else(|| Failure::Usage(format!("--v: expected 1 or w^<delta>, got {name:?}")))?;
    Ok(w.pow(delta))
}

pub fn run(args: Args) -> CliResult<()> {
    let kind = kind(&args)?;
    let (spec, base) = match &args.config {
        Some(path) => {
            let spec = OperatorSpec::from_json(&read_file(path)?)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            (spec, path.parent().map(|p| p.to_path_buf()))
        }
        None => (
            OperatorSpec {
                dim: 2,
                n: 16,
                weight: WeightSpec::Power { alpha: 1.0 },
                a: CoefficientSpec::Rotating { anisotropy: 0.5 },
            },
            None,
        ),
    };
    let op: SpectralOperator<f64> = spec.build(base.as_deref())?;
    let grid = op.grid().clone();
    let ladder = TimeLadder::new(
        args.t_min_cells * grid.spacing::<f64>(),
        args.t_max,
        2f64.powf(1.0 / args.steps_per_octave.max(1) as f64),
    )?;
    let f = input(&args, &op)?;
    let engine = SquareFunctionEngine::new(&op, ladder.clone())?;
    let values = engine.evaluate(kind, &f)?;

    let hash = json_hash(&json!({ "operator": &spec, "args": &args }));
    let version = env!("CARGO_PKG_VERSION");
    let w = op.weight();
    let mut norms = vec![];
    for name in &args.v {
        let v = secondary(name, &grid, w)?;
        for &p in &args.p {
            let value = lp_norm(&values, p, &v, w)?;
            let input = lp_norm(&f, p, &v, w)?;
            norms.push(json!({ "p": p, "v": name, "value": value, "input": input }));
        }
    }
    let summary = json!({
        "tool": "tentcalc",
        "version": version,
        "config_hash": hash,
        "seed": args.seed,
        "kind": kind.to_string(),
        "input": args.f,
        "dim": grid.dim(),
        "N": grid.cells_per_side(),
        "ladder": { "t_min": ladder.t_min, "t_max": ladder.t_max, "ratio": ladder.ratio, "nodes": ladder.count() },
        "norms": norms,
    });
    let text =
        serde_json::to_string_pretty(&summary).map_err(|e| Failure::Domain(e.to_string()))? + "\n";
    match &args.summary {
        Some(path) => write_file(path, text.as_bytes())?,
        None => print!("{text}"),
    }

    if let Some(path) = &args.out {
        let mut csv = String::new();
        let _ = writeln!(csv, "# tool: tentcalc {version}");
        let _ = writeln!(csv, "# config_hash: {hash}");
        let _ = writeln!(csv, "# seed: {}", args.seed);
        let _ = writeln!(csv, "# kind: {kind}");
        if grid.dim() == 1 {
            csv.push_str("i0,x0,value\n");
        } else {
            csv.push_str("i0,i1,x0,x1,value\n");
        }
        for (c, v) in values.iter().enumerate() {
            let idx = grid.coords(c);
            let x: [f64; 2] = grid.center(c);
            if grid.dim() == 1 {
                let _ = writeln!(csv, "{},{},{:e}", idx[0], x[0], v);
            } else {
                let _ = writeln!(csv, "{},{},{},{},{:e}", idx[0], idx[1], x[0], x[1], v);
            }
        }
        write_file(path, csv.as_bytes())?;
    }
    Ok(())
}
