use super::heat::heat_kinds;
use super::poisson::{poisson_kinds, poisson_range};
use super::{drift_check, exact, Check, Context};
use crate::error::Result;
use crate::exponents::{
    power_weight_criticals, power_weight_relative_criticals, range_w, surrogate_endpoints, ExtReal,
};
use crate::mesh::WeightModel;
use crate::squarefn::modal_constant;
use crate::squarefn::SquareFunctionKind::{self, SHeat, SPoisson};

const MODAL_TOL: f64 = 1e-4;

/// A secondary weight `v = w^delta`, with `delta = 0` for `v = 1`.
struct Secondary {
    delta: f64,
    /// `W_v^w(p_-, infinity)` for the heat kinds.
    heat: (ExtReal, ExtReal),
}

fn secondaries(ctx: &Context) -> Result<Vec<Secondary>> {
    let cfg = ctx.config();
    let n = cfg.dim as u32;
    let alpha = exact(cfg.weight_alpha)?;
    let crit = power_weight_criticals(&alpha, n)?;
    let (p_minus, _) = surrogate_endpoints(&crit.r_w, n)?;
    let mut deltas = vec![0.0];
    deltas.extend(cfg.deltas.iter().copied());
    deltas
        .into_iter()
        .map(|delta| {
            let rel = power_weight_relative_criticals(&(exact(delta)? * alpha), &alpha, n)?;
            let r = range_w(&p_minus, &ExtReal::Infinite, &rel)?;
            Ok(Secondary {
                delta,
                heat: (r.lo, r.hi),
            })
        })
        .collect()
}

fn inside(p: f64, range: &(ExtReal, ExtReal)) -> bool {
    exact(p).is_ok_and(|q| {
        let q = ExtReal::Finite(q);
        range.0 < q && q < range.1
    })
}

pub fn suite_boundedness(ctx: &Context) -> Result<Vec<Check>> {
    let cfg = ctx.config().clone();
    let ns = &cfg.refinements;
    let heat = heat_kinds(ctx);
    let poisson: Vec<SquareFunctionKind> = poisson_kinds(ctx)
        .into_iter()
        .filter(|k| !matches!(k, SHeat { .. } | SquareFunctionKind::GcalHeat { .. }))
        .collect();
    ctx.prefetch(&heat)?;
    ctx.prefetch(&poisson)?;
    let mut checks = vec![];

    let zero = ns
        .iter()
        .map(|&n| {
            let unit = WeightModel::uniform(&ctx.grid(n)?);
            (0..ctx.bank().len()).try_fold(f64::INFINITY, |m, i| {
                Ok(m.min(ctx.norm(n, &ctx.sample(n, i)?, 2.0, &unit)?))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let min = zero.iter().copied().fold(f64::INFINITY, f64::min);
    checks.push(
        Check::pass_fail("bank_nonzero", min > 0.0, 0.0)
            .predicting("every bank function has positive norm")
            .with("min ||f||_{L^2(w)}", min),
    );

    for sec in secondaries(ctx)? {
        let v_of = |n: usize| -> Result<WeightModel<f64>> {
            let w = ctx.weight(n)?;
            Ok(if sec.delta == 0.0 {
                WeightModel::uniform(&ctx.grid(n)?)
            } else {
                w.pow(sec.delta)
            })
        };
        let v_name = if sec.delta == 0.0 {
            "1".to_string()
        } else {
            format!("w^{}", sec.delta)
        };
        checks.push(
            Check::report(
                format!("heat_range v={v_name}"),
                format!("p in ({}, {})", sec.heat.0, sec.heat.1),
            )
            .with("lower", sec.heat.0.to_f64())
            .with("upper", sec.heat.1.to_f64()),
        );
        for &p in &cfg.p_list {
            let mut kinds: Vec<SquareFunctionKind> = vec![];
            if inside(p, &sec.heat) {
                kinds.extend(&heat);
            }
            for &kind in &poisson {
                let k = match kind {
                    SPoisson { k }
                    | SquareFunctionKind::GPoisson { k }
                    | SquareFunctionKind::GcalPoisson { k } => k,
                    _ => continue,
                };
                // Poisson kinds need p below the upper Poisson index too
                let (_, hi) = poisson_range(ctx, k)?;
                if inside(p, &(sec.heat.0.clone(), hi)) {
                    kinds.push(kind);
                }
            }
            for kind in kinds {
                let series = ns
                    .iter()
                    .map(|&n| ctx.sup_operator_ratio(n, kind, p, &v_of(n)?))
                    .collect::<Result<Vec<_>>>()?;
                checks.push(drift_check(
                    format!("bounded {kind} p={p} v={v_name}"),
                    ns,
                    &series,
                    cfg.drift_tolerance,
                    "sup_f ||SF f||_{L^p(v dw)} / ||f||_{L^p(v dw)} < inf",
                ));
            }
        }
    }

    let mut modal_kinds: Vec<SquareFunctionKind> =
        cfg.m_list.iter().map(|&m| SHeat { m }).collect();
    modal_kinds.extend(cfg.k_list.iter().map(|&k| SPoisson { k }));
    for &n in ns {
        for &kind in &modal_kinds {
            let c = modal_constant(kind)?;
            let ratios = (1..=cfg.modes)
                .map(|k| ctx.modal_ratio(n, kind, k))
                .collect::<Result<Vec<f64>>>()?;
            let worst = ratios
                .iter()
                .map(|r| (r / c - 1.0).abs())
                .fold(0.0, f64::max);
            let mut check =
                Check::pass_fail(format!("modal {kind} N={n}"), worst <= MODAL_TOL, MODAL_TOL)
                    .predicting(format!("||SF phi_k||^2 / ||phi_k||^2 = {c}"));
            for (k, r) in ratios.iter().enumerate() {
                check = check.with(format!("mode {}", k + 1), *r);
            }
            checks.push(check.with("max relative error", worst));
        }
    }
    Ok(checks)
}
