use rayon::prelude::*;

use super::{drift_check, ratio, Check, Context};
use crate::error::Result;
use crate::mesh::WeightModel;
use crate::squarefn::SquareFunctionKind::{GHeat, GcalHeat, SHeat};
use crate::squarefn::{SquareFunctionEngine, SquareFunctionKind};

/// Absolute slack of the pointwise comparisons.
pub(crate) const POINTWISE_TOL: f64 = 1e-10;

/// Values below this fraction of `||f||` count as zero.
pub(crate) const ZERO_TOL: f64 = 1e-12;

/// `max over the bank and x of (a f)(x) - c (b f)(x)`.
pub(crate) fn max_excess(
    ctx: &Context,
    n: usize,
    a: SquareFunctionKind,
    b: SquareFunctionKind,
    c: f64,
) -> Result<f64> {
    let per = (0..ctx.bank().len())
        .into_par_iter()
        .map(|i| {
            let x = ctx.square(n, a, i)?;
            let y = ctx.square(n, b, i)?;
            Ok(x.iter()
                .zip(y.iter())
                .map(|(x, y)| x - c * y)
                .fold(f64::NEG_INFINITY, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

pub(crate) fn heat_kinds(ctx: &Context) -> Vec<SquareFunctionKind> {
    let ms = &ctx.config().m_list;
    let mut kinds = vec![SHeat { m: 1 }, GHeat { m: 0 }, GcalHeat { m: 0 }];
    for &m in ms {
        kinds.extend([SHeat { m }, SHeat { m: m + 1 }, GHeat { m }, GcalHeat { m }]);
    }
    kinds.sort();
    kinds.dedup();
    kinds
}

/// Square functions of a constant input, with `0/0` left undefined.
pub(crate) fn constant_input(
    ctx: &Context,
    id: &str,
    num: SquareFunctionKind,
    den: SquareFunctionKind,
) -> Result<Check> {
    let n = ctx.config().refinements[0];
    let g = ctx.grid(n)?;
    let unit = WeightModel::uniform(&g);
    let f = vec![1.0; g.num_cells()];
    let scale = ctx.norm(n, &f, 2.0, &unit)?;
    let (a, b) = ctx.with_engine(n, false, |e| {
        Ok((e.evaluate(num, &f)?, e.evaluate(den, &f)?))
    })?;
    let clean = |v: f64| if v <= ZERO_TOL * scale { 0.0 } else { v };
    let na = clean(ctx.norm(n, &a, 2.0, &unit)?);
    let nb = clean(ctx.norm(n, &b, 2.0, &unit)?);
    let r = ratio(na, nb);
    Ok(
        Check::pass_fail(id, na == 0.0 && nb == 0.0 && r.is_none(), ZERO_TOL)
            .predicting("both norms vanish, ratio undefined")
            .with(format!("||{num} 1||"), na)
            .with(format!("||{den} 1||"), nb)
            .with("ratio", r),
    )
}

pub fn suite_heat_control(ctx: &Context) -> Result<Vec<Check>> {
    let cfg = ctx.config().clone();
    let ns = &cfg.refinements;
    ctx.prefetch(&heat_kinds(ctx))?;
    let mut checks = vec![];

    for &n in ns {
        let excess = max_excess(ctx, n, SHeat { m: 1 }, GcalHeat { m: 0 }, 0.5)?;
        checks.push(
            Check::pass_fail(
                format!("factor_half N={n}"),
                excess <= POINTWISE_TOL,
                POINTWISE_TOL,
            )
            .predicting("S_{1,H} f <= Gcal_{0,H} f / 2 pointwise")
            .with("max S - Gcal/2", excess),
        );
        let mut ms = vec![0];
        ms.extend(cfg.m_list.iter().copied());
        for m in ms {
            let excess = max_excess(ctx, n, GHeat { m }, GcalHeat { m }, 1.0)?;
            checks.push(
                Check::pass_fail(
                    format!("gradient_domination m={m} N={n}"),
                    excess <= POINTWISE_TOL,
                    POINTWISE_TOL,
                )
                .predicting("G_{m,H} f <= Gcal_{m,H} f pointwise")
                .with("max G - Gcal", excess),
            );
        }
    }

    let unit = |n| Ok::<_, crate::Error>(WeightModel::uniform(&ctx.grid(n)?));
    for &m in &cfg.m_list {
        for &p in &cfg.p_list {
            let mut grad = vec![];
            let mut next = vec![];
            for &n in ns {
                let v = unit(n)?;
                grad.push(ctx.sup_ratio(n, GcalHeat { m }, SHeat { m }, p, &v)?);
                next.push(ctx.sup_ratio(n, SHeat { m: m + 1 }, SHeat { m }, p, &v)?);
            }
            checks.push(drift_check(
                format!("gcal_over_s m={m} p={p}"),
                ns,
                &grad,
                cfg.drift_tolerance,
                "||Gcal_{m,H} f|| <= C ||S_{m,H} f||",
            ));
            checks.push(drift_check(
                format!("s_next_over_s m={m} p={p}"),
                ns,
                &next,
                cfg.drift_tolerance,
                "||S_{m+1,H} f|| <= C ||S_{m,H} f||",
            ));
        }
    }

    // a single eigenfunction: the ratio depends only on its eigenvalue
    let mut eig = vec![];
    for &n in ns {
        let op = ctx.operator(n)?;
        let phi = op.eigenvector(1).to_vec();
        let v = unit(n)?;
        let r = ctx.with_engine(n, false, |e| {
            let a = e.evaluate(SHeat { m: 2 }, &phi)?;
            let b = e.evaluate(SHeat { m: 1 }, &phi)?;
            Ok(ratio(ctx.norm(n, &a, 2.0, &v)?, ctx.norm(n, &b, 2.0, &v)?))
        })?;
        eig.push(r);
    }
    checks.push(drift_check(
        "eigenfunction S2_over_S1".into(),
        ns,
        &eig,
        cfg.drift_tolerance,
        "finite; equals sqrt(Q_2(lambda_1) / Q_1(lambda_1))",
    ));

    checks.push(constant_input(
        ctx,
        "constant_input heat",
        GcalHeat { m: 0 },
        SHeat { m: 1 },
    )?);
    checks.push(truncation(ctx, &heat_kinds(ctx))?);
    Ok(checks)
}

/// Doubling `t_max` moves every `L^2(w)` norm by less than 1%.
pub(crate) fn truncation(ctx: &Context, kinds: &[SquareFunctionKind]) -> Result<Check> {
    const TOL: f64 = 0.01;
    let cfg = ctx.config();
    let n = cfg.refinements[0];
    let g = ctx.grid(n)?;
    let op = ctx.operator(n)?;
    let ladder = cfg.ladder.build(&g)?;
    let doubled = ladder.clone().with_t_max(ladder.t_max * 2.0)?;
    let engine = SquareFunctionEngine::new(&op, doubled)?;
    let unit = WeightModel::uniform(&g);
    let count = ctx.bank().len().min(5);
    let mut worst: f64 = 0.0;
    for &kind in kinds {
        for i in 0..count {
            let f = ctx.sample(n, i)?;
            let base = ctx.norm(n, &ctx.square(n, kind, i)?, 2.0, &unit)?;
            let long = ctx.norm(n, &engine.evaluate(kind, &f)?, 2.0, &unit)?;
            if base > 0.0 {
                worst = worst.max((long - base).abs() / base);
            }
        }
    }
    Ok(
        Check::pass_fail(format!("truncation N={n}"), worst < TOL, TOL)
            .predicting("relative change of every norm under t_max -> 2 t_max")
            .with("max relative change", worst),
    )
}
