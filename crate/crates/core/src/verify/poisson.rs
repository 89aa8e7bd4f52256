use super::heat::{constant_input, max_excess, truncation, POINTWISE_TOL};
use super::{drift_check, exact, Check, Context};
use crate::error::Result;
use crate::exponents::{
    poisson_upper, power_weight_criticals, range_w, surrogate_endpoints, CriticalPair, ExtReal,
};
use crate::mesh::{lp_norm, WeightModel};
use crate::semigroup::{poisson_eval, PoissonMethod};
use crate::squarefn::SquareFunctionKind;
use crate::squarefn::SquareFunctionKind::{GPoisson, GcalHeat, GcalPoisson, SHeat, SPoisson};

/// Relative agreement required of the eigenmode ratio `(3/8) / (1/8)`.
const ORACLE_TOL: f64 = 1e-3;
const SUBORDINATION_AGREEMENT: f64 = 1e-8;

pub(crate) fn poisson_kinds(ctx: &Context) -> Vec<SquareFunctionKind> {
    let mut kinds = vec![GPoisson { k: 0 }, GcalPoisson { k: 0 }, GcalHeat { m: 0 }];
    for &k in &ctx.config().k_list {
        kinds.extend([
            SPoisson { k },
            SHeat { m: k },
            GPoisson { k },
            GcalPoisson { k },
        ]);
    }
    kinds.sort();
    kinds.dedup();
    kinds
}

/// `W_1^w(0, p_+^{K,*})` with the surrogate `p_+`.
pub(crate) fn poisson_range(ctx: &Context, k: u32) -> Result<(ExtReal, ExtReal)> {
    let cfg = ctx.config();
    let n = cfg.dim as u32;
    let crit = power_weight_criticals(&exact(cfg.weight_alpha)?, n)?;
    let (_, p_plus) = surrogate_endpoints(&crit.r_w, n)?;
    let upper = poisson_upper(&p_plus, k, &crit.r_w, n)?;
    let range = range_w(&ExtReal::zero(), &upper, &CriticalPair::trivial())?;
    Ok((range.lo, range.hi))
}

pub fn suite_poisson_control(ctx: &Context) -> Result<Vec<Check>> {
    let cfg = ctx.config().clone();
    let ns = &cfg.refinements;
    ctx.prefetch(&poisson_kinds(ctx))?;
    let mut checks = vec![];

    for &n in ns {
        let mut ks = vec![0];
        ks.extend(cfg.k_list.iter().copied());
        for k in ks {
            let excess = max_excess(ctx, n, GPoisson { k }, GcalPoisson { k }, 1.0)?;
            checks.push(
                Check::pass_fail(
                    format!("gradient_domination K={k} N={n}"),
                    excess <= POINTWISE_TOL,
                    POINTWISE_TOL,
                )
                .predicting("G_{K,P} f <= Gcal_{K,P} f pointwise")
                .with("max G - Gcal", excess),
            );
        }
    }

    for &k in &cfg.k_list {
        let (lo, hi) = poisson_range(ctx, k)?;
        checks.push(
            Check::report(format!("range K={k}"), format!("p in ({lo}, {hi})"))
                .with("lower", lo.to_f64())
                .with("upper", hi.to_f64()),
        );
        let ps: Vec<f64> = cfg
            .p_list
            .iter()
            .copied()
            .filter(|&p| exact(p).is_ok_and(|q| lo < ExtReal::Finite(q) && ExtReal::Finite(q) < hi))
            .collect();
        let pairs = [
            (
                "s_p_over_s_h",
                SPoisson { k },
                SHeat { m: k },
                "||S_{K,P} f|| <= C ||S_{K,H} f||",
            ),
            (
                "gcal_p_over_gcal_h",
                GcalPoisson { k: 0 },
                GcalHeat { m: 0 },
                "||Gcal_P f|| <= C ||Gcal_H f||",
            ),
            (
                "gcal_kp_over_s_h",
                GcalPoisson { k },
                SHeat { m: k },
                "||Gcal_{K,P} f|| <= C ||S_{K,H} f||",
            ),
        ];
        for &p in &ps {
            for (name, num, den, form) in pairs {
                let series = ns
                    .iter()
                    .map(|&n| ctx.sup_ratio(n, num, den, p, &WeightModel::uniform(&ctx.grid(n)?)))
                    .collect::<Result<Vec<_>>>()?;
                checks.push(drift_check(
                    format!("{name} K={k} p={p}"),
                    ns,
                    &series,
                    cfg.drift_tolerance,
                    form,
                ));
            }
        }
    }

    // eigenmode oracle on the wide ladder
    for &n in ns {
        let ratios = (1..=cfg.modes)
            .map(|k| {
                Ok(ctx.modal_ratio(n, SPoisson { k: 1 }, k)?
                    / ctx.modal_ratio(n, SHeat { m: 1 }, k)?)
            })
            .collect::<Result<Vec<f64>>>()?;
        let worst = ratios
            .iter()
            .map(|r| (r / 3.0 - 1.0).abs())
            .fold(0.0, f64::max);
        let mut check = Check::pass_fail(
            format!("eigen_oracle N={n}"),
            worst <= ORACLE_TOL,
            ORACLE_TOL,
        )
        .predicting("||S_{1,P} phi||^2 / ||S_{1,H} phi||^2 = 3");
        for (k, r) in ratios.iter().enumerate() {
            check = check.with(format!("mode {}", k + 1), *r);
        }
        checks.push(check.with("max relative error", worst));
    }

    checks.push(subordination_agreement(ctx)?);
    checks.push(constant_input(
        ctx,
        "constant_input poisson",
        SPoisson { k: 1 },
        SHeat { m: 1 },
    )?);
    checks.push(truncation(ctx, &poisson_kinds(ctx))?);
    Ok(checks)
}

/// Spectral and subordinated `e^{-t sqrt L} f` in `L^2(w)`.
fn subordination_agreement(ctx: &Context) -> Result<Check> {
    let n = ctx.config().refinements[0];
    let op = ctx.operator(n)?;
    let unit = WeightModel::uniform(op.grid());
    let mut worst: f64 = 0.0;
    for i in 0..ctx.bank().len().min(3) {
        let f = ctx.sample(n, i)?;
        for t in [0.1, 0.5, 1.0, 2.0] {
            let a = poisson_eval(&op, 0, t, &f, PoissonMethod::Spectral)?;
            let b = poisson_eval(&op, 0, t, &f, PoissonMethod::Subordination)?;
            let d: Vec<f64> = a.iter().zip(&b).map(|(a, b)| a - b).collect();
            worst = worst.max(lp_norm(&d, 2.0, &unit, op.weight())?);
        }
    }
    Ok(Check::pass_fail(
        format!("subordination N={n}"),
        worst <= SUBORDINATION_AGREEMENT,
        SUBORDINATION_AGREEMENT,
    )
    .predicting("spectral and subordinated Poisson semigroups agree")
    .with("max L2(w) difference", worst))
}
