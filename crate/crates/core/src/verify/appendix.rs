use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AppendixCase, Check, Context};
use crate::error::Result;
use crate::mesh::{Grid, WeightModel};

/// Allowed shortfall of the measured slope below the predicted exponent.
const SLOPE_SLACK: f64 = 0.5;

/// `G^alpha(x) = sum_{y in B(x, alpha t)} |h(y)| w(y) h^n / w(B(y, alpha t))`.
fn g_alpha(grid: &Grid, w: &WeightModel<f64>, h: &[f64], radius: f64) -> Vec<f64> {
    let masses = w.masses(grid);
    let balls = grid.ball_sums(&masses, radius);
    let density: Vec<f64> = h
        .iter()
        .zip(&masses)
        .zip(&balls)
        .map(|((h, m), b)| h.abs() * m / b)
        .collect();
    grid.ball_sums(&density, radius)
}

/// `int (G^alpha)^{1/q} v dw` with `v = 1`.
fn side(grid: &Grid, w: &WeightModel<f64>, h: &[f64], radius: f64, q: f64) -> f64 {
    let masses = w.masses(grid);
    g_alpha(grid, w, h, radius)
        .iter()
        .zip(&masses)
        .map(|(g, m)| g.powf(q.recip()) * m)
        .sum()
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn run_case(ctx: &Context, case: &AppendixCase, index: usize) -> Result<Vec<Check>> {
    let cfg = ctx.config();
    let a = &cfg.appendix;
    let dim = cfg.dim as f64;
    let predicted = dim * case.r * (1.0 / case.s - 1.0 / case.q);
    let mut out = vec![];
    for &n in &cfg.refinements {
        let g = ctx.grid(n)?;
        let w = WeightModel::power(&g, case.weight_alpha)?;
        let mut rng =
            ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1000 * index as u64 + n as u64));
        let h: Vec<f64> = (0..g.num_cells())
            .map(|_| rng.gen_range(0.0..1.0))
            .collect();
        let base = side(&g, &w, &h, a.t, case.q);
        let ratios: Vec<f64> = a
            .alphas
            .iter()
            .map(|&al| side(&g, &w, &h, al * a.t, case.q) / base)
            .collect();
        let label = format!(
            "w=|x|^{} r={} s={} q={} N={n}",
            case.weight_alpha, case.r, case.s, case.q
        );

        let unit = a
            .alphas
            .iter()
            .zip(&ratios)
            .filter(|(al, _)| **al == 1.0)
            .all(|(_, r)| *r == 1.0);
        out.push(
            Check::pass_fail(format!("identity_aperture {label}"), unit, 0.0)
                .predicting("the two sides coincide at alpha = 1"),
        );

        let mut check = Check::report(
            format!("aperture_sweep {label}"),
            format!("ratio <= C alpha^{predicted}"),
        );
        for (al, r) in a.alphas.iter().zip(&ratios) {
            check = check.with(format!("alpha={al}"), *r);
        }
        out.push(check);

        if a.alphas.len() >= 2 {
            let xs: Vec<f64> = a.alphas.iter().map(|x| x.ln()).collect();
            let ys: Vec<f64> = ratios.iter().map(|x| x.ln()).collect();
            let s = slope(&xs, &ys);
            out.push(
                Check::pass_fail(
                    format!("aperture_slope {label}"),
                    s >= predicted - SLOPE_SLACK,
                    SLOPE_SLACK,
                )
                .predicting(format!("log-log slope >= {predicted} - {SLOPE_SLACK}"))
                .with("slope", s)
                .with("predicted exponent", predicted),
            );
        }
    }
    Ok(out)
}

pub fn suite_appendix_q(ctx: &Context) -> Result<Vec<Check>> {
    let mut out = vec![];
    for (i, case) in ctx.config().appendix.cases.iter().enumerate() {
        out.extend(run_case(ctx, case, i)?);
    }
    Ok(out)
}
