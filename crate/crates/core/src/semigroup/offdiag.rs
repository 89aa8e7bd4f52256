//! Ball-to-annulus decay of the unrescaled heat family `(tL)^m e^{-tL}` and of
//! `sqrt(t) grad e^{-tL}`, with `p = q = 2` and annuli `C_j = 2^{j+1}B \ 2^j B`.

use serde::{Deserialize, Serialize};

use super::{Expansion, Family};
use crate::error::{check_len, invalid, Result};
use crate::mesh::CellSet;
use crate::operator::SpectralOperator;
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeFamily {
    /// `(tL)^m e^{-tL}`.
    Heat { m: u32 },
    /// `sqrt(t) grad (tL)^m e^{-tL}` (centered differences).
    Gradient { m: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusReport {
    pub j: u32,
    pub cells: usize,
    /// `4^j r_B^2 / t`.
    pub scale: f64,
    /// Normalized `B -> C_j` quantity, `None` for an empty annulus.
    pub ball_to_annulus: Option<f64>,
    /// Normalized `C_j -> B` quantity.
    pub annulus_to_ball: Option<f64>,
    /// `ln` of `ball_to_annulus` relative to the previous annulus.
    pub log_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffDiagReport {
    pub center: usize,
    pub radius: f64,
    pub t: f64,
    pub family: ProbeFamily,
    pub ball_to_ball: f64,
    /// `max(r_B / sqrt t, sqrt t / r_B)`.
    pub upsilon: f64,
    pub annuli: Vec<AnnulusReport>,
    /// `-slope` of the least-squares fit of `ln(ball_to_annulus)` against `scale`.
    pub decay_rate: Option<f64>,
}

/// `(1/w(E) sum_E |g|^2 w h^n)^{1/2}` where `g` has `comps` components per cell.
fn average<T: Real>(
    op: &SpectralOperator<T>,
    g: &[Vec<T>],
    over: &CellSet,
    norm_set: &CellSet,
) -> f64 {
    let m = op.masses();
    let den: f64 = norm_set.iter().map(|x| m[x].as_f64()).sum();
    let num: f64 = over
        .iter()
        .map(|x| g.iter().map(|c| c[x].as_f64().powi(2)).sum::<f64>() * m[x].as_f64())
        .sum();
    (num / den).sqrt()
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn restrict<T: Real>(f: &[T], set: &CellSet) -> Vec<T> {
    let mut out = vec![T::zero(); f.len()];
    for x in set.iter() {
        out[x] = f[x];
    }
    out
}

fn evaluate<T: Real>(
    op: &SpectralOperator<T>,
    family: ProbeFamily,
    t: T,
    f: &[T],
) -> Result<Vec<Vec<T>>> {
    let ex = Expansion::new(op, f)?;
    let s = t.sqrt();
    Ok(match family {
        ProbeFamily::Heat { m } => vec![ex.value(Family::heat(m)?, s)],
        ProbeFamily::Gradient { m } => ex.gradient(Family::heat(m)?, s).spatial,
    })
}

/// Off-diagonal probe for the ball `B(center, radius)` at time `t` and annuli
/// `j = 2..=j_max`; requires `2^{j_max+1} radius <= 1/4`.
pub fn offdiag_probe<T: Real>(
    op: &SpectralOperator<T>,
    family: ProbeFamily,
    center: usize,
    radius: T,
    t: T,
    j_max: u32,
    f: &[T],
) -> Result<OffDiagReport> {
    check_len(op.len(), f.len())?;
    let grid = op.grid();
    if center >= op.len() {
        return invalid(format!("center {center} outside the grid"));
    }
    if !(radius > T::zero() && t > T::zero()) {
        return invalid("radius and time must be positive");
    }
    if j_max < 2 || radius.as_f64() * 2f64.powi(j_max as i32 + 1) > 0.25 + 1e-12 {
        return invalid(format!(
            "annuli up to j = {j_max} do not fit the torus at radius {radius}"
        ));
    }
    let ball = grid.ball(center, radius);
    let fb = restrict(f, &ball);
    let from_ball = evaluate(op, family, t, &fb)?;
    let f_norm = average(op, &[fb.clone()], &ball, &ball);
    let b2b = ratio(average(op, &from_ball, &ball, &ball), f_norm);

    let r = radius.as_f64();
    let tf = t.as_f64();
    let mut annuli = Vec::new();
    let mut prev: Option<f64> = None;
    for j in 2..=j_max {
        let outer = grid.ball(center, radius * T::of(2f64.powi(j as i32 + 1)));
        let inner = grid.ball(center, radius * T::of(2f64.powi(j as i32)));
        let annulus = outer.difference(&inner);
        let scale = 4f64.powi(j as i32) * r * r / tf;
        if annulus.is_empty() {
            annuli.push(AnnulusReport {
                j,
                cells: 0,
                scale,
                ball_to_annulus: None,
                annulus_to_ball: None,
                log_ratio: None,
            });
            prev = None;
            continue;
        }
        let b2c = ratio(average(op, &from_ball, &annulus, &outer), f_norm);
        let fc = restrict(f, &annulus);
        let from_annulus = evaluate(op, family, t, &fc)?;
        let c2b = ratio(
            average(op, &from_annulus, &ball, &ball),
            average(op, &[fc], &annulus, &outer),
        );
        let log_ratio = match prev {
            Some(p) if p > 0.0 && b2c > 0.0 => Some((b2c / p).ln()),
            _ => None,
        };
        prev = Some(b2c);
        annuli.push(AnnulusReport {
            j,
            cells: annulus.len(),
            scale,
            ball_to_annulus: Some(b2c),
            annulus_to_ball: Some(c2b),
            log_ratio,
        });
    }

    let pts: Vec<(f64, f64)> = annuli
        .iter()
        .filter_map(|a| {
            a.ball_to_annulus
                .filter(|v| *v > 0.0)
                .map(|v| (a.scale, v.ln()))
        })
        .collect();
    let decay_rate = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        -sxy / sxx
    });
    let q = r / tf.sqrt();
    Ok(OffDiagReport {
        center,
        radius: r,
        t: tf,
        family,
        ball_to_ball: b2b,
        upsilon: q.max(1.0 / q),
        annuli,
        decay_rate,
    })
}
