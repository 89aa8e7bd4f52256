use super::{BallFamily, CellSet, Grid, WeightModel};
use crate::error::{check_len, invalid, Result};
use crate::real::Real;

/// `w(S) = sum over S of w(cell) h^dim`.
pub fn measure<T: Real>(w: &WeightModel<T>, set: &CellSet) -> T {
    let vol = T::one() / T::of_usize(w.len());
    set.iter().map(|c| w.value(c)).sum::<T>() * vol
}

/// `||f||_{L^p(v dw)} = (sum |f|^p v w h^dim)^(1/p)`.
pub fn lp_norm<T: Real>(f: &[T], p: T, v: &WeightModel<T>, w: &WeightModel<T>) -> Result<T> {
    if !(p > T::zero()) {
        return invalid(format!("L^p exponent must be positive, got {p}"));
    }
    check_len(w.len(), f.len())?;
    check_len(w.len(), v.len())?;
    let vol = T::one() / T::of_usize(w.len());
    let sum: T = f
        .iter()
        .zip(v.values())
        .zip(w.values())
        .map(|((x, a), b)| x.abs().powf(p) * *a * *b)
        .sum();
    Ok((sum * vol).powf(p.recip()))
}

#[derive(Clone, Copy, Debug)]
pub enum MaximalBase<'a, T> {
    Lebesgue,
    Weighted(&'a WeightModel<T>),
}

/// `M_{p0} f(x) = sup_{B containing x} (average over B of |f|^p0)^(1/p0)` over the
/// ball family of all centers times dyadic radii `h, 2h, ..., 1/2`.
pub fn maximal<T: Real>(grid: &Grid, f: &[T], base: MaximalBase<'_, T>, p0: T) -> Result<Vec<T>> {
    if !(p0 > T::zero()) {
        return invalid(format!("maximal exponent must be positive, got {p0}"));
    }
    check_len(grid.num_cells(), f.len())?;
    let density: Vec<T> = match base {
        MaximalBase::Lebesgue => vec![T::one(); f.len()],
        MaximalBase::Weighted(w) => {
            check_len(grid.num_cells(), w.len())?;
            w.values().to_vec()
        }
    };
    let powered: Vec<T> = f
        .iter()
        .zip(&density)
        .map(|(x, d)| x.abs().powf(p0) * *d)
        .collect();
    let family = BallFamily::<T>::maximal(grid);
    let mut best = vec![T::zero(); f.len()];
    for &r in family.radii() {
        let num = grid.ball_sums(&powered, r);
        let den = grid.ball_sums(&density, r);
        let avg: Vec<T> = num.iter().zip(&den).map(|(a, b)| *a / *b).collect();
        let offs = grid.offsets_within(r);
        for (x, slot) in best.iter_mut().enumerate() {
            // balls of radius r containing x are centered in B(x, r)
            for o in offs {
                let a = avg[grid.shift(x, o.delta)];
                if a > *slot {
                    *slot = a;
                }
            }
        }
    }
    Ok(best.into_iter().map(|m| m.powf(p0.recip())).collect())
}

/// `max over the family of w(2B) / w(B)`.
pub fn doubling_constant<T: Real>(grid: &Grid, w: &WeightModel<T>, family: &BallFamily<T>) -> T {
    let mut worst = T::one();
    for &r in family.radii() {
        let small = grid.ball_sums(w.values(), r);
        let big = grid.ball_sums(w.values(), r + r);
        for (s, b) in small.iter().zip(&big) {
            worst = worst.max(*b / *s);
        }
    }
    worst
}
