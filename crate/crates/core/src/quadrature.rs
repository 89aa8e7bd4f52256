//! Gauss–Legendre rules and an adaptive Gauss–Kronrod (7, 15) integrator for
//! vector-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::real::Real;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

// Kronrod 15-point abscissae (nonnegative half) and weights, with the
// embedded 7-point Gauss weights at the odd positions.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and the `l2` norm of the Kronrod–Gauss difference on `[a, b]`.
fn gk15<T: Real, F>(f: &F, a: T, b: T) -> (Vec<T>, T)
where
    F: Fn(T) -> Vec<T>,
{
    let half = (b - a) * T::of(0.5);
    let mid = a + half;
    let fc = f(mid);
    let mut kron: Vec<T> = fc.iter().map(|&v| v * T::of(WGK[7])).collect();
    let mut gauss: Vec<T> = fc.iter().map(|&v| v * T::of(WG[3])).collect();
    for (j, &x) in XGK.iter().enumerate().take(7) {
        let dx = half * T::of(x);
        let lo = f(mid - dx);
        let hi = f(mid + dx);
        for k in 0..kron.len() {
            let s = lo[k] + hi[k];
            kron[k] += T::of(WGK[j]) * s;
            if j % 2 == 1 {
                gauss[k] += T::of(WG[j / 2]) * s;
            }
        }
    }
    let mut err = T::zero();
    for k in 0..kron.len() {
        kron[k] *= half;
        gauss[k] *= half;
        let d = kron[k] - gauss[k];
        err += d * d;
    }
    (kron, err.sqrt())
}

struct Piece<T> {
    a: T,
    b: T,
    value: Vec<T>,
    err: T,
}

impl<T: Real> PartialEq for Piece<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for Piece<T> {}
impl<T: Real> PartialOrd for Piece<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Piece<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .partial_cmp(&other.err)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.a.partial_cmp(&self.a).unwrap_or(Ordering::Equal))
    }
}

/// Result of an adaptive integration.
#[derive(Clone, Debug, PartialEq)]
pub struct Integral<T> {
    pub value: Vec<T>,
    /// Estimated `l2` error of `value`.
    pub error: T,
    pub evaluations: usize,
}

/// Adaptive G7K15 on `[a, b]` for a vector-valued integrand, bisecting the
/// piece with the largest error until the summed error estimate is below
/// `tol`. The error of a vector is measured in the Euclidean norm.
pub fn adaptive_gk<T: Real, F>(f: &F, a: T, b: T, tol: T, max_pieces: usize) -> Result<Integral<T>>
where
    F: Fn(T) -> Vec<T>,
{
    let (value, err) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    let mut total_err = err;
    heap.push(Piece { a, b, value, err });
    let mut evaluations = 15;
    while total_err > tol && heap.len() < max_pieces {
        let worst = heap.pop().expect("nonempty");
        let mid = (worst.a + worst.b) * T::of(0.5);
        let (lv, le) = gk15(f, worst.a, mid);
        let (rv, re) = gk15(f, mid, worst.b);
        evaluations += 30;
        total_err = total_err - worst.err + le + re;
        heap.push(Piece {
            a: worst.a,
            b: mid,
            value: lv,
            err: le,
        });
        heap.push(Piece {
            a: mid,
            b: worst.b,
            value: rv,
            err: re,
        });
    }
    // recompute the error sum from scratch to avoid drift in the running total
    let mut pieces = heap.into_vec();
    pieces.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap_or(Ordering::Equal));
    let error = pieces.iter().map(|p| p.err).sum::<T>();
    let dim = pieces[0].value.len();
    let mut value = vec![T::zero(); dim];
    for p in &pieces {
        for (acc, v) in value.iter_mut().zip(&p.value) {
            *acc += *v;
        }
    }
    if error > tol {
        return Err(Error::Quadrature {
            residual: error.as_f64(),
            target: tol.as_f64(),
        });
    }
    Ok(Integral {
        value,
        error,
        evaluations,
    })
}
