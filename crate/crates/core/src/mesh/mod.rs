//! Periodic lattice geometry on the unit torus `[0,1)^dim`.
//!
//! Cells are indexed `i = i0 + N * i1`; the center of cell `(i0, i1)` sits at
//! `((i0 + 1/2) h, (i1 + 1/2) h)` so no center coincides with the origin.
//! Distances between centers are `h * sqrt(k)` for an integer `k`, which the
//! grid stores exactly.

mod cells;
mod measure;
mod weight;

pub use cells::{power_cell_extremes, power_cell_means};
pub use measure::{doubling_constant, lp_norm, maximal, measure, MaximalBase};
pub use weight::{WeightKind, WeightModel};

use crate::error::{invalid, Result};
use crate::real::Real;

/// Largest number of cells the dense operator code accepts.
pub const MAX_CELLS: usize = 4096;

/// Relative shrink applied to every radius before a membership test, so
/// that center distances equal to a radius are consistently excluded.
pub const TIE_BREAK: f64 = 1e-9;

/// Displacement between two cell centers in lattice units.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Offset {
    pub delta: [i64; 2],
    /// Squared length in units of `h^2`.
    pub dist2: u64,
}

#[derive(Clone, Debug)]
pub struct Grid {
    dim: usize,
    n: usize,
    offsets: Vec<Offset>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n
    }
}

impl Eq for Grid {}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return invalid(format!("dim must be 1 or 2, got {dim}"));
        }
        if n < 4 {
            return invalid(format!("cells per side must be at least 4, got {n}"));
        }
        let cells = n.pow(dim as u32);
        if cells > MAX_CELLS {
            return invalid(format!("{cells} cells exceeds the cap of {MAX_CELLS}"));
        }
        let half = (n / 2) as i64;
        let n_i = n as i64;
        // minimal image in (-N/2, N/2]
        let wrap = |k: i64| if k > half { k - n_i } else { k };
        let mut offsets: Vec<Offset> = (0..cells)
            .map(|c| {
                let d0 = wrap((c % n) as i64);
                let d1 = if dim == 2 { wrap((c / n) as i64) } else { 0 };
                Offset {
                    delta: [d0, d1],
                    dist2: (d0 * d0 + d1 * d1) as u64,
                }
            })
            .collect();
        offsets.sort_by_key(|o| (o.dist2, o.delta));
        Ok(Self { dim, n, offsets })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per side `N`.
    pub fn cells_per_side(&self) -> usize {
        self.n
    }

    pub fn num_cells(&self) -> usize {
        self.offsets.len()
    }

    pub fn spacing<T: Real>(&self) -> T {
        T::one() / T::of_usize(self.n)
    }

    /// `h^dim`, the Lebesgue measure of one cell.
    pub fn cell_volume<T: Real>(&self) -> T {
        T::one() / T::of_usize(self.num_cells())
    }

    pub fn coords(&self, cell: usize) -> [usize; 2] {
        if self.dim == 1 {
            [cell, 0]
        } else {
            [cell % self.n, cell / self.n]
        }
    }

    pub fn index(&self, coords: [usize; 2]) -> usize {
        if self.dim == 1 {
            coords[0]
        } else {
            coords[0] + self.n * coords[1]
        }
    }

    pub fn center<T: Real>(&self, cell: usize) -> [T; 2] {
        let h = self.spacing::<T>();
        let half = T::of(0.5);
        let c = self.coords(cell);
        let x0 = (T::of_usize(c[0]) + half) * h;
        let x1 = if self.dim == 2 {
            (T::of_usize(c[1]) + half) * h
        } else {
            T::zero()
        };
        [x0, x1]
    }

    /// Cell reached from `cell` by the lattice displacement `delta` (periodic).
    #[inline]
    pub fn shift(&self, cell: usize, delta: [i64; 2]) -> usize {
        let n = self.n as i64;
        let c = self.coords(cell);
        let a = (c[0] as i64 + delta[0]).rem_euclid(n) as usize;
        if self.dim == 1 {
            a
        } else {
            let b = (c[1] as i64 + delta[1]).rem_euclid(n) as usize;
            a + self.n * b
        }
    }

    /// Neighbor of `cell` `step` cells along `axis`.
    #[inline]
    pub fn neighbor(&self, cell: usize, axis: usize, step: i64) -> usize {
        let mut delta = [0i64; 2];
        delta[axis] = step;
        self.shift(cell, delta)
    }

    /// Centered periodic differences `(f(x + h e_d) - f(x - h e_d)) / 2h`,
    /// one vector per axis.
    pub fn centered_gradient<T: Real>(&self, f: &[T]) -> Vec<Vec<T>> {
        let scale = T::of_usize(self.n) * T::of(0.5);
        (0..self.dim)
            .map(|axis| {
                (0..self.num_cells())
                    .map(|c| (f[self.neighbor(c, axis, 1)] - f[self.neighbor(c, axis, -1)]) * scale)
                    .collect()
            })
            .collect()
    }

    /// Squared periodic distance between centers in units of `h^2`.
    pub fn dist2_units(&self, a: usize, b: usize) -> u64 {
        let n = self.n as i64;
        let half = n / 2;
        let ca = self.coords(a);
        let cb = self.coords(b);
        let mut acc = 0u64;
        for axis in 0..self.dim {
            let mut d = (ca[axis] as i64 - cb[axis] as i64).rem_euclid(n);
            if d > half {
                d = n - d;
            }
            acc += (d * d) as u64;
        }
        acc
    }

    pub fn distance<T: Real>(&self, a: usize, b: usize) -> T {
        T::of(self.dist2_units(a, b) as f64).sqrt() * self.spacing::<T>()
    }

    /// Periodic distance from the center of `cell` to the origin.
    pub fn distance_to_origin<T: Real>(&self, cell: usize) -> T {
        let h = self.spacing::<T>();
        let c = self.coords(cell);
        let mut acc = T::zero();
        for &k in c.iter().take(self.dim) {
            // 2 * (distance in half-cells) to the origin along this axis
            let twice = (2 * k + 1).min(2 * self.n - 2 * k - 1);
            let d = T::of_usize(twice) * h * T::of(0.5);
            acc += d * d;
        }
        acc.sqrt()
    }

    /// All displacements sorted by length.
    pub fn offsets(&self) -> &[Offset] {
        &self.offsets
    }

    /// Displacements whose length is (tie-broken) strictly below `r`.
    pub fn offsets_within<T: Real>(&self, r: T) -> &[Offset] {
        let count = self.count_within(r.as_f64());
        &self.offsets[..count]
    }

    fn count_within(&self, r: f64) -> usize {
        if r <= 0.0 {
            return 0;
        }
        let units = r * self.n as f64 * (1.0 - TIE_BREAK);
        let limit = units * units;
        self.offsets.partition_point(|o| (o.dist2 as f64) < limit)
    }

    /// Whether two centers are within (tie-broken) distance `r`.
    pub fn within<T: Real>(&self, a: usize, b: usize, r: T) -> bool {
        let units = r.as_f64() * self.n as f64 * (1.0 - TIE_BREAK);
        r.as_f64() > 0.0 && (self.dist2_units(a, b) as f64) < units * units
    }

    /// `B(center, r)`: cells whose centers lie at periodic distance below `r`.
    pub fn ball<T: Real>(&self, center: usize, r: T) -> CellSet {
        let cells = self
            .offsets_within(r)
            .iter()
            .map(|o| self.shift(center, o.delta))
            .collect();
        CellSet::from_unsorted(cells)
    }

    /// Sum of `values` over `B(center, r)`.
    pub fn ball_sum<T: Real>(&self, values: &[T], center: usize, r: T) -> T {
        self.offsets_within(r)
            .iter()
            .map(|o| values[self.shift(center, o.delta)])
            .sum()
    }

    /// Ball sums at every center for a fixed radius.
    pub fn ball_sums<T: Real>(&self, values: &[T], r: T) -> Vec<T> {
        let offs = self.offsets_within(r);
        let n = self.n as i64;
        // offsets lie in (-N/2, N/2], so one conditional wrap suffices; the
        // summation order is that of `offs`, as in `ball_sum`
        let wrap = |k: i64| {
            (if k < 0 {
                k + n
            } else if k >= n {
                k - n
            } else {
                k
            }) as usize
        };
        (0..self.num_cells())
            .map(|c| {
                let [c0, c1] = self.coords(c).map(|k| k as i64);
                offs.iter()
                    .map(|o| values[wrap(c0 + o.delta[0]) + self.n * wrap(c1 + o.delta[1])])
                    .sum()
            })
            .collect()
    }

    /// Bound on the periodic distance, `sqrt(dim) / 2`.
    pub fn diameter<T: Real>(&self) -> T {
        T::of(self.dim as f64).sqrt() * T::of(0.5)
    }

    pub fn all_cells(&self) -> CellSet {
        CellSet {
            cells: (0..self.num_cells()).collect(),
        }
    }
}

/// Sorted set of cell indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CellSet {
    cells: Vec<usize>,
}

impl CellSet {
    pub fn from_unsorted(mut cells: Vec<usize>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        Self { cells }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(cell: usize) -> Self {
        Self { cells: vec![cell] }
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().copied()
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.cells.iter().all(|&c| other.contains(c))
    }

    pub fn difference(&self, other: &CellSet) -> CellSet {
        CellSet {
            cells: self.iter().filter(|&c| !other.contains(c)).collect(),
        }
    }
}

/// Dyadic radii `h, 2h, 4h, ...` up to a cap.
#[derive(Clone, Debug, PartialEq)]
pub struct BallFamily<T> {
    radii: Vec<T>,
}

impl<T: Real> BallFamily<T> {
    pub fn dyadic(grid: &Grid, r_max: T) -> Self {
        let mut radii = Vec::new();
        let mut r = grid.spacing::<T>();
        let cap = r_max * (T::one() + T::of(1e-12));
        while r <= cap {
            radii.push(r);
            r = r + r;
        }
        Self { radii }
    }

    /// Family used by the maximal operators: radii up to `1/2`.
    pub fn maximal(grid: &Grid) -> Self {
        Self::dyadic(grid, T::of(0.5))
    }

    /// Family used by the weight-class estimators: radii up to `1/4`.
    pub fn class(grid: &Grid) -> Self {
        Self::dyadic(grid, T::of(0.25))
    }

    pub fn radii(&self) -> &[T] {
        &self.radii
    }

    /// Number of `(center, radius)` pairs on `grid`.
    pub fn size(&self, grid: &Grid) -> usize {
        self.radii.len() * grid.num_cells()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Grid::new(3, 8).is_err());
        assert!(Grid::new(1, 3).is_err());
        assert!(Grid::new(2, 65).is_err());
        assert!(Grid::new(2, 64).is_ok());
    }

    #[test]
    fn distance_is_periodic_and_bounded() {
        let g = Grid::new(2, 8).unwrap();
        let bound = g.diameter::<f64>() + 1e-12;
        for a in 0..g.num_cells() {
            for b in 0..g.num_cells() {
                let d = g.distance::<f64>(a, b);
                assert_eq!(d, g.distance::<f64>(b, a));
                assert!(d <= bound);
            }
        }
        // wrap-around neighbours
        assert_eq!(g.dist2_units(g.index([0, 0]), g.index([7, 0])), 1);
        assert_eq!(g.dist2_units(g.index([0, 0]), g.index([7, 7])), 2);
    }

    #[test]
    fn radius_h_ball_is_a_single_cell() {
        let g = Grid::new(1, 8).unwrap();
        let b = g.ball(3, g.spacing::<f64>());
        assert_eq!(b, CellSet::single(3));
        let b2 = g.ball(3, 2.0 * g.spacing::<f64>());
        assert_eq!(b2.len(), 3);
    }

    #[test]
    fn origin_is_never_a_center() {
        let g = Grid::new(2, 8).unwrap();
        let dmin = (0..g.num_cells())
            .map(|c| g.distance_to_origin::<f64>(c))
            .fold(f64::INFINITY, f64::min);
        // nearest center is (h/2, h/2)
        assert!((dmin - 0.125 / 2f64.sqrt()).abs() < 1e-15);
        let g1 = Grid::new(1, 8).unwrap();
        assert!((g1.distance_to_origin::<f64>(0) - 0.0625).abs() < 1e-15);
        assert!((g1.distance_to_origin::<f64>(7) - 0.0625).abs() < 1e-15);
        assert!((g1.distance_to_origin::<f64>(3) - 0.4375).abs() < 1e-15);
    }

    #[test]
    fn dyadic_family_caps() {
        let g = Grid::new(1, 16).unwrap();
        let fam = BallFamily::<f64>::maximal(&g);
        assert_eq!(fam.radii(), &[0.0625, 0.125, 0.25, 0.5]);
        assert_eq!(BallFamily::<f64>::class(&g).radii().len(), 3);
    }
}
