//! Seeded test functions defined on the continuous torus, so the same function
//! can be sampled on every refinement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::mesh::Grid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `amp exp(-d(x, center)^2 / (2 width^2))` with the periodic distance.
    Bump {
        center: [f64; 2],
        width: f64,
        amp: f64,
    },
    /// Mean-zero trigonometric polynomial `sum amp cos(2 pi k.x + phase)`.
    Modes { terms: Vec<([i32; 2], f64, f64)> },
    /// Indicator of an axis-parallel periodic box.
    Indicator { lo: [f64; 2], side: [f64; 2] },
}

fn periodic_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

impl TestFunction {
    pub fn eval(&self, x: [f64; 2], dim: usize) -> f64 {
        match self {
            TestFunction::Bump { center, width, amp } => {
                let d2: f64 = (0..dim)
                    .map(|d| periodic_gap(x[d], center[d]).powi(2))
                    .sum();
                amp * (-d2 / (2.0 * width * width)).exp()
            }
            TestFunction::Modes { terms } => terms
                .iter()
                .map(|(k, phase, amp)| {
                    let arg: f64 = (0..dim).map(|d| k[d] as f64 * x[d]).sum();
                    amp * (2.0 * std::f64::consts::PI * arg + phase).cos()
                })
                .sum(),
            TestFunction::Indicator { lo, side } => {
                let inside = (0..dim).all(|d| (x[d] - lo[d]).rem_euclid(1.0) < side[d]);
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Samples at cell centers.
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.num_cells())
            .map(|c| self.eval(grid.center(c), grid.dim()))
            .collect()
    }

    pub fn label(&self) -> &'static str {
        match self {
            TestFunction::Bump { .. } => "bump",
            TestFunction::Modes { .. } => "modes",
            TestFunction::Indicator { .. } => "indicator",
        }
    }
}

/// Bumps, low-frequency mode mixtures and box indicators in rotation.
pub fn function_bank(dim: usize, size: usize, seed: u64) -> Vec<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|i| match i % 3 {
            0 => TestFunction::Bump {
                center: [rng.gen(), rng.gen()],
                width: rng.gen_range(0.08..0.2),
                amp: rng.gen_range(0.5..2.0),
            },
            1 => {
                let count = rng.gen_range(2..=4);
                let terms = (0..count)
                    .map(|_| {
                        let mut k = [
                            rng.gen_range(-2..=2),
                            if dim == 2 { rng.gen_range(-2..=2) } else { 0 },
                        ];
                        if k == [0, 0] {
                            k[0] = 1;
                        }
                        (
                            k,
                            rng.gen_range(0.0..std::f64::consts::TAU),
                            rng.gen_range(-1.0..1.0),
                        )
                    })
                    .collect();
                TestFunction::Modes { terms }
            }
            _ => TestFunction::Indicator {
                lo: [rng.gen(), rng.gen()],
                side: [rng.gen_range(0.2..0.5), rng.gen_range(0.2..0.5)],
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bank_is_seeded_and_nonzero() {
        let a = function_bank(2, 20, 7);
        assert_eq!(a, function_bank(2, 20, 7));
        assert_ne!(a, function_bank(2, 20, 8));
        let g = Grid::new(2, 16).unwrap();
        for f in &a {
            assert!(f.sample(&g).iter().any(|v| v.abs() > 1e-3), "{f:?}");
        }
    }

    #[test]
    fn modes_have_zero_mean_and_bumps_are_periodic() {
        let g = Grid::new(2, 16).unwrap();
        for f in function_bank(2, 9, 1) {
            if let TestFunction::Modes { .. } = f {
                let mean: f64 = f.sample(&g).iter().sum::<f64>() / 256.0;
                assert!(mean.abs() < 1e-12);
            }
        }
        let b = TestFunction::Bump {
            center: [0.02, 0.5],
            width: 0.1,
            amp: 1.0,
        };
        assert!((b.eval([0.98, 0.5], 2) - b.eval([0.06, 0.5], 2)).abs() < 1e-12);
        let ind = TestFunction::Indicator {
            lo: [0.9, 0.0],
            side: [0.2, 1.0],
        };
        assert_eq!(ind.eval([0.05, 0.3], 2), 1.0);
        assert_eq!(ind.eval([0.5, 0.3], 2), 0.0);
    }
}
