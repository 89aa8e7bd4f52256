//! Numerical toolkit for degenerate elliptic operators `L_w = -w^{-1} div(w A grad)`
//! on the periodic unit torus: weights and their Muckenhoupt / reverse Hölder
//! constants, exact exponent calculus, heat and Poisson semigroups, conical
//! square functions, tent-space and Carleson functionals, and verification
//! suites that exercise the identities and inequalities relating them.
//!
//! Numerical modules are generic over [`Real`] (`f32` or `f64`); the exponent
//! calculus is exact over [`exponents::ExactInt`] rationals. The aliases below
//! fix the common `f64` / `i64` instantiations.

pub mod error;
pub mod exponents;
pub mod mesh;
pub mod operator;
pub mod quadrature;
pub mod real;
pub mod semigroup;
pub mod squarefn;
pub mod tent;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use real::Real;

pub type WeightModel64 = mesh::WeightModel<f64>;
pub type ExtRational = exponents::ExtReal<i64>;
pub type ExtBigRational = exponents::ExtReal<num_bigint::BigInt>;
pub type SpectralOperator64 = operator::SpectralOperator<f64>;
pub type TentSpace64 = tent::TentSpace<f64>;
pub type TimeLadder64 = semigroup::TimeLadder<f64>;
