//! Truncated power–Fourier series arithmetic.

mod elementary;
pub mod fourier;
mod jet;
mod map;
mod monomials;
mod radial;
mod scalar;
mod series;

pub use elementary::{taylor_coefficients, Elementary, TruncatedAlgebra, SINGULAR_THRESHOLD};
pub use fourier::FourierMatrix;
pub use jet::Jet;
pub use map::{compose_jets, lift_elementary, Conjugation, GridPowers, LiftOp, MapPowers, PowerFourierMap};
pub use monomials::Monomials;
pub use radial::ScalarRadialSeries;
pub use scalar::{Scalar, C64};
pub use series::{grid_angles, grid_size, Series};
