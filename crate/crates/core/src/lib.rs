pub mod bundles;
pub mod cli;
pub mod error;
pub mod foliation;
pub mod manifold;
pub mod odemap;
pub mod polyalg;
pub mod rom;
pub mod torus;

pub use error::{Error, Result};
