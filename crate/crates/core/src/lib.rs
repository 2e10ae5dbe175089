pub mod bounds;
pub mod commands;
pub mod error;
pub mod integrals;
pub mod kernels;
pub mod operators;
pub mod params;
pub mod point;
pub mod quadrature;
pub mod specfun;
pub mod sum;
pub mod zonal;

pub use error::{Error, Result};
