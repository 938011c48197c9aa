pub mod asymptotics;
pub mod error;
pub mod grid_chaos;
pub mod isserlis;
pub mod mc_lab;
pub mod ou_sim;
pub mod quadrature;
pub mod randfield;
pub mod seed;

pub use error::{CfouError, Result};
