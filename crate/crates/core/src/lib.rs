pub mod dispersion;
pub mod asymptotics;
pub mod eigensolver;
pub mod error;
pub mod exec;
pub mod ode;
pub mod profiles;
pub mod rayleigh;

pub use error::{Error, Result};
