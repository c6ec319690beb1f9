//! Hourly multi-zone economic dispatch driven by synthetic weather, and the
//! ensemble loop that stops once annual results are statistically stable.
//!
//! Weather columns become demand (temperature-driven heating load) and RES
//! availability (wind power curve, PV) through a [`GridConfig`]. Each year is
//! then dispatched by [`solve_dispatch`] as a linear program minimising
//! generation cost plus lost load at VOLL.

pub mod convergence;
mod error;
pub mod feedin;
pub mod lp;
pub mod problem;
pub mod results;
pub mod solve;

pub use convergence::{
    relative_standard_error, run_until_converged, ConvergenceConfig, ConvergenceReport, ConvergenceStats, RunningStats,
};
pub use error::{Error, Result};
pub use problem::{DispatchProblem, GridConfig, Interconnector, Plant, Storage, Zone};
pub use results::DispatchSummary;
pub use solve::{solve_dispatch, DispatchResult};
