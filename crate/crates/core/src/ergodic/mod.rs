//! Statistics along orbits of the diagonal flow: Levy constants, the
//! distribution of `beta_n`, time averages of indicators and the cusp.

mod beta;
mod birkhoff;
mod cusp;
mod levy;
pub mod stats;

pub use beta::{beta_distribution, sequence_betas, BetaHistogram};
pub use birkhoff::{birkhoff_average, ErgodicAverageCurve, Observable, DEFAULT_DT, MAX_DT};
pub use cusp::{cusp_scaling, log_grid, time_outside, CuspRow, CuspScaling};
pub use levy::{estimate_levy, sample_theta, time_budget, LevyEstimate, LevyRun, THETA_BITS};
