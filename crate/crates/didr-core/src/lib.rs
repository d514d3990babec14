//! Delay-infectivity / delay-recovery SIR model.
//!
//! An SIR model with vital dynamics in which both the infectivity and the
//! recovery carry a constant time delay:
//!
//! ```text
//! S' = lambda - omega e^{-gamma tau1} S(t) I(t - tau1) - gamma S(t)
//! I' = omega e^{-gamma tau1} S(t) I(t - tau1)
//!        - mu e^{-gamma tau2} I(t - tau2) - gamma I(t)
//! R' = mu e^{-gamma tau2} I(t - tau2) - gamma R(t)
//! ```
//!
//! The recovery waiting time follows the delay exponential distribution
//! (valid for mu*tau2 <= 1/e), and the age-dependent infectivity is the
//! ratio rho(t) = Theta(t - tau1) phi(t - tau1)/phi(t) of its survival
//! function.
//!
//! Crate layout:
//! - [`dexp`]: the delay exponential function, its survival/density/
//!   infectivity forms, and recovery-age sampling;
//! - [`dde`]: a fixed-step RK4 integrator with dense cubic-Hermite history
//!   for up to two constant delayed reads of the infected component;
//! - [`sir`]: the model right-hand side, its reductions, and steady states;
//! - [`ctrw`]: an agent-based Monte Carlo simulation of the underlying
//!   stochastic process, used to validate the mean-field equations;
//! - [`metrics`]: peak/oscillation/sustain summaries of trajectories.
//!
//! # Example
//!
//! ```
//! use didr_core::dde::{integrate, EpidemicState, StepConfig};
//! use didr_core::sir::{steady_endemic, DelayedSirModel, ModelParams};
//!
//! // lambda, gamma, omega, mu, tau1, tau2
//! let params = ModelParams::new(0.5, 0.001, 0.02, 3.678794411714423, 1.0, 0.1)?;
//! let model = DelayedSirModel::new(&params);
//! let cfg = StepConfig::new(0.002, 50.0)?.with_record_every(25);
//! let start = EpidemicState::new(498.0, 2.0, 0.0);
//! let traj = integrate(&model, start, params.delays(), &cfg)?;
//! assert!(traj.final_state().i > 0.0);
//!
//! let endemic = steady_endemic(&params)?.expect("endemic state exists");
//! assert!(endemic.i_star > 0.0);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

mod dd;

pub mod ctrw;
pub mod dde;
pub mod dexp;
pub mod metrics;
pub mod sir;

pub use ctrw::{Agent, Counts, EnsembleStats, OracleConfig};
pub use dde::{Compartment, DdeError, EpidemicState, StateDeriv, StepConfig, Trajectory};
pub use dexp::DexpParams;
pub use metrics::{PeakDetection, TrajectoryMetrics};
pub use sir::{ModelParams, Reduction, SteadyState, SteadyStateKind};
