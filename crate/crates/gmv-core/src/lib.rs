//! Shrinkage estimation of the global minimum variance portfolio when the
//! number of assets is comparable to the sample size.
//!
//! The crate is organised in five layers:
//!
//! * [`linalg`] — returns matrices, covariance models, the sample covariance
//!   matrix, pseudo-inverses and Haar-distributed rotations.
//! * [`estimators`] — portfolio weight estimators: the traditional plug-in
//!   rule, the bona fide optimal shrinkage estimator (valid on both sides of
//!   the concentration-ratio boundary) and a dominating reference estimator.
//! * [`asymptotics`] — closed-form large-dimensional limits used to sanity
//!   check the finite-sample machinery and to plot theory curves.
//! * [`simulation`] — deterministic Monte Carlo studies over scenario grids.
//! * [`backtest`] — rolling out-of-sample evaluation on return histories.

pub mod asymptotics;
pub mod backtest;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod simulation;

pub use error::{Error, Result};
