//! Socioeconomic well-being index toolkit.
//!
//! The pipeline runs bottom-up through the modules:
//! [`panel`] (factor levels to log-returns), [`index`] (equal-weight
//! standardized index and PCA), [`econometrics`] (ARMA(1,1)-GARCH(1,1) and
//! scenario risk measures), [`ghdist`] (generalized hyperbolic laws),
//! [`pricing`] (Esscher risk-neutral Monte Carlo option prices),
//! [`riskbudget`] (Std/ETL Euler budgets) and [`stress`] (CoVaR, CoES, CoETL).

pub mod econometrics;
pub mod error;
pub mod ghdist;
pub mod io;
pub mod index;
pub mod panel;
pub mod pricing;
pub mod riskbudget;
pub mod stress;
pub mod numeric;
pub mod rng;

pub use error::{Error, Result};
