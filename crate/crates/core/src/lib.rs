//! Constant-memory tracking of several quantiles of a non-stationary stream,
//! with estimates that stay strictly ordered at every step.
//!
//! * [`estimators`]: single-quantile DUMIQE and QEWA recursions.
//! * [`joint`]: ShiftQ and CondQ joint trackers plus baselines.
//! * [`streams`]: seeded drifting normal/chi-square streams and their exact quantiles.
//! * [`bench`]: RMSE experiments, step-size sweeps and result tables.
//! * [`detect`]: quantile- and moment-based change detectors and their scoring.
//! * [`io`]: accelerometer CSV ingestion and stream/estimate serialisation.

pub mod bench;
pub mod detect;
pub mod dist;
pub mod error;
pub mod estimators;
pub mod io;
pub mod joint;
pub mod streams;

pub use error::{Error, Result};
