//! Parameter sweeps over qubit count and truncation method, with CSV/JSON
//! records, SVG plots and the acceptance checks.

pub mod checks;
pub mod config;
mod error;
pub mod plot;
pub mod record;
pub mod run;

pub use config::{Method, SweepConfig};
pub use error::{Result, SweepError};
pub use record::SweepRecord;
pub use run::{compute_sweep, run_sweep, SweepOutput};
