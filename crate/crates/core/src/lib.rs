//! Throughput models for SSD-backed key-value operations that traverse data
//! in microsecond-latency memory, and a discrete-event simulator of the
//! mechanism they describe.
//!
//! * [`model`]: closed-form reciprocal throughputs, from the single-threaded
//!   bound up to the extended probabilistic model with tiering, bandwidth caps
//!   and premature eviction.
//! * [`sim`]: one core running cooperative user-level threads over a bounded
//!   prefetch queue and an asynchronous IO device.
//! * [`workload`]: hop-count and IO-count distributions, presets shaped like
//!   common key-value stores, and aggregation into per-IO model parameters.

pub mod error;
pub mod model;
pub mod params;
pub mod sim;
pub mod workload;

pub use error::{Error, Result};
pub use params::{us, CprParams, OperationModelParams, SystemParams};
