//! Excitatory-inhibitory rate reservoirs with inhibitory balance control,
//! ridge readouts, benchmark tasks and an experiment runner.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64` for everyday use.

pub mod balance;
pub mod error;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod readout;
pub mod reservoir;
pub mod scalar;
pub mod seed;
pub mod tasks;

pub use balance::{
    adapt, adapt_step, design_one_step, sample_targets, AdaptationConfig, AdaptationOutcome,
    DesignIssue, DesignReport, InputSource, TargetMode, TargetRates, TraceRecord,
};
pub use error::{Error, Result};
pub use readout::{predict_closed_loop, predict_open_loop, train_ridge, SplitSpec};
pub use reservoir::{
    build_reservoir, inverse_sigmoid, sigmoid, BalanceMode, DaleMode, NetworkConfig, NeuronType,
};
pub use scalar::Real;
pub use tasks::{generate, TaskData, TaskKind};

pub type Reservoir = reservoir::EIReservoir<f64>;
pub type Reservoir32 = reservoir::EIReservoir<f32>;
pub type Readout = readout::Readout<f64>;
pub type Readout32 = readout::Readout<f32>;
