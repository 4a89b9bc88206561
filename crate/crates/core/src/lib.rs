//! Feature-pyramid linear forecasters (FPN-fusion and its ablations) next to
//! the Linear / NLinear / DLinear baselines, with a from-scratch numeric core,
//! benchmark data pipeline, deterministic trainer, evaluation tables and
//! parameter/MAC accounting.

pub mod data;
pub mod efficiency;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod models;
pub mod numeric;
pub mod pyramid;
pub mod training;

pub use efficiency::{count_add_ops, count_macs, count_params, instrument_forward, EfficiencyRecord};
pub use error::{Error, Result};
pub use evaluation::{emit_table, evaluate, improvement, BenchReport, BenchRow, Metrics, TableFormat};
pub use models::{init_model, ModelSpec, ModelState, Variant};
pub use numeric::{DenseArray, LinearLayer, OpCounter, PoolConfig};
pub use pyramid::{build_pyramid, level_length, level_lengths, Pyramid, PyramidConfig};
pub use training::{loss_batch, train, TrainConfig, TrainLog};
