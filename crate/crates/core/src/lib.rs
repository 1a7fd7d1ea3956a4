//! Toolchain for adiabatic capacitive neural networks: a synthetic arrow
//! dataset, binary network training and quantization, weight-to-capacitor
//! compilation, behavioral chip simulation, power-clock transients and
//! energy bookkeeping.

pub mod bnn;
pub mod capmap;
pub mod chip;
pub mod dataset;
pub mod energy;
pub mod rng;
pub mod sim;
pub mod transient;

pub use bnn::{BinaryNet, LayerSpec, QuantSpec, TrainCfg};
pub use capmap::{AcnConfig, MapSpec};
pub use chip::ChipModel;
pub use dataset::{Class, DatasetSplit, Image64};
pub use sim::{OpTrace, RealizedChip};
