//! Shared fixtures for the benchmarks.

use acnn_core::bnn::{self, TrainCfg};
use acnn_core::capmap::compile_chip;
use acnn_core::dataset;
use acnn_core::{BinaryNet, ChipModel, DatasetSplit, MapSpec};

pub struct Fixture {
    pub split: DatasetSplit,
    pub net: BinaryNet,
    pub chip: ChipModel,
}

/// Small trained network and its unit-quantized chip.
pub fn fixture() -> Fixture {
    let split = dataset::generate_dataset(1, 1200, 400).expect("dataset");
    let cfg = TrainCfg { epochs: 30, ..TrainCfg::default() };
    let net = bnn::train(&split, &cfg, 1).expect("train").quantize(&cfg.quant).with_heaviside_output();
    let chip = compile_chip(&net, &MapSpec::default()).expect("compile").quantized().0;
    Fixture { split, net, chip }
}
