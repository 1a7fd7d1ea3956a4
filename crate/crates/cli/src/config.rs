//! Run configuration: built-in defaults, overlaid by a TOML file, overlaid by flags.

use std::fs;
use std::path::{Path, PathBuf};

use acnn_core::chip::ComparatorModel;
use acnn_core::dataset::{GenConfig, DEFAULT_TEST_SIZE};
use acnn_core::energy::{EnergyModelCfg, NoiseTrials, DEFAULT_GAMMA};
use acnn_core::sim::McConfig;
use acnn_core::transient::PcgState;
use acnn_core::{MapSpec, TrainCfg};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use toml::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    /// Format of per-sample tables.
    pub format: Format,
    /// Also emit SVG plots where a command has any.
    pub svg: bool,
    pub dataset: DatasetCfg,
    pub train: TrainCfg,
    pub map: MapSpec,
    pub chip: ChipCfg,
    pub infer: InferCfg,
    pub montecarlo: MonteCarloCfg,
    pub transient: TransientCfg,
    pub energy: EnergyCfg,
    pub report: ReportCfg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetCfg {
    pub n_train: usize,
    pub n_test: usize,
    pub generator: GenConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChipCfg {
    pub mismatch_sigma: f64,
    pub comparator: ComparatorModel,
    /// Snap capacitors to the layout unit.
    pub unit_quantize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferCfg {
    pub v_peak: f64,
    pub chip_seed: u64,
    pub noiseless: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloCfg {
    pub v_peak: f64,
    pub iterations: usize,
    pub chip_seeds: Vec<u64>,
    /// Membrane-difference threshold for the bit-error analysis, volts.
    pub dv_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TransientKind {
    /// Abrupt charge of an RC branch.
    Step,
    /// Charge then discharge through the same resistor.
    Cycle,
    /// Raised-cosine ramp.
    Ramp,
    /// Power-clock generator pulses.
    Pcg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransientCfg {
    pub kind: TransientKind,
    pub r_ohm: f64,
    pub c_farad: f64,
    pub v: f64,
    /// Ramp period over RC.
    pub period_ratio: f64,
    pub cycles: usize,
    /// Fixed step in seconds; 0 picks one from the circuit.
    pub dt: f64,
    /// PCG load capacitance, farads.
    pub load_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyCfg {
    pub ops: usize,
    pub chip_seed: u64,
    pub gamma: f64,
    pub checkpoints: Vec<usize>,
    pub model: EnergyModelCfg,
    pub pcg: PcgState,
    pub noise: NoiseTrials,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCfg {
    pub ratio_ops: u32,
    pub n_synapses: usize,
    pub gamma: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out: PathBuf::from("out"),
            format: Format::Csv,
            svg: false,
            dataset: DatasetCfg { n_train: 4000, n_test: DEFAULT_TEST_SIZE, generator: GenConfig::default() },
            train: TrainCfg::default(),
            map: MapSpec::default(),
            chip: ChipCfg { mismatch_sigma: 0.01, comparator: ComparatorModel::default(), unit_quantize: true },
            infer: InferCfg { v_peak: 1.5, chip_seed: 1, noiseless: false },
            montecarlo: MonteCarloCfg {
                v_peak: 1.5,
                iterations: 100,
                chip_seeds: vec![1, 2, 3, 4, 5],
                dv_threshold: 0.03,
            },
            transient: TransientCfg {
                kind: TransientKind::Ramp,
                r_ohm: 1e3,
                c_farad: 1e-12,
                v: 1.0,
                period_ratio: 100.0,
                cycles: 3,
                dt: 0.0,
                load_cap: 10e-12,
            },
            energy: EnergyCfg {
                ops: 500,
                chip_seed: 1,
                gamma: DEFAULT_GAMMA,
                checkpoints: vec![1, 10, 30, 100, 500],
                model: EnergyModelCfg::default(),
                pcg: PcgState::default(),
                noise: NoiseTrials::default(),
            },
            report: ReportCfg { ratio_ops: 30, n_synapses: 816, gamma: DEFAULT_GAMMA },
        }
    }
}

impl RunConfig {
    pub fn mc(&self) -> McConfig {
        McConfig {
            v_peak: self.montecarlo.v_peak,
            iterations: self.montecarlo.iterations,
            chip_seeds: self.montecarlo.chip_seeds.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        self.map.validate()?;
        if !(self.infer.v_peak > 0.0) || !(self.montecarlo.v_peak > 0.0) {
            return bad("v_peak must be positive");
        }
        if self.montecarlo.iterations == 0 || self.montecarlo.chip_seeds.is_empty() {
            return bad("montecarlo needs at least one iteration and one chip seed");
        }
        if self.chip.mismatch_sigma < 0.0
            || self.chip.comparator.offset_sigma < 0.0
            || self.chip.comparator.noise_sigma < 0.0
        {
            return bad("chip sigmas must be nonnegative");
        }
        if self.energy.ops == 0 {
            return bad("energy.ops must be at least 1");
        }
        if !(self.energy.gamma > 0.0 && self.energy.gamma <= 1.0)
            || !(self.report.gamma > 0.0 && self.report.gamma <= 1.0)
        {
            return bad("gamma must lie in (0, 1]");
        }
        if self.train.epochs == 0 || self.train.hidden == 0 || !(self.train.learning_rate > 0.0) {
            return bad("train.epochs, train.hidden and train.learning_rate must be positive");
        }
        let t = &self.transient;
        if !(t.r_ohm > 0.0 && t.c_farad > 0.0 && t.period_ratio > 0.0) || t.dt < 0.0 || t.cycles == 0 {
            return bad("transient parameters must be positive");
        }
        self.energy.pcg.validate()?;
        Ok(())
    }
}

/// Defaults with `path` (if any) laid over them. Unknown keys are rejected.
pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
    let defaults = RunConfig::default();
    let Some(path) = path else {
        return Ok(defaults);
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let file: toml::Table = text.parse().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut base = Value::try_from(&defaults).map_err(|e| CliError::Config(e.to_string()))?;
    overlay(&mut base, Value::Table(file), "")?;
    base.try_into().map_err(|e: toml::de::Error| CliError::Config(format!("{}: {e}", path.display())))
}

fn overlay(base: &mut Value, top: Value, at: &str) -> Result<(), CliError> {
    match (base, top) {
        (Value::Table(b), Value::Table(t)) => {
            for (k, v) in t {
                let key = if at.is_empty() { k.clone() } else { format!("{at}.{k}") };
                match b.get_mut(&k) {
                    Some(slot) => overlay(slot, v, &key)?,
                    None => return Err(CliError::Config(format!("unknown key `{key}`"))),
                }
            }
            Ok(())
        }
        (b, t) => {
            *b = t;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_file(text: &str) -> Result<RunConfig, CliError> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        fs::write(&p, text).unwrap();
        load(Some(&p))
    }

    #[test]
    fn defaults_survive_toml_round_trip() {
        let d = RunConfig::default();
        let text = toml::to_string(&d).unwrap();
        assert_eq!(with_file(&text).unwrap(), d);
        d.validate().unwrap();
    }

    #[test]
    fn partial_file_overrides_only_its_keys() {
        let c = with_file("seed = 9\n[train]\nepochs = 3\n[energy.noise]\ntrials = 7\n").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.hidden, TrainCfg::default().hidden);
        assert_eq!(c.energy.noise.trials, 7);
        assert_eq!(c.energy.noise.threshold, NoiseTrials::default().threshold);
    }

    #[test]
    fn unknown_and_mistyped_keys_rejected() {
        let e = with_file("[train]\nepochz = 3\n").unwrap_err();
        assert!(e.to_string().contains("train.epochz"), "{e}");
        assert!(matches!(with_file("seed = \"x\"\n"), Err(CliError::Config(_))));
    }
}
