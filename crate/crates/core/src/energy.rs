//! Energy bookkeeping per operation and across tank-draining experiments.
//!
//! Every ACN tree is a branch of the power-clock load: its connected
//! capacitance `C_on` (active synapses plus bias) in series with the rest of
//! the node `D − C_on`, so the clock sees `C_on·(D − C_on)/D`. One operation
//! issues three PC1 pulses. Layer 1 computes on pulse 1 while layer 2 sees
//! reset inputs; layer 2 computes on pulse 2; pulse 3 repeats pulse 2.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capmap::Side;
use crate::chip::ChipModel;
use crate::dataset::Image64;
use crate::rng;
use crate::sim::simulate_op;
use crate::transient::{drain_tank, resonant_frequency, solve_pcg, PcgConfig, PcgState, PulseWidth, TransientError};

pub const DEFAULT_GAMMA: f64 = 2.0 / 3.0;

/// Reference per-sample energies (pJ) for four test images at 1, 10 and 30 ops.
pub const REFERENCE_TABLES: &str = include_str!("../data/energy_tables.csv");
const TAG_MULTI: u64 = 0x3A17;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("total energy {e_total} pJ is below the PCG baseline {e_pcg} pJ")]
    Nonphysical { e_total: f64, e_pcg: f64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("tables disagree: {0}")]
    SampleMismatch(String),
    #[error("table line {line}: {message}")]
    Table { line: u64, message: String },
    #[error(transparent)]
    Transient(#[from] TransientError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyMode {
    /// Closed-form slow-ramp loss per branch.
    Behavioral,
    /// Integrate the PCG with the pulse's load lumped into one RC branch.
    Coupled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyModelCfg {
    pub mode: EnergyMode,
    /// On-resistance in series with every branch, ohms.
    pub switch_r: f64,
    /// Share of the clock period spent ramping up.
    pub ramp_fraction: f64,
    pub cmos_vdd: f64,
    pub pulses_per_op: usize,
    pub pcg: PcgConfig,
    /// Steps per resonant period in coupled mode.
    pub steps_per_period: usize,
}

impl Default for EnergyModelCfg {
    fn default() -> Self {
        Self {
            mode: EnergyMode::Behavioral,
            switch_r: 1000.0,
            ramp_fraction: 0.5,
            cmos_vdd: 1.5,
            pulses_per_op: 3,
            pcg: PcgConfig::default(),
            steps_per_period: 4000,
        }
    }
}

/// Branch loads of one operation, fF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpLoads {
    /// Effective load of every branch, per pulse.
    pub pulses: Vec<Vec<f64>>,
    /// Capacitance toggled once per layer evaluation (layer 1 on `x`, layer 2
    /// on the layer-1 outputs).
    pub switched_ff: f64,
}

fn branch_load(connected: f64, total: f64) -> f64 {
    if total > 0.0 {
        connected * (total - connected) / total
    } else {
        0.0
    }
}

/// Inputs seen by every layer when the chip computes without errors.
pub fn layer_inputs(chip: &ChipModel, x: &[bool]) -> Vec<Vec<bool>> {
    let mut inputs = vec![x.to_vec()];
    for layer in &chip.layers {
        let cur = inputs.last().expect("nonempty");
        let next: Vec<bool> = layer
            .iter()
            .map(|n| {
                let (vp, vn) = n.membrane(cur, 1.0);
                vp - vn > crate::sim::DV_TIE_EPS
            })
            .collect();
        inputs.push(next);
    }
    inputs.pop();
    inputs
}

pub fn op_loads(chip: &ChipModel, x: &[bool], pulses: usize) -> OpLoads {
    let inputs = layer_inputs(chip, x);
    let loads_for = |active: &[bool]| -> Vec<Vec<f64>> {
        // active[l] says whether layer l's inputs are applied on this pulse.
        chip.layers
            .iter()
            .enumerate()
            .map(|(l, layer)| {
                let zeros = vec![false; inputs[l].len()];
                let xin = if active[l] { &inputs[l] } else { &zeros };
                layer
                    .iter()
                    .flat_map(|n| [Side::Pos, Side::Neg].map(|s| branch_load(n.connected(s, xin), n.total(s))))
                    .collect()
            })
            .collect()
    };
    let n = chip.layers.len();
    let mut per_pulse = Vec::with_capacity(pulses);
    for p in 0..pulses {
        // Layer l has its inputs from pulse l on.
        let active: Vec<bool> = (0..n).map(|l| l <= p).collect();
        per_pulse.push(loads_for(&active).concat());
    }
    let all_on = loads_for(&vec![true; n]);
    OpLoads { switched_ff: all_on.iter().flatten().sum(), pulses: per_pulse }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpEnergy {
    pub v_peak: f64,
    pub switched_ff: f64,
    /// Mean PC load over the pulses, fF.
    pub mean_load_ff: f64,
    /// Loss in the ACN branches.
    pub adiabatic_pj: f64,
    /// PCG loss with the chip attached.
    pub pcg_pj: f64,
    /// PCG loss with no chip attached at the same tank voltage.
    pub pcg_baseline_pj: f64,
    pub cmos_pj: f64,
}

impl OpEnergy {
    /// Energy drawn from the tank.
    pub fn total_pj(&self) -> f64 {
        self.adiabatic_pj + self.pcg_pj
    }
}

/// Closed-form loss of one full clock pulse (ramp up and recovery) through `r`
/// into `c` farads with period `period`.
pub fn pulse_loss(r: f64, c: f64, period: f64, ramp_fraction: f64, v: f64) -> f64 {
    2.0 * PI * PI / 8.0 * (r * c / (ramp_fraction * period)) * c * v * v
}

/// Per-pulse PCG series loss for a lightly damped LC swing with tank voltage `v_t`.
pub fn pcg_pulse_loss(r_series: f64, c_node: f64, omega: f64, v_t: f64) -> f64 {
    r_series * PI * omega * c_node * c_node * v_t * v_t
}

fn period_for(pcg: &PcgState, load_f: f64) -> f64 {
    let node = pcg.c_pc + load_f;
    1.0 / resonant_frequency(pcg.l_pc, node * pcg.c_tank / (node + pcg.c_tank))
}

/// Energy of one operation on input `x` at PC peak `v_peak`.
///
/// `pcg` supplies the inductor, node capacitance and peak gain; its tank
/// voltage is taken as `v_peak / peak_gain`.
pub fn op_energy(
    chip: &ChipModel,
    x: &[bool],
    v_peak: f64,
    pcg: &PcgState,
    cfg: &EnergyModelCfg,
) -> Result<OpEnergy, EnergyError> {
    if cfg.pulses_per_op == 0 || !(cfg.ramp_fraction > 0.0 && cfg.ramp_fraction <= 1.0) {
        return Err(EnergyError::Invalid(format!("{cfg:?}")));
    }
    let loads = op_loads(chip, x, cfg.pulses_per_op);
    let v_t = v_peak / pcg.peak_gain;
    let (mut adiabatic, mut pcg_loss, mut baseline, mut load_sum) = (0.0, 0.0, 0.0, 0.0);
    for branches in &loads.pulses {
        let c_l: f64 = branches.iter().sum::<f64>() * 1e-15;
        load_sum += c_l;
        match cfg.mode {
            EnergyMode::Behavioral => {
                let period = period_for(pcg, c_l);
                let omega = 2.0 * PI / period;
                adiabatic += branches
                    .iter()
                    .map(|&c| pulse_loss(cfg.switch_r, c * 1e-15, period, cfg.ramp_fraction, v_peak))
                    .sum::<f64>();
                pcg_loss += pcg_pulse_loss(cfg.pcg.r_series, pcg.c_pc + c_l, omega, v_t);
                let omega0 = 2.0 * PI / period_for(pcg, 0.0);
                baseline += pcg_pulse_loss(cfg.pcg.r_series, pcg.c_pc, omega0, v_t);
            }
            EnergyMode::Coupled => {
                let sq: f64 = branches.iter().map(|c| c * c).sum::<f64>() * 1e-30;
                let r_eff = if c_l > 0.0 { cfg.switch_r * sq / (c_l * c_l) } else { cfg.switch_r };
                let run = |load: f64| -> Result<(f64, f64), EnergyError> {
                    let state =
                        PcgState { load_cap: load, v_sup: v_t.max(pcg.v_sup), depleted: false, ..pcg.with_v_tank(v_t) };
                    let pcfg = PcgConfig { r_load: r_eff, pulse: PulseWidth::Resonant, recharge: false, ..cfg.pcg };
                    let mut dt = period_for(&state, load) / cfg.steps_per_period as f64;
                    if load > 0.0 {
                        dt = dt.min(r_eff * load / 5.0);
                    }
                    let (_, _, r) = solve_pcg(&state, &pcfg, 1, dt)?;
                    let c = &r.cycles[0];
                    Ok((c.r_load_loss, c.r_series_loss + c.reset_loss))
                };
                let (load_loss, series) = run(c_l)?;
                let (_, base) = run(0.0)?;
                adiabatic += load_loss;
                pcg_loss += series;
                baseline += base;
            }
        }
    }
    Ok(OpEnergy {
        v_peak,
        switched_ff: loads.switched_ff,
        mean_load_ff: load_sum * 1e15 / loads.pulses.len() as f64,
        adiabatic_pj: adiabatic * 1e12,
        pcg_pj: pcg_loss * 1e12,
        pcg_baseline_pj: baseline * 1e12,
        cmos_pj: loads.switched_ff * 1e-15 * cfg.cmos_vdd * cfg.cmos_vdd * 1e12,
    })
}

/// Energy per synapse operation in fJ: `γ·(e_total − e_pcg)/(n_synapses·o_max)`
/// with energies in pJ.
pub fn esop(e_total: f64, e_pcg: f64, o_max: usize, n_synapses: usize, gamma: f64) -> Result<f64, EnergyError> {
    if o_max == 0 || n_synapses == 0 {
        return Err(EnergyError::Invalid("o_max and n_synapses must be at least 1".into()));
    }
    if e_total < e_pcg {
        return Err(EnergyError::Nonphysical { e_total, e_pcg });
    }
    Ok(gamma * (e_total - e_pcg) * 1000.0 / (n_synapses as f64 * o_max as f64))
}

/// Sum that does not depend on the order of `values`.
pub fn ordered_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpRecord {
    pub op: usize,
    pub v_peak: f64,
    pub switched_ff: f64,
    pub adiabatic_pj: f64,
    pub cmos_pj: f64,
    pub pcg_pj: f64,
    /// PCG loss of the separate no-chip run at the same op index.
    pub pcg_baseline_pj: f64,
    /// Misclassification rate under comparator noise at this op.
    pub error_rate: f64,
}

impl OpRecord {
    pub fn total_pj(&self) -> f64 {
        self.adiabatic_pj + self.pcg_pj
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerTotals {
    pub ops: usize,
    pub adiabatic_pj: f64,
    pub cmos_pj: f64,
    pub pcg_pj: f64,
    pub pcg_baseline_pj: f64,
    pub total_pj: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub records: Vec<OpRecord>,
    pub gamma: f64,
    /// Why `gamma` differs from 2/3, if it does.
    pub gamma_justification: Option<String>,
    pub n_synapses: usize,
    /// Set when the tank emptied before all requested ops ran.
    pub truncated: bool,
}

impl EnergyLedger {
    pub fn new(n_synapses: usize) -> Self {
        Self { records: vec![], gamma: DEFAULT_GAMMA, gamma_justification: None, n_synapses, truncated: false }
    }

    pub fn with_gamma(mut self, gamma: f64, justification: &str) -> Result<Self, EnergyError> {
        if justification.trim().is_empty() {
            return Err(EnergyError::Invalid("overriding gamma needs a justification".into()));
        }
        self.gamma = gamma;
        self.gamma_justification = Some(justification.to_string());
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        if self.gamma != DEFAULT_GAMMA && self.gamma_justification.is_none() {
            return Err(EnergyError::Invalid(format!("gamma {} without justification", self.gamma)));
        }
        Ok(())
    }

    pub fn totals(&self) -> LedgerTotals {
        let sum = |f: fn(&OpRecord) -> f64| ordered_sum(self.records.iter().map(f));
        LedgerTotals {
            ops: self.records.len(),
            adiabatic_pj: sum(|r| r.adiabatic_pj),
            cmos_pj: sum(|r| r.cmos_pj),
            pcg_pj: sum(|r| r.pcg_pj),
            pcg_baseline_pj: sum(|r| r.pcg_baseline_pj),
            total_pj: sum(OpRecord::total_pj),
        }
    }

    /// E_SOP over the first `ops` records, fJ.
    pub fn esop_after(&self, ops: usize) -> Result<f64, EnergyError> {
        let head = &self.records[..ops.min(self.records.len())];
        let total = ordered_sum(head.iter().map(OpRecord::total_pj));
        let base = ordered_sum(head.iter().map(|r| r.pcg_baseline_pj));
        esop(total, base, head.len(), self.n_synapses, self.gamma)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "op",
            "v_peak",
            "switched_ff",
            "adiabatic_pj",
            "pcg_pj",
            "pcg_baseline_pj",
            "total_pj",
            "cmos_pj",
            "error_rate",
        ])?;
        for r in &self.records {
            out.write_record([
                r.op.to_string(),
                r.v_peak.to_string(),
                r.switched_ff.to_string(),
                r.adiabatic_pj.to_string(),
                r.pcg_pj.to_string(),
                r.pcg_baseline_pj.to_string(),
                r.total_pj().to_string(),
                r.cmos_pj.to_string(),
                r.error_rate.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseTrials {
    /// Noisy inferences per op; 0 disables the error check.
    pub trials: usize,
    pub seed: u64,
    /// Error-rate threshold for the onset.
    pub threshold: f64,
}

impl Default for NoiseTrials {
    fn default() -> Self {
        Self { trials: 100, seed: 0, threshold: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiOpResult {
    pub ledger: EnergyLedger,
    /// Ops completed before the error rate first exceeded the threshold.
    pub o_max: usize,
    pub v_tank_final: f64,
}

/// Runs `ops` consecutive operations on one image without recharging.
///
/// Each op reads the PC peak from the tank, books its energy, checks the
/// classification under comparator noise and drains the tank. A second tank
/// with no chip attached is drained in step to provide the PCG baseline.
pub fn multi_op_experiment(
    chip: &ChipModel,
    image: &Image64,
    ops: usize,
    pcg: &PcgState,
    cfg: &EnergyModelCfg,
    noise: &NoiseTrials,
) -> Result<MultiOpResult, EnergyError> {
    if ops == 0 {
        return Err(EnergyError::Invalid("ops must be at least 1".into()));
    }
    let x = image.bits();
    let real = chip.realize();
    let n_syn = chip.stats().synapse_sites;
    let mut ledger = EnergyLedger::new(n_syn);
    let mut tank = *pcg;
    let mut bare = *pcg;
    let mut o_max = None;

    for op in 1..=ops {
        if tank.depleted || tank.tank_energy <= 0.0 {
            ledger.truncated = true;
            break;
        }
        let v = tank.v_peak();
        let e = op_energy(chip, &x, v, &tank, cfg)?;
        // The PCG is linear, so its no-chip loss scales with the tank voltage squared.
        let base_pj = e.pcg_baseline_pj * (bare.tank_energy / tank.tank_energy);
        let wrong = (0..noise.trials)
            .filter(|&t| {
                let s = rng::derive_seed(noise.seed, &[TAG_MULTI, op as u64, t as u64]);
                let tr = simulate_op(&real, &x, v, Some(s));
                tr.ambiguous || tr.class != image.label.index()
            })
            .count();
        let error_rate = if noise.trials > 0 { wrong as f64 / noise.trials as f64 } else { 0.0 };
        if o_max.is_none() && error_rate > noise.threshold {
            o_max = Some(op - 1);
        }
        ledger.records.push(OpRecord {
            op,
            v_peak: v,
            switched_ff: e.switched_ff,
            adiabatic_pj: e.adiabatic_pj,
            cmos_pj: e.cmos_pj,
            pcg_pj: e.pcg_pj,
            pcg_baseline_pj: base_pj,
            error_rate,
        });
        tank = drain_tank(&tank, e.total_pj() * 1e-12);
        bare = drain_tank(&bare, base_pj * 1e-12);
    }
    let o_max = o_max.unwrap_or(ledger.records.len());
    Ok(MultiOpResult { ledger, o_max, v_tank_final: tank.v_tank() })
}

/// One row of an imported energy table, pJ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub sample: String,
    pub ops: u32,
    pub acnn_with_pcg_pj: f64,
    pub acnn_without_pcg_pj: f64,
    pub ccnn_pj: f64,
}

/// Energy per (sample, ops) for one design.
pub type EnergyTable = BTreeMap<(String, u32), f64>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImportedTables {
    pub rows: Vec<TableRow>,
}

impl ImportedTables {
    pub fn read_csv<R: Read>(r: R) -> Result<Self, EnergyError> {
        let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r);
        let mut rows = Vec::new();
        for rec in rd.deserialize::<TableRow>() {
            let row = rec.map_err(|e| EnergyError::Table {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            rows.push(row);
        }
        Ok(Self { rows })
    }

    fn column(&self, f: impl Fn(&TableRow) -> f64) -> EnergyTable {
        self.rows.iter().map(|r| ((r.sample.clone(), r.ops), f(r))).collect()
    }

    pub fn acnn_with_pcg(&self) -> EnergyTable {
        self.column(|r| r.acnn_with_pcg_pj)
    }

    pub fn acnn_without_pcg(&self) -> EnergyTable {
        self.column(|r| r.acnn_without_pcg_pj)
    }

    pub fn ccnn(&self) -> EnergyTable {
        self.column(|r| r.ccnn_pj)
    }

    /// E_SOP for every row, fJ, using the with/without-PCG difference as the
    /// PCG share.
    pub fn esop_table(&self, n_synapses: usize, gamma: f64) -> Result<Vec<(String, u32, f64)>, EnergyError> {
        self.rows
            .iter()
            .map(|r| {
                let e_pcg = r.acnn_with_pcg_pj - r.acnn_without_pcg_pj;
                Ok((r.sample.clone(), r.ops, esop(r.acnn_with_pcg_pj, e_pcg, r.ops as usize, n_synapses, gamma)?))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub ops: u32,
    /// CCNN energy over ACNN energy per sample.
    pub per_sample: Vec<(String, f64)>,
    pub average: f64,
}

/// Per-sample and mean CCNN/ACNN energy ratios at `ops` operations.
pub fn comparison_report(acnn: &EnergyTable, ccnn: &EnergyTable, ops: u32) -> Result<RatioSummary, EnergyError> {
    let keys = |t: &EnergyTable| -> Vec<String> { t.keys().filter(|k| k.1 == ops).map(|k| k.0.clone()).collect() };
    let (a, c) = (keys(acnn), keys(ccnn));
    if a != c {
        return Err(EnergyError::SampleMismatch(format!("ACNN samples {a:?} vs CCNN samples {c:?} at {ops} ops")));
    }
    if a.is_empty() {
        return Err(EnergyError::SampleMismatch(format!("no rows at {ops} ops")));
    }
    let per_sample: Vec<(String, f64)> = a
        .into_iter()
        .map(|s| {
            let k = (s.clone(), ops);
            (s, ccnn[&k] / acnn[&k])
        })
        .collect();
    let average = per_sample.iter().map(|p| p.1).sum::<f64>() / per_sample.len() as f64;
    Ok(RatioSummary { ops, per_sample, average })
}
