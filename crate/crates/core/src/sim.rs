//! Behavioural simulation of the compiled chip.
//!
//! One inference takes one PC1/PC2 pair per layer. During PC1 of cycle `k`
//! every neuron of layer `k` charges its two trees from the power clock and
//! the comparator decides at the peak. During PC2 the decisions are latched
//! and routed to the next layer. Neurons in one phase only read latched
//! values from earlier phases, so the evaluation order inside a phase cannot
//! change the result.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bnn::{decode_one_hot, BinaryNet, BnnError};
use crate::capmap::{AcnConfig, Side};
use crate::chip::{ChipModel, ComparatorModel, ResetVoltages};
use crate::dataset::Image64;
use crate::rng;

const TAG_MISMATCH: u64 = 0x4D15;
const TAG_OFFSET: u64 = 0x0FF5;
const TAG_OP: u64 = 0x0B5E;
const TAG_SWEEP: u64 = 0x5EE9;

/// Relative tie tolerance on `Δv`, scaled by the power-clock peak.
pub const DV_TIE_EPS: f64 = 1e-12;

/// One neuron with mismatch applied, ready to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedNeuron {
    pub pos: Vec<(usize, f64)>,
    pub neg: Vec<(usize, f64)>,
    pub bias_pos: f64,
    pub bias_neg: f64,
    pub total_pos: f64,
    pub total_neg: f64,
    /// Static comparator offset, volts.
    pub offset: f64,
}

impl RealizedNeuron {
    fn membrane(&self, x: &[bool], v_peak: f64, reset: &ResetVoltages) -> (f64, f64) {
        let on = |tree: &[(usize, f64)]| tree.iter().filter(|(i, _)| x[*i]).map(|(_, c)| c).sum::<f64>();
        let cp = on(&self.pos) + self.bias_pos;
        let cn = on(&self.neg) + self.bias_neg;
        (reset.vbp + (v_peak - reset.vbp) * cp / self.total_pos, reset.vbn + (v_peak - reset.vbn) * cn / self.total_neg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizedChip {
    pub layers: Vec<Vec<RealizedNeuron>>,
    pub comparator: ComparatorModel,
    pub reset: ResetVoltages,
    pub chip_seed: u64,
}

fn perturb(c: f64, unit: f64, sigma: f64, seed: u64, tags: &[u64]) -> f64 {
    if sigma == 0.0 || c == 0.0 {
        return c;
    }
    // A capacitor of n unit cells averages n independent unit errors.
    let z: f64 = rng::stream(seed, tags).sample(StandardNormal);
    (c * (1.0 + sigma * (unit / c).sqrt() * z)).max(0.0)
}

fn realize_neuron(cfg: &AcnConfig, chip: &ChipModel, layer: usize, neuron: usize) -> RealizedNeuron {
    let (seed, sigma, unit) = (chip.chip_seed, chip.mismatch_sigma, chip.spec.unit_cap);
    let (l, n) = (layer as u64, neuron as u64);
    let tree = |side: Side, s: u64| -> Vec<(usize, f64)> {
        cfg.tree(side)
            .iter()
            .map(|syn| {
                (syn.input, perturb(syn.cap_ff, unit, sigma, seed, &[TAG_MISMATCH, l, n, s, 0, syn.input as u64]))
            })
            .collect()
    };
    let pos = tree(Side::Pos, 0);
    let neg = tree(Side::Neg, 1);
    let bias_pos = perturb(cfg.bias_pos, unit, sigma, seed, &[TAG_MISMATCH, l, n, 0, 1]);
    let bias_neg = perturb(cfg.bias_neg, unit, sigma, seed, &[TAG_MISMATCH, l, n, 1, 1]);
    let ballast_pos = perturb(cfg.ballast_pos, unit, sigma, seed, &[TAG_MISMATCH, l, n, 0, 2]);
    let ballast_neg = perturb(cfg.ballast_neg, unit, sigma, seed, &[TAG_MISMATCH, l, n, 1, 2]);
    let total_pos = pos.iter().map(|p| p.1).sum::<f64>() + bias_pos + ballast_pos + cfg.parasitic_pos;
    let total_neg = neg.iter().map(|p| p.1).sum::<f64>() + bias_neg + ballast_neg + cfg.parasitic_neg;
    let offset = if chip.comparator.offset_sigma == 0.0 {
        0.0
    } else {
        let z: f64 = rng::stream(seed, &[TAG_OFFSET, l, n]).sample(StandardNormal);
        chip.comparator.offset_sigma * z
    };
    RealizedNeuron { pos, neg, bias_pos, bias_neg, total_pos, total_neg, offset }
}

impl ChipModel {
    /// Draws this chip's capacitor mismatch and comparator offsets.
    pub fn realize(&self) -> RealizedChip {
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(li, layer)| layer.iter().enumerate().map(|(ni, cfg)| realize_neuron(cfg, self, li, ni)).collect())
            .collect();
        RealizedChip { layers, comparator: self.comparator, reset: self.reset, chip_seed: self.chip_seed }
    }
}

/// Clock phase of the two-phase power clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    /// Charge layer `layer` and compare at the peak.
    Pc1 { cycle: usize, layer: usize },
    /// Latch layer `layer` and route it onward.
    Pc2 { cycle: usize, layer: usize },
}

/// Phase sequence of one inference through `n_layers` layers.
pub fn schedule(n_layers: usize) -> Vec<Phase> {
    (0..n_layers).flat_map(|l| [Phase::Pc1 { cycle: l + 1, layer: l }, Phase::Pc2 { cycle: l + 1, layer: l }]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerTrace {
    pub pc1_cycle: usize,
    pub v_plus: Vec<f64>,
    pub v_minus: Vec<f64>,
    /// Comparator error (offset plus noise) per neuron.
    pub comparator_error: Vec<f64>,
    pub bits: Vec<bool>,
    pub ties: Vec<bool>,
}

impl LayerTrace {
    pub fn delta_v(&self, neuron: usize) -> f64 {
        self.v_plus[neuron] - self.v_minus[neuron]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpTrace {
    pub v_peak: f64,
    pub layers: Vec<LayerTrace>,
    pub class: usize,
    pub ambiguous: bool,
    /// PC1 cycles until the output word is valid.
    pub valid_after_cycles: usize,
}

impl OpTrace {
    pub fn output_bits(&self) -> &[bool] {
        self.layers.last().map_or(&[], |l| l.bits.as_slice())
    }

    pub fn any_tie(&self) -> bool {
        self.layers.iter().any(|l| l.ties.iter().any(|&t| t))
    }
}

/// Per-decision comparator noise for one inference, drawn in canonical
/// `(layer, neuron)` order from `seed`.
pub fn op_noise(chip: &RealizedChip, seed: Option<u64>) -> Vec<Vec<f64>> {
    let sigma = chip.comparator.noise_sigma;
    match seed {
        Some(s) if sigma > 0.0 => {
            let mut r = rng::stream(s, &[TAG_OP]);
            chip.layers.iter().map(|l| l.iter().map(|_| sigma * r.sample::<f64, _>(StandardNormal)).collect()).collect()
        }
        _ => chip.layers.iter().map(|l| vec![0.0; l.len()]).collect(),
    }
}

/// Runs one inference. `noise_seed = None` disables per-decision noise.
pub fn simulate_op(chip: &RealizedChip, x: &[bool], v_peak: f64, noise_seed: Option<u64>) -> OpTrace {
    let noise = op_noise(chip, noise_seed);
    simulate_with_noise(chip, x, v_peak, &noise, None)
}

/// Runs one inference with explicit noise and an optional per-layer
/// evaluation order inside each PC1 phase.
pub fn simulate_with_noise(
    chip: &RealizedChip,
    x: &[bool],
    v_peak: f64,
    noise: &[Vec<f64>],
    order: Option<&[Vec<usize>]>,
) -> OpTrace {
    let mut latched: Vec<bool> = x.to_vec();
    let mut pending: Option<LayerTrace> = None;
    let mut layers = Vec::with_capacity(chip.layers.len());
    let tie_tol = DV_TIE_EPS * v_peak.abs().max(1.0);

    for phase in schedule(chip.layers.len()) {
        match phase {
            Phase::Pc1 { cycle, layer } => {
                let neurons = &chip.layers[layer];
                let n = neurons.len();
                let mut t = LayerTrace {
                    pc1_cycle: cycle,
                    v_plus: vec![0.0; n],
                    v_minus: vec![0.0; n],
                    comparator_error: vec![0.0; n],
                    bits: vec![false; n],
                    ties: vec![false; n],
                };
                let identity: Vec<usize>;
                let idx: &[usize] = match order {
                    Some(o) => &o[layer],
                    None => {
                        identity = (0..n).collect();
                        &identity
                    }
                };
                for &j in idx {
                    let nr = &neurons[j];
                    let (vp, vn) = nr.membrane(&latched, v_peak, &chip.reset);
                    let err = nr.offset + noise[layer][j];
                    let d = vp - vn + err;
                    t.v_plus[j] = vp;
                    t.v_minus[j] = vn;
                    t.comparator_error[j] = err;
                    t.ties[j] = d.abs() <= tie_tol;
                    t.bits[j] = d > tie_tol;
                }
                pending = Some(t);
            }
            Phase::Pc2 { .. } => {
                let t = pending.take().expect("PC2 follows PC1");
                latched = t.bits.clone();
                layers.push(t);
            }
        }
    }
    let (class, ambiguous) = decode_one_hot(layers.last().map_or(&[][..], |l| l.bits.as_slice()));
    OpTrace { v_peak, valid_after_cycles: layers.len(), layers, class, ambiguous }
}

pub fn write_trace_csv<W: Write>(trace: &OpTrace, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "layer",
        "neuron",
        "pc1_cycle",
        "v_plus",
        "v_minus",
        "delta_v",
        "comparator_error",
        "bit",
        "tie",
    ])?;
    for (li, l) in trace.layers.iter().enumerate() {
        for j in 0..l.bits.len() {
            out.write_record([
                (li + 1).to_string(),
                j.to_string(),
                l.pc1_cycle.to_string(),
                l.v_plus[j].to_string(),
                l.v_minus[j].to_string(),
                l.delta_v(j).to_string(),
                l.comparator_error[j].to_string(),
                u8::from(l.bits[j]).to_string(),
                u8::from(l.ties[j]).to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub v_peak: f64,
    pub iterations: usize,
    pub chip_seeds: Vec<u64>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { v_peak: 1.5, iterations: 100, chip_seeds: vec![1, 2, 3, 4, 5] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BitErrorEvent {
    pub iteration: usize,
    pub sample: usize,
    pub layer: usize,
    pub neuron: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChipRun {
    pub chip_seed: u64,
    /// Hardware accuracy per iteration.
    pub accuracy: Vec<f64>,
    /// Fraction of samples whose output word equals the software word, per iteration.
    pub matching: Vec<f64>,
    /// Bit errors against the software bits, `[layer][neuron]`.
    pub bit_errors: Vec<Vec<u64>>,
    pub events: Vec<BitErrorEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub config: McConfig,
    pub samples: usize,
    pub software_accuracy: f64,
    pub chips: Vec<ChipRun>,
    /// Output-word mismatches per sample over every chip and iteration.
    pub mismatch_counts: Vec<u32>,
    /// `Δv` of the noiseless, mismatch-free chip, `[sample][layer][neuron]`.
    pub predicted_dv: Vec<Vec<Vec<f64>>>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, var.sqrt())
}

impl McReport {
    pub fn accuracy_mean_std(&self) -> (f64, f64) {
        let all: Vec<f64> = self.chips.iter().flat_map(|c| c.accuracy.iter().copied()).collect();
        mean_std(&all)
    }

    pub fn mean_matching(&self) -> f64 {
        let all: Vec<f64> = self.chips.iter().flat_map(|c| c.matching.iter().copied()).collect();
        mean_std(&all).0
    }

    /// Fraction of samples whose output word matched in every run.
    pub fn always_matching_fraction(&self) -> f64 {
        if self.samples == 0 {
            return 0.0;
        }
        self.mismatch_counts.iter().filter(|&&c| c == 0).count() as f64 / self.samples as f64
    }

    pub fn total_bit_errors(&self) -> Vec<Vec<u64>> {
        let mut out: Vec<Vec<u64>> =
            self.predicted_dv.first().map_or(vec![], |s| s.iter().map(|l| vec![0; l.len()]).collect());
        for c in &self.chips {
            for (o, l) in out.iter_mut().zip(&c.bit_errors) {
                for (a, b) in o.iter_mut().zip(l) {
                    *a += b;
                }
            }
        }
        out
    }

    pub fn summary(&self) -> McSummary {
        let (accuracy_mean, accuracy_std) = self.accuracy_mean_std();
        McSummary {
            samples: self.samples,
            iterations: self.config.iterations,
            chips: self.chips.len(),
            v_peak: self.config.v_peak,
            software_accuracy: self.software_accuracy,
            accuracy_mean,
            accuracy_std,
            matching_mean: self.mean_matching(),
            always_matching_fraction: self.always_matching_fraction(),
            bit_errors: self.total_bit_errors(),
        }
    }
}

/// Compact statistics for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub samples: usize,
    pub iterations: usize,
    pub chips: usize,
    pub v_peak: f64,
    pub software_accuracy: f64,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub matching_mean: f64,
    pub always_matching_fraction: f64,
    pub bit_errors: Vec<Vec<u64>>,
}

struct IterationOutcome {
    correct: usize,
    matched: usize,
    mismatched: Vec<usize>,
    events: Vec<BitErrorEvent>,
}

/// Monte-Carlo inference over `images` for every chip seed in `cfg`.
///
/// Bits are compared with the software network `net`; the predicted `Δv`
/// comes from `chip` with mismatch and comparator errors removed.
pub fn run_split(chip: &ChipModel, net: &BinaryNet, images: &[Image64], cfg: &McConfig) -> Result<McReport, BnnError> {
    let software: Vec<_> = images.iter().map(|im| net.infer_image(im)).collect::<Result<_, _>>()?;
    let inputs: Vec<[bool; 64]> = images.iter().map(Image64::bits).collect();
    let software_accuracy = if images.is_empty() {
        0.0
    } else {
        software.iter().zip(images).filter(|(s, im)| !s.ambiguous && s.class == im.label.index()).count() as f64
            / images.len() as f64
    };

    let ideal = chip.noiseless().realize();
    let predicted_dv: Vec<Vec<Vec<f64>>> = inputs
        .par_iter()
        .map(|x| {
            let t = simulate_op(&ideal, x, cfg.v_peak, None);
            t.layers.iter().map(|l| (0..l.bits.len()).map(|j| l.delta_v(j)).collect()).collect()
        })
        .collect();

    let mut mismatch_counts = vec![0u32; images.len()];
    let mut chips = Vec::with_capacity(cfg.chip_seeds.len());
    for &seed in &cfg.chip_seeds {
        let real = chip.with_seed(seed).realize();
        let outcomes: Vec<IterationOutcome> = (0..cfg.iterations)
            .into_par_iter()
            .map(|it| {
                let mut o = IterationOutcome { correct: 0, matched: 0, mismatched: vec![], events: vec![] };
                for (s, x) in inputs.iter().enumerate() {
                    let op_seed = rng::derive_seed(seed, &[TAG_OP, it as u64, s as u64]);
                    let t = simulate_op(&real, x, cfg.v_peak, Some(op_seed));
                    if !t.ambiguous && t.class == images[s].label.index() {
                        o.correct += 1;
                    }
                    if t.output_bits() == software[s].output_bits() {
                        o.matched += 1;
                    } else {
                        o.mismatched.push(s);
                    }
                    for (li, (hw, sw)) in t.layers.iter().zip(&software[s].bits).enumerate() {
                        for (j, (a, b)) in hw.bits.iter().zip(sw).enumerate() {
                            if a != b {
                                o.events.push(BitErrorEvent { iteration: it, sample: s, layer: li, neuron: j });
                            }
                        }
                    }
                }
                o
            })
            .collect();

        let n = images.len().max(1) as f64;
        let mut bit_errors: Vec<Vec<u64>> = chip.layers.iter().map(|l| vec![0; l.len()]).collect();
        let mut run =
            ChipRun { chip_seed: seed, accuracy: vec![], matching: vec![], bit_errors: vec![], events: vec![] };
        for o in outcomes {
            run.accuracy.push(o.correct as f64 / n);
            run.matching.push(o.matched as f64 / n);
            for s in o.mismatched {
                mismatch_counts[s] += 1;
            }
            for e in &o.events {
                bit_errors[e.layer][e.neuron] += 1;
            }
            run.events.extend(o.events);
        }
        run.bit_errors = bit_errors;
        chips.push(run);
    }

    Ok(McReport { config: cfg.clone(), samples: images.len(), software_accuracy, chips, mismatch_counts, predicted_dv })
}

/// Order statistics of a set of magnitudes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub min: f64,
    pub p10: f64,
    pub median: f64,
    pub mean: f64,
    pub p90: f64,
    pub max: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Summary {
        let mut v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return Summary::default();
        }
        v.sort_by(f64::total_cmp);
        Summary {
            count: v.len(),
            min: v[0],
            p10: quantile(&v, 0.1),
            median: quantile(&v, 0.5),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            p90: quantile(&v, 0.9),
            max: v[v.len() - 1],
        }
    }
}

/// Counts of `values` in bins of `width` starting at zero; the last bin
/// collects everything at or above `width * (bins - 1)`.
pub fn histogram(values: &[f64], width: f64, bins: usize) -> Vec<usize> {
    let mut h = vec![0; bins];
    for &v in values {
        let b = ((v / width).floor().max(0.0) as usize).min(bins - 1);
        h[b] += 1;
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DvBucket {
    pub lo: f64,
    pub hi: f64,
    pub decisions: u64,
    pub errors: u64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaVmReport {
    pub threshold: f64,
    /// `|Δv|` over every neuron of every sample.
    pub all: Summary,
    /// `|Δv|` over every neuron of samples that mismatched at least once.
    pub mismatching_samples: Summary,
    /// `|Δv|` at each bit error.
    pub bit_errors: Summary,
    pub bit_errors_per_layer: Vec<Summary>,
    /// Share of bit errors whose `|Δv|` is below `threshold`.
    pub errors_below_threshold: f64,
    /// First-layer error rate against `|Δv|`.
    pub buckets: Vec<DvBucket>,
}

pub const DEFAULT_BUCKET_EDGES: [f64; 8] = [0.0, 0.005, 0.01, 0.02, 0.03, 0.05, 0.1, f64::INFINITY];

/// Relates bit errors to the predicted membrane difference.
pub fn delta_vm_analysis(report: &McReport, threshold: f64, edges: &[f64]) -> DeltaVmReport {
    let pred = &report.predicted_dv;
    let all = Summary::of(pred.iter().flatten().flatten().map(|v| v.abs()));
    let mismatching_samples = Summary::of(
        pred.iter()
            .zip(&report.mismatch_counts)
            .filter(|(_, &c)| c > 0)
            .flat_map(|(s, _)| s.iter().flatten().map(|v| v.abs())),
    );
    let events = || report.chips.iter().flat_map(|c| c.events.iter());
    let dv = |e: &BitErrorEvent| pred[e.sample][e.layer][e.neuron].abs();
    let errs: Vec<f64> = events().map(dv).collect();
    let bit_errors = Summary::of(errs.iter().copied());
    let n_layers = pred.first().map_or(0, Vec::len);
    let bit_errors_per_layer = (0..n_layers).map(|l| Summary::of(events().filter(|e| e.layer == l).map(dv))).collect();
    let errors_below_threshold =
        if errs.is_empty() { 0.0 } else { errs.iter().filter(|&&v| v < threshold).count() as f64 / errs.len() as f64 };

    let runs = (report.chips.len() * report.config.iterations) as u64;
    let mut buckets: Vec<DvBucket> =
        edges.windows(2).map(|w| DvBucket { lo: w[0], hi: w[1], decisions: 0, errors: 0, rate: 0.0 }).collect();
    let find = |v: f64| edges.windows(2).position(|w| v >= w[0] && v < w[1]);
    for s in pred {
        if let Some(l1) = s.first() {
            for v in l1 {
                if let Some(b) = find(v.abs()) {
                    buckets[b].decisions += runs;
                }
            }
        }
    }
    for e in events().filter(|e| e.layer == 0) {
        if let Some(b) = find(dv(e)) {
            buckets[b].errors += 1;
        }
    }
    for b in &mut buckets {
        b.rate = if b.decisions > 0 { b.errors as f64 / b.decisions as f64 } else { 0.0 };
    }
    DeltaVmReport {
        threshold,
        all,
        mismatching_samples,
        bit_errors,
        bit_errors_per_layer,
        errors_below_threshold,
        buckets,
    }
}

/// True when the noiseless chip gives the same bits at every peak voltage.
pub fn voltage_scale_check(chip: &RealizedChip, x: &[bool], v_peaks: &[f64]) -> bool {
    let quiet = RealizedChip { comparator: ComparatorModel { offset_sigma: 0.0, noise_sigma: 0.0 }, ..chip.clone() };
    let quiet = RealizedChip {
        layers: quiet
            .layers
            .iter()
            .map(|l| l.iter().map(|n| RealizedNeuron { offset: 0.0, ..n.clone() }).collect())
            .collect(),
        ..quiet
    };
    let mut reference: Option<Vec<Vec<bool>>> = None;
    for &v in v_peaks {
        let bits: Vec<Vec<bool>> = simulate_op(&quiet, x, v, None).layers.into_iter().map(|l| l.bits).collect();
        match &reference {
            None => reference = Some(bits),
            Some(r) if *r != bits => return false,
            _ => {}
        }
    }
    true
}

/// Output-word error rate against the noise-free result at each peak voltage.
///
/// Trial `t` on image `i` uses the same standard-normal draws at every
/// voltage, so rates are compared on common random numbers.
pub fn noise_error_rates(
    chip: &RealizedChip,
    images: &[Image64],
    v_peaks: &[f64],
    trials: usize,
    seed: u64,
) -> Vec<f64> {
    v_peaks
        .iter()
        .map(|&v| {
            let errors: usize = images
                .par_iter()
                .enumerate()
                .map(|(i, im)| {
                    let x = im.bits();
                    let clean = simulate_op(chip, &x, v, None);
                    (0..trials)
                        .filter(|&t| {
                            let s = rng::derive_seed(seed, &[TAG_SWEEP, t as u64, i as u64]);
                            simulate_op(chip, &x, v, Some(s)).output_bits() != clean.output_bits()
                        })
                        .count()
                })
                .sum();
            errors as f64 / (images.len() * trials).max(1) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bnn::{Activation, LayerSpec};
    use crate::capmap::{compile_chip, MapSpec};

    fn net() -> BinaryNet {
        let l1 = vec![vec![0.5, -0.2, 0.1, 0.0], vec![-0.3, 0.9, 0.0, 0.2], vec![0.1, 0.1, -0.6, 0.4]];
        let l2 = vec![vec![0.4, -0.4, 0.2], vec![-0.2, 0.5, 0.3]];
        BinaryNet::new(vec![LayerSpec::new(l1, Activation::Heaviside), LayerSpec::new(l2, Activation::Heaviside)], 0.1)
            .unwrap()
    }

    fn all_inputs(n: usize) -> Vec<Vec<bool>> {
        (0u32..(1 << n)).map(|m| (0..n).map(|i| (m >> i) & 1 == 1).collect()).collect()
    }

    #[test]
    fn noiseless_matches_software() {
        let net = net();
        let chip = compile_chip(&net, &MapSpec::default()).unwrap();
        let real = chip.noiseless().realize();
        for x in all_inputs(4) {
            let sw = net.infer(&x).unwrap();
            let hw = simulate_op(&real, &x, 1.5, None);
            let bits: Vec<Vec<bool>> = hw.layers.iter().map(|l| l.bits.clone()).collect();
            assert_eq!(bits, sw.bits);
            assert_eq!(hw.valid_after_cycles, 2);
        }
    }

    #[test]
    fn phase_order() {
        let s = schedule(2);
        assert_eq!(
            s,
            vec![
                Phase::Pc1 { cycle: 1, layer: 0 },
                Phase::Pc2 { cycle: 1, layer: 0 },
                Phase::Pc1 { cycle: 2, layer: 1 },
                Phase::Pc2 { cycle: 2, layer: 1 },
            ]
        );
    }

    #[test]
    fn evaluation_order_is_irrelevant() {
        let chip = compile_chip(&net(), &MapSpec::default()).unwrap().with_seed(5);
        let real = chip.realize();
        let x = [true, false, true, true];
        let noise = op_noise(&real, Some(17));
        let a = simulate_with_noise(&real, &x, 1.5, &noise, None);
        let rev = vec![vec![2, 1, 0], vec![1, 0]];
        let b = simulate_with_noise(&real, &x, 1.5, &noise, Some(&rev));
        assert_eq!(a, b);
    }

    #[test]
    fn realization_is_seeded() {
        let chip = compile_chip(&net(), &MapSpec::default()).unwrap();
        assert_eq!(chip.with_seed(3).realize(), chip.with_seed(3).realize());
        assert_ne!(chip.with_seed(3).realize(), chip.with_seed(4).realize());
        let ideal = chip.noiseless().realize();
        assert!((ideal.layers[0][0].total_pos - chip.layers[0][0].total(Side::Pos)).abs() < 1e-9);
    }

    #[test]
    fn summary_and_histogram() {
        let s = Summary::of([3.0, 1.0, 2.0, 4.0]);
        assert_eq!(s.median, 2.5);
        assert_eq!(s.min, 1.0);
        assert_eq!(histogram(&[0.0, 0.5, 1.2, 9.0], 1.0, 3), vec![2, 1, 1]);
    }

    #[test]
    fn trace_csv_has_row_per_neuron() {
        let chip = compile_chip(&net(), &MapSpec::default()).unwrap();
        let t = simulate_op(&chip.realize(), &[true; 4], 1.5, Some(1));
        let mut buf = Vec::new();
        write_trace_csv(&t, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 5);
    }
}
