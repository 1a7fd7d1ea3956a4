use std::io::Write;
use std::path::Path;

use acnn_core::bnn::{self, BinaryNet};
use acnn_core::capmap::compile_chip;
use acnn_core::chip::{self, ChipModel};
use acnn_core::dataset::{self, Class, DatasetSplit, Image64, PIXELS};
use acnn_core::energy::{multi_op_experiment, EnergyMode, DEFAULT_GAMMA};
use acnn_core::rng::derive_seed;
use acnn_core::sim::{delta_vm_analysis, run_split, simulate_op, DeltaVmReport, McSummary, DEFAULT_BUCKET_EDGES};
use acnn_core::transient::{
    measure_resonance, slow_ramp_loss, solve_pcg, solve_rc, PcgState, RcCircuit, Source, SwitchState, Waveform,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, TransientKind};
use crate::error::CliError;
use crate::output::Run;
use crate::svg::{line_plot, Series};

const TAG_INFER: u64 = 0x1f3e;

pub const DATASET_FILE: &str = "dataset.txt";
pub const FLOAT_NET_FILE: &str = "net_float.json";
pub const NET_FILE: &str = "net.json";
pub const IDEAL_CHIP_FILE: &str = "chip_ideal.json";
pub const CHIP_FILE: &str = "chip.json";

fn read_dataset(path: &Path) -> Result<DatasetSplit, CliError> {
    dataset::load_dataset(path).map_err(|e| CliError::input(path, "dataset file (run gen-dataset)", e))
}

fn read_net(path: &Path) -> Result<BinaryNet, CliError> {
    bnn::load_net(path).map_err(|e| CliError::input(path, "network JSON (run train/quantize)", e))
}

fn read_chip(path: &Path) -> Result<ChipModel, CliError> {
    chip::load_chip(path).map_err(|e| CliError::input(path, "chip JSON (run map)", e))
}

fn check_net_inputs(net: &BinaryNet, path: &Path) -> Result<(), CliError> {
    if net.inputs() != PIXELS {
        return Err(CliError::input(
            path,
            &format!("a network with {PIXELS} inputs"),
            format!("found {}", net.inputs()),
        ));
    }
    Ok(())
}

fn check_chip_matches(chip: &ChipModel, chip_path: &Path, net: &BinaryNet) -> Result<(), CliError> {
    if chip.shape() != net.shape() {
        return Err(CliError::input(
            chip_path,
            &format!("a chip with shape {:?} to match the network", net.shape()),
            format!("found {:?}", chip.shape()),
        ));
    }
    Ok(())
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

pub fn gen_dataset(cfg: &RunConfig) -> Result<(), CliError> {
    let d = &cfg.dataset;
    let split = dataset::generate_with(&d.generator, cfg.seed, d.n_train, d.n_test)?;
    let mut run = Run::start(cfg, "gen-dataset")?;
    let p = run.write_with(DATASET_FILE, |w| dataset::write_dataset(&split, w).map_err(|e| e.to_string()))?;
    let tc = DatasetSplit::class_counts(&split.train);
    let ts = DatasetSplit::class_counts(&split.test);
    println!("dataset: {} train {:?}, {} test {:?} -> {}", split.train.len(), tc, split.test.len(), ts, p.display());
    run.finish()?;
    Ok(())
}

#[derive(Serialize)]
struct LossRow {
    epoch: usize,
    loss: f64,
}

pub fn train(cfg: &RunConfig, dataset: Option<&Path>) -> Result<(), CliError> {
    let mut run = Run::start(cfg, "train")?;
    let dpath = run.input("dataset", dataset, DATASET_FILE);
    let split = read_dataset(&dpath)?;
    let (net, report) = bnn::train_with_report(&split, &cfg.train, cfg.seed)?;
    let train_acc = net.accuracy(&split.train)?;
    let test_acc = net.accuracy(&split.test)?;
    run.write_text(FLOAT_NET_FILE, &(net.to_json() + "\n"))?;
    let rows: Vec<LossRow> = report.loss.iter().enumerate().map(|(i, &loss)| LossRow { epoch: i + 1, loss }).collect();
    run.write_table("train_loss", &rows)?;
    println!(
        "trained {:?} for {} epochs: train {}, test {} (tanh output)",
        net.shape(),
        cfg.train.epochs,
        pct(train_acc),
        pct(test_acc)
    );
    run.finish()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QuantizeSummary {
    pub float_accuracy: f64,
    pub quantized_tanh_accuracy: f64,
    pub deployed_accuracy: f64,
    pub swap_loss: f64,
    pub synapses: usize,
}

pub fn quantize(cfg: &RunConfig, net: Option<&Path>, dataset: Option<&Path>) -> Result<(), CliError> {
    let mut run = Run::start(cfg, "quantize")?;
    let npath = run.input("float network", net, FLOAT_NET_FILE);
    let dpath = run.input("dataset", dataset, DATASET_FILE);
    let float = read_net(&npath)?;
    check_net_inputs(&float, &npath)?;
    let split = read_dataset(&dpath)?;
    let q = float.quantize(&cfg.train.quant);
    let deployed = q.with_heaviside_output();
    let s = QuantizeSummary {
        float_accuracy: float.accuracy(&split.test)?,
        quantized_tanh_accuracy: q.accuracy(&split.test)?,
        deployed_accuracy: deployed.accuracy(&split.test)?,
        swap_loss: 0.0,
        synapses: deployed.synapse_count(),
    };
    let s = QuantizeSummary { swap_loss: s.quantized_tanh_accuracy - s.deployed_accuracy, ..s };
    run.write_text(NET_FILE, &(deployed.to_json() + "\n"))?;
    run.write_json("quantize.json", &s)?;
    println!(
        "accuracy: float {}, {}-bit tanh {}, deployed Heaviside {} (swap loss {:.2} pts)",
        pct(s.float_accuracy),
        cfg.train.quant.bits,
        pct(s.quantized_tanh_accuracy),
        pct(s.deployed_accuracy),
        100.0 * s.swap_loss
    );
    run.finish()?;
    Ok(())
}

#[derive(Serialize)]
struct MapSummary {
    shape: Vec<usize>,
    synapse_sites: usize,
    neurons: usize,
    unit_quantized: bool,
    unit_cap_ff: f64,
    synapse_ff: f64,
    bias_ff: f64,
    ballast_ff: f64,
    parasitic_ff: f64,
    drawn_ff: f64,
    parasitic_ballast_fraction: f64,
    quant_mean_abs_error_ff: f64,
    max_denominator_mismatch_ff: f64,
}

pub fn map(cfg: &RunConfig, net: Option<&Path>) -> Result<(), CliError> {
    let mut run = Run::start(cfg, "map")?;
    let npath = run.input("network", net, NET_FILE);
    let net = read_net(&npath)?;
    check_net_inputs(&net, &npath)?;
    let mut ideal = compile_chip(&net, &cfg.map)?;
    ideal.mismatch_sigma = cfg.chip.mismatch_sigma;
    ideal.comparator = cfg.chip.comparator;
    let (chip, quant) = if cfg.chip.unit_quantize { ideal.quantized() } else { (ideal.clone(), Default::default()) };
    run.write_text(IDEAL_CHIP_FILE, &(ideal.to_json() + "\n"))?;
    run.write_text(CHIP_FILE, &(chip.to_json() + "\n"))?;
    run.write_table("cap_errors", &quant.errors)?;
    let b = chip.stats();
    let s = MapSummary {
        shape: chip.shape(),
        synapse_sites: b.synapse_sites,
        neurons: b.neurons,
        unit_quantized: cfg.chip.unit_quantize,
        unit_cap_ff: cfg.map.unit_cap,
        synapse_ff: b.synapse,
        bias_ff: b.bias,
        ballast_ff: b.ballast,
        parasitic_ff: b.parasitic,
        drawn_ff: b.drawn(),
        parasitic_ballast_fraction: b.parasitic_ballast_fraction(),
        quant_mean_abs_error_ff: quant.mean_abs_error,
        max_denominator_mismatch_ff: chip.layers.iter().flatten().map(|n| n.denominator_mismatch()).fold(0.0, f64::max),
    };
    run.write_json("map.json", &s)?;
    println!(
        "chip {:?}: {} synapse sites, {:.1} pF drawn, ballast from parasitics {:.1}%, mean |quantization error| {:.3} fF",
        s.shape,
        s.synapse_sites,
        s.drawn_ff / 1000.0,
        100.0 * s.parasitic_ballast_fraction,
        s.quant_mean_abs_error_ff
    );
    run.finish()?;
    Ok(())
}

#[derive(Serialize)]
struct InferRow {
    sample: usize,
    label: usize,
    software: usize,
    hardware: usize,
    hardware_ambiguous: bool,
    matches: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct InferSummary {
    pub samples: usize,
    pub noiseless: bool,
    pub v_peak: f64,
    pub software_accuracy: f64,
    pub hardware_accuracy: f64,
    pub matching: f64,
    pub ties: usize,
}

pub fn infer(cfg: &RunConfig, chip: Option<&Path>, net: Option<&Path>, dataset: Option<&Path>) -> Result<(), CliError> {
    let ic = &cfg.infer;
    let mut run = Run::start(cfg, "infer")?;
    let default_chip = if ic.noiseless { IDEAL_CHIP_FILE } else { CHIP_FILE };
    let cpath = run.input("chip", chip, default_chip);
    let npath = run.input("network", net, NET_FILE);
    let dpath = run.input("dataset", dataset, DATASET_FILE);
    let model = read_chip(&cpath)?;
    let net = read_net(&npath)?;
    check_chip_matches(&model, &cpath, &net)?;
    let split = read_dataset(&dpath)?;
    let model = if ic.noiseless { model.noiseless() } else { model.with_seed(ic.chip_seed) };
    let real = model.realize();
    let results: Vec<Result<(InferRow, bool, bool), CliError>> = split
        .test
        .par_iter()
        .enumerate()
        .map(|(i, im)| {
            let x = im.bits();
            let sw = net.infer(&x)?;
            let seed = (!ic.noiseless).then(|| derive_seed(cfg.seed, &[TAG_INFER, i as u64]));
            let hw = simulate_op(&real, &x, ic.v_peak, seed);
            let row = InferRow {
                sample: i,
                label: im.label.index(),
                software: sw.class,
                hardware: hw.class,
                hardware_ambiguous: hw.ambiguous,
                matches: hw.output_bits() == sw.output_bits(),
            };
            let sw_ok = !sw.ambiguous && sw.class == im.label.index();
            Ok((row, sw_ok, hw.any_tie()))
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let (mut sw_ok, mut ties) = (0, 0);
    for r in results {
        let (row, ok, tie) = r?;
        sw_ok += ok as usize;
        ties += tie as usize;
        rows.push(row);
    }
    let n = rows.len().max(1) as f64;
    let s = InferSummary {
        samples: rows.len(),
        noiseless: ic.noiseless,
        v_peak: ic.v_peak,
        software_accuracy: sw_ok as f64 / n,
        hardware_accuracy: rows.iter().filter(|r| !r.hardware_ambiguous && r.hardware == r.label).count() as f64 / n,
        matching: rows.iter().filter(|r| r.matches).count() as f64 / n,
        ties,
    };
    run.write_table("infer", &rows)?;
    run.write_json("infer_summary.json", &s)?;
    println!(
        "{} samples at {} V{}: software {}, hardware {}",
        s.samples,
        s.v_peak,
        if s.noiseless { " (noiseless)" } else { "" },
        pct(s.software_accuracy),
        pct(s.hardware_accuracy)
    );
    println!("Matching {}", pct(s.matching));
    run.finish()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct McOutput {
    pub summary: McSummary,
    pub deviation: f64,
    pub dv_threshold: f64,
    pub delta_vm: DeltaVmReport,
}

#[derive(Serialize)]
struct BitErrorRow {
    layer: usize,
    neuron: String,
    errors: u64,
}

#[derive(Serialize)]
struct EventRow {
    chip_seed: u64,
    iteration: usize,
    sample: usize,
    neuron: String,
}

pub fn montecarlo(
    cfg: &RunConfig,
    chip: Option<&Path>,
    net: Option<&Path>,
    dataset: Option<&Path>,
) -> Result<(), CliError> {
    let mut run = Run::start(cfg, "montecarlo")?;
    let cpath = run.input("chip", chip, CHIP_FILE);
    let npath = run.input("network", net, NET_FILE);
    let dpath = run.input("dataset", dataset, DATASET_FILE);
    let model = read_chip(&cpath)?;
    let net = read_net(&npath)?;
    check_chip_matches(&model, &cpath, &net)?;
    let split = read_dataset(&dpath)?;
    let mc = cfg.mc();
    println!(
        "monte carlo: {} chips x {} iterations x {} samples at {} V",
        mc.chip_seeds.len(),
        mc.iterations,
        split.test.len(),
        mc.v_peak
    );
    let report = run_split(&model, &net, &split.test, &mc)?;
    let summary = report.summary();
    let dv = delta_vm_analysis(&report, cfg.montecarlo.dv_threshold, &DEFAULT_BUCKET_EDGES);
    let out = McOutput {
        deviation: (summary.accuracy_mean - summary.software_accuracy).abs(),
        summary,
        dv_threshold: cfg.montecarlo.dv_threshold,
        delta_vm: dv,
    };
    for c in &report.chips {
        let m = c.accuracy.iter().sum::<f64>() / c.accuracy.len() as f64;
        println!("  chip {}: mean accuracy {}", c.chip_seed, pct(m));
    }
    let mut bit_rows = Vec::new();
    for (l, layer) in report.total_bit_errors().iter().enumerate() {
        for (n, &errors) in layer.iter().enumerate() {
            bit_rows.push(BitErrorRow { layer: l + 1, neuron: ChipModel::neuron_id(l, n), errors });
        }
    }
    let events: Vec<EventRow> = report
        .chips
        .iter()
        .flat_map(|c| {
            c.events.iter().map(|e| EventRow {
                chip_seed: c.chip_seed,
                iteration: e.iteration,
                sample: e.sample,
                neuron: ChipModel::neuron_id(e.layer, e.neuron),
            })
        })
        .collect();
    run.write_json("montecarlo.json", &out)?;
    run.write_table("bit_errors", &bit_rows)?;
    run.write_table("bit_error_events", &events)?;
    let s = &out.summary;
    println!(
        "hardware {} (std {:.3} pts) vs software {}: deviation {:.2} pts; matching {}, always matching {}",
        pct(s.accuracy_mean),
        100.0 * s.accuracy_std,
        pct(s.software_accuracy),
        100.0 * out.deviation,
        pct(s.matching_mean),
        pct(s.always_matching_fraction)
    );
    println!(
        "bit errors: {} events, median |dv| {:.1} mV (all decisions {:.1} mV), {} below {:.0} mV",
        out.delta_vm.bit_errors.count,
        1e3 * out.delta_vm.bit_errors.median,
        1e3 * out.delta_vm.all.median,
        pct(out.delta_vm.errors_below_threshold),
        1e3 * out.dv_threshold
    );
    run.finish()?;
    Ok(())
}

#[derive(Serialize)]
struct TransientSummary {
    kind: TransientKind,
    dt: f64,
    samples: usize,
    dissipated_j: f64,
    analytic_j: Option<f64>,
    source_j: f64,
    conservation_residual: f64,
    resonant_hz: Option<f64>,
    measured_resonant_hz: Option<f64>,
    pcg_cycles: Vec<acnn_core::transient::PcgCycle>,
}

fn waveform_plot(wf: &Waveform, title: &str) -> String {
    let stride = (wf.len() / 2000).max(1);
    let series: Vec<Series> = wf
        .nodes
        .iter()
        .enumerate()
        .map(|(k, name)| Series {
            name: format!("V({name})"),
            points: (0..wf.len()).step_by(stride).map(|i| (wf.t[i] * 1e9, wf.v[i][k])).collect(),
        })
        .collect();
    line_plot(title, "time (ns)", "voltage (V)", &series)
}

pub fn transient(cfg: &RunConfig) -> Result<(), CliError> {
    let t = &cfg.transient;
    let mut run = Run::start(cfg, "transient")?;
    let (r, c, v) = (t.r_ohm, t.c_farad, t.v);
    let tau = r * c;
    let pick = |auto: f64| if t.dt > 0.0 { t.dt } else { auto };
    let (wf, summary) = match t.kind {
        TransientKind::Step | TransientKind::Cycle | TransientKind::Ramp => {
            let (circuit, t_end, analytic) = match t.kind {
                TransientKind::Step => (RcCircuit::new(r, c, Source::Step { v }), 30.0 * tau, 0.5 * c * v * v),
                TransientKind::Cycle => (
                    RcCircuit::new(r, c, Source::Step { v })
                        .with_schedule(vec![(0.0, SwitchState::Source), (30.0 * tau, SwitchState::Ground)]),
                    60.0 * tau,
                    c * v * v,
                ),
                _ => {
                    let period = t.period_ratio * tau;
                    (RcCircuit::new(r, c, Source::Sine { v, period }), period / 2.0, slow_ramp_loss(r, c, period, v))
                }
            };
            let dt = pick((tau / 100.0).min(t_end / 20_000.0));
            let wf = solve_rc(&circuit, dt, t_end)?;
            let s = TransientSummary {
                kind: t.kind,
                dt,
                samples: wf.len(),
                dissipated_j: wf.dissipated(),
                analytic_j: Some(analytic),
                source_j: wf.source_energy(),
                conservation_residual: wf.conservation_residual(),
                resonant_hz: None,
                measured_resonant_hz: None,
                pcg_cycles: vec![],
            };
            (wf, s)
        }
        TransientKind::Pcg => {
            let state = PcgState { load_cap: t.load_cap, ..cfg.energy.pcg.recharged() };
            let f0 = state.resonant_frequency();
            let dt = pick(1.0 / f0 / 2000.0);
            let (wf, _, pr) = solve_pcg(&state, &cfg.energy.model.pcg, t.cycles, dt)?;
            let measured = measure_resonance(&PcgState { load_cap: 0.0, ..state }, dt, 20)?;
            let s = TransientSummary {
                kind: t.kind,
                dt,
                samples: wf.len(),
                dissipated_j: wf.dissipated(),
                analytic_j: None,
                source_j: wf.source_energy(),
                conservation_residual: wf.conservation_residual(),
                resonant_hz: Some(PcgState { load_cap: 0.0, ..state }.resonant_frequency()),
                measured_resonant_hz: Some(measured),
                pcg_cycles: pr.cycles,
            };
            (wf, s)
        }
    };
    run.write_with("waveform.csv", |w| wf.write_csv(w).map_err(|e| e.to_string()))?;
    run.write_json("transient.json", &summary)?;
    if cfg.svg {
        run.write_text("waveform.svg", &waveform_plot(&wf, &format!("{:?} transient", t.kind)))?;
    }
    let mut line = format!(
        "{:?}: dissipated {:.4e} J, energy residual {:.2e}",
        t.kind, summary.dissipated_j, summary.conservation_residual
    );
    if let Some(a) = summary.analytic_j {
        line += &format!(", analytic {a:.4e} J (ratio {:.4})", summary.dissipated_j / a);
    }
    if let (Some(f), Some(m)) = (summary.resonant_hz, summary.measured_resonant_hz) {
        line += &format!(", unloaded resonance {:.4} MHz (measured {:.4} MHz)", f / 1e6, m / 1e6);
    }
    println!("{line}");
    run.finish()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SampleEnergy {
    pub sample: String,
    pub o_max: usize,
    pub truncated: bool,
    /// `(ops, E_SOP fJ)` at each configured checkpoint within the run.
    pub esop_checkpoints: Vec<(usize, f64)>,
    /// E_SOP after 1, 2, ... ops, fJ.
    pub esop_curve: Vec<f64>,
    pub v_peak: Vec<f64>,
    pub mean_adiabatic_pj: f64,
    pub mean_pcg_pj: f64,
    pub mean_pcg_baseline_pj: f64,
    pub mean_cmos_pj: f64,
    pub mean_switched_ff: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EnergySummary {
    pub mode: EnergyMode,
    pub ops: usize,
    pub gamma: f64,
    pub n_synapses: usize,
    pub note: String,
    pub samples: Vec<SampleEnergy>,
}

pub fn energy(cfg: &RunConfig, chip: Option<&Path>) -> Result<(), CliError> {
    let e = &cfg.energy;
    let mut run = Run::start(cfg, "energy")?;
    let cpath = run.input("chip", chip, CHIP_FILE);
    let model = read_chip(&cpath)?.with_seed(e.chip_seed);
    let pcg = e.pcg.recharged();
    let runs: Vec<_> = Class::ALL
        .par_iter()
        .map(|&class| {
            let im = Image64::new(dataset::templates(class)[0], class);
            multi_op_experiment(&model, &im, e.ops, &pcg, &e.model, &e.noise).map(|r| (class, r))
        })
        .collect();
    let mut samples = Vec::new();
    let mut n_synapses = 0;
    for r in runs {
        let (class, mut res) = r?;
        if e.gamma != DEFAULT_GAMMA {
            res.ledger = res.ledger.with_gamma(e.gamma, "set in run configuration")?;
        }
        let ledger = &res.ledger;
        n_synapses = ledger.n_synapses;
        let n = ledger.records.len();
        let curve = (1..=n).map(|k| ledger.esop_after(k)).collect::<Result<Vec<_>, _>>()?;
        let mean =
            |f: fn(&acnn_core::energy::OpRecord) -> f64| ledger.records.iter().map(f).sum::<f64>() / n.max(1) as f64;
        let name = class.token().to_uppercase();
        run.write_with(&format!("energy_{}.csv", class.token()), |w| ledger.write_csv(w).map_err(|e| e.to_string()))?;
        samples.push(SampleEnergy {
            o_max: res.o_max,
            truncated: ledger.truncated,
            esop_checkpoints: e.checkpoints.iter().filter(|&&k| k >= 1 && k <= n).map(|&k| (k, curve[k - 1])).collect(),
            v_peak: ledger.records.iter().map(|r| r.v_peak).collect(),
            esop_curve: curve,
            mean_adiabatic_pj: mean(|r| r.adiabatic_pj),
            mean_pcg_pj: mean(|r| r.pcg_pj),
            mean_pcg_baseline_pj: mean(|r| r.pcg_baseline_pj),
            mean_cmos_pj: mean(|r| r.cmos_pj),
            mean_switched_ff: mean(|r| r.switched_ff),
            sample: name,
        });
    }
    let summary = EnergySummary {
        mode: e.model.mode,
        ops: e.ops,
        gamma: e.gamma,
        n_synapses,
        note: "comparator and transmission-line DC energy are not included".into(),
        samples,
    };
    run.write_json("energy.json", &summary)?;
    if cfg.svg {
        for (name, body) in crate::report::energy_plots(&summary) {
            run.write_text(name, &body)?;
        }
    }
    let mut out = std::io::stdout().lock();
    let _ =
        writeln!(out, "{} ops per sample, {:?} model, {} synapses ({})", e.ops, e.model.mode, n_synapses, summary.note);
    for s in &summary.samples {
        let cps: Vec<String> = s.esop_checkpoints.iter().map(|(k, v)| format!("{k}:{v:.3}")).collect();
        let _ = writeln!(
            out,
            "  {:<5} O_max {:>4}  V_max {:.3} -> {:.3} V  E_SOP fJ [{}]  CMOS/adiabatic {:.1}x",
            s.sample,
            s.o_max,
            s.v_peak.first().copied().unwrap_or(0.0),
            s.v_peak.last().copied().unwrap_or(0.0),
            cps.join(" "),
            s.mean_cmos_pj / (s.mean_adiabatic_pj + s.mean_pcg_pj - s.mean_pcg_baseline_pj).max(f64::MIN_POSITIVE)
        );
    }
    drop(out);
    run.finish()?;
    Ok(())
}

pub fn read_summary<T: for<'de> Deserialize<'de>>(path: &Path) -> Option<T> {
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

/// The part of `montecarlo.json` the report reads back.
#[derive(Debug, Deserialize)]
pub struct McBrief {
    pub summary: McSummary,
    pub deviation: f64,
}

pub fn mc_summary_line(m: &McBrief) -> String {
    format!(
        "hardware {} vs software {} (deviation {:.2} pts), matching {}",
        pct(m.summary.accuracy_mean),
        pct(m.summary.software_accuracy),
        100.0 * m.deviation,
        pct(m.summary.matching_mean)
    )
}

pub fn percent(x: f64) -> String {
    pct(x)
}
