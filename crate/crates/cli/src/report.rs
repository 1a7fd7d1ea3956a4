use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use acnn_core::energy::{comparison_report, ImportedTables, RatioSummary, REFERENCE_TABLES};
use serde::Serialize;

use crate::commands::{mc_summary_line, percent, read_summary, EnergySummary, InferSummary, McBrief, QuantizeSummary};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Run;
use crate::svg::{line_plot, Series};

#[derive(Serialize)]
struct ReportJson {
    tables: String,
    n_synapses: usize,
    gamma: f64,
    esop_fj: Vec<(String, u32, f64)>,
    ratio_without_pcg: RatioSummary,
    ratio_with_pcg: RatioSummary,
}

/// SVG plots of tank decay and E_SOP against op count.
pub fn energy_plots(e: &EnergySummary) -> Vec<(&'static str, String)> {
    let vmax: Vec<Series> = e
        .samples
        .iter()
        .map(|s| Series {
            name: s.sample.clone(),
            points: s.v_peak.iter().enumerate().map(|(i, &v)| ((i + 1) as f64, v)).collect(),
        })
        .collect();
    let esop: Vec<Series> = e
        .samples
        .iter()
        .map(|s| Series {
            name: s.sample.clone(),
            points: s.esop_curve.iter().enumerate().map(|(i, &v)| ((i + 1) as f64, v)).collect(),
        })
        .collect();
    vec![
        ("vmax_decay.svg", line_plot("Power-clock peak without recharge", "operation", "V_max (V)", &vmax)),
        ("esop_vs_ops.svg", line_plot("Energy per synapse operation", "operations", "E_SOP (fJ)", &esop)),
    ]
}

pub fn report(cfg: &RunConfig, tables: Option<&Path>) -> Result<(), CliError> {
    let rc = &cfg.report;
    let mut run = Run::start(cfg, "report")?;
    let (label, imported) = match tables {
        Some(p) => {
            run.input("energy tables", Some(p), "");
            let f = fs::File::open(p).map_err(|e| CliError::input(p, "energy table CSV", e))?;
            let t = ImportedTables::read_csv(f).map_err(|e| CliError::input(p, "energy table CSV", e))?;
            (p.display().to_string(), t)
        }
        None => ("built-in reference".to_string(), ImportedTables::read_csv(REFERENCE_TABLES.as_bytes())?),
    };
    let esop = imported.esop_table(rc.n_synapses, rc.gamma)?;
    let without = comparison_report(&imported.acnn_without_pcg(), &imported.ccnn(), rc.ratio_ops)?;
    let with = comparison_report(&imported.acnn_with_pcg(), &imported.ccnn(), rc.ratio_ops)?;

    let mut md = String::new();
    let _ = writeln!(md, "# acnn report\n");
    let _ =
        writeln!(md, "Energy tables: {label}. E_SOP uses gamma = {:.4} and {} synapses.\n", rc.gamma, rc.n_synapses);
    let _ = writeln!(md, "| sample | ops | E_SOP (fJ) |\n|---|---:|---:|");
    for (s, ops, v) in &esop {
        let _ = writeln!(md, "| {s} | {ops} | {v:.2} |");
    }
    let _ = writeln!(md, "\nCCNN / ACNN energy at {} ops:\n", rc.ratio_ops);
    let _ = writeln!(md, "| sample | without PCG | with PCG |\n|---|---:|---:|");
    for ((s, a), (_, b)) in without.per_sample.iter().zip(&with.per_sample) {
        let _ = writeln!(md, "| {s} | {a:.2} | {b:.2} |");
    }
    let _ = writeln!(md, "| average | {:.2} | {:.2} |", without.average, with.average);

    let out = &cfg.out;
    let mut runs = String::new();
    if let Some(q) = read_summary::<QuantizeSummary>(&out.join("quantize.json")) {
        let _ = writeln!(
            runs,
            "- software accuracy: float {}, deployed {}",
            percent(q.float_accuracy),
            percent(q.deployed_accuracy)
        );
    }
    if let Some(i) = read_summary::<InferSummary>(&out.join("infer_summary.json")) {
        let _ = writeln!(
            runs,
            "- inference{}: hardware {}, matching {}",
            if i.noiseless { " (noiseless)" } else { "" },
            percent(i.hardware_accuracy),
            percent(i.matching)
        );
    }
    if let Some(m) = read_summary::<McBrief>(&out.join("montecarlo.json")) {
        let _ = writeln!(runs, "- monte carlo: {}", mc_summary_line(&m));
    }
    let energy = read_summary::<EnergySummary>(&out.join("energy.json"));
    if let Some(e) = &energy {
        for s in &e.samples {
            let last = s.esop_checkpoints.last().map_or(String::from("-"), |(k, v)| format!("{v:.3} fJ at {k} ops"));
            let _ = writeln!(runs, "- energy {}: O_max {}, E_SOP {last}", s.sample, s.o_max);
        }
        let _ = writeln!(runs, "- energy note: {}", e.note);
    }
    if !runs.is_empty() {
        let _ = writeln!(md, "\n## Simulation runs in {}\n\n{runs}", out.display());
    }

    println!("{md}");
    println!("average CCNN/ACNN ratio (without PCG) at {} ops: {:.2}", rc.ratio_ops, without.average);
    run.write_text("report.md", &md)?;
    run.write_json(
        "report.json",
        &ReportJson {
            tables: label,
            n_synapses: rc.n_synapses,
            gamma: rc.gamma,
            esop_fj: esop,
            ratio_without_pcg: without,
            ratio_with_pcg: with,
        },
    )?;
    if cfg.svg {
        if let Some(e) = &energy {
            for (name, body) in energy_plots(e) {
                run.write_text(name, &body)?;
            }
        }
    }
    run.finish()?;
    Ok(())
}
