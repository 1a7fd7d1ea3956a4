//! Weight-to-capacitance compilation.
//!
//! A neuron with weights `w` and bias `τ` becomes two capacitor trees that
//! share a power-clock drive. Synapse `i` gets `C_min·|w_i| / min|w|` on the
//! tree matching its sign. The bias lands on the negative tree as an
//! always-connected capacitor of `C_min·τ / min|w|`, and both trees get a
//! common always-connected floor bias plus an always-grounded ballast so that
//!
//! * both membrane nodes see the same total capacitance `D`, which makes
//!   `v⁺ − v⁻ ∝ Σ w·x − τ`;
//! * every membrane voltage stays inside `[swing_lo, swing_hi]` for every
//!   input pattern.
//!
//! With `M = max(S⁺, S⁻ + β)` the smallest solution is
//! `D = V·M / (hi − lo)` with floor bias `lo·D / V`. Part of each required
//! ballast is supplied by node parasitics and is removed from the drawn
//! ballast.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bnn::BinaryNet;
use crate::chip::ChipModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    /// Power-clock peak used for the swing window, volts.
    pub v_max: f64,
    /// Capacitance of the smallest nonzero weight, fF.
    pub c_min: f64,
    pub swing_lo: f64,
    pub swing_hi: f64,
    /// Layout unit capacitor, fF.
    pub unit_cap: f64,
    /// Share of each required ballast supplied by node parasitics.
    pub parasitic_fraction: f64,
}

impl Default for MapSpec {
    fn default() -> Self {
        Self { v_max: 1.5, c_min: 8.0, swing_lo: 0.1, swing_hi: 1.0, unit_cap: 2.0, parasitic_fraction: 0.08 }
    }
}

impl MapSpec {
    pub fn validate(&self) -> Result<(), MapError> {
        let ok = self.swing_lo > 0.0
            && self.swing_lo < self.swing_hi
            && self.swing_hi < self.v_max
            && self.c_min > 0.0
            && self.unit_cap > 0.0
            && (0.0..1.0).contains(&self.parasitic_fraction);
        if ok {
            Ok(())
        } else {
            Err(MapError::Spec(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Synapse {
    pub input: usize,
    pub cap_ff: f64,
}

/// One neuron's compiled capacitor network. All values in fF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcnConfig {
    /// Fan-in of the neuron.
    pub inputs: usize,
    pub pos_tree: Vec<Synapse>,
    pub neg_tree: Vec<Synapse>,
    /// Always connected to the power clock.
    pub bias_pos: f64,
    pub bias_neg: f64,
    /// Always grounded.
    pub ballast_pos: f64,
    pub ballast_neg: f64,
    /// Predicted node parasitic to ground (not a drawn capacitor).
    pub parasitic_pos: f64,
    pub parasitic_neg: f64,
    pub unit_cap: f64,
    pub quantized: bool,
}

/// Which tree of a neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Pos,
    Neg,
}

impl AcnConfig {
    pub fn tree(&self, side: Side) -> &[Synapse] {
        match side {
            Side::Pos => &self.pos_tree,
            Side::Neg => &self.neg_tree,
        }
    }

    pub fn bias(&self, side: Side) -> f64 {
        match side {
            Side::Pos => self.bias_pos,
            Side::Neg => self.bias_neg,
        }
    }

    pub fn ballast(&self, side: Side) -> f64 {
        match side {
            Side::Pos => self.ballast_pos,
            Side::Neg => self.ballast_neg,
        }
    }

    pub fn parasitic(&self, side: Side) -> f64 {
        match side {
            Side::Pos => self.parasitic_pos,
            Side::Neg => self.parasitic_neg,
        }
    }

    pub fn synapse_sum(&self, side: Side) -> f64 {
        self.tree(side).iter().map(|s| s.cap_ff).sum()
    }

    /// Total capacitance on the membrane node (the divider denominator).
    pub fn total(&self, side: Side) -> f64 {
        self.synapse_sum(side) + self.bias(side) + self.ballast(side) + self.parasitic(side)
    }

    /// Capacitance tied to the power clock for input `x` (active synapses plus bias).
    pub fn connected(&self, side: Side, x: &[bool]) -> f64 {
        self.tree(side).iter().filter(|s| x[s.input]).map(|s| s.cap_ff).sum::<f64>() + self.bias(side)
    }

    /// Ideal membrane voltages at power-clock peak `v_peak`.
    pub fn membrane(&self, x: &[bool], v_peak: f64) -> (f64, f64) {
        (
            v_peak * self.connected(Side::Pos, x) / self.total(Side::Pos),
            v_peak * self.connected(Side::Neg, x) / self.total(Side::Neg),
        )
    }

    /// Drawn capacitance (synapses, bias, ballast) on both trees.
    pub fn drawn_total(&self) -> f64 {
        [Side::Pos, Side::Neg].iter().map(|&s| self.synapse_sum(s) + self.bias(s) + self.ballast(s)).sum()
    }

    pub fn synapse_count(&self) -> usize {
        self.pos_tree.len() + self.neg_tree.len()
    }

    /// Largest and smallest synapse capacitance, if any.
    pub fn synapse_range(&self) -> Option<(f64, f64)> {
        let caps = self.pos_tree.iter().chain(&self.neg_tree).map(|s| s.cap_ff);
        caps.fold(None, |acc, c| match acc {
            None => Some((c, c)),
            Some((lo, hi)) => Some((lo.min(c), hi.max(c))),
        })
    }

    pub fn denominator_mismatch(&self) -> f64 {
        (self.total(Side::Pos) - self.total(Side::Neg)).abs()
    }

    /// Share of the required ballast (drawn + parasitic) supplied by parasitics.
    pub fn parasitic_ballast_fraction(&self) -> f64 {
        let p = self.parasitic_pos + self.parasitic_neg;
        let req = p + self.ballast_pos + self.ballast_neg;
        if req > 0.0 {
            p / req
        } else {
            0.0
        }
    }
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("neuron has no nonzero weights and cannot be mapped")]
    AllZero,
    #[error("invalid map spec: {0}")]
    Spec(String),
    #[error("layer {layer} neuron {neuron}: {source}")]
    Neuron {
        layer: usize,
        neuron: usize,
        #[source]
        source: Box<MapError>,
    },
}

/// Compiles one neuron into an unquantized capacitor configuration.
pub fn map_neuron(weights: &[f64], tau: f64, spec: &MapSpec) -> Result<AcnConfig, MapError> {
    spec.validate()?;
    let min_w = weights.iter().map(|w| w.abs()).filter(|&w| w > 0.0).fold(f64::INFINITY, f64::min);
    if !min_w.is_finite() {
        return Err(MapError::AllZero);
    }
    let cap = |w: f64| spec.c_min * (w.abs() / min_w);

    let mut pos_tree = Vec::new();
    let mut neg_tree = Vec::new();
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            pos_tree.push(Synapse { input: i, cap_ff: cap(w) });
        } else if w < 0.0 {
            neg_tree.push(Synapse { input: i, cap_ff: cap(w) });
        }
    }
    // Output is 1 iff Σw·x > τ, so a positive τ weighs on the negative tree.
    let beta = spec.c_min * (tau.abs() / min_w);
    let (extra_pos, extra_neg) = if tau >= 0.0 { (0.0, beta) } else { (beta, 0.0) };

    let s_pos: f64 = pos_tree.iter().map(|s| s.cap_ff).sum();
    let s_neg: f64 = neg_tree.iter().map(|s| s.cap_ff).sum();
    let peak = (s_pos + extra_pos).max(s_neg + extra_neg);
    let window = spec.swing_hi - spec.swing_lo;
    let denom = spec.v_max * peak / window;
    let floor = spec.swing_lo * peak / window;

    let bias_pos = floor + extra_pos;
    let bias_neg = floor + extra_neg;
    let required_pos = denom - s_pos - bias_pos;
    let required_neg = denom - s_neg - bias_neg;
    let parasitic_pos = spec.parasitic_fraction * required_pos;
    let parasitic_neg = spec.parasitic_fraction * required_neg;

    Ok(AcnConfig {
        inputs: weights.len(),
        pos_tree,
        neg_tree,
        bias_pos,
        bias_neg,
        ballast_pos: required_pos - parasitic_pos,
        ballast_neg: required_neg - parasitic_neg,
        parasitic_pos,
        parasitic_neg,
        unit_cap: spec.unit_cap,
        quantized: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapKind {
    Synapse,
    Bias,
    Ballast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapError {
    pub kind: CapKind,
    pub side: Side,
    /// Synapse input index; `None` for bias and ballast.
    pub input: Option<usize>,
    pub ideal: f64,
    pub quantized: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QuantReport {
    pub errors: Vec<CapError>,
    pub mean_abs_error: f64,
}

impl QuantReport {
    pub fn merge(reports: impl IntoIterator<Item = QuantReport>) -> QuantReport {
        let errors: Vec<CapError> = reports.into_iter().flat_map(|r| r.errors).collect();
        let mean_abs_error = mean_abs(&errors);
        QuantReport { errors, mean_abs_error }
    }
}

fn mean_abs(errors: &[CapError]) -> f64 {
    if errors.is_empty() {
        0.0
    } else {
        errors.iter().map(|e| e.error.abs()).sum::<f64>() / errors.len() as f64
    }
}

/// Rounds to the nearest multiple of `unit`, ties away from zero.
pub fn round_to_unit(c: f64, unit: f64) -> f64 {
    (c / unit).round() * unit
}

/// Snaps every drawn capacitor to a multiple of `unit_cap`.
///
/// Synapses and biases round independently; each ballast is then chosen so
/// its node total lands within half a unit of the original total, which keeps
/// the two denominators within one unit of each other. Parasitics are
/// predictions, not drawn capacitors, and are left untouched.
pub fn quantize_caps(cfg: &AcnConfig, unit_cap: f64) -> (AcnConfig, QuantReport) {
    let mut errors = Vec::new();
    let mut out = cfg.clone();
    out.unit_cap = unit_cap;
    out.quantized = true;

    for side in [Side::Pos, Side::Neg] {
        let target = cfg.total(side);
        let tree = match side {
            Side::Pos => &mut out.pos_tree,
            Side::Neg => &mut out.neg_tree,
        };
        for syn in tree.iter_mut() {
            let q = round_to_unit(syn.cap_ff, unit_cap);
            errors.push(CapError {
                kind: CapKind::Synapse,
                side,
                input: Some(syn.input),
                ideal: syn.cap_ff,
                quantized: q,
                error: q - syn.cap_ff,
            });
            syn.cap_ff = q;
        }
        let s: f64 = tree.iter().map(|s| s.cap_ff).sum();

        let bias = cfg.bias(side);
        let bias_q = round_to_unit(bias, unit_cap);
        errors.push(CapError {
            kind: CapKind::Bias,
            side,
            input: None,
            ideal: bias,
            quantized: bias_q,
            error: bias_q - bias,
        });

        let ballast = cfg.ballast(side);
        let ballast_q = round_to_unit(target - s - bias_q - cfg.parasitic(side), unit_cap).max(0.0);
        errors.push(CapError {
            kind: CapKind::Ballast,
            side,
            input: None,
            ideal: ballast,
            quantized: ballast_q,
            error: ballast_q - ballast,
        });

        match side {
            Side::Pos => {
                out.bias_pos = bias_q;
                out.ballast_pos = ballast_q;
            }
            Side::Neg => {
                out.bias_neg = bias_q;
                out.ballast_neg = ballast_q;
            }
        }
    }
    let mean_abs_error = mean_abs(&errors);
    (out, QuantReport { errors, mean_abs_error })
}

/// Capacitance totals for a compiled chip, in fF.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CapBreakdown {
    pub synapse: f64,
    pub bias: f64,
    pub ballast: f64,
    pub parasitic: f64,
    pub synapse_sites: usize,
    pub neurons: usize,
    /// Drawn capacitance per neuron, `[layer][neuron]`.
    pub per_neuron: Vec<Vec<f64>>,
}

impl CapBreakdown {
    /// Drawn capacitance (excludes parasitics).
    pub fn drawn(&self) -> f64 {
        self.synapse + self.bias + self.ballast
    }

    pub fn parasitic_ballast_fraction(&self) -> f64 {
        let req = self.ballast + self.parasitic;
        if req > 0.0 {
            self.parasitic / req
        } else {
            0.0
        }
    }
}

pub fn breakdown(layers: &[Vec<AcnConfig>]) -> CapBreakdown {
    let mut b = CapBreakdown::default();
    for layer in layers {
        let mut row = Vec::with_capacity(layer.len());
        for n in layer {
            for side in [Side::Pos, Side::Neg] {
                b.synapse += n.synapse_sum(side);
                b.bias += n.bias(side);
                b.ballast += n.ballast(side);
                b.parasitic += n.parasitic(side);
            }
            b.synapse_sites += n.inputs;
            b.neurons += 1;
            row.push(n.drawn_total());
        }
        b.per_neuron.push(row);
    }
    b
}

/// Compiles every neuron of `net` into an ideal (unquantized) chip.
pub fn compile_chip(net: &BinaryNet, spec: &MapSpec) -> Result<ChipModel, MapError> {
    spec.validate()?;
    let mut layers = Vec::with_capacity(net.layers.len());
    for (li, layer) in net.layers.iter().enumerate() {
        let mut row = Vec::with_capacity(layer.outputs());
        for (ni, w) in layer.weights.iter().enumerate() {
            let cfg = map_neuron(w, net.tau, spec).map_err(|e| MapError::Neuron {
                layer: li,
                neuron: ni,
                source: Box::new(e),
            })?;
            row.push(cfg);
        }
        layers.push(row);
    }
    Ok(ChipModel::new(layers, *spec))
}
