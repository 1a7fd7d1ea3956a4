//! Layered binary network with Heaviside neurons and a fixed shared bias.
//!
//! Each neuron fires iff `Σ w·x − τ > 0`. Sums within a relative tolerance
//! of zero count as ties and do not fire; the same rule is used by the
//! hardware simulator so both sides agree on exact ties.

mod quant;
mod train;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Class, Image64};

pub use quant::QuantSpec;
pub use train::{train, train_with_report, TrainCfg, TrainReport};

pub const DEFAULT_TAU: f64 = 0.1;
pub const NET_FORMAT: &str = "acnn-net";
pub const NET_VERSION: u32 = 1;

/// Relative tie tolerance on neuron sums, scaled by `Σ|w| + |τ|`.
pub const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Heaviside,
    /// Trained through `tanh`; bits are still `s > 0` but the network's
    /// class decision is the argmax of the sums.
    TanhTrainOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    /// `weights[neuron][input]`.
    pub weights: Vec<Vec<f64>>,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(weights: Vec<Vec<f64>>, activation: Activation) -> Self {
        Self { weights, activation }
    }

    pub fn outputs(&self) -> usize {
        self.weights.len()
    }

    pub fn inputs(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryNet {
    pub layers: Vec<LayerSpec>,
    pub tau: f64,
    /// Set once the weights have been snapped by [`BinaryNet::quantize`].
    pub quant: Option<QuantSpec>,
}

#[derive(Debug, Error)]
pub enum BnnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("layer {layer}: {message}")]
    Layer { layer: usize, message: String },
    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("empty training split")]
    EmptySplit,
    #[error("unsupported net file: {0}")]
    Version(String),
    #[error("malformed net file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Outcome of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    /// Winning output index.
    pub class: usize,
    /// Set when the output layer was not exactly one-hot (Heaviside decode)
    /// or when the top two sums tied (argmax decode).
    pub ambiguous: bool,
    /// Output bits of every layer, first to last.
    pub bits: Vec<Vec<bool>>,
    /// Pre-activation sums `Σ w·x − τ` of every layer.
    pub sums: Vec<Vec<f64>>,
}

impl Inference {
    pub fn output_bits(&self) -> &[bool] {
        self.bits.last().map_or(&[], Vec::as_slice)
    }

    pub fn label(&self) -> Option<Class> {
        Class::from_index(self.class)
    }
}

/// `Σ w·x − τ` for one neuron.
#[inline]
pub fn neuron_sum(weights: &[f64], tau: f64, x: &[bool]) -> f64 {
    weights.iter().zip(x).filter(|(_, &on)| on).map(|(w, _)| *w).sum::<f64>() - tau
}

/// Heaviside with the shared tie rule.
#[inline]
pub fn fires(sum: f64, weights: &[f64], tau: f64) -> bool {
    let scale = weights.iter().map(|w| w.abs()).sum::<f64>() + tau.abs();
    sum > TIE_EPS * scale
}

/// Lowest-index-wins decode of a one-hot output word.
pub fn decode_one_hot(bits: &[bool]) -> (usize, bool) {
    let hot = bits.iter().filter(|&&b| b).count();
    let first = bits.iter().position(|&b| b).unwrap_or(0);
    (first, hot != 1)
}

impl BinaryNet {
    pub fn new(layers: Vec<LayerSpec>, tau: f64) -> Result<Self, BnnError> {
        let net = Self { layers, tau, quant: None };
        net.validate()?;
        Ok(net)
    }

    pub fn inputs(&self) -> usize {
        self.layers.first().map_or(0, LayerSpec::inputs)
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().map_or(0, LayerSpec::outputs)
    }

    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.inputs()];
        s.extend(self.layers.iter().map(LayerSpec::outputs));
        s
    }

    /// Total weight sites (the synapse count of the compiled chip).
    pub fn synapse_count(&self) -> usize {
        self.layers.iter().map(|l| l.outputs() * l.inputs()).sum()
    }

    pub fn validate(&self) -> Result<(), BnnError> {
        if self.layers.is_empty() {
            return Err(BnnError::Shape("network has no layers".into()));
        }
        let mut expected = None;
        for (li, layer) in self.layers.iter().enumerate() {
            if layer.weights.is_empty() {
                return Err(BnnError::Layer { layer: li, message: "no neurons".into() });
            }
            let n_in = layer.inputs();
            if n_in == 0 {
                return Err(BnnError::Layer { layer: li, message: "no inputs".into() });
            }
            if let Some((ni, row)) = layer.weights.iter().enumerate().find(|(_, r)| r.len() != n_in) {
                return Err(BnnError::Layer {
                    layer: li,
                    message: format!("neuron {ni} has {} weights, expected {n_in}", row.len()),
                });
            }
            if let Some(prev) = expected {
                if prev != n_in {
                    return Err(BnnError::Layer {
                        layer: li,
                        message: format!("takes {n_in} inputs but previous layer emits {prev}"),
                    });
                }
            }
            if layer.weights.iter().flatten().any(|w| !w.is_finite()) {
                return Err(BnnError::Layer { layer: li, message: "non-finite weight".into() });
            }
            expected = Some(layer.outputs());
        }
        Ok(())
    }

    pub fn infer(&self, x: &[bool]) -> Result<Inference, BnnError> {
        if x.len() != self.inputs() {
            return Err(BnnError::Shape(format!("input has {} bits, network expects {}", x.len(), self.inputs())));
        }
        let mut bits = Vec::with_capacity(self.layers.len());
        let mut sums = Vec::with_capacity(self.layers.len());
        let mut current: Vec<bool> = x.to_vec();
        for layer in &self.layers {
            let s: Vec<f64> = layer.weights.iter().map(|w| neuron_sum(w, self.tau, &current)).collect();
            let b: Vec<bool> = s.iter().zip(&layer.weights).map(|(&s, w)| fires(s, w, self.tau)).collect();
            current = b.clone();
            bits.push(b);
            sums.push(s);
        }
        let last = self.layers.last().expect("validated");
        let (class, ambiguous) = match last.activation {
            Activation::Heaviside => decode_one_hot(bits.last().expect("nonempty")),
            Activation::TanhTrainOnly => argmax(sums.last().expect("nonempty")),
        };
        Ok(Inference { class, ambiguous, bits, sums })
    }

    pub fn infer_image(&self, image: &Image64) -> Result<Inference, BnnError> {
        self.infer(&image.bits())
    }

    /// Fraction of `images` whose decoded class equals the label.
    pub fn accuracy(&self, images: &[Image64]) -> Result<f64, BnnError> {
        if images.is_empty() {
            return Ok(0.0);
        }
        let mut correct = 0usize;
        for im in images {
            if self.infer_image(im)?.class == im.label.index() {
                correct += 1;
            }
        }
        Ok(correct as f64 / images.len() as f64)
    }

    /// Snaps every weight to the quantizer grid and records the spec.
    pub fn quantize(&self, q: &QuantSpec) -> BinaryNet {
        let layers = self
            .layers
            .iter()
            .map(|l| LayerSpec {
                weights: l.weights.iter().map(|row| row.iter().map(|&w| q.quantize(w)).collect()).collect(),
                activation: l.activation,
            })
            .collect();
        BinaryNet { layers, tau: self.tau, quant: Some(*q) }
    }

    /// Replaces every training-only activation with Heaviside.
    pub fn with_heaviside_output(&self) -> BinaryNet {
        let mut net = self.clone();
        for l in &mut net.layers {
            l.activation = Activation::Heaviside;
        }
        net
    }

    pub fn is_quantized(&self) -> bool {
        self.quant.is_some()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&NetFile::from(self)).expect("net serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, BnnError> {
        let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| BnnError::Format(e.to_string()))?;
        let format = raw.get("format").and_then(|v| v.as_str()).unwrap_or_default();
        if format != NET_FORMAT {
            return Err(BnnError::Version(format!("expected format {NET_FORMAT:?}, found {format:?}")));
        }
        let version = raw.get("version").and_then(|v| v.as_u64());
        if version != Some(NET_VERSION as u64) {
            return Err(BnnError::Version(format!("expected version {NET_VERSION}, found {version:?}")));
        }
        let file: NetFile = serde_json::from_value(raw).map_err(|e| BnnError::Format(e.to_string()))?;
        file.into_net()
    }
}

fn argmax(values: &[f64]) -> (usize, bool) {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    let ties = values.iter().filter(|&&v| v == values[best]).count();
    (best, ties > 1)
}

#[derive(Serialize, Deserialize)]
struct NetFile {
    format: String,
    version: u32,
    tau: f64,
    quantized: bool,
    quant: Option<QuantSpec>,
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    activation: Activation,
    inputs: usize,
    outputs: usize,
    weights: Vec<Vec<f64>>,
}

impl From<&BinaryNet> for NetFile {
    fn from(net: &BinaryNet) -> Self {
        NetFile {
            format: NET_FORMAT.into(),
            version: NET_VERSION,
            tau: net.tau,
            quantized: net.quant.is_some(),
            quant: net.quant,
            layers: net
                .layers
                .iter()
                .map(|l| LayerFile {
                    activation: l.activation,
                    inputs: l.inputs(),
                    outputs: l.outputs(),
                    weights: l.weights.clone(),
                })
                .collect(),
        }
    }
}

impl NetFile {
    fn into_net(self) -> Result<BinaryNet, BnnError> {
        if self.quantized != self.quant.is_some() {
            return Err(BnnError::Format("`quantized` flag disagrees with `quant` block".into()));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for (li, l) in self.layers.into_iter().enumerate() {
            if l.weights.len() != l.outputs {
                return Err(BnnError::Layer {
                    layer: li,
                    message: format!("declares {} outputs but lists {} weight rows", l.outputs, l.weights.len()),
                });
            }
            if let Some((ni, row)) = l.weights.iter().enumerate().find(|(_, r)| r.len() != l.inputs) {
                return Err(BnnError::Layer {
                    layer: li,
                    message: format!("neuron {ni} lists {} weights, declared {} inputs", row.len(), l.inputs),
                });
            }
            layers.push(LayerSpec { weights: l.weights, activation: l.activation });
        }
        let net = BinaryNet { layers, tau: self.tau, quant: self.quant };
        net.validate()?;
        Ok(net)
    }
}

pub fn save_net(net: &BinaryNet, path: impl AsRef<Path>) -> Result<(), BnnError> {
    std::fs::write(path, net.to_json())?;
    Ok(())
}

pub fn load_net(path: impl AsRef<Path>) -> Result<BinaryNet, BnnError> {
    BinaryNet::from_json(&std::fs::read_to_string(path)?)
}
