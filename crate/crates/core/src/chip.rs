//! Compiled chip description and its on-disk format.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::capmap::{breakdown, quantize_caps, AcnConfig, CapBreakdown, MapSpec, QuantReport};

pub const CHIP_FORMAT: &str = "acnn-chip";
pub const CHIP_VERSION: u32 = 1;

/// Comparator non-idealities, volts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparatorModel {
    /// Static offset sigma, drawn once per neuron per chip.
    pub offset_sigma: f64,
    /// Fresh noise sigma, drawn per decision.
    pub noise_sigma: f64,
}

impl Default for ComparatorModel {
    fn default() -> Self {
        Self { offset_sigma: 0.005, noise_sigma: 0.003 }
    }
}

/// Membrane reset levels for the positive and negative trees, volts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ResetVoltages {
    pub vbp: f64,
    pub vbn: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChipModel {
    /// `layers[layer][neuron]`.
    pub layers: Vec<Vec<AcnConfig>>,
    pub spec: MapSpec,
    /// Relative sigma of a single unit capacitor.
    pub mismatch_sigma: f64,
    pub chip_seed: u64,
    pub comparator: ComparatorModel,
    pub reset: ResetVoltages,
}

impl ChipModel {
    pub fn new(layers: Vec<Vec<AcnConfig>>, spec: MapSpec) -> Self {
        Self {
            layers,
            spec,
            mismatch_sigma: 0.01,
            chip_seed: 0,
            comparator: ComparatorModel::default(),
            reset: ResetVoltages::default(),
        }
    }

    /// Same capacitors with mismatch and comparator errors switched off.
    pub fn noiseless(&self) -> Self {
        Self {
            mismatch_sigma: 0.0,
            comparator: ComparatorModel { offset_sigma: 0.0, noise_sigma: 0.0 },
            ..self.clone()
        }
    }

    pub fn with_seed(&self, chip_seed: u64) -> Self {
        Self { chip_seed, ..self.clone() }
    }

    /// Snaps every neuron to the layout unit.
    pub fn quantized(&self) -> (Self, QuantReport) {
        let mut reports = Vec::new();
        let layers = self
            .layers
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .map(|n| {
                        let (q, r) = quantize_caps(n, self.spec.unit_cap);
                        reports.push(r);
                        q
                    })
                    .collect()
            })
            .collect();
        (Self { layers, ..self.clone() }, QuantReport::merge(reports))
    }

    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.inputs()];
        s.extend(self.layers.iter().map(Vec::len));
        s
    }

    pub fn inputs(&self) -> usize {
        self.layers.first().and_then(|l| l.first()).map_or(0, |n| n.inputs)
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().map_or(0, Vec::len)
    }

    pub fn stats(&self) -> CapBreakdown {
        breakdown(&self.layers)
    }

    pub fn neuron_id(layer: usize, neuron: usize) -> String {
        format!("L{}N{}", layer + 1, neuron)
    }

    pub fn validate(&self) -> Result<(), ChipError> {
        let mut width = self.inputs();
        for (li, layer) in self.layers.iter().enumerate() {
            if layer.is_empty() {
                return Err(ChipError::Format(format!("layer {} has no neurons", li + 1)));
            }
            for (ni, n) in layer.iter().enumerate() {
                let id = Self::neuron_id(li, ni);
                if n.inputs != width {
                    return Err(ChipError::Neuron {
                        id,
                        message: format!("fan-in {} but previous layer has {width}", n.inputs),
                    });
                }
                let caps = n.pos_tree.iter().chain(&n.neg_tree);
                if caps.clone().any(|s| s.input >= width) {
                    return Err(ChipError::Neuron { id, message: "synapse input out of range".into() });
                }
                let all = caps.map(|s| s.cap_ff).chain([
                    n.bias_pos,
                    n.bias_neg,
                    n.ballast_pos,
                    n.ballast_neg,
                    n.parasitic_pos,
                    n.parasitic_neg,
                ]);
                if all.clone().any(|c| !c.is_finite() || c < 0.0) {
                    return Err(ChipError::Neuron { id, message: "negative or non-finite capacitance".into() });
                }
                if n.total(crate::capmap::Side::Pos) <= 0.0 || n.total(crate::capmap::Side::Neg) <= 0.0 {
                    return Err(ChipError::Neuron { id, message: "membrane node has zero capacitance".into() });
                }
            }
            width = layer.len();
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("chip serializes");
        let obj = v.as_object_mut().expect("object");
        obj.insert("format".into(), Value::from(CHIP_FORMAT));
        obj.insert("version".into(), Value::from(CHIP_VERSION));
        if let Some(Value::Array(layers)) = obj.get_mut("layers") {
            for (li, layer) in layers.iter_mut().enumerate() {
                if let Value::Array(neurons) = layer {
                    for (ni, n) in neurons.iter_mut().enumerate() {
                        if let Value::Object(m) = n {
                            m.insert("id".into(), Value::from(Self::neuron_id(li, ni)));
                        }
                    }
                }
            }
        }
        serde_json::to_string_pretty(&v).expect("chip serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ChipError> {
        let mut v: Value = serde_json::from_str(text).map_err(|e| ChipError::Format(e.to_string()))?;
        let obj = v.as_object_mut().ok_or_else(|| ChipError::Format("top level is not an object".into()))?;
        match obj.remove("format") {
            Some(Value::String(f)) if f == CHIP_FORMAT => {}
            other => return Err(ChipError::Version(format!("format {other:?}"))),
        }
        match obj.remove("version").and_then(|v| v.as_u64()) {
            Some(v) if v == CHIP_VERSION as u64 => {}
            other => return Err(ChipError::Version(format!("version {other:?}"))),
        }
        let raw_layers = match obj.remove("layers") {
            Some(Value::Array(a)) => a,
            _ => return Err(ChipError::Format("missing layers".into())),
        };
        let mut layers = Vec::with_capacity(raw_layers.len());
        for (li, layer) in raw_layers.into_iter().enumerate() {
            let Value::Array(neurons) = layer else {
                return Err(ChipError::Format(format!("layer {} is not an array", li + 1)));
            };
            let mut row = Vec::with_capacity(neurons.len());
            for (ni, mut n) in neurons.into_iter().enumerate() {
                let id = match n.as_object_mut().and_then(|m| m.remove("id")) {
                    Some(Value::String(s)) => s,
                    _ => Self::neuron_id(li, ni),
                };
                let cfg: AcnConfig =
                    serde_json::from_value(n).map_err(|e| ChipError::Neuron { id, message: e.to_string() })?;
                row.push(cfg);
            }
            layers.push(row);
        }
        obj.insert("layers".into(), Value::Array(vec![]));
        let mut chip: ChipModel = serde_json::from_value(v).map_err(|e| ChipError::Format(e.to_string()))?;
        chip.layers = layers;
        chip.validate()?;
        Ok(chip)
    }
}

#[derive(Debug, Error)]
pub enum ChipError {
    #[error("unsupported chip file: {0}")]
    Version(String),
    #[error("malformed chip file: {0}")]
    Format(String),
    #[error("neuron {id}: {message}")]
    Neuron { id: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn save_chip(chip: &ChipModel, path: impl AsRef<Path>) -> Result<(), ChipError> {
    fs::write(path, chip.to_json())?;
    Ok(())
}

pub fn load_chip(path: impl AsRef<Path>) -> Result<ChipModel, ChipError> {
    ChipModel::from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capmap::map_neuron;

    fn tiny() -> ChipModel {
        let spec = MapSpec::default();
        let l1 = vec![
            map_neuron(&[0.5, -0.2, 0.1], 0.1, &spec).unwrap(),
            map_neuron(&[-0.3, 0.9, 0.0], 0.1, &spec).unwrap(),
        ];
        let l2 = vec![map_neuron(&[0.4, -0.4], 0.1, &spec).unwrap()];
        ChipModel::new(vec![l1, l2], spec)
    }

    #[test]
    fn json_round_trip_is_exact() {
        let (chip, _) = tiny().with_seed(99).quantized();
        let back = ChipModel::from_json(&chip.to_json()).unwrap();
        assert_eq!(chip, back);
        let ideal = tiny();
        assert_eq!(ChipModel::from_json(&ideal.to_json()).unwrap(), ideal);
        assert_eq!(chip.shape(), vec![3, 2, 1]);
    }

    #[test]
    fn bad_neuron_is_named() {
        let text = tiny().to_json();
        let mut v: Value = serde_json::from_str(&text).unwrap();
        v["layers"][1][0]["bias_pos"] = Value::from("lots");
        let err = ChipModel::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("L2N0"), "{err}");

        let mut v: Value = serde_json::from_str(&text).unwrap();
        v["layers"][0][1]["ballast_neg"] = Value::from(-1.0);
        let err = ChipModel::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("L1N1"), "{err}");
    }

    #[test]
    fn wrong_version_rejected() {
        let mut v: Value = serde_json::from_str(&tiny().to_json()).unwrap();
        v["version"] = Value::from(7);
        assert!(matches!(ChipModel::from_json(&v.to_string()), Err(ChipError::Version(_))));
    }
}
