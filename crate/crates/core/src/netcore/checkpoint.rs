//! JSON checkpoint format.
//!
//! ```text
//! {
//!   "format": "robustfeat-network",
//!   "version": 1,
//!   "input_dim": 784,
//!   "num_classes": 10,
//!   "layers": [
//!     { "inputs": 784, "outputs": 256, "activation": "relu",
//!       "weights": [... outputs*inputs values, row-major (row = output unit) ...],
//!       "bias":    [... outputs values ...] },
//!     ...
//!   ]
//! }
//! ```
//!
//! Values are written as decimal `f64` with shortest round-trip formatting, so
//! an `f64` network reloads bit-exactly.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Activation, Dense, Network};
use crate::{Error, ParseError, Result, Scalar};

pub const CHECKPOINT_FORMAT: &str = "robustfeat-network";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format: String,
    version: u32,
    input_dim: usize,
    num_classes: usize,
    layers: Vec<LayerRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRecord {
    inputs: usize,
    outputs: usize,
    activation: Activation,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl<T: Scalar> Network<T> {
    pub fn to_checkpoint_json(&self) -> String {
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            input_dim: self.input_dim(),
            num_classes: self.num_classes(),
            layers: self
                .layers()
                .iter()
                .map(|l| LayerRecord {
                    inputs: l.inputs(),
                    outputs: l.outputs(),
                    activation: l.activation,
                    weights: l.weights.iter().map(|v| v.as_f64()).collect(),
                    bias: l.bias.iter().map(|v| v.as_f64()).collect(),
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("checkpoint serialises")
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_str(text)
            .map_err(|e| ParseError::Checkpoint(e.to_string()))?;
        if file.format != CHECKPOINT_FORMAT {
            return Err(ParseError::Checkpoint(format!("unknown format tag {:?}", file.format)).into());
        }
        if file.version != CHECKPOINT_VERSION {
            return Err(ParseError::Checkpoint(format!("unsupported version {}", file.version)).into());
        }
        let layers = file
            .layers
            .into_iter()
            .enumerate()
            .map(|(i, rec)| {
                let weights = Array2::from_shape_vec(
                    (rec.outputs, rec.inputs),
                    rec.weights.into_iter().map(T::lit).collect(),
                )
                .map_err(|_| ParseError::Checkpoint(format!("layer {i}: weight count mismatch")))?;
                if rec.bias.len() != rec.outputs {
                    return Err(
                        ParseError::Checkpoint(format!("layer {i}: bias count mismatch")).into(),
                    );
                }
                let bias = Array1::from_vec(rec.bias.into_iter().map(T::lit).collect());
                Dense::new(weights, bias, rec.activation)
            })
            .collect::<Result<Vec<_>>>()?;
        let net = Network::new(layers)?;
        if net.input_dim() != file.input_dim || net.num_classes() != file.num_classes {
            return Err(ParseError::Checkpoint("header dimensions disagree with layers".into()).into());
        }
        Ok(net)
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path.as_ref(), self.to_checkpoint_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint_json(&text)
    }
}
