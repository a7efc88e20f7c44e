use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::dense::{Activation, DenseNet, Layer};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRecord {
    activation: Activation,
    /// Row-major, `output x input`.
    weight: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct NetRecord {
    input_dim: usize,
    output_dim: usize,
    hidden: Vec<usize>,
    layers: Vec<LayerRecord>,
}

impl From<DenseNet> for NetRecord {
    fn from(net: DenseNet) -> Self {
        Self {
            input_dim: net.input_dim(),
            output_dim: net.output_dim(),
            hidden: net.hidden_sizes(),
            layers: net
                .layers()
                .iter()
                .map(|l| LayerRecord {
                    activation: l.activation,
                    weight: l.weight.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        }
    }
}

impl TryFrom<NetRecord> for DenseNet {
    type Error = Error;

    fn try_from(rec: NetRecord) -> Result<Self> {
        let dims: Vec<usize> = std::iter::once(rec.input_dim)
            .chain(rec.hidden.iter().copied())
            .chain(std::iter::once(rec.output_dim))
            .collect();
        if rec.layers.len() + 1 != dims.len() {
            return Err(Error::shape(
                "layer count",
                dims.len() - 1,
                rec.layers.len(),
            ));
        }
        let layers = rec
            .layers
            .into_iter()
            .zip(dims.windows(2))
            .map(|(l, d)| {
                let weight = Array2::from_shape_vec((d[1], d[0]), l.weight)
                    .map_err(|e| Error::DimensionMismatch(format!("layer weights: {e}")))?;
                Ok(Layer {
                    weight,
                    bias: Array1::from(l.bias),
                    activation: l.activation,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        DenseNet::from_layers(layers)
    }
}

impl Serialize for DenseNet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        NetRecord::from(self.clone()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DenseNet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = NetRecord::deserialize(d)?;
        DenseNet::try_from(rec).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope<T> {
    format: String,
    model: T,
}

/// Writes `value` as pretty JSON tagged with `format`.
pub fn save_json<T: Serialize>(path: &Path, format: &str, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(&Envelope {
        format: format.to_string(),
        model: value,
    })?;
    fs::write(path, text)?;
    Ok(())
}

/// Reads a file written by [`save_json`], checking the format tag.
pub fn load_json<T: DeserializeOwned>(path: &Path, format: &str) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let text = fs::read_to_string(path)?;
    let env: Envelope<T> =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    if env.format != format {
        return Err(Error::format(
            path,
            format!("expected format {format:?}, found {:?}", env.format),
        ));
    }
    Ok(env.model)
}
