//! Dense networks with tanh hidden layers, mean-squared-error gradients,
//! Adam and z-score normalization.

mod adam;
mod dense;
mod file;
mod normalizer;

pub use adam::{AdamConfig, AdamState};
pub use dense::{row, Activation, DenseNet, Gradients, Layer};
pub use file::{load_json, save_json};
pub use normalizer::{Normalizer, STD_FLOOR};
