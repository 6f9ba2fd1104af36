//! Transformer encoder-decoder that reads a BPE-tokenized hypothesis and
//! writes the caller's name one character at a time.
//!
//! The model is a PreNorm encoder-decoder with sinusoidal positions, one
//! embedding table shared by source and target ids, GELU feed-forward
//! blocks and a separate output projection over the character classes.
//! Forward and backward passes are written out by hand over flat `f64`
//! buffers; [`Parameters`] addresses every tensor by a stable path.

mod adam;
mod checkpoint;
mod decode;
pub mod kernels;
mod model;
mod params;
mod train;

use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use decode::{beam_decode, greedy_decode, predict_name, predict_name_with, ConfidenceMode, Decoded};
pub use model::{
    decoder_forward, decoder_forward_with_attention, encode, encode_with_attention, gradients, loss, TrainPair,
};
pub use params::{init_model, Gradients, ModelConfig, Parameters, TensorSpec};
pub use train::{prepare_pairs, train, EpochStats, Trainer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Epochs without dev-loss improvement before stopping.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            learning_rate: 1.0e-5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 20,
            seed: 0,
            patience: 3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.batch_size == 0 {
            return Err(crate::Error::Config("batch_size must be >= 1".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(crate::Error::Config("learning_rate must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(crate::Error::Config("adam betas must lie in [0,1)".into()));
        }
        Ok(())
    }
}
