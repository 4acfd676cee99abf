//! Feature engineering and the four-layer graph network that learns node
//! embeddings from the voting graph.

mod features;
mod model;
mod train;

pub use features::{engineer_features, raw_node_features, FeatureSet, NODE_FEATURES, SEQ_FEATURES};
pub use model::{forward, ModelParams};
pub use train::{
    embed_all, grid_search, reconstruction_loss, reconstruction_loss_and_gradients, train,
    train_on_features, EmbeddingMatrix, EpochLoss, GridRow, GridSearchOutcome, TrainOutcome,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters for feature engineering, training, and grid search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Embedding dimension d.
    pub embedding_dim: usize,
    /// Hidden width shared by the FC, MLP, LSTM, and attention-head layers.
    pub hidden: usize,
    /// Temporal sequence length T.
    pub seq_len: usize,
    /// Attention head count H.
    pub heads: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Train/validation/test fractions over voter nodes; must sum to 1.
    pub split: (f64, f64, f64),
    pub seed: u64,
    /// Minimum per-column standard deviation an embedding dimension must
    /// show to count as alive.
    pub variability_floor: f64,
    /// Grid-search axes (cartesian product).
    pub grid_dims: Vec<usize>,
    pub grid_lrs: Vec<f64>,
    pub grid_heads: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 32,
            hidden: 64,
            seq_len: 32,
            heads: 4,
            learning_rate: 1e-2,
            epochs: 200,
            split: (0.7, 0.15, 0.15),
            seed: 0,
            variability_floor: 1e-6,
            grid_dims: vec![16, 32],
            grid_lrs: vec![1e-2, 1e-3],
            grid_heads: vec![2, 4],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 || self.hidden == 0 || self.seq_len == 0 || self.heads == 0 {
            return Err(Error::InvalidParameter(
                "model dimensions must all be at least 1".into(),
            ));
        }
        let (a, b, c) = self.split;
        if a < 0.0 || b < 0.0 || c < 0.0 || (a + b + c - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "split fractions {:?} must be non-negative and sum to 1",
                self.split
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be at least 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}
