//! Training loop (Adam on the masked reconstruction loss), hyperparameter
//! grid search, and embedding extraction with normalization checks.

use serde::{Deserialize, Serialize};

use crate::embedder::features::{engineer_features, FeatureSet};
use crate::embedder::model::{build_forward, forward, graph_ops, ModelParams};
use crate::embedder::TrainConfig;
use crate::error::{Error, Result};
use crate::numcore::{AdamParams, AdamState, Tape, Tensor, Var};
use crate::votegraph::VotingGraph;

/// One row of the loss curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

/// Everything `train` hands back.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainOutcome {
    /// Parameters snapshotted at the epoch with minimum validation loss.
    pub params: ModelParams,
    pub curve: Vec<EpochLoss>,
    pub best_epoch: usize,
}

/// Learned embeddings with normalization metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    /// `[n, d]`, zero-centered per column; rows indexed by dense node id.
    pub matrix: Tensor,
    /// Column means removed during centering.
    pub col_means: Vec<f64>,
    /// Column standard deviations after centering.
    pub col_stds: Vec<f64>,
    /// Columns whose deviation fell at or below the variability floor.
    pub dead_dims: Vec<usize>,
}

impl EmbeddingMatrix {
    pub fn node_count(&self) -> usize {
        self.matrix.shape()[0]
    }

    pub fn dim(&self) -> usize {
        self.matrix.shape()[1]
    }
}

/// Loss over the rows selected by `mask`: the off-mask rows are zeroed on
/// both sides and the mean is rescaled from all rows to the masked ones.
fn masked_mse(
    tape: &mut Tape,
    pred: Var,
    target: Var,
    mask: Var,
    masked_rows: usize,
    total_rows: usize,
) -> Result<Var> {
    let pm = tape.mul(pred, mask)?;
    let tm = tape.mul(target, mask)?;
    let raw = tape.mse(pm, tm)?;
    let scale = tape.constant(Tensor::scalar(total_rows as f64 / masked_rows as f64));
    tape.mul(raw, scale)
}

fn mask_column(mask: &[bool]) -> (Tensor, usize) {
    let col: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    let count = mask.iter().filter(|&&m| m).count();
    let n = col.len();
    (Tensor::new(vec![n, 1], col).expect("mask shape"), count)
}

/// Trains the model on the graph's engineered features.
///
/// Per-epoch losses are measured before that epoch's update, so the curve
/// entry at the best epoch describes exactly the snapshotted parameters.
pub fn train(graph: &VotingGraph, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let features = engineer_features(graph, config)?;
    train_on_features(&features, config)
}

/// Training entry point for callers that already hold the features.
/// The scalar objective the trainer minimizes, evaluated at `params`:
/// reconstruction MSE over the training rows. Exposed so external gradient
/// validation can probe the exact trained loss.
pub fn reconstruction_loss(params: &ModelParams, features: &FeatureSet) -> Result<f64> {
    reconstruction_loss_and_gradients(params, features).map(|(loss, _)| loss)
}

/// [`reconstruction_loss`] plus one analytic gradient per parameter block,
/// in [`ModelParams::blocks`] order.
pub fn reconstruction_loss_and_gradients(
    params: &ModelParams,
    features: &FeatureSet,
) -> Result<(f64, Vec<Tensor>)> {
    let ops = graph_ops(features);
    let n = features.node_count();
    let (mask_col, n_train) = mask_column(&features.train_mask);
    if n_train == 0 {
        return Err(Error::InvalidParameter(
            "training split selected no voter nodes".into(),
        ));
    }
    let mut tape = Tape::new();
    let pv = params.register(&mut tape);
    let fv = build_forward(&mut tape, &pv, features, &ops)?;
    let target = tape.constant(features.node_features.clone());
    let mask = tape.constant(mask_col);
    let loss = masked_mse(&mut tape, fv.reconstruction, target, mask, n_train, n)?;
    let value = tape.value(loss).data()[0];
    let grads = tape.backward(loss)?;
    let gradients = pv
        .all()
        .iter()
        .zip(params.blocks())
        .map(|(var, (_, block))| {
            grads
                .get(*var)
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(block.shape()))
        })
        .collect();
    Ok((value, gradients))
}

pub fn train_on_features(features: &FeatureSet, config: &TrainConfig) -> Result<TrainOutcome> {
    let ops = graph_ops(features);
    let n = features.node_count();
    let mut params = ModelParams::init(config);
    let hp = AdamParams::with_lr(config.learning_rate);
    let mut adam: Vec<AdamState> = params
        .blocks()
        .iter()
        .map(|(_, t)| AdamState::new(t.numel()))
        .collect();

    let (train_mask_col, n_train) = mask_column(&features.train_mask);
    let (val_mask_col, n_val) = mask_column(&features.val_mask);
    if n_train == 0 {
        return Err(Error::InvalidParameter(
            "training split selected no voter nodes".into(),
        ));
    }

    let mut curve = Vec::with_capacity(config.epochs);
    let mut best_epoch = 0usize;
    let mut best_val = f64::INFINITY;
    let mut best_params = params.clone();

    for epoch in 0..config.epochs {
        let mut tape = Tape::new();
        let pv = params.register(&mut tape);
        let fv = build_forward(&mut tape, &pv, features, &ops)?;
        let target = tape.constant(features.node_features.clone());
        let train_mask = tape.constant(train_mask_col.clone());
        let train_loss = masked_mse(&mut tape, fv.reconstruction, target, train_mask, n_train, n)?;

        let train_mse = tape.value(train_loss).data()[0];
        let val_mse = if n_val > 0 {
            let val_mask = tape.constant(val_mask_col.clone());
            let val_loss = masked_mse(&mut tape, fv.reconstruction, target, val_mask, n_val, n)?;
            tape.value(val_loss).data()[0]
        } else {
            train_mse
        };
        if !train_mse.is_finite() || !val_mse.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        curve.push(EpochLoss {
            epoch,
            train_mse,
            val_mse,
        });
        if val_mse < best_val {
            best_val = val_mse;
            best_epoch = epoch;
            best_params = params.clone();
        }

        let grads = tape.backward(train_loss)?;
        for ((block, state), var) in params
            .blocks_mut()
            .into_iter()
            .zip(adam.iter_mut())
            .zip(pv.all())
        {
            if let Some(g) = grads.get(*var) {
                state
                    .step(block, g, &hp)
                    .map_err(|_| Error::Diverged { epoch })?;
            }
        }
    }

    Ok(TrainOutcome {
        params: best_params,
        curve,
        best_epoch,
    })
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub embedding_dim: usize,
    pub learning_rate: f64,
    pub heads: usize,
    pub seed: u64,
    /// Minimum validation loss of the run; +∞ records a diverged run.
    pub val_mse: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSearchOutcome {
    /// The winning configuration, seed included, so the run can be replayed.
    pub best: TrainConfig,
    pub table: Vec<GridRow>,
}

/// Trains the cartesian product of the grid axes and picks the argmin
/// validation loss; ties go to the lexicographically smallest
/// (dim, lr, heads) tuple. Each run gets seed ⊕ index so runs stay
/// independent yet reproducible.
pub fn grid_search(graph: &VotingGraph, config: &TrainConfig) -> Result<GridSearchOutcome> {
    if config.grid_dims.is_empty() || config.grid_lrs.is_empty() || config.grid_heads.is_empty() {
        return Err(Error::InvalidParameter("empty grid axis".into()));
    }
    let mut dims = config.grid_dims.clone();
    dims.sort_unstable();
    let mut lrs = config.grid_lrs.clone();
    lrs.sort_by(f64::total_cmp);
    let mut heads_axis = config.grid_heads.clone();
    heads_axis.sort_unstable();

    let mut table = Vec::new();
    let mut best: Option<(f64, TrainConfig)> = None;
    let mut index = 0u64;
    for &dim in &dims {
        for &lr in &lrs {
            for &heads in &heads_axis {
                let candidate = TrainConfig {
                    embedding_dim: dim,
                    learning_rate: lr,
                    heads,
                    seed: config.seed ^ index,
                    ..config.clone()
                };
                let val_mse = match train(graph, &candidate) {
                    Ok(outcome) => outcome.curve[outcome.best_epoch].val_mse,
                    Err(Error::Diverged { .. }) => f64::INFINITY,
                    Err(e) => return Err(e),
                };
                table.push(GridRow {
                    embedding_dim: dim,
                    learning_rate: lr,
                    heads,
                    seed: candidate.seed,
                    val_mse,
                });
                // Strict improvement keeps the earliest (smallest) tuple on ties.
                if best.as_ref().map_or(true, |(b, _)| val_mse < *b) {
                    best = Some((val_mse, candidate));
                }
                index += 1;
            }
        }
    }
    let (_, best) = best.expect("grid has at least one point");
    Ok(GridSearchOutcome { best, table })
}

/// Full-graph forward pass, zero-centered per column, with the variability
/// check. Dead columns are reported; if every column is dead the embedding
/// carries no information and that is fatal.
pub fn embed_all(
    params: &ModelParams,
    features: &FeatureSet,
    variability_floor: f64,
) -> Result<EmbeddingMatrix> {
    let (mut emb, _) = forward(params, features)?;
    emb.ensure_finite("embedding matrix")?;
    let (n, d) = (emb.shape()[0], emb.shape()[1]);

    let mut col_means = vec![0.0f64; d];
    for i in 0..n {
        for j in 0..d {
            col_means[j] += emb.get2(i, j);
        }
    }
    for m in &mut col_means {
        *m /= n as f64;
    }
    for i in 0..n {
        for j in 0..d {
            let v = emb.get2(i, j) - col_means[j];
            emb.set2(i, j, v);
        }
    }

    let mut col_stds = vec![0.0f64; d];
    for i in 0..n {
        for j in 0..d {
            col_stds[j] += emb.get2(i, j).powi(2);
        }
    }
    let dead_dims: Vec<usize> = (0..d)
        .filter_map(|j| {
            col_stds[j] = (col_stds[j] / n as f64).sqrt();
            (col_stds[j] <= variability_floor).then_some(j)
        })
        .collect();
    if dead_dims.len() == d {
        return Err(Error::DegenerateEmbedding {
            dims: d,
            floor: variability_floor,
        });
    }

    Ok(EmbeddingMatrix {
        matrix: emb,
        col_means,
        col_stds,
        dead_dims,
    })
}
