//! The four-layer model: fully connected input map, per-node MLP with mean
//! neighborhood aggregation, an LSTM over temporal sequences, and multi-head
//! attention over the adjacency, followed by a linear decoder that
//! reconstructs the node features.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::embedder::features::{FeatureSet, NODE_FEATURES, SEQ_FEATURES};
use crate::embedder::TrainConfig;
use crate::error::Result;
use crate::numcore::{Tape, Tensor, Var};

/// Additive mask value that zeroes an attention logit after softmax.
const MASK_OFF: f64 = -1e30;

/// All trainable tensors of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub fc_w: Tensor,
    pub fc_b: Tensor,
    pub mlp_w1: Tensor,
    pub mlp_b1: Tensor,
    pub mlp_w2: Tensor,
    pub mlp_b2: Tensor,
    /// Combined gate weights `[s + h, 4h]`, gate order i, f, g, o.
    pub lstm_w: Tensor,
    pub lstm_b: Tensor,
    /// Per-head projection `[2h, h]` and attention vectors `[h, 1]`.
    pub gat_w: Vec<Tensor>,
    pub gat_a_src: Vec<Tensor>,
    pub gat_a_dst: Vec<Tensor>,
    /// Concatenated heads `[H*h, d]` to the embedding space.
    pub gat_out: Tensor,
    pub dec_w: Tensor,
    pub dec_b: Tensor,
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases, drawn deterministically from the
    /// config seed.
    pub fn init(config: &TrainConfig) -> Self {
        let h = config.hidden;
        let d = config.embedding_dim;
        let f = NODE_FEATURES;
        let s = SEQ_FEATURES;
        let heads = config.heads;
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed.wrapping_add(0x9e37_79b9));

        let mut gat_w = Vec::with_capacity(heads);
        let mut gat_a_src = Vec::with_capacity(heads);
        let mut gat_a_dst = Vec::with_capacity(heads);
        let fc_w = Tensor::glorot(f + 1, h, &mut rng);
        let mlp_w1 = Tensor::glorot(h, h, &mut rng);
        let mlp_w2 = Tensor::glorot(h, h, &mut rng);
        let lstm_w = Tensor::glorot(s + h, 4 * h, &mut rng);
        for _ in 0..heads {
            gat_w.push(Tensor::glorot(2 * h, h, &mut rng));
            gat_a_src.push(Tensor::glorot(h, 1, &mut rng));
            gat_a_dst.push(Tensor::glorot(h, 1, &mut rng));
        }
        let gat_out = Tensor::glorot(heads * h, d, &mut rng);
        let dec_w = Tensor::glorot(d, f, &mut rng);

        Self {
            fc_w,
            fc_b: Tensor::zeros(&[1, h]),
            mlp_w1,
            mlp_b1: Tensor::zeros(&[1, h]),
            mlp_w2,
            mlp_b2: Tensor::zeros(&[1, h]),
            lstm_w,
            lstm_b: Tensor::zeros(&[1, 4 * h]),
            gat_w,
            gat_a_src,
            gat_a_dst,
            gat_out,
            dec_w,
            dec_b: Tensor::zeros(&[1, f]),
        }
    }

    /// Canonically ordered named views of every parameter block.
    pub fn blocks(&self) -> Vec<(String, &Tensor)> {
        let mut out: Vec<(String, &Tensor)> = vec![
            ("fc.w".into(), &self.fc_w),
            ("fc.b".into(), &self.fc_b),
            ("mlp.w1".into(), &self.mlp_w1),
            ("mlp.b1".into(), &self.mlp_b1),
            ("mlp.w2".into(), &self.mlp_w2),
            ("mlp.b2".into(), &self.mlp_b2),
            ("lstm.w".into(), &self.lstm_w),
            ("lstm.b".into(), &self.lstm_b),
        ];
        for (k, t) in self.gat_w.iter().enumerate() {
            out.push((format!("gat.{k}.w"), t));
        }
        for (k, t) in self.gat_a_src.iter().enumerate() {
            out.push((format!("gat.{k}.a_src"), t));
        }
        for (k, t) in self.gat_a_dst.iter().enumerate() {
            out.push((format!("gat.{k}.a_dst"), t));
        }
        out.push(("gat.out".into(), &self.gat_out));
        out.push(("dec.w".into(), &self.dec_w));
        out.push(("dec.b".into(), &self.dec_b));
        out
    }

    /// Mutable views in the same order as [`ModelParams::blocks`].
    pub fn blocks_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = vec![
            &mut self.fc_w,
            &mut self.fc_b,
            &mut self.mlp_w1,
            &mut self.mlp_b1,
            &mut self.mlp_w2,
            &mut self.mlp_b2,
            &mut self.lstm_w,
            &mut self.lstm_b,
        ];
        out.extend(self.gat_w.iter_mut());
        out.extend(self.gat_a_src.iter_mut());
        out.extend(self.gat_a_dst.iter_mut());
        out.push(&mut self.gat_out);
        out.push(&mut self.dec_w);
        out.push(&mut self.dec_b);
        out
    }

    /// Registers every block on the tape as a trainable parameter, in
    /// [`ModelParams::blocks`] order.
    pub(crate) fn register(&self, tape: &mut Tape) -> ParamVars {
        let vars: Vec<Var> = self
            .blocks()
            .into_iter()
            .map(|(_, t)| tape.param(t.clone()))
            .collect();
        let heads = self.gat_w.len();
        ParamVars { vars, heads }
    }
}

/// Tape handles for the registered parameter blocks.
pub(crate) struct ParamVars {
    vars: Vec<Var>,
    heads: usize,
}

impl ParamVars {
    pub(crate) fn all(&self) -> &[Var] {
        &self.vars
    }

    fn fc_w(&self) -> Var {
        self.vars[0]
    }
    fn fc_b(&self) -> Var {
        self.vars[1]
    }
    fn mlp_w1(&self) -> Var {
        self.vars[2]
    }
    fn mlp_b1(&self) -> Var {
        self.vars[3]
    }
    fn mlp_w2(&self) -> Var {
        self.vars[4]
    }
    fn mlp_b2(&self) -> Var {
        self.vars[5]
    }
    fn lstm_w(&self) -> Var {
        self.vars[6]
    }
    fn lstm_b(&self) -> Var {
        self.vars[7]
    }
    fn gat_w(&self, k: usize) -> Var {
        self.vars[8 + k]
    }
    fn gat_a_src(&self, k: usize) -> Var {
        self.vars[8 + self.heads + k]
    }
    fn gat_a_dst(&self, k: usize) -> Var {
        self.vars[8 + 2 * self.heads + k]
    }
    fn gat_out(&self) -> Var {
        self.vars[8 + 3 * self.heads]
    }
    fn dec_w(&self) -> Var {
        self.vars[8 + 3 * self.heads + 1]
    }
    fn dec_b(&self) -> Var {
        self.vars[8 + 3 * self.heads + 2]
    }
}

/// Constant matrices derived from graph structure, shared across epochs.
pub(crate) struct GraphOps {
    /// `[n, n]`: row i averages over simple neighbors of i plus i itself.
    pub a_mean: Tensor,
    /// `[n, n]`: 0 on self and simple neighbors, very negative elsewhere.
    pub att_mask: Tensor,
    /// `[n, 1]`: z-scored raw incident power sums (the layer-1 edge signal).
    pub power_agg: Tensor,
}

pub(crate) fn graph_ops(features: &FeatureSet) -> GraphOps {
    let n = features.node_count();
    let mut neighbor_sets: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); n];
    let mut power_sum = vec![0.0f64; n];
    for (&(a, b), &p) in features.edge_index.iter().zip(&features.edge_power) {
        neighbor_sets[a].insert(b);
        neighbor_sets[b].insert(a);
        power_sum[a] += p;
        power_sum[b] += p;
    }

    let mut a_mean = Tensor::zeros(&[n, n]);
    let mut att_mask = Tensor::filled(&[n, n], MASK_OFF);
    for i in 0..n {
        let weight = 1.0 / (neighbor_sets[i].len() + 1) as f64;
        a_mean.set2(i, i, weight);
        att_mask.set2(i, i, 0.0);
        for &j in &neighbor_sets[i] {
            a_mean.set2(i, j, weight);
            att_mask.set2(i, j, 0.0);
        }
    }

    let mean = power_sum.iter().sum::<f64>() / n as f64;
    let var = power_sum.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    let z: Vec<f64> = power_sum
        .iter()
        .map(|v| if std < 1e-12 { 0.0 } else { (v - mean) / std })
        .collect();
    let power_agg = Tensor::new(vec![n, 1], z).expect("power column shape");

    GraphOps {
        a_mean,
        att_mask,
        power_agg,
    }
}

/// Tape handles for the model outputs.
pub(crate) struct ForwardVars {
    pub embeddings: Var,
    pub reconstruction: Var,
}

/// Records the whole forward pass onto `tape`.
pub(crate) fn build_forward(
    tape: &mut Tape,
    pv: &ParamVars,
    features: &FeatureSet,
    ops: &GraphOps,
) -> Result<ForwardVars> {
    let n = features.node_count();
    let t_len = features.seq_len();
    let h = tape.value(pv.fc_b()).shape()[1];

    let x = tape.constant(features.node_features.clone());
    let power = tape.constant(ops.power_agg.clone());
    let a_mean = tape.constant(ops.a_mean.clone());
    let att_mask = tape.constant(ops.att_mask.clone());
    let seq = tape.constant(features.temporal_sequences.clone());

    // Layer 1: affine map of features ⊕ aggregate edge power.
    let x1 = tape.concat(1, &[x, power])?;
    let h1 = tape.matmul(x1, pv.fc_w())?;
    let h1 = tape.add(h1, pv.fc_b())?;

    // Layer 2: per-node MLP, then self-inclusive mean over neighbors.
    let m = tape.matmul(h1, pv.mlp_w1())?;
    let m = tape.add(m, pv.mlp_b1())?;
    let m = tape.relu(m);
    let m = tape.matmul(m, pv.mlp_w2())?;
    let m = tape.add(m, pv.mlp_b2())?;
    let h2 = tape.matmul(a_mean, m)?;

    // Layer 3: LSTM over each node's temporal sequence; gates i, f, g, o
    // share one combined weight matrix.
    let mut h_state = tape.constant(Tensor::zeros(&[n, h]));
    let mut c_state = tape.constant(Tensor::zeros(&[n, h]));
    for t in 0..t_len {
        let x_t = tape.slice(seq, 1, t, t + 1)?;
        let x_t = tape.reshape(x_t, vec![n, SEQ_FEATURES])?;
        let z = tape.concat(1, &[x_t, h_state])?;
        let gates = tape.matmul(z, pv.lstm_w())?;
        let gates = tape.add(gates, pv.lstm_b())?;
        let i_g = tape.slice(gates, 1, 0, h)?;
        let f_g = tape.slice(gates, 1, h, 2 * h)?;
        let g_g = tape.slice(gates, 1, 2 * h, 3 * h)?;
        let o_g = tape.slice(gates, 1, 3 * h, 4 * h)?;
        let i_g = tape.sigmoid(i_g);
        let f_g = tape.sigmoid(f_g);
        let g_g = tape.tanh(g_g);
        let o_g = tape.sigmoid(o_g);
        let keep = tape.mul(f_g, c_state)?;
        let write = tape.mul(i_g, g_g)?;
        c_state = tape.add(keep, write)?;
        let c_act = tape.tanh(c_state);
        h_state = tape.mul(o_g, c_act)?;
    }

    // Structural and temporal signals side by side.
    let z3 = tape.concat(1, &[h2, h_state])?;

    // Layer 4: multi-head attention restricted to the adjacency
    // (self-loops included), heads concatenated then projected to d.
    let mut head_outputs = Vec::with_capacity(pv.heads);
    for k in 0..pv.heads {
        let wh = tape.matmul(z3, pv.gat_w(k))?;
        let s_src = tape.matmul(wh, pv.gat_a_src(k))?;
        let s_dst = tape.matmul(wh, pv.gat_a_dst(k))?;
        let s_dst_row = tape.reshape(s_dst, vec![1, n])?;
        let scores = tape.add(s_src, s_dst_row)?; // broadcast to [n, n]
        let scores = tape.tanh(scores);
        let masked = tape.add(scores, att_mask)?;
        let attn = tape.softmax(masked)?;
        head_outputs.push(tape.matmul(attn, wh)?);
    }
    let heads_cat = if head_outputs.len() == 1 {
        head_outputs[0]
    } else {
        tape.concat(1, &head_outputs)?
    };
    let embeddings = tape.matmul(heads_cat, pv.gat_out())?;

    // Linear decoder back to feature space for the reconstruction loss.
    let rec = tape.matmul(embeddings, pv.dec_w())?;
    let reconstruction = tape.add(rec, pv.dec_b())?;

    Ok(ForwardVars {
        embeddings,
        reconstruction,
    })
}

/// Runs the model and returns (raw embeddings `[n, d]`, reconstruction
/// `[n, f]`).
pub fn forward(params: &ModelParams, features: &FeatureSet) -> Result<(Tensor, Tensor)> {
    let ops = graph_ops(features);
    let mut tape = Tape::new();
    let pv = params.register(&mut tape);
    let fv = build_forward(&mut tape, &pv, features, &ops)?;
    Ok((
        tape.value(fv.embeddings).clone(),
        tape.value(fv.reconstruction).clone(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedder::features::engineer_features;
    use crate::ingest::VoteRecord;
    use crate::votegraph::build_voting_graph;

    fn vote(addr: &str, prop: &str, ts: i64, power: f64) -> VoteRecord {
        VoteRecord {
            voter_address: addr.into(),
            proposal_id: prop.into(),
            space_id: "dao".into(),
            voting_power: power,
            timestamp: ts,
            choice: 1,
        }
    }

    fn small_config() -> TrainConfig {
        TrainConfig {
            embedding_dim: 4,
            hidden: 6,
            seq_len: 3,
            heads: 2,
            ..TrainConfig::default()
        }
    }

    fn zeroed(params: &ModelParams) -> ModelParams {
        let mut p = params.clone();
        for t in p.blocks_mut() {
            for v in t.data_mut() {
                *v = 0.0;
            }
        }
        p
    }

    #[test]
    fn zero_params_zero_output_on_isolated_node() {
        // One registry-only voter: no edges, all-zero features after
        // z-scoring a single row.
        let g = build_voting_graph(&[], &[("0xa".to_string(), "alice".to_string())]).unwrap();
        let cfg = small_config();
        let fs = engineer_features(&g, &cfg).unwrap();
        let params = zeroed(&ModelParams::init(&cfg));
        let (emb, rec) = forward(&params, &fs).unwrap();
        assert!(emb.data().iter().all(|&v| v == 0.0));
        assert!(rec.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identical_nodes_get_identical_embeddings() {
        let votes = vec![
            vote("0xa", "p1", 100, 2.0),
            vote("0xb", "p1", 100, 2.0),
            vote("0xc", "p2", 300, 9.0),
            vote("0xc", "p1", 500, 1.0),
        ];
        let g = build_voting_graph(&votes, &[]).unwrap();
        let cfg = small_config();
        let fs = engineer_features(&g, &cfg).unwrap();
        let params = ModelParams::init(&cfg);
        let (emb, _) = forward(&params, &fs).unwrap();
        let (a, b) = (g.voters[0].node_id, g.voters[1].node_id);
        assert_eq!(emb.row(a), emb.row(b));
        let c = g.voters[2].node_id;
        assert_ne!(emb.row(a), emb.row(c));
    }

    #[test]
    fn attention_rows_sum_to_one_on_neighborhood() {
        // Verified indirectly: uniform features through softmax-masked
        // attention keep outputs finite, and an isolated node passes its own
        // projection through (softmax over a single unmasked logit is 1).
        let g = build_voting_graph(
            &[vote("0xa", "p1", 100, 2.0)],
            &[("0xzz".to_string(), "loner".to_string())],
        )
        .unwrap();
        let cfg = small_config();
        let fs = engineer_features(&g, &cfg).unwrap();
        let params = ModelParams::init(&cfg);
        let (emb, rec) = forward(&params, &fs).unwrap();
        assert!(emb.all_finite());
        assert!(rec.all_finite());
        assert_eq!(emb.shape(), &[3, 4]);
        assert_eq!(rec.shape(), &[3, NODE_FEATURES]);
    }

    #[test]
    fn init_is_seed_deterministic() {
        let cfg = small_config();
        let a = ModelParams::init(&cfg);
        let b = ModelParams::init(&cfg);
        assert_eq!(a, b);
        let c = ModelParams::init(&TrainConfig {
            seed: 7,
            ..small_config()
        });
        assert_ne!(a, c);
    }

    #[test]
    fn block_views_are_aligned() {
        let cfg = small_config();
        let mut params = ModelParams::init(&cfg);
        let names: Vec<String> = params.blocks().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names.len(), 8 + 3 * cfg.heads + 3);
        let shapes: Vec<Vec<usize>> = params
            .blocks()
            .into_iter()
            .map(|(_, t)| t.shape().to_vec())
            .collect();
        let shapes_mut: Vec<Vec<usize>> = params
            .blocks_mut()
            .into_iter()
            .map(|t| t.shape().to_vec())
            .collect();
        assert_eq!(shapes, shapes_mut);
    }
}
