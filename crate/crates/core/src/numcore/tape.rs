//! Reverse-mode differentiation over a recorded operation tape.
//!
//! Every forward primitive appends one node to the tape; nodes are therefore
//! already in topological order and a single reverse sweep computes all
//! gradients. Only nodes reachable from a parameter carry gradient buffers.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numcore::tensor::{broadcast_zip, reduce_to_shape, Tensor};

/// Handle to a tensor recorded on a [`Tape`].
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

enum Op {
    Leaf { param: bool },
    Matmul(usize, usize),
    Add(usize, usize),
    Mul(usize, usize),
    Relu(usize),
    Sigmoid(usize),
    Tanh(usize),
    Softmax(usize),
    MeanRows(usize),
    Concat { axis: usize, inputs: Vec<usize> },
    Slice { input: usize, axis: usize, start: usize, end: usize },
    Reshape { input: usize },
    Mse { pred: usize, target: usize },
}

struct TapeNode {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Records primitive operations for one forward pass.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<TapeNode>,
}

/// Gradients keyed by parameter [`Var`], as returned by [`Tape::backward`].
pub struct Gradients {
    by_var: HashMap<usize, Tensor>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.by_var.get(&v.0)
    }

    pub fn len(&self) -> usize {
        self.by_var.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_var.is_empty()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trainable leaf: receives a gradient in [`Tape::backward`].
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf { param: true }, true)
    }

    /// Non-trainable leaf: inputs, masks, targets.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf { param: false }, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(TapeNode {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, i: usize) -> bool {
        self.nodes[i].needs_grad
    }

    /// 2-D matrix product.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if ta.rank() != 2 || tb.rank() != 2 || ta.shape()[1] != tb.shape()[0] {
            return Err(Error::Shape {
                op: "matmul",
                left: ta.shape().to_vec(),
                right: tb.shape().to_vec(),
            });
        }
        let value = matmul_nn(ta, tb);
        let needs = self.needs(a.0) || self.needs(b.0);
        Ok(self.push(value, Op::Matmul(a.0, b.0), needs))
    }

    /// Elementwise addition with numpy-style broadcasting.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        let value = broadcast_zip(ta, tb, |x, y| x + y).ok_or(Error::Shape {
            op: "add",
            left: ta.shape().to_vec(),
            right: tb.shape().to_vec(),
        })?;
        let needs = self.needs(a.0) || self.needs(b.0);
        Ok(self.push(value, Op::Add(a.0, b.0), needs))
    }

    /// Elementwise (Hadamard) product with numpy-style broadcasting.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        let value = broadcast_zip(ta, tb, |x, y| x * y).ok_or(Error::Shape {
            op: "mul",
            left: ta.shape().to_vec(),
            right: tb.shape().to_vec(),
        })?;
        let needs = self.needs(a.0) || self.needs(b.0);
        Ok(self.push(value, Op::Mul(a.0, b.0), needs))
    }

    /// max(x, 0); subgradient at 0 is 0.
    pub fn relu(&mut self, x: Var) -> Var {
        let value = self.nodes[x.0].value.clone().map(|v| v.max(0.0));
        let needs = self.needs(x.0);
        self.push(value, Op::Relu(x.0), needs)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let value = self.nodes[x.0].value.clone().map(stable_sigmoid);
        let needs = self.needs(x.0);
        self.push(value, Op::Sigmoid(x.0), needs)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let value = self.nodes[x.0].value.clone().map(f64::tanh);
        let needs = self.needs(x.0);
        self.push(value, Op::Tanh(x.0), needs)
    }

    /// Row-wise softmax of a 2-D tensor (max-shifted for stability).
    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let t = &self.nodes[x.0].value;
        if t.rank() != 2 {
            return Err(Error::Shape {
                op: "softmax",
                left: t.shape().to_vec(),
                right: vec![],
            });
        }
        let (n, c) = (t.shape()[0], t.shape()[1]);
        let mut data = Vec::with_capacity(n * c);
        for i in 0..n {
            let row = t.row(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            data.extend(exps.iter().map(|e| e / sum));
        }
        let value = Tensor::new(vec![n, c], data)?;
        let needs = self.needs(x.0);
        Ok(self.push(value, Op::Softmax(x.0), needs))
    }

    /// Mean over rows of a 2-D tensor, producing shape `[1, cols]`.
    pub fn mean_rows(&mut self, x: Var) -> Result<Var> {
        let t = &self.nodes[x.0].value;
        if t.rank() != 2 {
            return Err(Error::Shape {
                op: "mean_rows",
                left: t.shape().to_vec(),
                right: vec![],
            });
        }
        let (n, c) = (t.shape()[0], t.shape()[1]);
        let mut out = vec![0.0; c];
        for i in 0..n {
            for (j, v) in t.row(i).iter().enumerate() {
                out[j] += v;
            }
        }
        for v in &mut out {
            *v /= n as f64;
        }
        let value = Tensor::new(vec![1, c], out)?;
        let needs = self.needs(x.0);
        Ok(self.push(value, Op::MeanRows(x.0), needs))
    }

    /// Concatenates tensors along `axis`; all other axes must match.
    pub fn concat(&mut self, axis: usize, inputs: &[Var]) -> Result<Var> {
        if inputs.is_empty() {
            return Err(Error::InvalidParameter("concat: no inputs".into()));
        }
        let first = self.nodes[inputs[0].0].value.shape().to_vec();
        if axis >= first.len() {
            return Err(Error::InvalidParameter(format!(
                "concat: axis {axis} out of range for rank {}",
                first.len()
            )));
        }
        let mut out_shape = first.clone();
        for v in &inputs[1..] {
            let s = self.nodes[v.0].value.shape();
            let compatible = s.len() == first.len()
                && s.iter()
                    .zip(&first)
                    .enumerate()
                    .all(|(i, (a, b))| i == axis || a == b);
            if !compatible {
                return Err(Error::Shape {
                    op: "concat",
                    left: first,
                    right: s.to_vec(),
                });
            }
            out_shape[axis] += s[axis];
        }

        // Copy block-by-block: outer = product of axes before `axis`,
        // inner = product after; each input contributes size[axis]*inner per block.
        let outer: usize = out_shape[..axis].iter().product();
        let inner: usize = out_shape[axis + 1..].iter().product();
        let numel: usize = out_shape.iter().product();
        let mut data = Vec::with_capacity(numel);
        for block in 0..outer {
            for v in inputs {
                let t = &self.nodes[v.0].value;
                let chunk = t.shape()[axis] * inner;
                data.extend_from_slice(&t.data()[block * chunk..(block + 1) * chunk]);
            }
        }
        let value = Tensor::new(out_shape, data)?;
        let needs = inputs.iter().any(|v| self.needs(v.0));
        Ok(self.push(
            value,
            Op::Concat {
                axis,
                inputs: inputs.iter().map(|v| v.0).collect(),
            },
            needs,
        ))
    }

    /// Contiguous range `[start, end)` along `axis`.
    pub fn slice(&mut self, x: Var, axis: usize, start: usize, end: usize) -> Result<Var> {
        let t = &self.nodes[x.0].value;
        let shape = t.shape().to_vec();
        if axis >= shape.len() || start >= end || end > shape[axis] {
            return Err(Error::InvalidParameter(format!(
                "slice: range {start}..{end} on axis {axis} of shape {shape:?}"
            )));
        }
        let mut out_shape = shape.clone();
        out_shape[axis] = end - start;
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let src_stride = shape[axis] * inner;
        let mut data = Vec::with_capacity(out_shape.iter().product());
        for block in 0..outer {
            let base = block * src_stride + start * inner;
            data.extend_from_slice(&t.data()[base..base + (end - start) * inner]);
        }
        let value = Tensor::new(out_shape, data)?;
        let needs = self.needs(x.0);
        Ok(self.push(
            value,
            Op::Slice {
                input: x.0,
                axis,
                start,
                end,
            },
            needs,
        ))
    }

    /// Shape reinterpretation; element count must be unchanged.
    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var> {
        let value = self.nodes[x.0].value.reshaped(shape)?;
        let needs = self.needs(x.0);
        Ok(self.push(value, Op::Reshape { input: x.0 }, needs))
    }

    /// Mean over all elements of the squared difference; scalar output.
    pub fn mse(&mut self, pred: Var, target: Var) -> Result<Var> {
        let (tp, tt) = (&self.nodes[pred.0].value, &self.nodes[target.0].value);
        if tp.shape() != tt.shape() {
            return Err(Error::Shape {
                op: "mse",
                left: tp.shape().to_vec(),
                right: tt.shape().to_vec(),
            });
        }
        let n = tp.numel() as f64;
        let sum: f64 = tp
            .data()
            .iter()
            .zip(tt.data())
            .map(|(p, t)| {
                let d = p - t;
                d * d
            })
            .sum();
        let value = Tensor::scalar(sum / n);
        let needs = self.needs(pred.0) || self.needs(target.0);
        Ok(self.push(
            value,
            Op::Mse {
                pred: pred.0,
                target: target.0,
            },
            needs,
        ))
    }

    /// Reverse sweep from a scalar `loss`. Returns gradients for parameter
    /// leaves only; constants and intermediates are dropped as the sweep passes.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if !self.nodes[loss.0].value.is_scalar() {
            return Err(Error::InvalidParameter(format!(
                "backward: loss must be scalar, got shape {:?}",
                self.nodes[loss.0].value.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = Vec::with_capacity(self.nodes.len());
        grads.resize_with(self.nodes.len(), || None);
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for i in (0..=loss.0).rev() {
            if grads[i].is_none() || !self.nodes[i].needs_grad {
                grads[i] = None;
                continue;
            }
            let g = grads[i].take().unwrap();
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf { param } => {
                    if *param {
                        grads[i] = Some(g); // keep for extraction
                    }
                }
                Op::Matmul(a, b) => {
                    if self.needs(*a) {
                        let da = matmul_nt(&g, &self.nodes[*b].value);
                        accumulate(&mut grads[*a], da);
                    }
                    if self.needs(*b) {
                        let db = matmul_tn(&self.nodes[*a].value, &g);
                        accumulate(&mut grads[*b], db);
                    }
                }
                Op::Add(a, b) => {
                    if self.needs(*a) {
                        accumulate(&mut grads[*a], reduce_to_shape(&g, self.shape_of(*a)));
                    }
                    if self.needs(*b) {
                        accumulate(&mut grads[*b], reduce_to_shape(&g, self.shape_of(*b)));
                    }
                }
                Op::Mul(a, b) => {
                    if self.needs(*a) {
                        let gb = broadcast_zip(&g, &self.nodes[*b].value, |x, y| x * y).unwrap();
                        accumulate(&mut grads[*a], reduce_to_shape(&gb, self.shape_of(*a)));
                    }
                    if self.needs(*b) {
                        let ga = broadcast_zip(&g, &self.nodes[*a].value, |x, y| x * y).unwrap();
                        accumulate(&mut grads[*b], reduce_to_shape(&ga, self.shape_of(*b)));
                    }
                }
                Op::Relu(x) => {
                    let input = &self.nodes[*x].value;
                    let dx = g.zip_with(input, |gv, xv| if xv > 0.0 { gv } else { 0.0 });
                    accumulate(&mut grads[*x], dx);
                }
                Op::Sigmoid(x) => {
                    let y = &node.value;
                    let dx = g.zip_with(y, |gv, yv| gv * yv * (1.0 - yv));
                    accumulate(&mut grads[*x], dx);
                }
                Op::Tanh(x) => {
                    let y = &node.value;
                    let dx = g.zip_with(y, |gv, yv| gv * (1.0 - yv * yv));
                    accumulate(&mut grads[*x], dx);
                }
                Op::Softmax(x) => {
                    let y = &node.value;
                    let (n, c) = (y.shape()[0], y.shape()[1]);
                    let mut dx = vec![0.0; n * c];
                    for r in 0..n {
                        let yr = y.row(r);
                        let gr = g.row(r);
                        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for j in 0..c {
                            dx[r * c + j] = yr[j] * (gr[j] - dot);
                        }
                    }
                    accumulate(&mut grads[*x], Tensor::new(vec![n, c], dx).unwrap());
                }
                Op::MeanRows(x) => {
                    let shape = self.shape_of(*x);
                    let (n, c) = (shape[0], shape[1]);
                    let scale = 1.0 / n as f64;
                    let mut dx = Vec::with_capacity(n * c);
                    for _ in 0..n {
                        dx.extend(g.data().iter().map(|v| v * scale));
                    }
                    accumulate(&mut grads[*x], Tensor::new(vec![n, c], dx).unwrap());
                }
                Op::Concat { axis, inputs } => {
                    let mut offset = 0;
                    for &inp in inputs {
                        let span = self.shape_of(inp)[*axis];
                        if self.needs(inp) {
                            let piece = slice_raw(&g, *axis, offset, offset + span);
                            accumulate(&mut grads[inp], piece);
                        }
                        offset += span;
                    }
                }
                Op::Slice {
                    input,
                    axis,
                    start,
                    end,
                } => {
                    let shape = self.shape_of(*input).to_vec();
                    let mut dx = Tensor::zeros(&shape);
                    paste_slice(&mut dx, &g, *axis, *start, *end);
                    accumulate(&mut grads[*input], dx);
                }
                Op::Reshape { input } => {
                    let shape = self.shape_of(*input).to_vec();
                    accumulate(&mut grads[*input], g.reshaped(shape).unwrap());
                }
                Op::Mse { pred, target } => {
                    let tp = &self.nodes[*pred].value;
                    let tt = &self.nodes[*target].value;
                    let scale = 2.0 / tp.numel() as f64 * g.data()[0];
                    if self.needs(*pred) {
                        let dp = tp.zip_with(tt, |p, t| scale * (p - t));
                        accumulate(&mut grads[*pred], dp);
                    }
                    if self.needs(*target) {
                        let dt = tp.zip_with(tt, |p, t| -scale * (p - t));
                        accumulate(&mut grads[*target], dt);
                    }
                }
            }
        }

        let mut by_var = HashMap::new();
        for (i, slot) in grads.into_iter().enumerate() {
            if let (Some(gr), Op::Leaf { param: true }) = (slot, &self.nodes[i].op) {
                by_var.insert(i, gr);
            }
        }
        Ok(Gradients { by_var })
    }

    fn shape_of(&self, i: usize) -> &[usize] {
        self.nodes[i].value.shape()
    }
}

impl Tensor {
    fn map(mut self, f: impl Fn(f64) -> f64) -> Tensor {
        for v in self.data_mut() {
            *v = f(*v);
        }
        self
    }

    fn zip_with(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
        debug_assert_eq!(self.shape(), other.shape());
        let data = self
            .data()
            .iter()
            .zip(other.data())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Tensor::new(self.shape().to_vec(), data).unwrap()
    }
}

fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// C = A * B. Zero entries of A are skipped, which makes products with
/// sparse aggregation/mask matrices cost O(nnz * cols).
fn matmul_nn(a: &Tensor, b: &Tensor) -> Tensor {
    let m = a.shape()[0];
    let n = b.shape()[1];
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let arow = a.row(i);
        let orow = &mut out[i * n..(i + 1) * n];
        for (kk, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let brow = &b.data()[kk * n..(kk + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    Tensor::new(vec![m, n], out).unwrap()
}

/// C = A * B^T, without materializing the transpose.
fn matmul_nt(a: &Tensor, b: &Tensor) -> Tensor {
    let m = a.shape()[0];
    let n = b.shape()[0];
    debug_assert_eq!(a.shape()[1], b.shape()[1]);
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let arow = a.row(i);
        let orow = &mut out[i * n..(i + 1) * n];
        for (j, o) in orow.iter_mut().enumerate() {
            let brow = b.row(j);
            *o = arow.iter().zip(brow).map(|(x, y)| x * y).sum();
        }
    }
    Tensor::new(vec![m, n], out).unwrap()
}

/// C = A^T * B, without materializing the transpose.
fn matmul_tn(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k) = (a.shape()[0], a.shape()[1]);
    let n = b.shape()[1];
    debug_assert_eq!(m, b.shape()[0]);
    let mut out = vec![0.0; k * n];
    for i in 0..m {
        let arow = a.row(i);
        let brow = b.row(i);
        for (kk, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let orow = &mut out[kk * n..(kk + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    Tensor::new(vec![k, n], out).unwrap()
}

fn slice_raw(t: &Tensor, axis: usize, start: usize, end: usize) -> Tensor {
    let shape = t.shape();
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let src_stride = shape[axis] * inner;
    let mut out_shape = shape.to_vec();
    out_shape[axis] = end - start;
    let mut data = Vec::with_capacity(out_shape.iter().product());
    for block in 0..outer {
        let base = block * src_stride + start * inner;
        data.extend_from_slice(&t.data()[base..base + (end - start) * inner]);
    }
    Tensor::new(out_shape, data).unwrap()
}

fn paste_slice(dst: &mut Tensor, src: &Tensor, axis: usize, start: usize, end: usize) {
    let shape = dst.shape().to_vec();
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let dst_stride = shape[axis] * inner;
    let span = (end - start) * inner;
    for block in 0..outer {
        let dbase = block * dst_stride + start * inner;
        let sbase = block * span;
        dst.data_mut()[dbase..dbase + span].copy_from_slice(&src.data()[sbase..sbase + span]);
    }
}

fn accumulate(slot: &mut Option<Tensor>, add: Tensor) {
    match slot {
        Some(existing) => {
            debug_assert_eq!(existing.shape(), add.shape());
            for (e, a) in existing.data_mut().iter_mut().zip(add.data()) {
                *e += a;
            }
        }
        None => *slot = Some(add),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_definition() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new(vec![3], vec![-1.0, 0.0, 2.0]).unwrap());
        let y = tape.relu(x);
        assert_eq!(tape.value(y).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn softmax_symmetry_and_row_sums() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::from_rows(&[vec![0.0, 0.0], vec![3.0, 1.0]]));
        let y = tape.softmax(x).unwrap();
        let v = tape.value(y);
        assert_eq!(v.row(0), &[0.5, 0.5]);
        for i in 0..2 {
            let s: f64 = v.row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(v.row(i).iter().all(|&p| p > 0.0 && p < 1.0));
        }
    }

    #[test]
    fn matmul_ones() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::ones(&[2, 3]));
        let b = tape.constant(Tensor::ones(&[3, 2]));
        let c = tape.matmul(a, b).unwrap();
        assert_eq!(tape.value(c).data(), &[3.0; 4]);
    }

    #[test]
    fn matmul_shape_error_names_both() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::ones(&[2, 3]));
        let b = tape.constant(Tensor::ones(&[2, 2]));
        match tape.matmul(a, b) {
            Err(Error::Shape { left, right, .. }) => {
                assert_eq!(left, vec![2, 3]);
                assert_eq!(right, vec![2, 2]);
            }
            other => panic!("expected shape error, got {other:?}"),
        }
    }

    #[test]
    fn mse_examples() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::new(vec![2], vec![1.0, 1.0]).unwrap());
        let z = tape.constant(Tensor::new(vec![2], vec![0.0, 0.0]).unwrap());
        let l = tape.mse(a, z).unwrap();
        assert_eq!(tape.value(l).data()[0], 1.0);

        let p = tape.constant(Tensor::scalar(2.0));
        let t = tape.constant(Tensor::scalar(0.0));
        let l2 = tape.mse(p, t).unwrap();
        assert_eq!(tape.value(l2).data()[0], 4.0);

        let same = tape.mse(a, a).unwrap();
        assert_eq!(tape.value(same).data()[0], 0.0);
    }

    #[test]
    fn backward_quadratic() {
        // loss = mse(w, 0) with w = [3] has gradient 2w/1 = [6].
        let mut tape = Tape::new();
        let w = tape.param(Tensor::new(vec![1], vec![3.0]).unwrap());
        let zero = tape.constant(Tensor::new(vec![1], vec![0.0]).unwrap());
        let loss = tape.mse(w, zero).unwrap();
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(w).unwrap().data(), &[6.0]);
    }

    #[test]
    fn backward_unused_param_gets_no_entry() {
        let mut tape = Tape::new();
        let w = tape.param(Tensor::scalar(3.0));
        let p = tape.param(Tensor::scalar(5.0));
        let zero = tape.constant(Tensor::scalar(0.0));
        let loss = tape.mse(w, zero).unwrap();
        let grads = tape.backward(loss).unwrap();
        assert!(grads.get(w).is_some());
        // p does not influence the loss: no gradient flows to it.
        assert!(grads.get(p).is_none());
    }

    #[test]
    fn backward_dead_relu() {
        // relu(w) * x at w < 0 has zero gradient through the relu.
        let mut tape = Tape::new();
        let w = tape.param(Tensor::scalar(-2.0));
        let x = tape.constant(Tensor::scalar(7.0));
        let r = tape.relu(w);
        let y = tape.mul(r, x).unwrap();
        let zero = tape.constant(Tensor::scalar(0.0));
        let loss = tape.mse(y, zero).unwrap();
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(w).unwrap().data(), &[0.0]);
    }

    #[test]
    fn backward_rejects_non_scalar_loss() {
        let mut tape = Tape::new();
        let w = tape.param(Tensor::ones(&[2, 2]));
        assert!(matches!(
            tape.backward(w),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn mean_rows_constant_matrix() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::from_rows(&[vec![2.0, 5.0], vec![2.0, 5.0]]));
        let m = tape.mean_rows(x).unwrap();
        assert_eq!(tape.value(m).data(), &[2.0, 5.0]);
    }

    #[test]
    fn concat_and_slice_round_trip() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::from_rows(&[vec![1.0], vec![2.0]]));
        let b = tape.constant(Tensor::from_rows(&[vec![3.0, 4.0], vec![5.0, 6.0]]));
        let c = tape.concat(1, &[a, b]).unwrap();
        assert_eq!(tape.value(c).data(), &[1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
        let s = tape.slice(c, 1, 1, 3).unwrap();
        assert_eq!(tape.value(s).data(), tape.value(b).data());
    }

    #[test]
    fn slice_3d_step() {
        let mut tape = Tape::new();
        // shape [2, 3, 2]: two "nodes", three steps, two features
        let t = tape.constant(
            Tensor::new(vec![2, 3, 2], (0..12).map(f64::from).collect()).unwrap(),
        );
        let step1 = tape.slice(t, 1, 1, 2).unwrap();
        assert_eq!(tape.value(step1).shape(), &[2, 1, 2]);
        assert_eq!(tape.value(step1).data(), &[2.0, 3.0, 8.0, 9.0]);
        let flat = tape.reshape(step1, vec![2, 2]).unwrap();
        assert_eq!(tape.value(flat).shape(), &[2, 2]);
    }
}
