//! Define-by-run reverse-mode autodiff over dense 2-D tensors.
//!
//! A [`Graph`] is rebuilt for every forward pass; node insertion order is
//! the topological order, and backward walks it in exact reverse. Every
//! operation validates shapes and rejects non-finite outputs.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::tensor::{matmul_acc, matmul_nt_acc, matmul_tn_acc, Tensor};
use crate::Result;

/// Handle to a node inside one [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub usize);

/// Predictions are clamped to `[LOG_CLAMP, 1]` before the log in
/// cross-entropy.
pub const LOG_CLAMP: f64 = 1e-12;

const BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul {
        a: NodeId,
        b: NodeId,
    },
    AddBias {
        a: NodeId,
        b: NodeId,
    },
    Add {
        a: NodeId,
        b: NodeId,
    },
    Sub {
        a: NodeId,
        b: NodeId,
    },
    Mul {
        a: NodeId,
        b: NodeId,
    },
    Scale {
        a: NodeId,
        factor: f64,
    },
    Relu {
        a: NodeId,
    },
    Sigmoid {
        a: NodeId,
    },
    SoftmaxRows {
        a: NodeId,
    },
    LogClamped {
        a: NodeId,
    },
    Sum {
        a: NodeId,
    },
    ConcatCols {
        parts: Vec<NodeId>,
    },
    BatchNormTrain {
        a: NodeId,
        gamma: NodeId,
        beta: NodeId,
        x_hat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    BatchNormEval {
        a: NodeId,
        gamma: NodeId,
        beta: NodeId,
        x_hat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    PowerNormalize {
        a: NodeId,
        /// Per-row 2-norm of the input; 0.0 marks a passed-through zero row.
        norms: Vec<f64>,
    },
    ChannelAffine {
        a: NodeId,
        gains: Vec<f64>,
    },
}

struct Node {
    op: Op,
    value: Tensor,
    trainable: bool,
    grad: Option<Vec<f64>>,
}

/// A single forward pass recorded as a tape.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Gradient accumulated at `id` by the last [`Graph::backward`] call.
    pub fn grad(&self, id: NodeId) -> Option<&[f64]> {
        self.nodes[id.0].grad.as_deref()
    }

    pub fn is_trainable(&self, id: NodeId) -> bool {
        self.nodes[id.0].trainable
    }

    fn push(&mut self, op: Op, value: Tensor, trainable: bool, name: &'static str) -> Result<NodeId> {
        if !value.is_finite() {
            return Err(Error::NonFinite { op: name });
        }
        self.nodes.push(Node {
            op,
            value,
            trainable,
            grad: None,
        });
        Ok(NodeId(self.nodes.len() - 1))
    }

    /// Inserts an input tensor. Trainable leaves receive gradients on
    /// backward; constants do not.
    pub fn leaf(&mut self, value: Tensor, trainable: bool) -> Result<NodeId> {
        self.push(Op::Leaf, value, trainable, "leaf")
    }

    pub fn constant(&mut self, value: Tensor) -> Result<NodeId> {
        self.leaf(value, false)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ar, ac) = self.value(a).shape();
        let (br, bc) = self.value(b).shape();
        if ac != br {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                lhs: (ar, ac),
                rhs: (br, bc),
            });
        }
        let mut out = Tensor::zeros(ar, bc);
        matmul_acc(
            &mut out.data,
            &self.value(a).data,
            &self.value(b).data,
            ar,
            ac,
            bc,
        );
        self.push(Op::MatMul { a, b }, out, false, "matmul")
    }

    /// Row-broadcast addition of a `1 x O` bias to an `N x O` matrix.
    pub fn add_bias(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ar, ac) = self.value(a).shape();
        let (br, bc) = self.value(b).shape();
        if br != 1 || bc != ac {
            return Err(Error::ShapeMismatch {
                op: "add_bias",
                lhs: (ar, ac),
                rhs: (br, bc),
            });
        }
        let mut out = self.value(a).clone();
        out.grad = None;
        out.requires_grad = false;
        let bias = &self.nodes[b.0].value.data;
        for row in out.data.chunks_mut(ac) {
            for (v, bv) in row.iter_mut().zip(bias) {
                *v += bv;
            }
        }
        self.push(Op::AddBias { a, b }, out, false, "add_bias")
    }

    fn elementwise2(
        &mut self,
        a: NodeId,
        b: NodeId,
        name: &'static str,
        f: impl Fn(f64, f64) -> f64,
        op: impl Fn(NodeId, NodeId) -> Op,
    ) -> Result<NodeId> {
        let sa = self.value(a).shape();
        let sb = self.value(b).shape();
        if sa != sb {
            return Err(Error::ShapeMismatch {
                op: name,
                lhs: sa,
                rhs: sb,
            });
        }
        let data = self
            .value(a)
            .data
            .iter()
            .zip(&self.value(b).data)
            .map(|(&x, &y)| f(x, y))
            .collect();
        let out = Tensor::new(sa.0, sa.1, data)?;
        self.push(op(a, b), out, false, name)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.elementwise2(a, b, "add", |x, y| x + y, |a, b| Op::Add { a, b })
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.elementwise2(a, b, "sub", |x, y| x - y, |a, b| Op::Sub { a, b })
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.elementwise2(a, b, "mul", |x, y| x * y, |a, b| Op::Mul { a, b })
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> Result<NodeId> {
        let (r, c) = self.value(a).shape();
        let data = self.value(a).data.iter().map(|&x| x * factor).collect();
        self.push(Op::Scale { a, factor }, Tensor::new(r, c, data)?, false, "scale")
    }

    pub fn relu(&mut self, a: NodeId) -> Result<NodeId> {
        let (r, c) = self.value(a).shape();
        let data = self.value(a).data.iter().map(|&x| x.max(0.0)).collect();
        self.push(Op::Relu { a }, Tensor::new(r, c, data)?, false, "relu")
    }

    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId> {
        let (r, c) = self.value(a).shape();
        let data = self.value(a).data.iter().map(|&x| stable_sigmoid(x)).collect();
        self.push(Op::Sigmoid { a }, Tensor::new(r, c, data)?, false, "sigmoid")
    }

    /// Row-wise softmax with per-row max subtraction.
    pub fn softmax_rows(&mut self, a: NodeId) -> Result<NodeId> {
        let (r, c) = self.value(a).shape();
        let mut data = vec![0.0; r * c];
        for (orow, irow) in data.chunks_mut(c).zip(self.value(a).data.chunks(c)) {
            let mx = irow.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for (o, &x) in orow.iter_mut().zip(irow) {
                *o = libm::exp(x - mx);
                sum += *o;
            }
            for o in orow.iter_mut() {
                *o /= sum;
            }
        }
        self.push(Op::SoftmaxRows { a }, Tensor::new(r, c, data)?, false, "softmax_rows")
    }

    /// log of the input clamped to `[LOG_CLAMP, 1]`; the gradient is zero
    /// wherever the clamp is active.
    pub fn log_clamped(&mut self, a: NodeId) -> Result<NodeId> {
        let (r, c) = self.value(a).shape();
        let data = self
            .value(a)
            .data
            .iter()
            .map(|&x| libm::log(x.clamp(LOG_CLAMP, 1.0)))
            .collect();
        self.push(Op::LogClamped { a }, Tensor::new(r, c, data)?, false, "log_clamped")
    }

    /// Sum of all entries, as a `1 x 1` tensor.
    pub fn sum(&mut self, a: NodeId) -> Result<NodeId> {
        let s: f64 = self.value(a).data.iter().sum();
        self.push(Op::Sum { a }, Tensor::new(1, 1, vec![s])?, false, "sum")
    }

    /// Column-wise concatenation in argument order.
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::Contract("concat_cols needs at least one part"));
        }
        let n = self.value(parts[0]).rows;
        let mut total = 0;
        for &p in parts {
            let (r, c) = self.value(p).shape();
            if r != n {
                return Err(Error::ShapeMismatch {
                    op: "concat_cols",
                    lhs: (n, total),
                    rhs: (r, c),
                });
            }
            total += c;
        }
        let mut data = Vec::with_capacity(n * total);
        for i in 0..n {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(i));
            }
        }
        self.push(
            Op::ConcatCols {
                parts: parts.to_vec(),
            },
            Tensor::new(n, total, data)?,
            false,
            "concat_cols",
        )
    }

    /// Training-mode batch normalization (biased variance, eps 1e-5).
    /// Returns the output node plus the batch mean and variance per column
    /// so the caller can update running statistics (momentum is the
    /// caller's policy).
    pub fn batchnorm_train(
        &mut self,
        a: NodeId,
        gamma: NodeId,
        beta: NodeId,
    ) -> Result<(NodeId, Vec<f64>, Vec<f64>)> {
        let (n, c) = self.value(a).shape();
        if n < 2 {
            return Err(Error::DegenerateBatch { rows: n });
        }
        self.check_bn_params(a, gamma, beta)?;
        let x = &self.nodes[a.0].value.data;
        let mut mean = vec![0.0; c];
        let mut var = vec![0.0; c];
        for row in x.chunks(c) {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= n as f64;
        }
        for row in x.chunks(c) {
            for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
                let d = v - m;
                *s += d * d;
            }
        }
        for s in var.iter_mut() {
            *s /= n as f64;
        }
        let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / libm::sqrt(v + BN_EPS)).collect();
        let mut x_hat = vec![0.0; n * c];
        for (xh_row, row) in x_hat.chunks_mut(c).zip(x.chunks(c)) {
            for (((xh, &v), &m), &is) in xh_row.iter_mut().zip(row).zip(&mean).zip(&inv_std) {
                *xh = (v - m) * is;
            }
        }
        let g = &self.nodes[gamma.0].value.data;
        let b = &self.nodes[beta.0].value.data;
        let mut out = vec![0.0; n * c];
        for (orow, xh_row) in out.chunks_mut(c).zip(x_hat.chunks(c)) {
            for (((o, &xh), &gv), &bv) in orow.iter_mut().zip(xh_row).zip(g.iter()).zip(b.iter()) {
                *o = gv * xh + bv;
            }
        }
        let id = self.push(
            Op::BatchNormTrain {
                a,
                gamma,
                beta,
                x_hat,
                inv_std,
            },
            Tensor::new(n, c, out)?,
            false,
            "batchnorm",
        )?;
        Ok((id, mean, var))
    }

    /// Eval-mode batch normalization using frozen running statistics.
    pub fn batchnorm_eval(
        &mut self,
        a: NodeId,
        gamma: NodeId,
        beta: NodeId,
        running_mean: &[f64],
        running_var: &[f64],
    ) -> Result<NodeId> {
        let (n, c) = self.value(a).shape();
        self.check_bn_params(a, gamma, beta)?;
        if running_mean.len() != c || running_var.len() != c {
            return Err(Error::Contract("running stats width mismatch"));
        }
        let inv_std: Vec<f64> = running_var
            .iter()
            .map(|&v| 1.0 / libm::sqrt(v + BN_EPS))
            .collect();
        let x = &self.nodes[a.0].value.data;
        let mut x_hat = vec![0.0; n * c];
        for (xh_row, row) in x_hat.chunks_mut(c).zip(x.chunks(c)) {
            for (((xh, &v), &m), &is) in xh_row
                .iter_mut()
                .zip(row)
                .zip(running_mean)
                .zip(&inv_std)
            {
                *xh = (v - m) * is;
            }
        }
        let g = &self.nodes[gamma.0].value.data;
        let b = &self.nodes[beta.0].value.data;
        let mut out = vec![0.0; n * c];
        for (orow, xh_row) in out.chunks_mut(c).zip(x_hat.chunks(c)) {
            for (((o, &xh), &gv), &bv) in orow.iter_mut().zip(xh_row).zip(g.iter()).zip(b.iter()) {
                *o = gv * xh + bv;
            }
        }
        self.push(
            Op::BatchNormEval {
                a,
                gamma,
                beta,
                x_hat,
                inv_std,
            },
            Tensor::new(n, c, out)?,
            false,
            "batchnorm",
        )
    }

    fn check_bn_params(&self, a: NodeId, gamma: NodeId, beta: NodeId) -> Result<()> {
        let (_, c) = self.value(a).shape();
        for &p in &[gamma, beta] {
            let (pr, pc) = self.value(p).shape();
            if pr != 1 || pc != c {
                return Err(Error::ShapeMismatch {
                    op: "batchnorm",
                    lhs: self.value(a).shape(),
                    rhs: (pr, pc),
                });
            }
        }
        Ok(())
    }

    /// Scales each row to unit average per-symbol power (`sqrt(K)/||row||`).
    /// Zero rows pass through unscaled.
    pub fn power_normalize(&mut self, a: NodeId) -> Result<NodeId> {
        let (n, k) = self.value(a).shape();
        let x = &self.nodes[a.0].value.data;
        let sqrt_k = libm::sqrt(k as f64);
        let mut norms = vec![0.0; n];
        let mut out = vec![0.0; n * k];
        for (i, row) in x.chunks(k).enumerate() {
            let norm = libm::sqrt(row.iter().map(|&v| v * v).sum());
            norms[i] = norm;
            let orow = &mut out[i * k..(i + 1) * k];
            if norm == 0.0 {
                orow.copy_from_slice(row);
            } else {
                let s = sqrt_k / norm;
                for (o, &v) in orow.iter_mut().zip(row) {
                    *o = v * s;
                }
            }
        }
        self.push(
            Op::PowerNormalize { a, norms },
            Tensor::new(n, k, out)?,
            false,
            "power_normalize",
        )
    }

    /// `y = gains (elementwise) x + offsets` with the realized draws treated
    /// as constants by backward. Realizes one channel use, `y = h.S + n`.
    pub fn channel_affine(&mut self, a: NodeId, gains: Vec<f64>, offsets: &[f64]) -> Result<NodeId> {
        let (n, k) = self.value(a).shape();
        if gains.len() != n * k || offsets.len() != n * k {
            return Err(Error::Contract("channel draw length mismatch"));
        }
        let data = self
            .value(a)
            .data
            .iter()
            .zip(&gains)
            .zip(offsets)
            .map(|((&x, &h), &o)| h * x + o)
            .collect();
        self.push(
            Op::ChannelAffine { a, gains },
            Tensor::new(n, k, data)?,
            false,
            "channel_affine",
        )
    }

    fn add_grad(&mut self, id: NodeId, g: &[f64]) {
        let node = &mut self.nodes[id.0];
        let grad = node
            .grad
            .get_or_insert_with(|| vec![0.0; node.value.data.len()]);
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }

    /// Reverse pass from a scalar loss node. Gradients of shared inputs
    /// sum across consumers; all previously stored gradients are cleared
    /// first.
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        if self.value(loss).shape() != (1, 1) {
            return Err(Error::Contract("backward requires a scalar (1x1) loss node"));
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        self.nodes[loss.0].grad = Some(vec![1.0]);
        for idx in (0..=loss.0).rev() {
            let Some(g) = self.nodes[idx].grad.clone() else {
                continue;
            };
            let op = self.nodes[idx].op.clone();
            match op {
                Op::Leaf => {}
                Op::MatMul { a, b } => {
                    let (n, k) = self.value(a).shape();
                    let (_, m) = self.value(b).shape();
                    let mut ga = vec![0.0; n * k];
                    matmul_nt_acc(&mut ga, &g, &self.value(b).data, n, m, k);
                    let mut gb = vec![0.0; k * m];
                    matmul_tn_acc(&mut gb, &self.value(a).data, &g, n, k, m);
                    self.add_grad(a, &ga);
                    self.add_grad(b, &gb);
                }
                Op::AddBias { a, b } => {
                    let (_, c) = self.value(a).shape();
                    let mut gb = vec![0.0; c];
                    for row in g.chunks(c) {
                        for (s, &v) in gb.iter_mut().zip(row) {
                            *s += v;
                        }
                    }
                    self.add_grad(a, &g);
                    self.add_grad(b, &gb);
                }
                Op::Add { a, b } => {
                    self.add_grad(a, &g);
                    self.add_grad(b, &g);
                }
                Op::Sub { a, b } => {
                    self.add_grad(a, &g);
                    let neg: Vec<f64> = g.iter().map(|&v| -v).collect();
                    self.add_grad(b, &neg);
                }
                Op::Mul { a, b } => {
                    let ga: Vec<f64> = g
                        .iter()
                        .zip(&self.value(b).data)
                        .map(|(&gv, &bv)| gv * bv)
                        .collect();
                    let gb: Vec<f64> = g
                        .iter()
                        .zip(&self.value(a).data)
                        .map(|(&gv, &av)| gv * av)
                        .collect();
                    self.add_grad(a, &ga);
                    self.add_grad(b, &gb);
                }
                Op::Scale { a, factor } => {
                    let ga: Vec<f64> = g.iter().map(|&v| v * factor).collect();
                    self.add_grad(a, &ga);
                }
                Op::Relu { a } => {
                    // Inputs exactly at 0 gate to 0.
                    let ga: Vec<f64> = g
                        .iter()
                        .zip(&self.value(a).data)
                        .map(|(&gv, &x)| if x > 0.0 { gv } else { 0.0 })
                        .collect();
                    self.add_grad(a, &ga);
                }
                Op::Sigmoid { a } => {
                    let ga: Vec<f64> = g
                        .iter()
                        .zip(&self.nodes[idx].value.data)
                        .map(|(&gv, &y)| gv * y * (1.0 - y))
                        .collect();
                    self.add_grad(a, &ga);
                }
                Op::SoftmaxRows { a } => {
                    let (n, c) = self.value(a).shape();
                    let y = &self.nodes[idx].value.data;
                    let mut ga = vec![0.0; n * c];
                    for i in 0..n {
                        let yr = &y[i * c..(i + 1) * c];
                        let gr = &g[i * c..(i + 1) * c];
                        let dot: f64 = yr.iter().zip(gr).map(|(&yv, &gv)| yv * gv).sum();
                        for ((o, &yv), &gv) in ga[i * c..(i + 1) * c].iter_mut().zip(yr).zip(gr) {
                            *o = yv * (gv - dot);
                        }
                    }
                    self.add_grad(a, &ga);
                }
                Op::LogClamped { a } => {
                    let ga: Vec<f64> = g
                        .iter()
                        .zip(&self.value(a).data)
                        .map(|(&gv, &x)| {
                            if (LOG_CLAMP..=1.0).contains(&x) {
                                gv / x
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    self.add_grad(a, &ga);
                }
                Op::Sum { a } => {
                    let gv = g[0];
                    let ga = vec![gv; self.value(a).data.len()];
                    self.add_grad(a, &ga);
                }
                Op::ConcatCols { parts } => {
                    let n = self.value(parts[0]).rows;
                    let total: usize = parts.iter().map(|&p| self.value(p).cols).sum();
                    let mut offset = 0;
                    for &p in &parts {
                        let c = self.value(p).cols;
                        let mut gp = vec![0.0; n * c];
                        for i in 0..n {
                            gp[i * c..(i + 1) * c]
                                .copy_from_slice(&g[i * total + offset..i * total + offset + c]);
                        }
                        self.add_grad(p, &gp);
                        offset += c;
                    }
                }
                Op::BatchNormTrain {
                    a,
                    gamma,
                    beta,
                    x_hat,
                    inv_std,
                } => {
                    let (n, c) = self.value(a).shape();
                    let gm = &self.value(gamma).data;
                    let mut sum_g = vec![0.0; c];
                    let mut sum_gx = vec![0.0; c];
                    for (grow, xrow) in g.chunks(c).zip(x_hat.chunks(c)) {
                        for (((sg, sgx), &gv), &xh) in
                            sum_g.iter_mut().zip(sum_gx.iter_mut()).zip(grow).zip(xrow)
                        {
                            *sg += gv;
                            *sgx += gv * xh;
                        }
                    }
                    // Full batch-norm gradient including mean/variance terms.
                    let nf = n as f64;
                    let mut ga = vec![0.0; n * c];
                    for (garow, (grow, xrow)) in ga
                        .chunks_mut(c)
                        .zip(g.chunks(c).zip(x_hat.chunks(c)))
                    {
                        for j in 0..c {
                            garow[j] = gm[j] * inv_std[j] / nf
                                * (nf * grow[j] - sum_g[j] - xrow[j] * sum_gx[j]);
                        }
                    }
                    self.add_grad(a, &ga);
                    self.add_grad(gamma, &sum_gx);
                    self.add_grad(beta, &sum_g);
                }
                Op::BatchNormEval {
                    a,
                    gamma,
                    beta,
                    x_hat,
                    inv_std,
                } => {
                    let (_, c) = self.value(a).shape();
                    let gm = &self.value(gamma).data;
                    let mut sum_g = vec![0.0; c];
                    let mut sum_gx = vec![0.0; c];
                    let mut ga = vec![0.0; g.len()];
                    for ((garow, grow), xrow) in
                        ga.chunks_mut(c).zip(g.chunks(c)).zip(x_hat.chunks(c))
                    {
                        for j in 0..c {
                            garow[j] = grow[j] * gm[j] * inv_std[j];
                            sum_g[j] += grow[j];
                            sum_gx[j] += grow[j] * xrow[j];
                        }
                    }
                    self.add_grad(a, &ga);
                    self.add_grad(gamma, &sum_gx);
                    self.add_grad(beta, &sum_g);
                }
                Op::PowerNormalize { a, norms } => {
                    let (n, k) = self.value(a).shape();
                    let sqrt_k = libm::sqrt(k as f64);
                    let x = &self.value(a).data;
                    let mut ga = vec![0.0; n * k];
                    for i in 0..n {
                        let r = norms[i];
                        let xr = &x[i * k..(i + 1) * k];
                        let gr = &g[i * k..(i + 1) * k];
                        let out = &mut ga[i * k..(i + 1) * k];
                        if r == 0.0 {
                            out.copy_from_slice(gr);
                            continue;
                        }
                        let dot: f64 = xr.iter().zip(gr).map(|(&xv, &gv)| xv * gv).sum();
                        let s = sqrt_k / r;
                        for ((o, &xv), &gv) in out.iter_mut().zip(xr).zip(gr) {
                            *o = s * (gv - xv * dot / (r * r));
                        }
                    }
                    self.add_grad(a, &ga);
                }
                Op::ChannelAffine { a, gains } => {
                    let ga: Vec<f64> = g.iter().zip(&gains).map(|(&gv, &h)| gv * h).collect();
                    self.add_grad(a, &ga);
                }
            }
        }
        Ok(())
    }
}

/// Overflow-free logistic function.
pub fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}
