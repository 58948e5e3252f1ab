//! Training losses (weighted cross-entropy + reconstruction MSE) and
//! evaluation metrics (accuracy, NMSE, reconstruction-quality check).

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::Error;
use crate::graph::{Graph, NodeId};
use crate::model::Variant;
use crate::tensor::Tensor;
use crate::Result;

/// Task weights `[pre-classification CE, final CE, HSI MSE, LiDAR MSE]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossWeights {
    pub alpha: [f64; 4],
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            alpha: [0.6, 1.0, 1.0, 1.0],
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::Config("loss weights must lie in [0, 1]".to_string()));
        }
        Ok(())
    }
}

fn check_one_hot(t: &Tensor) -> Result<()> {
    for row in t.data.chunks(t.cols) {
        let ones = row.iter().filter(|&&v| v == 1.0).count();
        let zeros = row.iter().filter(|&&v| v == 0.0).count();
        if ones != 1 || ones + zeros != row.len() {
            return Err(Error::Contract("labels must be one-hot rows"));
        }
    }
    Ok(())
}

/// Mean negative log-likelihood of one-hot targets under predicted row
/// probabilities, with predictions clamped to `[1e-12, 1]` before log.
pub fn cross_entropy(g: &mut Graph, pred: NodeId, truth: &Tensor) -> Result<NodeId> {
    if g.value(pred).shape() != truth.shape() {
        return Err(Error::ShapeMismatch {
            op: "cross_entropy",
            lhs: g.value(pred).shape(),
            rhs: truth.shape(),
        });
    }
    check_one_hot(truth)?;
    let n = truth.rows as f64;
    let t = g.constant(truth.clone())?;
    let logp = g.log_clamped(pred)?;
    let picked = g.mul(t, logp)?;
    let total = g.sum(picked)?;
    g.scale(total, -1.0 / n)
}

/// Mean over all entries of the squared difference.
pub fn mse_loss(g: &mut Graph, pred: NodeId, target: &Tensor) -> Result<NodeId> {
    if g.value(pred).shape() != target.shape() {
        return Err(Error::ShapeMismatch {
            op: "mse_loss",
            lhs: g.value(pred).shape(),
            rhs: target.shape(),
        });
    }
    let t = g.constant(target.clone())?;
    let d = g.sub(pred, t)?;
    let sq = g.mul(d, d)?;
    let total = g.sum(sq)?;
    g.scale(total, 1.0 / (target.rows * target.cols) as f64)
}

/// Unweighted component values of one joint loss evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub pre: Option<f64>,
    pub fin: f64,
    pub hsi: Option<f64>,
    pub lidar: Option<f64>,
}

/// Weighted multitask loss over the components present for the variant.
/// Returns the scalar loss node and the unweighted component values.
#[allow(clippy::too_many_arguments)]
pub fn joint_loss(
    g: &mut Graph,
    c_pre: Option<NodeId>,
    c_fin: NodeId,
    labels: &Tensor,
    hsi: Option<(NodeId, &Tensor)>,
    lidar: Option<(NodeId, &Tensor)>,
    weights: &LossWeights,
    variant: Variant,
) -> Result<(NodeId, LossParts)> {
    weights.validate()?;
    if c_pre.is_some() != variant.has_pe()
        || hsi.is_some() != variant.has_hsi()
        || lidar.is_some() != variant.has_lidar()
    {
        return Err(Error::Config(format!(
            "joint_loss: component presence does not match variant {variant}"
        )));
    }
    let [a1, a2, a3, a4] = weights.alpha;

    let fin_loss = cross_entropy(g, c_fin, labels)?;
    let mut total = g.scale(fin_loss, a2)?;
    let mut parts = LossParts {
        pre: None,
        fin: g.value(fin_loss).data[0],
        hsi: None,
        lidar: None,
    };
    if let Some(pre) = c_pre {
        let pre_loss = cross_entropy(g, pre, labels)?;
        parts.pre = Some(g.value(pre_loss).data[0]);
        let weighted = g.scale(pre_loss, a1)?;
        total = g.add(total, weighted)?;
    }
    if let Some((pred, target)) = hsi {
        let loss = mse_loss(g, pred, target)?;
        parts.hsi = Some(g.value(loss).data[0]);
        let weighted = g.scale(loss, a3)?;
        total = g.add(total, weighted)?;
    }
    if let Some((pred, target)) = lidar {
        let loss = mse_loss(g, pred, target)?;
        parts.lidar = Some(g.value(loss).data[0]);
        let weighted = g.scale(loss, a4)?;
        total = g.add(total, weighted)?;
    }
    Ok((total, parts))
}

/// Reconstruction error normalized by reference energy.
pub fn nmse(reference: &Tensor, reconstruction: &Tensor) -> Result<f64> {
    if reference.shape() != reconstruction.shape() {
        return Err(Error::ShapeMismatch {
            op: "nmse",
            lhs: reference.shape(),
            rhs: reconstruction.shape(),
        });
    }
    let energy: f64 = reference.data.iter().map(|&v| v * v).sum();
    if energy == 0.0 {
        return Err(Error::UndefinedMetric("nmse over all-zero reference"));
    }
    let err: f64 = reference
        .data
        .iter()
        .zip(&reconstruction.data)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    Ok(err / energy)
}

/// Fraction of rows whose predicted argmax matches the one-hot truth.
/// Ties break toward the lowest index.
pub fn accuracy(pred: &Tensor, truth: &Tensor) -> Result<f64> {
    if pred.shape() != truth.shape() {
        return Err(Error::ShapeMismatch {
            op: "accuracy",
            lhs: pred.shape(),
            rhs: truth.shape(),
        });
    }
    check_one_hot(truth)?;
    let mut correct = 0usize;
    for (prow, trow) in pred.data.chunks(pred.cols).zip(truth.data.chunks(truth.cols)) {
        if argmax(prow) == argmax(trow) {
            correct += 1;
        }
    }
    Ok(correct as f64 / pred.rows as f64)
}

pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Plain (non-graph) cross-entropy for evaluation passes.
pub fn cross_entropy_value(pred: &Tensor, truth: &Tensor) -> Result<f64> {
    check_one_hot(truth)?;
    let mut total = 0.0;
    for (prow, trow) in pred.data.chunks(pred.cols).zip(truth.data.chunks(truth.cols)) {
        for (&p, &t) in prow.iter().zip(trow) {
            if t == 1.0 {
                total -= libm::log(p.clamp(crate::graph::LOG_CLAMP, 1.0));
            }
        }
    }
    Ok(total / pred.rows as f64)
}

/// Plain MSE for evaluation passes.
pub fn mse_value(pred: &Tensor, target: &Tensor) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(Error::ShapeMismatch {
            op: "mse",
            lhs: pred.shape(),
            rhs: target.shape(),
        });
    }
    let err: f64 = pred
        .data
        .iter()
        .zip(&target.data)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    Ok(err / (pred.rows * pred.cols) as f64)
}

/// One row of every metrics CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub variant: Variant,
    pub snr_db: f64,
    pub k: usize,
    pub epoch: u64,
    pub accuracy: f64,
    pub nmse_hsi: Option<f64>,
    pub nmse_lidar: Option<f64>,
    pub loss_pre: Option<f64>,
    pub loss_fin: Option<f64>,
    pub loss_hsi: Option<f64>,
    pub loss_lidar: Option<f64>,
}

impl MetricsRecord {
    pub const CSV_HEADER: &'static str =
        "variant,snr_db,K,epoch,accuracy,nmse_hsi,nmse_lidar,loss_pre,loss_fin,loss_hsi,loss_lidar";

    pub fn to_csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.variant,
            self.snr_db,
            self.k,
            self.epoch,
            self.accuracy,
            opt(self.nmse_hsi),
            opt(self.nmse_lidar),
            opt(self.loss_pre),
            opt(self.loss_fin),
            opt(self.loss_hsi),
            opt(self.loss_lidar),
        )
    }

    pub fn from_csv_row(row: &str) -> Result<Self> {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 11 {
            return Err(Error::Config(format!(
                "metrics row must have 11 fields, got {}",
                fields.len()
            )));
        }
        let parse_f64 = |s: &str, what: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Config(format!("bad {what} value: {s}")))
        };
        let parse_opt = |s: &str, what: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_f64(s, what).map(Some)
            }
        };
        Ok(MetricsRecord {
            variant: Variant::parse(fields[0])
                .ok_or_else(|| Error::Config(format!("unknown variant: {}", fields[0])))?,
            snr_db: parse_f64(fields[1], "snr_db")?,
            k: fields[2]
                .parse()
                .map_err(|_| Error::Config(format!("bad K value: {}", fields[2])))?,
            epoch: fields[3]
                .parse()
                .map_err(|_| Error::Config(format!("bad epoch value: {}", fields[3])))?,
            accuracy: parse_f64(fields[4], "accuracy")?,
            nmse_hsi: parse_opt(fields[5], "nmse_hsi")?,
            nmse_lidar: parse_opt(fields[6], "nmse_lidar")?,
            loss_pre: parse_opt(fields[7], "loss_pre")?,
            loss_fin: parse_opt(fields[8], "loss_fin")?,
            loss_hsi: parse_opt(fields[9], "loss_hsi")?,
            loss_lidar: parse_opt(fields[10], "loss_lidar")?,
        })
    }
}

/// Per-modality pass/fail of the reconstruction-quality threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstraintCheck {
    pub hsi_ok: bool,
    pub lidar_ok: bool,
}

/// Flags records whose NMSE exceeds `beta` (inclusive threshold);
/// absent modalities pass vacuously. Reporting only, never enforcement.
pub fn check_constraint(records: &[MetricsRecord], beta: f64) -> Vec<ConstraintCheck> {
    records
        .iter()
        .map(|r| ConstraintCheck {
            hsi_ok: r.nmse_hsi.map_or(true, |v| v <= beta),
            lidar_ok: r.nmse_lidar.map_or(true, |v| v <= beta),
        })
        .collect()
}
