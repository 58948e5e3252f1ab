//! Central finite-difference verification of analytic gradients.

use alloc::vec::Vec;

use crate::graph::{Graph, NodeId};
use crate::tensor::Tensor;
use crate::Result;

pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub nonfinite: bool,
    pub passed: bool,
}

/// Compares analytic gradients of the scalar graph built by `build`
/// against central finite differences over every entry of `inputs`.
///
/// The relative error of a pair `(a, n)` is `|a - n| / max(1, |a|, |n|)`,
/// i.e. absolute error for small gradients, relative for large ones.
pub fn grad_check<F>(build: F, inputs: &[Tensor], h: f64, tolerance: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph, &[NodeId]) -> Result<NodeId>,
{
    let eval = |tensors: &[Tensor]| -> Result<(f64, Vec<Vec<f64>>)> {
        let mut g = Graph::new();
        let ids: Vec<NodeId> = tensors
            .iter()
            .map(|t| g.leaf(t.clone(), true))
            .collect::<Result<_>>()?;
        let loss = build(&mut g, &ids)?;
        g.backward(loss)?;
        let grads = ids
            .iter()
            .map(|&id| g.grad(id).map(|s| s.to_vec()).unwrap_or_default())
            .collect();
        Ok((g.value(loss).data[0], grads))
    };

    let (_, analytic) = eval(inputs)?;
    let mut max_rel_err: f64 = 0.0;
    let mut nonfinite = false;
    let mut work: Vec<Tensor> = inputs.to_vec();
    for (ti, t) in inputs.iter().enumerate() {
        for ei in 0..t.data.len() {
            let orig = work[ti].data[ei];
            work[ti].data[ei] = orig + h;
            let plus = eval(&work)?.0;
            work[ti].data[ei] = orig - h;
            let minus = eval(&work)?.0;
            work[ti].data[ei] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic
                .get(ti)
                .and_then(|g| g.get(ei).copied())
                .unwrap_or(0.0);
            if !numeric.is_finite() || !a.is_finite() {
                nonfinite = true;
                continue;
            }
            let denom = a.abs().max(numeric.abs()).max(1.0);
            max_rel_err = max_rel_err.max((a - numeric).abs() / denom);
        }
    }
    Ok(GradCheckReport {
        max_rel_err,
        nonfinite,
        passed: !nonfinite && max_rel_err < tolerance,
    })
}
