//! Adam optimizer with bias correction.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::tensor::Tensor;
use crate::Result;

/// Per-run optimizer state. Moment slots are allocated lazily on the
/// first step and stay shape-matched to their parameters afterwards.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step_count: u64,
    moments: Vec<(Vec<f64>, Vec<f64>)>,
}

impl AdamState {
    pub fn new(learning_rate: f64) -> Self {
        AdamState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step_count: 0,
            moments: Vec::new(),
        }
    }

    /// One update over the given parameters, in order. Every parameter
    /// must carry a gradient; gradients are cleared after the update.
    pub fn step<'a>(&mut self, params: impl Iterator<Item = &'a mut Tensor>) -> Result<()> {
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - libm::pow(self.beta1, t as f64);
        let bc2 = 1.0 - libm::pow(self.beta2, t as f64);
        let mut idx = 0;
        for p in params {
            let g = p
                .grad
                .take()
                .ok_or(Error::Contract("adam_step: parameter missing gradient"))?;
            if self.moments.len() == idx {
                self.moments.push((vec![0.0; g.len()], vec![0.0; g.len()]));
            }
            let (m, v) = &mut self.moments[idx];
            if m.len() != g.len() {
                return Err(Error::Contract("adam_step: moment shape mismatch"));
            }
            for ((w, &gv), (mv, vv)) in p
                .data
                .iter_mut()
                .zip(&g)
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                *mv = self.beta1 * *mv + (1.0 - self.beta1) * gv;
                *vv = self.beta2 * *vv + (1.0 - self.beta2) * gv * gv;
                let m_hat = *mv / bc1;
                let v_hat = *vv / bc2;
                *w -= self.learning_rate * m_hat / (libm::sqrt(v_hat) + self.epsilon);
            }
            idx += 1;
        }
        Ok(())
    }
}
