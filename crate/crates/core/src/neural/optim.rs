use serde::{Deserialize, Serialize};

use super::Parameters;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    RmsProp { decay: f64, eps: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

/// First-order optimizer with per-element state, lazily sized on the first
/// step to match the parameter tree.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub lr: f64,
    steps: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Self {
        Optimizer {
            kind,
            lr,
            steps: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    /// RMSprop with smoothing 0.99 and eps 1e-8.
    pub fn rmsprop(lr: f64) -> Self {
        Self::new(OptimizerKind::RmsProp { decay: 0.99, eps: 1e-8 }, lr)
    }

    /// Adam with betas (0.9, 0.999) and eps 1e-8.
    pub fn adam(lr: f64) -> Self {
        Self::new(
            OptimizerKind::Adam {
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
            },
            lr,
        )
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Applies one update. Non-finite gradients are rejected before any
    /// parameter or state is touched.
    pub fn step<M: Parameters>(&mut self, params: &mut M, grads: &M) -> Result<()> {
        let gs = grads.tensors();
        if let Some(bad) = gs.iter().position(|t| !t.is_finite()) {
            return Err(Error::NonFinite(format!(
                "gradient tensor {} contains NaN or infinity",
                grads.param_names()[bad]
            )));
        }
        let mut ps = params.tensors_mut();
        if ps.len() != gs.len() || ps.iter().zip(&gs).any(|(p, g)| p.shape() != g.shape()) {
            return Err(Error::Shape("gradient tree does not match parameters".into()));
        }
        if self.second.is_empty() {
            self.first = gs.iter().map(|g| vec![0.0; g.len()]).collect();
            self.second = self.first.clone();
        } else if self.second.len() != gs.len() || self.second.iter().zip(&gs).any(|(s, g)| s.len() != g.len()) {
            return Err(Error::Shape("optimizer state does not match parameters".into()));
        }
        self.steps += 1;
        let lr = self.lr;
        match self.kind {
            OptimizerKind::RmsProp { decay, eps } => {
                for ((p, g), v) in ps.iter_mut().zip(&gs).zip(&mut self.second) {
                    for ((w, &gi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(v.iter_mut()) {
                        *vi = decay * *vi + (1.0 - decay) * gi * gi;
                        *w -= lr * gi / (vi.sqrt() + eps);
                    }
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let t = self.steps as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for (((p, g), m), v) in ps.iter_mut().zip(&gs).zip(&mut self.first).zip(&mut self.second) {
                    for (((w, &gi), mi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *mi = beta1 * *mi + (1.0 - beta1) * gi;
                        *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                        *w -= lr * (*mi / c1) / ((*vi / c2).sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}
