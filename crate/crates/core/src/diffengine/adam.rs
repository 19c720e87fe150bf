use super::{Matrix, ParamStore};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Multiplies the learning rate at every signaled epoch end.
    pub decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            decay: 0.9,
        }
    }
}

/// Adam moments keyed by parameter name.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub cfg: AdamConfig,
    pub lr: f64,
    pub step: u64,
    moments: BTreeMap<String, (Matrix, Matrix)>,
}

impl AdamState {
    pub fn new(cfg: AdamConfig) -> AdamState {
        AdamState {
            lr: cfg.lr,
            cfg,
            step: 0,
            moments: BTreeMap::new(),
        }
    }

    /// One bias-corrected update of every trainable tensor from its
    /// accumulated gradient. Gradients are left in place.
    pub fn step(&mut self, store: &mut ParamStore) {
        self.step += 1;
        let t = self.step as f64;
        let c1 = 1.0 - self.cfg.beta1.powf(t);
        let c2 = 1.0 - self.cfg.beta2.powf(t);
        let (b1, b2, eps, lr) = (self.cfg.beta1, self.cfg.beta2, self.cfg.eps, self.lr);
        for (name, p) in store.iter_mut() {
            if !p.requires_grad {
                continue;
            }
            let (rows, cols) = p.value.shape();
            let (m, v) = self
                .moments
                .entry(name.to_string())
                .or_insert_with(|| (Matrix::zeros(rows, cols), Matrix::zeros(rows, cols)));
            let g = p.grad.data();
            let iter = p
                .value
                .data_mut()
                .iter_mut()
                .zip(m.data_mut())
                .zip(v.data_mut())
                .zip(g);
            for (((w, m), v), &g) in iter {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }

    pub fn end_epoch(&mut self) {
        self.lr *= self.cfg.decay;
    }
}
