//! AdamW over a fixed list of leaf tensors.

use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// Decoupled-weight-decay Adam. Parameters update in registration order,
/// so a fixed parameter list gives bitwise-reproducible training.
pub struct AdamW {
    cfg: AdamWConfig,
    params: Vec<Tensor>,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    steps: u64,
}

impl AdamW {
    pub fn new(params: Vec<Tensor>, cfg: AdamWConfig) -> Self {
        let m = params.iter().map(|p| vec![0.0; p.numel()]).collect();
        let v = params.iter().map(|p| vec![0.0; p.numel()]).collect();
        AdamW {
            cfg,
            params,
            m,
            v,
            steps: 0,
        }
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    /// Applies one update from the gradients currently stored on the
    /// parameters. Parameters without a gradient are skipped.
    pub fn step(&mut self) {
        self.steps += 1;
        let t = self.steps as f64;
        let bc1 = 1.0 - self.cfg.beta1.powf(t);
        let bc2 = 1.0 - self.cfg.beta2.powf(t);
        for (idx, param) in self.params.iter().enumerate() {
            let Some(grad) = param.grad() else { continue };
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            let mut data = param.data_mut();
            for i in 0..grad.len() {
                let g = grad[i];
                m[i] = self.cfg.beta1 * m[i] + (1.0 - self.cfg.beta1) * g;
                v[i] = self.cfg.beta2 * v[i] + (1.0 - self.cfg.beta2) * g * g;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                data[i] -=
                    self.cfg.lr * (mhat / (vhat.sqrt() + self.cfg.eps) + self.cfg.weight_decay * data[i]);
            }
        }
    }

    pub fn zero_grad(&self) {
        for p in &self.params {
            p.zero_grad();
        }
    }
}
