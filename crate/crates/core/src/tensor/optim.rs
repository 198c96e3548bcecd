use serde::{Deserialize, Serialize};

use super::Tensor;

/// `θ ← θ − lr · g`.
pub fn sgd_step(params: &mut [Tensor], grads: &[Tensor], lr: f64) {
    assert_eq!(params.len(), grads.len(), "sgd_step: parameter/gradient count");
    for (p, g) in params.iter_mut().zip(grads) {
        assert_eq!(p.shape(), g.shape(), "sgd_step: shape mismatch");
        for (x, d) in p.data_mut().iter_mut().zip(g.data()) {
            *x -= lr * d;
        }
    }
}

/// Adam with bias correction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self::with_params(lr, 0.9, 0.999, 1e-8)
    }

    pub fn with_params(lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self { lr, beta1, beta2, eps, t: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) {
        assert_eq!(params.len(), grads.len(), "adam: parameter/gradient count");
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.numel()]).collect();
            self.v = self.m.clone();
        }
        assert_eq!(self.m.len(), params.len(), "adam: parameter count changed");
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            assert_eq!(p.shape(), g.shape(), "adam: shape mismatch");
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (j, (x, &d)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * d;
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * d * d;
                let mh = m[j] / c1;
                let vh = v[j] / c2;
                *x -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}
