use serde::{Deserialize, Serialize};

/// Adam with bias correction. Moment buffers are allocated lazily on the
/// first step from the shapes of the supplied tensors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(learning_rate: f64) -> Self {
        Self::with_betas(learning_rate, 0.9, 0.999, 1e-8)
    }

    pub fn with_betas(learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        AdamState { learning_rate, beta1, beta2, epsilon, step: 0, first: Vec::new(), second: Vec::new() }
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        assert_eq!(params.len(), grads.len(), "adam: tensor count mismatch");
        if self.first.is_empty() {
            self.first = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            self.second = self.first.clone();
        }
        assert_eq!(self.first.len(), grads.len(), "adam: tensor count changed between steps");
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            assert_eq!(p.len(), g.len(), "adam: shape mismatch in tensor {k}");
            let m = &mut self.first[k];
            let v = &mut self.second[k];
            for i in 0..g.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut adam = AdamState::new(0.1);
        let mut p = vec![1.0, -2.0];
        adam.step(&mut [&mut p], &[&[0.0, 0.0]]);
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(adam.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps).
        let lr = 1e-3;
        for g in [0.5, -3.0, 1e-2] {
            let mut adam = AdamState::new(lr);
            let mut p = vec![0.0];
            adam.step(&mut [&mut p], &[&[g]]);
            let expected = -lr * g / (g.abs() + 1e-8);
            assert!((p[0] - expected).abs() < 1e-15);
            assert_eq!(p[0].signum(), -g.signum());
        }
    }

    #[test]
    fn repeated_steps_drift_monotonically() {
        let mut adam = AdamState::new(0.01);
        let mut p = vec![0.0];
        let mut prev = p[0];
        for _ in 0..20 {
            adam.step(&mut [&mut p], &[&[2.0]]);
            assert!(p[0] < prev);
            prev = p[0];
        }
    }
}
