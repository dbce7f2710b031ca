//! Adam with bias-corrected moments, operating on flat parameter slices.

use crate::net::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Optimizer state for a fixed group of tensors. Moment buffers mirror the
/// tensor list handed to [`Adam::step`] in both count and length.
#[derive(Debug, Clone)]
pub struct Adam<F: Real> {
    pub params: AdamParams,
    step: u64,
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
}

impl<F: Real> Adam<F> {
    pub fn new(params: AdamParams, tensor_sizes: &[usize]) -> Self {
        Adam {
            params,
            step: 0,
            m: tensor_sizes.iter().map(|&n| vec![F::zero(); n]).collect(),
            v: tensor_sizes.iter().map(|&n| vec![F::zero(); n]).collect(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// One update: m = b1 m + (1-b1) g, v = b2 v + (1-b2) g^2,
    /// p -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
    pub fn step(&mut self, tensors: &mut [&mut [F]], grads: &[&[F]]) {
        assert_eq!(tensors.len(), self.m.len(), "tensor group size is fixed at construction");
        assert_eq!(grads.len(), self.m.len());
        self.step += 1;
        let t = self.step as i32;
        let lr = F::from_f64(self.params.learning_rate);
        let beta1 = F::from_f64(self.params.beta1);
        let beta2 = F::from_f64(self.params.beta2);
        let eps = F::from_f64(self.params.epsilon);
        let one = F::one();
        let bc1 = one - beta1.powi(t);
        let bc2 = one - beta2.powi(t);

        for ((tensor, grad), (m, v)) in tensors
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            assert_eq!(tensor.len(), m.len());
            assert_eq!(grad.len(), m.len());
            for i in 0..tensor.len() {
                let g = grad[i];
                m[i] = beta1 * m[i] + (one - beta1) * g;
                v[i] = beta2 * v[i] + (one - beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                tensor[i] = tensor[i] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }

    /// Moments as f64 for persistence.
    pub fn export_moments(&self) -> (u64, Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let m = self
            .m
            .iter()
            .map(|t| t.iter().map(|v| v.into_f64()).collect())
            .collect();
        let v = self
            .v
            .iter()
            .map(|t| t.iter().map(|v| v.into_f64()).collect())
            .collect();
        (self.step, m, v)
    }

    pub fn restore_moments(
        &mut self,
        step: u64,
        m: &[Vec<f64>],
        v: &[Vec<f64>],
    ) -> Result<(), String> {
        if m.len() != self.m.len() || v.len() != self.v.len() {
            return Err(format!(
                "moment tensor count mismatch: state has {}, checkpoint has {}",
                self.m.len(),
                m.len()
            ));
        }
        for (mine, theirs) in self.m.iter_mut().zip(m).chain(self.v.iter_mut().zip(v)) {
            if mine.len() != theirs.len() {
                return Err(format!(
                    "moment tensor length mismatch: {} vs {}",
                    mine.len(),
                    theirs.len()
                ));
            }
            for (a, &b) in mine.iter_mut().zip(theirs) {
                *a = F::from_f64(b);
            }
        }
        self.step = step;
        Ok(())
    }
}
