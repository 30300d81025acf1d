use serde::{Deserialize, Serialize};

use crate::num::Real;

/// Adam hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AdamParams<T: Real> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Real> Default for AdamParams<T> {
    fn default() -> Self {
        AdamParams {
            learning_rate: T::lit(1e-3),
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            epsilon: T::lit(1e-8),
        }
    }
}

/// First/second moment accumulators, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T: Real> {
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub t: u64,
    beta1_pow: T,
    beta2_pow: T,
}

impl<T: Real> AdamState<T> {
    pub fn new(shapes: &[usize]) -> Self {
        AdamState {
            m: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            v: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            t: 0,
            beta1_pow: T::one(),
            beta2_pow: T::one(),
        }
    }

    /// One bias-corrected Adam update of every tensor in `params`.
    ///
    /// # Panics
    ///
    /// If the tensor list or any tensor length differs from the shapes the
    /// state was built with.
    pub fn step(&mut self, params: &mut [&mut [T]], grads: &[&[T]], hp: &AdamParams<T>) {
        assert_eq!(params.len(), self.m.len(), "parameter tensor count mismatch");
        assert_eq!(grads.len(), self.m.len(), "gradient tensor count mismatch");
        self.t += 1;
        self.beta1_pow *= hp.beta1;
        self.beta2_pow *= hp.beta2;
        let one = T::one();
        let c1 = one - self.beta1_pow;
        let c2 = one - self.beta2_pow;
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            assert_eq!(p.len(), m.len(), "parameter tensor {k} has the wrong length");
            assert_eq!(g.len(), m.len(), "gradient tensor {k} has the wrong length");
            for i in 0..m.len() {
                let gi = g[i];
                m[i] = hp.beta1 * m[i] + (one - hp.beta1) * gi;
                v[i] = hp.beta2 * v[i] + (one - hp.beta2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= hp.learning_rate * m_hat / (v_hat.sqrt() + hp.epsilon);
            }
        }
    }
}
