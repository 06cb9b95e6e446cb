use serde::{Deserialize, Serialize};

use super::NetError;

/// Adaptive-moment optimizer state for one flat parameter vector.
///
/// Entries whose gradient is exactly zero keep their value for that step
/// (their moments still decay), so a zero gradient is always a no-op on the
/// parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

pub const DEFAULT_LEARNING_RATE: f64 = 3e-4;

impl Adam {
    pub fn new(num_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    /// Applies one update in place. Nothing is modified when an error is returned.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), NetError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(NetError::DimensionMismatch {
                expected: self.m.len(),
                found: if params.len() != self.m.len() { params.len() } else { grads.len() },
            });
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(NetError::NonFiniteGradient(i));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            if g != 0.0 {
                let m_hat = self.m[i] / c1;
                let v_hat = self.v[i] / c2;
                params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Scales `grads` so its L2 norm is at most `max_norm`; returns the original norm.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_identity_and_decays_moments() {
        let mut opt = Adam::new(3, 0.1);
        let mut p = vec![1.0, -2.0, 3.0];
        opt.step(&mut p, &[1.0, 1.0, 1.0]).unwrap();
        let before = p.clone();
        let m_before = opt.first_moment().to_vec();
        opt.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, before);
        assert_eq!(opt.step, 2);
        for (a, b) in opt.first_moment().iter().zip(&m_before) {
            assert!((a - 0.9 * b).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_gradient_steps_approach_learning_rate() {
        // With a constant gradient both bias-corrected moments equal g and g^2
        // exactly, so every step moves by lr * |g| / (|g| + eps).
        for g in [0.5, -3.0, 1e-3] {
            let mut opt = Adam::new(1, 1e-2);
            let mut p = vec![0.0];
            let mut prev = 0.0;
            for _ in 0..200 {
                opt.step(&mut p, &[g]).unwrap();
                let delta = p[0] - prev;
                prev = p[0];
                let expected = -1e-2 * g.signum() * g.abs() / (g.abs() + 1e-8);
                assert!((delta - expected).abs() < 1e-12, "g={g} delta={delta}");
            }
        }
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut opt = Adam::new(2, 0.01);
            let mut p = vec![0.3, 0.7];
            for k in 0..10 {
                opt.step(&mut p, &[k as f64 * 0.1, -1.0]).unwrap();
            }
            (opt, p)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn rejects_non_finite_and_leaves_state() {
        let mut opt = Adam::new(2, 0.01);
        let mut p = vec![1.0, 1.0];
        let err = opt.step(&mut p, &[1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, NetError::NonFiniteGradient(1)));
        assert_eq!(p, vec![1.0, 1.0]);
        assert_eq!(opt.step, 0);
        assert!(opt.step(&mut p, &[1.0]).is_err());
    }

    #[test]
    fn clipping() {
        let mut g = vec![3.0, 4.0];
        assert_eq!(clip_grad_norm(&mut g, 1.0), 5.0);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
        let mut small = vec![0.1, 0.1];
        clip_grad_norm(&mut small, 1.0);
        assert_eq!(small, vec![0.1, 0.1]);
    }
}
