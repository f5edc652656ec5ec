//! Adam with bias-corrected moments, and the cosine learning-rate decay.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One in-place Adam update. Rejects non-finite gradients before touching
/// any state.
pub fn adam_step(params: &mut [f64], grads: &[f64], opt: &mut AdamState, lr: f64) -> Result<()> {
    check_dim(params.len(), grads.len())?;
    check_dim(params.len(), opt.m.len())?;
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numeric {
            step: opt.step as usize,
            what: format!("gradient entry {i} is {}", grads[i]),
        });
    }
    opt.step += 1;
    let t = opt.step as i32;
    let c1 = 1.0 - opt.beta1.powi(t);
    let c2 = 1.0 - opt.beta2.powi(t);
    for ((w, g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(opt.m.iter_mut().zip(opt.v.iter_mut()))
    {
        *m = opt.beta1 * *m + (1.0 - opt.beta1) * g;
        *v = opt.beta2 * *v + (1.0 - opt.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *w -= lr * m_hat / (v_hat.sqrt() + opt.epsilon);
    }
    Ok(())
}

/// `lr_end + (lr_start - lr_end) (1 + cos(pi step / total)) / 2`.
pub fn cosine_lr(step: usize, total_steps: usize, lr_start: f64, lr_end: f64) -> f64 {
    if total_steps == 0 {
        return lr_start;
    }
    let progress = step.min(total_steps) as f64 / total_steps as f64;
    lr_end + 0.5 * (lr_start - lr_end) * (1.0 + (std::f64::consts::PI * progress).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_endpoints() {
        assert!((cosine_lr(0, 512, 1e-3, 3e-4) - 1e-3).abs() < 1e-18);
        assert!((cosine_lr(512, 512, 1e-3, 3e-4) - 3e-4).abs() < 1e-18);
        assert!((cosine_lr(256, 512, 1e-3, 3e-4) - 6.5e-4).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut params = vec![1.0, -2.0];
        let mut opt = AdamState::new(2);
        opt.m = vec![0.5, 0.5];
        opt.v = vec![0.25, 0.25];
        opt.step = 3;
        let before = opt.clone();
        adam_step(&mut params, &[0.0, 0.0], &mut opt, 1e-3).unwrap();
        // moments decay, params move only by the decayed first moment
        assert_eq!(opt.m, vec![0.45, 0.45]);
        assert!((opt.v[0] - 0.25 * 0.999).abs() < 1e-15);
        assert_eq!(opt.step, before.step + 1);

        let mut fresh = vec![1.0, -2.0];
        let mut opt = AdamState::new(2);
        adam_step(&mut fresh, &[0.0, 0.0], &mut opt, 1e-3).unwrap();
        assert_eq!(fresh, vec![1.0, -2.0]);
    }

    #[test]
    fn first_step_by_hand() {
        // m = 0.1 g, v = 0.001 g^2; bias-corrected m_hat = g, v_hat = g^2,
        // so the step is lr * g / (|g| + eps).
        let g = 0.5;
        let lr = 1e-3;
        let mut w = vec![2.0];
        let mut opt = AdamState::new(1);
        adam_step(&mut w, &[g], &mut opt, lr).unwrap();
        let expected = 2.0 - lr * g / (g + 1e-8);
        assert!((w[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn deterministic_and_rejects_nan() {
        let run = || {
            let mut w = vec![0.3, -0.7, 1.1];
            let mut opt = AdamState::new(3);
            for _ in 0..2 {
                adam_step(&mut w, &[0.1, -0.2, 0.3], &mut opt, 1e-2).unwrap();
            }
            (w, opt)
        };
        assert_eq!(run(), run());

        let mut w = vec![0.0];
        let mut opt = AdamState::new(1);
        assert!(adam_step(&mut w, &[f64::NAN], &mut opt, 1e-3).is_err());
        assert_eq!(opt.step, 0);
    }
}
