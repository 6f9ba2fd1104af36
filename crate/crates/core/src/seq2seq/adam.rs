use super::params::{Gradients, Parameters};
use super::TrainConfig;
use crate::error::{Error, Result};

/// First and second moment estimates, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(p: &Parameters) -> Self {
        Self {
            m: vec![0.0; p.len()],
            v: vec![0.0; p.len()],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(p: &mut Parameters, grads: &Gradients, s: &mut AdamState, cfg: &TrainConfig) -> Result<()> {
    if grads.len() != p.len() || s.m.len() != p.len() || s.v.len() != p.len() || grads.specs != p.specs {
        return Err(Error::Contract("parameter, gradient and Adam shapes differ".into()));
    }
    s.t += 1;
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let bc1 = 1.0 - b1.powi(s.t as i32);
    let bc2 = 1.0 - b2.powi(s.t as i32);
    for (((w, &g), m), v) in p
        .data
        .iter_mut()
        .zip(&grads.data)
        .zip(s.m.iter_mut())
        .zip(s.v.iter_mut())
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *w -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    Ok(())
}
