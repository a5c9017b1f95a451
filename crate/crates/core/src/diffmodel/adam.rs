use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates and the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one bias-corrected update to `vars` (which may span several arrays).
    pub(crate) fn step_iter<'a>(
        &mut self,
        vars: impl Iterator<Item = &'a mut f64>,
        grads: impl Iterator<Item = f64>,
        cfg: &AdamConfig,
    ) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for (((x, g), m), v) in vars.zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *x -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

/// One Adam step on `var` given `grad`.
pub fn adam_step(
    var: &mut [f64],
    grad: &[f64],
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    if var.len() != grad.len() || var.len() != state.len() {
        return Err(Error::shape(format!(
            "adam: variable {}, gradient {}, state {}",
            var.len(),
            grad.len(),
            state.len()
        )));
    }
    state.step_iter(var.iter_mut(), grad.iter().copied(), cfg);
    Ok(())
}
