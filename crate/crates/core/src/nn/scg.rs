//! Scaled conjugate gradient minimization with Levenberg-style damping.
//!
//! One call to [`ScgState::step`] performs one iteration. Curvature along
//! the search direction is estimated by a gradient finite difference, so no
//! line search is needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScgParams {
    /// Finite-difference scale for the curvature probe.
    pub sigma: f64,
    /// Initial damping.
    pub lambda0: f64,
    /// Restart to steepest descent every this many iterations; 0 means the
    /// number of parameters.
    pub restart_every: usize,
}

impl Default for ScgParams {
    fn default() -> Self {
        Self {
            sigma: 5e-5,
            lambda0: 5e-7,
            restart_every: 0,
        }
    }
}

impl ScgParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite() && self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return Err(Error::InvalidConfig("SCG sigma and lambda0 must be positive".into()));
        }
        Ok(())
    }
}

/// Result of one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    /// Loss at the current iterate after the step.
    pub loss: f64,
    pub grad_norm: f64,
    /// Step length along the search direction that was tried.
    pub alpha: f64,
    pub lambda: f64,
    pub restarted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScgState {
    pub params: ScgParams,
    pub x: Vec<f64>,
    pub loss: f64,
    grad: Vec<f64>,
    /// Search direction.
    p: Vec<f64>,
    /// Negative gradient.
    r: Vec<f64>,
    lambda: f64,
    lambda_bar: f64,
    success: bool,
    delta: f64,
    accepted_steps: usize,
    restart_every: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(x: &[f64], a: f64, p: &[f64]) -> Vec<f64> {
    x.iter().zip(p).map(|(xi, pi)| xi + a * pi).collect()
}

impl ScgState {
    /// Starts at `x0` with a steepest-descent direction.
    pub fn new<F>(x0: Vec<f64>, params: ScgParams, objective: &mut F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    {
        params.validate()?;
        if x0.is_empty() {
            return Err(Error::Contract("SCG needs at least one parameter".into()));
        }
        let (loss, grad) = objective(&x0)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("initial loss or gradient"));
        }
        let r: Vec<f64> = grad.iter().map(|g| -g).collect();
        let restart_every = if params.restart_every == 0 {
            x0.len()
        } else {
            params.restart_every
        };
        Ok(Self {
            lambda: params.lambda0,
            params,
            p: r.clone(),
            r,
            grad,
            loss,
            x: x0,
            lambda_bar: 0.0,
            success: true,
            delta: 0.0,
            accepted_steps: 0,
            restart_every,
        })
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn grad_norm(&self) -> f64 {
        dot(&self.grad, &self.grad).sqrt()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn direction(&self) -> &[f64] {
        &self.p
    }

    pub fn step<F>(&mut self, objective: &mut F) -> Result<StepOutcome>
    where
        F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    {
        let p_sq = dot(&self.p, &self.p);
        if p_sq == 0.0 {
            return Ok(self.outcome(true, 0.0, false));
        }
        if self.success {
            let sigma_k = self.params.sigma / p_sq.sqrt();
            let probe = axpy(&self.x, sigma_k, &self.p);
            let (_, g_probe) = objective(&probe)?;
            let s: Vec<f64> = g_probe.iter().zip(&self.grad).map(|(a, b)| (a - b) / sigma_k).collect();
            self.delta = dot(&self.p, &s);
            if !self.delta.is_finite() {
                self.delta = 0.0;
            }
        }
        let mut delta = self.delta + (self.lambda - self.lambda_bar) * p_sq;
        if delta <= 0.0 {
            self.lambda_bar = 2.0 * (self.lambda - delta / p_sq);
            delta = -delta + self.lambda * p_sq;
            self.lambda = self.lambda_bar;
        }
        let mu = dot(&self.p, &self.r);
        if mu <= 0.0 {
            self.restart();
            return Ok(self.outcome(false, 0.0, true));
        }
        let alpha = mu / delta;
        let trial = axpy(&self.x, alpha, &self.p);
        let (trial_loss, trial_grad) = objective(&trial)?;
        let finite = trial_loss.is_finite() && trial_grad.iter().all(|g| g.is_finite());
        let comparison = if finite {
            2.0 * delta * (self.loss - trial_loss) / (mu * mu)
        } else {
            f64::NEG_INFINITY
        };

        let mut restarted = false;
        let accepted = comparison >= 0.0;
        if accepted {
            self.x = trial;
            self.loss = trial_loss;
            self.grad = trial_grad;
            let r_new: Vec<f64> = self.grad.iter().map(|g| -g).collect();
            self.lambda_bar = 0.0;
            self.success = true;
            self.accepted_steps += 1;
            if self.accepted_steps % self.restart_every == 0 {
                self.p = r_new.clone();
                restarted = true;
            } else {
                let beta = (dot(&r_new, &r_new) - dot(&r_new, &self.r)) / mu;
                self.p = axpy(&r_new, beta, &self.p);
            }
            self.r = r_new;
            if comparison >= 0.75 {
                self.lambda *= 0.25;
            }
        } else {
            self.lambda_bar = self.lambda;
            self.success = false;
        }
        if !finite {
            self.lambda = (self.lambda * 4.0).max(self.params.lambda0);
        } else if comparison < 0.25 {
            self.lambda += delta * (1.0 - comparison) / p_sq;
        }
        if !self.lambda.is_finite() {
            return Err(Error::NonFinite("SCG damping"));
        }
        Ok(self.outcome(accepted, alpha, restarted))
    }

    fn restart(&mut self) {
        self.p = self.r.clone();
        self.success = true;
        self.lambda_bar = 0.0;
    }

    fn outcome(&self, accepted: bool, alpha: f64, restarted: bool) -> StepOutcome {
        StepOutcome {
            accepted,
            loss: self.loss,
            grad_norm: self.grad_norm(),
            alpha,
            lambda: self.lambda,
            restarted,
        }
    }
}

/// Runs up to `max_iter` iterations or until the gradient norm drops to `grad_tol`.
pub fn minimize<F>(
    x0: Vec<f64>,
    params: ScgParams,
    max_iter: usize,
    grad_tol: f64,
    mut objective: F,
) -> Result<(ScgState, Vec<f64>)>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut state = ScgState::new(x0, params, &mut objective)?;
    let mut history = vec![state.loss];
    for _ in 0..max_iter {
        if state.grad_norm() <= grad_tol {
            break;
        }
        let out = state.step(&mut objective)?;
        history.push(out.loss);
    }
    Ok((state, history))
}
