//! The Gravity optimizer.
//!
//! Per parameter tensor `W` with gradient `G`, one update does
//!
//! ```text
//! m  = 1 / max|G|                       (one scalar per tensor)
//! ζ  = G / (1 + (G / m)²)               (elementwise)
//! β̂  = (β·s + 1) / (s + 2)              (s = completed updates)
//! V ← β̂·V + (1 − β̂)·ζ
//! W ← W − l·V
//! ```
//!
//! Velocities start as i.i.d. `N(0, α/l)` noise. Since `|ζ| ≤ m/2` for every
//! element, the gradient term never moves a weight by more than `l·m/2`.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_aligned, Optimizer};
use crate::error::{Error, Result};
use crate::seed;
use crate::tensor::Tensor;

/// How the velocity is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityRule {
    /// Step-dependent coefficient β̂ (the Gravity default).
    #[default]
    BetaHat,
    /// Fixed β with `1 − β^t` bias correction. Kept for comparison only; it
    /// rejects β = 1 and blows up initial steps when β is close to 1.
    BiasCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GravityConfig {
    pub learning_rate: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub velocity_rule: VelocityRule,
}

impl Default for GravityConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            alpha: 0.01,
            beta: 0.9,
            velocity_rule: VelocityRule::BetaHat,
        }
    }
}

impl GravityConfig {
    pub fn new(learning_rate: f64, alpha: f64, beta: f64) -> Result<Self> {
        let cfg = Self {
            learning_rate,
            alpha,
            beta,
            velocity_rule: VelocityRule::BetaHat,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "gravity learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::config(format!(
                "gravity alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::config(format!(
                "gravity beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        if self.velocity_rule == VelocityRule::BiasCorrected && self.beta >= 1.0 {
            return Err(Error::config("bias-corrected velocity requires beta < 1"));
        }
        Ok(())
    }

    /// Standard deviation of the initial velocity, `α / l`.
    pub fn velocity_sigma(&self) -> f64 {
        self.alpha / self.learning_rate
    }
}

/// Averaging coefficient after `s` completed updates: `(β·s + 1) / (s + 2)`.
///
/// Equals 1/2 on the first update for every β and tends to β as `s` grows.
pub fn beta_hat(beta: f64, s: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::argument(format!(
            "beta must lie in [0, 1], got {beta}"
        )));
    }
    let s = s as f64;
    Ok((beta * s + 1.0) / (s + 2.0))
}

/// Max-step grad for one gradient tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaxStep {
    /// `m = 1 / max|G|`.
    Finite(f64),
    /// Every entry of `G` is zero, so `m` is undefined; the gradient term is
    /// taken to be zero.
    ZeroGradient,
}

impl MaxStep {
    pub fn value(self) -> Option<f64> {
        match self {
            MaxStep::Finite(m) => Some(m),
            MaxStep::ZeroGradient => None,
        }
    }
}

pub fn max_step_grad(grad: &Tensor) -> Result<MaxStep> {
    max_step_grad_at(grad, 0)
}

fn max_step_grad_at(grad: &Tensor, index: usize) -> Result<MaxStep> {
    if !grad.all_finite() {
        return Err(Error::numeric(
            index,
            "gradient contains a non-finite entry",
        ));
    }
    let peak = grad.max_abs();
    if peak == 0.0 {
        Ok(MaxStep::ZeroGradient)
    } else {
        Ok(MaxStep::Finite(1.0 / peak))
    }
}

/// `ζ = g / (1 + (g/m)²)` elementwise; all zeros for a zero gradient.
pub fn gradient_term(grad: &Tensor, m: MaxStep) -> Tensor {
    let mut out = grad.clone();
    match m {
        MaxStep::ZeroGradient => out.data_mut().fill(0.0),
        MaxStep::Finite(m) => {
            for g in out.data_mut() {
                *g = zeta(*g, m);
            }
        }
    }
    out
}

#[inline]
fn zeta(g: f64, m: f64) -> f64 {
    let r = g / m;
    g / (1.0 + r * r)
}

/// Bias-corrected velocity `(β·V + (1 − β)·ζ) / (1 − β^t)`.
pub fn bias_corrected_velocity(
    v_prev: &Tensor,
    zeta: &Tensor,
    beta: f64,
    t: u64,
) -> Result<Tensor> {
    if t < 1 {
        return Err(Error::argument("bias correction needs t >= 1"));
    }
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::argument(format!(
            "bias correction needs beta in [0, 1), got {beta}"
        )));
    }
    if v_prev.shape() != zeta.shape() {
        return Err(Error::argument(format!(
            "velocity shape {:?} does not match gradient term shape {:?}",
            v_prev.shape(),
            zeta.shape()
        )));
    }
    let denom = 1.0 - beta_pow(beta, t);
    let data = v_prev
        .data()
        .iter()
        .zip(zeta.data())
        .map(|(&v, &z)| (beta * v + (1.0 - beta) * z) / denom)
        .collect();
    Tensor::new(v_prev.shape().to_vec(), data)
}

fn beta_pow(beta: f64, t: u64) -> f64 {
    if t > 1000 {
        (t as f64 * beta.ln()).exp()
    } else {
        beta.powi(t as i32)
    }
}

/// Gravity's single-step response to a raw gradient, `−l·g / (1 + (g/m)²)`.
#[inline]
pub fn gravity_delta(l: f64, m: f64, g: f64) -> f64 {
    -l * zeta(g, m)
}

/// Plain gradient descent step, `−l·g`.
#[inline]
pub fn gd_delta(l: f64, g: f64) -> f64 {
    -l * g
}

/// Samples `(g, ΔW(g))` for the Gravity response curve.
pub fn response_curve(l: f64, m: f64, g_values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if l.is_nan() || l <= 0.0 {
        return Err(Error::argument(format!(
            "learning rate must be positive, got {l}"
        )));
    }
    if m.is_nan() || m <= 0.0 {
        return Err(Error::argument(format!(
            "max-step grad must be positive, got {m}"
        )));
    }
    Ok(g_values
        .iter()
        .map(|&g| (g, gravity_delta(l, m, g)))
        .collect())
}

/// Gravity optimizer state: one velocity per parameter tensor.
#[derive(Debug, Clone)]
pub struct GravityState {
    config: GravityConfig,
    velocities: Vec<Tensor>,
    step_count: u64,
    seed: u64,
}

impl GravityState {
    /// Draws initial velocities from `N(0, α/l)`.
    ///
    /// All tensors share one `ChaCha8Rng` stream seeded with `seed` and are
    /// filled in order; normals come from `rand_distr::StandardNormal`
    /// (ziggurat) scaled by σ.
    pub fn new(shapes: &[Vec<usize>], config: GravityConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if shapes.is_empty() {
            return Err(Error::argument(
                "gravity needs at least one parameter tensor",
            ));
        }
        let sigma = config.velocity_sigma();
        let mut rng = seed::rng(seed);
        let velocities = shapes
            .iter()
            .map(|shape| {
                let mut v = Tensor::zeros(shape)?;
                for x in v.data_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *x = sigma * z;
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            velocities,
            step_count: 0,
            seed,
        })
    }

    pub fn config(&self) -> &GravityConfig {
        &self.config
    }

    pub fn velocities(&self) -> &[Tensor] {
        &self.velocities
    }

    /// Direct access to the velocities, e.g. to pin `V₀` in experiments.
    /// Shapes must be left unchanged.
    pub fn velocities_mut(&mut self) -> &mut [Tensor] {
        &mut self.velocities
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Coefficient the next update will use.
    pub fn next_beta_hat(&self) -> f64 {
        // beta was validated at construction
        beta_hat(self.config.beta, self.step_count).expect("validated beta")
    }

    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<()> {
        check_aligned(params, grads, &self.velocities)?;
        let l = self.config.learning_rate;
        let b_hat = self.next_beta_hat();

        let mut updates = Vec::with_capacity(params.len());
        for (i, ((w, g), v)) in params.iter().zip(grads).zip(&self.velocities).enumerate() {
            let m = max_step_grad_at(g, i)?;
            let zeta = gradient_term(g, m);
            let v_new = match self.config.velocity_rule {
                VelocityRule::BetaHat => {
                    let data = v
                        .data()
                        .iter()
                        .zip(zeta.data())
                        .map(|(&v, &z)| b_hat * v + (1.0 - b_hat) * z)
                        .collect();
                    Tensor::new(v.shape().to_vec(), data)?
                }
                VelocityRule::BiasCorrected => {
                    bias_corrected_velocity(v, &zeta, self.config.beta, self.step_count + 1)?
                }
            };
            let w_new: Vec<f64> = w
                .data()
                .iter()
                .zip(v_new.data())
                .map(|(&w, &v)| w - l * v)
                .collect();
            if !v_new.all_finite() || w_new.iter().any(|x| !x.is_finite()) {
                return Err(Error::numeric(
                    i,
                    "gravity update produced a non-finite value",
                ));
            }
            updates.push((v_new, w_new));
        }

        for ((w, v), (v_new, w_new)) in params.iter_mut().zip(&mut self.velocities).zip(updates) {
            *v = v_new;
            w.data_mut().copy_from_slice(&w_new);
        }
        self.step_count += 1;
        Ok(())
    }
}

impl Optimizer for GravityState {
    fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<()> {
        GravityState::step(self, params, grads)
    }

    fn name(&self) -> &'static str {
        "gravity"
    }

    fn step_count(&self) -> u64 {
        self.step_count
    }
}
