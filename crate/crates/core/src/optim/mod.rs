//! Optimizers.
//!
//! [`GravityState`] implements the Gravity update; [`BaselineState`] covers
//! plain gradient descent, heavy-ball momentum, RMSProp and Adam. Both
//! implement [`Optimizer`], and [`OptimizerSpec`] is the serialisable form
//! used by run configurations.

mod baseline;
mod gravity;

pub use baseline::{BaselineKind, BaselineState};
pub use gravity::{
    beta_hat, bias_corrected_velocity, gd_delta, gradient_term, gravity_delta, max_step_grad,
    response_curve, GravityConfig, GravityState, MaxStep, VelocityRule,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// A first-order optimizer owning per-parameter state.
///
/// `step` either applies the whole update or leaves both `params` and the
/// optimizer state untouched and returns an error.
pub trait Optimizer: Send {
    fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<()>;

    fn name(&self) -> &'static str;

    /// Number of completed updates.
    fn step_count(&self) -> u64;
}

/// Optimizer selection with hyper-parameters, as it appears in a run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum OptimizerSpec {
    Gravity {
        #[serde(default = "defaults::gravity_lr")]
        learning_rate: f64,
        #[serde(default = "defaults::gravity_alpha")]
        alpha: f64,
        #[serde(default = "defaults::gravity_beta")]
        beta: f64,
        #[serde(default)]
        velocity_rule: VelocityRule,
    },
    Gd {
        learning_rate: f64,
    },
    Momentum {
        learning_rate: f64,
        #[serde(default = "defaults::momentum")]
        momentum: f64,
    },
    Rmsprop {
        learning_rate: f64,
        #[serde(default = "defaults::rho")]
        rho: f64,
        #[serde(default = "defaults::epsilon")]
        epsilon: f64,
    },
    Adam {
        learning_rate: f64,
        #[serde(default = "defaults::beta1")]
        beta1: f64,
        #[serde(default = "defaults::beta2")]
        beta2: f64,
        #[serde(default = "defaults::epsilon")]
        epsilon: f64,
    },
}

mod defaults {
    pub fn gravity_lr() -> f64 {
        0.1
    }
    pub fn gravity_alpha() -> f64 {
        0.01
    }
    pub fn gravity_beta() -> f64 {
        0.9
    }
    pub fn momentum() -> f64 {
        0.9
    }
    pub fn rho() -> f64 {
        0.9
    }
    pub fn beta1() -> f64 {
        0.9
    }
    pub fn beta2() -> f64 {
        0.999
    }
    pub fn epsilon() -> f64 {
        1.0e-7
    }
}

impl OptimizerSpec {
    pub fn gravity_default() -> Self {
        OptimizerSpec::Gravity {
            learning_rate: defaults::gravity_lr(),
            alpha: defaults::gravity_alpha(),
            beta: defaults::gravity_beta(),
            velocity_rule: VelocityRule::BetaHat,
        }
    }

    pub fn adam(learning_rate: f64) -> Self {
        OptimizerSpec::Adam {
            learning_rate,
            beta1: defaults::beta1(),
            beta2: defaults::beta2(),
            epsilon: defaults::epsilon(),
        }
    }

    pub fn rmsprop(learning_rate: f64) -> Self {
        OptimizerSpec::Rmsprop {
            learning_rate,
            rho: defaults::rho(),
            epsilon: defaults::epsilon(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerSpec::Gravity { .. } => "gravity",
            OptimizerSpec::Gd { .. } => "gd",
            OptimizerSpec::Momentum { .. } => "momentum",
            OptimizerSpec::Rmsprop { .. } => "rmsprop",
            OptimizerSpec::Adam { .. } => "adam",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.gravity_config() {
            Some(cfg) => cfg.validate(),
            None => self.baseline_kind().expect("baseline").validate(),
        }
    }

    fn gravity_config(&self) -> Option<GravityConfig> {
        match *self {
            OptimizerSpec::Gravity {
                learning_rate,
                alpha,
                beta,
                velocity_rule,
            } => Some(GravityConfig {
                learning_rate,
                alpha,
                beta,
                velocity_rule,
            }),
            _ => None,
        }
    }

    fn baseline_kind(&self) -> Option<BaselineKind> {
        Some(match *self {
            OptimizerSpec::Gravity { .. } => return None,
            OptimizerSpec::Gd { learning_rate } => BaselineKind::Gd { learning_rate },
            OptimizerSpec::Momentum {
                learning_rate,
                momentum,
            } => BaselineKind::Momentum {
                learning_rate,
                momentum,
            },
            OptimizerSpec::Rmsprop {
                learning_rate,
                rho,
                epsilon,
            } => BaselineKind::RmsProp {
                learning_rate,
                rho,
                epsilon,
            },
            OptimizerSpec::Adam {
                learning_rate,
                beta1,
                beta2,
                epsilon,
            } => BaselineKind::Adam {
                learning_rate,
                beta1,
                beta2,
                epsilon,
            },
        })
    }

    /// Builds optimizer state for parameters of the given shapes. `seed`
    /// only matters for Gravity's velocity initialisation.
    pub fn build(&self, shapes: &[Vec<usize>], seed: u64) -> Result<Box<dyn Optimizer>> {
        if let Some(cfg) = self.gravity_config() {
            return Ok(Box::new(GravityState::new(shapes, cfg, seed)?));
        }
        let kind = self
            .baseline_kind()
            .ok_or_else(|| Error::config("unknown optimizer"))?;
        Ok(Box::new(BaselineState::new(shapes, kind)?))
    }
}

/// Checks that parameter, gradient and state tensors line up.
pub(crate) fn check_aligned(params: &[Tensor], grads: &[Tensor], state: &[Tensor]) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.len() {
        return Err(Error::argument(format!(
            "{} parameter tensors, {} gradient tensors, {} state tensors",
            params.len(),
            grads.len(),
            state.len()
        )));
    }
    for (i, ((p, g), s)) in params.iter().zip(grads).zip(state).enumerate() {
        if p.shape() != g.shape() || p.shape() != s.shape() {
            return Err(Error::argument(format!(
                "tensor {i}: parameter shape {:?}, gradient shape {:?}, state shape {:?}",
                p.shape(),
                g.shape(),
                s.shape()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parses_with_defaults_and_rejects_unknowns() {
        let s: OptimizerSpec = serde_json::from_str(r#"{"name":"gravity"}"#).unwrap();
        assert_eq!(s, OptimizerSpec::gravity_default());

        let s: OptimizerSpec =
            serde_json::from_str(r#"{"name":"adam","learning_rate":0.001}"#).unwrap();
        assert_eq!(s, OptimizerSpec::adam(0.001));

        assert!(serde_json::from_str::<OptimizerSpec>(r#"{"name":"sgdx"}"#).is_err());
        assert!(serde_json::from_str::<OptimizerSpec>(
            r#"{"name":"gd","learning_rate":0.1,"gamma":3}"#
        )
        .is_err());
        assert!(serde_json::from_str::<OptimizerSpec>(r#"{"name":"gd"}"#).is_err());
    }

    #[test]
    fn build_validates_hyper_parameters() {
        let shapes = vec![vec![2, 2]];
        let bad = OptimizerSpec::Gravity {
            learning_rate: -1.0,
            alpha: 0.01,
            beta: 0.9,
            velocity_rule: VelocityRule::BetaHat,
        };
        assert!(matches!(bad.build(&shapes, 0), Err(Error::Config(_))));
        assert!(matches!(
            OptimizerSpec::rmsprop(0.0).build(&shapes, 0),
            Err(Error::Config(_))
        ));
        let opt = OptimizerSpec::adam(1e-3).build(&shapes, 0).unwrap();
        assert_eq!(opt.name(), "adam");
    }
}
