use super::{check_aligned, Optimizer};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Baseline optimizer and its hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineKind {
    /// `W ← W − l·G`
    Gd { learning_rate: f64 },
    /// `v ← γ·v + G`, `W ← W − l·v`
    Momentum { learning_rate: f64, momentum: f64 },
    /// `E ← ρ·E + (1 − ρ)·G²`, `W ← W − l·G / (√E + ε)`
    RmsProp {
        learning_rate: f64,
        rho: f64,
        epsilon: f64,
    },
    /// Bias-corrected first and second moments,
    /// `W ← W − l·m̂ / (√v̂ + ε)`.
    Adam {
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
}

impl BaselineKind {
    pub fn gd(learning_rate: f64) -> Self {
        BaselineKind::Gd { learning_rate }
    }

    pub fn momentum(learning_rate: f64) -> Self {
        BaselineKind::Momentum {
            learning_rate,
            momentum: 0.9,
        }
    }

    pub fn rmsprop(learning_rate: f64) -> Self {
        BaselineKind::RmsProp {
            learning_rate,
            rho: 0.9,
            epsilon: 1.0e-7,
        }
    }

    pub fn adam(learning_rate: f64) -> Self {
        BaselineKind::Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1.0e-7,
        }
    }

    pub fn learning_rate(&self) -> f64 {
        match *self {
            BaselineKind::Gd { learning_rate }
            | BaselineKind::Momentum { learning_rate, .. }
            | BaselineKind::RmsProp { learning_rate, .. }
            | BaselineKind::Adam { learning_rate, .. } => learning_rate,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::Gd { .. } => "gd",
            BaselineKind::Momentum { .. } => "momentum",
            BaselineKind::RmsProp { .. } => "rmsprop",
            BaselineKind::Adam { .. } => "adam",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lr = self.learning_rate();
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::config(format!(
                "{} learning rate must be positive, got {lr}",
                self.name()
            )));
        }
        let unit = |name: &str, x: f64| {
            if (0.0..1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must lie in [0, 1), got {x}")))
            }
        };
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must be positive, got {x}")))
            }
        };
        match *self {
            BaselineKind::Gd { .. } => Ok(()),
            BaselineKind::Momentum { momentum, .. } => unit("momentum", momentum),
            BaselineKind::RmsProp { rho, epsilon, .. } => {
                unit("rho", rho)?;
                positive("epsilon", epsilon)
            }
            BaselineKind::Adam {
                beta1,
                beta2,
                epsilon,
                ..
            } => {
                unit("beta1", beta1)?;
                unit("beta2", beta2)?;
                positive("epsilon", epsilon)
            }
        }
    }
}

/// State for a baseline optimizer. Accumulators start at zero.
#[derive(Debug, Clone)]
pub struct BaselineState {
    kind: BaselineKind,
    /// Momentum buffer, RMSProp mean square, or Adam first moment.
    first: Vec<Tensor>,
    /// Adam second moment; empty for the other kinds.
    second: Vec<Tensor>,
    step_count: u64,
}

impl BaselineState {
    pub fn new(shapes: &[Vec<usize>], kind: BaselineKind) -> Result<Self> {
        kind.validate()?;
        if shapes.is_empty() {
            return Err(Error::argument(
                "optimizer needs at least one parameter tensor",
            ));
        }
        let zeros = || {
            shapes
                .iter()
                .map(|s| Tensor::zeros(s))
                .collect::<Result<Vec<_>>>()
        };
        let first = match kind {
            BaselineKind::Gd { .. } => Vec::new(),
            _ => zeros()?,
        };
        let second = match kind {
            BaselineKind::Adam { .. } => zeros()?,
            _ => Vec::new(),
        };
        Ok(Self {
            kind,
            first,
            second,
            step_count: 0,
        })
    }

    pub fn kind(&self) -> &BaselineKind {
        &self.kind
    }

    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<()> {
        match self.kind {
            BaselineKind::Gd { .. } => check_aligned(params, grads, params)?,
            _ => check_aligned(params, grads, &self.first)?,
        }
        for (i, g) in grads.iter().enumerate() {
            if !g.all_finite() {
                return Err(Error::numeric(i, "gradient contains a non-finite entry"));
            }
        }

        let t = self.step_count + 1;
        let mut new_params = Vec::with_capacity(params.len());
        let mut new_first = Vec::with_capacity(self.first.len());
        let mut new_second = Vec::with_capacity(self.second.len());

        for (i, (w, g)) in params.iter().zip(grads).enumerate() {
            let (w, g) = (w.data(), g.data());
            let w_new: Vec<f64> = match self.kind {
                BaselineKind::Gd { learning_rate } => w
                    .iter()
                    .zip(g)
                    .map(|(w, g)| w - learning_rate * g)
                    .collect(),
                BaselineKind::Momentum {
                    learning_rate,
                    momentum,
                } => {
                    let v: Vec<f64> = self.first[i]
                        .data()
                        .iter()
                        .zip(g)
                        .map(|(v, g)| momentum * v + g)
                        .collect();
                    let out = w
                        .iter()
                        .zip(&v)
                        .map(|(w, v)| w - learning_rate * v)
                        .collect();
                    new_first.push(v);
                    out
                }
                BaselineKind::RmsProp {
                    learning_rate,
                    rho,
                    epsilon,
                } => {
                    let e: Vec<f64> = self.first[i]
                        .data()
                        .iter()
                        .zip(g)
                        .map(|(e, g)| rho * e + (1.0 - rho) * g * g)
                        .collect();
                    let out = w
                        .iter()
                        .zip(g)
                        .zip(&e)
                        .map(|((w, g), e)| w - learning_rate * g / (e.sqrt() + epsilon))
                        .collect();
                    new_first.push(e);
                    out
                }
                BaselineKind::Adam {
                    learning_rate,
                    beta1,
                    beta2,
                    epsilon,
                } => {
                    let m: Vec<f64> = self.first[i]
                        .data()
                        .iter()
                        .zip(g)
                        .map(|(m, g)| beta1 * m + (1.0 - beta1) * g)
                        .collect();
                    let v: Vec<f64> = self.second[i]
                        .data()
                        .iter()
                        .zip(g)
                        .map(|(v, g)| beta2 * v + (1.0 - beta2) * g * g)
                        .collect();
                    let c1 = 1.0 - beta1.powf(t as f64);
                    let c2 = 1.0 - beta2.powf(t as f64);
                    let out = w
                        .iter()
                        .zip(&m)
                        .zip(&v)
                        .map(|((w, m), v)| {
                            w - learning_rate * (m / c1) / ((v / c2).sqrt() + epsilon)
                        })
                        .collect();
                    new_first.push(m);
                    new_second.push(v);
                    out
                }
            };
            if w_new.iter().any(|x| !x.is_finite()) {
                return Err(Error::numeric(
                    i,
                    format!("{} update produced a non-finite value", self.kind.name()),
                ));
            }
            new_params.push(w_new);
        }

        for (w, data) in params.iter_mut().zip(new_params) {
            w.data_mut().copy_from_slice(&data);
        }
        for (acc, data) in self.first.iter_mut().zip(new_first) {
            acc.data_mut().copy_from_slice(&data);
        }
        for (acc, data) in self.second.iter_mut().zip(new_second) {
            acc.data_mut().copy_from_slice(&data);
        }
        self.step_count = t;
        Ok(())
    }
}

impl Optimizer for BaselineState {
    fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<()> {
        BaselineState::step(self, params, grads)
    }

    fn name(&self) -> &'static str {
        self.kind.name()
    }

    fn step_count(&self) -> u64 {
        self.step_count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_step(kind: BaselineKind, w: f64, g: f64) -> f64 {
        let mut st = BaselineState::new(&[vec![1]], kind).unwrap();
        let mut p = vec![Tensor::scalar(w)];
        st.step(&mut p, &[Tensor::scalar(g)]).unwrap();
        p[0].data()[0]
    }

    #[test]
    fn gd_step() {
        assert!((one_step(BaselineKind::gd(0.1), 0.0, 1.0) + 0.1).abs() < 1e-16);
    }

    #[test]
    fn adam_first_step_is_about_lr() {
        // m̂ = g, v̂ = g², so |ΔW| = l·|g| / (|g| + ε)
        let g = 0.01;
        let dw = one_step(BaselineKind::adam(0.001), 0.0, g);
        let want = -0.001 * g / (g + 1e-7);
        assert!((dw - want).abs() < 1e-18);
        assert!((dw.abs() - 0.001).abs() / 0.001 < 1e-4);
    }

    #[test]
    fn rmsprop_zero_gradient_keeps_params() {
        let mut st = BaselineState::new(&[vec![3]], BaselineKind::rmsprop(0.01)).unwrap();
        let mut p = vec![Tensor::from_vec(vec![1.0, -2.0, 3.0]).unwrap()];
        let before = p.clone();
        for _ in 0..3 {
            st.step(&mut p, &[Tensor::zeros(&[3]).unwrap()]).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn rmsprop_first_step() {
        // E = 0.1·g², ΔW = −l·g / (√E + ε)
        let g: f64 = 0.5;
        let dw = one_step(BaselineKind::rmsprop(0.01), 0.0, g);
        let want = -0.01 * g / ((0.1 * g * g).sqrt() + 1e-7);
        assert!((dw - want).abs() < 1e-16);
    }

    #[test]
    fn momentum_accumulates() {
        let mut st = BaselineState::new(&[vec![1]], BaselineKind::momentum(0.1)).unwrap();
        let mut p = vec![Tensor::scalar(0.0)];
        st.step(&mut p, &[Tensor::scalar(1.0)]).unwrap();
        st.step(&mut p, &[Tensor::scalar(1.0)]).unwrap();
        // v₁ = 1, v₂ = 1.9 → w = −0.1 − 0.19
        assert!((p[0].data()[0] + 0.29).abs() < 1e-15);
        assert_eq!(st.step_count, 2);
    }

    #[test]
    fn adam_matches_hand_recurrence_over_steps() {
        let grads = [0.3, -0.1, 0.25, 0.0, 1.5];
        let (b1, b2, eps, lr) = (0.9_f64, 0.999_f64, 1e-7, 0.01);
        let mut st = BaselineState::new(&[vec![1]], BaselineKind::adam(lr)).unwrap();
        let mut p = vec![Tensor::scalar(0.2)];
        let (mut m, mut v, mut w) = (0.0, 0.0, 0.2);
        for (k, &g) in grads.iter().enumerate() {
            let t = (k + 1) as i32;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            w -= lr * (m / (1.0 - b1.powi(t))) / ((v / (1.0 - b2.powi(t))).sqrt() + eps);
            st.step(&mut p, &[Tensor::scalar(g)]).unwrap();
            assert!((p[0].data()[0] - w).abs() < 1e-14);
        }
    }

    #[test]
    fn errors_leave_state_untouched() {
        let mut st = BaselineState::new(&[vec![2]], BaselineKind::adam(0.1)).unwrap();
        let mut p = vec![Tensor::from_vec(vec![1.0, 2.0]).unwrap()];
        let before = p.clone();
        let bad = vec![Tensor::from_vec(vec![f64::NAN, 0.0]).unwrap()];
        assert!(matches!(
            st.step(&mut p, &bad),
            Err(Error::Numeric { tensor: 0, .. })
        ));
        assert!(matches!(
            st.step(&mut p, &[Tensor::zeros(&[3]).unwrap()]),
            Err(Error::Argument(_))
        ));
        assert_eq!(p, before);
        assert_eq!(st.step_count, 0);

        let mut gd = BaselineState::new(&[vec![1]], BaselineKind::gd(1.0)).unwrap();
        let mut p = vec![Tensor::scalar(f64::MAX)];
        assert!(gd.step(&mut p, &[Tensor::scalar(-f64::MAX)]).is_err());
        assert_eq!(p[0].data()[0], f64::MAX);
    }

    #[test]
    fn defaults_follow_benchmark_settings() {
        match BaselineKind::adam(1e-3) {
            BaselineKind::Adam {
                beta1,
                beta2,
                epsilon,
                ..
            } => assert_eq!((beta1, beta2, epsilon), (0.9, 0.999, 1.0e-7)),
            _ => unreachable!(),
        }
        match BaselineKind::rmsprop(1e-3) {
            BaselineKind::RmsProp { rho, epsilon, .. } => assert_eq!((rho, epsilon), (0.9, 1.0e-7)),
            _ => unreachable!(),
        }
    }
}
