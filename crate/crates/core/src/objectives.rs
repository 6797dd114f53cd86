//! Analytic objectives with closed-form gradients.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone)]
enum Kind {
    Quadratic {
        k: f64,
    },
    Rosenbrock,
    Logistic {
        features: Vec<f64>,
        targets: Vec<f64>,
        separator: Vec<f64>,
    },
}

/// A differentiable function of a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Objective {
    name: String,
    dim: usize,
    kind: Kind,
}

impl Objective {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Known global minimiser and minimum value, when there is one.
    pub fn known_minimum(&self) -> Option<(Vec<f64>, f64)> {
        match self.kind {
            Kind::Quadratic { .. } => Some((vec![0.0; self.dim], 0.0)),
            Kind::Rosenbrock => Some((vec![1.0, 1.0], 0.0)),
            Kind::Logistic { .. } => None,
        }
    }

    /// Loss and gradient at `w`.
    pub fn eval(&self, w: &[f64]) -> Result<(f64, Vec<f64>)> {
        if w.len() != self.dim {
            return Err(Error::argument(format!(
                "{} expects {} parameters, got {}",
                self.name,
                self.dim,
                w.len()
            )));
        }
        Ok(match &self.kind {
            Kind::Quadratic { k } => {
                let loss = 0.5 * k * w.iter().map(|x| x * x).sum::<f64>();
                (loss, w.iter().map(|x| k * x).collect())
            }
            Kind::Rosenbrock => {
                let (x, y) = (w[0], w[1]);
                let r = y - x * x;
                let loss = (1.0 - x).powi(2) + 100.0 * r * r;
                let gx = -2.0 * (1.0 - x) - 400.0 * x * r;
                let gy = 200.0 * r;
                (loss, vec![gx, gy])
            }
            Kind::Logistic {
                features, targets, ..
            } => {
                let d = self.dim;
                let n = targets.len() as f64;
                let mut loss = 0.0;
                let mut grad = vec![0.0; d];
                for (x, &y) in features.chunks_exact(d).zip(targets) {
                    let z: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
                    // log(1 + e^z) − y·z, stable for large |z|
                    loss += softplus(z) - y * z;
                    let p = sigmoid(z);
                    for (g, xi) in grad.iter_mut().zip(x) {
                        *g += (p - y) * xi;
                    }
                }
                grad.iter_mut().for_each(|g| *g /= n);
                (loss / n, grad)
            }
        })
    }

    pub fn loss(&self, w: &[f64]) -> Result<f64> {
        Ok(self.eval(w)?.0)
    }

    /// Direction that separates the synthetic logistic data, if this is one.
    pub fn separator(&self) -> Option<&[f64]> {
        match &self.kind {
            Kind::Logistic { separator, .. } => Some(separator),
            _ => None,
        }
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `L(w) = ½·k·Σw²`, a one-parameter valley. Any dimension; defaults to 1.
pub fn quadratic(k: f64) -> Result<Objective> {
    quadratic_nd(k, 1)
}

pub fn quadratic_nd(k: f64, dim: usize) -> Result<Objective> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::argument(format!(
            "quadratic curvature must be positive, got {k}"
        )));
    }
    if dim == 0 {
        return Err(Error::argument("quadratic needs at least one dimension"));
    }
    Ok(Objective {
        name: format!("quadratic(k={k})"),
        dim,
        kind: Kind::Quadratic { k },
    })
}

/// `(1 − x)² + 100·(y − x²)²`.
pub fn rosenbrock() -> Objective {
    Objective {
        name: "rosenbrock".into(),
        dim: 2,
        kind: Kind::Rosenbrock,
    }
}

/// Margin kept between generated points and the separating hyperplane.
const LOGISTIC_MARGIN: f64 = 0.1;

/// Mean binary cross-entropy of a bias-free logistic model on a seeded
/// synthetic set.
///
/// Features are standard normal; a random unit direction `u` labels each
/// point by the sign of `u·x`, and points closer than 0.1 to the hyperplane
/// are redrawn, so the set is linearly separable with margin.
pub fn logistic_synthetic(n: usize, d: usize, seed: u64) -> Result<Objective> {
    if n == 0 || d == 0 {
        return Err(Error::argument("logistic objective needs n > 0 and d > 0"));
    }
    let mut rng = seed::rng(seed);
    let mut u: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    u.iter_mut().for_each(|x| *x /= norm);

    let mut features = Vec::with_capacity(n * d);
    let mut targets = Vec::with_capacity(n);
    while targets.len() < n {
        let x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let s: f64 = x.iter().zip(&u).map(|(a, b)| a * b).sum();
        if s.abs() < LOGISTIC_MARGIN {
            continue;
        }
        features.extend_from_slice(&x);
        targets.push(if s > 0.0 { 1.0 } else { 0.0 });
    }
    Ok(Objective {
        name: format!("logistic(n={n},d={d},seed={seed})"),
        dim: d,
        kind: Kind::Logistic {
            features,
            targets,
            separator: u,
        },
    })
}
