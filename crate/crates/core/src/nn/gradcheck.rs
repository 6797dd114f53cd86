//! Central finite-difference check of backpropagated gradients.
//!
//! The oracle only ever calls [`Model::loss`] (a forward pass), so it shares
//! no code with the backward pass it checks.

use rand::seq::index;
use rand::Rng;

use super::Model;
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::seed;
use crate::tensor::Tensor;

/// Magnitudes below this are compared absolutely rather than relatively.
///
/// Central differences at `h = 1e-6` carry roughly `1e-10` of rounding
/// noise on O(1) losses, which would swamp a purely relative comparison for
/// gradients near zero.
pub const REL_ERR_FLOOR: f64 = 1e-4;

/// `|a − b| / max(|a|, |b|, REL_ERR_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR)
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    pub step: f64,
    /// Check at most this many coordinates per tensor (seeded sample);
    /// `None` checks every coordinate.
    pub samples_per_tensor: Option<usize>,
    pub seed: u64,
    pub mode: ExecMode,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-6,
            samples_per_tensor: None,
            seed: 0,
            mode: ExecMode::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// `(tensor, element)` with the largest error.
    pub worst: (usize, usize),
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, threshold: f64) -> bool {
        self.max_rel_err <= threshold
    }
}

/// Seeded input batch for gradient checks: features uniform in [0, 1),
/// labels uniform over `k` classes.
pub fn probe_batch(n: usize, d: usize, k: usize, seed: u64) -> Result<(Tensor, Vec<usize>)> {
    if n == 0 || d == 0 || k == 0 {
        return Err(Error::argument("probe batch needs n, d, k > 0"));
    }
    let mut rng = seed::rng(seed);
    let x = (0..n * d).map(|_| rng.random::<f64>()).collect();
    let y = (0..n).map(|_| rng.random_range(0..k)).collect();
    Ok((Tensor::new(vec![n, d], x)?, y))
}

pub fn gradient_check(
    model: &Model,
    x: &Tensor,
    labels: &[usize],
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    if cfg.step.is_nan() || cfg.step <= 0.0 {
        return Err(Error::argument("finite-difference step must be positive"));
    }
    let (_, analytic) = model.loss_and_grads(x, labels)?;

    let mut rng = seed::rng(cfg.seed);
    let mut coords = Vec::new();
    for (t, p) in model.params().iter().enumerate() {
        match cfg.samples_per_tensor {
            Some(k) if k < p.len() => {
                let mut picked = index::sample(&mut rng, p.len(), k).into_vec();
                picked.sort_unstable();
                coords.extend(picked.into_iter().map(|e| (t, e)));
            }
            _ => coords.extend((0..p.len()).map(|e| (t, e))),
        }
    }

    let h = cfg.step;
    let errors = cfg.mode.map_init(
        &coords,
        || model.clone(),
        |m, &(t, e)| -> Result<f64> {
            let orig = m.params()[t].data()[e];
            m.params_mut()[t].data_mut()[e] = orig + h;
            let up = m.loss(x, labels)?;
            m.params_mut()[t].data_mut()[e] = orig - h;
            let down = m.loss(x, labels)?;
            m.params_mut()[t].data_mut()[e] = orig;
            let numeric = (up - down) / (2.0 * h);
            Ok(relative_error(analytic[t].data()[e], numeric))
        },
    );

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst: (0, 0),
        checked: coords.len(),
    };
    for (err, &coord) in errors.into_iter().zip(&coords) {
        let err = err?;
        if err.is_nan() || err > report.max_rel_err {
            report.max_rel_err = err;
            report.worst = coord;
        }
    }
    Ok(report)
}
