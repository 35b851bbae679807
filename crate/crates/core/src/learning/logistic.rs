//! L2-regularized logistic regression, the default top-level detector.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

/// `ln(1 + e^u)` without overflow.
fn softplus(u: f64) -> f64 {
    if u > 30.0 {
        u
    } else if u < -30.0 {
        u.exp()
    } else {
        u.exp().ln_1p()
    }
}

/// Regularized negative log-likelihood: `λ/2 ‖w‖² + mean softplus(−y z)`.
/// The bias is not regularized.
pub fn logistic_objective(
    weights: &[f64],
    bias: f64,
    positives: &[Vec<f64>],
    negatives: &[Vec<f64>],
    lambda: f64,
) -> f64 {
    let n = (positives.len() + negatives.len()) as f64;
    let mut loss = 0.0;
    for (xs, y) in [(positives, 1.0), (negatives, -1.0)] {
        for x in xs {
            let z: f64 = bias + weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            loss += softplus(-y * z);
        }
    }
    0.5 * lambda * weights.iter().map(|w| w * w).sum::<f64>() + loss / n
}

/// Gradient of [`logistic_objective`] with respect to (weights, bias).
pub fn logistic_gradient(
    weights: &[f64],
    bias: f64,
    positives: &[Vec<f64>],
    negatives: &[Vec<f64>],
    lambda: f64,
) -> (Vec<f64>, f64) {
    let n = (positives.len() + negatives.len()) as f64;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for (xs, y) in [(positives, 1.0), (negatives, -1.0)] {
        for x in xs {
            let z: f64 = bias + weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            // d/dz softplus(-y z) = -y σ(-y z)
            let coeff = -y / (1.0 + (y * z).exp());
            for (g, v) in gw.iter_mut().zip(x) {
                *g += coeff * v;
            }
            gb += coeff;
        }
    }
    for (g, w) in gw.iter_mut().zip(weights) {
        *g = *g / n + lambda * w;
    }
    (gw, gb / n)
}

/// Train the detector by gradient descent with backtracking line search until
/// the gradient norm falls below `tol`.
pub fn train_detector(
    positives: &[Vec<f64>],
    negatives: &[Vec<f64>],
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LogisticModel> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::InvalidTrainingSet("detector needs both classes".into()));
    }
    let dim = positives[0].len();
    for x in positives.iter().chain(negatives) {
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.len(),
                what: "detector feature",
            });
        }
    }
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut obj = logistic_objective(&w, b, positives, negatives, lambda);
    for _ in 0..max_iter {
        let (gw, gb) = logistic_gradient(&w, b, positives, negatives, lambda);
        let gnorm_sq: f64 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        if gnorm_sq.sqrt() <= tol {
            break;
        }
        let mut step = 1.0;
        loop {
            let wt: Vec<f64> = w.iter().zip(&gw).map(|(wi, gi)| wi - step * gi).collect();
            let bt = b - step * gb;
            let ot = logistic_objective(&wt, bt, positives, negatives, lambda);
            if ot <= obj - 0.5 * step * gnorm_sq || step < 1e-12 {
                w = wt;
                b = bt;
                obj = ot;
                break;
            }
            step *= 0.5;
        }
    }
    Ok(LogisticModel { weights: w, bias: b })
}
