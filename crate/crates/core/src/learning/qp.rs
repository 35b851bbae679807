//! Exact solver for the 1-slack working-set QP.
//!
//! Primal: `min ½‖w‖² + C·ξ  s.t.  ⟨w, g_j⟩ ≥ L_j − ξ  ∀j,  ξ ≥ 0`.
//! The dual is a box-constrained QP over one multiplier per constraint with
//! `Σα_j ≤ C`; coordinate ascent on the dual converges to a prescribed
//! duality gap. `w = Σ α_j g_j` and `ξ = max(0, max_j (L_j − ⟨w, g_j⟩))`.

use alloc::vec;
use alloc::vec::Vec;

/// One aggregated cutting-plane constraint `⟨w, gradient⟩ ≥ loss − ξ`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub gradient: Vec<f64>,
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub weights: Vec<f64>,
    pub xi: f64,
    pub alpha: Vec<f64>,
    pub dual_objective: f64,
    pub duality_gap: f64,
    pub sweeps: usize,
}

/// Target duality gap of the solver.
pub const QP_GAP: f64 = 1e-8;

const MAX_SWEEPS: usize = 100_000;

pub fn solve_qp(constraints: &[Constraint], c: f64, dim: usize) -> QpSolution {
    let n = constraints.len();
    if n == 0 {
        return QpSolution {
            weights: vec![0.0; dim],
            xi: 0.0,
            alpha: Vec::new(),
            dual_objective: 0.0,
            duality_gap: 0.0,
            sweeps: 0,
        };
    }
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let k = dot(&constraints[i].gradient, &constraints[j].gradient);
            gram[i * n + j] = k;
            gram[j * n + i] = k;
        }
    }
    let mut alpha = vec![0.0f64; n];
    // q_j = Σ_k α_k K_jk = ⟨w, g_j⟩, maintained incrementally.
    let mut q = vec![0.0f64; n];
    let mut total_alpha = 0.0f64;
    let mut sweeps = 0usize;
    let mut gap;
    let mut dual;
    loop {
        // Single-coordinate steps move mass in and out of the simplex.
        for j in 0..n {
            let grad = constraints[j].loss - q[j];
            let kjj = gram[j * n + j];
            let alpha_max = c - (total_alpha - alpha[j]);
            let target = if kjj > 0.0 {
                alpha[j] + grad / kjj
            } else if grad > 0.0 {
                alpha_max
            } else {
                0.0
            };
            let new = target.max(0.0).min(alpha_max);
            let delta = new - alpha[j];
            if delta != 0.0 {
                alpha[j] = new;
                total_alpha += delta;
                for k in 0..n {
                    q[k] += delta * gram[j * n + k];
                }
            }
        }
        // Pairwise steps redistribute mass when the budget binds (a single
        // coordinate cannot move once Σα = C).
        for i in 0..n {
            for j in (i + 1)..n {
                let gi = constraints[i].loss - q[i];
                let gj = constraints[j].loss - q[j];
                let eta = gram[i * n + i] + gram[j * n + j] - 2.0 * gram[i * n + j];
                // α_i += δ, α_j -= δ with δ ∈ [-α_i, α_j].
                let delta = if eta > 0.0 {
                    ((gi - gj) / eta).max(-alpha[i]).min(alpha[j])
                } else if gi > gj {
                    alpha[j]
                } else if gi < gj {
                    -alpha[i]
                } else {
                    0.0
                };
                if delta != 0.0 {
                    alpha[i] += delta;
                    alpha[j] -= delta;
                    for k in 0..n {
                        q[k] += delta * (gram[i * n + k] - gram[j * n + k]);
                    }
                }
            }
        }
        sweeps += 1;
        let half_wnorm_sq: f64 = 0.5 * alpha.iter().zip(&q).map(|(a, qv)| a * qv).sum::<f64>();
        dual = alpha
            .iter()
            .zip(constraints)
            .map(|(a, con)| a * con.loss)
            .sum::<f64>()
            - half_wnorm_sq;
        let xi = constraints
            .iter()
            .zip(&q)
            .map(|(con, qv)| con.loss - qv)
            .fold(0.0f64, f64::max);
        let primal = half_wnorm_sq + c * xi;
        gap = primal - dual;
        if gap <= QP_GAP || sweeps >= MAX_SWEEPS {
            break;
        }
    }
    let mut weights = vec![0.0; dim];
    for (a, con) in alpha.iter().zip(constraints) {
        if *a != 0.0 {
            for (w, g) in weights.iter_mut().zip(&con.gradient) {
                *w += a * g;
            }
        }
    }
    let xi = constraints
        .iter()
        .map(|con| con.loss - dot(&weights, &con.gradient))
        .fold(0.0f64, f64::max);
    QpSolution { weights, xi, alpha, dual_objective: dual, duality_gap: gap, sweeps }
}
