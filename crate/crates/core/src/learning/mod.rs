//! Structured-SVM training: 1-slack margin-rescaling cutting plane over the
//! joint feature map, plus the standalone logistic trainer for the default
//! detector.
//!
//! Each iteration runs loss-augmented inference on every example, aggregates
//! the most violating constraint across the batch, and re-solves the
//! working-set QP; training stops when the new constraint is violated by at
//! most `ξ + ε`. Region features and the φ_cnt tables are computed once per
//! example before the loop (they do not depend on the weights).

mod logistic;
mod qp;

pub use logistic::{logistic_gradient, logistic_objective, train_detector, LogisticModel};
pub use qp::{solve_qp, Constraint, QpSolution, QP_GAP};

use alloc::vec;
use alloc::vec::Vec;

use crate::features::AppearanceProvider;
use crate::image::GrayImage;
use crate::inference::loss_augmented_from_bundle;
use crate::model::{GroundTruth, HierarchyConfig, TrainingExample, WeightLayout, WeightVector};
use crate::potentials::{
    compute_bundle, feature_map_from_bundle, DetectorScore, ParticleMode, PotentialBundle,
    RenderCache,
};
use crate::sampling::DistanceReference;
use crate::{Error, Result};

/// Per-layer task losses. The mid-layer loss is `delta2_base / K` with K the
/// training frequency of the sub-category.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub delta1: f64,
    pub delta2_base: f64,
    pub delta3: f64,
}

impl Default for LossSpec {
    fn default() -> Self {
        LossSpec { delta1: 0.1, delta2_base: 0.3, delta3: 0.1 }
    }
}

/// Cutting-plane stopping parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub epsilon: f64,
    pub max_iterations: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { epsilon: 1e-3, max_iterations: 200 }
    }
}

/// Working-set state after training.
#[derive(Debug, Clone)]
pub struct CuttingPlaneState {
    pub constraints: Vec<Constraint>,
    pub xi: f64,
    pub iterations: usize,
    /// Dual objective after each QP solve (non-decreasing).
    pub dual_trace: Vec<f64>,
    pub converged: bool,
}

/// A training example with its precomputed potentials and true feature map.
pub struct PreparedExample {
    pub example: TrainingExample,
    pub bundle: PotentialBundle,
    pub psi_true: Vec<f64>,
}

/// Precompute everything about one example that does not depend on the
/// weights.
#[allow(clippy::too_many_arguments)]
pub fn prepare_example(
    example: TrainingExample,
    image: &GrayImage,
    config: &HierarchyConfig,
    layout: &WeightLayout,
    refs: &DistanceReference,
    provider: &dyn AppearanceProvider,
    detector: &dyn DetectorScore,
    seed: u64,
    cache: &mut RenderCache,
) -> Result<PreparedExample> {
    let bundle = compute_bundle(
        image,
        &example.image_id,
        example.region,
        config,
        refs,
        provider,
        detector,
        seed,
        ParticleMode::Full,
        cache,
    )?;
    let truth = example.true_assignment(config);
    let psi_true = feature_map_from_bundle(&bundle, &truth, layout, config)?;
    Ok(PreparedExample { example, bundle, psi_true })
}

/// Training frequency of each sub-category among the positive examples.
pub fn subcat_counts(examples: &[TrainingExample], config: &HierarchyConfig) -> Vec<usize> {
    let mut counts = vec![0usize; config.subcat_count()];
    for ex in examples {
        if let GroundTruth::Object { subcat, .. } = ex.truth {
            if subcat < counts.len() {
                counts[subcat] += 1;
            }
        }
    }
    counts
}

/// Outcome of SSVM training.
pub struct TrainOutcome {
    pub weights: WeightVector,
    pub state: CuttingPlaneState,
    pub subcat_counts: Vec<usize>,
}

/// 1-slack cutting-plane training over prepared examples.
///
/// Requires at least one positive and one negative example. Returns the final
/// weights; when the iteration budget runs out first, the best weights so far
/// are returned with `converged = false`.
pub fn train_ssvm(
    config: &HierarchyConfig,
    layout: &WeightLayout,
    prepared: &[PreparedExample],
    losses: &LossSpec,
    options: &TrainOptions,
) -> Result<TrainOutcome> {
    if !prepared.iter().any(|p| p.example.is_positive()) {
        return Err(Error::InvalidTrainingSet("no positive examples".into()));
    }
    if !prepared.iter().any(|p| !p.example.is_positive()) {
        return Err(Error::InvalidTrainingSet("no negative examples".into()));
    }
    let examples: Vec<TrainingExample> = prepared.iter().map(|p| p.example.clone()).collect();
    let counts = subcat_counts(&examples, config);
    let dim = layout.total_len();
    let hash = config.structure_hash();
    let mut weights = WeightVector::zeros(layout, hash);
    let mut state = CuttingPlaneState {
        constraints: Vec::new(),
        xi: 0.0,
        iterations: 0,
        dual_trace: Vec::new(),
        converged: false,
    };
    let n = prepared.len() as f64;
    for iteration in 1..=options.max_iterations {
        state.iterations = iteration;
        let mut gradient = vec![0.0f64; dim];
        let mut loss_sum = 0.0f64;
        for pe in prepared {
            let hit = loss_augmented_from_bundle(
                config,
                layout,
                &weights,
                &pe.example,
                &pe.bundle,
                losses,
                &counts,
            )?;
            let psi_hat = feature_map_from_bundle(&pe.bundle, &hit.assignment, layout, config)?;
            for ((g, t), h) in gradient.iter_mut().zip(&pe.psi_true).zip(&psi_hat) {
                *g += t - h;
            }
            loss_sum += hit.loss;
        }
        for g in &mut gradient {
            *g /= n;
        }
        let loss = loss_sum / n;
        let violation = loss - weights.dot(&gradient);
        if violation <= state.xi + options.epsilon {
            state.converged = true;
            break;
        }
        state.constraints.push(Constraint { gradient, loss });
        let solution = solve_qp(&state.constraints, config.c_svm, dim);
        weights = WeightVector { config_hash: hash, values: solution.weights };
        state.xi = solution.xi;
        state.dual_trace.push(solution.dual_objective);
    }
    Ok(TrainOutcome { weights, state, subcat_counts: counts })
}
