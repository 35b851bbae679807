//! Cutting-plane training on toy problems small enough to verify against
//! exhaustively enumerated constraint sets.

use std::f64::consts::PI;

use hierdet_core::features::{FilterBankProvider, HogParams};
use hierdet_core::geometry::{merge_cad_models, normalize_mesh};
use hierdet_core::image::{GrayImage, Rect};
use hierdet_core::inference::{assignment_loss, enumerate_labels, loss_augmented_from_bundle};
use hierdet_core::learning::{
    prepare_example, subcat_counts, train_ssvm, LossSpec, PreparedExample, TrainOptions,
};
use hierdet_core::model::{
    CadRegistry, ContinuousViewpoint, GroundTruth, HierarchyConfig, LabelAssignment, SampleCounts,
    SigmaParams, TrainingExample, WeightLayout,
};
use hierdet_core::potentials::{feature_map_from_bundle, total_energy, RenderCache, ZeroDetector};
use hierdet_core::rng::CounterRng;
use hierdet_core::sampling::DistanceReference;
use hierdet_core::synth::build_shape_library;

fn noise_image(seed: u64, w: u32, h: u32) -> GrayImage {
    let mut rng = CounterRng::new(seed, 5);
    GrayImage::from_data(w, h, (0..w * h).map(|_| rng.uniform() as f32).collect()).unwrap()
}

fn refs() -> DistanceReference {
    let mut r = DistanceReference::new();
    r.push(30.0, 30.0, 3.0).unwrap();
    r.push(40.0, 36.0, 3.6).unwrap();
    r
}

/// m=2 single-layer configuration (no CAD registry needed).
fn one_layer_config() -> HierarchyConfig {
    HierarchyConfig {
        azimuth_bins: 2,
        layers: 1,
        subcategories: vec![],
        sample_counts: SampleCounts { azimuth: 2, elevation: 1, distance: 1, occlusion: 1 },
        sigmas: SigmaParams { sigma_a: PI / 3.0, sigma_e: 0.1, mu_e: 0.3, sigma_r_frac: 0.15 },
        c_svm: 1.0,
        hog: HogParams::default(),
        app_dim: 32,
        registry: CadRegistry::default(),
    }
}

/// m=4, two sub-categories with one finer each, 2 particles per bin.
fn toy_config() -> HierarchyConfig {
    let library = build_shape_library(2, 1).unwrap();
    let mut registry = CadRegistry { finer: library.finer_models.clone(), merged: Vec::new() };
    for s in 0..2 {
        let merged = merge_cad_models(&library.finer_models[s..s + 1], 12, 0.5).unwrap();
        registry.merged.push(normalize_mesh(&merged).unwrap());
    }
    HierarchyConfig {
        azimuth_bins: 4,
        layers: 3,
        subcategories: library.subcategories,
        sample_counts: SampleCounts { azimuth: 2, elevation: 1, distance: 1, occlusion: 1 },
        sigmas: SigmaParams {
            sigma_a: (2.0 * PI / 4.0) / 3.0,
            sigma_e: 0.1,
            mu_e: 0.35,
            sigma_r_frac: 0.15,
        },
        c_svm: 1.0,
        hog: HogParams::default(),
        app_dim: 32,
        registry,
    }
}

fn positive(image_id: &str, region: Rect, v: usize, s: usize, f: usize) -> TrainingExample {
    TrainingExample {
        image_id: image_id.into(),
        region,
        truth: GroundTruth::Object {
            v_bin: v,
            viewpoint: ContinuousViewpoint {
                azimuth: 0.3,
                elevation: 0.3,
                distance: 3.0,
                occ: (0.0, 0.0),
            },
            subcat: s,
            finer: f,
        },
    }
}

fn negative(image_id: &str, region: Rect) -> TrainingExample {
    TrainingExample { image_id: image_id.into(), region, truth: GroundTruth::Background }
}

fn prepare_all(
    config: &HierarchyConfig,
    layout: &WeightLayout,
    examples: Vec<(TrainingExample, GrayImage)>,
) -> Vec<PreparedExample> {
    let provider = FilterBankProvider::new();
    let mut cache = RenderCache::default();
    examples
        .into_iter()
        .map(|(ex, img)| {
            prepare_example(ex, &img, config, layout, &refs(), &provider, &ZeroDetector, 9, &mut cache)
                .unwrap()
        })
        .collect()
}

#[test]
fn huge_epsilon_returns_after_one_iteration() {
    let config = one_layer_config();
    let layout = WeightLayout::new(&config);
    let prepared = prepare_all(
        &config,
        &layout,
        vec![
            (positive("a", Rect::new(4, 4, 32, 32), 0, 0, 0), noise_image(1, 48, 48)),
            (negative("b", Rect::new(8, 8, 32, 32)), noise_image(2, 48, 48)),
        ],
    );
    let outcome = train_ssvm(
        &config,
        &layout,
        &prepared,
        &LossSpec::default(),
        &TrainOptions { epsilon: 1e6, max_iterations: 50 },
    )
    .unwrap();
    assert!(outcome.state.converged);
    assert_eq!(outcome.state.iterations, 1);
    assert!(outcome.weights.values.iter().all(|&w| w == 0.0));
}

#[test]
fn zero_losses_terminate_immediately_with_zero_weights() {
    let config = one_layer_config();
    let layout = WeightLayout::new(&config);
    let prepared = prepare_all(
        &config,
        &layout,
        vec![
            (positive("a", Rect::new(4, 4, 32, 32), 1, 0, 0), noise_image(3, 48, 48)),
            (negative("b", Rect::new(0, 0, 24, 24)), noise_image(4, 48, 48)),
        ],
    );
    let outcome = train_ssvm(
        &config,
        &layout,
        &prepared,
        &LossSpec { delta1: 0.0, delta2_base: 0.0, delta3: 0.0 },
        &TrainOptions::default(),
    )
    .unwrap();
    assert!(outcome.state.converged);
    assert_eq!(outcome.state.iterations, 1);
    assert!(outcome.weights.values.iter().all(|&w| w == 0.0));
}

#[test]
fn single_positive_converges_fast_with_zero_slack() {
    let config = one_layer_config();
    let layout = WeightLayout::new(&config);
    let prepared = prepare_all(
        &config,
        &layout,
        vec![
            (positive("a", Rect::new(4, 4, 36, 36), 0, 0, 0), noise_image(11, 48, 48)),
            (negative("b", Rect::new(6, 6, 30, 30)), noise_image(12, 48, 48)),
        ],
    );
    let outcome = train_ssvm(
        &config,
        &layout,
        &prepared,
        &LossSpec::default(),
        &TrainOptions { epsilon: 1e-6, max_iterations: 50 },
    )
    .unwrap();
    assert!(outcome.state.converged, "did not converge");
    assert!(
        outcome.state.iterations <= 6,
        "took {} iterations",
        outcome.state.iterations
    );
    assert!(outcome.state.xi <= 1e-6, "slack {}", outcome.state.xi);
    for w in outcome.state.dual_trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-12, "dual decreased");
    }
    // The learned energies respect the margins: for the positive example the
    // true label beats every rival by its loss (within slack + tolerance).
    let pe = &prepared[0];
    let truth = pe.example.true_assignment(&config);
    let e_true =
        total_energy(&pe.bundle, &truth, &layout, &outcome.weights, &config).unwrap().total;
    let counts = subcat_counts(
        &prepared.iter().map(|p| p.example.clone()).collect::<Vec<_>>(),
        &config,
    );
    for (v, s, f) in enumerate_labels(&config) {
        let rival = LabelAssignment::foreground(&config, v, s, f);
        if rival == truth {
            continue;
        }
        let e = total_energy(&pe.bundle, &rival, &layout, &outcome.weights, &config)
            .unwrap()
            .total;
        let delta = assignment_loss(&pe.example.truth, &rival, &LossSpec::default(), &counts, &config);
        assert!(
            e_true - e >= delta - outcome.state.xi - 1e-6,
            "margin violated: {e_true} - {e} < {delta}"
        );
    }
}

#[test]
fn four_example_toy_satisfies_exhaustive_constraints() {
    let config = toy_config();
    let layout = WeightLayout::new(&config);
    let losses = LossSpec::default();
    let prepared = prepare_all(
        &config,
        &layout,
        vec![
            (positive("a", Rect::new(2, 2, 36, 36), 0, 0, 0), noise_image(21, 48, 48)),
            (positive("b", Rect::new(8, 4, 34, 38), 2, 1, 1), noise_image(22, 48, 48)),
            (negative("c", Rect::new(0, 0, 30, 30)), noise_image(23, 48, 48)),
            (negative("d", Rect::new(10, 10, 32, 32)), noise_image(24, 48, 48)),
        ],
    );
    let outcome = train_ssvm(
        &config,
        &layout,
        &prepared,
        &losses,
        &TrainOptions { epsilon: 1e-6, max_iterations: 300 },
    )
    .unwrap();
    assert!(outcome.state.converged);
    // Dual objective is non-decreasing across iterations.
    for w in outcome.state.dual_trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-10, "dual decreased: {} -> {}", w[0], w[1]);
    }
    // Exhaustively enumerate every constraint of the 1-slack program: each
    // example independently picks any candidate; the mean margin violation
    // must not exceed the final slack.
    let counts = outcome.subcat_counts.clone();
    let mut per_example: Vec<Vec<f64>> = Vec::new();
    for pe in &prepared {
        let truth = pe.example.true_assignment(&config);
        let e_true =
            total_energy(&pe.bundle, &truth, &layout, &outcome.weights, &config).unwrap().total;
        let mut rows = Vec::new();
        let mut candidates = vec![LabelAssignment::background()];
        candidates.extend(
            enumerate_labels(&config)
                .into_iter()
                .map(|(v, s, f)| LabelAssignment::foreground(&config, v, s, f)),
        );
        for cand in candidates {
            let e = total_energy(&pe.bundle, &cand, &layout, &outcome.weights, &config)
                .unwrap()
                .total;
            let delta = assignment_loss(&pe.example.truth, &cand, &losses, &counts, &config);
            // Violation contribution of this candidate for this example.
            rows.push(delta + e - e_true);
        }
        per_example.push(rows);
    }
    let n = per_example.len() as f64;
    let sizes: Vec<usize> = per_example.iter().map(|r| r.len()).collect();
    let mut worst = f64::NEG_INFINITY;
    for i0 in 0..sizes[0] {
        for i1 in 0..sizes[1] {
            for i2 in 0..sizes[2] {
                for i3 in 0..sizes[3] {
                    let violation = (per_example[0][i0]
                        + per_example[1][i1]
                        + per_example[2][i2]
                        + per_example[3][i3])
                        / n;
                    worst = worst.max(violation);
                }
            }
        }
    }
    assert!(
        worst <= outcome.state.xi + 1e-6,
        "worst exhaustive violation {worst} exceeds slack {}",
        outcome.state.xi
    );
    // 1-slack aggregation: the aggregated most-violating constraint equals
    // the mean of per-example most-violating margins at the final weights.
    let mut mean_violation = 0.0;
    let mut agg_gradient = vec![0.0f64; layout.total_len()];
    let mut agg_loss = 0.0;
    for pe in &prepared {
        let hit = loss_augmented_from_bundle(
            &config,
            &layout,
            &outcome.weights,
            &pe.example,
            &pe.bundle,
            &losses,
            &counts,
        )
        .unwrap();
        let truth = pe.example.true_assignment(&config);
        let e_true =
            total_energy(&pe.bundle, &truth, &layout, &outcome.weights, &config).unwrap().total;
        mean_violation += hit.loss + hit.energy - e_true;
        let psi_hat = feature_map_from_bundle(&pe.bundle, &hit.assignment, &layout, &config).unwrap();
        for ((g, t), h) in agg_gradient.iter_mut().zip(&pe.psi_true).zip(&psi_hat) {
            *g += t - h;
        }
        agg_loss += hit.loss;
    }
    mean_violation /= n;
    let agg_violation = agg_loss / n
        - agg_gradient
            .iter()
            .zip(&outcome.weights.values)
            .map(|(g, w)| g * w / n)
            .sum::<f64>();
    assert!(
        (mean_violation - agg_violation).abs() <= 1e-9,
        "{mean_violation} vs {agg_violation}"
    );
    // And the converged model violates by at most xi + epsilon.
    assert!(mean_violation <= outcome.state.xi + 1e-6 + 1e-9);
}
