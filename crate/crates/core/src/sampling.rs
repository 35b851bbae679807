//! Continuous-viewpoint particle generation.
//!
//! Particles are drawn per (region, azimuth bin): azimuths around the bin
//! center, elevations around the training mean, occlusion translations around
//! the region center, and distances resampled from training instances
//! weighted by box-size similarity. Per-axis draws are combined by Cartesian
//! product, and particle 0 always carries the anchored discrete hypothesis
//! (bin center, mean elevation, highest-weight distance, zero translation).

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};
#[allow(unused_imports)]
use num_traits::Float;

use crate::image::Rect;
use crate::model::{bin_center, circular_distance, wrap_azimuth, ContinuousViewpoint, HierarchyConfig, SigmaParams};
use crate::rng::{derive_stream, CounterRng};
use crate::{Error, Result};

/// (box width, box height, distance) records from training annotations.
#[derive(Debug, Clone, Default)]
pub struct DistanceReference {
    records: Vec<(f64, f64, f64)>,
}

impl DistanceReference {
    pub fn new() -> Self {
        DistanceReference { records: Vec::new() }
    }

    pub fn push(&mut self, width: f64, height: f64, distance: f64) -> Result<()> {
        if !(distance > 0.0) {
            return Err(Error::InvalidConfig("reference distance must be positive".into()));
        }
        self.records.push((width, height, distance));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[(f64, f64, f64)] {
        &self.records
    }

    /// Similarity weights against a test region:
    /// `w_i = exp(-(|Δw| + |Δh|) / L)` with `L = max(region w, region h)`.
    pub fn weights(&self, region: Rect) -> Vec<f64> {
        let l = region.w.max(region.h).max(1) as f64;
        self.records
            .iter()
            .map(|&(w, h, _)| {
                (-((w - region.w as f64).abs() + (h - region.h as f64).abs()) / l).exp()
            })
            .collect()
    }

    /// Distance of the highest-weight reference (first on ties).
    pub fn mode_distance(&self, region: Rect) -> Result<f64> {
        if self.records.is_empty() {
            return Err(Error::EmptyDistanceReferences);
        }
        let weights = self.weights(region);
        let mut best = 0;
        for i in 1..weights.len() {
            if weights[i] > weights[best] {
                best = i;
            }
        }
        Ok(self.records[best].2)
    }

    /// One weighted draw from the reference distances.
    pub fn sample(&self, region: Rect, rng: &mut CounterRng) -> Result<f64> {
        if self.records.is_empty() {
            return Err(Error::EmptyDistanceReferences);
        }
        let weights = self.weights(region);
        Ok(self.records[rng.pick_weighted(&weights)].2)
    }
}

/// Particle set for one (region, azimuth bin) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    pub particles: Vec<ContinuousViewpoint>,
    pub seed: u64,
    pub source_bin: usize,
}

impl ParticleSet {
    /// Restrict to the anchored particle (the discrete-model ablation).
    pub fn anchor_only(&self) -> ParticleSet {
        ParticleSet {
            particles: self.particles[..1].to_vec(),
            seed: self.seed,
            source_bin: self.source_bin,
        }
    }
}

/// Sampling defaults: σ_a is a third of an azimuth section, σ_e/μ_e are the
/// population std/mean of the training elevations, σ_r is 0.15·L per region.
pub fn default_sigmas(m: usize, elevations: &[f64]) -> Result<SigmaParams> {
    if elevations.is_empty() {
        return Err(Error::InvalidTrainingSet("no elevations for sigma estimation".into()));
    }
    let n = elevations.len() as f64;
    let mu = elevations.iter().sum::<f64>() / n;
    let var = elevations.iter().map(|e| (e - mu) * (e - mu)).sum::<f64>() / n;
    Ok(SigmaParams {
        sigma_a: (2.0 * PI / m as f64) / 3.0,
        sigma_e: var.sqrt(),
        mu_e: mu,
        sigma_r_frac: 0.15,
    })
}

fn truncated_wrapped_normal(rng: &mut CounterRng, center: f64, sigma: f64) -> f64 {
    // Reject draws further than 3σ from the center (circularly) so wrapping
    // near bin 0 never produces a particle outside its bin's neighborhood.
    for _ in 0..1000 {
        let a = wrap_azimuth(rng.normal(center, sigma));
        if circular_distance(a, center) <= 3.0 * sigma {
            return a;
        }
    }
    wrap_azimuth(center)
}

/// Generate the particle set for an azimuth bin, a region, and a seed.
///
/// Deterministic in all inputs; the stream is derived from (bin, region) so
/// different regions and bins sample independently under one seed.
pub fn sample_particles(
    bin: usize,
    region: Rect,
    refs: &DistanceReference,
    config: &HierarchyConfig,
    seed: u64,
) -> Result<ParticleSet> {
    if bin >= config.azimuth_bins {
        return Err(Error::InvalidConfig("azimuth bin out of range".into()));
    }
    if refs.is_empty() {
        return Err(Error::EmptyDistanceReferences);
    }
    let counts = config.sample_counts;
    let sig: &SigmaParams = &config.sigmas;
    let stream = derive_stream(&[
        bin as u64,
        region.x as u64,
        region.y as u64,
        region.w as u64,
        region.h as u64,
    ]);
    let mut rng = CounterRng::new(seed, stream);
    let center = bin_center(bin, config.azimuth_bins);

    let mut azimuths = Vec::with_capacity(counts.azimuth);
    azimuths.push(wrap_azimuth(center));
    for _ in 1..counts.azimuth {
        azimuths.push(truncated_wrapped_normal(&mut rng, center, sig.sigma_a));
    }

    let clamp_e = |e: f64| e.max(0.0).min(FRAC_PI_2);
    let mut elevations = Vec::with_capacity(counts.elevation);
    elevations.push(clamp_e(sig.mu_e));
    for _ in 1..counts.elevation {
        elevations.push(clamp_e(rng.normal(sig.mu_e, sig.sigma_e)));
    }

    let mut distances = Vec::with_capacity(counts.distance);
    distances.push(refs.mode_distance(region)?);
    for _ in 1..counts.distance {
        distances.push(refs.sample(region, &mut rng)?);
    }

    let (srx, sry) = sig.sigma_r(region);
    let mut occs = Vec::with_capacity(counts.occlusion);
    occs.push((0.0, 0.0));
    for _ in 1..counts.occlusion {
        occs.push((rng.normal(0.0, srx), rng.normal(0.0, sry)));
    }

    let mut particles = Vec::with_capacity(counts.total());
    for &a in &azimuths {
        for &e in &elevations {
            for &d in &distances {
                for &occ in &occs {
                    particles.push(ContinuousViewpoint { azimuth: a, elevation: e, distance: d, occ });
                }
            }
        }
    }
    Ok(ParticleSet { particles, seed, source_bin: bin })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> HierarchyConfig {
        let mut c = crate::model::tests::tiny_config(8, 3);
        c.sigmas = default_sigmas(8, &[0.3, 0.4, 0.5]).unwrap();
        c
    }

    fn refs() -> DistanceReference {
        let mut r = DistanceReference::new();
        r.push(100.0, 100.0, 5.0).unwrap();
        r
    }

    #[test]
    fn default_sigma_values() {
        let s = default_sigmas(8, &[0.2, 0.2, 0.2]).unwrap();
        assert!((s.sigma_a - PI / 12.0).abs() < 1e-12);
        assert!(s.sigma_e.abs() < 1e-12);
        assert!((s.mu_e - 0.2).abs() < 1e-12);
        let (rx, ry) = s.sigma_r(Rect::new(0, 0, 200, 100));
        assert!((rx - 30.0).abs() < 1e-12);
        assert!((ry - 30.0).abs() < 1e-12);
    }

    #[test]
    fn zero_sigmas_collapse_to_anchor() {
        let mut c = config();
        c.sigmas = SigmaParams { sigma_a: 0.0, sigma_e: 0.0, mu_e: 0.35, sigma_r_frac: 0.0 };
        let set = sample_particles(2, Rect::new(10, 10, 100, 100), &refs(), &c, 7).unwrap();
        assert_eq!(set.particles.len(), 60);
        let anchor = set.particles[0];
        for p in &set.particles {
            assert_eq!(*p, anchor);
        }
        assert!((anchor.azimuth - bin_center(2, 8)).abs() < 1e-12);
        assert!((anchor.elevation - 0.35).abs() < 1e-12);
        assert_eq!(anchor.distance, 5.0);
        assert_eq!(anchor.occ, (0.0, 0.0));
    }

    #[test]
    fn single_reference_pins_distances() {
        let set = sample_particles(0, Rect::new(0, 0, 64, 64), &refs(), &config(), 3).unwrap();
        assert!(set.particles.iter().all(|p| p.distance == 5.0));
    }

    #[test]
    fn deterministic_and_anchored() {
        let c = config();
        let region = Rect::new(5, 8, 120, 90);
        let a = sample_particles(3, region, &refs(), &c, 11).unwrap();
        let b = sample_particles(3, region, &refs(), &c, 11).unwrap();
        assert_eq!(a, b);
        let other_seed = sample_particles(3, region, &refs(), &c, 12).unwrap();
        assert_ne!(a, other_seed);
        // Anchor invariants.
        assert!((a.particles[0].azimuth - bin_center(3, 8)).abs() < 1e-12);
        assert_eq!(a.particles[0].occ, (0.0, 0.0));
        assert_eq!(a.anchor_only().particles.len(), 1);
    }

    #[test]
    fn azimuths_wrapped_and_near_center() {
        let c = config();
        // Bin 0 straddles azimuth 0, exercising the wrap.
        let set = sample_particles(0, Rect::new(0, 0, 80, 60), &refs(), &c, 99).unwrap();
        for p in &set.particles {
            assert!((0.0..2.0 * PI).contains(&p.azimuth));
            assert!(circular_distance(p.azimuth, 0.0) <= 3.0 * c.sigmas.sigma_a + 1e-12);
            assert!((0.0..=FRAC_PI_2).contains(&p.elevation));
        }
    }

    #[test]
    fn empty_references_error() {
        let r = DistanceReference::new();
        assert!(matches!(
            sample_particles(0, Rect::new(0, 0, 10, 10), &r, &config(), 0),
            Err(Error::EmptyDistanceReferences)
        ));
    }

    #[test]
    fn weighted_distance_frequencies_match_ratio() {
        // Two references; the test region matches the first exactly, so the
        // analytic weight ratio is exp(0) : exp(-(|Δw|+|Δh|)/L).
        let mut r = DistanceReference::new();
        r.push(100.0, 80.0, 3.0).unwrap();
        r.push(140.0, 60.0, 7.0).unwrap();
        let region = Rect::new(0, 0, 100, 80);
        let w2 = (-(40.0 + 20.0) / 100.0f64).exp();
        let p_first = 1.0 / (1.0 + w2);
        let n = 10_000;
        let mut rng = CounterRng::new(42, 0);
        let mut hits = 0;
        for _ in 0..n {
            if r.sample(region, &mut rng).unwrap() == 3.0 {
                hits += 1;
            }
        }
        let freq = hits as f64 / n as f64;
        let sigma = (p_first * (1.0 - p_first) / n as f64).sqrt();
        assert!(
            (freq - p_first).abs() <= 3.0 * sigma,
            "freq {freq} expected {p_first} (3sigma {})",
            3.0 * sigma
        );
    }
}
