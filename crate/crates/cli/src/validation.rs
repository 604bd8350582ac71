//! The statistical validation suite: every distributional claim the
//! sampler and transforms make, checked against the numeric oracle or an
//! exact expectation, and emitted as a machine-readable JSON report.
//!
//! Every check records `empirical`, `oracle`, `tolerance`, and
//! `pass = |empirical - oracle| <= tolerance`. One-sided bounds are
//! encoded in the same shape: a p-value check uses the midpoint of the
//! accepted interval as its oracle value, and "excess" checks report how
//! far the worst case pokes above its statistical bound (so the oracle
//! value is 0 and any excess fails).

use std::collections::HashSet;
use std::path::Path;

use erasekit_core::stats::{
    acceptance_probability_oracle, area_ratio_moments, binomial_tolerance, chi_square_uniform,
    conditional_draw_grid, conditional_draw_histogram, estimate_acceptance_rate,
    estimate_gate_rate, pixel_occlusion_map, OcclusionMap,
};
use erasekit_core::transforms::{
    apply_fill, image_dropout, occlude_with_trace, random_noise, DropoutParams, NoiseParams,
    OcclusionLevel, OCCLUDER_ASPECT_MAX, OCCLUDER_ASPECT_MIN,
};
use erasekit_core::{
    derive_seed, Channels, Color, EraseParams, FillMode, Image, RngStream,
};
use serde::{Deserialize, Serialize};

use crate::codec::write_atomic;
use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Multiplier applied to every tolerance; 1.0 is the standard suite,
    /// 0.0 turns every check with a nonzero delta into a failure.
    pub tolerance_scale: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0x5EED_CAFE,
            tolerance_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub empirical: f64,
    pub oracle: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ValidationReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("report serialization");
        bytes.push(b'\n');
        bytes
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, &self.to_json())?;
        Ok(())
    }
}

fn check(name: &str, empirical: f64, oracle: f64, tolerance: f64, scale: f64) -> CheckResult {
    let tolerance = tolerance * scale;
    CheckResult {
        name: name.to_owned(),
        empirical,
        oracle,
        tolerance,
        pass: (empirical - oracle).abs() <= tolerance,
    }
}

/// Per-pixel symmetry excess of an occlusion map against its horizontal
/// (`vertical = false`) or vertical mirror: the worst
/// `max(0, |delta| - 5 sigma)` over all pixel pairs, with sigma the pooled
/// binomial deviation of the pair. Zero means every pixel is within its
/// statistical bound.
pub fn heatmap_symmetry_excess(map: &OcclusionMap, vertical: bool) -> f64 {
    let mut worst: f64 = 0.0;
    for y in 0..map.height {
        for x in 0..map.width {
            let (mx, my) = if vertical {
                (x, map.height - 1 - y)
            } else {
                (map.width - 1 - x, y)
            };
            let a = map.count(x, y) as f64;
            let b = map.count(mx, my) as f64;
            let pooled = (a + b) / (2.0 * map.trials as f64);
            let sigma = (2.0 * map.trials as f64 * pooled * (1.0 - pooled)).sqrt();
            worst = worst.max((a - b).abs() - 5.0 * sigma);
        }
    }
    worst.max(0.0)
}

/// Worst per-cell excess of the empirical accepted-draw distribution over
/// its 5-sigma binomial bound against the oracle cell masses, on a
/// `bins x bins` grid at `samples` accepted draws.
pub fn conditional_grid_excess(
    width: u32,
    height: u32,
    params: &EraseParams,
    samples: u64,
    seed: u64,
    bins: usize,
) -> f64 {
    let oracle = conditional_draw_grid(width, height, params, bins, bins);
    let empirical = conditional_draw_histogram(width, height, params, samples, seed, bins, bins);
    let mut worst: f64 = 0.0;
    for (&count, &mass) in empirical.iter().zip(oracle.iter()) {
        let expected = samples as f64 * mass;
        let bound = binomial_tolerance(samples, mass);
        worst = worst.max((count as f64 - expected).abs() - bound);
    }
    worst.max(0.0)
}

/// Raw random-fill samples for uniformity testing: one full-frame
/// random-value fill over a `side x side` grayscale image.
fn random_fill_samples(side: u32, seed: u64) -> Vec<u8> {
    let img = Image::new(side, side, Channels::Gray, Color::Gray(0)).expect("image");
    let mut rng = RngStream::new(seed);
    let filled = apply_fill(&img, img.full_region(), FillMode::RandomPerPixel, &mut rng)
        .expect("full-frame fill");
    filled.into_pixels()
}

const LAMBDA_GRID: [f64; 3] = [0.01, 0.1, 0.4];

/// Runs the full validation suite.
pub fn run_validation(config: &SuiteConfig) -> ValidationReport {
    let scale = config.tolerance_scale;
    let seed = config.seed;
    let mut checks = Vec::new();

    // gate behavior: exact at the extremes, binomial near one half
    checks.push(check(
        "gate_rate_p0",
        estimate_gate_rate(0.0, 10_000, derive_seed(seed, 1)),
        0.0,
        0.0,
        scale,
    ));
    checks.push(check(
        "gate_rate_p1",
        estimate_gate_rate(1.0, 10_000, derive_seed(seed, 2)),
        1.0,
        0.0,
        scale,
    ));
    checks.push(check(
        "gate_rate_p50",
        estimate_gate_rate(0.5, 200_000, derive_seed(seed, 3)),
        0.5,
        0.005,
        scale,
    ));

    // acceptance probability: analytic pin, then oracle vs Monte Carlo
    let pinned = EraseParams::new(1.0, 0.25, 0.25, 1.0, 1.0, 1).expect("params");
    checks.push(check(
        "acceptance_oracle_pin_quarter_area",
        acceptance_probability_oracle(32, 32, &pinned),
        289.0 / 1024.0,
        1e-9,
        scale,
    ));
    checks.push(check(
        "sampler_acceptance_pin_empirical",
        estimate_acceptance_rate(32, 32, &pinned, 1_000_000, derive_seed(seed, 4)),
        289.0 / 1024.0,
        0.005,
        scale,
    ));
    let classification = EraseParams::classification();
    let detection = EraseParams::detection();
    let q_32_cls = acceptance_probability_oracle(32, 32, &classification);
    checks.push(check(
        "acceptance_oracle_vs_mc_32x32_classification",
        estimate_acceptance_rate(32, 32, &classification, 1_000_000, derive_seed(seed, 5)),
        q_32_cls,
        0.005,
        scale,
    ));
    checks.push(check(
        "acceptance_oracle_vs_mc_256x128_detection",
        estimate_acceptance_rate(256, 128, &detection, 1_000_000, derive_seed(seed, 6)),
        acceptance_probability_oracle(256, 128, &detection),
        0.005,
        scale,
    ));

    // rejection-loop exhaustion is vanishing for the standard preset
    checks.push(check(
        "nofit_rate_classification_32x32",
        (1.0 - q_32_cls).powi(classification.max_attempts as i32),
        0.0,
        1e-6,
        scale,
    ));

    // random-fill law: 256-bin uniformity at alpha = 0.001 plus the mean
    let samples = random_fill_samples(1024, derive_seed(seed, 7));
    let mut bins = [0u64; 256];
    for &s in &samples {
        bins[s as usize] += 1;
    }
    let (_, p_value) = chi_square_uniform(&bins);
    let alpha = 0.001;
    checks.push(check(
        "fill_random_chi_square_p",
        p_value,
        (1.0 + alpha) / 2.0,
        (1.0 - alpha) / 2.0,
        scale,
    ));
    let mean = samples.iter().map(|&v| v as f64).sum::<f64>() / samples.len() as f64;
    checks.push(check("fill_random_mean", mean, 127.5, 0.5, scale));

    // image-layer dropout and random-noise baselines
    for (i, &lambda) in LAMBDA_GRID.iter().enumerate() {
        let img = Image::new(1000, 1000, Channels::Gray, Color::Gray(255)).expect("image");
        let mut rng = RngStream::new(derive_seed(seed, 8 + i as u64));
        let dropped = image_dropout(&img, &DropoutParams::new(lambda).expect("params"), &mut rng);
        let fraction =
            dropped.pixels().iter().filter(|&&v| v == 0).count() as f64 / 1_000_000.0;
        checks.push(check(
            &format!("dropout_fraction_lambda_{lambda}"),
            fraction,
            lambda,
            0.01,
            scale,
        ));
    }
    for (i, &lambda) in LAMBDA_GRID.iter().enumerate() {
        let img = Image::new(1000, 1000, Channels::Rgb, Color::Rgb([7, 7, 7])).expect("image");
        let mut rng = RngStream::new(derive_seed(seed, 11 + i as u64));
        let noised = random_noise(&img, &NoiseParams::new(lambda).expect("params"), &mut rng);
        let modified = noised
            .pixels()
            .chunks_exact(3)
            .filter(|px| *px != [7, 7, 7])
            .count() as f64
            / 1_000_000.0;
        checks.push(check(
            &format!("noise_fraction_lambda_{lambda}"),
            modified,
            lambda,
            0.01,
            scale,
        ));
    }

    // spatial behavior: conservation and mirror symmetry of the occlusion
    // frequency map on an odd-sided frame
    let map = pixel_occlusion_map(33, 33, &classification, 100_000, derive_seed(seed, 14));
    let replay_total: u64 = {
        let mut total = 0u64;
        for i in 0..map.trials {
            let mut rng = RngStream::new(derive_seed(derive_seed(seed, 14), i));
            if !erasekit_core::sampler::gate(&mut rng, classification.p) {
                continue;
            }
            for _ in 0..classification.max_attempts {
                if let Some(r) =
                    erasekit_core::sampler::sample_attempt(&mut rng, 33, 33, &classification)
                        .region
                {
                    total += r.area();
                    break;
                }
            }
        }
        total
    };
    checks.push(check(
        "occlusion_map_conservation",
        map.total_coverage() as f64 - replay_total as f64,
        0.0,
        0.0,
        scale,
    ));
    checks.push(check(
        "heatmap_symmetry_horizontal_excess",
        heatmap_symmetry_excess(&map, false),
        0.0,
        0.0,
        scale,
    ));
    checks.push(check(
        "heatmap_symmetry_vertical_excess",
        heatmap_symmetry_excess(&map, true),
        0.0,
        0.0,
        scale,
    ));

    // accepted draws follow the oracle's conditional distribution
    checks.push(check(
        "conditional_grid_excess",
        conditional_grid_excess(32, 32, &classification, 100_000, derive_seed(seed, 15), 10),
        0.0,
        0.0,
        scale,
    ));

    // realized erased-area fraction tracks the oracle's conditional mean
    let moments = area_ratio_moments(32, 32, &classification, 100_000, derive_seed(seed, 16));
    checks.push(check(
        "realized_area_mean_vs_oracle",
        moments.mean,
        erasekit_core::stats::conditional_realized_area_mean(32, 32, &classification),
        0.01,
        scale,
    ));

    // occluder accuracy across the level sweep
    let mut worst_err: f64 = 0.0;
    let mut aspect_violations = 0u64;
    for (li, &level) in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6].iter().enumerate() {
        let img = Image::new(32, 32, Channels::Gray, Color::Gray(0)).expect("image");
        let target = level * 1024.0;
        for t in 0..2_000u64 {
            let mut rng =
                RngStream::new(derive_seed(derive_seed(seed, 17 + li as u64), t));
            let (_, trace) =
                occlude_with_trace(&img, OcclusionLevel::new(level).expect("level"), &mut rng);
            let trace = trace.expect("nonzero level");
            worst_err = worst_err.max((trace.region.area() as f64 - target).abs() / target);
            let aspect = trace.region.h as f64 / trace.region.w as f64;
            if !(OCCLUDER_ASPECT_MIN..=OCCLUDER_ASPECT_MAX).contains(&aspect) {
                aspect_violations += 1;
            }
        }
    }
    checks.push(check(
        "occluder_area_worst_rel_err",
        worst_err,
        0.0,
        0.02,
        scale,
    ));
    checks.push(check(
        "occluder_aspect_violations",
        aspect_violations as f64,
        0.0,
        0.0,
        scale,
    ));

    // per-item seed derivation stays collision-free at corpus scale
    let mut seen = HashSet::with_capacity(1_000_000);
    let mut collisions = 0u64;
    for i in 0..1_000_000u64 {
        if !seen.insert(derive_seed(seed, i)) {
            collisions += 1;
        }
    }
    checks.push(check(
        "derive_seed_collisions_1e6",
        collisions as f64,
        0.0,
        0.0,
        scale,
    ));

    ValidationReport {
        seed,
        checks,
    }
}
