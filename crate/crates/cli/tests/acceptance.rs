//! Acceptance suite: the distributional, structural, and end-to-end
//! guarantees the toolkit ships with, one test per criterion, each
//! printing a PASS/FAIL line (visible with `--nocapture`).
//!
//! Run with:
//!
//! ```text
//! cargo test -p erasekit --test acceptance -- --nocapture
//! ```

use std::collections::HashSet;
use std::panic::UnwindSafe;
use std::path::Path;
use std::process::Command;

use erasekit::codec::{self, idx, ImageFormat};
use erasekit::validation::{conditional_grid_excess, heatmap_symmetry_excess};
use erasekit_core::detection::{erase_object_aware_traced, AnnotatedImage, BBox};
use erasekit_core::sampler::{sample_region, SampleOutcome};
use erasekit_core::stats::{
    acceptance_probability_oracle, chi_square_uniform,
    estimate_acceptance_rate, pixel_occlusion_map,
};
use erasekit_core::transforms::{
    apply_fill, erase_with_trace, image_dropout, occlude_with_trace, random_noise, DropoutParams,
    NoiseParams, OcclusionLevel, OCCLUDER_ASPECT_MAX, OCCLUDER_ASPECT_MIN,
};
use erasekit_core::{
    derive_seed, Channels, Color, EraseParams, FillMode, Image, Region, RngStream,
};
use rayon::prelude::*;

fn criterion(number: u32, description: &str, body: impl FnOnce() + UnwindSafe) {
    match std::panic::catch_unwind(body) {
        Ok(()) => println!("PASS criterion {number:02}: {description}"),
        Err(cause) => {
            println!("FAIL criterion {number:02}: {description}");
            std::panic::resume_unwind(cause);
        }
    }
}

fn textured(width: u32, height: u32, channels: Channels, seed: u64) -> Image {
    let mut rng = RngStream::new(seed);
    let len = width as usize * height as usize * channels.count();
    let pixels = (0..len).map(|_| rng.next_int_below(256) as u8).collect();
    Image::from_pixels(width, height, channels, pixels).unwrap()
}

#[test]
fn criterion_01_gate_probability() {
    criterion(1, "erased fraction 0.5 +- 0.005 over 200k streams", || {
        let params = EraseParams::classification();
        let base = Image::new(32, 32, Channels::Gray, Color::Gray(200)).unwrap();
        let erased: u64 = (0..200_000u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = RngStream::new(derive_seed(0xACCE_0001, i));
                let out = erasekit_core::transforms::random_erase(
                    &base,
                    &params,
                    FillMode::Zero,
                    &mut rng,
                )
                .unwrap();
                u64::from(out != base)
            })
            .sum();
        let fraction = erased as f64 / 200_000.0;
        assert!(
            (fraction - 0.5).abs() <= 0.005,
            "erased fraction {fraction}"
        );
    });
}

#[test]
fn criterion_02_oracle_equivalence() {
    criterion(2, "oracle q matches 1e7-trial Monte Carlo within 0.005", || {
        let sizes: [(u32, u32); 4] = [(32, 32), (28, 28), (256, 128), (600, 400)];
        let presets = [EraseParams::classification(), EraseParams::detection()];
        let cases: Vec<(u32, u32, EraseParams)> = sizes
            .iter()
            .flat_map(|&(w, h)| presets.iter().map(move |p| (w, h, *p)))
            .collect();
        cases.par_iter().for_each(|&(w, h, params)| {
            let oracle = acceptance_probability_oracle(w, h, &params);
            let mc = estimate_acceptance_rate(w, h, &params, 10_000_000, 0xACCE_0002);
            assert!(
                (oracle - mc).abs() <= 0.005,
                "{w}x{h}: oracle {oracle} vs mc {mc}"
            );
        });
    });
}

#[test]
fn criterion_03_analytic_pin() {
    criterion(3, "pinned quarter-area square gives q = 289/1024", || {
        let params = EraseParams::new(1.0, 0.25, 0.25, 1.0, 1.0, 1).unwrap();
        let oracle = acceptance_probability_oracle(32, 32, &params);
        assert!(
            (oracle - 289.0 / 1024.0).abs() < 1e-12,
            "oracle {oracle} is not exactly 289/1024"
        );
        let mc = estimate_acceptance_rate(32, 32, &params, 1_000_000, 0xACCE_0003);
        assert!(
            (mc - 289.0 / 1024.0).abs() <= 0.005,
            "empirical acceptance {mc}"
        );
    });
}

#[test]
fn criterion_04_fill_laws() {
    criterion(4, "mean/zero/max fills exact; random fill uniform", || {
        // constant fills are exact on every erased pixel
        let img = textured(32, 32, Channels::Rgb, 41);
        let params = EraseParams {
            p: 1.0,
            ..EraseParams::classification()
        };
        for seed in 0..1_000u64 {
            let mut rng = RngStream::new(seed);
            let (out, trace) = erase_with_trace(
                &img,
                &params,
                FillMode::default_mean(Channels::Rgb),
                &mut rng,
            )
            .unwrap();
            if let Some(region) = trace.erased_region() {
                for y in region.y..region.y + region.h {
                    for x in region.x..region.x + region.w {
                        assert_eq!(
                            [out.sample(x, y, 0), out.sample(x, y, 1), out.sample(x, y, 2)],
                            [125, 122, 114]
                        );
                    }
                }
            }
        }
        let region = Region::new(3, 5, 20, 17);
        let mut rng = RngStream::new(7);
        let zero = apply_fill(&img, region, FillMode::Zero, &mut rng).unwrap();
        let max = apply_fill(&img, region, FillMode::Max, &mut rng).unwrap();
        for y in region.y..region.y + region.h {
            for x in region.x..region.x + region.w {
                for c in 0..3 {
                    assert_eq!(zero.sample(x, y, c), 0);
                    assert_eq!(max.sample(x, y, c), 255);
                }
            }
        }

        // random fill: 256-bin chi-square at alpha = 0.001 over >= 1e6
        // samples, and the sample mean sits at 127.5 +- 0.5
        let canvas = Image::new(1024, 1024, Channels::Gray, Color::Gray(0)).unwrap();
        let mut rng = RngStream::new(0xACCE_0004);
        let filled = apply_fill(
            &canvas,
            canvas.full_region(),
            FillMode::RandomPerPixel,
            &mut rng,
        )
        .unwrap();
        let mut bins = [0u64; 256];
        let mut sum = 0u64;
        for &v in filled.pixels() {
            bins[v as usize] += 1;
            sum += v as u64;
        }
        let (stat, p) = chi_square_uniform(&bins);
        assert!(p >= 0.001, "chi-square statistic {stat}, p {p}");
        let mean = sum as f64 / filled.pixels().len() as f64;
        assert!((mean - 127.5).abs() <= 0.5, "sample mean {mean}");
    });
}

#[test]
fn criterion_05_conditional_distribution() {
    criterion(5, "accepted (s, r) draws match the oracle on a 10x10 grid", || {
        let excess = conditional_grid_excess(
            32,
            32,
            &EraseParams::classification(),
            1_000_000,
            0xACCE_0005,
            10,
        );
        assert_eq!(excess, 0.0, "worst cell excess {excess}");
    });
}

#[test]
fn criterion_06_heatmap_symmetry() {
    criterion(6, "33x33 occlusion map is mirror-symmetric within 5 sigma", || {
        let map = pixel_occlusion_map(
            33,
            33,
            &EraseParams::classification(),
            100_000,
            0xACCE_0006,
        );
        let horizontal = heatmap_symmetry_excess(&map, false);
        let vertical = heatmap_symmetry_excess(&map, true);
        assert_eq!(horizontal, 0.0, "horizontal excess {horizontal}");
        assert_eq!(vertical, 0.0, "vertical excess {vertical}");
    });
}

#[test]
fn criterion_07_object_containment() {
    criterion(7, "10k fuzzed annotated images: diffs stay inside gated boxes", || {
        let params = EraseParams {
            p: 0.6,
            ..EraseParams::detection()
        };
        (0..10_000u64).into_par_iter().for_each(|case| {
            let mut rng = RngStream::new(derive_seed(0xACCE_0007, case));
            let width = 8 + rng.next_int_below(40);
            let height = 8 + rng.next_int_below(40);
            let img = {
                let len = width as usize * height as usize;
                let pixels = (0..len).map(|_| rng.next_int_below(200) as u8).collect();
                Image::from_pixels(width, height, Channels::Gray, pixels).unwrap()
            };
            let boxes = (0..rng.next_int_below(5))
                .map(|i| {
                    let w = 1 + rng.next_int_below(width);
                    let h = 1 + rng.next_int_below(height);
                    let x = rng.next_int_below(width - w + 1);
                    let y = rng.next_int_below(height - h + 1);
                    BBox {
                        region: Region::new(x, y, w, h),
                        label: format!("object-{i}"),
                    }
                })
                .collect();
            let ann = AnnotatedImage::new(img, boxes).unwrap();
            let (out, trace) =
                erase_object_aware_traced(&ann, &params, FillMode::Max, &mut rng).unwrap();
            assert_eq!(out.boxes, ann.boxes, "annotations must pass through");
            for y in 0..height {
                for x in 0..width {
                    if out.image.sample(x, y, 0) != ann.image.sample(x, y, 0) {
                        assert!(
                            trace
                                .object_stage
                                .iter()
                                .any(|o| o.gated && ann.boxes[o.box_index].region.contains(x, y)),
                            "case {case}: pixel ({x},{y}) outside every gated box"
                        );
                    }
                }
            }
        });
    });
}

#[test]
fn criterion_08_occlusion_generator() {
    criterion(8, "occluder area within 2% and aspect within [0.3, 3.33]", || {
        let img = Image::new(32, 32, Channels::Gray, Color::Gray(50)).unwrap();
        for (li, &level) in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6].iter().enumerate() {
            let target = level * 1024.0;
            for t in 0..10_000u64 {
                let mut rng =
                    RngStream::new(derive_seed(0xACCE_0008 + li as u64, t));
                let (_, trace) = occlude_with_trace(
                    &img,
                    OcclusionLevel::new(level).unwrap(),
                    &mut rng,
                );
                let trace = trace.unwrap();
                let rel_err = (trace.region.area() as f64 - target).abs() / target;
                assert!(
                    rel_err <= 0.02,
                    "level {level} seed {t}: region {:?} rel err {rel_err}",
                    trace.region
                );
                let aspect = trace.region.h as f64 / trace.region.w as f64;
                assert!(
                    (OCCLUDER_ASPECT_MIN..=OCCLUDER_ASPECT_MAX).contains(&aspect),
                    "level {level} seed {t}: aspect {aspect}"
                );
            }
        }
    });
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_erasekit"))
        .args(args)
        .output()
        .expect("spawn erasekit")
}

fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(dir: &Path, prefix: &str, out: &mut Vec<(String, Vec<u8>)>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap())
            .collect();
        entries.sort_by_key(|e| e.file_name());
        for entry in entries {
            let name = format!("{prefix}{}", entry.file_name().to_string_lossy());
            if entry.file_type().unwrap().is_dir() {
                walk(&entry.path(), &format!("{name}/"), out);
            } else {
                out.push((name, std::fs::read(entry.path()).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, "", &mut out);
    out
}

#[test]
fn criterion_09_cli_determinism() {
    criterion(9, "same seed, different --jobs: byte-identical results", || {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("input");
        std::fs::create_dir(&input).unwrap();
        for i in 0..40u64 {
            let channels = if i % 2 == 0 { Channels::Rgb } else { Channels::Gray };
            let img = textured(32, 32, channels, 9_000 + i);
            let name = match i % 4 {
                0 => format!("img{i:03}.png"),
                1 => format!("img{i:03}.pgm"),
                2 => format!("img{i:03}.ppm"),
                _ => format!("img{i:03}.png"),
            };
            // match codec family to channel count for ppm/pgm
            let name = match (name.as_str(), channels) {
                (n, Channels::Gray) if n.ends_with(".ppm") => n.replace(".ppm", ".pgm"),
                (n, Channels::Rgb) if n.ends_with(".pgm") => n.replace(".pgm", ".ppm"),
                (n, _) => n.to_string(),
            };
            codec::save_image(&input.join(name), &img).unwrap();
        }

        let out_a = dir.path().join("out-a");
        let out_b = dir.path().join("out-b");
        for (out, jobs) in [(&out_a, "1"), (&out_b, "4")] {
            let output = run_cli(&[
                "augment",
                "--in",
                input.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--preset",
                "classification",
                "--flip",
                "--crop",
                "--pad",
                "4",
                "--seed",
                "20250808",
                "--jobs",
                jobs,
            ]);
            assert!(output.status.success(), "{output:?}");
        }
        assert_eq!(tree_bytes(&out_a), tree_bytes(&out_b));

        // validation reports are byte-identical across worker counts too
        let rep_a = dir.path().join("report-a.json");
        let rep_b = dir.path().join("report-b.json");
        for rep in [&rep_a, &rep_b] {
            let output = run_cli(&[
                "stats",
                "--out",
                rep.to_str().unwrap(),
                "--seed",
                "7",
            ]);
            assert!(output.status.success(), "{output:?}");
        }
        assert_eq!(
            std::fs::read(&rep_a).unwrap(),
            std::fs::read(&rep_b).unwrap()
        );
    });
}

#[test]
fn criterion_10_codec_round_trips() {
    criterion(10, "1000 fuzzed images round-trip each codec", || {
        let mut idx_batch = Vec::new();
        for case in 0..1_000u64 {
            let mut rng = RngStream::new(derive_seed(0xACCE_0010, case));
            let w = 1 + rng.next_int_below(48);
            let h = 1 + rng.next_int_below(48);

            let gray = textured(w, h, Channels::Gray, derive_seed(case, 0));
            let rgb = textured(w, h, Channels::Rgb, derive_seed(case, 1));

            // PPM/PGM byte-exact
            let pgm = codec::encode(&gray, ImageFormat::Pnm).unwrap();
            assert_eq!(codec::decode(&pgm, ImageFormat::Pnm).unwrap(), gray);
            let ppm = codec::encode(&rgb, ImageFormat::Pnm).unwrap();
            assert_eq!(codec::decode(&ppm, ImageFormat::Pnm).unwrap(), rgb);

            // PNG value-exact
            let png_g = codec::encode(&gray, ImageFormat::Png).unwrap();
            assert_eq!(codec::decode(&png_g, ImageFormat::Png).unwrap(), gray);
            let png_c = codec::encode(&rgb, ImageFormat::Png).unwrap();
            assert_eq!(codec::decode(&png_c, ImageFormat::Png).unwrap(), rgb);

            idx_batch.push(textured(28, 28, Channels::Gray, derive_seed(case, 2)));
        }
        // IDX byte-exact over the whole batch
        let encoded = idx::encode_images(&idx_batch).unwrap();
        assert_eq!(idx::decode_images(&encoded).unwrap(), idx_batch);
        assert_eq!(
            idx::encode_images(&idx::decode_images(&encoded).unwrap()).unwrap(),
            encoded
        );
    });
}

#[test]
fn criterion_11_comparison_baselines() {
    criterion(11, "dropout/noise fractions within 0.01 of lambda", || {
        for (i, lambda) in [0.01, 0.1, 0.4].into_iter().enumerate() {
            let gray = Image::new(1000, 1000, Channels::Gray, Color::Gray(255)).unwrap();
            let mut rng = RngStream::new(derive_seed(0xACCE_0011, i as u64));
            let dropped =
                image_dropout(&gray, &DropoutParams::new(lambda).unwrap(), &mut rng);
            let fraction =
                dropped.pixels().iter().filter(|&&v| v == 0).count() as f64 / 1e6;
            assert!(
                (fraction - lambda).abs() <= 0.01,
                "dropout lambda {lambda}: {fraction}"
            );

            let rgb = Image::new(1000, 1000, Channels::Rgb, Color::Rgb([7, 7, 7])).unwrap();
            let mut rng = RngStream::new(derive_seed(0xACCE_0012, i as u64));
            let noised = random_noise(&rgb, &NoiseParams::new(lambda).unwrap(), &mut rng);
            let fraction = noised
                .pixels()
                .chunks_exact(3)
                .filter(|px| *px != [7, 7, 7])
                .count() as f64
                / 1e6;
            assert!(
                (fraction - lambda).abs() <= 0.01,
                "noise lambda {lambda}: {fraction}"
            );
        }
    });
}

#[test]
fn criterion_12_nofit_safety() {
    criterion(12, "infeasible settings terminate and leave images unchanged", || {
        // area up to 0.95 with a pinned extreme aspect on an oblong frame:
        // most draws cannot fit, some trials exhaust every attempt
        let params = EraseParams::new(1.0, 0.02, 0.95, 0.1, 0.1, 100).unwrap();
        let img = textured(256, 128, Channels::Gray, 12_001);
        let mut nofits = 0u64;
        for t in 0..3_000u64 {
            let mut rng = RngStream::new(derive_seed(0xACCE_0013, t));
            let before = rng.draw_count();
            let outcome = sample_region(&mut rng, 256, 128, &params);
            assert!(outcome.attempts() <= params.max_attempts);
            assert!(rng.draw_count() - before <= 4 * params.max_attempts as u64);
            if let SampleOutcome::NoFit { .. } = outcome {
                nofits += 1;
            }
            // the erase wrapper leaves the image untouched on NoFit
            let mut rng = RngStream::new(derive_seed(0xACCE_0013, t));
            let (out, trace) =
                erase_with_trace(&img, &params, FillMode::Zero, &mut rng).unwrap();
            if trace.erased_region().is_none() {
                assert_eq!(out, img);
            }
        }
        assert!(nofits > 0, "the setting must actually provoke NoFit");

        // fully infeasible: every trial returns NoFit, nothing hangs
        let impossible = EraseParams::new(1.0, 0.9, 0.95, 0.1, 0.1, 100).unwrap();
        let mut seen_regions = HashSet::new();
        for t in 0..500u64 {
            let mut rng = RngStream::new(derive_seed(0xACCE_0014, t));
            match sample_region(&mut rng, 256, 128, &impossible) {
                SampleOutcome::NoFit { attempts } => assert_eq!(attempts, 100),
                SampleOutcome::Accepted { region, .. } => {
                    seen_regions.insert(region);
                }
            }
        }
        assert!(seen_regions.is_empty(), "no rectangle can fit these params");
    });
}
