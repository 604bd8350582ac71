//! User-facing randomized transforms: random erasing with four fill modes,
//! random horizontal flip, random crop with zero padding, image-layer
//! dropout and random noise baselines, and the fixed-level occluder used to
//! build occlusion test corpora.
//!
//! Every transform is pure given its stream: the same input, parameters,
//! and seed produce byte-identical output. When transforms are composed
//! into a pipeline the draw order is fixed as flip, crop offset, erase gate,
//! erase geometry, erase fill, so a whole pipeline replays from one seed.

use libm::{round, sqrt};

use crate::error::Error;
use crate::image::{Channels, Color, Image, Region};
use crate::rng::RngStream;
use crate::sampler::{gate, sample_region, EraseParams, SampleOutcome};

/// Pixel-value law applied inside an erased rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillMode {
    /// Every sample (each pixel, each channel, independently) is drawn
    /// uniformly from `[0, 255]`.
    RandomPerPixel,
    /// Constant fill, conventionally the dataset mean color.
    ConstantMean(Color),
    /// Constant 0.
    Zero,
    /// Constant 255.
    Max,
}

impl FillMode {
    /// The default mean-fill constant: `(125, 122, 114)` for RGB. For
    /// grayscale the three components round to `120`.
    pub fn default_mean(channels: Channels) -> FillMode {
        FillMode::ConstantMean(match channels {
            Channels::Rgb => Color::Rgb([125, 122, 114]),
            Channels::Gray => Color::Gray(120),
        })
    }
}

/// Per-pixel replacement probability for the random-noise baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub replace_prob: f64,
}

impl NoiseParams {
    pub fn new(replace_prob: f64) -> Result<Self, Error> {
        if !(0.0..=1.0).contains(&replace_prob) {
            return Err(Error::InvalidParams("replace_prob must be within [0, 1]"));
        }
        Ok(Self { replace_prob })
    }
}

/// Per-pixel drop probability for the image-layer dropout baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutParams {
    pub drop_prob: f64,
}

impl DropoutParams {
    pub fn new(drop_prob: f64) -> Result<Self, Error> {
        if !(0.0..=1.0).contains(&drop_prob) {
            return Err(Error::InvalidParams("drop_prob must be within [0, 1]"));
        }
        Ok(Self { drop_prob })
    }
}

/// Occluded-area fraction for test-time occlusion corpora. The occluder's
/// aspect ratio is drawn from the fixed range
/// [`OCCLUDER_ASPECT_MIN`, `OCCLUDER_ASPECT_MAX`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcclusionLevel {
    pub fraction: f64,
}

pub const OCCLUDER_ASPECT_MIN: f64 = 0.3;
pub const OCCLUDER_ASPECT_MAX: f64 = 3.33;

/// Attempt cap for the occluder's rejection loop; unlike training-time
/// erasing the occluder must always succeed, so after the cap the aspect is
/// clamped to the feasible boundary instead of giving up.
pub const OCCLUDER_MAX_ATTEMPTS: u32 = 10_000;

impl OcclusionLevel {
    pub fn new(fraction: f64) -> Result<Self, Error> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidParams("occlusion level must be within [0, 1]"));
        }
        Ok(Self { fraction })
    }
}

/// Outcome of one gated erase, as recorded in run manifests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EraseTrace {
    /// Whether the Bernoulli gate selected the image for erasing.
    pub gated: bool,
    /// Sampler outcome when gated; `None` when the gate passed the image
    /// through unchanged.
    pub outcome: Option<SampleOutcome>,
}

impl EraseTrace {
    /// The region that was actually filled, if any.
    pub fn erased_region(&self) -> Option<Region> {
        self.outcome.as_ref().and_then(|o| o.region())
    }
}

/// Writes `fill` over `region`, leaving everything outside untouched.
pub fn apply_fill(
    img: &Image,
    region: Region,
    fill: FillMode,
    rng: &mut RngStream,
) -> Result<Image, Error> {
    region.validate_for(img.width(), img.height())?;
    match fill {
        FillMode::RandomPerPixel => {
            let mut out = img.clone();
            let count = out.channels().count();
            let width = out.width() as usize;
            let pixels = out.pixels_mut();
            for y in region.y..region.y + region.h {
                let start = (y as usize * width + region.x as usize) * count;
                let row = &mut pixels[start..start + region.w as usize * count];
                for sample in row {
                    *sample = rng.next_int_below(256) as u8;
                }
            }
            Ok(out)
        }
        FillMode::ConstantMean(color) => img.fill_region(region, color),
        FillMode::Zero => img.fill_region(region, Color::zero(img.channels())),
        FillMode::Max => img.fill_region(region, Color::max(img.channels())),
    }
}

/// Random erasing with full outcome reporting: gate, then the rejection
/// sampler, then the fill. On a closed gate or a `NoFit` outcome the image
/// is returned unchanged.
pub fn erase_with_trace(
    img: &Image,
    params: &EraseParams,
    fill: FillMode,
    rng: &mut RngStream,
) -> Result<(Image, EraseTrace), Error> {
    if !gate(rng, params.p) {
        return Ok((
            img.clone(),
            EraseTrace {
                gated: false,
                outcome: None,
            },
        ));
    }
    let outcome = sample_region(rng, img.width(), img.height(), params);
    let out = match outcome {
        SampleOutcome::Accepted { region, .. } => apply_fill(img, region, fill, rng)?,
        SampleOutcome::NoFit { .. } => img.clone(),
    };
    Ok((
        out,
        EraseTrace {
            gated: true,
            outcome: Some(outcome),
        },
    ))
}

/// Random erasing: with probability `1 - p` the image is returned
/// unchanged; otherwise one rectangle is sampled and filled.
pub fn random_erase(
    img: &Image,
    params: &EraseParams,
    fill: FillMode,
    rng: &mut RngStream,
) -> Result<Image, Error> {
    erase_with_trace(img, params, fill, rng).map(|(out, _)| out)
}

/// Horizontal flip with probability `prob`; consumes exactly one draw.
pub fn random_flip(img: &Image, prob: f64, rng: &mut RngStream) -> Image {
    if gate(rng, prob) {
        img.flip_horizontal()
    } else {
        img.clone()
    }
}

/// Zero-pads by `margin` on every side, then crops an `out_w` x `out_h`
/// window at an offset drawn uniformly over all valid placements.
/// Consumes exactly two draws (x offset, then y offset).
pub fn random_crop_with_padding(
    img: &Image,
    margin: u32,
    out_w: u32,
    out_h: u32,
    rng: &mut RngStream,
) -> Result<Image, Error> {
    let padded = img.pad(margin, Color::zero(img.channels()))?;
    if out_w == 0 || out_h == 0 {
        return Err(Error::EmptyRegion);
    }
    if out_w > padded.width() || out_h > padded.height() {
        return Err(Error::OversizeCrop {
            out_w,
            out_h,
            width: padded.width(),
            height: padded.height(),
        });
    }
    let x = rng.next_int_below(padded.width() - out_w + 1);
    let y = rng.next_int_below(padded.height() - out_h + 1);
    padded.crop(Region::new(x, y, out_w, out_h))
}

/// Image-layer dropout: each pixel is independently zeroed (all channels)
/// with probability `drop_prob`. Consumes one draw per pixel.
pub fn image_dropout(img: &Image, params: &DropoutParams, rng: &mut RngStream) -> Image {
    let mut out = img.clone();
    let count = out.channels().count();
    let pixels = out.pixels_mut();
    for px in pixels.chunks_exact_mut(count) {
        if rng.next_unit_float() < params.drop_prob {
            px.fill(0);
        }
    }
    out
}

/// Random-noise baseline: each pixel independently, with probability
/// `replace_prob`, has all its channels redrawn uniformly from `[0, 255]`.
pub fn random_noise(img: &Image, params: &NoiseParams, rng: &mut RngStream) -> Image {
    let mut out = img.clone();
    let count = out.channels().count();
    let pixels = out.pixels_mut();
    for px in pixels.chunks_exact_mut(count) {
        if rng.next_unit_float() < params.replace_prob {
            for sample in px.iter_mut() {
                *sample = rng.next_int_below(256) as u8;
            }
        }
    }
    out
}

/// Occluder side lengths for a target pixel area and an aspect draw.
///
/// Independent rounding of both sides can miss the target area by several
/// percent, so instead a small neighborhood of integer heights around
/// `sqrt(area * aspect)` is searched and the width re-derived from the
/// area; the pair with the smallest area error whose realized aspect stays
/// within the occluder range wins. Returns `None` when no candidate fits
/// the frame, which rejects this aspect draw.
fn occluder_geometry(width: u32, height: u32, target_area: f64, aspect: f64) -> Option<(u32, u32)> {
    let ideal_h = round(sqrt(target_area * aspect)) as i64;
    let mut best: Option<(f64, i64, u32, u32)> = None;
    for hc in ideal_h - 3..=ideal_h + 3 {
        if hc < 1 || hc > height as i64 {
            continue;
        }
        let h = hc as u32;
        let w = round(target_area / h as f64);
        let w = if w < 1.0 { 1 } else { w as u32 };
        if w > width {
            continue;
        }
        let realized_aspect = h as f64 / w as f64;
        if !(OCCLUDER_ASPECT_MIN..=OCCLUDER_ASPECT_MAX).contains(&realized_aspect) {
            continue;
        }
        let err = (w as f64 * h as f64 - target_area).abs();
        let dist = (hc - ideal_h).abs();
        // ties keep the earlier (smaller) height, so the choice is total
        let better = match best {
            None => true,
            Some((e, d, _, _)) => err < e || (err == e && dist < d),
        };
        if better {
            best = Some((err, dist, w, h));
        }
    }
    best.map(|(_, _, w, h)| (w, h))
}

/// Fallback geometry once the rejection loop is exhausted: the aspect is
/// clamped to the feasible boundary so a fitting rectangle always exists
/// (for a full-frame target this forces the frame's own shape).
fn occluder_geometry_clamped(width: u32, height: u32, target_area: f64, aspect: f64) -> (u32, u32) {
    let feas_lo = target_area / (width as f64 * width as f64);
    let feas_hi = height as f64 * height as f64 / target_area;
    let lo = if OCCLUDER_ASPECT_MIN > feas_lo { OCCLUDER_ASPECT_MIN } else { feas_lo };
    let hi = if OCCLUDER_ASPECT_MAX < feas_hi { OCCLUDER_ASPECT_MAX } else { feas_hi };
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (feas_lo, feas_hi) };
    let clamped = aspect.clamp(lo, hi);
    let h = round(sqrt(target_area * clamped)).clamp(1.0, height as f64) as u32;
    let w = round(target_area / h as f64).clamp(1.0, width as f64) as u32;
    (w, h)
}

/// How the occluder placed its rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OccludeTrace {
    pub region: Region,
    /// Rejection attempts consumed, including the accepting one; equal to
    /// [`OCCLUDER_MAX_ATTEMPTS`] when the clamped fallback had to place
    /// the rectangle.
    pub attempts: u32,
    /// True when the rejection loop was exhausted and the aspect was
    /// clamped to the feasible boundary.
    pub clamped: bool,
}

/// Occlusion with reported placement: fills one rectangle of area
/// `fraction * frame_area` (up to integer rounding) with per-pixel random
/// values. There is no gate; every image is occluded. Returns the placed
/// region, or `None` for level 0 (identity, no draws).
///
/// Per attempt three draws are consumed (aspect, x, y); attempts whose
/// rectangle cannot fit are retried with fresh draws up to
/// [`OCCLUDER_MAX_ATTEMPTS`], after which the aspect is clamped to the
/// feasible boundary and the position drawn over valid offsets only.
pub fn occlude_with_trace(
    img: &Image,
    level: OcclusionLevel,
    rng: &mut RngStream,
) -> (Image, Option<OccludeTrace>) {
    if level.fraction == 0.0 {
        return (img.clone(), None);
    }
    let (width, height) = (img.width(), img.height());
    let target_area = level.fraction * width as f64 * height as f64;
    let mut trace = None;
    for attempt in 1..=OCCLUDER_MAX_ATTEMPTS {
        let aspect = rng.next_in_range(OCCLUDER_ASPECT_MIN, OCCLUDER_ASPECT_MAX);
        let geometry = occluder_geometry(width, height, target_area, aspect);
        let x = rng.next_int_below(width);
        let y = rng.next_int_below(height);
        if let Some((w, h)) = geometry {
            if x as u64 + w as u64 <= width as u64 && y as u64 + h as u64 <= height as u64 {
                trace = Some(OccludeTrace {
                    region: Region::new(x, y, w, h),
                    attempts: attempt,
                    clamped: false,
                });
                break;
            }
        }
    }
    let trace = trace.unwrap_or_else(|| {
        let aspect = rng.next_in_range(OCCLUDER_ASPECT_MIN, OCCLUDER_ASPECT_MAX);
        let (w, h) = occluder_geometry_clamped(width, height, target_area, aspect);
        let x = rng.next_int_below(width - w + 1);
        let y = rng.next_int_below(height - h + 1);
        OccludeTrace {
            region: Region::new(x, y, w, h),
            attempts: OCCLUDER_MAX_ATTEMPTS,
            clamped: true,
        }
    });
    let out = apply_fill(img, trace.region, FillMode::RandomPerPixel, rng)
        .expect("occluder regions are in bounds by construction");
    (out, Some(trace))
}

/// Test-time occluder; see [`occlude_with_trace`].
pub fn occlude_for_test(img: &Image, level: OcclusionLevel, rng: &mut RngStream) -> Image {
    occlude_with_trace(img, level, rng).0
}
