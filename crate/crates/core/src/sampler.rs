//! The erase-region sampler: a Bernoulli gate deciding whether an image is
//! erased at all, and a rejection loop that draws a rectangle of random
//! area and aspect ratio until it fits inside the frame.
//!
//! Draw-count contract: [`gate`] consumes exactly one draw, and every
//! sampler attempt consumes exactly four (area ratio, aspect ratio, x, y,
//! in that order). The contract is fixed so streams can be audited.

use libm::{round, sqrt};

use crate::error::Error;
use crate::image::Region;
use crate::rng::RngStream;

/// Full parameterization of the erase sampler.
///
/// `area_min ..= area_max` bounds the erased-area fraction of the frame,
/// `aspect_min ..= aspect_max` the height/width ratio of the rectangle.
/// The rejection loop is capped at `max_attempts`; exhaustion is reported
/// as [`SampleOutcome::NoFit`] rather than looping forever, since extreme
/// parameter combinations (large area with extreme aspect on an oblong
/// frame) can be infeasible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EraseParams {
    /// Probability that an image undergoes erasing at all.
    pub p: f64,
    /// Lower bound on erased area as a fraction of the frame area.
    pub area_min: f64,
    /// Upper bound on erased area as a fraction of the frame area.
    pub area_max: f64,
    /// Lower bound on the height/width ratio of the erased rectangle.
    pub aspect_min: f64,
    /// Upper bound on the height/width ratio of the erased rectangle.
    pub aspect_max: f64,
    /// Rejection-loop cap; must be at least 1.
    pub max_attempts: u32,
}

/// Default rejection-loop cap.
pub const DEFAULT_MAX_ATTEMPTS: u32 = 100;

impl EraseParams {
    pub fn new(
        p: f64,
        area_min: f64,
        area_max: f64,
        aspect_min: f64,
        aspect_max: f64,
        max_attempts: u32,
    ) -> Result<Self, Error> {
        let params = Self {
            p,
            area_min,
            area_max,
            aspect_min,
            aspect_max,
            max_attempts,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidParams("p must be within [0, 1]"));
        }
        if !(self.area_min > 0.0 && self.area_min <= 1.0) {
            return Err(Error::InvalidParams("area_min must be within (0, 1]"));
        }
        if !(self.area_max > 0.0 && self.area_max <= 1.0) {
            return Err(Error::InvalidParams("area_max must be within (0, 1]"));
        }
        if self.area_min > self.area_max {
            return Err(Error::InvalidParams("area_min must not exceed area_max"));
        }
        if !self.aspect_min.is_finite() || self.aspect_min <= 0.0 {
            return Err(Error::InvalidParams("aspect_min must be positive"));
        }
        if self.aspect_min > self.aspect_max {
            return Err(Error::InvalidParams(
                "aspect_min must not exceed aspect_max",
            ));
        }
        if self.max_attempts == 0 {
            return Err(Error::InvalidParams("max_attempts must be at least 1"));
        }
        Ok(())
    }

    /// Preset used for classification-style training images.
    pub fn classification() -> Self {
        Self {
            p: 0.5,
            area_min: 0.02,
            area_max: 0.4,
            aspect_min: 0.3,
            aspect_max: 1.0 / 0.3,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }

    /// Preset used for detection and re-identification crops: same as
    /// [`classification`](Self::classification) but with a smaller maximum
    /// erased area.
    pub fn detection() -> Self {
        Self {
            area_max: 0.2,
            ..Self::classification()
        }
    }
}

/// Result of running the rejection loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleOutcome {
    /// A rectangle fit within `attempts` tries (`1 ..= max_attempts`).
    Accepted { region: Region, attempts: u32 },
    /// No rectangle fit; the caller leaves the image unchanged.
    NoFit { attempts: u32 },
}

impl SampleOutcome {
    pub fn attempts(&self) -> u32 {
        match *self {
            SampleOutcome::Accepted { attempts, .. } => attempts,
            SampleOutcome::NoFit { attempts } => attempts,
        }
    }

    pub fn region(&self) -> Option<Region> {
        match *self {
            SampleOutcome::Accepted { region, .. } => Some(region),
            SampleOutcome::NoFit { .. } => None,
        }
    }
}

/// Bernoulli gate: consumes one unit-float draw and returns `true` (erase)
/// iff it falls below `p`.
#[inline]
pub fn gate(rng: &mut RngStream, p: f64) -> bool {
    rng.next_unit_float() < p
}

/// Rectangle side lengths for a target area (in pixels) and aspect ratio:
/// `h = round(sqrt(area * aspect))`, `w = round(sqrt(area / aspect))`,
/// each clamped below at 1. There is no upper clamp; oversized sides are
/// rejected by the placement check.
///
/// The numeric oracle in [`stats`](crate::stats) replicates this exact
/// rounding rule; the two share this function deliberately so that the
/// oracle integrates the very geometry the sampler realizes.
#[inline]
pub fn erase_geometry(area: f64, aspect: f64) -> (u32, u32) {
    let h = round(sqrt(area * aspect));
    let w = round(sqrt(area / aspect));
    (if w < 1.0 { 1 } else { w as u32 }, if h < 1.0 { 1 } else { h as u32 })
}

/// One sampler attempt, reported with its raw draws so distribution tests
/// can bin the drawn `(area ratio, aspect)` pairs of accepted attempts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttemptDraw {
    /// Drawn area fraction (before any rounding).
    pub area_ratio: f64,
    /// Drawn height/width ratio.
    pub aspect: f64,
    /// Rounded rectangle size (may exceed the frame, in which case the
    /// placement was rejected).
    pub w: u32,
    pub h: u32,
    /// The placed rectangle if the attempt was accepted.
    pub region: Option<Region>,
}

/// Runs a single attempt: draws area ratio, aspect ratio, and a top-left
/// corner uniform over the whole frame, accepting iff the rectangle lies
/// inside. Consumes exactly four draws.
pub fn sample_attempt(
    rng: &mut RngStream,
    width: u32,
    height: u32,
    params: &EraseParams,
) -> AttemptDraw {
    let frame_area = width as f64 * height as f64;
    let area_ratio = rng.next_in_range(params.area_min, params.area_max);
    let aspect = rng.next_in_range(params.aspect_min, params.aspect_max);
    let (w, h) = erase_geometry(area_ratio * frame_area, aspect);
    let x = rng.next_int_below(width);
    let y = rng.next_int_below(height);
    let fits = x as u64 + w as u64 <= width as u64 && y as u64 + h as u64 <= height as u64;
    AttemptDraw {
        area_ratio,
        aspect,
        w,
        h,
        region: fits.then(|| Region::new(x, y, w, h)),
    }
}

/// The rejection loop: repeats [`sample_attempt`] until a rectangle fits or
/// `max_attempts` is exhausted.
pub fn sample_region(
    rng: &mut RngStream,
    width: u32,
    height: u32,
    params: &EraseParams,
) -> SampleOutcome {
    debug_assert!(params.validate().is_ok());
    debug_assert!(width >= 1 && height >= 1);
    for attempt in 1..=params.max_attempts {
        if let Some(region) = sample_attempt(rng, width, height, params).region {
            return SampleOutcome::Accepted {
                region,
                attempts: attempt,
            };
        }
    }
    SampleOutcome::NoFit {
        attempts: params.max_attempts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_extremes() {
        let mut rng = RngStream::new(1);
        for _ in 0..1_000 {
            assert!(!gate(&mut rng, 0.0));
            assert!(gate(&mut rng, 1.0));
        }
    }

    #[test]
    fn gate_consumes_exactly_one_draw() {
        let mut rng = RngStream::new(3);
        gate(&mut rng, 0.5);
        assert_eq!(rng.draw_count(), 1);
    }

    #[test]
    fn gate_rate_near_half() {
        let mut rng = RngStream::new(0xC0FFEE);
        let trials = 200_000;
        let hits = (0..trials).filter(|_| gate(&mut rng, 0.5)).count();
        let rate = hits as f64 / trials as f64;
        assert!((rate - 0.5).abs() < 0.005, "rate {rate}");
    }

    #[test]
    fn attempt_consumes_exactly_four_draws() {
        let mut rng = RngStream::new(9);
        let params = EraseParams::classification();
        sample_attempt(&mut rng, 32, 32, &params);
        assert_eq!(rng.draw_count(), 4);
    }

    #[test]
    fn degenerate_quarter_area_square_regions() {
        // area fraction pinned to 0.25 with square aspect on a 32x32 frame
        // forces a 16x16 rectangle
        let params = EraseParams::new(1.0, 0.25, 0.25, 1.0, 1.0, 100).unwrap();
        let mut rng = RngStream::new(11);
        for _ in 0..1_000 {
            match sample_region(&mut rng, 32, 32, &params) {
                SampleOutcome::Accepted { region, .. } => {
                    assert_eq!((region.w, region.h), (16, 16));
                    assert!(region.x + region.w <= 32 && region.y + region.h <= 32);
                }
                SampleOutcome::NoFit { .. } => {}
            }
        }
    }

    #[test]
    fn full_area_square_only_fits_at_origin() {
        let params = EraseParams::new(1.0, 1.0, 1.0, 1.0, 1.0, 1_000).unwrap();
        let mut rng = RngStream::new(13);
        let mut accepted = 0;
        for _ in 0..200 {
            if let SampleOutcome::Accepted { region, .. } = sample_region(&mut rng, 8, 8, &params) {
                assert_eq!(region, Region::new(0, 0, 8, 8));
                accepted += 1;
            }
        }
        assert!(accepted > 0);
    }

    #[test]
    fn outcome_sequences_are_deterministic() {
        let params = EraseParams::classification();
        let run = |seed: u64| {
            let mut rng = RngStream::new(seed);
            (0..500)
                .map(|_| sample_region(&mut rng, 40, 24, &params))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(77), run(77));
    }

    #[test]
    fn params_validation() {
        assert!(EraseParams::new(0.5, 0.4, 0.2, 0.3, 3.0, 100).is_err());
        assert!(EraseParams::new(0.5, 0.02, 0.4, 2.0, 0.5, 100).is_err());
        assert!(EraseParams::new(1.5, 0.02, 0.4, 0.3, 3.0, 100).is_err());
        assert!(EraseParams::new(0.5, 0.0, 0.4, 0.3, 3.0, 100).is_err());
        assert!(EraseParams::new(0.5, 0.02, 0.4, 0.3, 3.0, 0).is_err());
        assert!(EraseParams::classification().validate().is_ok());
        assert!(EraseParams::detection().validate().is_ok());
        assert_eq!(EraseParams::detection().area_max, 0.2);
    }
}
