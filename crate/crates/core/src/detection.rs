//! Bounding-box-aware random erasing for annotated detection data.
//!
//! Three schemes: image-aware erasing treats the annotated image like any
//! classification image; object-aware erasing gates and erases each
//! labeled box independently, sampling the rectangle inside the box's own
//! frame; the combined scheme runs the object stage first and the image
//! stage on its output. Annotations are never modified.
//!
//! Each box consumes its own sub-stream, derived from one base draw of the
//! image stream and the box's list index. Boxes therefore cannot perturb
//! one another's outcomes, per-box work can run in any order, and a
//! reordering bug in the box list shows up as changed output.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Error;
use crate::image::{Image, Region};
use crate::rng::{derive_seed, RngStream};
use crate::sampler::{gate, sample_region, EraseParams, SampleOutcome};
use crate::transforms::{apply_fill, erase_with_trace, EraseTrace, FillMode};

/// A labeled axis-aligned box in image coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BBox {
    pub region: Region,
    pub label: String,
}

/// An image with its object annotations; the box list may be empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedImage {
    pub image: Image,
    pub boxes: Vec<BBox>,
}

impl AnnotatedImage {
    pub fn new(image: Image, boxes: Vec<BBox>) -> Result<Self, Error> {
        for b in &boxes {
            b.region.validate_for(image.width(), image.height())?;
        }
        Ok(Self { image, boxes })
    }
}

/// Which erasing scheme an annotated run applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Erase over the whole frame, ignoring the boxes.
    ImageAware,
    /// Erase inside each box independently.
    ObjectAware,
    /// Object stage followed by the image stage.
    ImageAndObject,
}

/// Outcome of the per-box gate and sampler for one box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoxEraseOutcome {
    pub box_index: usize,
    pub gated: bool,
    /// Sampler outcome when gated; the accepted region is reported in
    /// image coordinates (already translated by the box corner).
    pub outcome: Option<SampleOutcome>,
}

/// Everything a scheme did to one annotated image, for manifests and
/// containment audits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeTrace {
    pub object_stage: Vec<BoxEraseOutcome>,
    pub image_stage: Option<EraseTrace>,
}

/// Image-aware erasing: one gated erase over the full frame, boxes
/// untouched. With an empty box list this is exactly [`random_erase`]
/// (same stream, same pixels).
///
/// [`random_erase`]: crate::transforms::random_erase
pub fn erase_image_aware(
    ann: &AnnotatedImage,
    params: &EraseParams,
    fill: FillMode,
    rng: &mut RngStream,
) -> Result<AnnotatedImage, Error> {
    erase_image_aware_traced(ann, params, fill, rng).map(|(out, _)| out)
}

pub fn erase_image_aware_traced(
    ann: &AnnotatedImage,
    params: &EraseParams,
    fill: FillMode,
    rng: &mut RngStream,
) -> Result<(AnnotatedImage, SchemeTrace), Error> {
    let (image, trace) = erase_with_trace(&ann.image, params, fill, rng)?;
    Ok((
        AnnotatedImage {
            image,
            boxes: ann.boxes.clone(),
        },
        SchemeTrace {
            object_stage: Vec::new(),
            image_stage: Some(trace),
        },
    ))
}

/// Object-aware erasing: every box is gated independently with probability
/// `p`; gated boxes sample a rectangle inside their own frame (area and
/// aspect ranges interpreted relative to the box) and fill it. Pixels
/// outside the gated boxes are never modified. Boxes too small to fit any
/// rectangle exhaust their attempts and are skipped.
///
/// An empty box list is an identity and consumes no draws; otherwise
/// exactly one base draw is taken from `rng` and each box runs on a
/// sub-stream derived from that base and its index.
pub fn erase_object_aware(
    ann: &AnnotatedImage,
    params: &EraseParams,
    fill: FillMode,
    rng: &mut RngStream,
) -> Result<AnnotatedImage, Error> {
    erase_object_aware_traced(ann, params, fill, rng).map(|(out, _)| out)
}

pub fn erase_object_aware_traced(
    ann: &AnnotatedImage,
    params: &EraseParams,
    fill: FillMode,
    rng: &mut RngStream,
) -> Result<(AnnotatedImage, SchemeTrace), Error> {
    if ann.boxes.is_empty() {
        return Ok((
            ann.clone(),
            SchemeTrace {
                object_stage: Vec::new(),
                image_stage: None,
            },
        ));
    }
    let base = rng.next_u64();
    let mut image = ann.image.clone();
    let mut object_stage = Vec::with_capacity(ann.boxes.len());
    for (box_index, bbox) in ann.boxes.iter().enumerate() {
        let mut sub = RngStream::new(derive_seed(base, box_index as u64));
        let gated = gate(&mut sub, params.p);
        let outcome = if gated {
            let outcome = sample_region(&mut sub, bbox.region.w, bbox.region.h, params);
            if let SampleOutcome::Accepted { region, attempts } = outcome {
                let translated = Region::new(
                    bbox.region.x + region.x,
                    bbox.region.y + region.y,
                    region.w,
                    region.h,
                );
                image = apply_fill(&image, translated, fill, &mut sub)?;
                Some(SampleOutcome::Accepted {
                    region: translated,
                    attempts,
                })
            } else {
                Some(outcome)
            }
        } else {
            None
        };
        object_stage.push(BoxEraseOutcome {
            box_index,
            gated,
            outcome,
        });
    }
    Ok((
        AnnotatedImage {
            image,
            boxes: ann.boxes.clone(),
        },
        SchemeTrace {
            object_stage,
            image_stage: None,
        },
    ))
}

/// Combined scheme: the object stage runs first, then the image stage on
/// its output, each with its own gate draws.
pub fn erase_image_and_objects(
    ann: &AnnotatedImage,
    params: &EraseParams,
    fill: FillMode,
    rng: &mut RngStream,
) -> Result<AnnotatedImage, Error> {
    erase_image_and_objects_traced(ann, params, fill, rng).map(|(out, _)| out)
}

pub fn erase_image_and_objects_traced(
    ann: &AnnotatedImage,
    params: &EraseParams,
    fill: FillMode,
    rng: &mut RngStream,
) -> Result<(AnnotatedImage, SchemeTrace), Error> {
    let (after_objects, object_trace) = erase_object_aware_traced(ann, params, fill, rng)?;
    let (out, image_trace) = erase_image_aware_traced(&after_objects, params, fill, rng)?;
    Ok((
        out,
        SchemeTrace {
            object_stage: object_trace.object_stage,
            image_stage: image_trace.image_stage,
        },
    ))
}
