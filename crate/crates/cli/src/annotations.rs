//! The JSON annotation schema consumed by detection runs:
//!
//! ```json
//! [ { "image": "name.png",
//!     "boxes": [ { "x": 1, "y": 2, "w": 3, "h": 4, "label": "person" } ] } ]
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use erasekit_core::detection::BBox;
use erasekit_core::Region;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("annotations: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("annotations list image '{0}' more than once")]
    DuplicateImage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct AnnotationBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct AnnotationEntry {
    pub image: String,
    pub boxes: Vec<AnnotationBox>,
}

impl AnnotationBox {
    pub fn to_bbox(&self) -> BBox {
        BBox {
            region: Region::new(self.x, self.y, self.w, self.h),
            label: self.label.clone(),
        }
    }
}

/// Parses an annotation file, rejecting duplicate image names so that
/// item indices are well defined.
pub fn parse(bytes: &[u8]) -> Result<Vec<AnnotationEntry>, AnnotationError> {
    let entries: Vec<AnnotationEntry> = serde_json::from_slice(bytes)?;
    let mut seen = HashSet::new();
    for entry in &entries {
        if !seen.insert(entry.image.as_str()) {
            return Err(AnnotationError::DuplicateImage(entry.image.clone()));
        }
    }
    Ok(entries)
}

pub fn load(path: &Path) -> Result<Vec<AnnotationEntry>, AnnotationError> {
    parse(&fs::read(path)?)
}
