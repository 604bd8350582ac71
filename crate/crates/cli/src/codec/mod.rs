//! Lossless image file formats: PNG (8-bit gray and RGB), binary PPM/PGM,
//! and IDX tensor files for MNIST-style corpora.
//!
//! PPM/PGM and IDX use canonical headers, so encode-then-decode is
//! byte-exact on the pixel level and re-encoding a decoded file reproduces
//! it bit for bit. PNG round-trips are value-exact; the encoder is
//! deterministic, so identical pixels always produce identical files.

pub mod idx;
pub mod png_codec;
pub mod pnm;

use std::fs;
use std::io;
use std::path::Path;

use erasekit_core::Image;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("unrecognized magic number")]
    BadMagic,
    #[error("malformed header: {0}")]
    MalformedHeader(&'static str),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("unsupported bit depth or sample range: {0}")]
    UnsupportedBitDepth(&'static str),
    #[error("unsupported color type: {0}")]
    UnsupportedColorType(&'static str),
    #[error("IDX dimension count {found} does not match {expected}")]
    WrongDimensionCount { expected: u8, found: u8 },
    #[error("IDX image files require at least one image")]
    EmptyDataset,
    #[error("IDX images must share one size and be grayscale")]
    NonUniformImages,
    #[error("cannot determine format for '{0}'")]
    UnknownFormat(String),
    #[error(transparent)]
    Image(#[from] erasekit_core::Error),
    #[error("png: {0}")]
    PngDecode(#[from] png::DecodingError),
    #[error("png: {0}")]
    PngEncode(#[from] png::EncodingError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Per-file image formats the pipeline reads and writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Pnm,
}

impl ImageFormat {
    /// Maps a file extension to its codec; PPM and PGM share one.
    pub fn from_path(path: &Path) -> Result<Self, CodecError> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("png") => Ok(ImageFormat::Png),
            Some("ppm") | Some("pgm") => Ok(ImageFormat::Pnm),
            _ => Err(CodecError::UnknownFormat(path.display().to_string())),
        }
    }

    pub fn is_supported_path(path: &Path) -> bool {
        Self::from_path(path).is_ok()
    }
}

pub fn decode(bytes: &[u8], format: ImageFormat) -> Result<Image, CodecError> {
    match format {
        ImageFormat::Png => png_codec::decode(bytes),
        ImageFormat::Pnm => pnm::decode(bytes),
    }
}

pub fn encode(img: &Image, format: ImageFormat) -> Result<Vec<u8>, CodecError> {
    match format {
        ImageFormat::Png => png_codec::encode(img),
        ImageFormat::Pnm => Ok(pnm::encode(img)),
    }
}

/// Loads an image, choosing the codec from the file extension.
pub fn load_image(path: &Path) -> Result<Image, CodecError> {
    let format = ImageFormat::from_path(path)?;
    let bytes = fs::read(path)?;
    decode(&bytes, format)
}

/// Writes bytes via a temporary sibling file and an atomic rename, so a
/// killed run never leaves a truncated output in place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".part");
    let tmp = Path::new(&tmp);
    fs::write(tmp, bytes)?;
    fs::rename(tmp, path)
}

/// Encodes and atomically writes an image, codec chosen from the target
/// extension.
pub fn save_image(path: &Path, img: &Image) -> Result<(), CodecError> {
    let format = ImageFormat::from_path(path)?;
    let bytes = encode(img, format)?;
    write_atomic(path, &bytes)?;
    Ok(())
}
