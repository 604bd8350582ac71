//! IDX tensor files, the container used by MNIST-style datasets: a
//! big-endian magic number encoding the element type and rank, big-endian
//! dimension sizes, then the raw elements. Image files carry magic
//! `0x00000803` (u8 elements, rank 3: count x rows x cols) and label files
//! `0x00000801` (u8 elements, rank 1).

use erasekit_core::{Channels, Image};

use super::CodecError;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32_be(bytes: &[u8], offset: usize) -> Result<u32, CodecError> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(CodecError::Truncated {
            expected: offset + 4,
            found: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], expected_rank: u8) -> Result<(), CodecError> {
    let magic = read_u32_be(bytes, 0)?;
    let [zero_a, zero_b, dtype, rank] = magic.to_be_bytes();
    if zero_a != 0 || zero_b != 0 {
        return Err(CodecError::BadMagic);
    }
    if dtype != 0x08 {
        return Err(CodecError::UnsupportedBitDepth(
            "IDX element type must be unsigned byte (0x08)",
        ));
    }
    if rank != expected_rank {
        return Err(CodecError::WrongDimensionCount {
            expected: expected_rank,
            found: rank,
        });
    }
    Ok(())
}

/// Decodes an IDX image file into one grayscale image per record.
pub fn decode_images(bytes: &[u8]) -> Result<Vec<Image>, CodecError> {
    check_magic(bytes, 3)?;
    let count = read_u32_be(bytes, 4)? as usize;
    let rows = read_u32_be(bytes, 8)?;
    let cols = read_u32_be(bytes, 12)?;
    if count == 0 {
        return Ok(Vec::new());
    }
    if rows == 0 || cols == 0 {
        return Err(CodecError::MalformedHeader("zero image dimension"));
    }
    let image_len = rows as usize * cols as usize;
    let expected = 16 + count * image_len;
    if bytes.len() < expected {
        return Err(CodecError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    let mut images = Vec::with_capacity(count);
    for i in 0..count {
        let start = 16 + i * image_len;
        images.push(Image::from_pixels(
            cols,
            rows,
            Channels::Gray,
            bytes[start..start + image_len].to_vec(),
        )?);
    }
    Ok(images)
}

/// Encodes grayscale images of one shared size into an IDX image file.
pub fn encode_images(images: &[Image]) -> Result<Vec<u8>, CodecError> {
    let first = images.first().ok_or(CodecError::EmptyDataset)?;
    if first.channels() != Channels::Gray {
        return Err(CodecError::NonUniformImages);
    }
    let (cols, rows) = (first.width(), first.height());
    let mut out = Vec::with_capacity(16 + images.len() * rows as usize * cols as usize);
    out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&rows.to_be_bytes());
    out.extend_from_slice(&cols.to_be_bytes());
    for img in images {
        if img.width() != cols || img.height() != rows || img.channels() != Channels::Gray {
            return Err(CodecError::NonUniformImages);
        }
        out.extend_from_slice(img.pixels());
    }
    Ok(out)
}

/// Decodes an IDX label file.
pub fn decode_labels(bytes: &[u8]) -> Result<Vec<u8>, CodecError> {
    check_magic(bytes, 1)?;
    let count = read_u32_be(bytes, 4)? as usize;
    let expected = 8 + count;
    if bytes.len() < expected {
        return Err(CodecError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    Ok(bytes[8..8 + count].to_vec())
}

/// Encodes labels into an IDX label file.
pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// True when the file starts with the IDX image magic; used to pick
/// between directory mode and IDX mode from an input path.
pub fn is_idx_images(bytes: &[u8]) -> bool {
    read_u32_be(bytes, 0).is_ok_and(|m| m == IMAGES_MAGIC)
}

pub fn load_images(path: &std::path::Path) -> Result<Vec<Image>, CodecError> {
    decode_images(&std::fs::read(path)?)
}

/// Encodes and atomically writes an IDX image file.
pub fn save_images(path: &std::path::Path, images: &[Image]) -> Result<(), CodecError> {
    super::write_atomic(path, &encode_images(images)?)?;
    Ok(())
}
