//! Binary netpbm codecs: P5 (grayscale) and P6 (RGB), 8-bit only.
//!
//! The encoder writes the canonical header `P5\n<w> <h>\n255\n` followed by
//! raw samples; the decoder accepts arbitrary whitespace and `#` comments
//! between header tokens, as the format allows.

use erasekit_core::{Channels, Image};

use super::CodecError;

/// Skips whitespace and `#` comments, returning the remaining slice.
fn skip_separators(mut bytes: &[u8]) -> &[u8] {
    loop {
        match bytes.first() {
            Some(b) if b.is_ascii_whitespace() => bytes = &bytes[1..],
            Some(b'#') => {
                let end = bytes
                    .iter()
                    .position(|&b| b == b'\n')
                    .map_or(bytes.len(), |p| p + 1);
                bytes = &bytes[end..];
            }
            _ => return bytes,
        }
    }
}

fn read_ascii_u32(bytes: &[u8]) -> Result<(u32, &[u8]), CodecError> {
    let bytes = skip_separators(bytes);
    let end = bytes
        .iter()
        .position(|b| !b.is_ascii_digit())
        .unwrap_or(bytes.len());
    if end == 0 {
        return Err(CodecError::MalformedHeader("expected an integer"));
    }
    let mut value: u64 = 0;
    for &b in &bytes[..end] {
        value = value * 10 + (b - b'0') as u64;
        if value > u32::MAX as u64 {
            return Err(CodecError::MalformedHeader("integer overflows u32"));
        }
    }
    Ok((value as u32, &bytes[end..]))
}

pub fn decode(bytes: &[u8]) -> Result<Image, CodecError> {
    let channels = match bytes {
        [b'P', b'5', ..] => Channels::Gray,
        [b'P', b'6', ..] => Channels::Rgb,
        _ => return Err(CodecError::BadMagic),
    };
    let rest = &bytes[2..];
    let (width, rest) = read_ascii_u32(rest)?;
    let (height, rest) = read_ascii_u32(rest)?;
    let (maxval, rest) = read_ascii_u32(rest)?;
    if maxval == 0 || maxval > 255 {
        return Err(CodecError::UnsupportedBitDepth(
            "PNM maxval must be within 1..=255",
        ));
    }
    // exactly one whitespace byte separates the header from the samples
    let data = match rest.first() {
        Some(b) if b.is_ascii_whitespace() => &rest[1..],
        _ => return Err(CodecError::MalformedHeader("missing sample separator")),
    };
    if width == 0 || height == 0 {
        return Err(CodecError::MalformedHeader("zero dimension"));
    }
    let expected = width as usize * height as usize * channels.count();
    if data.len() < expected {
        return Err(CodecError::Truncated {
            expected,
            found: data.len(),
        });
    }
    Ok(Image::from_pixels(
        width,
        height,
        channels,
        data[..expected].to_vec(),
    )?)
}

pub fn encode(img: &Image) -> Vec<u8> {
    let magic: &[u8] = match img.channels() {
        Channels::Gray => b"P5",
        Channels::Rgb => b"P6",
    };
    let header = format!(" {} {} 255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(2 + header.len() + img.pixels().len());
    out.extend_from_slice(magic);
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(img.pixels());
    out
}
