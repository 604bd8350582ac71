//! PNG support through the `png` crate, restricted to the pixel layouts
//! the toolkit works with: 8-bit grayscale and 8-bit RGB. Encoding uses
//! fixed settings, so the same pixels always produce the same file.

use std::io::Cursor;

use erasekit_core::{Channels, Image};
use png::{BitDepth, ColorType, Decoder, Encoder};

use super::CodecError;

pub fn decode(bytes: &[u8]) -> Result<Image, CodecError> {
    let decoder = Decoder::new(Cursor::new(bytes));
    let mut reader = decoder.read_info()?;
    let info = reader.info();
    if info.bit_depth != BitDepth::Eight {
        return Err(CodecError::UnsupportedBitDepth(
            "only 8-bit PNG images are supported",
        ));
    }
    let channels = match info.color_type {
        ColorType::Grayscale => Channels::Gray,
        ColorType::Rgb => Channels::Rgb,
        _ => {
            return Err(CodecError::UnsupportedColorType(
                "only grayscale and RGB PNG images are supported",
            ))
        }
    };
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let frame = reader.next_frame(&mut buf)?;
    buf.truncate(frame.buffer_size());
    Ok(Image::from_pixels(frame.width, frame.height, channels, buf)?)
}

pub fn encode(img: &Image) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::new();
    let mut encoder = Encoder::new(&mut out, img.width(), img.height());
    encoder.set_depth(BitDepth::Eight);
    encoder.set_color(match img.channels() {
        Channels::Gray => ColorType::Grayscale,
        Channels::Rgb => ColorType::Rgb,
    });
    let mut writer = encoder.write_header()?;
    writer.write_image_data(img.pixels())?;
    writer.finish()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_value_exact() {
        for channels in [Channels::Gray, Channels::Rgb] {
            let len = 5 * 4 * channels.count();
            let img = Image::from_pixels(
                5,
                4,
                channels,
                (0..len).map(|v| (v * 37 % 256) as u8).collect(),
            )
            .unwrap();
            assert_eq!(decode(&encode(&img).unwrap()).unwrap(), img);
        }
    }

    #[test]
    fn encoding_is_deterministic() {
        let img = Image::from_pixels(8, 8, Channels::Gray, (0..64).collect()).unwrap();
        assert_eq!(encode(&img).unwrap(), encode(&img).unwrap());
    }

    #[test]
    fn rejects_unsupported_layouts() {
        // 16-bit grayscale
        let mut out = Vec::new();
        let mut encoder = Encoder::new(&mut out, 2, 2);
        encoder.set_depth(BitDepth::Sixteen);
        encoder.set_color(ColorType::Grayscale);
        let mut writer = encoder.write_header().unwrap();
        writer.write_image_data(&[0u8; 8]).unwrap();
        writer.finish().unwrap();
        assert!(matches!(
            decode(&out),
            Err(CodecError::UnsupportedBitDepth(_))
        ));

        // RGBA
        let mut out = Vec::new();
        let mut encoder = Encoder::new(&mut out, 1, 1);
        encoder.set_depth(BitDepth::Eight);
        encoder.set_color(ColorType::Rgba);
        let mut writer = encoder.write_header().unwrap();
        writer.write_image_data(&[1, 2, 3, 4]).unwrap();
        writer.finish().unwrap();
        assert!(matches!(
            decode(&out),
            Err(CodecError::UnsupportedColorType(_))
        ));
    }
}
