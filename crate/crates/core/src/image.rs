//! Owned 8-bit raster buffers and integer rectangle geometry, plus the
//! deterministic geometric kernels (flip, pad, crop) the randomized
//! transforms are built from.
//!
//! Pixels are stored row-major and channel-interleaved. Images are
//! immutable from the caller's perspective: every operation leaves its
//! input untouched and returns a fresh buffer.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;

/// Channel layout of an image: 8-bit grayscale or 8-bit RGB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channels {
    Gray,
    Rgb,
}

impl Channels {
    /// Samples per pixel.
    #[inline]
    pub fn count(self) -> usize {
        match self {
            Channels::Gray => 1,
            Channels::Rgb => 3,
        }
    }

    pub fn from_count(count: u8) -> Result<Self, Error> {
        match count {
            1 => Ok(Channels::Gray),
            3 => Ok(Channels::Rgb),
            other => Err(Error::UnsupportedChannels(other)),
        }
    }
}

/// A per-channel constant color whose arity must match an image's layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Color {
    Gray(u8),
    Rgb([u8; 3]),
}

impl Color {
    #[inline]
    pub fn channels(self) -> Channels {
        match self {
            Color::Gray(_) => Channels::Gray,
            Color::Rgb(_) => Channels::Rgb,
        }
    }

    #[inline]
    pub fn components(&self) -> &[u8] {
        match self {
            Color::Gray(v) => core::slice::from_ref(v),
            Color::Rgb(v) => v.as_slice(),
        }
    }

    /// All-zero color for the given layout.
    pub fn zero(channels: Channels) -> Self {
        match channels {
            Channels::Gray => Color::Gray(0),
            Channels::Rgb => Color::Rgb([0, 0, 0]),
        }
    }

    /// All-255 color for the given layout.
    pub fn max(channels: Channels) -> Self {
        match channels {
            Channels::Gray => Color::Gray(255),
            Channels::Rgb => Color::Rgb([255, 255, 255]),
        }
    }
}

/// Integer rectangle in pixel coordinates: `x, y` is the top-left corner,
/// `w, h` its extent. Valid regions have `w >= 1` and `h >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Region {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Region {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    #[inline]
    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    #[inline]
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && x < self.x + self.w && y >= self.y && y < self.y + self.h
    }

    /// Checks that the region is non-empty and lies fully inside an image
    /// of the given dimensions.
    pub fn validate_for(&self, width: u32, height: u32) -> Result<(), Error> {
        if self.w == 0 || self.h == 0 {
            return Err(Error::EmptyRegion);
        }
        if self.x as u64 + self.w as u64 > width as u64
            || self.y as u64 + self.h as u64 > height as u64
        {
            return Err(Error::RegionOutOfBounds {
                x: self.x,
                y: self.y,
                w: self.w,
                h: self.h,
                width,
                height,
            });
        }
        Ok(())
    }
}

/// Owned raster buffer: 8-bit samples, row-major, channel-interleaved.
///
/// Invariant: `pixels.len() == width * height * channels.count()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    channels: Channels,
    pixels: Vec<u8>,
}

impl Image {
    /// Creates an image filled with a constant color.
    pub fn new(width: u32, height: u32, channels: Channels, fill: Color) -> Result<Self, Error> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if fill.channels() != channels {
            return Err(Error::ChannelMismatch);
        }
        let count = channels.count();
        let len = width as usize * height as usize * count;
        let pixels = match fill {
            Color::Gray(v) => vec![v; len],
            Color::Rgb(rgb) => {
                let mut buf = Vec::with_capacity(len);
                for _ in 0..width as usize * height as usize {
                    buf.extend_from_slice(&rgb);
                }
                buf
            }
        };
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    /// Wraps an existing sample buffer, checking the length invariant.
    pub fn from_pixels(
        width: u32,
        height: u32,
        channels: Channels,
        pixels: Vec<u8>,
    ) -> Result<Self, Error> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        let expected = width as usize * height as usize * channels.count();
        if pixels.len() != expected {
            return Err(Error::BufferLength {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> Channels {
        self.channels
    }

    #[inline]
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    /// Region covering the whole image.
    pub fn full_region(&self) -> Region {
        Region::new(0, 0, self.width, self.height)
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels.count()
    }

    /// Sample value at `(x, y)` for channel `c`.
    #[inline]
    pub fn sample(&self, x: u32, y: u32, c: usize) -> u8 {
        self.pixels[self.offset(x, y) + c]
    }

    pub(crate) fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    /// Returns a copy with every sample in `region` set to `color`;
    /// everything outside the region is untouched. Out-of-bounds regions
    /// are an error, never clipped.
    pub fn fill_region(&self, region: Region, color: Color) -> Result<Image, Error> {
        region.validate_for(self.width, self.height)?;
        if color.channels() != self.channels {
            return Err(Error::ChannelMismatch);
        }
        let mut out = self.clone();
        out.fill_region_in_place(region, color);
        Ok(out)
    }

    pub(crate) fn fill_region_in_place(&mut self, region: Region, color: Color) {
        let count = self.channels.count();
        let comps = color.components();
        for y in region.y..region.y + region.h {
            let row = self.offset(region.x, y);
            let row_slice = &mut self.pixels[row..row + region.w as usize * count];
            match comps {
                [v] => row_slice.fill(*v),
                _ => {
                    for px in row_slice.chunks_exact_mut(count) {
                        px.copy_from_slice(comps);
                    }
                }
            }
        }
    }

    /// Mirror image: `out(x, y) = in(width - 1 - x, y)` for every channel.
    pub fn flip_horizontal(&self) -> Image {
        let count = self.channels.count();
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for y in 0..self.height {
            let row = self.offset(0, y);
            let row_slice = &self.pixels[row..row + self.width as usize * count];
            for px in row_slice.chunks_exact(count).rev() {
                pixels.extend_from_slice(px);
            }
        }
        Image {
            width: self.width,
            height: self.height,
            channels: self.channels,
            pixels,
        }
    }

    /// Surrounds the image with a `margin`-pixel border of `value` on every
    /// side; the interior is the original image translated by the margin.
    pub fn pad(&self, margin: u32, value: Color) -> Result<Image, Error> {
        if value.channels() != self.channels {
            return Err(Error::ChannelMismatch);
        }
        if margin == 0 {
            return Ok(self.clone());
        }
        let out_w = self
            .width
            .checked_add(margin.checked_mul(2).ok_or(Error::InvalidDimensions {
                width: self.width,
                height: self.height,
            })?)
            .ok_or(Error::InvalidDimensions {
                width: self.width,
                height: self.height,
            })?;
        let out_h = self.height + 2 * margin;
        let mut out = Image::new(out_w, out_h, self.channels, value)?;
        let count = self.channels.count();
        let row_bytes = self.width as usize * count;
        for y in 0..self.height {
            let src = self.offset(0, y);
            let dst = out.offset(margin, margin + y);
            out.pixels[dst..dst + row_bytes].copy_from_slice(&self.pixels[src..src + row_bytes]);
        }
        Ok(out)
    }

    /// Extracts `region` as a new image: `out(x, y) = in(region.x + x,
    /// region.y + y)`.
    pub fn crop(&self, region: Region) -> Result<Image, Error> {
        region.validate_for(self.width, self.height)?;
        let count = self.channels.count();
        let row_bytes = region.w as usize * count;
        let mut pixels = Vec::with_capacity(row_bytes * region.h as usize);
        for y in region.y..region.y + region.h {
            let src = self.offset(region.x, y);
            pixels.extend_from_slice(&self.pixels[src..src + row_bytes]);
        }
        Ok(Image {
            width: region.w,
            height: region.h,
            channels: self.channels,
            pixels,
        })
    }
}
