use thiserror::Error;

/// Errors produced by image construction and geometry operations.
///
/// Out-of-bounds regions are always reported, never clipped: the sampler
/// guarantees in-bounds regions, so silent clipping would mask sampler bugs.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid image dimensions {width}x{height}")]
    InvalidDimensions { width: u32, height: u32 },
    #[error("unsupported channel count {0} (expected 1 or 3)")]
    UnsupportedChannels(u8),
    #[error("color arity does not match image channel count")]
    ChannelMismatch,
    #[error("pixel buffer length {actual} does not match {expected}")]
    BufferLength { expected: usize, actual: usize },
    #[error("region ({x},{y}) {w}x{h} out of bounds for {width}x{height} image")]
    RegionOutOfBounds {
        x: u32,
        y: u32,
        w: u32,
        h: u32,
        width: u32,
        height: u32,
    },
    #[error("region width and height must be at least 1")]
    EmptyRegion,
    #[error("invalid parameter: {0}")]
    InvalidParams(&'static str),
    #[error("requested crop {out_w}x{out_h} exceeds padded input {width}x{height}")]
    OversizeCrop {
        out_w: u32,
        out_h: u32,
        width: u32,
        height: u32,
    },
}
