//! Deterministic image-augmentation core: pixel buffers, a seeded random
//! stream with a fixed public algorithm, the rectangular erase-region
//! sampler, the user-facing randomized transforms, bounding-box-aware
//! erasing schemes for detection data, and the Monte-Carlo / numeric-oracle
//! machinery that validates the sampler's distributional behavior.
//!
//! The crate is `no_std` (with `alloc`). Everything here is pure: images go
//! in by reference and come out fresh, and all randomness flows through an
//! explicitly seeded [`RngStream`], so any result can be reproduced from a
//! 64-bit seed alone. File formats, parallel batch execution, and the CLI
//! live in the companion `erasekit` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod detection;
pub mod error;
pub mod image;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod transforms;

pub use error::Error;
pub use image::{Channels, Color, Image, Region};
pub use rng::{derive_seed, RngStream};
pub use sampler::{EraseParams, SampleOutcome};
pub use transforms::FillMode;
