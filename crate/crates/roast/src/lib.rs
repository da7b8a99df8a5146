//! Robust JPEG steganography with spatial overflow suppression.
//!
//! The crate operates on grayscale baseline JPEG images at the
//! quantized-DCT-coefficient level and provides:
//!
//! - [`jpeg`]: coefficient-level JPEG reading/writing and quality-factor
//!   scaled quantization tables,
//! - [`transform`]: blockwise DCT/IDCT, the pixel truncation clamp, both
//!   quantizers (nearest and toward-zero), and a bit-exact recompression
//!   channel simulator with per-stage ablation,
//! - [`overflow`]: spatial overflow inspection and the two de-overflow
//!   preprocessing passes (overall scale, specific truncation),
//! - [`cost`]: symmetric base costs plus the asymmetric cost adjustments
//!   used by the embedding schemes,
//! - [`codes`]: GF(2^5) arithmetic, RS(31,15), binary syndrome-trellis
//!   codes and the double-layered ternary construction,
//! - [`schemes`]: the end-to-end embedding/extraction pipelines
//!   (DMAS, GMAS, ROAST-OS, ROAST-ST) and payload accounting.

pub mod codes;
pub mod cost;
pub mod error;
pub mod jpeg;
pub mod overflow;
pub mod schemes;
pub mod transform;

pub use error::{Error, Result};
