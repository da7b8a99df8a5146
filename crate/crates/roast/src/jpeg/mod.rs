//! Grayscale baseline JPEG at the quantized-DCT-coefficient level.
//!
//! Reading returns the exact stored coefficients (no IDCT), writing emits a
//! standards-conformant baseline JPEG storing exactly the given coefficients,
//! and quantization tables are derived from a quality factor with the
//! standard IJG scaling of the Annex-K luminance base table.

mod decoder;
mod encoder;
pub mod tables;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::transform;

pub use tables::ZIGZAG;

/// 8x8 quantization table plus the quality factor it was built from, when
/// known. Tables read from foreign files keep `quality_factor == None`
/// unless they match a scaled standard table exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantTable {
    steps: [u16; 64],
    quality_factor: Option<u8>,
}

impl QuantTable {
    /// Wrap a raw table, detecting the quality factor by exact match
    /// against the scaled standard table.
    pub fn from_steps(steps: [u16; 64]) -> Result<Self> {
        if steps.iter().any(|&q| q == 0 || q > 255) {
            return Err(Error::Parse("quantization step outside 1..=255".into()));
        }
        let quality_factor = (1..=100).find(|&qf| scaled_steps(qf) == steps);
        Ok(Self { steps, quality_factor })
    }

    /// Step at frequency position (u, v), u = row, v = column.
    #[inline]
    pub fn step(&self, u: usize, v: usize) -> u16 {
        self.steps[u * 8 + v]
    }

    #[inline]
    pub fn steps(&self) -> &[u16; 64] {
        &self.steps
    }

    pub fn quality_factor(&self) -> Option<u8> {
        self.quality_factor
    }
}

/// Scale the Annex-K base table with the IJG rule.
fn scaled_steps(quality_factor: u8) -> [u16; 64] {
    let qf = u32::from(quality_factor);
    let scale = if qf < 50 { 5000 / qf } else { 200 - 2 * qf };
    let mut steps = [0u16; 64];
    for (s, &base) in steps.iter_mut().zip(tables::BASE_LUMA_QTABLE.iter()) {
        *s = ((u32::from(base) * scale + 50) / 100).clamp(1, 255) as u16;
    }
    steps
}

/// Build the luminance quantization table for a quality factor in 1..=100.
pub fn build_qtable(quality_factor: u8) -> Result<QuantTable> {
    if !(1..=100).contains(&quality_factor) {
        return Err(Error::InvalidParameter(format!(
            "quality factor {quality_factor} outside 1..=100"
        )));
    }
    Ok(QuantTable {
        steps: scaled_steps(quality_factor),
        quality_factor: Some(quality_factor),
    })
}

/// Quantized DCT coefficients of a grayscale image: an 8x8 block grid plus
/// the quantization table they are stored under. Block grid dimensions are
/// `ceil(width/8) x ceil(height/8)`; edge blocks cover replicate-padded
/// pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientImage {
    width: u32,
    height: u32,
    blocks_w: usize,
    blocks_h: usize,
    blocks: Vec<[i16; 64]>,
    qtable: QuantTable,
}

impl CoefficientImage {
    pub fn new(width: u32, height: u32, blocks: Vec<[i16; 64]>, qtable: QuantTable) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("zero image dimension".into()));
        }
        let blocks_w = (width as usize).div_ceil(8);
        let blocks_h = (height as usize).div_ceil(8);
        if blocks.len() != blocks_w * blocks_h {
            return Err(Error::InvalidParameter(format!(
                "expected {} blocks, got {}",
                blocks_w * blocks_h,
                blocks.len()
            )));
        }
        for block in &blocks {
            // DC spans the full 11-bit range; AC magnitudes are capped at
            // 1023 by the baseline Huffman coding model.
            if !(-1024..=1023).contains(&block[0])
                || block[1..].iter().any(|&d| !(-1023..=1023).contains(&d))
            {
                return Err(Error::InvalidParameter(
                    "coefficient outside the storable range".into(),
                ));
            }
        }
        Ok(Self { width, height, blocks_w, blocks_h, blocks, qtable })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn blocks_wide(&self) -> usize {
        self.blocks_w
    }

    pub fn blocks_tall(&self) -> usize {
        self.blocks_h
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    #[inline]
    pub fn block(&self, idx: usize) -> &[i16; 64] {
        &self.blocks[idx]
    }

    #[inline]
    pub fn block_mut(&mut self, idx: usize) -> &mut [i16; 64] {
        &mut self.blocks[idx]
    }

    pub fn blocks(&self) -> &[[i16; 64]] {
        &self.blocks
    }

    pub fn qtable(&self) -> &QuantTable {
        &self.qtable
    }

    /// Count of nonzero AC coefficients (DC position excluded).
    pub fn nonzero_ac_count(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| b[1..].iter().filter(|&&d| d != 0).count())
            .sum()
    }

    /// Number of coefficients that differ from `other`. Images must have the
    /// same block grid.
    pub fn count_changes(&self, other: &CoefficientImage) -> usize {
        assert_eq!(self.blocks.len(), other.blocks.len());
        self.blocks
            .iter()
            .zip(other.blocks.iter())
            .map(|(a, b)| a.iter().zip(b.iter()).filter(|(x, y)| x != y).count())
            .sum()
    }
}

/// Decoded 8-bit grayscale pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl PixelImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != (width as usize) * (height as usize) {
            return Err(Error::InvalidParameter("pixel buffer size mismatch".into()));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> u8 {
        self.pixels[(y * self.width + x) as usize]
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Write as binary PGM (P5), for debugging.
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        out.write_all(&self.pixels)?;
        Ok(())
    }
}

/// Read a baseline sequential, 8-bit, single-component JPEG, returning the
/// exact stored quantized coefficients.
pub fn read_jpeg(path: impl AsRef<Path>) -> Result<CoefficientImage> {
    let data = std::fs::read(path)?;
    decoder::decode(&data)
}

/// Decode from an in-memory JPEG stream.
pub fn decode_jpeg(data: &[u8]) -> Result<CoefficientImage> {
    decoder::decode(data)
}

/// Write a baseline JPEG storing exactly the given coefficients and table.
pub fn write_jpeg(img: &CoefficientImage, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encoder::encode(img);
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Encode to an in-memory JPEG stream.
pub fn encode_jpeg(img: &CoefficientImage) -> Vec<u8> {
    encoder::encode(img)
}

/// Full pixel decode: dequantize, IDCT, truncate to the spatial range,
/// round, shift by +128.
pub fn decode_to_pixels(img: &CoefficientImage) -> PixelImage {
    let w = img.width as usize;
    let h = img.height as usize;
    let mut pixels = vec![0u8; w * h];
    for by in 0..img.blocks_h {
        for bx in 0..img.blocks_w {
            let block = img.block(by * img.blocks_w + bx);
            let spatial = transform::idct2(&transform::dequantize(block, &img.qtable));
            for i in 0..8 {
                let y = by * 8 + i;
                if y >= h {
                    break;
                }
                for j in 0..8 {
                    let x = bx * 8 + j;
                    if x >= w {
                        break;
                    }
                    let s = transform::tru(spatial[i * 8 + j]).round();
                    pixels[y * w + x] = (s + 128.0) as u8;
                }
            }
        }
    }
    PixelImage { width: img.width, height: img.height, pixels }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qtable_qf50_is_base_table() {
        let qt = build_qtable(50).unwrap();
        assert_eq!(qt.steps(), &tables::BASE_LUMA_QTABLE);
    }

    #[test]
    fn qtable_qf100_is_all_ones() {
        let qt = build_qtable(100).unwrap();
        assert!(qt.steps().iter().all(|&q| q == 1));
    }

    #[test]
    fn qtable_qf65_dc_step() {
        // floor((16*70 + 50)/100) = 11 for the DC base value 16.
        let qt = build_qtable(65).unwrap();
        assert_eq!(qt.step(0, 0), 11);
    }

    #[test]
    fn qtable_rejects_out_of_range_qf() {
        assert!(build_qtable(0).is_err());
        assert!(build_qtable(101).is_err());
    }

    #[test]
    fn qtable_monotone_in_quality() {
        let mut prev = build_qtable(1).unwrap();
        for qf in 2..=100 {
            let cur = build_qtable(qf).unwrap();
            for k in 0..64 {
                assert!(cur.steps()[k] <= prev.steps()[k], "qf {qf} pos {k}");
            }
            prev = cur;
        }
    }

    #[test]
    fn qf_detected_from_steps() {
        let qt = QuantTable::from_steps(*build_qtable(65).unwrap().steps()).unwrap();
        assert_eq!(qt.quality_factor(), Some(65));
        let mut odd = [17u16; 64];
        odd[0] = 13;
        let qt = QuantTable::from_steps(odd).unwrap();
        assert_eq!(qt.quality_factor(), None);
    }

    #[test]
    fn zero_coefficients_decode_to_mid_gray() {
        let qt = build_qtable(65).unwrap();
        let img = CoefficientImage::new(16, 16, vec![[0i16; 64]; 4], qt).unwrap();
        let px = decode_to_pixels(&img);
        assert!(px.pixels().iter().all(|&p| p == 128));
    }

    #[test]
    fn flat_dc_block_decodes_to_constant() {
        // Dequantized DC of 64 gives a flat spatial block of 64/8 = 8,
        // i.e. pixel value 136.
        let qt = build_qtable(100).unwrap(); // all steps 1
        let mut block = [0i16; 64];
        block[0] = 64;
        let img = CoefficientImage::new(8, 8, vec![block], qt).unwrap();
        let px = decode_to_pixels(&img);
        assert!(px.pixels().iter().all(|&p| p == 136));
    }

    #[test]
    fn overflowing_block_clamps_to_255() {
        // Dequantized DC of 1100 gives flat 137.5 > 127; the truncation
        // clamp fires before rounding.
        let qt = build_qtable(100).unwrap();
        let mut block = [0i16; 64];
        block[0] = 1023;
        let img = CoefficientImage::new(8, 8, vec![block], qt).unwrap();
        let px = decode_to_pixels(&img);
        assert!(px.pixels().iter().all(|&p| p == 255));
    }

    #[test]
    fn pixel_range_always_valid() {
        // Decode of random coefficients stays in 0..=255 by construction
        // (u8), but must also hit both clamp branches without panicking.
        let qt = build_qtable(1).unwrap();
        let mut blocks = vec![[0i16; 64]; 2];
        blocks[0][0] = 1023;
        blocks[1][0] = -1024;
        let img = CoefficientImage::new(16, 8, blocks, qt).unwrap();
        let px = decode_to_pixels(&img);
        assert_eq!(px.pixel(0, 0), 255);
        assert_eq!(px.pixel(8, 0), 0);
    }
}
