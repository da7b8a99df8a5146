//! Blockwise 8x8 DCT/IDCT, quantizers, the pixel truncation clamp, the
//! recompression channel simulator with per-stage ablation, and receiver-side
//! coefficient restoration.
//!
//! Transforms use the T.81 orthonormal convention (prefactor 1/4,
//! C(0) = 1/sqrt(2), C(u) = 1 otherwise) in double precision, so
//! `idct2(dct2(x))` is the identity to ~1e-12. Rounding is always
//! half-away-from-zero.

use crate::jpeg::{build_qtable, CoefficientImage, PixelImage, QuantTable};
use crate::Result;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Level-shifted spatial values of one block (nominal range -128..=127,
/// overflow allowed).
pub type SpatialBlock = [f64; 64];
/// Unquantized DCT coefficients of one block.
pub type DctBlock = [f64; 64];

/// Which lossy spatial stages the channel simulator applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AblationFlags {
    pub apply_truncation: bool,
    pub apply_rounding: bool,
}

impl Default for AblationFlags {
    fn default() -> Self {
        Self { apply_truncation: true, apply_rounding: true }
    }
}

impl AblationFlags {
    pub const NONE: AblationFlags = AblationFlags { apply_truncation: false, apply_rounding: false };
}

/// 1-D orthonormal DCT-II basis: BASIS[u][i] = 1/2 C(u) cos((2i+1) u pi / 16).
fn basis() -> &'static [[f64; 8]; 8] {
    use std::sync::OnceLock;
    static BASIS: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut b = [[0.0; 8]; 8];
        for (u, row) in b.iter_mut().enumerate() {
            let c = if u == 0 { (0.5f64).sqrt() } else { 1.0 };
            for (i, v) in row.iter_mut().enumerate() {
                *v = 0.5 * c * (((2 * i + 1) as f64) * (u as f64) * std::f64::consts::PI / 16.0).cos();
            }
        }
        b
    })
}

/// Forward 2-D DCT-II of one block.
pub fn dct2(spatial: &SpatialBlock) -> DctBlock {
    let b = basis();
    // rows: tmp[u][j] = sum_i basis[u][i] * s[i][j]
    let mut tmp = [0.0f64; 64];
    for u in 0..8 {
        for j in 0..8 {
            let mut acc = 0.0;
            for i in 0..8 {
                acc += b[u][i] * spatial[i * 8 + j];
            }
            tmp[u * 8 + j] = acc;
        }
    }
    let mut out = [0.0f64; 64];
    for u in 0..8 {
        for v in 0..8 {
            let mut acc = 0.0;
            for j in 0..8 {
                acc += b[v][j] * tmp[u * 8 + j];
            }
            out[u * 8 + v] = acc;
        }
    }
    out
}

/// Inverse 2-D DCT of one block.
pub fn idct2(coeffs: &DctBlock) -> SpatialBlock {
    let b = basis();
    let mut tmp = [0.0f64; 64];
    for i in 0..8 {
        for v in 0..8 {
            let mut acc = 0.0;
            for u in 0..8 {
                acc += b[u][i] * coeffs[u * 8 + v];
            }
            tmp[i * 8 + v] = acc;
        }
    }
    let mut out = [0.0f64; 64];
    for i in 0..8 {
        for j in 0..8 {
            let mut acc = 0.0;
            for v in 0..8 {
                acc += b[v][j] * tmp[i * 8 + v];
            }
            out[i * 8 + j] = acc;
        }
    }
    out
}

/// Truncation of a spatial value to [-128, 127].
#[inline]
pub fn tru(x: f64) -> f64 {
    x.clamp(-128.0, 127.0)
}

/// Dequantize stored coefficients: elementwise d * q.
pub fn dequantize(block: &[i16; 64], qtable: &QuantTable) -> DctBlock {
    let mut out = [0.0f64; 64];
    for (k, o) in out.iter_mut().enumerate() {
        *o = f64::from(block[k]) * f64::from(qtable.steps()[k]);
    }
    out
}

#[inline]
fn coeff_min(k: usize) -> f64 {
    // AC magnitudes are capped at 1023 by the baseline coding model; only
    // the DC coefficient reaches -1024.
    if k == 0 {
        -1024.0
    } else {
        -1023.0
    }
}

/// Nearest-integer quantization (half away from zero), clamped to the
/// storable coefficient range.
pub fn quantize_round(coeffs: &DctBlock, qtable: &QuantTable) -> [i16; 64] {
    let mut out = [0i16; 64];
    for (k, o) in out.iter_mut().enumerate() {
        let q = f64::from(qtable.steps()[k]);
        *o = (coeffs[k] / q).round().clamp(coeff_min(k), 1023.0) as i16;
    }
    out
}

/// Toward-zero quantization: floor for nonnegative quotients, ceil for
/// negative ones. Never increases coefficient magnitude.
pub fn fix_quantize(coeffs: &DctBlock, qtable: &QuantTable) -> [i16; 64] {
    let mut out = [0i16; 64];
    for (k, o) in out.iter_mut().enumerate() {
        let q = f64::from(qtable.steps()[k]);
        *o = (coeffs[k] / q).trunc().clamp(coeff_min(k), 1023.0) as i16;
    }
    out
}

/// Simulate channel JPEG recompression of a coefficient image to
/// `target_qf`: dequantize, IDCT, truncation and rounding (each skippable),
/// forward DCT, requantize with the target table.
pub fn recompress(
    img: &CoefficientImage,
    target_qf: u8,
    flags: AblationFlags,
) -> Result<CoefficientImage> {
    let target = build_qtable(target_qf)?;
    let mut blocks = Vec::with_capacity(img.block_count());
    for block in img.blocks() {
        let mut spatial = idct2(&dequantize(block, img.qtable()));
        for s in spatial.iter_mut() {
            if flags.apply_truncation {
                *s = tru(*s);
            }
            if flags.apply_rounding {
                *s = s.round();
            }
        }
        blocks.push(quantize_round(&dct2(&spatial), &target));
    }
    CoefficientImage::new(img.width(), img.height(), blocks, target)
}

/// Receiver-side restoration: level-shift the pixels, forward DCT per block,
/// quantize with the embedding-time table.
pub fn restore_coefficients(pixels: &PixelImage, qtable: &QuantTable) -> Result<CoefficientImage> {
    let w = pixels.width() as usize;
    let h = pixels.height() as usize;
    let bw = w.div_ceil(8);
    let bh = h.div_ceil(8);
    let mut blocks = Vec::with_capacity(bw * bh);
    for by in 0..bh {
        for bx in 0..bw {
            let mut spatial = [0.0f64; 64];
            for i in 0..8 {
                // Replicate-pad the bottom/right edge.
                let y = (by * 8 + i).min(h - 1);
                for j in 0..8 {
                    let x = (bx * 8 + j).min(w - 1);
                    spatial[i * 8 + j] = f64::from(pixels.pixel(x as u32, y as u32)) - 128.0;
                }
            }
            blocks.push(quantize_round(&dct2(&spatial), qtable));
        }
    }
    CoefficientImage::new(pixels.width(), pixels.height(), blocks, qtable.clone())
}

/// One sampled spatial rounding-error block and its DCT image.
#[derive(Debug, Clone)]
pub struct RoundingErrorBlock {
    pub spatial: SpatialBlock,
    pub dct: DctBlock,
}

impl RoundingErrorBlock {
    /// Sample per-pixel errors i.i.d. uniform on [-0.5, 0.5).
    pub fn sample(rng: &mut impl Rng) -> Self {
        let mut spatial = [0.0f64; 64];
        for e in spatial.iter_mut() {
            *e = rng.gen_range(-0.5..0.5);
        }
        let dct = dct2(&spatial);
        Self { spatial, dct }
    }
}

/// Monte-Carlo estimate of the probability that a spatial rounding error
/// block leaves a coefficient quantized with step `q` unchanged.
#[derive(Debug, Clone, Copy)]
pub struct SurvivalEstimate {
    pub q: u16,
    pub probability: f64,
    pub std_error: f64,
}

/// Estimate P{ [w/q] = 0 } for each step in `qs` over `trials` random
/// rounding-error blocks (all 64 DCT positions counted per block). The
/// standard error is computed from the per-block survival fractions.
pub fn rounding_survival_table(qs: &[u16], trials: u64, seed: u64) -> Vec<SurvivalEstimate> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut sum = vec![0.0f64; qs.len()];
    let mut sum_sq = vec![0.0f64; qs.len()];
    for _ in 0..trials {
        let block = RoundingErrorBlock::sample(&mut rng);
        for (qi, &q) in qs.iter().enumerate() {
            let half = f64::from(q) / 2.0;
            let hits = block.dct.iter().filter(|w| w.abs() < half).count();
            let frac = hits as f64 / 64.0;
            sum[qi] += frac;
            sum_sq[qi] += frac * frac;
        }
    }
    let n = trials as f64;
    qs.iter()
        .enumerate()
        .map(|(qi, &q)| {
            let mean = sum[qi] / n;
            let var = (sum_sq[qi] / n - mean * mean).max(0.0);
            SurvivalEstimate { q, probability: mean, std_error: (var / n).sqrt() }
        })
        .collect()
}

/// Single-step convenience wrapper around [`rounding_survival_table`].
pub fn rounding_survival_probability(q: u16, trials: u64, seed: u64) -> SurvivalEstimate {
    rounding_survival_table(&[q], trials, seed)[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jpeg::build_qtable;

    #[test]
    fn flat_block_transforms_to_pure_dc() {
        let spatial = [8.0f64; 64];
        let coeffs = dct2(&spatial);
        assert!((coeffs[0] - 64.0).abs() < 1e-12);
        assert!(coeffs[1..].iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn zero_block_transforms_to_zero() {
        let coeffs = dct2(&[0.0; 64]);
        assert!(coeffs.iter().all(|c| c.abs() == 0.0));
    }

    #[test]
    fn dc_only_inverts_to_flat() {
        let mut coeffs = [0.0f64; 64];
        coeffs[0] = 64.0;
        let spatial = idct2(&coeffs);
        assert!(spatial.iter().all(|s| (s - 8.0).abs() < 1e-12));
    }

    #[test]
    fn single_basis_coefficient_reproduces_basis_shape() {
        let mut coeffs = [0.0f64; 64];
        coeffs[1 * 8 + 2] = 1.0;
        let spatial = idct2(&coeffs);
        for i in 0..8 {
            for j in 0..8 {
                let expected = 0.25
                    * (((2 * i + 1) as f64) * std::f64::consts::PI / 16.0).cos()
                    * (((2 * j + 1) as f64) * 2.0 * std::f64::consts::PI / 16.0).cos();
                assert!((spatial[i * 8 + j] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn truncation_branches() {
        assert_eq!(tru(130.0), 127.0);
        assert_eq!(tru(-200.0), -128.0);
        assert_eq!(tru(5.0), 5.0);
    }

    #[test]
    fn round_quantizer_ties_away_from_zero() {
        let qt = crate::jpeg::QuantTable::from_steps([10u16; 64]).unwrap();
        let mut coeffs = [0.0f64; 64];
        coeffs[0] = 34.0;
        coeffs[1] = 35.0;
        coeffs[2] = -35.0;
        let q = quantize_round(&coeffs, &qt);
        assert_eq!(q[0], 3);
        assert_eq!(q[1], 4);
        assert_eq!(q[2], -4);
    }

    #[test]
    fn fix_quantizer_moves_toward_zero() {
        let qt = crate::jpeg::QuantTable::from_steps([10u16; 64]).unwrap();
        let mut coeffs = [0.0f64; 64];
        coeffs[0] = 37.0; // 3.7
        coeffs[1] = -37.0; // -3.7
        coeffs[2] = 40.0; // exactly 4
        let q = fix_quantize(&coeffs, &qt);
        assert_eq!(q[0], 3);
        assert_eq!(q[1], -3);
        assert_eq!(q[2], 4);
    }

    #[test]
    fn recompress_requantizes_single_coefficient() {
        // d=2 at q1=10 gives dq=20; at q2=7 the nearest integer is 3.
        let q1 = crate::jpeg::QuantTable::from_steps([10u16; 64]).unwrap();
        let mut block = [0i16; 64];
        block[9] = 2;
        let img = CoefficientImage::new(8, 8, vec![block], q1).unwrap();
        let out = recompress_with_table(&img, [7u16; 64], AblationFlags::NONE);
        assert_eq!(out.block(0)[9], 3);
    }

    // Test-only channel that takes a raw table rather than a quality factor.
    fn recompress_with_table(
        img: &CoefficientImage,
        steps: [u16; 64],
        flags: AblationFlags,
    ) -> CoefficientImage {
        let target = crate::jpeg::QuantTable::from_steps(steps).unwrap();
        let mut blocks = Vec::with_capacity(img.block_count());
        for block in img.blocks() {
            let mut spatial = idct2(&dequantize(block, img.qtable()));
            for s in spatial.iter_mut() {
                if flags.apply_truncation {
                    *s = tru(*s);
                }
                if flags.apply_rounding {
                    *s = s.round();
                }
            }
            blocks.push(quantize_round(&dct2(&spatial), &target));
        }
        CoefficientImage::new(img.width(), img.height(), blocks, target).unwrap()
    }

    #[test]
    fn identity_channel_preserves_coefficients() {
        let qt = build_qtable(65).unwrap();
        let mut block = [0i16; 64];
        block[0] = 5;
        block[9] = -3;
        block[18] = 7;
        let img = CoefficientImage::new(8, 8, vec![block], qt.clone()).unwrap();
        let out = recompress_with_table(&img, *qt.steps(), AblationFlags::NONE);
        assert_eq!(out.block(0), img.block(0));
    }

    #[test]
    fn restore_recovers_divisible_requantization() {
        // q2 divides q1 elementwise: recompression stores d*q1/q2 exactly and
        // restoration with q1 returns d.
        let q1 = crate::jpeg::QuantTable::from_steps([12u16; 64]).unwrap();
        let mut block = [0i16; 64];
        block[0] = -9;
        block[10] = 4;
        block[63] = 81;
        let img = CoefficientImage::new(8, 8, vec![block], q1.clone()).unwrap();
        let attacked = recompress_with_table(&img, [4u16; 64], AblationFlags::NONE);
        for k in 0..64 {
            assert_eq!(i32::from(attacked.block(0)[k]) * 4, i32::from(block[k]) * 12);
        }
        // Restore through the f64 block path.
        let restored = quantize_round(
            &dct2(&idct2(&dequantize(attacked.block(0), attacked.qtable()))),
            &q1,
        );
        assert_eq!(&restored, img.block(0));
    }

    #[test]
    fn restore_of_flat_pixels_is_zero() {
        let px = PixelImage::new(16, 16, vec![128u8; 256]).unwrap();
        let qt = build_qtable(65).unwrap();
        let img = restore_coefficients(&px, &qt).unwrap();
        assert!(img.blocks().iter().all(|b| b.iter().all(|&d| d == 0)));
    }

    #[test]
    fn restore_inverts_decode_without_overflow_or_tiny_steps() {
        // Coefficients small enough to avoid spatial overflow, steps >= 3 so
        // pixel rounding cannot move any restored coefficient.
        let qt = crate::jpeg::QuantTable::from_steps([8u16; 64]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut blocks = Vec::new();
        for _ in 0..16 {
            let mut b = [0i16; 64];
            for d in b.iter_mut() {
                *d = rng.gen_range(-4..=4);
            }
            b[0] = rng.gen_range(-40..=40);
            blocks.push(b);
        }
        let img = CoefficientImage::new(32, 32, blocks, qt.clone()).unwrap();
        let px = crate::jpeg::decode_to_pixels(&img);
        let restored = restore_coefficients(&px, &qt).unwrap();
        assert_eq!(restored.blocks(), img.blocks());
    }

    #[test]
    fn survival_estimates_match_gaussian_model() {
        let table = rounding_survival_table(&[1, 2, 3], 200_000, 42);
        assert!((table[0].probability - 0.9160).abs() < 0.005, "{:?}", table[0]);
        assert!((table[1].probability - 0.9995).abs() < 0.001, "{:?}", table[1]);
        assert!(table[2].probability >= 0.9999, "{:?}", table[2]);
    }

    #[test]
    fn survival_is_deterministic_per_seed() {
        let a = rounding_survival_probability(2, 5_000, 9);
        let b = rounding_survival_probability(2, 5_000, 9);
        assert_eq!(a.probability, b.probability);
    }
}
