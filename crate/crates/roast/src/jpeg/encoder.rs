//! Baseline JPEG encoder for grayscale coefficient images.
//!
//! Emits JFIF/DQT/SOF0/DHT/SOS segments with the standard luminance Huffman
//! tables and stores the quantized coefficients bit-exactly.

use super::tables::{STD_AC_COUNTS, STD_AC_VALUES, STD_DC_COUNTS, STD_DC_VALUES, ZIGZAG};
use super::CoefficientImage;

/// Canonical Huffman code assignment: symbol -> (code, length).
pub(crate) fn build_codes(counts: &[u8; 16], values: &[u8]) -> [(u16, u8); 256] {
    let mut codes = [(0u16, 0u8); 256];
    let mut code = 0u16;
    let mut k = 0usize;
    for (len_idx, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            codes[values[k] as usize] = (code, len_idx as u8 + 1);
            code += 1;
            k += 1;
        }
        code <<= 1;
    }
    codes
}

struct BitWriter {
    out: Vec<u8>,
    acc: u32,
    nbits: u8,
}

impl BitWriter {
    fn new(out: Vec<u8>) -> Self {
        Self { out, acc: 0, nbits: 0 }
    }

    fn put(&mut self, bits: u16, len: u8) {
        debug_assert!(len <= 16);
        self.acc = (self.acc << len) | u32::from(bits);
        self.nbits += len;
        while self.nbits >= 8 {
            let byte = (self.acc >> (self.nbits - 8)) as u8;
            self.out.push(byte);
            if byte == 0xFF {
                self.out.push(0x00); // byte stuffing
            }
            self.nbits -= 8;
        }
    }

    /// Pad the final partial byte with 1-bits.
    fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            let pad = 8 - self.nbits;
            self.put((1u16 << pad) - 1, pad);
        }
        self.out
    }
}

/// Bit length of |v| (the JPEG category), 0 for v == 0.
#[inline]
fn category(v: i32) -> u8 {
    (32 - v.unsigned_abs().leading_zeros()) as u8
}

/// Magnitude bits: v itself for positive values, v - 1 in `len` low bits for
/// negative ones (one's-complement convention of T.81).
#[inline]
fn magnitude_bits(v: i32, len: u8) -> u16 {
    if v >= 0 {
        v as u16
    } else {
        ((v - 1) & ((1 << len) - 1)) as u16
    }
}

fn push_segment(out: &mut Vec<u8>, marker: u8, payload: &[u8]) {
    out.push(0xFF);
    out.push(marker);
    let len = payload.len() as u16 + 2;
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(payload);
}

pub(crate) fn encode(img: &CoefficientImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.block_count() * 24);
    out.extend_from_slice(&[0xFF, 0xD8]); // SOI

    // APP0: JFIF 1.1, no density, no thumbnail.
    push_segment(
        &mut out,
        0xE0,
        &[b'J', b'F', b'I', b'F', 0, 1, 1, 0, 0, 1, 0, 1, 0, 0],
    );

    // DQT: table 0, 8-bit precision, zigzag order.
    let mut dqt = Vec::with_capacity(65);
    dqt.push(0x00);
    for k in 0..64 {
        dqt.push(img.qtable().steps()[ZIGZAG[k]] as u8);
    }
    push_segment(&mut out, 0xDB, &dqt);

    // SOF0: 8-bit, one component, 1x1 sampling, quant table 0.
    let mut sof = Vec::with_capacity(11);
    sof.push(8);
    sof.extend_from_slice(&(img.height() as u16).to_be_bytes());
    sof.extend_from_slice(&(img.width() as u16).to_be_bytes());
    sof.extend_from_slice(&[1, 1, 0x11, 0]);
    push_segment(&mut out, 0xC0, &sof);

    // DHT: standard luminance DC (class 0) and AC (class 1) tables.
    let mut dht = Vec::new();
    dht.push(0x00);
    dht.extend_from_slice(&STD_DC_COUNTS);
    dht.extend_from_slice(&STD_DC_VALUES);
    dht.push(0x10);
    dht.extend_from_slice(&STD_AC_COUNTS);
    dht.extend_from_slice(&STD_AC_VALUES);
    push_segment(&mut out, 0xC4, &dht);

    // SOS: one component, DC/AC table 0, full spectral range.
    push_segment(&mut out, 0xDA, &[1, 1, 0x00, 0, 63, 0]);

    let dc_codes = build_codes(&STD_DC_COUNTS, &STD_DC_VALUES);
    let ac_codes = build_codes(&STD_AC_COUNTS, &STD_AC_VALUES);

    let mut bw = BitWriter::new(out);
    let mut pred = 0i32;
    for block in img.blocks() {
        // DC: differential category + magnitude bits.
        let dc = i32::from(block[0]);
        let diff = dc - pred;
        pred = dc;
        let s = category(diff);
        let (code, len) = dc_codes[s as usize];
        bw.put(code, len);
        if s > 0 {
            bw.put(magnitude_bits(diff, s), s);
        }

        // AC: run-length of zeros in zigzag order, ZRL for 16 zeros, EOB.
        let mut run = 0u8;
        for k in 1..64 {
            let v = i32::from(block[ZIGZAG[k]]);
            if v == 0 {
                run += 1;
                continue;
            }
            while run >= 16 {
                let (code, len) = ac_codes[0xF0];
                bw.put(code, len);
                run -= 16;
            }
            let s = category(v);
            let (code, len) = ac_codes[((run << 4) | s) as usize];
            debug_assert!(len > 0, "missing AC code for run {run} size {s}");
            bw.put(code, len);
            bw.put(magnitude_bits(v, s), s);
            run = 0;
        }
        if run > 0 {
            let (code, len) = ac_codes[0x00];
            bw.put(code, len);
        }
    }
    let mut out = bw.finish();
    out.extend_from_slice(&[0xFF, 0xD9]); // EOI
    out
}
