//! Baseline JPEG decoder returning stored quantized coefficients.
//!
//! Supports baseline sequential (SOF0), 8-bit, single-component streams with
//! Huffman coding and optional restart markers. Progressive, arithmetic and
//! multi-component streams are rejected as unsupported.

use super::tables::ZIGZAG;
use super::{CoefficientImage, QuantTable};
use crate::error::{Error, Result};

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Canonical Huffman decoding table, walked one bit at a time.
struct HuffTable {
    /// min_code[len-1], max_code[len-1]: code range for each length (or -1).
    min_code: [i32; 16],
    max_code: [i32; 16],
    /// Index of the first value of each length in `values`.
    val_ptr: [usize; 16],
    values: Vec<u8>,
}

impl HuffTable {
    fn new(counts: &[u8; 16], values: Vec<u8>) -> Self {
        let mut min_code = [-1i32; 16];
        let mut max_code = [-1i32; 16];
        let mut val_ptr = [0usize; 16];
        let mut code = 0i32;
        let mut k = 0usize;
        for len in 0..16 {
            let count = counts[len] as usize;
            if count > 0 {
                val_ptr[len] = k;
                min_code[len] = code;
                max_code[len] = code + count as i32 - 1;
                code += count as i32;
                k += count;
            }
            code <<= 1;
        }
        Self { min_code, max_code, val_ptr, values }
    }
}

/// Entropy-segment bit reader: unstuffs FF00, stops at markers.
struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    acc: u32,
    nbits: u8,
    /// Set when a non-RST marker is hit inside the entropy data.
    at_marker: bool,
}

impl<'a> BitReader<'a> {
    fn new(data: &'a [u8], pos: usize) -> Self {
        Self { data, pos, acc: 0, nbits: 0, at_marker: false }
    }

    fn fill(&mut self) -> Result<()> {
        while self.nbits <= 24 {
            if self.at_marker || self.pos >= self.data.len() {
                // Feed zero bits past the end; a conforming stream never
                // consumes them as real data.
                self.acc <<= 8;
                self.nbits += 8;
                continue;
            }
            let byte = self.data[self.pos];
            if byte == 0xFF {
                match self.data.get(self.pos + 1) {
                    Some(0x00) => {
                        self.pos += 2;
                        self.acc = (self.acc << 8) | 0xFF;
                        self.nbits += 8;
                    }
                    _ => {
                        self.at_marker = true;
                        continue;
                    }
                }
            } else {
                self.pos += 1;
                self.acc = (self.acc << 8) | u32::from(byte);
                self.nbits += 8;
            }
        }
        Ok(())
    }

    fn bit(&mut self) -> Result<u32> {
        if self.nbits == 0 {
            self.fill()?;
        }
        self.nbits -= 1;
        Ok((self.acc >> self.nbits) & 1)
    }

    fn bits(&mut self, n: u8) -> Result<u32> {
        let mut v = 0u32;
        for _ in 0..n {
            v = (v << 1) | self.bit()?;
        }
        Ok(v)
    }

    fn decode_symbol(&mut self, table: &HuffTable) -> Result<u8> {
        let mut code = 0i32;
        for len in 0..16 {
            code = (code << 1) | self.bit()? as i32;
            if table.max_code[len] >= 0 && code <= table.max_code[len] && code >= table.min_code[len]
            {
                let idx = table.val_ptr[len] + (code - table.min_code[len]) as usize;
                return Ok(table.values[idx]);
            }
        }
        Err(parse_err("invalid Huffman code"))
    }

    /// Skip to the next marker boundary and consume an expected RST marker.
    fn consume_rst(&mut self, expected: u8) -> Result<()> {
        self.acc = 0;
        self.nbits = 0;
        self.at_marker = false;
        while self.pos + 1 < self.data.len() {
            if self.data[self.pos] == 0xFF {
                let m = self.data[self.pos + 1];
                if (0xD0..=0xD7).contains(&m) {
                    if m != 0xD0 + expected {
                        return Err(parse_err("restart marker out of sequence"));
                    }
                    self.pos += 2;
                    return Ok(());
                }
                return Err(parse_err("expected restart marker"));
            }
            self.pos += 1;
        }
        Err(parse_err("truncated stream at restart interval"))
    }
}

/// JPEG "extend": map `v` in `len` bits to its signed value.
#[inline]
fn extend(v: u32, len: u8) -> i32 {
    if len == 0 {
        return 0;
    }
    let v = v as i32;
    if v < (1 << (len - 1)) {
        v - (1 << len) + 1
    } else {
        v
    }
}

#[derive(Default)]
struct Segments {
    qtables: [Option<[u16; 64]>; 4],
    dc_tables: [Option<HuffTable>; 4],
    ac_tables: [Option<HuffTable>; 4],
    width: u32,
    height: u32,
    component_tq: usize,
    restart_interval: u32,
}

pub(crate) fn decode(data: &[u8]) -> Result<CoefficientImage> {
    if data.len() < 4 || data[0] != 0xFF || data[1] != 0xD8 {
        return Err(parse_err("missing SOI marker"));
    }
    let mut seg = Segments::default();
    let mut pos = 2usize;
    let mut frame_seen = false;

    loop {
        if pos + 1 >= data.len() {
            return Err(parse_err("truncated stream before SOS"));
        }
        if data[pos] != 0xFF {
            return Err(parse_err(format!("expected marker at offset {pos}")));
        }
        let marker = data[pos + 1];
        pos += 2;
        // Standalone markers without a length field.
        if marker == 0xD8 || (0xD0..=0xD7).contains(&marker) {
            continue;
        }
        if marker == 0xD9 {
            return Err(parse_err("EOI before scan data"));
        }
        if pos + 2 > data.len() {
            return Err(parse_err("truncated marker segment"));
        }
        let len = u16::from_be_bytes([data[pos], data[pos + 1]]) as usize;
        if len < 2 || pos + len > data.len() {
            return Err(parse_err("bad segment length"));
        }
        let body = &data[pos + 2..pos + len];
        pos += len;

        match marker {
            0xDB => parse_dqt(body, &mut seg)?,
            0xC4 => parse_dht(body, &mut seg)?,
            0xC0 => {
                parse_sof(body, &mut seg)?;
                frame_seen = true;
            }
            // Any other frame type: progressive, extended, arithmetic, ...
            0xC1 | 0xC2 | 0xC3 | 0xC5 | 0xC6 | 0xC7 | 0xC9 | 0xCA | 0xCB | 0xCD | 0xCE | 0xCF => {
                return Err(Error::UnsupportedFormat(format!(
                    "frame marker 0xFF{marker:02X} (only baseline SOF0 is supported)"
                )));
            }
            0xDD => {
                if body.len() != 2 {
                    return Err(parse_err("bad DRI length"));
                }
                seg.restart_interval = u32::from(u16::from_be_bytes([body[0], body[1]]));
            }
            0xDA => {
                if !frame_seen {
                    return Err(parse_err("SOS before SOF"));
                }
                return decode_scan(data, pos, body, &seg);
            }
            // APPn, COM, and anything else with a length: skip.
            _ => {}
        }
    }
}

fn parse_dqt(mut body: &[u8], seg: &mut Segments) -> Result<()> {
    while !body.is_empty() {
        let pq_tq = body[0];
        let pq = pq_tq >> 4;
        let tq = (pq_tq & 0x0F) as usize;
        if tq > 3 || pq > 1 {
            return Err(parse_err("bad DQT header"));
        }
        let n = if pq == 0 { 64 } else { 128 };
        if body.len() < 1 + n {
            return Err(parse_err("truncated DQT"));
        }
        let mut steps = [0u16; 64];
        for k in 0..64 {
            let v = if pq == 0 {
                u16::from(body[1 + k])
            } else {
                u16::from_be_bytes([body[1 + 2 * k], body[2 + 2 * k]])
            };
            steps[ZIGZAG[k]] = v;
        }
        if steps.iter().any(|&q| q == 0 || q > 255) {
            return Err(parse_err("quantization step outside 1..=255"));
        }
        seg.qtables[tq] = Some(steps);
        body = &body[1 + n..];
    }
    Ok(())
}

fn parse_dht(mut body: &[u8], seg: &mut Segments) -> Result<()> {
    while !body.is_empty() {
        if body.len() < 17 {
            return Err(parse_err("truncated DHT"));
        }
        let tc = body[0] >> 4;
        let th = (body[0] & 0x0F) as usize;
        if tc > 1 || th > 3 {
            return Err(parse_err("bad DHT header"));
        }
        let mut counts = [0u8; 16];
        counts.copy_from_slice(&body[1..17]);
        let total: usize = counts.iter().map(|&c| c as usize).sum();
        if body.len() < 17 + total {
            return Err(parse_err("truncated DHT values"));
        }
        let values = body[17..17 + total].to_vec();
        let table = HuffTable::new(&counts, values);
        if tc == 0 {
            seg.dc_tables[th] = Some(table);
        } else {
            seg.ac_tables[th] = Some(table);
        }
        body = &body[17 + total..];
    }
    Ok(())
}

fn parse_sof(body: &[u8], seg: &mut Segments) -> Result<()> {
    if body.len() < 6 {
        return Err(parse_err("truncated SOF"));
    }
    if body[0] != 8 {
        return Err(Error::UnsupportedFormat("only 8-bit precision supported".into()));
    }
    seg.height = u32::from(u16::from_be_bytes([body[1], body[2]]));
    seg.width = u32::from(u16::from_be_bytes([body[3], body[4]]));
    if seg.width == 0 || seg.height == 0 {
        return Err(parse_err("zero frame dimension"));
    }
    let ncomp = body[5] as usize;
    if ncomp != 1 {
        return Err(Error::UnsupportedFormat(format!(
            "{ncomp} components (only grayscale supported)"
        )));
    }
    if body.len() < 6 + 3 {
        return Err(parse_err("truncated SOF component"));
    }
    let sampling = body[7];
    if sampling != 0x11 {
        return Err(Error::UnsupportedFormat("subsampled grayscale".into()));
    }
    seg.component_tq = (body[8] & 0x0F) as usize;
    Ok(())
}

fn decode_scan(
    data: &[u8],
    pos: usize,
    sos_body: &[u8],
    seg: &Segments,
) -> Result<CoefficientImage> {
    if sos_body.len() < 6 || sos_body[0] != 1 {
        return Err(Error::UnsupportedFormat("scan must cover exactly one component".into()));
    }
    let td = (sos_body[2] >> 4) as usize;
    let ta = (sos_body[2] & 0x0F) as usize;
    let (ss, se) = (sos_body[3], sos_body[4]);
    if ss != 0 || se != 63 {
        return Err(Error::UnsupportedFormat("spectral selection in baseline scan".into()));
    }

    let steps = seg.qtables[seg.component_tq].ok_or_else(|| parse_err("missing DQT"))?;
    let qtable = QuantTable::from_steps(steps)?;
    let dc = seg.dc_tables[td].as_ref().ok_or_else(|| parse_err("missing DC DHT"))?;
    let ac = seg.ac_tables[ta].as_ref().ok_or_else(|| parse_err("missing AC DHT"))?;

    let blocks_w = (seg.width as usize).div_ceil(8);
    let blocks_h = (seg.height as usize).div_ceil(8);
    let nblocks = blocks_w * blocks_h;
    let mut blocks = Vec::with_capacity(nblocks);

    let mut reader = BitReader::new(data, pos);
    let mut pred = 0i32;
    let mut rst_index = 0u8;

    for mcu in 0..nblocks {
        if seg.restart_interval > 0 && mcu > 0 && (mcu as u32) % seg.restart_interval == 0 {
            reader.consume_rst(rst_index)?;
            rst_index = (rst_index + 1) % 8;
            pred = 0;
        }
        let mut block = [0i16; 64];

        let s = reader.decode_symbol(dc)?;
        if s > 11 {
            return Err(parse_err("DC category out of range"));
        }
        let diff = extend(reader.bits(s)?, s);
        pred += diff;
        if !(-1024..=1023).contains(&pred) {
            return Err(parse_err("DC coefficient out of range"));
        }
        block[0] = pred as i16;

        let mut k = 1usize;
        while k < 64 {
            let rs = reader.decode_symbol(ac)?;
            let run = (rs >> 4) as usize;
            let size = rs & 0x0F;
            if size == 0 {
                if rs == 0x00 {
                    break; // EOB
                }
                if rs == 0xF0 {
                    k += 16; // ZRL
                    continue;
                }
                return Err(parse_err("invalid AC symbol"));
            }
            k += run;
            if k >= 64 {
                return Err(parse_err("AC run past end of block"));
            }
            let v = extend(reader.bits(size)?, size);
            if !(-1024..=1023).contains(&v) {
                return Err(parse_err("AC coefficient out of range"));
            }
            block[ZIGZAG[k]] = v as i16;
            k += 1;
        }
        blocks.push(block);
    }

    CoefficientImage::new(seg.width, seg.height, blocks, qtable)
}
