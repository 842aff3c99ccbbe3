//! GIF-flavoured LZW.
//!
//! Codes start `min_code_size + 1` bits wide and grow to at most 12. The
//! stream opens with a clear code, and a clear is emitted whenever the
//! 4096-entry table fills. Codes are packed least-significant bit first.
//! Splitting into 255-byte sub-blocks is the container's job.

use std::collections::HashMap;

use crate::error::ensure;
use crate::{Error, Result};

pub const MAX_CODE_BITS: u32 = 12;
const TABLE_LIMIT: u16 = 1 << MAX_CODE_BITS;

struct BitWriter {
    out: Vec<u8>,
    acc: u32,
    nbits: u32,
}

impl BitWriter {
    fn new() -> Self {
        Self {
            out: Vec::new(),
            acc: 0,
            nbits: 0,
        }
    }

    fn push(&mut self, code: u16, width: u32) {
        debug_assert!(width <= MAX_CODE_BITS && (code as u32) < (1 << width));
        self.acc |= (code as u32) << self.nbits;
        self.nbits += width;
        while self.nbits >= 8 {
            self.out.push(self.acc as u8);
            self.acc >>= 8;
            self.nbits -= 8;
        }
    }

    fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            self.out.push(self.acc as u8);
        }
        self.out
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    acc: u32,
    nbits: u32,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self {
            bytes,
            pos: 0,
            acc: 0,
            nbits: 0,
        }
    }

    fn read(&mut self, width: u32) -> Option<u16> {
        while self.nbits < width {
            let b = *self.bytes.get(self.pos)?;
            self.pos += 1;
            self.acc |= (b as u32) << self.nbits;
            self.nbits += 8;
        }
        let code = (self.acc & ((1 << width) - 1)) as u16;
        self.acc >>= width;
        self.nbits -= width;
        Some(code)
    }
}

fn check_code_size(min_code_size: u8) -> Result<()> {
    ensure!(
        (2..=8).contains(&min_code_size),
        InvalidArgument,
        "LZW minimum code size {} outside 2..=8",
        min_code_size
    );
    Ok(())
}

/// Compresses palette indices. Every index must be `< 2^min_code_size`.
pub fn lzw_encode(indices: &[u8], min_code_size: u8) -> Result<Vec<u8>> {
    check_code_size(min_code_size)?;
    let clear: u16 = 1 << min_code_size;
    let end = clear + 1;
    if let Some(bad) = indices.iter().find(|&&i| (i as u16) >= clear) {
        return Err(Error::Encode(format!(
            "index {} does not fit {} bits",
            bad, min_code_size
        )));
    }

    let mut w = BitWriter::new();
    let mut width = min_code_size as u32 + 1;
    let mut next = end + 1;
    let mut table: HashMap<(u16, u8), u16> = HashMap::new();
    w.push(clear, width);

    let Some((&first, rest)) = indices.split_first() else {
        w.push(end, width);
        return Ok(w.finish());
    };
    let mut cur = first as u16;
    for &s in rest {
        if let Some(&code) = table.get(&(cur, s)) {
            cur = code;
            continue;
        }
        w.push(cur, width);
        if next < TABLE_LIMIT {
            table.insert((cur, s), next);
            next += 1;
            if next as u32 > (1 << width) && width < MAX_CODE_BITS {
                width += 1;
            }
        } else {
            w.push(clear, width);
            table.clear();
            width = min_code_size as u32 + 1;
            next = end + 1;
        }
        cur = s as u16;
    }
    w.push(cur, width);
    // The decoder counts the final code as if it created an entry; mirror
    // that so the end code is read at the width it was written with.
    if next < TABLE_LIMIT {
        next += 1;
        if next as u32 > (1 << width) && width < MAX_CODE_BITS {
            width += 1;
        }
    }
    w.push(end, width);
    Ok(w.finish())
}

/// Inverse of [`lzw_encode`].
pub fn lzw_decode(bytes: &[u8], min_code_size: u8) -> Result<Vec<u8>> {
    check_code_size(min_code_size)?;
    let clear: u16 = 1 << min_code_size;
    let end = clear + 1;
    let mut reader = BitReader::new(bytes);
    let mut width = min_code_size as u32 + 1;
    // (prefix code, last byte, first byte); roots have prefix u16::MAX.
    let mut table: Vec<(u16, u8, u8)> = Vec::with_capacity(TABLE_LIMIT as usize);
    let reset = |table: &mut Vec<(u16, u8, u8)>| {
        table.clear();
        table.extend((0..clear).map(|i| (u16::MAX, i as u8, i as u8)));
        table.push((u16::MAX, 0, 0));
        table.push((u16::MAX, 0, 0));
    };
    reset(&mut table);

    let mut out = Vec::new();
    let mut prev: Option<u16> = None;
    let mut scratch = Vec::new();
    loop {
        let code = reader
            .read(width)
            .ok_or_else(|| Error::Decode("stream ended before the end code".into()))?;
        if code == clear {
            reset(&mut table);
            width = min_code_size as u32 + 1;
            prev = None;
            continue;
        }
        if code == end {
            return Ok(out);
        }
        let next = table.len() as u16;
        match prev {
            None => {
                ensure!(
                    code < clear,
                    Decode,
                    "first code after clear is {} (not a literal)",
                    code
                );
                out.push(code as u8);
            }
            Some(p) => {
                ensure!(
                    code <= next,
                    Decode,
                    "code {} beyond next free slot {}",
                    code,
                    next
                );
                let first = if code < next {
                    table[code as usize].2
                } else {
                    table[p as usize].2
                };
                if next < TABLE_LIMIT {
                    table.push((p, first, table[p as usize].2));
                }
                if code == next && next >= TABLE_LIMIT {
                    return Err(Error::Decode(
                        "reference to an entry past a full table".into(),
                    ));
                }
                scratch.clear();
                let mut c = code;
                loop {
                    let (prefix, byte, _) = table[c as usize];
                    scratch.push(byte);
                    if prefix == u16::MAX {
                        break;
                    }
                    c = prefix;
                }
                out.extend(scratch.iter().rev());
            }
        }
        prev = Some(code);
        if table.len() as u32 + 1 > (1 << width) && width < MAX_CODE_BITS {
            width += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_index_bits() {
        // clear(4), 0, end(5) at 3 bits: 100 | 000 | 101 packed LSB first.
        assert_eq!(lzw_encode(&[0], 2).unwrap(), vec![0x44, 0x01]);
        assert_eq!(lzw_decode(&[0x44, 0x01], 2).unwrap(), vec![0]);
    }

    #[test]
    fn empty_input() {
        let enc = lzw_encode(&[], 2).unwrap();
        assert_eq!(lzw_decode(&enc, 2).unwrap(), Vec::<u8>::new());
    }

    #[test]
    fn out_of_range_index() {
        assert!(matches!(lzw_encode(&[0, 4], 2), Err(Error::Encode(_))));
        assert!(lzw_encode(&[0], 1).is_err());
        assert!(lzw_encode(&[0], 9).is_err());
    }

    #[test]
    fn run_compresses() {
        let run = vec![3u8; 10_000];
        let enc = lzw_encode(&run, 2).unwrap();
        assert!(enc.len() < run.len() / 10, "{} bytes", enc.len());
        assert_eq!(lzw_decode(&enc, 2).unwrap(), run);
    }

    #[test]
    fn table_overflow_resets() {
        // Pseudo-random bytes fill the 4096-entry table several times.
        let mut x = 12345u32;
        let data: Vec<u8> = (0..200_000)
            .map(|_| {
                x = x.wrapping_mul(1_103_515_245).wrapping_add(12345);
                (x >> 16) as u8
            })
            .collect();
        let enc = lzw_encode(&data, 8).unwrap();
        assert_eq!(lzw_decode(&enc, 8).unwrap(), data);
    }

    #[test]
    fn truncated_stream() {
        let enc = lzw_encode(&[1, 2, 3, 1, 2, 3, 1, 2, 3], 2).unwrap();
        assert!(matches!(
            lzw_decode(&enc[..enc.len() - 1], 2),
            Err(Error::Decode(_))
        ));
        assert!(lzw_decode(&[], 2).is_err());
    }

    #[test]
    fn code_beyond_next_slot() {
        // clear(4), literal 0, then 7 while the next free slot is 6.
        // 100 | 000 | 111 -> bits 0..9: 0b1_1100_0100 => [0xC4, 0x01]
        assert!(matches!(
            lzw_decode(&[0xC4, 0x01], 2),
            Err(Error::Decode(_))
        ));
        // First code after clear must be a literal.
        // 100 | 101(end ok)...; use 110 (6): 100 | 110 -> 0b110_100 = 0x34
        assert!(matches!(lzw_decode(&[0x34], 2), Err(Error::Decode(_))));
    }

    #[test]
    fn kwkwk_case() {
        // "aaa" forces the decoder to see a code equal to the next free slot.
        let enc = lzw_encode(&[1, 1, 1, 1, 1], 2).unwrap();
        assert_eq!(lzw_decode(&enc, 2).unwrap(), vec![1; 5]);
    }

    #[test]
    fn external_decoder_agrees() {
        let data: Vec<u8> = (0..5000u32)
            .map(|i| ((i * 7 + i / 13) % 16) as u8)
            .collect();
        let enc = lzw_encode(&data, 4).unwrap();
        let mut dec = weezl_like(&enc, 4);
        dec.truncate(data.len());
        assert_eq!(dec, data);
    }

    // Decodes through the `gif` crate by wrapping the stream in a minimal file.
    fn weezl_like(lzw: &[u8], mcs: u8) -> Vec<u8> {
        let n = 5000u16;
        let mut f = b"GIF89a".to_vec();
        f.extend(n.to_le_bytes());
        f.extend(1u16.to_le_bytes());
        f.extend([0xF0 | (mcs - 1), 0, 0]);
        f.extend(std::iter::repeat_n(0u8, 3 << mcs));
        f.extend([0x2C, 0, 0, 0, 0]);
        f.extend(n.to_le_bytes());
        f.extend(1u16.to_le_bytes());
        f.extend([0, mcs]);
        for chunk in lzw.chunks(255) {
            f.push(chunk.len() as u8);
            f.extend(chunk);
        }
        f.extend([0, 0x3B]);
        let mut opts = gif::DecodeOptions::new();
        opts.set_color_output(gif::ColorOutput::Indexed);
        let mut d = opts.read_info(std::io::Cursor::new(f)).unwrap();
        d.read_next_frame().unwrap().unwrap().buffer.to_vec()
    }

    proptest! {
        #[test]
        fn roundtrip(mcs in 2u8..=8, raw in proptest::collection::vec(any::<u8>(), 0..3000)) {
            let data: Vec<u8> = raw.iter().map(|b| (*b as u16 % (1u16 << mcs)) as u8).collect();
            let enc = lzw_encode(&data, mcs).unwrap();
            prop_assert_eq!(lzw_decode(&enc, mcs).unwrap(), data);
        }
    }
}
