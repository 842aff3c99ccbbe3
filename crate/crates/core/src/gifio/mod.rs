//! Single-frame GIF89a writing and reading.

mod lzw;

use crate::error::ensure;
use crate::imagecore::{FloatImage, Raster};
use crate::palette::Palette;
use crate::{Error, Result, Scalar};

pub use lzw::{lzw_decode, lzw_encode, MAX_CODE_BITS};

const TRAILER: u8 = 0x3B;
const IMAGE_SEPARATOR: u8 = 0x2C;
const EXTENSION_INTRODUCER: u8 = 0x21;
const APPLICATION_LABEL: u8 = 0xFF;

/// Palette indices plus the palette they refer to.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexedImage<T = f64> {
    height: usize,
    width: usize,
    indices: Vec<u8>,
    palette: Palette<T>,
}

impl<T: Scalar> IndexedImage<T> {
    pub fn new(height: usize, width: usize, indices: Vec<u8>, palette: Palette<T>) -> Result<Self> {
        ensure!(
            indices.len() == height * width,
            Shape,
            "{}x{} needs {} indices, got {}",
            height,
            width,
            height * width,
            indices.len()
        );
        if let Some(bad) = indices.iter().find(|&&i| i as usize >= palette.len()) {
            return Err(Error::OutOfRange(format!(
                "index {} with a {}-colour palette",
                bad,
                palette.len()
            )));
        }
        Ok(Self {
            height,
            width,
            indices,
            palette,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn indices(&self) -> &[u8] {
        &self.indices
    }

    pub fn palette(&self) -> &Palette<T> {
        &self.palette
    }

    /// Expands back to an RGB image.
    pub fn to_image(&self) -> FloatImage<T> {
        let data = self
            .indices
            .iter()
            .flat_map(|&i| self.palette.color(i as usize))
            .collect();
        FloatImage::from_raster_clamped(
            Raster::new(self.height, self.width, 3, data).expect("indexed shape"),
        )
    }

    /// Number of distinct indices actually used.
    pub fn distinct_colors(&self) -> usize {
        let mut seen = [false; 256];
        self.indices.iter().for_each(|&i| seen[i as usize] = true);
        seen.iter().filter(|s| **s).count()
    }
}

/// Bits needed for a colour table holding `n` entries (at least 1).
fn table_bits(n: usize) -> u8 {
    let mut bits = 1;
    while (1usize << bits) < n {
        bits += 1;
    }
    bits
}

fn push_sub_blocks(out: &mut Vec<u8>, data: &[u8]) {
    for chunk in data.chunks(255) {
        out.push(chunk.len() as u8);
        out.extend_from_slice(chunk);
    }
    out.push(0);
}

/// Serializes to GIF89a: header, logical screen descriptor, global colour
/// table (padded with black to a power of two), one image descriptor, LZW
/// data, trailer. No extensions are written.
pub fn write_gif<T: Scalar>(img: &IndexedImage<T>) -> Result<Vec<u8>> {
    ensure!(
        img.width <= u16::MAX as usize && img.height <= u16::MAX as usize,
        TooLarge,
        "{}x{} exceeds the 65535 GIF limit",
        img.width,
        img.height
    );
    let bits = table_bits(img.palette.len());
    let (w, h) = (img.width as u16, img.height as u16);

    let mut out = Vec::with_capacity(64 + img.indices.len() / 2);
    out.extend_from_slice(b"GIF89a");
    out.extend_from_slice(&w.to_le_bytes());
    out.extend_from_slice(&h.to_le_bytes());
    out.push(0x80 | 0x70 | (bits - 1));
    out.push(0); // background index
    out.push(0); // pixel aspect
    let mut table = img.palette.to_rgb8();
    table.resize(1 << bits, [0, 0, 0]);
    out.extend(table.iter().flatten());

    out.push(IMAGE_SEPARATOR);
    out.extend_from_slice(&[0, 0, 0, 0]);
    out.extend_from_slice(&w.to_le_bytes());
    out.extend_from_slice(&h.to_le_bytes());
    out.push(0);

    let min_code_size = bits.max(2);
    out.push(min_code_size);
    push_sub_blocks(&mut out, &lzw_encode(&img.indices, min_code_size)?);
    out.push(TRAILER);
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        ensure!(
            self.pos + n <= self.bytes.len(),
            Parse,
            "unexpected end of GIF data at offset {}",
            self.pos
        );
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn sub_blocks(&mut self) -> Result<Vec<u8>> {
        let mut data = Vec::new();
        loop {
            let n = self.u8()? as usize;
            if n == 0 {
                return Ok(data);
            }
            data.extend_from_slice(self.take(n)?);
        }
    }
}

/// Parses a single-frame, non-interlaced GIF with a global colour table.
/// The palette returned is the full (padded) table.
pub fn read_gif<T: Scalar>(bytes: &[u8]) -> Result<IndexedImage<T>> {
    let mut cur = Cursor { bytes, pos: 0 };
    let sig = cur.take(6)?;
    ensure!(
        sig == b"GIF89a" || sig == b"GIF87a",
        Parse,
        "missing GIF signature"
    );
    let _screen_w = cur.u16()?;
    let _screen_h = cur.u16()?;
    let packed = cur.u8()?;
    cur.take(2)?;
    ensure!(
        packed & 0x80 != 0,
        Unsupported,
        "GIF without a global colour table"
    );
    let table_len = 1usize << ((packed & 0x07) + 1);
    let raw = cur.take(table_len * 3)?;
    let colors: Vec<[u8; 3]> = raw.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    let palette = Palette::from_rgb8(&colors)?;

    let mut frame: Option<IndexedImage<T>> = None;
    loop {
        match cur.u8()? {
            TRAILER => break,
            EXTENSION_INTRODUCER => {
                let label = cur.u8()?;
                let body = cur.sub_blocks()?;
                if label == APPLICATION_LABEL && body.starts_with(b"NETSCAPE2.0") {
                    return Err(Error::Unsupported(
                        "animated GIF (NETSCAPE loop extension)".into(),
                    ));
                }
            }
            IMAGE_SEPARATOR => {
                ensure!(
                    frame.is_none(),
                    Unsupported,
                    "animated GIF (more than one frame)"
                );
                let (left, top) = (cur.u16()?, cur.u16()?);
                let (w, h) = (cur.u16()? as usize, cur.u16()? as usize);
                let flags = cur.u8()?;
                ensure!(flags & 0x80 == 0, Unsupported, "local colour tables");
                ensure!(flags & 0x40 == 0, Unsupported, "interlaced GIF");
                ensure!(
                    left == 0 && top == 0,
                    Unsupported,
                    "frame offset ({}, {})",
                    left,
                    top
                );
                let mcs = cur.u8()?;
                let data = cur.sub_blocks()?;
                let indices = lzw_decode(&data, mcs).map_err(|e| Error::Parse(e.to_string()))?;
                ensure!(
                    indices.len() == w * h,
                    Parse,
                    "frame holds {} indices, expected {}",
                    indices.len(),
                    w * h
                );
                frame = Some(IndexedImage::new(h, w, indices, palette.clone())?);
            }
            other => {
                return Err(Error::Parse(format!(
                    "unknown block 0x{other:02x} at offset {}",
                    cur.pos - 1
                )))
            }
        }
    }
    frame.ok_or_else(|| Error::Parse("GIF has no image".into()))
}
