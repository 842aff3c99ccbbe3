//! 8-bit image I/O: binary PPM (P6, maxval 255) and PNG.
//!
//! The float pipeline works in `[0, 1]`; conversion to bytes rounds to the
//! nearest of the 256 levels.

use std::io::Cursor;
use std::path::Path;

use super::{FloatImage, Raster};
use crate::error::ensure;
use crate::{Error, Result, Scalar};

#[inline]
pub fn to_byte<T: Scalar>(v: T) -> u8 {
    (v.clamp01().to_f64_lossy() * 255.0).round() as u8
}

#[inline]
pub fn from_byte<T: Scalar>(b: u8) -> T {
    T::lit(b as f64 / 255.0)
}

/// Builds an RGB image from packed 8-bit RGB.
pub fn from_rgb8<T: Scalar>(height: usize, width: usize, rgb: &[u8]) -> Result<FloatImage<T>> {
    ensure!(
        rgb.len() == height * width * 3,
        Shape,
        "rgb8 buffer length {}",
        rgb.len()
    );
    Ok(FloatImage::from_raster_clamped(Raster::new(
        height,
        width,
        3,
        rgb.iter().map(|&b| from_byte(b)).collect(),
    )?))
}

/// Packs an image to 8-bit RGB; gray images are replicated to three channels.
pub fn to_rgb8<T: Scalar>(img: &FloatImage<T>) -> Vec<u8> {
    match img.channels() {
        3 => img.data().iter().map(|&v| to_byte(v)).collect(),
        _ => img.data().iter().flat_map(|&v| [to_byte(v); 3]).collect(),
    }
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    ensure!(*pos > start, Parse, "truncated PPM header");
    Ok(&bytes[start..*pos])
}

fn header_number(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    let tok = next_token(bytes, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| {
            Error::Parse(format!(
                "bad PPM header field {:?}",
                String::from_utf8_lossy(tok)
            ))
        })
}

pub fn decode_ppm<T: Scalar>(bytes: &[u8]) -> Result<FloatImage<T>> {
    let mut pos = 0;
    ensure!(
        next_token(bytes, &mut pos)? == b"P6",
        Parse,
        "not a binary PPM (P6)"
    );
    let width = header_number(bytes, &mut pos)?;
    let height = header_number(bytes, &mut pos)?;
    let maxval = header_number(bytes, &mut pos)?;
    ensure!(
        maxval == 255,
        Unsupported,
        "PPM maxval {} (only 255 supported)",
        maxval
    );
    ensure!(pos < bytes.len(), Parse, "PPM has no pixel data");
    // Exactly one whitespace byte separates the header from the raster.
    let data = &bytes[pos + 1..];
    let need = width * height * 3;
    ensure!(
        data.len() >= need,
        Parse,
        "PPM raster truncated: {} of {} bytes",
        data.len(),
        need
    );
    ensure!(
        width > 0 && height > 0,
        DegenerateSize,
        "PPM is {}x{}",
        width,
        height
    );
    from_rgb8(height, width, &data[..need])
}

pub fn encode_ppm<T: Scalar>(img: &FloatImage<T>) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(to_rgb8(img));
    out
}

pub fn decode_png<T: Scalar>(bytes: &[u8]) -> Result<FloatImage<T>> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Parse(format!("png: {e}")))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::TooLarge("png buffer".into()))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Parse(format!("png: {e}")))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let buf = &buf[..info.buffer_size()];
    let rgb: Vec<u8> = match info.color_type {
        png::ColorType::Rgb => buf.to_vec(),
        png::ColorType::Rgba => buf
            .chunks_exact(4)
            .flat_map(|p| [p[0], p[1], p[2]])
            .collect(),
        png::ColorType::Grayscale => buf.iter().flat_map(|&g| [g; 3]).collect(),
        png::ColorType::GrayscaleAlpha => buf.chunks_exact(2).flat_map(|p| [p[0]; 3]).collect(),
        other => return Err(Error::Unsupported(format!("png colour type {other:?}"))),
    };
    from_rgb8(h, w, &rgb)
}

pub fn encode_png<T: Scalar>(img: &FloatImage<T>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width() as u32, img.height() as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::Parse(format!("png: {e}")))?;
        writer
            .write_image_data(&to_rgb8(img))
            .map_err(|e| Error::Parse(format!("png: {e}")))?;
    }
    Ok(out)
}

/// Decodes PPM or PNG, sniffing the magic bytes.
pub fn decode_image<T: Scalar>(bytes: &[u8]) -> Result<FloatImage<T>> {
    if bytes.starts_with(b"\x89PNG") {
        decode_png(bytes)
    } else if bytes.starts_with(b"P6") {
        decode_ppm(bytes)
    } else {
        Err(Error::Unsupported(
            "input is neither PNG nor binary PPM".into(),
        ))
    }
}

pub fn read_image<T: Scalar>(path: impl AsRef<Path>) -> Result<FloatImage<T>> {
    decode_image(&std::fs::read(path)?)
}

/// Writes PNG when the extension is `.png`, PPM otherwise.
pub fn write_image<T: Scalar>(path: impl AsRef<Path>, img: &FloatImage<T>) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png {
        encode_png(img)?
    } else {
        encode_ppm(img)
    };
    std::fs::write(path, bytes)?;
    Ok(())
}
