//! Binary PGM (P5) encoding and decoding, plus PNG previews.

use std::io::{Cursor, Write};
use std::path::Path;

use image::{DynamicImage, ExtendedColorType, ImageFormat};

use crate::error::{Error, Result};

// The `image` PNM encoder has no 16-bit graymap support, so headers are written here.
fn write_header<W: Write>(w: &mut W, width: usize, height: usize, maxval: u16) -> Result<()> {
    write!(w, "P5\n{width} {height}\n{maxval}\n")?;
    Ok(())
}

fn check_len(width: usize, height: usize, len: usize) -> Result<()> {
    if width * height != len {
        return Err(Error::GeometryMismatch(format!(
            "{len} pixels for a {width}x{height} image"
        )));
    }
    Ok(())
}

/// 8-bit P5, one byte per pixel, row-major, top row first.
pub fn write_pgm8<W: Write>(mut w: W, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    check_len(width, height, pixels.len())?;
    write_header(&mut w, width, height, 255)?;
    w.write_all(pixels)?;
    w.flush()?;
    Ok(())
}

/// 16-bit P5, big-endian samples, maxval 65535.
pub fn write_pgm16<W: Write>(mut w: W, width: usize, height: usize, pixels: &[u16]) -> Result<()> {
    check_len(width, height, pixels.len())?;
    write_header(&mut w, width, height, 65535)?;
    let bytes: Vec<u8> = pixels.iter().flat_map(|p| p.to_be_bytes()).collect();
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

pub fn save_pgm8(path: impl AsRef<Path>, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    write_pgm8(std::io::BufWriter::new(std::fs::File::create(path)?), width, height, pixels)
}

pub fn save_pgm16(path: impl AsRef<Path>, width: usize, height: usize, pixels: &[u16]) -> Result<()> {
    write_pgm16(std::io::BufWriter::new(std::fs::File::create(path)?), width, height, pixels)
}

/// Max-normalize non-negative values onto `0..=65535` (all zeros stay zero).
pub fn to_u16_scaled(values: &[f64]) -> Vec<u16> {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return vec![0; values.len()];
    }
    values
        .iter()
        .map(|v| (v.max(0.0) / max * 65535.0).round() as u16)
        .collect()
}

/// A decoded grayscale image with its stored bit depth.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u16>,
}

/// Decode an 8- or 16-bit grayscale PGM.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let img = image::load(Cursor::new(bytes), ImageFormat::Pnm)?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let (maxval, pixels) = match img {
        DynamicImage::ImageLuma8(buf) => (255, buf.into_raw().into_iter().map(u16::from).collect()),
        DynamicImage::ImageLuma16(buf) => (65535, buf.into_raw()),
        other => {
            return Err(Error::invalid(
                "image",
                format!("expected a grayscale PGM, got {:?}", other.color()),
            ))
        }
    };
    Ok(GrayImage {
        width,
        height,
        maxval,
        pixels,
    })
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    read_pgm(&std::fs::read(path)?)
}

/// 8-bit PNG preview of max-normalized values.
pub fn save_png_preview(path: impl AsRef<Path>, width: usize, height: usize, values: &[f64]) -> Result<()> {
    check_len(width, height, values.len())?;
    let max = values.iter().copied().fold(0.0, f64::max);
    let bytes: Vec<u8> = values
        .iter()
        .map(|v| if max > 0.0 { (v.max(0.0) / max * 255.0).round() as u8 } else { 0 })
        .collect();
    image::save_buffer(path, &bytes, width as u32, height as u32, ExtendedColorType::L8)?;
    Ok(())
}
