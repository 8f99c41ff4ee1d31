//! Binary PGM (P5) image I/O.
//!
//! On disk ink is dark: stored byte = round(255 * (1 - intensity)), maxval
//! always 255. Header parsing accepts `#` comments and arbitrary whitespace.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::glyph::GlyphImage;

pub fn write_pgm(img: &GlyphImage, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(img.height() * img.width() + 32);
    write!(buf, "P5\n{} {}\n255\n", img.width(), img.height())
        .expect("in-memory write cannot fail");
    for &v in img.pixels() {
        buf.push((255.0 * (1.0 - v)).round() as u8);
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_pgm(path: &Path) -> Result<GlyphImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let header_err = |detail: &str| Error::PgmHeader {
        path: path.to_path_buf(),
        detail: detail.to_string(),
    };

    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(header_err("missing P5 magic"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3]; // width, height, maxval
    for field in fields.iter_mut() {
        pos = skip_whitespace_and_comments(&bytes, pos);
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == start {
            return Err(header_err("expected an ASCII integer"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("digits are UTF-8");
        *field = text
            .parse()
            .map_err(|_| header_err("integer field out of range"))?;
    }
    let (width, height, maxval) = (fields[0], fields[1], fields[2]);
    if width == 0 || height == 0 {
        return Err(header_err("zero dimension"));
    }
    if maxval != 255 {
        return Err(header_err("maxval must be 255"));
    }
    // Exactly one whitespace byte separates the header from the payload.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(header_err("missing separator before payload"));
    }
    pos += 1;

    let payload = &bytes[pos..];
    if payload.len() != width * height {
        return Err(Error::PixelCount {
            expected: width * height,
            found: payload.len(),
        });
    }
    let pixels = payload
        .iter()
        .map(|&b| 1.0 - f64::from(b) / 255.0)
        .collect();
    GlyphImage::new(height, width, pixels)
}

/// Reads a PGM and checks it against an expected raster size.
pub fn read_pgm_expecting(path: &Path, height: usize, width: usize) -> Result<GlyphImage> {
    let img = read_pgm(path)?;
    if img.height() != height || img.width() != width {
        return Err(Error::ShapeMismatch {
            expected_h: height,
            expected_w: width,
            found_h: img.height(),
            found_w: img.width(),
        });
    }
    Ok(img)
}

fn skip_whitespace_and_comments(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}
