//! Binary portable graymap ("P5") images.

use std::path::Path;

use crate::error::{Error, Result};

/// 8-bit grayscale image, row-major.
///
/// `maxval` is kept from the source file so a load/save pair reproduces the
/// header value; pixels never exceed it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    maxval: u8,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        Self::with_maxval(width, height, 255, pixels)
    }

    pub fn with_maxval(width: usize, height: usize, maxval: u8, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry(format!("image size {width}x{height} has a zero side")));
        }
        if pixels.len() != width * height {
            return Err(Error::Shape(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if maxval == 0 {
            return Err(Error::Argument("maxval must be at least 1".into()));
        }
        if let Some(&p) = pixels.iter().find(|&&p| p > maxval) {
            return Err(Error::Argument(format!("pixel {p} exceeds maxval {maxval}")));
        }
        Ok(Self {
            width,
            height,
            maxval,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn maxval(&self) -> u8 {
        self.maxval
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::pgm(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::pgm(start, format!("{what} out of range")))
    }
}

/// Parses a P5 file. Bytes after the declared payload are ignored.
pub fn load_pgm(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::pgm(0, "missing P5 magic"));
    }
    let mut cur = Cursor { bytes, pos: 2 };
    if !cur.bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(Error::pgm(2, "expected whitespace after magic"));
    }
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    cur.skip_space_and_comments();
    let maxval_at = cur.pos;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::pgm(maxval_at, format!("zero image dimension {width}x{height}")));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::pgm(maxval_at, format!("maxval {maxval} not in 1..=255")));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::pgm(cur.pos, "expected single whitespace before raster")),
    }
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::pgm(cur.pos, "image dimensions overflow"))?;
    let available = bytes.len() - cur.pos;
    if available < n {
        return Err(Error::pgm(
            bytes.len(),
            format!("raster truncated: {available} of {n} bytes"),
        ));
    }
    let pixels = bytes[cur.pos..cur.pos + n].to_vec();
    if let Some(i) = pixels.iter().position(|&p| p as usize > maxval) {
        return Err(Error::pgm(
            cur.pos + i,
            format!("pixel {} exceeds maxval {maxval}", pixels[i]),
        ));
    }
    Ok(Image {
        width,
        height,
        maxval: maxval as u8,
        pixels,
    })
}

/// Canonical serialization: `P5\n{w} {h}\n{maxval}\n` followed by the raster.
pub fn save_pgm(image: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", image.width, image.height, image.maxval).into_bytes();
    out.extend_from_slice(&image.pixels);
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    load_pgm(&bytes)
}

pub fn write_pgm(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, save_pgm(image)).map_err(|e| Error::io(path, e))
}
