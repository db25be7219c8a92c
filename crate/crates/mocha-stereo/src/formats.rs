//! Bit-exact readers and writers for the interchange formats: PFM disparity
//! maps and binary PNM images, plus the disparity color ramp used for
//! visualization dumps.
//!
//! This module works on `f32` concretely rather than the generic scalar:
//! the formats store 32-bit payloads and the round-trip guarantee covers
//! every bit pattern including NaN payloads, which a detour through another
//! precision could quieten or reorder.
//!
//! PFM layout: magic `Pf` (grayscale), ASCII width and height, a nonzero
//! scale whose sign encodes endianness (negative = little-endian), exactly
//! one whitespace byte, then `width * height` 32-bit floats stored
//! bottom-to-top. Reading flips rows to top-to-bottom memory order, marks
//! non-finite samples invalid but keeps their bits, and the writer emits
//! those bits verbatim with scale `-1.0`.

use crate::error::{MochaError, Result};
use crate::tensor::{DisparityMap, Tensor2, Tensor3};

/// Byte-cursor over an input buffer producing positioned format errors.
struct Scanner<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Scanner<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, at: 0 }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(MochaError::format_at(self.at, message))
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.at + n > self.bytes.len() {
            return self.error(format!("truncated while reading {what}"));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.at).copied()
    }

    fn skip_plain_space(&mut self) {
        while self.peek().is_some_and(|b| b.is_ascii_whitespace()) {
            self.at += 1;
        }
    }

    /// Skips PNM-style whitespace, treating `#` comments as whitespace.
    fn skip_space_and_comments(&mut self) {
        while let Some(b) = self.peek() {
            if b.is_ascii_whitespace() {
                self.at += 1;
            } else if b == b'#' {
                while let Some(b) = self.peek() {
                    self.at += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    /// Reads one whitespace-delimited ASCII token.
    fn token(&mut self, what: &str, allow_comments: bool) -> Result<&'a str> {
        if allow_comments {
            self.skip_space_and_comments();
        } else {
            self.skip_plain_space();
        }
        let start = self.at;
        while self.peek().is_some_and(|b| !b.is_ascii_whitespace()) {
            self.at += 1;
        }
        if self.at == start {
            return self.error(format!("missing {what}"));
        }
        std::str::from_utf8(&self.bytes[start..self.at])
            .map_err(|_| MochaError::format_at(start, format!("{what} is not ASCII")))
    }

    fn usize_token(&mut self, what: &str, allow_comments: bool) -> Result<usize> {
        let start_after_space = self.at;
        let tok = self.token(what, allow_comments)?;
        tok.parse::<usize>().map_err(|_| {
            MochaError::format_at(start_after_space, format!("bad {what}: {tok:?}"))
        })
    }

    /// Consumes exactly one whitespace byte (the strict header/payload
    /// separator).
    fn one_whitespace(&mut self, after: &str) -> Result<()> {
        match self.peek() {
            Some(b) if b.is_ascii_whitespace() => {
                self.at += 1;
                Ok(())
            }
            _ => self.error(format!("expected one whitespace byte after {after}")),
        }
    }

    fn expect_end(&self, what: &str) -> Result<()> {
        if self.at != self.bytes.len() {
            return self.error(format!("trailing bytes after {what}"));
        }
        Ok(())
    }
}

/// Parses a grayscale PFM buffer into a disparity map. Non-finite samples
/// are marked invalid; their bit patterns survive in the values so a
/// rewrite reproduces the payload exactly.
pub fn read_pfm(bytes: &[u8]) -> Result<DisparityMap<f32>> {
    let mut s = Scanner::new(bytes);
    match s.take(2, "magic")? {
        b"Pf" => {}
        b"PF" => return Err(MochaError::format_at(0, "color PFM (magic PF) unsupported")),
        other => {
            return Err(MochaError::format_at(
                0,
                format!("bad PFM magic {:?}", String::from_utf8_lossy(other)),
            ))
        }
    }
    let width = s.usize_token("width", false)?;
    let height = s.usize_token("height", false)?;
    if width == 0 || height == 0 {
        return Err(MochaError::format_at(2, "zero PFM dimensions"));
    }
    s.skip_plain_space();
    let scale_at = s.at;
    let scale: f64 = {
        let tok = s.token("scale", false)?;
        tok.parse()
            .map_err(|_| MochaError::format_at(scale_at, format!("bad scale {tok:?}")))?
    };
    if scale == 0.0 {
        return Err(MochaError::format_at(scale_at, "scale must be nonzero"));
    }
    let little_endian = scale < 0.0;
    s.one_whitespace("the scale")?;

    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| MochaError::format_at(2, "PFM dimensions overflow"))?;
    let payload = s.take(count, "PFM samples")?;
    s.expect_end("PFM samples")?;

    let mut values = vec![0.0f32; width * height];
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let raw: [u8; 4] = chunk.try_into().unwrap();
        let v = if little_endian {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        // File rows run bottom-to-top.
        let file_row = i / width;
        let col = i % width;
        values[(height - 1 - file_row) * width + col] = v;
    }
    let valid: Vec<bool> = values.iter().map(|v| v.is_finite()).collect();
    DisparityMap::new(Tensor2::new(height, width, values)?, valid)
}

/// Serializes a disparity map as little-endian grayscale PFM. Values are
/// written verbatim, ignoring the validity mask, so whatever bits the map
/// holds round-trip exactly.
pub fn write_pfm(d: &DisparityMap<f32>) -> Vec<u8> {
    let (h, w) = (d.height(), d.width());
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(h * w * 4);
    for y in (0..h).rev() {
        for x in 0..w {
            out.extend_from_slice(&d.get(y, x).to_le_bytes());
        }
    }
    out
}

/// A decoded binary PNM image: one (P5) or three (P6) channels scaled to
/// `[0, 1]`, plus the quantization ceiling it was stored with.
#[derive(Debug, Clone, PartialEq)]
pub struct PnmImage {
    pub pixels: Tensor3<f32>,
    pub maxval: u16,
}

impl PnmImage {
    pub fn new(pixels: Tensor3<f32>, maxval: u16) -> Result<Self> {
        if pixels.channels() != 1 && pixels.channels() != 3 {
            return Err(MochaError::Dimension(format!(
                "PNM images have 1 or 3 channels, got {}",
                pixels.channels()
            )));
        }
        if maxval == 0 || maxval > 255 {
            return Err(MochaError::Config(format!(
                "PNM maxval must lie in 1..=255, got {maxval}"
            )));
        }
        Ok(Self { pixels, maxval })
    }

    /// The image as three channels, replicating grayscale.
    pub fn to_rgb_tensor(&self) -> Tensor3<f32> {
        if self.pixels.channels() == 3 {
            return self.pixels.clone();
        }
        let plane = self.pixels.channel_plane(0);
        Tensor3::from_planes(&[plane.clone(), plane.clone(), plane]).expect("equal plane shapes")
    }
}

/// Parses a binary PNM buffer (P5 grayscale or P6 RGB, 8-bit).
pub fn read_pnm(bytes: &[u8]) -> Result<PnmImage> {
    let mut s = Scanner::new(bytes);
    let channels = match s.take(2, "magic")? {
        b"P5" => 1usize,
        b"P6" => 3usize,
        b"P2" | b"P3" => {
            return Err(MochaError::format_at(
                0,
                "ASCII PNM (P2/P3) unsupported, use binary P5/P6",
            ))
        }
        other => {
            return Err(MochaError::format_at(
                0,
                format!("bad PNM magic {:?}", String::from_utf8_lossy(other)),
            ))
        }
    };
    let width = s.usize_token("width", true)?;
    let height = s.usize_token("height", true)?;
    if width == 0 || height == 0 {
        return Err(MochaError::format_at(2, "zero PNM dimensions"));
    }
    let maxval_at = s.at;
    let maxval = s.usize_token("maxval", true)?;
    if maxval == 0 || maxval > 255 {
        return Err(MochaError::format_at(
            maxval_at,
            format!("maxval {maxval} unsupported (must be 1..=255)"),
        ));
    }
    s.one_whitespace("maxval")?;

    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| MochaError::format_at(2, "PNM dimensions overflow"))?;
    let payload = s.take(count, "PNM samples")?;
    s.expect_end("PNM samples")?;

    // Payload is pixel-interleaved; the tensor is channel-major.
    let mut data = vec![0.0f32; count];
    let plane = width * height;
    for (i, byte) in payload.iter().enumerate() {
        let pixel = i / channels;
        let c = i % channels;
        data[c * plane + pixel] = *byte as f32 / maxval as f32;
    }
    PnmImage::new(Tensor3::new(channels, height, width, data)?, maxval as u16)
}

/// Serializes an image as binary P5/P6 with its stored maxval. Values are
/// clamped to `[0, 1]` and quantized by rounding.
pub fn write_pnm(img: &PnmImage) -> Vec<u8> {
    let t = &img.pixels;
    let (c, h, w) = (t.channels(), t.height(), t.width());
    let magic = if c == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{w} {h}\n{}\n", img.maxval).into_bytes();
    out.reserve(c * h * w);
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let v = (t.get(ch, y, x).clamp(0.0, 1.0) * img.maxval as f32).round();
                out.push(v as u8);
            }
        }
    }
    out
}

/// The visualization ramp: evenly spaced stops from dark blue through cyan,
/// green, and yellow to red.
const RAMP: [[f32; 3]; 6] = [
    [0.0, 0.0, 0.5],
    [0.0, 0.0, 1.0],
    [0.0, 1.0, 1.0],
    [0.0, 1.0, 0.0],
    [1.0, 1.0, 0.0],
    [1.0, 0.0, 0.0],
];

/// Colorizes a disparity map for inspection: disparity 0 maps to the first
/// ramp stop, `max_disparity` to the last, linearly interpolated between
/// stops; invalid pixels are black. `max_disparity` must be positive.
pub fn colorize_disparity(d: &DisparityMap<f32>, max_disparity: f64) -> Tensor3<f32> {
    assert!(
        max_disparity > 0.0,
        "max_disparity must be positive, got {max_disparity}"
    );
    Tensor3::from_fn(3, d.height(), d.width(), |c, y, x| {
        if !d.is_valid(y, x) {
            return 0.0;
        }
        let t = (d.get(y, x) as f64 / max_disparity).clamp(0.0, 1.0);
        let pos = t * (RAMP.len() - 1) as f64;
        let i = (pos.floor() as usize).min(RAMP.len() - 2);
        let f = (pos - i as f64) as f32;
        RAMP[i][c] * (1.0 - f) + RAMP[i + 1][c] * f
    })
}
