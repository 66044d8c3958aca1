//! Floating-point rasters and 8-bit file I/O.
//!
//! Every transform in this crate consumes and produces values in `[0, 1]`.
//! Files are read as 8-bit PNG (gray or RGB) or binary PGM/PPM with maxval
//! 255, mapped by `v / 255`. On save, values are quantized round-half-up to
//! the nearest of 256 levels.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};

/// Rec. 601 luma weights in thousandths.
pub const LUMA_WEIGHTS: [f64; 3] = [299.0, 587.0, 114.0];

/// A single-channel raster in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImagePlane {
    /// Builds a plane, rejecting a mismatched buffer length or any value
    /// outside `[0, 1]` (NaN included).
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::InvalidRaster(format!(
                "buffer of {} values for a {height}x{width} plane",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidRaster(format!(
                "value {} at index {pos} outside [0, 1]",
                data[pos]
            )));
        }
        Ok(Self { height, width, data })
    }

    /// Clamps every value into `[0, 1]`; NaN becomes 0.
    pub fn from_clamped(height: usize, width: usize, mut data: Vec<f64>) -> Result<Self> {
        for v in &mut data {
            *v = clamp_unit(*v);
        }
        Self::new(height, width, data)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    /// Builds a plane from `f(row, col)`, clamping the results.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(clamp_unit(f(r, c)));
            }
        }
        Self { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Applies `f` elementwise, clamping the results.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| clamp_unit(f(v))).collect(),
        }
    }

    /// 8-bit value of every sample, round-half-up.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize_u8(v)).collect()
    }
}

/// Three planes of identical dimensions (R, G, B).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRgb {
    planes: [ImagePlane; 3],
}

impl ImageRgb {
    pub fn new(r: ImagePlane, g: ImagePlane, b: ImagePlane) -> Result<Self> {
        for p in [&g, &b] {
            if p.dims() != r.dims() {
                return Err(Error::DimensionMismatch {
                    expected: r.dims(),
                    actual: p.dims(),
                });
            }
        }
        Ok(Self { planes: [r, g, b] })
    }

    pub fn from_planes(planes: [ImagePlane; 3]) -> Result<Self> {
        let [r, g, b] = planes;
        Self::new(r, g, b)
    }

    /// Replicates a plane into all three channels.
    pub fn from_gray(plane: ImagePlane) -> Self {
        Self {
            planes: [plane.clone(), plane.clone(), plane],
        }
    }

    pub fn filled(height: usize, width: usize, rgb: [f64; 3]) -> Result<Self> {
        Self::new(
            ImagePlane::filled(height, width, rgb[0])?,
            ImagePlane::filled(height, width, rgb[1])?,
            ImagePlane::filled(height, width, rgb[2])?,
        )
    }

    /// Builds an image from `f(channel, row, col)`, clamping the results.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let planes = [0, 1, 2].map(|ch| ImagePlane::from_fn(height, width, |r, c| f(ch, r, c)));
        Self { planes }
    }

    /// Interleaved 8-bit RGB samples.
    pub fn from_rgb8(height: usize, width: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != height * width * 3 {
            return Err(Error::InvalidRaster(format!(
                "{} bytes for a {height}x{width} RGB image",
                bytes.len()
            )));
        }
        let planes = [0, 1, 2].map(|ch| ImagePlane {
            height,
            width,
            data: bytes[ch..].iter().step_by(3).map(|&b| b as f64 / 255.0).collect(),
        });
        Ok(Self { planes })
    }

    pub fn from_gray8(height: usize, width: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != height * width {
            return Err(Error::InvalidRaster(format!(
                "{} bytes for a {height}x{width} gray image",
                bytes.len()
            )));
        }
        let plane = ImagePlane {
            height,
            width,
            data: bytes.iter().map(|&b| b as f64 / 255.0).collect(),
        };
        Ok(Self::from_gray(plane))
    }

    pub fn height(&self) -> usize {
        self.planes[0].height
    }

    pub fn width(&self) -> usize {
        self.planes[0].width
    }

    pub fn dims(&self) -> (usize, usize) {
        self.planes[0].dims()
    }

    pub fn planes(&self) -> &[ImagePlane; 3] {
        &self.planes
    }

    pub fn plane(&self, channel: usize) -> &ImagePlane {
        &self.planes[channel]
    }

    pub fn into_planes(self) -> [ImagePlane; 3] {
        self.planes
    }

    /// Applies a plane transform to each channel.
    pub fn map_planes(&self, mut f: impl FnMut(&ImagePlane) -> ImagePlane) -> Self {
        Self {
            planes: [f(&self.planes[0]), f(&self.planes[1]), f(&self.planes[2])],
        }
    }

    /// True when the three channels are bit-identical.
    pub fn is_gray(&self) -> bool {
        self.planes[0] == self.planes[1] && self.planes[0] == self.planes[2]
    }

    /// Interleaved 8-bit RGB samples, round-half-up.
    pub fn to_rgb8(&self) -> Vec<u8> {
        let n = self.height() * self.width();
        let mut out = Vec::with_capacity(n * 3);
        for i in 0..n {
            for p in &self.planes {
                out.push(quantize_u8(p.data[i]));
            }
        }
        out
    }

    /// Round-trips through 8-bit quantization.
    pub fn quantized(&self) -> Self {
        self.map_planes(|p| p.map(|v| quantize_u8(v) as f64 / 255.0))
    }
}

#[inline]
pub(crate) fn clamp_unit(v: f64) -> f64 {
    if v >= 1.0 {
        1.0
    } else if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Round-half-up quantization of a `[0, 1]` value to 8 bits.
#[inline]
pub fn quantize_u8(v: f64) -> u8 {
    (clamp_unit(v) * 255.0 + 0.5).floor().min(255.0) as u8
}

/// Per-pixel `0.299 R + 0.587 G + 0.114 B`, clamped to `[0, 1]`.
///
/// Evaluated as `(299 R + 587 G + 114 B) / 1000` so that white maps to
/// exactly 1.
pub fn to_luminance(img: &ImageRgb) -> ImagePlane {
    let [r, g, b] = &img.planes;
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let data = r
        .data
        .iter()
        .zip(&g.data)
        .zip(&b.data)
        .map(|((&r, &g), &b)| clamp_unit((wr * r + wg * g + wb * b) / 1000.0))
        .collect();
    ImagePlane {
        height: r.height,
        width: r.width,
        data,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FileKind {
    Png,
    Ppm,
    Pgm,
}

fn kind_from_extension(path: &Path) -> Option<FileKind> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    match ext.as_str() {
        "png" => Some(FileKind::Png),
        "ppm" | "pnm" => Some(FileKind::Ppm),
        "pgm" => Some(FileKind::Pgm),
        _ => None,
    }
}

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

/// Loads an 8-bit PNG (gray or RGB) or binary PGM/PPM. Grayscale sources are
/// replicated into all three channels.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageRgb> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|e| e.at(path))
}

/// Decodes an in-memory PNG or PNM file.
pub fn decode_image(bytes: &[u8]) -> Result<ImageRgb, DecodeError> {
    if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        decode_pnm(bytes)
    } else {
        Err(DecodeError::Unsupported("not a PNG, PGM (P5) or PPM (P6) file".into()))
    }
}

/// Decode failure without path context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeError {
    Malformed(String),
    Unsupported(String),
}

impl DecodeError {
    fn at(self, path: &Path) -> Error {
        match self {
            DecodeError::Malformed(reason) => Error::Decode {
                path: path.to_path_buf(),
                reason,
            },
            DecodeError::Unsupported(reason) => Error::Unsupported {
                path: path.to_path_buf(),
                reason,
            },
        }
    }
}

fn decode_png(bytes: &[u8]) -> Result<ImageRgb, DecodeError> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| DecodeError::Malformed(e.to_string()))?;
    let info = reader.info();
    let (width, height) = (info.width as usize, info.height as usize);
    let (color, depth) = (info.color_type, info.bit_depth);
    if depth != png::BitDepth::Eight {
        return Err(DecodeError::Unsupported(format!("bit depth {depth:?}, expected 8")));
    }
    if !matches!(color, png::ColorType::Rgb | png::ColorType::Grayscale) {
        return Err(DecodeError::Unsupported(format!(
            "color type {color:?}, expected RGB or gray"
        )));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| DecodeError::Malformed("image too large".into()))?;
    let mut buf = vec![0; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| DecodeError::Malformed(e.to_string()))?;
    buf.truncate(frame.buffer_size());
    let stride = frame.line_size;
    let channels = if color == png::ColorType::Rgb { 3 } else { 1 };
    let packed: Vec<u8> = if stride == width * channels {
        buf
    } else {
        buf.chunks(stride)
            .flat_map(|row| row[..width * channels].to_vec())
            .collect()
    };
    let res = if channels == 3 {
        ImageRgb::from_rgb8(height, width, &packed)
    } else {
        ImageRgb::from_gray8(height, width, &packed)
    };
    res.map_err(|e| DecodeError::Malformed(e.to_string()))
}

/// Parses a binary PGM (P5) or PPM (P6) file with maxval 255.
fn decode_pnm(bytes: &[u8]) -> Result<ImageRgb, DecodeError> {
    let channels = if bytes[1] == b'6' { 3 } else { 1 };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // whitespace and comments between header tokens
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while let Some(&b) = bytes.get(pos) {
                        pos += 1;
                        if b == b'\n' || b == b'\r' {
                            break;
                        }
                    }
                }
                Some(_) => break,
                None => return Err(DecodeError::Malformed("truncated header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(DecodeError::Malformed("expected a decimal header field".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| DecodeError::Malformed("header field out of range".into()))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(DecodeError::Malformed("missing whitespace after header".into())),
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(DecodeError::Unsupported(format!("maxval {maxval}, expected 255")));
    }
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| DecodeError::Malformed("dimensions overflow".into()))?;
    let payload = &bytes[pos..];
    if payload.len() < need {
        return Err(DecodeError::Malformed(format!(
            "truncated payload: {} of {need} bytes",
            payload.len()
        )));
    }
    let res = if channels == 3 {
        ImageRgb::from_rgb8(height, width, &payload[..need])
    } else {
        ImageRgb::from_gray8(height, width, &payload[..need])
    };
    res.map_err(|e| DecodeError::Malformed(e.to_string()))
}

/// Writes an image, picking the format from the extension: `.png` (RGB),
/// `.ppm`/`.pnm` (P6) or `.pgm` (P5). A PGM receives the shared channel of a
/// gray image, or the luminance of a colored one.
pub fn save_image(img: &ImageRgb, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let kind = kind_from_extension(path).ok_or_else(|| Error::Unsupported {
        path: path.to_path_buf(),
        reason: "extension must be .png, .ppm, .pnm or .pgm".into(),
    })?;
    let bytes = match kind {
        FileKind::Png => {
            encode_png(img.height(), img.width(), &img.to_rgb8(), png::ColorType::Rgb).map_err(|reason| {
                Error::Encode {
                    path: path.to_path_buf(),
                    reason,
                }
            })?
        }
        FileKind::Ppm => encode_pnm(img.height(), img.width(), &img.to_rgb8(), 3),
        FileKind::Pgm => {
            let gray = if img.is_gray() {
                img.plane(0).to_u8()
            } else {
                to_luminance(img).to_u8()
            };
            encode_pnm(img.height(), img.width(), &gray, 1)
        }
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes a single plane as 8-bit grayscale (`.pgm` or `.png`).
pub fn save_plane(plane: &ImagePlane, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match kind_from_extension(path) {
        Some(FileKind::Pgm) => encode_pnm(plane.height, plane.width, &plane.to_u8(), 1),
        Some(FileKind::Png) => encode_png(plane.height, plane.width, &plane.to_u8(), png::ColorType::Grayscale)
            .map_err(|reason| Error::Encode {
                path: path.to_path_buf(),
                reason,
            })?,
        _ => {
            return Err(Error::Unsupported {
                path: path.to_path_buf(),
                reason: "single planes are written as .pgm or .png".into(),
            })
        }
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Binary PNM bytes: `P5`/`P6` header, maxval 255.
pub fn encode_pnm(height: usize, width: usize, samples: &[u8], channels: usize) -> Vec<u8> {
    let magic = if channels == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(samples);
    out
}

fn encode_png(height: usize, width: usize, samples: &[u8], color: png::ColorType) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| e.to_string())?;
        writer.write_image_data(samples).map_err(|e| e.to_string())?;
        writer.finish().map_err(|e| e.to_string())?;
    }
    Ok(out)
}
