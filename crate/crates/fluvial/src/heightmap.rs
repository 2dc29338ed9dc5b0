//! Scalar raster carrier for constraint, moisture, strength and output
//! maps, with two file formats:
//!
//! * 16-bit binary PGM (`P5`, maxval up to 65535, big-endian words). Values
//!   are quantized linearly over the map's world range; the range is
//!   embedded in a `# range <min> <max>` header comment so it survives a
//!   round trip.
//! * Raw little-endian float32 with a 16-byte header: magic `HGT1`,
//!   u32 width, u32 height, u32 reserved. Round trips are bit-exact.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HeightmapError {
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },
    #[error("truncated file: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },
    #[error("dimension mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    Dimensions {
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeightmapFormat {
    /// 16-bit binary PGM (P5).
    Pgm16,
    /// Raw float32 with HGT1 header.
    Float32,
}

impl HeightmapFormat {
    /// Picks the format from a path extension: `.pgm` is PGM, everything
    /// else is the raw float32 format.
    pub fn from_path(path: &Path) -> HeightmapFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("pgm") => HeightmapFormat::Pgm16,
            _ => HeightmapFormat::Float32,
        }
    }
}

impl fmt::Display for HeightmapFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeightmapFormat::Pgm16 => write!(f, "pgm16"),
            HeightmapFormat::Float32 => write!(f, "float32"),
        }
    }
}

/// Row-major scalar raster with world-unit range metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Heightmap {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<f64>,
    /// (min, max) of the map in world units; used as the quantization range
    /// for PGM output.
    pub value_range: (f64, f64),
}

impl Heightmap {
    pub fn new(width: usize, height: usize) -> Self {
        Heightmap {
            width,
            height,
            samples: vec![0.0; width * height],
            value_range: (0.0, 1.0),
        }
    }

    pub fn uniform(width: usize, height: usize, value: f64) -> Self {
        Heightmap {
            width,
            height,
            samples: vec![value; width * height],
            value_range: (value, value),
        }
    }

    /// Builds a map from samples, recording their actual min/max as the
    /// value range.
    pub fn from_samples(width: usize, height: usize, samples: Vec<f64>) -> Self {
        assert_eq!(samples.len(), width * height);
        let mut map = Heightmap {
            width,
            height,
            samples,
            value_range: (0.0, 1.0),
        };
        map.update_range();
        map
    }

    pub fn update_range(&mut self) {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &s in &self.samples {
            min = min.min(s);
            max = max.max(s);
        }
        if self.samples.is_empty() {
            min = 0.0;
            max = 1.0;
        }
        self.value_range = (min, max);
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.samples[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.samples[row * self.width + col] = value;
    }

    /// Linearly remaps all samples from the current value range onto
    /// `range`. A degenerate current range maps everything to `range.0`.
    pub fn remap_to(&mut self, range: (f64, f64)) {
        let (lo, hi) = self.value_range;
        let span = hi - lo;
        for s in &mut self.samples {
            let frac = if span > 0.0 { (*s - lo) / span } else { 0.0 };
            *s = range.0 + frac * (range.1 - range.0);
        }
        self.value_range = range;
    }
}

/// Reads a heightmap in the given format.
pub fn read_heightmap(path: &Path, format: HeightmapFormat) -> Result<Heightmap, HeightmapError> {
    let bytes = fs::read(path)?;
    match format {
        HeightmapFormat::Pgm16 => decode_pgm(&bytes),
        HeightmapFormat::Float32 => decode_float32(&bytes),
    }
}

/// Writes a heightmap in the given format. PGM output clamps and quantizes
/// samples to the map's value range; float32 output requires finite
/// samples and is the exact inverse of the reader.
pub fn write_heightmap(
    map: &Heightmap,
    path: &Path,
    format: HeightmapFormat,
) -> Result<(), HeightmapError> {
    if let Some(index) = map.samples.iter().position(|s| !s.is_finite()) {
        return Err(HeightmapError::NonFinite { index });
    }
    let bytes = match format {
        HeightmapFormat::Pgm16 => encode_pgm(map),
        HeightmapFormat::Float32 => encode_float32(map),
    };
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

const FLOAT32_MAGIC: &[u8; 4] = b"HGT1";
const FLOAT32_HEADER_LEN: usize = 16;

fn decode_float32(bytes: &[u8]) -> Result<Heightmap, HeightmapError> {
    if bytes.len() < FLOAT32_HEADER_LEN {
        return Err(HeightmapError::Truncated {
            expected: FLOAT32_HEADER_LEN,
            actual: bytes.len(),
        });
    }
    if &bytes[0..4] != FLOAT32_MAGIC {
        return Err(HeightmapError::Format {
            offset: 0,
            message: format!("bad magic {:?}, expected \"HGT1\"", &bytes[0..4]),
        });
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if width == 0 || height == 0 {
        return Err(HeightmapError::Format {
            offset: 4,
            message: format!("zero dimension {width}x{height}"),
        });
    }
    let count = width
        .checked_mul(height)
        .filter(|&n| n <= (usize::MAX - FLOAT32_HEADER_LEN) / 4)
        .ok_or_else(|| HeightmapError::Format {
            offset: 4,
            message: format!("dimensions {width}x{height} overflow"),
        })?;
    let expected = FLOAT32_HEADER_LEN + 4 * count;
    if bytes.len() != expected {
        return Err(HeightmapError::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let off = FLOAT32_HEADER_LEN + 4 * i;
        let v = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as f64;
        if !v.is_finite() {
            return Err(HeightmapError::NonFinite { index: i });
        }
        samples.push(v);
    }
    Ok(Heightmap::from_samples(width, height, samples))
}

fn encode_float32(map: &Heightmap) -> Vec<u8> {
    let mut out = Vec::with_capacity(FLOAT32_HEADER_LEN + 4 * map.samples.len());
    out.extend_from_slice(FLOAT32_MAGIC);
    out.extend_from_slice(&(map.width as u32).to_le_bytes());
    out.extend_from_slice(&(map.height as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for &s in &map.samples {
        out.extend_from_slice(&(s as f32).to_le_bytes());
    }
    out
}

/// PGM header tokenizer. Tracks the byte offset for diagnostics and skips
/// whitespace and `#` comments between tokens, capturing any embedded
/// `range` comment along the way.
struct PgmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    range_comment: Option<(f64, f64)>,
}

impl<'a> PgmCursor<'a> {
    fn skip_separators(&mut self) {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                let start = self.pos + 1;
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                let comment = String::from_utf8_lossy(&self.bytes[start..self.pos]);
                let fields: Vec<&str> = comment.split_whitespace().collect();
                if fields.len() == 3 && fields[0] == "range" {
                    if let (Ok(lo), Ok(hi)) = (fields[1].parse(), fields[2].parse()) {
                        self.range_comment = Some((lo, hi));
                    }
                }
            } else {
                return;
            }
        }
    }

    fn read_number(&mut self, what: &str) -> Result<usize, HeightmapError> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(HeightmapError::Format {
                offset: start,
                message: format!("expected {what}"),
            });
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        text.parse().map_err(|_| HeightmapError::Format {
            offset: start,
            message: format!("{what} out of range: {text}"),
        })
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<Heightmap, HeightmapError> {
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(HeightmapError::Format {
            offset: 0,
            message: "bad magic, expected \"P5\"".into(),
        });
    }
    let mut cur = PgmCursor {
        bytes,
        pos: 2,
        range_comment: None,
    };
    let width = cur.read_number("width")?;
    let height = cur.read_number("height")?;
    let maxval = cur.read_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(HeightmapError::Format {
            offset: 2,
            message: format!("zero dimension {width}x{height}"),
        });
    }
    if maxval == 0 || maxval > 65535 {
        return Err(HeightmapError::Format {
            offset: cur.pos,
            message: format!("maxval {maxval} outside 1..=65535"),
        });
    }
    // Exactly one whitespace byte separates the header from the raster.
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(HeightmapError::Format {
            offset: cur.pos,
            message: "expected single whitespace before raster".into(),
        });
    }
    cur.pos += 1;

    let bytes_per_sample = if maxval > 255 { 2 } else { 1 };
    let count = width * height;
    let expected = cur.pos + count * bytes_per_sample;
    if bytes.len() != expected {
        return Err(HeightmapError::Truncated {
            expected,
            actual: bytes.len(),
        });
    }

    let (lo, hi) = cur.range_comment.unwrap_or((0.0, 1.0));
    let span = hi - lo;
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let word = if bytes_per_sample == 2 {
            let off = cur.pos + 2 * i;
            u16::from_be_bytes([bytes[off], bytes[off + 1]]) as usize
        } else {
            bytes[cur.pos + i] as usize
        };
        samples.push(lo + word as f64 / maxval as f64 * span);
    }
    Ok(Heightmap {
        width,
        height,
        samples,
        value_range: (lo, hi),
    })
}

fn encode_pgm(map: &Heightmap) -> Vec<u8> {
    let (lo, hi) = map.value_range;
    let span = hi - lo;
    let mut out = Vec::with_capacity(64 + 2 * map.samples.len());
    out.extend_from_slice(
        format!(
            "P5\n# range {lo} {hi}\n{} {}\n65535\n",
            map.width, map.height
        )
        .as_bytes(),
    );
    for &s in &map.samples {
        let frac = if span > 0.0 {
            ((s - lo) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let word = (frac * 65535.0).round() as u16;
        out.extend_from_slice(&word.to_be_bytes());
    }
    out
}
