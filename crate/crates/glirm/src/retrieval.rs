//! Page-similarity retrieval: wavelet hashes of page images compared by
//! Manhattan distance.
//!
//! The hash pipeline is deterministic: box-filter resize to a square
//! raster, a multi-level 2D Haar decomposition, and a median threshold over
//! the approximation band. With the default configuration (8x8 band, 3
//! levels) the raster is 64x64 and the hash is 64 bits.

use std::collections::BTreeMap;

use image::GrayImage;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("image has zero width or height")]
    EmptyImage,
    #[error("hash length mismatch: {a} vs {b} bits")]
    LengthMismatch { a: usize, b: usize },
    #[error("retrieval index is empty")]
    EmptyIndex,
    #[error("identifier {0:?} already indexed")]
    DuplicateIdentifier(String),
    #[error("cannot decode image: {0}")]
    Decode(String),
    #[error("malformed index: {0}")]
    MalformedIndex(String),
    #[error("invalid hash config: {0}")]
    InvalidHashConfig(String),
}

/// Wavelet-hash parameters. The raster is resized to
/// `hash_size * 2^levels` on a side so the approximation band after
/// `levels` Haar steps is exactly `hash_size` square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashConfig {
    /// Side length of the approximation band; the hash has
    /// `hash_size^2` bits. Default 8 (64-bit hash).
    pub hash_size: u32,
    /// Number of Haar decomposition levels. Default 3.
    pub levels: u32,
    /// Threshold rule for coefficients equal to the band median: `false`
    /// (default) maps ties to 0, `true` maps them to 1.
    pub ties_to_one: bool,
}

impl Default for HashConfig {
    fn default() -> Self {
        HashConfig {
            hash_size: 8,
            levels: 3,
            ties_to_one: false,
        }
    }
}

impl HashConfig {
    /// Side length of the resized raster.
    pub fn rescale(&self) -> u32 {
        self.hash_size << self.levels
    }

    fn validate(&self) -> Result<(), RetrievalError> {
        if self.hash_size == 0 {
            return Err(RetrievalError::InvalidHashConfig(
                "hash_size must be positive".into(),
            ));
        }
        if self.levels > 8 || self.hash_size.checked_shl(self.levels).is_none_or(|r| r > 4096) {
            return Err(RetrievalError::InvalidHashConfig(format!(
                "raster {} x 2^{} too large",
                self.hash_size, self.levels
            )));
        }
        Ok(())
    }
}

/// A perceptual bit-vector fingerprint of an image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WaveletHash {
    pub bits: Vec<bool>,
}

impl WaveletHash {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

// Hashes travel in index files as transparent "0101..." strings.
impl Serialize for WaveletHash {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let s: String = self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        serializer.serialize_str(&s)
    }
}

impl<'de> Deserialize<'de> for WaveletHash {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(D::Error::custom(format!("invalid hash bit {other:?}"))),
            })
            .collect::<Result<Vec<bool>, _>>()?;
        Ok(WaveletHash { bits })
    }
}

/// Decodes a PNG or PPM/PGM image from raw bytes into a grayscale raster.
/// Decoding is capped at 16384 px per side and 256 MiB of allocation, so
/// crafted headers cannot balloon memory.
pub fn decode_image(bytes: &[u8]) -> Result<GrayImage, RetrievalError> {
    let mut reader = image::ImageReader::new(std::io::Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| RetrievalError::Decode(e.to_string()))?;
    let mut limits = image::Limits::default();
    limits.max_image_width = Some(1 << 14);
    limits.max_image_height = Some(1 << 14);
    limits.max_alloc = Some(1 << 28);
    reader.limits(limits);
    let img = reader
        .decode()
        .map_err(|e| RetrievalError::Decode(e.to_string()))?;
    let gray = img.to_luma8();
    if gray.width() == 0 || gray.height() == 0 {
        return Err(RetrievalError::EmptyImage);
    }
    Ok(gray)
}

/// Hashes a grayscale raster with the default configuration.
pub fn wavelet_hash(image: &GrayImage) -> Result<WaveletHash, RetrievalError> {
    wavelet_hash_with(image, &HashConfig::default())
}

/// Hashes a grayscale raster: box-filter resize to the configured square,
/// `levels` Haar decomposition steps, then a median threshold over the
/// approximation band (strictly greater than the median maps to 1 under the
/// default tie rule).
pub fn wavelet_hash_with(
    image: &GrayImage,
    config: &HashConfig,
) -> Result<WaveletHash, RetrievalError> {
    config.validate()?;
    if image.width() == 0 || image.height() == 0 {
        return Err(RetrievalError::EmptyImage);
    }
    let side = config.rescale() as usize;
    let mut grid = box_resize(image, side);
    haar_decompose(&mut grid, side, config.levels);

    let band = config.hash_size as usize;
    let mut coeffs = Vec::with_capacity(band * band);
    for r in 0..band {
        for c in 0..band {
            coeffs.push(grid[r * side + c]);
        }
    }
    let median = median_of(&coeffs);
    let bits = coeffs
        .iter()
        .map(|&v| {
            if config.ties_to_one {
                v >= median
            } else {
                v > median
            }
        })
        .collect();
    Ok(WaveletHash { bits })
}

/// Area-averaging (box filter) resize to a `side` x `side` grid of f64
/// intensities.
fn box_resize(image: &GrayImage, side: usize) -> Vec<f64> {
    let (w, h) = (image.width() as usize, image.height() as usize);
    let sx = w as f64 / side as f64;
    let sy = h as f64 / side as f64;
    let mut out = vec![0.0f64; side * side];
    for dy in 0..side {
        let y0 = dy as f64 * sy;
        let y1 = y0 + sy;
        for dx in 0..side {
            let x0 = dx as f64 * sx;
            let x1 = x0 + sx;
            let mut acc = 0.0;
            let mut weight = 0.0;
            let mut py = y0.floor() as usize;
            while (py as f64) < y1 && py < h {
                let wy = overlap(py as f64, py as f64 + 1.0, y0, y1);
                let mut px = x0.floor() as usize;
                while (px as f64) < x1 && px < w {
                    let wx = overlap(px as f64, px as f64 + 1.0, x0, x1);
                    let cover = wx * wy;
                    acc += cover * f64::from(image.get_pixel(px as u32, py as u32).0[0]);
                    weight += cover;
                    px += 1;
                }
                py += 1;
            }
            out[dy * side + dx] = if weight > 0.0 { acc / weight } else { 0.0 };
        }
    }
    out
}

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// In-place Haar approximation cascade: each level replaces the top-left
/// `size x size` region with pairwise row then column means of half the
/// side length.
fn haar_decompose(grid: &mut [f64], stride: usize, levels: u32) {
    let mut size = stride;
    for _ in 0..levels {
        let half = size / 2;
        // Rows: approximation into the left half.
        let mut row_buf = vec![0.0f64; half];
        for r in 0..size {
            for (k, slot) in row_buf.iter_mut().enumerate() {
                *slot = (grid[r * stride + 2 * k] + grid[r * stride + 2 * k + 1]) / 2.0;
            }
            grid[r * stride..r * stride + half].copy_from_slice(&row_buf);
        }
        // Columns: approximation into the top half.
        let mut col_buf = vec![0.0f64; half];
        for c in 0..half {
            for (k, slot) in col_buf.iter_mut().enumerate() {
                *slot = (grid[(2 * k) * stride + c] + grid[(2 * k + 1) * stride + c]) / 2.0;
            }
            for (k, &v) in col_buf.iter().enumerate() {
                grid[k * stride + c] = v;
            }
        }
        size = half;
    }
}

fn median_of(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    }
}

/// Manhattan distance between two hashes: the sum of absolute bit
/// differences, which on bit vectors equals the Hamming distance.
pub fn manhattan_distance(a: &WaveletHash, b: &WaveletHash) -> Result<u32, RetrievalError> {
    if a.bits.len() != b.bits.len() {
        return Err(RetrievalError::LengthMismatch {
            a: a.bits.len(),
            b: b.bits.len(),
        });
    }
    Ok(a.bits
        .iter()
        .zip(&b.bits)
        .map(|(&x, &y)| u32::from(x != y))
        .sum())
}

/// Page identifier to hash, used for nearest-neighbor exemplar lookup.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RetrievalIndex {
    pub entries: BTreeMap<String, WaveletHash>,
}

impl RetrievalIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, hash: WaveletHash) -> Result<(), RetrievalError> {
        let id = id.into();
        if self.entries.contains_key(&id) {
            return Err(RetrievalError::DuplicateIdentifier(id));
        }
        self.entries.insert(id, hash);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("index serialization cannot fail")
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self, RetrievalError> {
        serde_json::from_slice(bytes).map_err(|e| RetrievalError::MalformedIndex(e.to_string()))
    }
}

/// The `k` index entries nearest to the query, ordered by ascending
/// distance with ties broken by identifier. Requesting more entries than
/// the index holds returns the full index, sorted.
pub fn retrieve_nearest(
    index: &RetrievalIndex,
    query: &WaveletHash,
    k: usize,
) -> Result<Vec<(String, u32)>, RetrievalError> {
    if index.entries.is_empty() {
        return Err(RetrievalError::EmptyIndex);
    }
    let mut scored = Vec::with_capacity(index.entries.len());
    for (id, hash) in &index.entries {
        scored.push((id.clone(), manhattan_distance(query, hash)?));
    }
    scored.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}
