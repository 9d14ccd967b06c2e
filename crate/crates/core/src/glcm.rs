//! Gray-level co-occurrence matrices at distance 1 and their
//! Haralick-style statistics.

use crate::error::{Error, Result};
use crate::imaging::GrayImage;

pub const DEFAULT_LEVELS: usize = 16;
pub const GLCM_FEATURES: usize = 7;
pub const GLCM_DIMS: usize = GLCM_FEATURES * 4;

/// Gray image requantized to `levels` values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedImage {
    pub width: usize,
    pub height: usize,
    pub levels: usize,
    pub data: Vec<u8>,
}

impl QuantizedImage {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> usize {
        self.data[y * self.width + x] as usize
    }

    /// Rotate by 180°.
    pub fn rotate180(&self) -> QuantizedImage {
        let mut data = self.data.clone();
        data.reverse();
        QuantizedImage { data, ..*self }
    }
}

/// `floor(v · levels / 256)` for every pixel.
pub fn quantize(g: &GrayImage, levels: usize) -> Result<QuantizedImage> {
    if !(2..=256).contains(&levels) {
        return Err(Error::InvalidArgument(format!(
            "gray levels must lie in [2, 256], got {levels}"
        )));
    }
    let data = g
        .data()
        .iter()
        .map(|&v| (v as usize * levels / 256) as u8)
        .collect();
    Ok(QuantizedImage {
        width: g.width(),
        height: g.height(),
        levels,
        data,
    })
}

/// Pixel displacement for one of the four orientations, `y` down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GlcmOffset {
    pub dx: isize,
    pub dy: isize,
    pub degrees: u32,
}

impl GlcmOffset {
    pub const DEG0: GlcmOffset = GlcmOffset { dx: 1, dy: 0, degrees: 0 };
    pub const DEG45: GlcmOffset = GlcmOffset { dx: 1, dy: -1, degrees: 45 };
    pub const DEG90: GlcmOffset = GlcmOffset { dx: 0, dy: -1, degrees: 90 };
    pub const DEG135: GlcmOffset = GlcmOffset { dx: -1, dy: -1, degrees: 135 };
    pub const ALL: [GlcmOffset; 4] = [Self::DEG0, Self::DEG45, Self::DEG90, Self::DEG135];
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlcmMatrix {
    pub levels: usize,
    /// Row-major `levels × levels` pair counts.
    pub counts: Vec<u64>,
    /// `counts / Σ counts`, present when normalization was requested.
    pub normalized: Option<Vec<f64>>,
}

impl GlcmMatrix {
    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.levels + j]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn compute_glcm(
    q: &QuantizedImage,
    off: GlcmOffset,
    symmetric: bool,
    normalize: bool,
) -> GlcmMatrix {
    let n = q.levels;
    let mut counts = vec![0u64; n * n];
    let (w, h) = (q.width as isize, q.height as isize);
    // Ranges of reference pixels whose partner stays in bounds.
    let xs = 0.max(-off.dx)..w.min(w - off.dx);
    let ys = 0.max(-off.dy)..h.min(h - off.dy);
    for y in ys {
        for x in xs.clone() {
            let i = q.get(x as usize, y as usize);
            let j = q.get((x + off.dx) as usize, (y + off.dy) as usize);
            counts[i * n + j] += 1;
        }
    }
    if symmetric {
        for i in 0..n {
            for j in i + 1..n {
                let s = counts[i * n + j] + counts[j * n + i];
                counts[i * n + j] = s;
                counts[j * n + i] = s;
            }
            counts[i * n + i] *= 2;
        }
    }
    let normalized = normalize.then(|| {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            vec![0.0; n * n]
        } else {
            counts.iter().map(|&c| c as f64 / total as f64).collect()
        }
    });
    GlcmMatrix {
        levels: n,
        counts,
        normalized,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GlcmFeatures {
    pub contrast: f64,
    pub homogeneity: f64,
    pub asm: f64,
    pub entropy: f64,
    pub variance_i: f64,
    pub variance_j: f64,
    pub correlation: f64,
}

impl GlcmFeatures {
    pub fn to_array(&self) -> [f64; GLCM_FEATURES] {
        [
            self.contrast,
            self.homogeneity,
            self.asm,
            self.entropy,
            self.variance_i,
            self.variance_j,
            self.correlation,
        ]
    }
}

pub fn glcm_features(m: &GlcmMatrix) -> Result<GlcmFeatures> {
    match &m.normalized {
        Some(p) => haralick(m.levels, p),
        None if m.total() == 0 => Ok(GlcmFeatures::default()),
        None => Err(Error::InvalidArgument(
            "GLCM statistics need a normalized matrix".into(),
        )),
    }
}

/// Statistics of a row-major `levels × levels` probability table. The table
/// must sum to 1 (within 1e-9) or be all zero.
pub fn haralick(levels: usize, p: &[f64]) -> Result<GlcmFeatures> {
    if p.len() != levels * levels {
        return Err(Error::InvalidArgument(format!(
            "expected {} cells, got {}",
            levels * levels,
            p.len()
        )));
    }
    let total: f64 = p.iter().sum();
    if total == 0.0 && p.iter().all(|&v| v == 0.0) {
        return Ok(GlcmFeatures::default());
    }
    if (total - 1.0).abs() > 1e-9 || p.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "matrix is not a probability table (sum {total})"
        )));
    }

    let mut f = GlcmFeatures::default();
    let (mut mu_i, mut mu_j) = (0.0, 0.0);
    for i in 0..levels {
        for j in 0..levels {
            let v = p[i * levels + j];
            if v == 0.0 {
                continue;
            }
            let d = i as f64 - j as f64;
            f.contrast += v * d * d;
            f.homogeneity += v / (1.0 + d * d);
            f.asm += v * v;
            f.entropy -= v * v.ln();
            mu_i += v * i as f64;
            mu_j += v * j as f64;
        }
    }
    let mut cov = 0.0;
    for i in 0..levels {
        for j in 0..levels {
            let v = p[i * levels + j];
            if v == 0.0 {
                continue;
            }
            let di = i as f64 - mu_i;
            let dj = j as f64 - mu_j;
            f.variance_i += v * di * di;
            f.variance_j += v * dj * dj;
            cov += v * di * dj;
        }
    }
    f.correlation = if f.variance_i > 0.0 && f.variance_j > 0.0 {
        (cov / (f.variance_i * f.variance_j).sqrt()).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    Ok(f)
}

/// Symmetric, normalized GLCM statistics at 0°, 45°, 90° and 135°,
/// concatenated orientation by orientation (28 values).
pub fn glcm_descriptor(g: &GrayImage, levels: usize) -> Result<Vec<f64>> {
    let q = quantize(g, levels)?;
    let mut out = Vec::with_capacity(GLCM_DIMS);
    for off in GlcmOffset::ALL {
        let m = compute_glcm(&q, off, true, true);
        out.extend_from_slice(&glcm_features(&m)?.to_array());
    }
    Ok(out)
}
