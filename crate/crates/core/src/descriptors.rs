//! Descriptor schemes, fusion by concatenation, and z-score normalization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::edms::{self, EdgeDirectionMode, EDMS_DIMS};
use crate::error::{Error, Result};
use crate::glcm::{self, DEFAULT_LEVELS, GLCM_DIMS};
use crate::imaging::{self, BinaryImage, GrayImage};
use crate::lbp::{self, LBP_BINS};
use crate::moments::{self, MomentScaling, HU_DIMS};

/// The seven descriptor schemes. Combined schemes concatenate their parts
/// with the first-named part first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "EDMS")]
    Edms,
    #[serde(rename = "LBP")]
    Lbp,
    #[serde(rename = "GLCM")]
    Glcm,
    #[serde(rename = "MOMENT")]
    Moment,
    #[serde(rename = "PROPOSED")]
    Proposed,
    #[serde(rename = "GLCM-EDMS")]
    GlcmEdms,
    #[serde(rename = "LBP-MOMENT")]
    LbpMoment,
}

/// Single-descriptor building blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Edms,
    Lbp,
    Glcm,
    Moment,
}

impl Part {
    pub fn dims(self) -> usize {
        match self {
            Part::Edms => EDMS_DIMS,
            Part::Lbp => LBP_BINS,
            Part::Glcm => GLCM_DIMS,
            Part::Moment => HU_DIMS,
        }
    }
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::Edms,
        Scheme::Lbp,
        Scheme::Glcm,
        Scheme::Moment,
        Scheme::Proposed,
        Scheme::GlcmEdms,
        Scheme::LbpMoment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Edms => "EDMS",
            Scheme::Lbp => "LBP",
            Scheme::Glcm => "GLCM",
            Scheme::Moment => "MOMENT",
            Scheme::Proposed => "PROPOSED",
            Scheme::GlcmEdms => "GLCM-EDMS",
            Scheme::LbpMoment => "LBP-MOMENT",
        }
    }

    pub fn parts(self) -> &'static [Part] {
        match self {
            Scheme::Edms => &[Part::Edms],
            Scheme::Lbp => &[Part::Lbp],
            Scheme::Glcm => &[Part::Glcm],
            Scheme::Moment => &[Part::Moment],
            Scheme::Proposed => &[Part::Edms, Part::Lbp],
            Scheme::GlcmEdms => &[Part::Glcm, Part::Edms],
            Scheme::LbpMoment => &[Part::Lbp, Part::Moment],
        }
    }

    pub fn dims(self) -> usize {
        self.parts().iter().map(|p| p.dims()).sum()
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase().replace('_', "-");
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == up)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme `{s}`")))
    }
}

/// Fixed-length feature vector tagged with the scheme that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub scheme: Scheme,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(scheme: Scheme, values: Vec<f64>) -> Result<Self> {
        if values.len() != scheme.dims() {
            return Err(Error::InvalidArgument(format!(
                "{scheme} needs {} values, got {}",
                scheme.dims(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidFeature(format!(
                "{scheme} component {i} is {}",
                values[i]
            )));
        }
        Ok(Self { scheme, values })
    }

    pub fn dims(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub glcm_levels: usize,
    pub edge_direction: EdgeDirectionMode,
    pub moment_scaling: MomentScaling,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            glcm_levels: DEFAULT_LEVELS,
            edge_direction: EdgeDirectionMode::ArgmaxIndex,
            moment_scaling: MomentScaling::SignedLog,
        }
    }
}

/// Lazily computed parts of one image, shared across schemes.
struct PartCache<'a> {
    gray: &'a GrayImage,
    cfg: &'a ExtractionConfig,
    binary: Option<BinaryImage>,
    parts: [Option<Vec<f64>>; 4],
}

impl<'a> PartCache<'a> {
    fn new(gray: &'a GrayImage, cfg: &'a ExtractionConfig) -> Self {
        Self {
            gray,
            cfg,
            binary: None,
            parts: Default::default(),
        }
    }

    fn binary(&mut self) -> &BinaryImage {
        self.binary
            .get_or_insert_with(|| imaging::binarize_otsu(self.gray))
    }

    fn part(&mut self, p: Part) -> Result<&[f64]> {
        let slot = p as usize;
        if self.parts[slot].is_none() {
            let v = match p {
                Part::Edms => {
                    let mode = self.cfg.edge_direction;
                    edms::edms_from_binary(self.binary(), mode).to_vec()
                }
                Part::Lbp => lbp::lbp_histogram(self.gray).bins,
                Part::Glcm => glcm::glcm_descriptor(self.gray, self.cfg.glcm_levels)?,
                Part::Moment => {
                    let scaling = self.cfg.moment_scaling;
                    moments::moment_descriptor(self.binary(), scaling)
                }
            };
            self.parts[slot] = Some(v);
        }
        Ok(self.parts[slot].as_deref().unwrap())
    }

    fn scheme(&mut self, scheme: Scheme) -> Result<FeatureVector> {
        let mut values = Vec::with_capacity(scheme.dims());
        for &p in scheme.parts() {
            values.extend_from_slice(self.part(p)?);
        }
        FeatureVector::new(scheme, values)
    }
}

/// Binarize → edges → EDMS where EDMS is involved; LBP and GLCM read the
/// grayscale image; moments read the binary image.
pub fn extract(img: &GrayImage, scheme: Scheme, cfg: &ExtractionConfig) -> Result<FeatureVector> {
    PartCache::new(img, cfg).scheme(scheme)
}

/// Extract several schemes from one image, computing each part once.
pub fn extract_many(
    img: &GrayImage,
    schemes: &[Scheme],
    cfg: &ExtractionConfig,
) -> Result<Vec<FeatureVector>> {
    let mut cache = PartCache::new(img, cfg);
    schemes.iter().map(|&s| cache.scheme(s)).collect()
}

/// Per-dimension z-scoring fitted on training vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub scheme: Scheme,
    pub mean: Vec<f64>,
    /// Population standard deviation, floored to 1 where below 1e-12.
    pub std: Vec<f64>,
}

const STD_FLOOR: f64 = 1e-12;

pub fn fit_normalizer<'a, I>(train: I) -> Result<Normalizer>
where
    I: IntoIterator<Item = &'a FeatureVector>,
{
    let train: Vec<&FeatureVector> = train.into_iter().collect();
    let first = train
        .first()
        .ok_or_else(|| Error::InvalidArgument("cannot fit a normalizer on no vectors".into()))?;
    let scheme = first.scheme;
    let d = first.dims();
    if let Some(bad) = train.iter().find(|v| v.scheme != scheme || v.dims() != d) {
        return Err(Error::SchemeMismatch {
            expected: scheme.to_string(),
            found: bad.scheme.to_string(),
        });
    }
    let n = train.len() as f64;
    let mut mean = vec![0.0; d];
    for v in &train {
        for (m, x) in mean.iter_mut().zip(&v.values) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for v in &train {
        for ((s, x), m) in var.iter_mut().zip(&v.values).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    let std = var
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd < STD_FLOOR {
                1.0
            } else {
                sd
            }
        })
        .collect();
    Ok(Normalizer { scheme, mean, std })
}

impl Normalizer {
    fn check(&self, v: &FeatureVector) -> Result<()> {
        if v.scheme != self.scheme || v.dims() != self.mean.len() {
            return Err(Error::SchemeMismatch {
                expected: self.scheme.to_string(),
                found: v.scheme.to_string(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, v: &FeatureVector) -> Result<FeatureVector> {
        self.check(v)?;
        let values = v
            .values
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect();
        Ok(FeatureVector {
            scheme: v.scheme,
            values,
        })
    }

    pub fn invert(&self, v: &FeatureVector) -> Result<FeatureVector> {
        self.check(v)?;
        let values = v
            .values
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| x * s + m)
            .collect();
        Ok(FeatureVector {
            scheme: v.scheme,
            values,
        })
    }
}

pub fn apply_normalizer(n: &Normalizer, v: &FeatureVector) -> Result<FeatureVector> {
    n.apply(v)
}
