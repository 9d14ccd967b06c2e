//! Classifiers: a random forest, a one-hidden-layer perceptron trained by
//! backpropagation, and a 1-nearest-neighbour reference.

pub mod forest;
pub mod knn;
pub mod mlp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::descriptors::{fit_normalizer, FeatureVector, Normalizer, Scheme};
use crate::error::{Error, Result};
use crate::io;

pub use forest::{Forest, ForestConfig};
pub use knn::NearestNeighbour;
pub use mlp::{mlp_gradient_check, Mlp, MlpConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Knn,
    Forest,
    Mlp,
}

impl ClassifierKind {
    /// Short tag used in report rows, e.g. `RF/PROPOSED`.
    pub fn tag(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "KNN",
            ClassifierKind::Forest => "RF",
            ClassifierKind::Mlp => "NN",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierKind::Knn => "knn",
            ClassifierKind::Forest => "forest",
            ClassifierKind::Mlp => "mlp",
        })
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "knn" | "1nn" | "nn1" => Ok(ClassifierKind::Knn),
            "rf" | "forest" | "random-forest" => Ok(ClassifierKind::Forest),
            "mlp" | "nn" | "mlnn" => Ok(ClassifierKind::Mlp),
            _ => Err(Error::InvalidArgument(format!("unknown classifier `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierConfig {
    Knn,
    Forest(ForestConfig),
    Mlp(MlpConfig),
}

impl ClassifierConfig {
    pub fn default_for(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::Knn => ClassifierConfig::Knn,
            ClassifierKind::Forest => ClassifierConfig::Forest(ForestConfig::default()),
            ClassifierKind::Mlp => ClassifierConfig::Mlp(MlpConfig::default()),
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierConfig::Knn => ClassifierKind::Knn,
            ClassifierConfig::Forest(_) => ClassifierKind::Forest,
            ClassifierConfig::Mlp(_) => ClassifierKind::Mlp,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ClassifierConfig::Knn => 0,
            ClassifierConfig::Forest(c) => c.seed,
            ClassifierConfig::Mlp(c) => c.seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            ClassifierConfig::Knn => ClassifierConfig::Knn,
            ClassifierConfig::Forest(c) => ClassifierConfig::Forest(ForestConfig { seed, ..c.clone() }),
            ClassifierConfig::Mlp(c) => ClassifierConfig::Mlp(MlpConfig { seed, ..c.clone() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelParams {
    Knn(NearestNeighbour),
    Forest(Forest),
    Mlp(Mlp),
}

/// A trained, immutable classifier. Predictions only ever name labels in
/// `classes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ClassifierKind,
    pub scheme: Scheme,
    pub classes: Vec<String>,
    pub seed: u64,
    pub config: ClassifierConfig,
    pub normalizer: Option<Normalizer>,
    pub parameters: ModelParams,
}

/// Training rows encoded as class indices into a sorted label list.
pub(crate) struct Encoded<'a> {
    pub rows: Vec<&'a [f64]>,
    pub targets: Vec<usize>,
    pub n_classes: usize,
    pub dims: usize,
}

fn validate<'a>(
    vectors: &'a [FeatureVector],
    labels: &[String],
) -> Result<(Scheme, Vec<String>, Encoded<'a>)> {
    if vectors.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} vectors but {} labels",
            vectors.len(),
            labels.len()
        )));
    }
    let first = vectors
        .first()
        .ok_or_else(|| Error::InvalidArgument("no training data".into()))?;
    let scheme = first.scheme;
    for v in vectors {
        if v.scheme != scheme || v.dims() != first.dims() {
            return Err(Error::SchemeMismatch {
                expected: scheme.to_string(),
                found: v.scheme.to_string(),
            });
        }
        if let Some(x) = v.values.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidFeature(format!("non-finite training value {x}")));
        }
    }
    let mut classes: Vec<String> = labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::DegenerateLabels(classes.len()));
    }
    let targets = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label present"))
        .collect();
    let enc = Encoded {
        rows: vectors.iter().map(|v| v.values.as_slice()).collect(),
        targets,
        n_classes: classes.len(),
        dims: first.dims(),
    };
    Ok((scheme, classes, enc))
}

/// Train on raw feature vectors.
pub fn train(
    config: &ClassifierConfig,
    vectors: &[FeatureVector],
    labels: &[String],
) -> Result<TrainedModel> {
    train_inner(config, vectors, labels, None)
}

/// Fit a z-score normalizer on the given training vectors, train on the
/// normalized vectors, and embed the normalizer in the model.
pub fn train_normalized(
    config: &ClassifierConfig,
    vectors: &[FeatureVector],
    labels: &[String],
) -> Result<TrainedModel> {
    let normalizer = fit_normalizer(vectors)?;
    let normalized = vectors
        .iter()
        .map(|v| normalizer.apply(v))
        .collect::<Result<Vec<_>>>()?;
    train_inner(config, &normalized, labels, Some(normalizer))
}

fn train_inner(
    config: &ClassifierConfig,
    vectors: &[FeatureVector],
    labels: &[String],
    normalizer: Option<Normalizer>,
) -> Result<TrainedModel> {
    let (scheme, classes, enc) = validate(vectors, labels)?;
    let parameters = match config {
        ClassifierConfig::Knn => ModelParams::Knn(NearestNeighbour::fit(&enc)),
        ClassifierConfig::Forest(c) => ModelParams::Forest(Forest::fit(c, &enc)?),
        ClassifierConfig::Mlp(c) => ModelParams::Mlp(Mlp::fit(c, &enc)?),
    };
    Ok(TrainedModel {
        kind: config.kind(),
        scheme,
        classes,
        seed: config.seed(),
        config: config.clone(),
        normalizer,
        parameters,
    })
}

impl TrainedModel {
    pub fn dims(&self) -> usize {
        self.scheme.dims()
    }

    /// Index into `classes` of the predicted label.
    pub fn predict_index(&self, v: &FeatureVector) -> Result<usize> {
        if v.scheme != self.scheme || v.dims() != self.dims() {
            return Err(Error::SchemeMismatch {
                expected: self.scheme.to_string(),
                found: v.scheme.to_string(),
            });
        }
        let normalized;
        let x = match &self.normalizer {
            Some(n) => {
                normalized = n.apply(v)?;
                &normalized.values
            }
            None => &v.values,
        };
        Ok(match &self.parameters {
            ModelParams::Knn(m) => m.predict(x),
            ModelParams::Forest(m) => m.predict(x, self.classes.len()),
            ModelParams::Mlp(m) => m.predict(x),
        })
    }

    pub fn predict(&self, v: &FeatureVector) -> Result<&str> {
        Ok(&self.classes[self.predict_index(v)?])
    }

    pub fn to_json(&self) -> Result<String> {
        io::to_versioned_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: TrainedModel = io::from_versioned_json(text)?;
        if m.kind != m.config.kind() {
            return Err(Error::Parse(format!(
                "model kind {} disagrees with its config ({})",
                m.kind,
                m.config.kind()
            )));
        }
        Ok(m)
    }
}
