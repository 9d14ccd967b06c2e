//! Repeated-holdout experiments over descriptor schemes and classifiers.
//!
//! Repetition `k` uses split seed `mix(base_seed, k)` and classifier seed
//! `mix(split_seed, 0)`. Every scheme/classifier cell of a repetition sees
//! the same split, so scheme comparisons are paired.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{self, ClassifierConfig, ClassifierKind};
use crate::dataset::{self, LabeledDataset, Split, SplitSpec};
use crate::descriptors::{extract_many, ExtractionConfig, FeatureVector, Scheme};
use crate::error::{Error, Result};
use crate::rng::mix;
use crate::stats::{summarize, StdConvention, Summary};

/// Training fractions cycled through when sweeping.
pub const SWEEP_FRACTIONS: [f64; 5] = [0.6, 0.625, 0.65, 0.675, 0.7];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub train_fraction: f64,
    pub repetitions: usize,
    pub base_seed: u64,
    /// Z-score features before training. `None` picks the per-classifier
    /// default: on for the MLP, off otherwise.
    pub normalize: Option<bool>,
    /// Cycle the training fraction through [`SWEEP_FRACTIONS`].
    pub sweep_split: bool,
    pub extraction: ExtractionConfig,
    pub std_convention: StdConvention,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            repetitions: 5,
            base_seed: 0,
            normalize: None,
            sweep_split: false,
            extraction: ExtractionConfig::default(),
            std_convention: StdConvention::Population,
        }
    }
}

impl ExperimentConfig {
    pub fn fraction_for(&self, rep: usize) -> f64 {
        if self.sweep_split {
            SWEEP_FRACTIONS[rep % SWEEP_FRACTIONS.len()]
        } else {
            self.train_fraction
        }
    }

    pub fn split_seed(&self, rep: usize) -> u64 {
        mix(self.base_seed, rep as u64)
    }

    pub fn normalize_for(&self, kind: ClassifierKind) -> bool {
        self.normalize.unwrap_or(kind == ClassifierKind::Mlp)
    }

    fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::InvalidArgument("at least one repetition is required".into()));
        }
        for rep in 0..self.repetitions.min(SWEEP_FRACTIONS.len()) {
            SplitSpec::new(self.fraction_for(rep), 0)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub extract: Duration,
    pub train: Duration,
    pub predict: Duration,
}

/// One scheme × classifier row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scheme: Scheme,
    pub classifier: ClassifierKind,
    pub train_fractions: Vec<f64>,
    /// Percent correct per repetition.
    pub accuracies: Vec<f64>,
    pub summary: Summary,
    /// Percent correct per class, per repetition.
    pub per_class: Vec<BTreeMap<String, f64>>,
    pub split_fingerprints: Vec<u64>,
    pub timings: StageTimings,
}

impl ExperimentReport {
    /// Row label such as `RF/PROPOSED`.
    pub fn method(&self) -> String {
        format!("{}/{}", self.classifier.tag(), self.scheme)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub dataset: String,
    pub repetitions: usize,
    pub std_convention: StdConvention,
    pub rows: Vec<ExperimentReport>,
    pub extraction_time: Duration,
}

/// Result of training and testing on one split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome {
    pub accuracy: f64,
    pub per_class: BTreeMap<String, f64>,
    pub train_time: Duration,
    pub predict_time: Duration,
}

/// Train on `split.train` and score on `split.test`. Normalization, when
/// enabled, is fitted on the training partition alone; overlapping
/// partitions are rejected before anything is fitted.
pub fn evaluate_split(
    features: &[FeatureVector],
    labels: &[String],
    split: &Split,
    classifier: &ClassifierConfig,
    normalize: bool,
) -> Result<SplitOutcome> {
    split.check_disjoint()?;
    if split.test.is_empty() {
        return Err(Error::InvalidArgument("empty test partition".into()));
    }
    let train_x: Vec<FeatureVector> = split.train.iter().map(|&i| features[i].clone()).collect();
    let train_y: Vec<String> = split.train.iter().map(|&i| labels[i].clone()).collect();

    let t0 = Instant::now();
    let model = if normalize {
        classify::train_normalized(classifier, &train_x, &train_y)?
    } else {
        classify::train(classifier, &train_x, &train_y)?
    };
    let train_time = t0.elapsed();

    let t1 = Instant::now();
    let mut hits: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut correct = 0usize;
    for &i in &split.test {
        let predicted = model.predict(&features[i])?;
        let ok = predicted == labels[i];
        correct += ok as usize;
        let e = hits.entry(labels[i].clone()).or_default();
        e.0 += ok as usize;
        e.1 += 1;
    }
    let predict_time = t1.elapsed();
    Ok(SplitOutcome {
        accuracy: correct as f64 / split.test.len() as f64 * 100.0,
        per_class: hits
            .into_iter()
            .map(|(c, (ok, n))| (c, ok as f64 / n as f64 * 100.0))
            .collect(),
        train_time,
        predict_time,
    })
}

/// Features of every sample for every scheme: `out[scheme][sample]`.
pub fn extract_dataset(
    d: &LabeledDataset,
    schemes: &[Scheme],
    cfg: &ExtractionConfig,
) -> Result<Vec<Vec<FeatureVector>>> {
    let per_sample: Vec<Vec<FeatureVector>> = d
        .samples
        .par_iter()
        .map(|s| extract_many(&s.image, schemes, cfg).map_err(|e| e.in_sample(&s.id)))
        .collect::<Result<_>>()?;
    let mut out: Vec<Vec<FeatureVector>> = vec![Vec::with_capacity(d.len()); schemes.len()];
    for fvs in per_sample {
        for (k, fv) in fvs.into_iter().enumerate() {
            out[k].push(fv);
        }
    }
    Ok(out)
}

/// Run the full cross product of schemes × classifiers × repetitions.
/// Rows are ordered classifier-major, then scheme, as given.
pub fn compare_schemes(
    d: &LabeledDataset,
    dataset_name: &str,
    schemes: &[Scheme],
    classifiers: &[ClassifierConfig],
    cfg: &ExperimentConfig,
) -> Result<ComparisonReport> {
    cfg.validate()?;
    let t0 = Instant::now();
    let features = extract_dataset(d, schemes, &cfg.extraction)?;
    let extraction_time = t0.elapsed();
    let labels = d.labels();

    let splits: Vec<Split> = (0..cfg.repetitions)
        .map(|rep| {
            let spec = SplitSpec::new(cfg.fraction_for(rep), cfg.split_seed(rep))?;
            dataset::split(d, &spec).map_err(|e| e.in_repetition(rep))
        })
        .collect::<Result<_>>()?;

    let cells: Vec<(usize, usize, usize)> = (0..classifiers.len())
        .flat_map(|c| (0..schemes.len()).flat_map(move |s| (0..cfg.repetitions).map(move |r| (c, s, r))))
        .collect();
    let outcomes: Vec<SplitOutcome> = cells
        .par_iter()
        .map(|&(c, s, rep)| {
            let clf = classifiers[c].with_seed(mix(cfg.split_seed(rep), 0));
            evaluate_split(
                &features[s],
                &labels,
                &splits[rep],
                &clf,
                cfg.normalize_for(clf.kind()),
            )
            .map_err(|e| e.in_repetition(rep))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(classifiers.len() * schemes.len());
    for (ci, clf) in classifiers.iter().enumerate() {
        for (si, &scheme) in schemes.iter().enumerate() {
            let base = (ci * schemes.len() + si) * cfg.repetitions;
            let runs = &outcomes[base..base + cfg.repetitions];
            let accuracies: Vec<f64> = runs.iter().map(|o| o.accuracy).collect();
            rows.push(ExperimentReport {
                scheme,
                classifier: clf.kind(),
                train_fractions: (0..cfg.repetitions).map(|r| cfg.fraction_for(r)).collect(),
                summary: summarize(&accuracies),
                accuracies,
                per_class: runs.iter().map(|o| o.per_class.clone()).collect(),
                split_fingerprints: splits.iter().map(|s| s.fingerprint()).collect(),
                timings: StageTimings {
                    extract: extraction_time,
                    train: runs.iter().map(|o| o.train_time).sum(),
                    predict: runs.iter().map(|o| o.predict_time).sum(),
                },
            });
        }
    }
    Ok(ComparisonReport {
        dataset: dataset_name.to_string(),
        repetitions: cfg.repetitions,
        std_convention: cfg.std_convention,
        rows,
        extraction_time,
    })
}

pub fn run_experiment(
    d: &LabeledDataset,
    scheme: Scheme,
    classifier: &ClassifierConfig,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    let mut r = compare_schemes(d, "", &[scheme], std::slice::from_ref(classifier), cfg)?;
    Ok(r.rows.remove(0))
}

impl ComparisonReport {
    fn std_of(&self, r: &ExperimentReport) -> f64 {
        r.summary.std(self.std_convention)
    }

    fn exp_headers(&self) -> Vec<String> {
        (1..=self.repetitions).map(|k| format!("EXP#{k}")).collect()
    }

    /// CSV with one row per method. Timings are not included, so the file
    /// is a deterministic function of the inputs and seeds.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["dataset".to_string(), "method".into()];
        header.extend(self.exp_headers());
        header.extend(["Mean", "St.Dv", "St.Dv.population", "St.Dv.sample"].map(String::from));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![self.dataset.clone(), r.method()];
            rec.extend(r.accuracies.iter().map(|a| format!("{a:.2}")));
            rec.push(format!("{:.2}", r.summary.mean));
            rec.push(format!("{:.2}", self.std_of(r)));
            rec.push(format!("{:.4}", r.summary.std_population));
            rec.push(format!("{:.4}", r.summary.std_sample));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
    }

    /// Aligned text table: dataset, method, per-run accuracy, mean, stddev.
    pub fn to_text(&self) -> String {
        let mut header = vec!["Dataset".to_string(), "Method".into()];
        header.extend(self.exp_headers());
        header.extend(["Mean".to_string(), "St.Dv".into()]);
        let mut table = vec![header];
        for (i, r) in self.rows.iter().enumerate() {
            let mut row = vec![
                if i == 0 { self.dataset.clone() } else { String::new() },
                r.method(),
            ];
            row.extend(r.accuracies.iter().map(|a| format!("{a:.2}")));
            row.push(format!("{:.2}", r.summary.mean));
            row.push(format!("{:.2}", self.std_of(r)));
            table.push(row);
        }
        let cols = table[0].len();
        let widths: Vec<usize> = (0..cols)
            .map(|c| table.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &table {
            let mut line = String::new();
            for (c, cell) in row.iter().enumerate() {
                if c < 2 {
                    let _ = write!(line, "{cell:<w$}  ", w = widths[c]);
                } else {
                    let _ = write!(line, "{cell:>w$}  ", w = widths[c]);
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "(St.Dv: {} convention)",
            match self.std_convention {
                StdConvention::Population => "population, n",
                StdConvention::Sample => "sample, n-1",
            }
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_shapes, ShapeKind};

    #[test]
    fn knn_on_separable_textures_is_perfect() {
        let mut samples = Vec::new();
        for (c, checker) in [("flat", false), ("checker", true)] {
            for k in 0..6 {
                let image = crate::imaging::GrayImage::from_fn(8, 8, |x, y| {
                    if checker && (x + y) % 2 == 0 {
                        250
                    } else {
                        10 + k as u8
                    }
                })
                .unwrap();
                samples.push(crate::dataset::Sample {
                    id: format!("{c}/{k}"),
                    label: c.to_string(),
                    image,
                });
            }
        }
        let d = LabeledDataset::new(samples).unwrap();
        let r = run_experiment(&d, Scheme::Glcm, &ClassifierConfig::Knn, &ExperimentConfig::default()).unwrap();
        assert_eq!(r.accuracies, vec![100.0; 5]);
        assert_eq!(r.summary.std_population, 0.0);
    }

    #[test]
    fn single_repetition_has_zero_spread() {
        let d = synth_shapes(&ShapeKind::ALL[..2], 6, 1).unwrap();
        let cfg = ExperimentConfig {
            repetitions: 1,
            ..Default::default()
        };
        let r = run_experiment(&d, Scheme::Edms, &ClassifierConfig::Knn, &cfg).unwrap();
        assert_eq!(r.accuracies.len(), 1);
        assert_eq!(r.summary.std_population, 0.0);
        assert_eq!(r.summary.std_sample, 0.0);
    }

    #[test]
    fn sweep_cycles_fractions() {
        let cfg = ExperimentConfig {
            sweep_split: true,
            ..Default::default()
        };
        let f: Vec<f64> = (0..6).map(|r| cfg.fraction_for(r)).collect();
        assert_eq!(f, vec![0.6, 0.625, 0.65, 0.675, 0.7, 0.6]);
    }

    #[test]
    fn tainted_split_rejected() {
        let d = synth_shapes(&ShapeKind::ALL[..2], 4, 1).unwrap();
        let feats = &extract_dataset(&d, &[Scheme::Moment], &ExtractionConfig::default()).unwrap()[0];
        let split = Split {
            train: (0..8).collect(),
            test: vec![1, 6],
        };
        let r = evaluate_split(feats, &d.labels(), &split, &ClassifierConfig::Knn, true);
        assert!(matches!(r, Err(Error::Leakage(_))));
    }

    #[test]
    fn zero_repetitions_rejected() {
        let d = synth_shapes(&ShapeKind::ALL[..2], 4, 1).unwrap();
        let cfg = ExperimentConfig {
            repetitions: 0,
            ..Default::default()
        };
        assert!(run_experiment(&d, Scheme::Edms, &ClassifierConfig::Knn, &cfg).is_err());
    }
}
