//! File formats: feature CSV, versioned JSON documents, atomic writes.

use std::io::{Read, Write};
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::descriptors::{FeatureVector, Normalizer, Scheme};
use crate::error::{Error, Result};

/// Current version of every JSON document written by this crate.
pub const FORMAT_VERSION: u32 = 1;

/// Write `bytes` to `path` through a temporary file in the same directory
/// followed by a rename, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Nine significant digits in scientific notation.
pub fn format_sig9(v: f64) -> String {
    format!("{v:.8e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub sample_id: String,
    pub label: String,
    pub features: FeatureVector,
}

/// Header `sample_id,label,scheme,f0,…,f{d−1}`, one row per sample.
pub fn write_feature_csv<W: Write>(out: W, rows: &[FeatureRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dims = rows.first().map_or(0, |r| r.features.dims());
    let mut header = vec!["sample_id".to_string(), "label".into(), "scheme".into()];
    header.extend((0..dims).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for r in rows {
        if r.features.dims() != dims {
            return Err(Error::SchemeMismatch {
                expected: rows[0].features.scheme.to_string(),
                found: r.features.scheme.to_string(),
            });
        }
        let mut rec = vec![
            r.sample_id.clone(),
            r.label.clone(),
            r.features.scheme.to_string(),
        ];
        rec.extend(r.features.values.iter().map(|&v| format_sig9(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_feature_csv<R: Read>(input: R) -> Result<Vec<FeatureRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.len() < 3
        || &headers[0] != "sample_id"
        || &headers[1] != "label"
        || &headers[2] != "scheme"
    {
        return Err(Error::Parse("feature CSV header must start with sample_id,label,scheme".into()));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let scheme: Scheme = rec[2].parse()?;
        let values = rec
            .iter()
            .skip(3)
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad feature value `{s}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(FeatureRow {
            sample_id: rec[0].to_string(),
            label: rec[1].to_string(),
            features: FeatureVector::new(scheme, values).map_err(|e| e.in_sample(&rec[0]))?,
        });
    }
    Ok(rows)
}

#[derive(Serialize, Deserialize)]
struct Versioned<T> {
    format_version: u32,
    #[serde(flatten)]
    body: T,
}

pub fn to_versioned_json<T: Serialize>(body: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Versioned {
        format_version: FORMAT_VERSION,
        body,
    })?)
}

pub fn from_versioned_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    #[derive(Deserialize)]
    struct Probe {
        format_version: u32,
    }
    let probe: Probe = serde_json::from_str(text)?;
    if probe.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersion {
            expected: FORMAT_VERSION,
            found: probe.format_version,
        });
    }
    let v: Versioned<T> = serde_json::from_str(text)?;
    Ok(v.body)
}

#[derive(Serialize, Deserialize)]
struct NormalizerDoc {
    normalizer: Normalizer,
}

pub fn normalizer_to_json(n: &Normalizer) -> Result<String> {
    to_versioned_json(&NormalizerDoc {
        normalizer: n.clone(),
    })
}

pub fn normalizer_from_json(text: &str) -> Result<Normalizer> {
    Ok(from_versioned_json::<NormalizerDoc>(text)?.normalizer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptors::fit_normalizer;

    #[test]
    fn sig9_format() {
        assert_eq!(format_sig9(0.123456789123), "1.23456789e-1");
        assert_eq!(format_sig9(1.0), "1.00000000e0");
        assert_eq!(format_sig9(-2.5e-7), "-2.50000000e-7");
    }

    #[test]
    fn feature_csv_layout() {
        let rows = vec![FeatureRow {
            sample_id: "a/x.pgm".into(),
            label: "a".into(),
            features: FeatureVector::new(Scheme::Moment, vec![0.5, 0.0, 1.0, 2.0, 3.0, 4.0, -1.0]).unwrap(),
        }];
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "sample_id,label,scheme,f0,f1,f2,f3,f4,f5,f6");
        assert!(lines.next().unwrap().starts_with("a/x.pgm,a,MOMENT,5.00000000e-1,"));
        assert_eq!(read_feature_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn normalizer_document_is_versioned() {
        let a = FeatureVector::new(Scheme::Moment, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]).unwrap();
        let b = FeatureVector::new(Scheme::Moment, vec![1.0 / 3.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).unwrap();
        let n = fit_normalizer([&a, &b]).unwrap();
        let text = normalizer_to_json(&n).unwrap();
        assert!(text.contains("\"format_version\": 1"));
        assert_eq!(normalizer_from_json(&text).unwrap(), n);
        let bumped = text.replace("\"format_version\": 1", "\"format_version\": 9");
        assert!(matches!(normalizer_from_json(&bumped), Err(Error::FormatVersion { .. })));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
