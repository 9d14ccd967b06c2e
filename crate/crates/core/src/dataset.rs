//! Labeled image collections: directory loading, stratified splits and a
//! synthetic shape generator.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{open_image, BinaryImage, GrayImage};
use crate::rng::{mix, rng_from_seed};

pub const IMAGE_EXTENSIONS: [&str; 5] = ["png", "pgm", "ppm", "bmp", "pnm"];

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub label: String,
    pub image: GrayImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub samples: Vec<Sample>,
    /// Sorted unique labels.
    pub classes: Vec<String>,
}

impl LabeledDataset {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let mut classes: Vec<String> = samples.iter().map(|s| s.label.clone()).collect();
        classes.sort();
        classes.dedup();
        let mut ids: Vec<&str> = samples.iter().map(|s| s.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!("duplicate sample id `{}`", w[0])));
        }
        Ok(Self { samples, classes })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample indices per class, in dataset order.
    pub fn by_class(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut m: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, s) in self.samples.iter().enumerate() {
            m.entry(s.label.as_str()).or_default().push(i);
        }
        m
    }

    pub fn labels(&self) -> Vec<String> {
        self.samples.iter().map(|s| s.label.clone()).collect()
    }
}

/// A file that could not be decoded during [`load_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    v.sort();
    Ok(v)
}

/// Load `root/<class>/<file>` images. Ordering is lexicographic by class,
/// then by file name; ids are `class/file`. Undecodable files are skipped
/// and reported; a class left with no samples is an error.
pub fn load_dataset_with_report(root: &Path) -> Result<(LabeledDataset, Vec<SkippedFile>)> {
    if !root.is_dir() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("dataset root {} is not a directory", root.display()),
        )));
    }
    let mut jobs = Vec::new();
    for class_dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
        let class = class_dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::Parse(format!("non UTF-8 class directory {}", class_dir.display())))?
            .to_string();
        let files: Vec<PathBuf> = sorted_entries(&class_dir)?
            .into_iter()
            .filter(|p| p.is_file() && is_image(p))
            .collect();
        jobs.push((class, files));
    }
    if jobs.iter().all(|(_, f)| f.is_empty()) {
        return Err(Error::EmptyDataset(root.to_path_buf()));
    }

    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for (class, files) in jobs {
        let decoded: Vec<(PathBuf, Result<GrayImage>)> = files
            .into_par_iter()
            .map(|p| {
                let img = open_image(&p);
                (p, img)
            })
            .collect();
        let before = samples.len();
        for (path, img) in decoded {
            match img {
                Ok(image) => {
                    let file = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
                    samples.push(Sample {
                        id: format!("{class}/{file}"),
                        label: class.clone(),
                        image,
                    });
                }
                Err(e) => {
                    log::warn!("skipping {}: {e}", path.display());
                    skipped.push(SkippedFile {
                        path,
                        reason: e.to_string(),
                    });
                }
            }
        }
        if samples.len() == before {
            return Err(Error::DegenerateClass(class));
        }
    }
    Ok((LabeledDataset::new(samples)?, skipped))
}

pub fn load_dataset(root: &Path) -> Result<LabeledDataset> {
    load_dataset_with_report(root).map(|(d, _)| d)
}

/// Write every sample as `root/<label>/<name>.pgm`, where `<name>` is the
/// part of the id after the last `/`.
pub fn save_dataset_pgm(d: &LabeledDataset, root: &Path) -> Result<()> {
    for s in &d.samples {
        let dir = root.join(&s.label);
        std::fs::create_dir_all(&dir)?;
        let name = s.id.rsplit('/').next().unwrap_or(&s.id);
        let name = if name.ends_with(".pgm") {
            name.to_string()
        } else {
            format!("{name}.pgm")
        };
        crate::io::write_atomic(&dir.join(name), &crate::imaging::encode_pgm(&s.image))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        if !(0.5..=0.9).contains(&train_fraction) {
            return Err(Error::InvalidArgument(format!(
                "train fraction must lie in [0.5, 0.9], got {train_fraction}"
            )));
        }
        Ok(Self { train_fraction, seed })
    }
}

/// Train/test membership as sorted sample indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Reject overlapping partitions.
    pub fn check_disjoint(&self) -> Result<()> {
        let mut t = self.train.clone();
        t.sort_unstable();
        if let Some(i) = self.test.iter().find(|i| t.binary_search(i).is_ok()) {
            return Err(Error::Leakage(format!("sample index {i} is in both train and test")));
        }
        Ok(())
    }

    /// FNV-1a hash of the membership, for comparing splits across runs.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for &i in &self.train {
            eat(i as u64);
        }
        eat(u64::MAX);
        for &i in &self.test {
            eat(i as u64);
        }
        h
    }
}

/// Per-class train count: `floor(fraction · n + 1/2)`, kept within
/// `[1, n − 1]`.
pub fn train_count(fraction: f64, n: usize) -> usize {
    let k = (fraction * n as f64 + 0.5).floor() as usize;
    k.clamp(1, n - 1)
}

/// Stratified split. Each class (in sorted order) is shuffled with the
/// stream `mix(seed, class_position)` and cut at [`train_count`].
pub fn split(d: &LabeledDataset, spec: &SplitSpec) -> Result<Split> {
    SplitSpec::new(spec.train_fraction, spec.seed)?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (pos, (label, mut idx)) in d.by_class().into_iter().enumerate() {
        if idx.len() < 2 {
            return Err(Error::DegenerateClass(label.to_string()));
        }
        let mut rng = rng_from_seed(mix(spec.seed, pos as u64));
        idx.shuffle(&mut rng);
        let k = train_count(spec.train_fraction, idx.len());
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

/// CSV audit trail: `sample_id,label,partition,seed`.
pub fn write_manifest<W: Write>(out: W, d: &LabeledDataset, s: &Split, seed: u64) -> Result<()> {
    let mut part = vec![""; d.len()];
    for &i in &s.train {
        part[i] = "train";
    }
    for &i in &s.test {
        part[i] = "test";
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample_id", "label", "partition", "seed"])?;
    for (i, smp) in d.samples.iter().enumerate() {
        if part[i].is_empty() {
            continue;
        }
        w.write_record([smp.id.as_str(), smp.label.as_str(), part[i], &seed.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub const SYNTH_CANVAS: usize = 64;

/// Built-in synthetic shape classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShapeKind {
    Square,
    Disk,
    Cross,
    Ring,
    Triangle,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 5] = [
        ShapeKind::Square,
        ShapeKind::Disk,
        ShapeKind::Cross,
        ShapeKind::Ring,
        ShapeKind::Triangle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Square => "square",
            ShapeKind::Disk => "disk",
            ShapeKind::Cross => "cross",
            ShapeKind::Ring => "ring",
            ShapeKind::Triangle => "triangle",
        }
    }

    /// Whether the pixel at offset `(u, v)` inside a `size`×`size` box
    /// belongs to the shape (before rotation).
    fn contains(self, u: usize, v: usize, size: usize) -> bool {
        // Pixel centers relative to the box center, in units of half the box.
        let s = size as f64;
        let px = (u as f64 + 0.5) / s * 2.0 - 1.0;
        let py = (v as f64 + 0.5) / s * 2.0 - 1.0;
        match self {
            ShapeKind::Square => true,
            ShapeKind::Disk => px * px + py * py <= 1.0,
            ShapeKind::Cross => px.abs() <= 1.0 / 3.0 || py.abs() <= 1.0 / 3.0,
            ShapeKind::Ring => {
                let r2 = px * px + py * py;
                (0.55 * 0.55..=1.0).contains(&r2)
            }
            // Right angle at the bottom-left corner.
            ShapeKind::Triangle => u + v < size,
        }
    }

    /// Render one instance: box side `size`, top-left corner `(x0, y0)`,
    /// rotated by `quarter_turns` × 90° counter-clockwise about the box.
    pub fn render(self, size: usize, x0: usize, y0: usize, quarter_turns: usize) -> BinaryImage {
        let mut shape = BinaryImage::from_fn(size, size, |u, v| self.contains(u, v, size));
        for _ in 0..quarter_turns % 4 {
            shape = shape.rotate90();
        }
        let mut canvas = BinaryImage::blank(SYNTH_CANVAS, SYNTH_CANVAS);
        for v in 0..size {
            for u in 0..size {
                if shape.get(u, v) {
                    canvas.set(x0 + u, y0 + v, true);
                }
            }
        }
        canvas
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShapeKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown shape `{s}`")))
    }
}

/// Generate `n_per_class` instances of each shape on a 64×64 canvas. Each
/// instance gets a box side in `[32, 64)` pixels (50% up to, not including,
/// 100% of the canvas), a random position
/// keeping it fully inside, and a random multiple of 90° rotation. Shapes
/// are black (0) on white (255).
pub fn synth_shapes(classes: &[ShapeKind], n_per_class: usize, seed: u64) -> Result<LabeledDataset> {
    if n_per_class < 2 {
        return Err(Error::InvalidArgument("synthetic classes need at least 2 samples".into()));
    }
    if classes.is_empty() {
        return Err(Error::InvalidArgument("no synthetic classes requested".into()));
    }
    let min_size = SYNTH_CANVAS / 2;
    let mut samples = Vec::with_capacity(classes.len() * n_per_class);
    for (ci, &kind) in classes.iter().enumerate() {
        let mut rng = rng_from_seed(mix(seed, ci as u64));
        for k in 0..n_per_class {
            let size = rng.gen_range(min_size..SYNTH_CANVAS);
            let x0 = rng.gen_range(0..=SYNTH_CANVAS - size);
            let y0 = rng.gen_range(0..=SYNTH_CANVAS - size);
            let turns = rng.gen_range(0..4usize);
            let image = kind.render(size, x0, y0, turns).to_gray()?;
            samples.push(Sample {
                id: format!("{}/{:04}", kind.name(), k),
                label: kind.name().to_string(),
                image,
            });
        }
    }
    LabeledDataset::new(samples)
}

/// Parsed `synthetic:<n_classes>x<n_per_class>@<seed>` address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub n_per_class: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn parse(s: &str) -> Option<Result<Self>> {
        let rest = s.strip_prefix("synthetic:")?;
        let bad = || Error::InvalidArgument(format!("malformed synthetic dataset `{s}`"));
        let parsed = (|| {
            let (shape, seed) = rest.split_once('@').ok_or_else(bad)?;
            let (nc, npc) = shape.split_once('x').ok_or_else(bad)?;
            let spec = SyntheticSpec {
                n_classes: nc.parse().map_err(|_| bad())?,
                n_per_class: npc.parse().map_err(|_| bad())?,
                seed: seed.parse().map_err(|_| bad())?,
            };
            if spec.n_classes == 0 || spec.n_classes > ShapeKind::ALL.len() {
                return Err(Error::InvalidArgument(format!(
                    "synthetic datasets have 1..={} classes",
                    ShapeKind::ALL.len()
                )));
            }
            Ok(spec)
        })();
        Some(parsed)
    }

    pub fn generate(&self) -> Result<LabeledDataset> {
        synth_shapes(&ShapeKind::ALL[..self.n_classes], self.n_per_class, self.seed)
    }
}

/// Resolve a dataset address: `synthetic:…` or a directory path.
pub fn resolve(source: &str) -> Result<LabeledDataset> {
    match SyntheticSpec::parse(source) {
        Some(spec) => spec?.generate(),
        None => load_dataset(Path::new(source)),
    }
}
