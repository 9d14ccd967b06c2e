//! Edge direction matrices.
//!
//! `EDM1` counts, for every edge pixel, which of its eight neighbours are
//! also edge pixels. `EDM2` lets every edge pixel vote once, for its
//! neighbour direction that ranks highest in the global `EDM1` ordering.
//! Both are 3×3 matrices whose center cell holds the number of edge pixels.
//!
//! Cell layout (1-based `(row, col)`, row index grows with the angle's
//! upward component, image `y` grows downward):
//!
//! ```text
//!            col 1   col 2   col 3
//!   row 3    135°     90°     45°
//!   row 2    180°   center     0°
//!   row 1    225°    270°    315°
//! ```
//!
//! i.e. `0° → (2,3)`, `45° → (3,3)`, `90° → (3,2)`, `135° → (3,1)`,
//! `180° → (2,1)`, `225° → (1,1)`, `270° → (1,2)`, `315° → (1,3)`.

use serde::{Deserialize, Serialize};

use crate::imaging::{BinaryImage, EdgeMap};

/// One of the eight compass directions, in 45° steps from east.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    E = 0,
    NE = 1,
    N = 2,
    NW = 3,
    W = 4,
    SW = 5,
    S = 6,
    SE = 7,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::E,
        Direction::NE,
        Direction::N,
        Direction::NW,
        Direction::W,
        Direction::SW,
        Direction::S,
        Direction::SE,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Direction {
        Self::ALL[i]
    }

    pub fn degrees(self) -> u32 {
        45 * self as u32
    }

    /// Pixel displacement `(dx, dy)` with `y` pointing down.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Direction::E => (1, 0),
            Direction::NE => (1, -1),
            Direction::N => (0, -1),
            Direction::NW => (-1, -1),
            Direction::W => (-1, 0),
            Direction::SW => (-1, 1),
            Direction::S => (0, 1),
            Direction::SE => (1, 1),
        }
    }

    /// 1-based `(row, col)` of the matrix cell accumulating this direction.
    pub fn cell(self) -> (usize, usize) {
        let (dx, dy) = self.offset();
        ((2 - dy) as usize, (2 + dx) as usize)
    }

    /// Horizontal mirror image of this direction.
    pub fn mirrored(self) -> Direction {
        Direction::from_index((12 - self.index()) % 8)
    }
}

/// A 3×3 edge direction matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Edm {
    /// `cells[r][c]` is the 1-based cell `(r + 1, c + 1)`.
    pub cells: [[u64; 3]; 3],
}

impl Edm {
    /// Number of edge pixels, cell `(2,2)`.
    pub fn center(&self) -> u64 {
        self.cells[1][1]
    }

    pub fn get(&self, d: Direction) -> u64 {
        let (r, c) = d.cell();
        self.cells[r - 1][c - 1]
    }

    /// Direction counts indexed by [`Direction::index`].
    pub fn direction_counts(&self) -> [u64; 8] {
        let mut out = [0; 8];
        for d in Direction::ALL {
            out[d.index()] = self.get(d);
        }
        out
    }

    /// Sum of the eight direction cells (center excluded).
    pub fn direction_sum(&self) -> u64 {
        self.direction_counts().iter().sum()
    }

    pub fn from_counts(center: u64, counts: [u64; 8]) -> Edm {
        let mut m = Edm::default();
        m.cells[1][1] = center;
        for d in Direction::ALL {
            let (r, c) = d.cell();
            m.cells[r - 1][c - 1] = counts[d.index()];
        }
        m
    }
}

/// Build `EDM1`. Scans a background-padded copy of the edge map so every
/// pixel sees its eight neighbours through fixed index offsets.
pub fn compute_edm1(e: &EdgeMap) -> Edm {
    let (w, h) = (e.width(), e.height());
    let pw = w + 2;
    let padded = padded_edges(e);
    let offsets = neighbour_offsets(pw);

    let mut counts = [0u64; 8];
    let mut center = 0u64;
    for y in 1..=h {
        let row = y * pw;
        for x in 1..=w {
            let i = row + x;
            if !padded[i] {
                continue;
            }
            center += 1;
            for (k, &off) in offsets.iter().enumerate() {
                counts[k] += padded[(i as isize + off) as usize] as u64;
            }
        }
    }
    Edm::from_counts(center, counts)
}

/// Order the eight directions by descending `EDM1` count; equal counts are
/// ordered by ascending angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectionRanking {
    order: [Direction; 8],
}

impl DirectionRanking {
    pub fn order(&self) -> &[Direction; 8] {
        &self.order
    }

    /// Position of each direction in the ranking (0 = most frequent).
    pub fn ranks(&self) -> [usize; 8] {
        let mut r = [0; 8];
        for (pos, d) in self.order.iter().enumerate() {
            r[d.index()] = pos;
        }
        r
    }
}

pub fn rank_directions(edm1: &Edm) -> DirectionRanking {
    let counts = edm1.direction_counts();
    let mut order = Direction::ALL;
    // Stable sort keeps ascending-angle order among equal counts.
    order.sort_by(|a, b| counts[b.index()].cmp(&counts[a.index()]));
    DirectionRanking { order }
}

/// Build `EDM2`: every edge pixel with at least one edge neighbour
/// increments the cell of its best-ranked available direction.
pub fn compute_edm2(e: &EdgeMap, ranking: &DirectionRanking) -> Edm {
    let (w, h) = (e.width(), e.height());
    let pw = w + 2;
    let padded = padded_edges(e);
    let offsets = neighbour_offsets(pw);
    // Neighbour offsets visited in ranking order.
    let ranked: Vec<(Direction, isize)> = ranking
        .order
        .iter()
        .map(|&d| (d, offsets[d.index()]))
        .collect();

    let mut counts = [0u64; 8];
    let mut center = 0u64;
    for y in 1..=h {
        let row = y * pw;
        for x in 1..=w {
            let i = row + x;
            if !padded[i] {
                continue;
            }
            center += 1;
            if let Some(&(d, _)) = ranked
                .iter()
                .find(|&&(_, off)| padded[(i as isize + off) as usize])
            {
                counts[d.index()] += 1;
            }
        }
    }
    Edm::from_counts(center, counts)
}

fn padded_edges(e: &EdgeMap) -> Vec<bool> {
    let (w, h) = (e.width(), e.height());
    let pw = w + 2;
    let mut padded = vec![false; pw * (h + 2)];
    let src = e.as_binary().data();
    for y in 0..h {
        padded[(y + 1) * pw + 1..(y + 1) * pw + 1 + w].copy_from_slice(&src[y * w..(y + 1) * w]);
    }
    padded
}

fn neighbour_offsets(row_stride: usize) -> [isize; 8] {
    let s = row_stride as isize;
    let mut out = [0; 8];
    for d in Direction::ALL {
        let (dx, dy) = d.offset();
        out[d.index()] = dy * s + dx;
    }
    out
}

/// How the edge-direction slot is filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EdgeDirectionMode {
    /// Index 0–3 of the most frequent of 0°/45°/90°/135°.
    #[default]
    ArgmaxIndex,
    /// The maximal count itself.
    RawCount,
}

/// The 22 EDMS features.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EdmsFeatures {
    pub pixel_regularity: [f64; 4],
    pub homogeneity: [f64; 4],
    pub correlation: [f64; 4],
    pub weight: f64,
    pub edge_direction: f64,
    pub edge_regularity: [f64; 8],
}

pub const EDMS_DIMS: usize = 22;

impl EdmsFeatures {
    /// Flatten in declaration order: pixel regularity, homogeneity,
    /// correlation, weight, edge direction, edge regularity.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(EDMS_DIMS);
        v.extend_from_slice(&self.pixel_regularity);
        v.extend_from_slice(&self.homogeneity);
        v.extend_from_slice(&self.correlation);
        v.push(self.weight);
        v.push(self.edge_direction);
        v.extend_from_slice(&self.edge_regularity);
        v
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

const HALF_PLANE: [Direction; 4] = [Direction::E, Direction::NE, Direction::N, Direction::NW];

pub fn edms_features(edm1: &Edm, edm2: &Edm, source: &BinaryImage) -> EdmsFeatures {
    edms_features_with(edm1, edm2, source, EdgeDirectionMode::ArgmaxIndex)
}

pub fn edms_features_with(
    edm1: &Edm,
    edm2: &Edm,
    source: &BinaryImage,
    mode: EdgeDirectionMode,
) -> EdmsFeatures {
    let center = edm1.center();
    let dir_sum = edm1.direction_sum();
    let mut f = EdmsFeatures::default();
    for (k, &d) in HALF_PLANE.iter().enumerate() {
        let c = edm1.get(d);
        f.pixel_regularity[k] = ratio(c, center);
        f.homogeneity[k] = ratio(c, dir_sum);
        f.correlation[k] = ratio(c, dir_sum + center);
    }
    f.weight = ratio(center, source.count_black() as u64);

    let (best_k, best_count) = HALF_PLANE
        .iter()
        .enumerate()
        .map(|(k, &d)| (k, edm1.get(d)))
        .fold((0, 0), |acc, (k, c)| if c > acc.1 { (k, c) } else { acc });
    f.edge_direction = match mode {
        EdgeDirectionMode::ArgmaxIndex => best_k as f64,
        EdgeDirectionMode::RawCount => best_count as f64,
    };

    for d in Direction::ALL {
        f.edge_regularity[d.index()] = ratio(edm2.get(d), edm2.center());
    }
    f
}

/// Full chain from an already binarized image.
pub fn edms_from_binary(b: &BinaryImage, mode: EdgeDirectionMode) -> EdmsFeatures {
    let edges = crate::imaging::extract_edges(b);
    let edm1 = compute_edm1(&edges);
    let ranking = rank_directions(&edm1);
    let edm2 = compute_edm2(&edges, &ranking);
    edms_features_with(&edm1, &edm2, b, mode)
}
