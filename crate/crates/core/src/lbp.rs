//! Basic 8-neighbour local binary patterns.
//!
//! Bit `i` of a code is set when neighbour `i` is at least as bright as the
//! center. Neighbours are numbered counter-clockwise starting east:
//!
//! ```text
//! 3  2  1
//! 4  c  0
//! 5  6  7
//! ```

use crate::error::{Error, Result};
use crate::imaging::GrayImage;

pub const LBP_BINS: usize = 256;

/// `(dx, dy)` of neighbour `i`, `y` pointing down.
pub const NEIGHBOURS: [(isize, isize); 8] = [
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// LBP code of an interior pixel.
pub fn lbp_code(g: &GrayImage, x: usize, y: usize) -> Result<u8> {
    if x == 0 || y == 0 || x + 1 >= g.width() || y + 1 >= g.height() {
        return Err(Error::OutOfDomain { x, y });
    }
    let c = g.get(x, y);
    let mut code = 0u8;
    for (i, &(dx, dy)) in NEIGHBOURS.iter().enumerate() {
        let n = g.get((x as isize + dx) as usize, (y as isize + dy) as usize);
        code |= ((n >= c) as u8) << i;
    }
    Ok(code)
}

/// Normalized 256-bin code histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct LbpHistogram {
    pub bins: Vec<f64>,
}

impl LbpHistogram {
    pub fn sum(&self) -> f64 {
        self.bins.iter().sum()
    }
}

/// Raw code counts over all interior pixels.
pub fn lbp_counts(g: &GrayImage) -> [u64; LBP_BINS] {
    let mut counts = [0u64; LBP_BINS];
    let (w, h) = (g.width(), g.height());
    if w < 3 || h < 3 {
        return counts;
    }
    let data = g.data();
    let s = w as isize;
    let offsets: [isize; 8] = NEIGHBOURS.map(|(dx, dy)| dy * s + dx);
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = y * w + x;
            let c = data[i];
            let mut code = 0usize;
            for (bit, &off) in offsets.iter().enumerate() {
                code |= ((data[(i as isize + off) as usize] >= c) as usize) << bit;
            }
            counts[code] += 1;
        }
    }
    counts
}

pub fn lbp_histogram(g: &GrayImage) -> LbpHistogram {
    let counts = lbp_counts(g);
    let total: u64 = counts.iter().sum();
    let bins = if total == 0 {
        vec![0.0; LBP_BINS]
    } else {
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    };
    LbpHistogram { bins }
}
