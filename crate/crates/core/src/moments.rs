//! Central moments of a binary shape and Hu's seven invariants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::BinaryImage;

pub const HU_DIMS: usize = 7;

/// Central moments `u_pq` for `p + q ≤ 3`, indexed `u[p][q]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CentralMoments {
    pub m00: f64,
    pub u: [[f64; 4]; 4],
}

impl CentralMoments {
    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.u[p][q]
    }
}

/// Pixel `(x, y)` has coordinates column `x`, row `y`. Sums are taken in
/// coordinates relative to the shape's bounding box, so any translate of a
/// shape yields bit-identical moments.
pub fn central_moments(b: &BinaryImage) -> CentralMoments {
    let (w, h) = (b.width(), b.height());
    let mut n = 0u64;
    let (mut min_x, mut min_y) = (usize::MAX, usize::MAX);
    for y in 0..h {
        for x in 0..w {
            if b.get(x, y) {
                n += 1;
                min_x = min_x.min(x);
                min_y = min_y.min(y);
            }
        }
    }
    if n == 0 {
        return CentralMoments::default();
    }

    let (mut sx, mut sy) = (0u64, 0u64);
    for y in min_y..h {
        for x in min_x..w {
            if b.get(x, y) {
                sx += (x - min_x) as u64;
                sy += (y - min_y) as u64;
            }
        }
    }
    let cx = sx as f64 / n as f64;
    let cy = sy as f64 / n as f64;

    let mut u = [[0.0f64; 4]; 4];
    u[0][0] = n as f64;
    for y in min_y..h {
        let dy = (y - min_y) as f64 - cy;
        for x in min_x..w {
            if !b.get(x, y) {
                continue;
            }
            let dx = (x - min_x) as f64 - cx;
            let (dx2, dy2) = (dx * dx, dy * dy);
            u[2][0] += dx2;
            u[0][2] += dy2;
            u[1][1] += dx * dy;
            u[3][0] += dx2 * dx;
            u[0][3] += dy2 * dy;
            u[2][1] += dx2 * dy;
            u[1][2] += dx * dy2;
        }
    }
    CentralMoments { m00: n as f64, u }
}

/// Scale-normalized moments `η_pq = u_pq / u00^(1 + (p+q)/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormalizedMoments {
    pub eta: [[f64; 4]; 4],
}

pub fn normalized_moments(c: &CentralMoments) -> Result<NormalizedMoments> {
    if c.m00 <= 0.0 {
        return Err(Error::EmptyShape);
    }
    let mut eta = [[0.0; 4]; 4];
    for p in 0..4 {
        for q in 0..4 - p {
            let gamma = 1.0 + (p + q) as f64 / 2.0;
            eta[p][q] = c.u[p][q] / c.m00.powf(gamma);
        }
    }
    Ok(NormalizedMoments { eta })
}

pub type HuVector = [f64; HU_DIMS];

/// Hu's invariants in their canonical form.
pub fn hu_moments(n: &NormalizedMoments) -> HuVector {
    let e = &n.eta;
    let (n20, n02, n11) = (e[2][0], e[0][2], e[1][1]);
    let (n30, n03, n21, n12) = (e[3][0], e[0][3], e[2][1], e[1][2]);

    let a = n30 + n12;
    let b = n21 + n03;
    let c = n30 - 3.0 * n12;
    let d = 3.0 * n21 - n03;

    let v1 = n20 + n02;
    let v2 = (n20 - n02).powi(2) + 4.0 * n11 * n11;
    let v3 = c * c + d * d;
    let v4 = a * a + b * b;
    let v5 = c * a * (a * a - 3.0 * b * b) + d * b * (3.0 * a * a - b * b);
    let v6 = (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b;
    let v7 = d * a * (a * a - 3.0 * b * b) - c * b * (3.0 * a * a - b * b);
    [v1, v2, v3, v4, v5, v6, v7]
}

/// Convenience: Hu vector of a shape, `None` for an empty shape.
pub fn hu_of(b: &BinaryImage) -> Option<HuVector> {
    normalized_moments(&central_moments(b)).ok().map(|n| hu_moments(&n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MomentScaling {
    /// `sign(v) · ln(1 + |v|)`.
    #[default]
    SignedLog,
    Raw,
}

pub fn signed_log(v: f64) -> f64 {
    v.signum() * v.abs().ln_1p()
}

/// Seven Hu invariants of the foreground; zero vector for an empty image.
pub fn moment_descriptor(b: &BinaryImage, scaling: MomentScaling) -> Vec<f64> {
    match hu_of(b) {
        None => vec![0.0; HU_DIMS],
        Some(v) => match scaling {
            MomentScaling::SignedLog => v.iter().map(|&x| if x == 0.0 { 0.0 } else { signed_log(x) }).collect(),
            MomentScaling::Raw => v.to_vec(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pixel() {
        let b = BinaryImage::from_rows(&["...", ".#.", "..."]);
        let c = central_moments(&b);
        assert_eq!(c.m00, 1.0);
        for p in 0..4 {
            for q in 0..4 - p {
                if p + q >= 1 {
                    assert_eq!(c.get(p, q), 0.0);
                }
            }
        }
    }

    #[test]
    fn two_pixels() {
        let b = BinaryImage::from_rows(&["#.#"]);
        let c = central_moments(&b);
        assert_eq!(c.get(2, 0), 2.0);
        assert_eq!(c.get(0, 2), 0.0);
        assert_eq!(c.get(1, 1), 0.0);
    }

    #[test]
    fn unit_mass_normalization_is_identity() {
        let mut c = CentralMoments {
            m00: 1.0,
            ..Default::default()
        };
        c.u[0][0] = 1.0;
        c.u[2][0] = 3.5;
        c.u[1][2] = -0.25;
        let n = normalized_moments(&c).unwrap();
        assert_eq!(n.eta[2][0], 3.5);
        assert_eq!(n.eta[1][2], -0.25);
    }

    #[test]
    fn empty_shape_errors() {
        let c = central_moments(&BinaryImage::blank(4, 4));
        assert!(matches!(normalized_moments(&c), Err(Error::EmptyShape)));
        assert_eq!(moment_descriptor(&BinaryImage::blank(4, 4), MomentScaling::SignedLog), vec![0.0; 7]);
    }

    #[test]
    fn square_has_zero_v2() {
        let b = BinaryImage::from_fn(12, 12, |x, y| (3..9).contains(&x) && (2..8).contains(&y));
        let v = hu_of(&b).unwrap();
        assert_eq!(v[1], 0.0);
        let d = moment_descriptor(&b, MomentScaling::SignedLog);
        assert_eq!(d.len(), 7);
        assert_eq!(d[1], 0.0);
    }

    #[test]
    fn v1_of_centered_square_in_closed_form() {
        // s×s square: u20 = u02 = s²·(s² − 1)/12, m00 = s².
        let s = 9usize;
        let b = BinaryImage::from_fn(15, 15, |x, y| (3..3 + s).contains(&x) && (3..3 + s).contains(&y));
        let v = hu_of(&b).unwrap();
        let s2 = (s * s) as f64;
        let u20 = s2 * (s2 - 1.0) / 12.0;
        let expect = 2.0 * u20 / (s2 * s2);
        assert!((v[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn signed_log_compression() {
        assert_eq!(signed_log(0.0), 0.0);
        assert!((signed_log(-1.0) + 2f64.ln()).abs() < 1e-15);
    }
}
