//! Image primitives: grayscale and binary rasters, decoding, Otsu
//! binarization and boundary extraction.

use std::path::Path;

use image::DynamicImage;

use crate::error::{Error, Result};

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "zero-sized image {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "buffer of {} bytes does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn map(&self, f: impl Fn(u8) -> u8) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Row-major boolean raster; `true` is black (foreground).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "buffer of {} pixels does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn blank(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Parse an ASCII picture, one string per row; `#` or `1` is black.
    pub fn from_rows(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut data = Vec::with_capacity(width * height);
        for row in rows {
            assert_eq!(row.chars().count(), width, "ragged picture");
            data.extend(row.chars().map(|c| c == '#' || c == '1'));
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Bounds-checked lookup with signed coordinates; outside is background.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize) -> bool {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return false;
        }
        self.get(x as usize, y as usize)
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn count_black(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Render as grayscale: black → 0, white → 255.
    pub fn to_gray(&self) -> Result<GrayImage> {
        GrayImage::new(
            self.width,
            self.height,
            self.data.iter().map(|&b| if b { 0 } else { 255 }).collect(),
        )
    }

    /// Rotate by 90° counter-clockwise.
    pub fn rotate90(&self) -> BinaryImage {
        let (w, h) = (self.width, self.height);
        BinaryImage::from_fn(h, w, |x, y| self.get(w - 1 - y, x))
    }

    pub fn mirror_horizontal(&self) -> BinaryImage {
        let w = self.width;
        BinaryImage::from_fn(w, self.height, |x, y| self.get(w - 1 - x, y))
    }

    /// Pad with `left`/`top` background columns/rows and `right`/`bottom`
    /// trailing ones.
    pub fn pad(&self, left: usize, top: usize, right: usize, bottom: usize) -> BinaryImage {
        let w = self.width + left + right;
        let h = self.height + top + bottom;
        BinaryImage::from_fn(w, h, |x, y| {
            x >= left
                && y >= top
                && x - left < self.width
                && y - top < self.height
                && self.get(x - left, y - top)
        })
    }

    /// Replicate every pixel into a `factor`×`factor` block.
    pub fn upscale(&self, factor: usize) -> BinaryImage {
        BinaryImage::from_fn(self.width * factor, self.height * factor, |x, y| {
            self.get(x / factor, y / factor)
        })
    }
}

/// Boundary pixels of a binary image; `true` marks an edge pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap(BinaryImage);

impl EdgeMap {
    /// Wrap a raster whose black pixels are taken as edge pixels verbatim.
    pub fn from_binary(b: BinaryImage) -> Self {
        EdgeMap(b)
    }

    pub fn as_binary(&self) -> &BinaryImage {
        &self.0
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    #[inline]
    pub fn is_edge(&self, x: usize, y: usize) -> bool {
        self.0.get(x, y)
    }

    pub fn count(&self) -> usize {
        self.0.count_black()
    }
}

/// A decoded raster prior to grayscale conversion.
#[derive(Debug, Clone)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Interleaved samples, `width * height * channels` long.
    pub data: Vec<u8>,
}

/// Convert a raster to grayscale with the equal-weight channel mean,
/// rounded half up.
pub fn to_gray(raster: &Raster) -> Result<GrayImage> {
    let Raster {
        width,
        height,
        channels,
        ref data,
    } = *raster;
    if width == 0 || height == 0 || channels == 0 {
        return Err(Error::InvalidImage(format!(
            "zero-dimension raster {width}x{height}x{channels}"
        )));
    }
    if data.len() != width * height * channels {
        return Err(Error::InvalidImage("raster buffer size mismatch".into()));
    }
    if channels == 1 {
        return GrayImage::new(width, height, data.clone());
    }
    let c = channels as u32;
    let gray = data
        .chunks_exact(channels)
        .map(|px| {
            let sum: u32 = px.iter().map(|&v| v as u32).sum();
            // floor(sum / c + 1/2)
            ((2 * sum + c) / (2 * c)) as u8
        })
        .collect();
    GrayImage::new(width, height, gray)
}

fn raster_from_dynamic(img: DynamicImage) -> Raster {
    let (width, height) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(b) => Raster {
            width,
            height,
            channels: 1,
            data: b.into_raw(),
        },
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => {
            Raster {
                width,
                height,
                channels: 1,
                data: img.to_luma8().into_raw(),
            }
        }
        other => Raster {
            width,
            height,
            channels: 3,
            data: other.to_rgb8().into_raw(),
        },
    }
}

/// Decode PNG, BMP or binary PGM/PPM bytes into a grayscale image.
pub fn decode_image(bytes: &[u8]) -> Result<GrayImage> {
    let img = image::load_from_memory(bytes).map_err(|e| Error::InvalidImage(e.to_string()))?;
    to_gray(&raster_from_dynamic(img))
}

pub fn open_image(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path)?;
    decode_image(&bytes)
}

/// Encode as binary PGM (P5).
pub fn encode_pgm(g: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", g.width, g.height).into_bytes();
    out.extend_from_slice(&g.data);
    out
}

/// Otsu threshold over `t ∈ [0, 255]`, where the two classes are
/// `{v < t}` and `{v ≥ t}`. Returns `None` when no threshold yields two
/// non-empty classes (constant image). Ties go to the smallest `t`.
pub fn otsu_threshold(g: &GrayImage) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &v in &g.data {
        hist[v as usize] += 1;
    }
    let total: u64 = g.data.len() as u64;
    let sum_total: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();

    let mut best: Option<(u8, f64)> = None;
    let (mut n_low, mut s_low) = (0u64, 0u64);
    for t in 1..=255usize {
        n_low += hist[t - 1];
        s_low += (t as u64 - 1) * hist[t - 1];
        let n_high = total - n_low;
        if n_low == 0 || n_high == 0 {
            continue;
        }
        // Between-class variance scaled by total²:
        // (S_low·n_high − S_high·n_low)² / (n_low·n_high), with the
        // numerator's base computed exactly in integers.
        let s_high = sum_total - s_low;
        let diff = s_low as i128 * n_high as i128 - s_high as i128 * n_low as i128;
        let diff = diff as f64;
        let var = diff * diff / (n_low as f64 * n_high as f64);
        if best.is_none_or(|(_, b)| var > b) {
            best = Some((t as u8, var));
        }
    }
    best.map(|(t, _)| t)
}

/// Otsu binarization with minority-class polarity: whichever side of the
/// threshold holds fewer pixels becomes black. On an exact tie the dark
/// side is black. Constant images are all background.
pub fn binarize_otsu(g: &GrayImage) -> BinaryImage {
    let Some(t) = otsu_threshold(g) else {
        return BinaryImage::blank(g.width, g.height);
    };
    let n_low = g.data.iter().filter(|&&v| v < t).count();
    let n_high = g.data.len() - n_low;
    let dark_is_black = n_low <= n_high;
    let data = g
        .data
        .iter()
        .map(|&v| (v < t) == dark_is_black)
        .collect();
    BinaryImage {
        width: g.width,
        height: g.height,
        data,
    }
}

/// A pixel is an edge iff it is black and either lies on the image border
/// or has at least one white 8-neighbour.
pub fn extract_edges(b: &BinaryImage) -> EdgeMap {
    let (w, h) = (b.width, b.height);
    let mut out = vec![false; w * h];
    for y in 0..h {
        let row = &b.data[y * w..(y + 1) * w];
        let border_row = y == 0 || y + 1 == h;
        for x in 0..w {
            if !row[x] {
                continue;
            }
            let edge = border_row
                || x == 0
                || x + 1 == w
                || {
                    let up = &b.data[(y - 1) * w + x - 1..(y - 1) * w + x + 2];
                    let down = &b.data[(y + 1) * w + x - 1..(y + 1) * w + x + 2];
                    !(up.iter().all(|&v| v) && down.iter().all(|&v| v) && row[x - 1] && row[x + 1])
                };
            out[y * w + x] = edge;
        }
    }
    EdgeMap(BinaryImage {
        width: w,
        height: h,
        data: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_channel_raster_is_identity() {
        let r = Raster {
            width: 2,
            height: 1,
            channels: 1,
            data: vec![3, 250],
        };
        assert_eq!(to_gray(&r).unwrap().data(), &[3, 250]);
    }

    #[test]
    fn rgb_mean() {
        let r = Raster {
            width: 1,
            height: 1,
            channels: 3,
            data: vec![10, 20, 30],
        };
        assert_eq!(to_gray(&r).unwrap().data(), &[20]);
        let white = Raster {
            width: 2,
            height: 2,
            channels: 3,
            data: vec![255; 12],
        };
        let g = to_gray(&white).unwrap();
        assert_eq!((g.width(), g.height()), (2, 2));
        assert!(g.data().iter().all(|&v| v == 255));
    }

    #[test]
    fn two_channel_rounds_half_up() {
        let r = Raster {
            width: 1,
            height: 1,
            channels: 2,
            data: vec![1, 2],
        };
        assert_eq!(to_gray(&r).unwrap().data(), &[2]);
    }

    #[test]
    fn zero_dimension_raster_rejected() {
        let r = Raster {
            width: 0,
            height: 3,
            channels: 1,
            data: vec![],
        };
        assert!(matches!(to_gray(&r), Err(Error::InvalidImage(_))));
    }

    #[test]
    fn constant_image_is_background() {
        let g = GrayImage::filled(5, 4, 128).unwrap();
        assert_eq!(binarize_otsu(&g).count_black(), 0);
    }

    #[test]
    fn two_level_image() {
        let g = GrayImage::from_fn(4, 4, |x, _| if x < 2 { 0 } else { 255 }).unwrap();
        let b = binarize_otsu(&g);
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(b.get(x, y), x < 2);
            }
        }
    }

    fn brute_force_otsu(g: &GrayImage) -> Vec<u8> {
        // All thresholds attaining the maximal between-class variance,
        // computed directly from the class means.
        let vals: Vec<f64> = g.data().iter().map(|&v| v as f64).collect();
        let n = vals.len() as f64;
        let mut scores = Vec::new();
        for t in 0..=255u32 {
            let lo: Vec<f64> = vals.iter().copied().filter(|&v| v < t as f64).collect();
            let hi: Vec<f64> = vals.iter().copied().filter(|&v| v >= t as f64).collect();
            if lo.is_empty() || hi.is_empty() {
                continue;
            }
            let m0 = lo.iter().sum::<f64>() / lo.len() as f64;
            let m1 = hi.iter().sum::<f64>() / hi.len() as f64;
            let w0 = lo.len() as f64 / n;
            let w1 = hi.len() as f64 / n;
            scores.push((t as u8, w0 * w1 * (m0 - m1).powi(2)));
        }
        let best = scores.iter().map(|s| s.1).fold(f64::MIN, f64::max);
        scores
            .into_iter()
            .filter(|s| (s.1 - best).abs() <= 1e-9 * best)
            .map(|s| s.0)
            .collect()
    }

    #[test]
    fn otsu_matches_exhaustive_oracle() {
        let pattern = [10u8, 10, 200, 200, 10, 200, 10, 200, 200, 10, 10, 10, 200, 10, 200, 10];
        let g = GrayImage::new(4, 4, pattern.to_vec()).unwrap();
        let t = otsu_threshold(&g).unwrap();
        assert!(t > 10 && t <= 200);
        assert!(brute_force_otsu(&g).contains(&t));

        let mixed = [12u8, 40, 41, 90, 91, 92, 180, 181, 200, 201, 17, 33, 250, 5, 60, 120];
        let g = GrayImage::new(4, 4, mixed.to_vec()).unwrap();
        let t = otsu_threshold(&g).unwrap();
        assert!(brute_force_otsu(&g).contains(&t));
    }

    #[test]
    fn single_black_pixel_is_edge() {
        let b = BinaryImage::from_rows(&["...", ".#.", "..."]);
        let e = extract_edges(&b);
        assert_eq!(e.count(), 1);
        assert!(e.is_edge(1, 1));
    }

    #[test]
    fn block_perimeter() {
        let b = BinaryImage::from_fn(7, 7, |x, y| (2..=4).contains(&x) && (2..=4).contains(&y));
        let e = extract_edges(&b);
        assert_eq!(e.count(), 8);
        assert!(!e.is_edge(3, 3));
        for (x, y) in [(2, 2), (3, 2), (4, 2), (2, 3), (4, 3), (2, 4), (3, 4), (4, 4)] {
            assert!(e.is_edge(x, y));
        }
    }

    #[test]
    fn border_pixels_are_edges() {
        let b = BinaryImage::from_fn(3, 3, |_, _| true);
        let e = extract_edges(&b);
        assert_eq!(e.count(), 8);
        assert!(!e.is_edge(1, 1));
    }

    #[test]
    fn white_image_has_no_edges() {
        assert_eq!(extract_edges(&BinaryImage::blank(6, 5)).count(), 0);
    }

    #[test]
    fn pgm_roundtrip() {
        let g = GrayImage::from_fn(5, 3, |x, y| (x * 40 + y * 7) as u8).unwrap();
        assert_eq!(decode_image(&encode_pgm(&g)).unwrap(), g);
    }

    #[test]
    fn rotation_and_mirror() {
        let b = BinaryImage::from_rows(&["##.", "..."]);
        let r = b.rotate90();
        assert_eq!((r.width(), r.height()), (2, 3));
        assert_eq!(r, BinaryImage::from_rows(&["..", "#.", "#."]));
        assert_eq!(b.mirror_horizontal(), BinaryImage::from_rows(&[".##", "..."]));
    }
}
