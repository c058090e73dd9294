//! Dense nonnegative pixel maps and the Attention-IoU metric.
//!
//! A [`Map`] is either an attention map (typically at convolutional-layer
//! resolution) or a feature mask (typically at input-image resolution). The
//! metric compares two maps of equal shape after L1 normalization:
//!
//! ```text
//!            <P, Q>_F
//! B(P, Q) = ---------------      P = M1 / |M1|_1,  Q = M2 / |M2|_1
//!           |(P + Q) / 2|_F^2
//! ```
//!
//! All arithmetic is in `f64` with compensated summation.

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

#[derive(Debug, Clone, PartialEq)]
pub struct Map {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Map {
    /// Builds a map from row-major data. Every entry must be finite and `>= 0`.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidMap(format!(
                "dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::InvalidMap(format!(
                "expected {} entries for {height}x{width}, got {}",
                height * width,
                data.len()
            )));
        }
        if let Some((i, v)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidMap(format!("entry {i} is {v}")));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![0.0; height * width])
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    /// Builds a map from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != width) {
            return Err(Error::InvalidMap("ragged rows".into()));
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// True iff every entry is zero.
    pub fn is_degenerate(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn sum(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        acc.extend(self.data.iter().copied());
        acc.value()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Multiplies every entry by a nonnegative finite factor.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.height,
            self.width,
            self.data.iter().map(|v| v * factor).collect(),
        )
    }

    pub fn same_shape(&self, other: &Map) -> bool {
        self.shape() == other.shape()
    }
}

/// A map whose entries sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMap {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl NormalizedMap {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_map(self) -> Map {
        Map {
            height: self.height,
            width: self.width,
            data: self.data,
        }
    }
}

pub fn l1_normalize(m: &Map) -> Result<NormalizedMap> {
    if m.is_degenerate() {
        return Err(Error::DegenerateMap);
    }
    let total = m.sum();
    Ok(NormalizedMap {
        height: m.height,
        width: m.width,
        data: m.data.iter().map(|v| v / total).collect(),
    })
}

/// Attention-IoU between two maps of identical shape. Result lies in `[0, 1]`.
pub fn attention_iou(m1: &Map, m2: &Map) -> Result<f64> {
    if !m1.same_shape(m2) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            m1.height, m1.width, m2.height, m2.width
        )));
    }
    let p = l1_normalize(m1)?;
    let q = l1_normalize(m2)?;
    Ok(attention_iou_normalized(&p, &q))
}

/// Attention-IoU on already normalized maps of identical shape.
///
/// Both products are commutative per element, so swapping the arguments
/// yields a bit-identical result.
pub fn attention_iou_normalized(p: &NormalizedMap, q: &NormalizedMap) -> f64 {
    assert_eq!(p.shape(), q.shape(), "normalized maps differ in shape");
    let mut intersection = CompensatedSum::new();
    let mut union = CompensatedSum::new();
    for (&a, &b) in p.data.iter().zip(&q.data) {
        intersection.add(a * b);
        let mid = (a + b) * 0.5;
        union.add(mid * mid);
    }
    let num = intersection.value();
    let den = union.value();
    // den >= num analytically ((a+b)^2/4 - ab = (a-b)^2/4); clamp rounding overshoot.
    (num / den).clamp(0.0, 1.0)
}

/// Bilinear resampling to a smaller (or equal) grid using half-pixel centers:
/// `src = (dst + 0.5) * in / out - 0.5`, clamped to the border.
pub fn bilinear_downsample(m: &Map, out_h: usize, out_w: usize) -> Result<Map> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::DimensionMismatch(format!(
            "output dimensions must be positive, got {out_h}x{out_w}"
        )));
    }
    if out_h > m.height || out_w > m.width {
        return Err(Error::DimensionMismatch(format!(
            "cannot upsample {}x{} to {out_h}x{out_w}",
            m.height, m.width
        )));
    }
    let rows = axis_taps(m.height, out_h);
    let cols = axis_taps(m.width, out_w);
    let mut data = Vec::with_capacity(out_h * out_w);
    for &(r0, r1, fy) in &rows {
        for &(c0, c1, fx) in &cols {
            let top = m.get(r0, c0) * (1.0 - fx) + m.get(r0, c1) * fx;
            let bottom = m.get(r1, c0) * (1.0 - fx) + m.get(r1, c1) * fx;
            // convex combination of nonnegatives; max() guards -0.0 only
            data.push((top * (1.0 - fy) + bottom * fy).max(0.0));
        }
    }
    Map::new(out_h, out_w, data)
}

/// Per output index: (lower source index, upper source index, upper weight).
fn axis_taps(src_len: usize, dst_len: usize) -> Vec<(usize, usize, f64)> {
    let ratio = src_len as f64 / dst_len as f64;
    let last = (src_len - 1) as f64;
    (0..dst_len)
        .map(|d| {
            let s = ((d as f64 + 0.5) * ratio - 0.5).clamp(0.0, last);
            let lo = s.floor();
            let i0 = lo as usize;
            let i1 = (i0 + 1).min(src_len - 1);
            (i0, i1, s - lo)
        })
        .collect()
}

/// Nearest-neighbour enlargement by an integer factor: each pixel becomes an
/// `alpha x alpha` block.
pub fn nearest_upscale(m: &Map, alpha: usize) -> Result<Map> {
    if alpha == 0 {
        return Err(Error::DimensionMismatch("upscale factor must be >= 1".into()));
    }
    let (h, w) = (m.height * alpha, m.width * alpha);
    let mut data = Vec::with_capacity(h * w);
    for r in 0..h {
        let src_row = &m.data[(r / alpha) * m.width..(r / alpha + 1) * m.width];
        for c in 0..w {
            data.push(src_row[c / alpha]);
        }
    }
    Ok(Map {
        height: h,
        width: w,
        data,
    })
}
