//! Operator-drawn regions of interest and their rasterized masks.
//!
//! Coordinates are zero-based continuous pixel units: pixel `(x, y)` covers
//! `[x, x+1) × [y, y+1)` and is included in a shape when its center
//! `(x + 0.5, y + 0.5)` lies inside. No anti-aliasing or partial coverage.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoiError {
    #[error("invalid ROI shape: {0}")]
    InvalidShape(String),
    #[error("{0} ROI does not cover any pixel center")]
    EmptyMask(&'static str),
    #[error("clot ROI has {outside} pixel(s) outside the lumen ROI")]
    ClotNotContained { outside: usize },
    #[error("lumen ROI equals the clot ROI; the lumen-only region is empty")]
    LumenEqualsClot,
    #[error("mask dimensions {0}x{1} do not match {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
}

impl RoiError {
    /// Stable machine-readable code used in CLI and HTTP error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            RoiError::InvalidShape(_) => "invalid_roi",
            RoiError::EmptyMask(_) => "empty_mask",
            RoiError::ClotNotContained { .. } => "clot_not_contained",
            RoiError::LumenEqualsClot => "lumen_equals_clot",
            RoiError::DimensionMismatch(..) => "dimension_mismatch",
        }
    }
}

/// An ellipse or a simple polygon in image pixel coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RoiShape {
    Ellipse {
        cx: f64,
        cy: f64,
        a: f64,
        b: f64,
        #[serde(default)]
        rot: f64,
    },
    Polygon {
        points: Vec<[f64; 2]>,
    },
}

/// The lumen and clot ROIs as exchanged by the CLI, the service and the UI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiPair {
    pub lumen: RoiShape,
    pub clot: RoiShape,
}

impl RoiShape {
    pub fn circle(cx: f64, cy: f64, r: f64) -> Self {
        RoiShape::Ellipse {
            cx,
            cy,
            a: r,
            b: r,
            rot: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), RoiError> {
        match self {
            RoiShape::Ellipse { cx, cy, a, b, rot } => {
                if ![cx, cy, a, b, rot].iter().all(|v| v.is_finite()) {
                    return Err(RoiError::InvalidShape(
                        "non-finite ellipse parameter".into(),
                    ));
                }
                if *a <= 0.0 || *b <= 0.0 {
                    return Err(RoiError::InvalidShape(format!(
                        "semi-axes must be positive, got a={a} b={b}"
                    )));
                }
                Ok(())
            }
            RoiShape::Polygon { points } => {
                if points.len() < 3 {
                    return Err(RoiError::InvalidShape(format!(
                        "polygon needs at least 3 vertices, got {}",
                        points.len()
                    )));
                }
                if points.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(RoiError::InvalidShape("non-finite polygon vertex".into()));
                }
                if is_self_intersecting(points) {
                    return Err(RoiError::InvalidShape(
                        "polygon is self-intersecting".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Whether the point `(px, py)` lies inside (boundary included for ellipses).
    fn contains(&self, px: f64, py: f64) -> bool {
        match self {
            RoiShape::Ellipse { cx, cy, a, b, rot } => {
                let (s, c) = rot.sin_cos();
                let dx = px - cx;
                let dy = py - cy;
                let u = (dx * c + dy * s) / a;
                let v = (-dx * s + dy * c) / b;
                u * u + v * v <= 1.0
            }
            RoiShape::Polygon { points } => point_in_polygon(points, px, py),
        }
    }
}

fn orientation(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
}

fn on_segment(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> bool {
    r[0] >= p[0].min(q[0])
        && r[0] <= p[0].max(q[0])
        && r[1] >= p[1].min(q[1])
        && r[1] <= p[1].max(q[1])
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = orientation(q1, q2, p1);
    let d2 = orientation(q1, q2, p2);
    let d3 = orientation(p1, p2, q1);
    let d4 = orientation(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

fn is_self_intersecting(points: &[[f64; 2]]) -> bool {
    let n = points.len();
    for i in 0..n {
        let (a1, a2) = (points[i], points[(i + 1) % n]);
        for j in i + 1..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (b1, b2) = (points[j], points[(j + 1) % n]);
            if segments_intersect(a1, a2, b1, b2) {
                return true;
            }
        }
    }
    false
}

/// Even-odd crossing test with half-open edges.
fn point_in_polygon(points: &[[f64; 2]], px: f64, py: f64) -> bool {
    let mut inside = false;
    let n = points.len();
    let mut j = n - 1;
    for i in 0..n {
        let [xi, yi] = points[i];
        let [xj, yj] = points[j];
        if (yi > py) != (yj > py) {
            let x_cross = xi + (py - yi) * (xj - xi) / (yj - yi);
            if px < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Row-major boolean mask matching the dimensions of the image it annotates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), width * height, "mask buffer length");
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    fn check_dims(&self, other: &BinaryMask) -> Result<(), RoiError> {
        if self.dimensions() == other.dimensions() {
            Ok(())
        } else {
            Err(RoiError::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ))
        }
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> Result<bool, RoiError> {
        self.check_dims(other)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b))
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask, RoiError> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask, RoiError> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn and_not(&self, other: &BinaryMask) -> Result<BinaryMask, RoiError> {
        self.zip_with(other, |a, b| a && !b)
    }

    fn zip_with(
        &self,
        other: &BinaryMask,
        f: impl Fn(bool, bool) -> bool,
    ) -> Result<BinaryMask, RoiError> {
        self.check_dims(other)?;
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Iterates `(x, y)` of set pixels in raster order.
    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }

    /// Run-length encoding: `[start, length]` pairs over the row-major index.
    pub fn to_rle(&self) -> RleMask {
        let mut runs = Vec::new();
        let mut i = 0;
        while i < self.bits.len() {
            if self.bits[i] {
                let start = i;
                while i < self.bits.len() && self.bits[i] {
                    i += 1;
                }
                runs.push([start, i - start]);
            } else {
                i += 1;
            }
        }
        RleMask {
            width: self.width,
            height: self.height,
            runs,
        }
    }

    /// 8-bit rendering, 255 for set pixels.
    pub fn to_u8(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect()
    }
}

/// Serialized form of a [`BinaryMask`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub width: usize,
    pub height: usize,
    pub runs: Vec<[usize; 2]>,
}

impl RleMask {
    pub fn to_mask(&self) -> Result<BinaryMask, RoiError> {
        let mut mask = BinaryMask::new(self.width, self.height);
        for &[start, len] in &self.runs {
            let end = start
                .checked_add(len)
                .filter(|&e| e <= mask.bits.len())
                .ok_or_else(|| RoiError::InvalidShape("RLE run outside the mask".into()))?;
            mask.bits[start..end].fill(true);
        }
        Ok(mask)
    }
}

/// The three masks the classifier consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskTriple {
    pub clot: BinaryMask,
    pub lumen: BinaryMask,
    pub lumen_only: BinaryMask,
}

fn rasterize_named(
    shape: &RoiShape,
    width: usize,
    height: usize,
    name: &'static str,
) -> Result<BinaryMask, RoiError> {
    shape.validate()?;
    let mut mask = BinaryMask::new(width, height);
    let (x0, x1, y0, y1) = match shape {
        RoiShape::Ellipse { cx, cy, a, b, .. } => {
            let r = a.max(*b);
            (cx - r, cx + r, cy - r, cy + r)
        }
        RoiShape::Polygon { points } => points.iter().fold(
            (
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
            ),
            |(x0, x1, y0, y1), p| (x0.min(p[0]), x1.max(p[0]), y0.min(p[1]), y1.max(p[1])),
        ),
    };
    let pixel_range = |lo: f64, hi: f64, n: usize| -> Option<(usize, usize)> {
        let start = (lo - 0.5).ceil().max(0.0);
        let end = (hi - 0.5).floor().min(n as f64 - 1.0);
        (end >= start).then_some((start as usize, end as usize))
    };
    let (Some((xs, xe)), Some((ys, ye))) =
        (pixel_range(x0, x1, width), pixel_range(y0, y1, height))
    else {
        return Err(RoiError::EmptyMask(name));
    };
    let clamped;
    let shape = match shape {
        RoiShape::Polygon { points } => {
            clamped = RoiShape::Polygon {
                points: points
                    .iter()
                    .map(|p| {
                        [
                            p[0].clamp(0.0, width as f64),
                            p[1].clamp(0.0, height as f64),
                        ]
                    })
                    .collect(),
            };
            &clamped
        }
        ellipse => ellipse,
    };
    for y in ys..=ye {
        for x in xs..=xe {
            if shape.contains(x as f64 + 0.5, y as f64 + 0.5) {
                mask.set(x, y, true);
            }
        }
    }
    if mask.is_empty() {
        return Err(RoiError::EmptyMask(name));
    }
    Ok(mask)
}

/// Rasterizes a shape by the pixel-center rule.
pub fn rasterize(shape: &RoiShape, width: usize, height: usize) -> Result<BinaryMask, RoiError> {
    rasterize_named(shape, width, height, "ROI")
}

/// Builds the clot / lumen / lumen-only masks, rejecting a clot ROI that is not
/// a pixelwise subset of the lumen ROI.
pub fn make_masks(
    lumen_shape: &RoiShape,
    clot_shape: &RoiShape,
    width: usize,
    height: usize,
) -> Result<MaskTriple, RoiError> {
    let lumen = rasterize_named(lumen_shape, width, height, "lumen")?;
    let clot = rasterize_named(clot_shape, width, height, "clot")?;
    let outside = clot
        .bits
        .iter()
        .zip(&lumen.bits)
        .filter(|(&c, &l)| c && !l)
        .count();
    if outside > 0 {
        return Err(RoiError::ClotNotContained { outside });
    }
    let lumen_only = lumen.and_not(&clot)?;
    if lumen_only.is_empty() {
        return Err(RoiError::LumenEqualsClot);
    }
    Ok(MaskTriple {
        clot,
        lumen,
        lumen_only,
    })
}
