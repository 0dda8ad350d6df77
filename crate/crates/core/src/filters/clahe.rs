//! Contrast-limited adaptive histogram equalization.
//!
//! The image is split into a `tiles_x × tiles_y` grid. Each tile gets its own
//! clipped-histogram equalization curve; excess counts above the clip limit are
//! spread uniformly over all bins. Every output pixel is the bilinear blend of
//! the curves of the (up to four) tiles whose centers surround it.

use crate::image::GrayImage;

/// Per-tile intensity mapping.
#[derive(Debug, Clone, PartialEq)]
pub enum TileMapping {
    /// Every tile pixel fell into one bin; the value maps to itself.
    Identity,
    /// Cumulative distribution of the clipped histogram, one entry per bin.
    Lut(Vec<f64>),
}

impl TileMapping {
    #[inline]
    pub fn apply(&self, value: f64, bins: usize) -> f64 {
        match self {
            TileMapping::Identity => value,
            TileMapping::Lut(lut) => lut[bin_index(value, bins)],
        }
    }
}

#[inline]
pub fn bin_index(value: f64, bins: usize) -> usize {
    ((value * bins as f64) as usize).min(bins - 1)
}

/// Clips a histogram at `clip_count` and redistributes the excess uniformly.
pub fn clip_histogram(hist: &[f64], clip_count: f64) -> Vec<f64> {
    let excess: f64 = hist.iter().map(|&h| (h - clip_count).max(0.0)).sum();
    let share = excess / hist.len() as f64;
    hist.iter().map(|&h| h.min(clip_count) + share).collect()
}

/// Equalization curve for one tile's pixel values.
pub fn tile_mapping(values: &[f64], bins: usize, clip_fraction: f64) -> TileMapping {
    let mut hist = vec![0.0; bins];
    for &v in values {
        hist[bin_index(v, bins)] += 1.0;
    }
    if hist.iter().filter(|&&h| h > 0.0).count() <= 1 {
        return TileMapping::Identity;
    }
    let total = values.len() as f64;
    let clipped = clip_histogram(&hist, clip_fraction * total);
    let mut acc = 0.0;
    let lut = clipped
        .iter()
        .map(|&h| {
            acc += h;
            (acc / total).min(1.0)
        })
        .collect();
    TileMapping::Lut(lut)
}

/// Tile edges along one axis: `edges[t]..edges[t + 1]` is tile `t`.
pub fn tile_edges(len: usize, tiles: usize) -> Vec<usize> {
    (0..=tiles).map(|t| t * len / tiles).collect()
}

/// For each pixel along an axis: the two tiles to blend and the weight of the second.
fn blend_weights(edges: &[usize]) -> Vec<(usize, usize, f64)> {
    let tiles = edges.len() - 1;
    let len = edges[tiles];
    let centers: Vec<f64> = edges
        .windows(2)
        .map(|e| (e[0] + e[1]) as f64 / 2.0)
        .collect();
    (0..len)
        .map(|i| {
            let p = i as f64 + 0.5;
            if p <= centers[0] {
                (0, 0, 0.0)
            } else if p >= centers[tiles - 1] {
                (tiles - 1, tiles - 1, 0.0)
            } else {
                let t = centers.partition_point(|&c| c <= p) - 1;
                let w = (p - centers[t]) / (centers[t + 1] - centers[t]);
                (t, t + 1, w)
            }
        })
        .collect()
}

/// All tile mappings in row-major tile order.
pub fn tile_mappings(
    image: &GrayImage,
    tiles_x: usize,
    tiles_y: usize,
    bins: usize,
    clip_fraction: f64,
) -> Vec<TileMapping> {
    let (w, _) = image.dimensions();
    let ex = tile_edges(image.width(), tiles_x);
    let ey = tile_edges(image.height(), tiles_y);
    let px = image.pixels();
    let mut out = Vec::with_capacity(tiles_x * tiles_y);
    let mut values = Vec::new();
    for ty in 0..tiles_y {
        for tx in 0..tiles_x {
            values.clear();
            for y in ey[ty]..ey[ty + 1] {
                values.extend_from_slice(&px[y * w + ex[tx]..y * w + ex[tx + 1]]);
            }
            out.push(tile_mapping(&values, bins, clip_fraction));
        }
    }
    out
}

/// Applies CLAHE. Callers are responsible for checking that each tile is at
/// least 4×4 pixels.
pub fn clahe(
    image: &GrayImage,
    tiles_x: usize,
    tiles_y: usize,
    bins: usize,
    clip_fraction: f64,
) -> GrayImage {
    let (w, h) = image.dimensions();
    let maps = tile_mappings(image, tiles_x, tiles_y, bins, clip_fraction);
    let wx = blend_weights(&tile_edges(w, tiles_x));
    let wy = blend_weights(&tile_edges(h, tiles_y));
    let src = image.pixels();
    let mut out = Vec::with_capacity(w * h);
    for (y, &(ty0, ty1, fy)) in wy.iter().enumerate() {
        for (x, &(tx0, tx1, fx)) in wx.iter().enumerate() {
            let v = src[y * w + x];
            let m = |tx: usize, ty: usize| maps[ty * tiles_x + tx].apply(v, bins);
            // a + f·(b − a) returns a exactly when both mappings agree
            let lerp = |a: f64, b: f64, f: f64| a + f * (b - a);
            let top = lerp(m(tx0, ty0), m(tx1, ty0), fx);
            let bottom = lerp(m(tx0, ty1), m(tx1, ty1), fx);
            out.push(lerp(top, bottom, fy));
        }
    }
    GrayImage::from_raw_clamped(w, h, out)
}
