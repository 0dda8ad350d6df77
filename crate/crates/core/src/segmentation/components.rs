use std::collections::VecDeque;

use crate::roi::BinaryMask;

/// One 8-connected foreground component with its second-order moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    /// Member pixels in discovery order.
    pub pixels: Vec<(usize, usize)>,
    pub area: usize,
    pub centroid: (f64, f64),
    pub mu20: f64,
    pub mu02: f64,
    pub mu11: f64,
    pub eccentricity: f64,
}

impl Region {
    /// Computes moments and eccentricity for a non-empty pixel list.
    pub fn from_pixels(pixels: Vec<(usize, usize)>) -> Self {
        assert!(!pixels.is_empty(), "a region has at least one pixel");
        let n = pixels.len() as f64;
        let (sx, sy) = pixels.iter().fold((0.0, 0.0), |(sx, sy), &(x, y)| {
            (sx + x as f64, sy + y as f64)
        });
        let (mx, my) = (sx / n, sy / n);
        let (mut mu20, mut mu02, mut mu11) = (0.0, 0.0, 0.0);
        for &(x, y) in &pixels {
            let dx = x as f64 - mx;
            let dy = y as f64 - my;
            mu20 += dx * dx;
            mu02 += dy * dy;
            mu11 += dx * dy;
        }
        let mut region = Self {
            area: pixels.len(),
            pixels,
            centroid: (mx, my),
            mu20,
            mu02,
            mu11,
            eccentricity: 0.0,
        };
        region.eccentricity = region_eccentricity(&region);
        region
    }
}

/// `sqrt(1 − λ₂/λ₁)` for the eigenvalues `λ₁ ≥ λ₂` of the normalized
/// second-moment matrix. Single pixels and other `λ₁ = 0` regions give 0.
pub fn region_eccentricity(region: &Region) -> f64 {
    let n = region.area as f64;
    let a = region.mu20 / n;
    let c = region.mu02 / n;
    let b = region.mu11 / n;
    let mean = (a + c) / 2.0;
    let spread = (((a - c) / 2.0).powi(2) + b * b).sqrt();
    let l1 = mean + spread;
    let l2 = (mean - spread).max(0.0);
    if l1 <= 0.0 {
        return 0.0;
    }
    (1.0 - l2 / l1).clamp(0.0, 1.0).sqrt()
}

/// 8-connected components, largest first (ties keep raster discovery order).
pub fn connected_components(mask: &BinaryMask) -> Vec<Region> {
    let (w, h) = mask.dimensions();
    let mut seen = vec![false; w * h];
    let mut regions = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.bits()[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            pixels.push((x, y));
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let nx = x as isize + dx;
                    let ny = y as isize + dy;
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if mask.bits()[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        regions.push(Region::from_pixels(pixels));
    }
    regions.sort_by_key(|r| std::cmp::Reverse(r.area));
    regions
}
