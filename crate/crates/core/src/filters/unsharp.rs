use crate::image::{clamp01, GrayImage};

/// Normalized 1-D Gaussian taps, truncated at `ceil(3σ)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / denom).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Separable Gaussian blur with border replication.
pub fn gaussian_blur(image: &GrayImage, sigma: f64) -> Vec<f64> {
    let (w, h) = image.dimensions();
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let src = image.pixels();
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;

    let mut horizontal = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            horizontal[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, wgt)| wgt * row[clamp(x as isize + k as isize - radius, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, wgt)| {
                    wgt * horizontal[clamp(y as isize + k as isize - radius, h) * w + x]
                })
                .sum();
        }
    }
    out
}

/// `clamp01(f + λ·(f − blur(f)))`.
pub fn unsharp(image: &GrayImage, lambda: f64, sigma: f64) -> GrayImage {
    // g is identically zero for a constant image
    if lambda == 0.0 || image.is_constant() {
        return image.clone();
    }
    let blurred = gaussian_blur(image, sigma);
    let pixels = image
        .pixels()
        .iter()
        .zip(&blurred)
        .map(|(&f, &b)| clamp01(f + lambda * (f - b)))
        .collect();
    GrayImage::from_raw_clamped(image.width(), image.height(), pixels)
}
