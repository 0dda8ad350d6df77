//! Otsu thresholding, binary morphology, connected components and region
//! statistics.

mod components;
mod morphology;
mod otsu;

pub use components::{connected_components, region_eccentricity, Region};
pub use morphology::{disk_offsets, morphological_close};
pub use otsu::{histogram, otsu_bin, otsu_bin_of, otsu_threshold, threshold_for_bin, OTSU_BINS};

use thiserror::Error;

use crate::image::GrayImage;
use crate::roi::BinaryMask;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SegmentationError {
    #[error("all values fall in one histogram bin")]
    DegenerateHistogram,
    #[error("no values to threshold")]
    EmptyInput,
    #[error("mask selects no pixels")]
    EmptyMask,
    #[error("mask is {0}x{1} but the image is {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
}

fn check_dims(image: &GrayImage, mask: &BinaryMask) -> Result<(), SegmentationError> {
    if image.dimensions() == mask.dimensions() {
        Ok(())
    } else {
        Err(SegmentationError::DimensionMismatch(
            mask.width(),
            mask.height(),
            image.width(),
            image.height(),
        ))
    }
}

/// Pixel values of `image` where `mask` is set, in raster order.
pub fn masked_values(image: &GrayImage, mask: &BinaryMask) -> Result<Vec<f64>, SegmentationError> {
    check_dims(image, mask)?;
    Ok(image
        .pixels()
        .iter()
        .zip(mask.bits())
        .filter_map(|(&v, &m)| m.then_some(v))
        .collect())
}

/// Foreground = inside `mask` and at or below `threshold` (dark clot material).
pub fn binarize(
    image: &GrayImage,
    mask: &BinaryMask,
    threshold: f64,
) -> Result<BinaryMask, SegmentationError> {
    check_dims(image, mask)?;
    let bits = image
        .pixels()
        .iter()
        .zip(mask.bits())
        .map(|(&v, &m)| m && v <= threshold)
        .collect();
    Ok(BinaryMask::from_bits(image.width(), image.height(), bits))
}

/// Arithmetic mean of the image over the mask.
pub fn mean_intensity(image: &GrayImage, mask: &BinaryMask) -> Result<f64, SegmentationError> {
    check_dims(image, mask)?;
    let (sum, n) = image
        .pixels()
        .iter()
        .zip(mask.bits())
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, n), (&v, _)| (s + v, n + 1));
    if n == 0 {
        return Err(SegmentationError::EmptyMask);
    }
    // second pass removes most of the summation error
    let mean = sum / n as f64;
    let residual: f64 = image
        .pixels()
        .iter()
        .zip(mask.bits())
        .filter_map(|(&v, &m)| m.then_some(v - mean))
        .sum();
    Ok(mean + residual / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_values() -> (GrayImage, BinaryMask) {
        let img = GrayImage::new(4, 1, vec![0.1, 0.5, 0.9, 0.0]).unwrap();
        let mask = BinaryMask::from_bits(4, 1, vec![true, true, true, false]);
        (img, mask)
    }

    #[test]
    fn binarize_conventions() {
        let (img, mask) = three_values();
        assert_eq!(binarize(&img, &mask, 1.0).unwrap(), mask);
        assert!(binarize(&img, &mask, 0.05).unwrap().is_empty());
        assert_eq!(
            binarize(&img, &mask, 0.5).unwrap().bits(),
            &[true, true, false, false]
        );
        let wrong = BinaryMask::new(3, 1);
        assert!(matches!(
            binarize(&img, &wrong, 0.5),
            Err(SegmentationError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn mean_over_mask() {
        let img = GrayImage::new(4, 1, vec![0.2, 0.4, 0.6, 1.0]).unwrap();
        let mask = BinaryMask::from_bits(4, 1, vec![true, true, true, false]);
        assert!((mean_intensity(&img, &mask).unwrap() - 0.4).abs() < 1e-12);
        let c = GrayImage::constant(4, 1, 0.7);
        assert_eq!(mean_intensity(&c, &mask).unwrap(), 0.7);
        assert_eq!(
            mean_intensity(&img, &BinaryMask::new(4, 1)),
            Err(SegmentationError::EmptyMask)
        );
    }

    #[test]
    fn mean_scales_linearly() {
        let img = GrayImage::new(4, 1, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let scaled = GrayImage::new(4, 1, vec![0.2, 0.4, 0.6, 0.8]).unwrap();
        let mask = BinaryMask::from_bits(4, 1, vec![true, false, true, true]);
        let a = mean_intensity(&img, &mask).unwrap();
        let b = mean_intensity(&scaled, &mask).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12);
    }
}
