//! The enhancement chain that prepares a slice for characterization.
//!
//! `original → unsharp → CLAHE → enhanced`; the enhanced image is then combined
//! with the original twice (a plain average and a 2:1 weighting in favour of
//! the enhanced image), and both combinations are re-equalized with the same
//! CLAHE parameters.

pub mod clahe;
pub mod unsharp;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::{GrayImage, ImageError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("invalid filter parameters: {0}")]
    InvalidParams(String),
    #[error(
        "{width}x{height} image is too small for a {tiles_x}x{tiles_y} CLAHE grid \
         (tiles must be at least 4x4 pixels)"
    )]
    TileGridTooFine {
        width: usize,
        height: usize,
        tiles_x: usize,
        tiles_y: usize,
    },
    #[error(transparent)]
    Image(#[from] ImageError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterParams {
    /// Unsharp gain applied to the high-pass residual.
    pub lambda: f64,
    /// Standard deviation of the Gaussian blur behind the residual, in pixels.
    pub unsharp_sigma: f64,
    pub clahe_tiles_x: usize,
    pub clahe_tiles_y: usize,
    /// Clip limit as a fraction of the tile pixel count.
    pub clahe_clip: f64,
    pub clahe_bins: usize,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            lambda: 0.21,
            unsharp_sigma: 1.5,
            clahe_tiles_x: 8,
            clahe_tiles_y: 8,
            clahe_clip: 0.01,
            clahe_bins: 256,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<(), FilterError> {
        let bad = |msg: String| Err(FilterError::InvalidParams(msg));
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda {} outside [0, 1]", self.lambda));
        }
        if !(self.unsharp_sigma.is_finite() && self.unsharp_sigma > 0.0) {
            return bad(format!(
                "unsharp_sigma {} must be positive",
                self.unsharp_sigma
            ));
        }
        if self.unsharp_sigma > 100.0 {
            return bad(format!(
                "unsharp_sigma {} is unreasonably large",
                self.unsharp_sigma
            ));
        }
        if self.clahe_tiles_x < 2 || self.clahe_tiles_y < 2 {
            return bad(format!(
                "CLAHE grid {}x{} must be at least 2x2",
                self.clahe_tiles_x, self.clahe_tiles_y
            ));
        }
        if !(16..=65536).contains(&self.clahe_bins) {
            return bad(format!(
                "clahe_bins {} outside [16, 65536]",
                self.clahe_bins
            ));
        }
        if !(self.clahe_clip > 0.0 && self.clahe_clip <= 1.0) {
            return bad(format!("clahe_clip {} outside (0, 1]", self.clahe_clip));
        }
        Ok(())
    }

    fn check_grid(&self, image: &GrayImage) -> Result<(), FilterError> {
        let (width, height) = image.dimensions();
        if width < 4 * self.clahe_tiles_x || height < 4 * self.clahe_tiles_y {
            return Err(FilterError::TileGridTooFine {
                width,
                height,
                tiles_x: self.clahe_tiles_x,
                tiles_y: self.clahe_tiles_y,
            });
        }
        Ok(())
    }
}

/// The five images consumed by the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSet {
    pub original: GrayImage,
    pub sharpened: GrayImage,
    pub enhanced: GrayImage,
    /// Linear superposition, re-equalized: drives the intensity criterion.
    pub simple_enhanced: GrayImage,
    /// 2:1 weighted superposition, re-equalized: drives the occupation criterion.
    pub weighted_enhanced: GrayImage,
}

impl FilteredSet {
    /// Members in pipeline order with their render names.
    pub fn members(&self) -> [(&'static str, &GrayImage); 5] {
        [
            ("original", &self.original),
            ("sharpened", &self.sharpened),
            ("enhanced", &self.enhanced),
            ("simple_enhanced", &self.simple_enhanced),
            ("weighted_enhanced", &self.weighted_enhanced),
        ]
    }
}

/// Unsharp masking: `f + λ·(f − blur_σ(f))`, clamped to `[0, 1]`.
pub fn unsharp(image: &GrayImage, params: &FilterParams) -> Result<GrayImage, FilterError> {
    params.validate()?;
    Ok(unsharp::unsharp(image, params.lambda, params.unsharp_sigma))
}

pub fn clahe(image: &GrayImage, params: &FilterParams) -> Result<GrayImage, FilterError> {
    params.validate()?;
    params.check_grid(image)?;
    Ok(clahe::clahe(
        image,
        params.clahe_tiles_x,
        params.clahe_tiles_y,
        params.clahe_bins,
        params.clahe_clip,
    ))
}

/// Pixelwise `(original + enhanced) / 2`.
pub fn superpose_linear(
    original: &GrayImage,
    enhanced: &GrayImage,
) -> Result<GrayImage, FilterError> {
    original.same_dimensions(enhanced)?;
    let pixels = original
        .pixels()
        .iter()
        .zip(enhanced.pixels())
        .map(|(&o, &e)| (o + e) / 2.0)
        .collect();
    Ok(GrayImage::from_raw_clamped(
        original.width(),
        original.height(),
        pixels,
    ))
}

/// Pixelwise `(2·enhanced + original) / 3`.
pub fn superpose_weighted(
    original: &GrayImage,
    enhanced: &GrayImage,
) -> Result<GrayImage, FilterError> {
    original.same_dimensions(enhanced)?;
    let pixels = original
        .pixels()
        .iter()
        .zip(enhanced.pixels())
        // written as e + (o - e)/3 so equal inputs come back bit-exact
        .map(|(&o, &e)| e + (o - e) / 3.0)
        .collect();
    Ok(GrayImage::from_raw_clamped(
        original.width(),
        original.height(),
        pixels,
    ))
}

pub fn build_filtered_set(
    original: &GrayImage,
    params: &FilterParams,
) -> Result<FilteredSet, FilterError> {
    params.validate()?;
    params.check_grid(original)?;
    let sharpened = unsharp(original, params)?;
    let enhanced = clahe(&sharpened, params)?;
    let simple_enhanced = clahe(&superpose_linear(original, &enhanced)?, params)?;
    let weighted_enhanced = clahe(&superpose_weighted(original, &enhanced)?, params)?;
    Ok(FilteredSet {
        original: original.clone(),
        sharpened,
        enhanced,
        simple_enhanced,
        weighted_enhanced,
    })
}
