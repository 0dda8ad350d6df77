//! Study image loading and per-slice normalization.
//!
//! Two input formats are understood: a narrow DICOM Part-10 subset (single
//! frame, explicit VR little endian, uncompressed monochrome) and binary PGM
//! (`P5`). Both go through the same min-max normalization so the same stored
//! pixel grid always yields the same [`GrayImage`].

mod dicom;
mod pgm;

pub use dicom::{load_dicom, write_dicom, EXPLICIT_VR_LITTLE_ENDIAN};
pub use pgm::{load_pgm, write_pgm16, write_pgm8};

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::GrayImage;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImageIoError {
    #[error("missing DICM magic at offset 128")]
    MissingPreamble,
    #[error("unsupported transfer syntax {0:?}")]
    UnsupportedTransferSyntax(String),
    #[error("no pixel data element")]
    MissingPixelData,
    #[error("pixel data holds {actual} bytes, expected {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("unsupported pixel format: {0}")]
    UnsupportedPixelFormat(String),
    #[error("malformed DICOM data: {0}")]
    Malformed(String),
    #[error("not a binary PGM (P5) file")]
    BadMagic,
    #[error("bad PGM header: {0}")]
    BadHeader(String),
    #[error("truncated pixel data: {actual} bytes, expected {expected}")]
    TruncatedPixelData { expected: usize, actual: usize },
    #[error("unrecognized image format for {0}")]
    UnknownFormat(String),
    #[error("PNG encoding failed: {0}")]
    Png(String),
}

/// A loaded slice plus the provenance needed to reproduce its normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySlice {
    pub image: GrayImage,
    pub source_id: String,
    pub original_bit_depth: u8,
    pub raw_min: i32,
    pub raw_max: i32,
}

/// Normalization metadata recorded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationInfo {
    pub method: String,
    pub original_bit_depth: u8,
    pub raw_min: i32,
    pub raw_max: i32,
}

impl StudySlice {
    /// Min-max normalizes stored sample values into `[0, 1]`.
    ///
    /// A constant slice maps to all zeros with `raw_min == raw_max`.
    pub fn from_stored(
        width: usize,
        height: usize,
        stored: &[i32],
        original_bit_depth: u8,
        source_id: impl Into<String>,
    ) -> Result<Self, ImageIoError> {
        if width == 0 || height == 0 || stored.len() != width * height {
            return Err(ImageIoError::DimensionMismatch {
                expected: width * height,
                actual: stored.len(),
            });
        }
        let raw_min = *stored.iter().min().expect("non-empty");
        let raw_max = *stored.iter().max().expect("non-empty");
        let pixels = if raw_min == raw_max {
            vec![0.0; stored.len()]
        } else {
            let span = f64::from(raw_max) - f64::from(raw_min);
            stored
                .iter()
                .map(|&v| (f64::from(v) - f64::from(raw_min)) / span)
                .collect()
        };
        let image = GrayImage::new(width, height, pixels).expect("normalized pixels are in range");
        Ok(Self {
            image,
            source_id: source_id.into(),
            original_bit_depth,
            raw_min,
            raw_max,
        })
    }

    pub fn normalization(&self) -> NormalizationInfo {
        NormalizationInfo {
            method: "per-slice min-max".to_string(),
            original_bit_depth: self.original_bit_depth,
            raw_min: self.raw_min,
            raw_max: self.raw_max,
        }
    }
}

/// Loads DICOM or PGM bytes, sniffing the format from the content.
///
/// The slice's `source_id` is the file stem of `path`.
pub fn load_study_bytes(path: &Path, bytes: &[u8]) -> Result<StudySlice, ImageIoError> {
    let mut slice = if bytes.len() >= 132 && &bytes[128..132] == b"DICM" {
        load_dicom(bytes)?
    } else if bytes.starts_with(b"P") {
        // other netpbm flavours get the PGM parser's precise error
        load_pgm(bytes)?
    } else {
        return Err(ImageIoError::UnknownFormat(path.display().to_string()));
    };
    slice.source_id = source_id_for(path);
    Ok(slice)
}

/// The identifier used for a study file: its file stem.
pub fn source_id_for(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Encodes an 8-bit grayscale buffer as PNG.
pub fn encode_png_gray8(width: usize, height: usize, data: &[u8]) -> Result<Vec<u8>, ImageIoError> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, width as u32, height as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| ImageIoError::Png(e.to_string()))?;
        writer
            .write_image_data(data)
            .map_err(|e| ImageIoError::Png(e.to_string()))?;
    }
    Ok(out)
}

/// PNG rendering of a normalized image, `round(v * 255)` per pixel.
pub fn encode_png(image: &GrayImage) -> Result<Vec<u8>, ImageIoError> {
    encode_png_gray8(image.width(), image.height(), &image.to_u8())
}
