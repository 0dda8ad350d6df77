//! The three clot criteria and the two-of-three decision rule.
//!
//! * **intensity ratio**: mean of the simple-enhanced image over the clot ROI
//!   divided by its mean over the lumen-only region; indicative inside
//!   `center ± halfwidth` (inclusive).
//! * **occupation** (a.k.a. solidity): Otsu-segmented, disk-closed dark
//!   foreground of the weighted-enhanced image as a fraction of the clot ROI;
//!   indicative when it strictly exceeds the minimum fraction.
//! * **eccentricity**: of the largest closed component; indicative when
//!   strictly below the maximum.
//!
//! Intensity and occupation together are enough for a positive verdict; either
//! one alone needs a round (low-eccentricity) component as well.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filters::{build_filtered_set, FilterError, FilterParams, FilteredSet};
use crate::image_io::{NormalizationInfo, StudySlice};
use crate::roi::{make_masks, BinaryMask, MaskTriple, RleMask, RoiError, RoiPair, RoiShape};
use crate::segmentation::{
    binarize, connected_components, masked_values, mean_intensity, morphological_close,
    otsu_threshold, SegmentationError, OTSU_BINS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error(transparent)]
    Roi(#[from] RoiError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),
    #[error("invalid criterion thresholds: {0}")]
    InvalidThresholds(String),
}

impl ClassifyError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            ClassifyError::Roi(e) => e.code(),
            ClassifyError::Filter(FilterError::TileGridTooFine { .. }) => "tile_grid_too_fine",
            ClassifyError::Filter(_) => "invalid_params",
            ClassifyError::Segmentation(_) => "segmentation_failed",
            ClassifyError::InvalidThresholds(_) => "invalid_thresholds",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Positive,
    Negative,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Positive => "POSITIVE",
            Verdict::Negative => "NEGATIVE",
        })
    }
}

impl std::str::FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "POSITIVE" => Ok(Verdict::Positive),
            "NEGATIVE" => Ok(Verdict::Negative),
            other => Err(format!("unknown verdict {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    IntensityRatio,
    Occupation,
    Eccentricity,
}

/// One measured criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterResult {
    pub name: Criterion,
    /// `None` when the measurement is undefined (no component, dark lumen).
    pub value: Option<f64>,
    pub threshold_low: Option<f64>,
    pub threshold_high: Option<f64>,
    pub indicative: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriterionThresholds {
    pub intensity_center: f64,
    pub intensity_halfwidth: f64,
    pub occupation_min_fraction: f64,
    pub eccentricity_max: f64,
    /// Radius of the disk used to close the Otsu foreground, in pixels.
    pub closing_radius: usize,
}

impl Default for CriterionThresholds {
    fn default() -> Self {
        Self {
            intensity_center: 0.40,
            intensity_halfwidth: 0.20,
            occupation_min_fraction: 0.07,
            eccentricity_max: 0.8,
            closing_radius: 5,
        }
    }
}

impl CriterionThresholds {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        let finite_positive = [
            self.intensity_center,
            self.intensity_halfwidth,
            self.occupation_min_fraction,
            self.eccentricity_max,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
        if !finite_positive {
            return Err(ClassifyError::InvalidThresholds(
                "all thresholds must be positive".into(),
            ));
        }
        let (lo, hi) = self.intensity_band();
        if lo <= 0.0 || hi >= 1.0 {
            return Err(ClassifyError::InvalidThresholds(format!(
                "intensity band [{lo}, {hi}] must lie inside (0, 1)"
            )));
        }
        if !(1..=64).contains(&self.closing_radius) {
            return Err(ClassifyError::InvalidThresholds(format!(
                "closing radius {} outside [1, 64]",
                self.closing_radius
            )));
        }
        Ok(())
    }

    /// `center ± halfwidth`, rounded to 12 decimals so that 0.4 + 0.2 reads 0.6.
    pub fn intensity_band(&self) -> (f64, f64) {
        let tidy = |v: f64| (v * 1e12).round() / 1e12;
        (
            tidy(self.intensity_center - self.intensity_halfwidth),
            tidy(self.intensity_center + self.intensity_halfwidth),
        )
    }
}

/// Measurement conventions, recorded with every result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub normalization: String,
    pub intensity_band: String,
    pub intensity_mask: String,
    pub occupation_comparison: String,
    pub eccentricity_comparison: String,
    pub foreground: String,
    pub otsu_bins: usize,
    pub closing_element: String,
    pub connectivity: u8,
    pub eccentricity_component: String,
}

impl Conventions {
    pub fn new(thresholds: &CriterionThresholds) -> Self {
        Self {
            normalization: "per-slice min-max of stored values".into(),
            intensity_band: "inclusive".into(),
            intensity_mask: "full clot ROI".into(),
            occupation_comparison: "strictly greater than minimum".into(),
            eccentricity_comparison: "strictly less than maximum".into(),
            foreground: "pixel <= Otsu threshold (hypointense)".into(),
            otsu_bins: OTSU_BINS,
            closing_element: format!(
                "Euclidean disk dx^2+dy^2 <= r^2, r = {}",
                thresholds.closing_radius
            ),
            connectivity: 8,
            eccentricity_component: "largest closed component".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_id: String,
    pub roi: RoiPair,
    pub normalization: NormalizationInfo,
}

/// Verdict plus the complete evidence trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClotAssessment {
    pub verdict: Verdict,
    pub intensity: ParameterResult,
    pub occupation: ParameterResult,
    pub eccentricity: ParameterResult,
    /// Closed Otsu foreground inside the clot ROI.
    pub intermediate: RleMask,
    pub params: FilterParams,
    pub thresholds: CriterionThresholds,
    pub conventions: Conventions,
    pub provenance: Provenance,
}

impl ClotAssessment {
    /// Recomputes the verdict from the stored flags.
    pub fn flags_verdict(&self) -> Verdict {
        decide(
            self.intensity.indicative,
            self.occupation.indicative,
            self.eccentricity.indicative,
        )
    }
}

/// `(intensity ∧ occupation) ∨ ((intensity ⊕ occupation) ∧ eccentricity)`.
pub fn decide(intensity: bool, occupation: bool, eccentricity: bool) -> Verdict {
    if (intensity && occupation) || ((intensity ^ occupation) && eccentricity) {
        Verdict::Positive
    } else {
        Verdict::Negative
    }
}

/// Slack on the inclusive intensity band so that `center ± halfwidth` rounding
/// does not exclude a ratio sitting exactly on an edge.
const BAND_EDGE_TOLERANCE: f64 = 1e-12;

pub fn eval_intensity(
    fset: &FilteredSet,
    masks: &MaskTriple,
    th: &CriterionThresholds,
) -> Result<ParameterResult, ClassifyError> {
    let (low, high) = th.intensity_band();
    let clot_mean = mean_intensity(&fset.simple_enhanced, &masks.clot)?;
    let lumen_mean = mean_intensity(&fset.simple_enhanced, &masks.lumen_only)?;
    let mut result = ParameterResult {
        name: Criterion::IntensityRatio,
        value: None,
        threshold_low: Some(low),
        threshold_high: Some(high),
        indicative: false,
        detail: String::new(),
    };
    if lumen_mean <= 0.0 {
        result.detail = "lumen-only mean intensity is zero; ratio undefined".into();
        return Ok(result);
    }
    let ratio = clot_mean / lumen_mean;
    result.value = Some(ratio);
    result.indicative = (low - BAND_EDGE_TOLERANCE..=high + BAND_EDGE_TOLERANCE).contains(&ratio);
    result.detail = format!("clot mean {clot_mean:.6}, lumen-only mean {lumen_mean:.6}");
    Ok(result)
}

/// Returns the occupation result and the closed clot binary.
pub fn eval_occupation(
    fset: &FilteredSet,
    masks: &MaskTriple,
    th: &CriterionThresholds,
) -> Result<(ParameterResult, BinaryMask), ClassifyError> {
    let image = &fset.weighted_enhanced;
    let roi_area = masks.clot.popcount();
    if roi_area == 0 {
        return Err(RoiError::EmptyMask("clot").into());
    }
    let mut result = ParameterResult {
        name: Criterion::Occupation,
        value: Some(0.0),
        threshold_low: Some(th.occupation_min_fraction),
        threshold_high: None,
        indicative: false,
        detail: String::new(),
    };
    let values = masked_values(image, &masks.clot)?;
    let threshold = match otsu_threshold(&values) {
        Ok(t) => t,
        Err(SegmentationError::DegenerateHistogram) => {
            result.detail = "no binary structure: clot ROI intensities are uniform".into();
            return Ok((result, BinaryMask::new(image.width(), image.height())));
        }
        Err(e) => return Err(e.into()),
    };
    let foreground = binarize(image, &masks.clot, threshold)?;
    let closed = if foreground.is_empty() {
        foreground
    } else {
        morphological_close(&foreground, th.closing_radius).and(&masks.clot)?
    };
    let area = closed.popcount();
    let fraction = area as f64 / roi_area as f64;
    result.value = Some(fraction);
    result.indicative = fraction > th.occupation_min_fraction;
    result.detail =
        format!("Otsu threshold {threshold:.6}; closed foreground {area} of {roi_area} px");
    Ok((result, closed))
}

pub fn eval_eccentricity(clot_binary: &BinaryMask, th: &CriterionThresholds) -> ParameterResult {
    let regions = connected_components(clot_binary);
    let mut result = ParameterResult {
        name: Criterion::Eccentricity,
        value: None,
        threshold_low: None,
        threshold_high: Some(th.eccentricity_max),
        indicative: false,
        detail: String::new(),
    };
    match regions.first() {
        None => result.detail = "no solid component".into(),
        Some(largest) => {
            result.value = Some(largest.eccentricity);
            result.indicative = largest.eccentricity < th.eccentricity_max;
            result.detail = format!(
                "largest of {} component(s): {} px",
                regions.len(),
                largest.area
            );
        }
    }
    result
}

/// Everything produced while classifying one slice.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub assessment: ClotAssessment,
    pub masks: MaskTriple,
    pub filtered: FilteredSet,
    pub clot_binary: BinaryMask,
}

/// Classifies with a precomputed filtered set (which must come from
/// `slice.image` and `params`).
pub fn evaluate_with_filtered(
    slice: &StudySlice,
    filtered: FilteredSet,
    lumen: &RoiShape,
    clot: &RoiShape,
    params: &FilterParams,
    th: &CriterionThresholds,
) -> Result<Evaluation, ClassifyError> {
    th.validate()?;
    let (w, h) = slice.image.dimensions();
    let masks = make_masks(lumen, clot, w, h)?;
    let intensity = eval_intensity(&filtered, &masks, th)?;
    let (occupation, clot_binary) = eval_occupation(&filtered, &masks, th)?;
    let eccentricity = eval_eccentricity(&clot_binary, th);
    let verdict = decide(
        intensity.indicative,
        occupation.indicative,
        eccentricity.indicative,
    );
    let assessment = ClotAssessment {
        verdict,
        intensity,
        occupation,
        eccentricity,
        intermediate: clot_binary.to_rle(),
        params: params.clone(),
        thresholds: th.clone(),
        conventions: Conventions::new(th),
        provenance: Provenance {
            source_id: slice.source_id.clone(),
            roi: RoiPair {
                lumen: lumen.clone(),
                clot: clot.clone(),
            },
            normalization: slice.normalization(),
        },
    };
    Ok(Evaluation {
        assessment,
        masks,
        filtered,
        clot_binary,
    })
}

/// Full pipeline: masks, filter chain, the three criteria and the verdict.
pub fn evaluate(
    slice: &StudySlice,
    lumen: &RoiShape,
    clot: &RoiShape,
    params: &FilterParams,
    th: &CriterionThresholds,
) -> Result<Evaluation, ClassifyError> {
    th.validate()?;
    let (w, h) = slice.image.dimensions();
    // containment is checked before any filtering work
    make_masks(lumen, clot, w, h)?;
    let filtered = build_filtered_set(&slice.image, params)?;
    evaluate_with_filtered(slice, filtered, lumen, clot, params, th)
}

pub fn classify(
    slice: &StudySlice,
    lumen: &RoiShape,
    clot: &RoiShape,
    params: &FilterParams,
    th: &CriterionThresholds,
) -> Result<ClotAssessment, ClassifyError> {
    evaluate(slice, lumen, clot, params, th).map(|e| e.assessment)
}
