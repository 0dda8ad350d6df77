//! Semi-automated clot characterization for True-FISP MR slices.
//!
//! The pipeline separates real pulmonary clots from flow-artifact "fake clots"
//! inside an operator-drawn vessel ROI:
//!
//! 1. **image_io**: load a DICOM subset or binary PGM and min-max normalize it.
//! 2. **roi**: rasterize the lumen and clot ROIs, check containment, build the mask triple.
//! 3. **filters**: unsharp masking, CLAHE, linear and 2:1 weighted superposition,
//!    re-equalization.
//! 4. **segmentation**: Otsu threshold, disk closing, 8-connected components and
//!    moment-based eccentricity.
//! 5. **classifier**: intensity ratio, occupation rate and eccentricity criteria,
//!    combined by the two-of-three decision rule.
//!
//! [`phantom`] generates synthetic slices with known ground truth and [`report`]
//! holds the serialized report types shared by the CLI and the HTTP service.

pub mod classifier;
pub mod filters;
pub mod image;
pub mod image_io;
pub mod phantom;
pub mod report;
pub mod roi;
pub mod segmentation;

pub use classifier::{
    classify, decide, ClassifyError, ClotAssessment, CriterionThresholds, ParameterResult, Verdict,
};
pub use filters::{build_filtered_set, FilterError, FilterParams, FilteredSet};
pub use image::{GrayImage, ImageError};
pub use image_io::{load_dicom, load_pgm, ImageIoError, StudySlice};
pub use roi::{BinaryMask, MaskTriple, RoiError, RoiPair, RoiShape};
pub use segmentation::Region;
