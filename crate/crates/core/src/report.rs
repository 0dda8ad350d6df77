//! Report documents shared by the batch CLI and the HTTP service.

use serde::{Deserialize, Serialize};

use crate::classifier::{ClotAssessment, Verdict};
use crate::roi::{BinaryMask, MaskTriple, RleMask};

pub const SCHEMA_VERSION: u32 = 1;

/// Machine-readable error attached to a failed case or HTTP response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub load_ms: f64,
    pub classify_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub source_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assessment: Option<ClotAssessment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

/// Binary confusion counts against reference labels, POSITIVE = disease.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, predicted: Verdict, expected: Verdict) {
        match (predicted, expected) {
            (Verdict::Positive, Verdict::Positive) => self.tp += 1,
            (Verdict::Positive, Verdict::Negative) => self.fp += 1,
            (Verdict::Negative, Verdict::Negative) => self.tn += 1,
            (Verdict::Negative, Verdict::Positive) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn statistics(&self) -> Statistics {
        let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
        Statistics {
            counts: *self,
            accuracy: ratio(self.tp + self.tn, self.total()),
            sensitivity: ratio(self.tp, self.tp + self.fn_),
            specificity: ratio(self.tn, self.tn + self.fp),
            ppv: ratio(self.tp, self.tp + self.fp),
            npv: ratio(self.tn, self.tn + self.fn_),
        }
    }
}

/// Derived rates; `None` where the denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistics {
    pub counts: ConfusionCounts,
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub cases: Vec<CaseReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistics: Option<Statistics>,
    /// Cases that failed with an error.
    #[serde(default)]
    pub failed: usize,
}

impl Report {
    /// Builds a report; statistics appear only when every successful case
    /// carries an expected label.
    pub fn from_cases(cases: Vec<CaseReport>) -> Self {
        let failed = cases.iter().filter(|c| c.error.is_some()).count();
        let labeled: Vec<_> = cases
            .iter()
            .filter_map(|c| c.assessment.as_ref().map(|a| (a.verdict, c.expected)))
            .collect();
        let statistics =
            (!labeled.is_empty() && labeled.iter().all(|(_, e)| e.is_some())).then(|| {
                let mut counts = ConfusionCounts::default();
                for (predicted, expected) in labeled {
                    counts.record(predicted, expected.expect("checked"));
                }
                counts.statistics()
            });
        Self {
            schema_version: SCHEMA_VERSION,
            cases,
            statistics,
            failed,
        }
    }
}

/// Mask overlays returned alongside a service assessment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlays {
    pub clot: RleMask,
    pub lumen: RleMask,
    pub lumen_only: RleMask,
    pub clot_binary: RleMask,
}

impl Overlays {
    pub fn new(masks: &MaskTriple, clot_binary: &BinaryMask) -> Self {
        Self {
            clot: masks.clot.to_rle(),
            lumen: masks.lumen.to_rle(),
            lumen_only: masks.lumen_only.to_rle(),
            clot_binary: clot_binary.to_rle(),
        }
    }
}
