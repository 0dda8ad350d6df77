use std::path::Path;

use clotseg::image_io::load_study_bytes;
use clotseg::{RoiPair, StudySlice, Verdict};
use serde::de::DeserializeOwned;

use crate::error::CliError;

pub fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn load_image(path: &Path) -> Result<StudySlice, CliError> {
    let bytes = read(path)?;
    load_study_bytes(path, &bytes)
        .map_err(|e| CliError::validation("invalid_image", format!("{}: {e}", path.display())))
}

/// Reads a bare ROI pair or a phantom sidecar (`{"roi", "expected", …}`).
pub fn load_roi(path: &Path) -> Result<(RoiPair, Option<Verdict>), CliError> {
    let bytes = read(path)?;
    let invalid = |e: serde_json::Error| {
        CliError::validation("invalid_roi_file", format!("{}: {e}", path.display()))
    };
    let mut value: serde_json::Value = serde_json::from_slice(&bytes).map_err(invalid)?;
    match value.get_mut("roi").map(serde_json::Value::take) {
        Some(roi) => {
            let expected = match value.get_mut("expected").map(serde_json::Value::take) {
                Some(v) if !v.is_null() => Some(serde_json::from_value(v).map_err(invalid)?),
                _ => None,
            };
            Ok((serde_json::from_value(roi).map_err(invalid)?, expected))
        }
        None => Ok((serde_json::from_value(value).map_err(invalid)?, None)),
    }
}

/// Inline JSON when the argument starts with `{`, otherwise a file path.
pub fn json_arg<T: DeserializeOwned + Default>(
    arg: Option<&str>,
    code: &str,
) -> Result<T, CliError> {
    let Some(arg) = arg else {
        return Ok(T::default());
    };
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        let path = Path::new(arg);
        String::from_utf8(read(path)?)
            .map_err(|e| CliError::validation(code, format!("{}: {e}", path.display())))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::validation(code, e.to_string()))
}
