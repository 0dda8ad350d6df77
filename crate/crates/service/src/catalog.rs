use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use clotseg::image_io::{load_study_bytes, source_id_for};
use clotseg::{
    build_filtered_set, FilterError, FilterParams, FilteredSet, ImageIoError, StudySlice,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot load {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: ImageIoError,
    },
    #[error("duplicate study id {0:?}")]
    DuplicateId(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudySummary {
    pub id: String,
    pub width: usize,
    pub height: usize,
}

struct Entry {
    slice: StudySlice,
    filtered: OnceLock<Result<FilteredSet, FilterError>>,
}

/// Read-only map from study id to slice, with a compute-once filtered set.
#[derive(Default)]
pub struct StudyCatalog {
    entries: BTreeMap<String, Entry>,
}

impl std::fmt::Debug for StudyCatalog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

fn is_study_file(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "dcm"))
}

impl StudyCatalog {
    /// Loads every `.pgm` and `.dcm` file in `dir` (not recursive), keyed by
    /// file stem.
    pub fn load_dir(dir: &Path) -> Result<Self, CatalogError> {
        let io_err = |source| CatalogError::Io {
            path: dir.to_path_buf(),
            source,
        };
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io_err)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(io_err)?;
        paths.retain(|p| is_study_file(p));
        paths.sort();
        let mut slices = Vec::with_capacity(paths.len());
        for path in paths {
            let bytes = std::fs::read(&path).map_err(|source| CatalogError::Io {
                path: path.clone(),
                source,
            })?;
            let slice = load_study_bytes(&path, &bytes).map_err(|source| CatalogError::Image {
                path: path.clone(),
                source,
            })?;
            debug_assert_eq!(slice.source_id, source_id_for(&path));
            slices.push(slice);
        }
        Self::from_slices(slices)
    }

    pub fn from_slices(slices: impl IntoIterator<Item = StudySlice>) -> Result<Self, CatalogError> {
        let mut entries = BTreeMap::new();
        for slice in slices {
            let id = slice.source_id.clone();
            let entry = Entry {
                slice,
                filtered: OnceLock::new(),
            };
            if entries.insert(id.clone(), entry).is_some() {
                return Err(CatalogError::DuplicateId(id));
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn get(&self, id: &str) -> Option<&StudySlice> {
        self.entries.get(id).map(|e| &e.slice)
    }

    pub fn summaries(&self) -> Vec<StudySummary> {
        self.entries
            .iter()
            .map(|(id, e)| StudySummary {
                id: id.clone(),
                width: e.slice.image.width(),
                height: e.slice.image.height(),
            })
            .collect()
    }

    /// The filtered set under default parameters, computed at most once.
    pub fn filtered(&self, id: &str) -> Option<Result<&FilteredSet, FilterError>> {
        let entry = self.entries.get(id)?;
        let cached = entry
            .filtered
            .get_or_init(|| build_filtered_set(&entry.slice.image, &FilterParams::default()));
        Some(cached.as_ref().map_err(Clone::clone))
    }
}
