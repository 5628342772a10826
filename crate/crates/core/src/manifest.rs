//! Dataset manifest: images with their point labels and optional
//! ground-truth masks, paths relative to the manifest's directory.
//!
//! ```json
//! {
//!   "entries": [
//!     {
//!       "image_path": "images/0001.png",
//!       "annotations": [{ "x": 120, "y": 64, "category": "spot" }],
//!       "gt_mask_path": "masks/0001.png"
//!     }
//!   ]
//! }
//! ```
//!
//! Coordinates are integer pixels, origin top-left, `x` to the right.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::annotation::{PointAnnotation, TargetCategory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestAnnotation {
    pub x: usize,
    pub y: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<TargetCategory>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub image_path: PathBuf,
    pub annotations: Vec<ManifestAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_mask_path: Option<PathBuf>,
}

impl ManifestEntry {
    /// File stem of the image, used to name outputs.
    pub fn id(&self) -> String {
        self.image_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }

    pub fn point_annotations(&self) -> Vec<PointAnnotation> {
        let id = self.id();
        self.annotations
            .iter()
            .map(|a| PointAnnotation {
                image_id: id.clone(),
                x: a.x,
                y: a.y,
                category: a.category,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    /// Directory the relative paths resolve against; not serialized.
    #[serde(skip)]
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn from_json(text: &str, root: impl Into<PathBuf>) -> Result<DatasetManifest> {
        let mut m: DatasetManifest =
            serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        m.root = root.into();
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Manifest(e.to_string()))
    }

    /// Parses the file; the root becomes its parent directory. Referenced
    /// files are checked separately by [`check_entry`](Self::check_entry).
    pub fn load(path: impl AsRef<Path>) -> Result<DatasetManifest> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        DatasetManifest::from_json(&text, root)
            .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn resolve(&self, rel: &Path) -> PathBuf {
        self.root.join(rel)
    }

    pub fn image_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.resolve(&entry.image_path)
    }

    pub fn gt_path(&self, entry: &ManifestEntry) -> Option<PathBuf> {
        entry.gt_mask_path.as_deref().map(|p| self.resolve(p))
    }

    /// Files exist and every label lies inside the image.
    pub fn check_entry(&self, entry: &ManifestEntry) -> Result<()> {
        let img = self.image_path(entry);
        let (w, h) = image::image_dimensions(&img).map_err(|e| Error::io(&img, e))?;
        for a in &entry.annotations {
            if a.x >= w as usize || a.y >= h as usize {
                return Err(Error::Manifest(format!(
                    "{}: label ({}, {}) outside the {w}x{h} image",
                    img.display(),
                    a.x,
                    a.y
                )));
            }
        }
        if let Some(gt) = self.gt_path(entry) {
            if !gt.is_file() {
                return Err(Error::io(&gt, "ground-truth mask not found"));
            }
        }
        Ok(())
    }

    /// All entry problems, in manifest order.
    pub fn check(&self) -> Vec<Error> {
        self.entries
            .iter()
            .filter_map(|e| self.check_entry(e).err())
            .collect()
    }

    pub fn n_targets(&self) -> usize {
        self.entries.iter().map(|e| e.annotations.len()).sum()
    }
}
