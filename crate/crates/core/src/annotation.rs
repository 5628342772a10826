use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Target size class attached to a point label. Recorded and carried
/// through the pipeline; the default pipeline does not condition on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetCategory {
    Point,
    Spot,
    #[serde(alias = "extend")]
    Extended,
}

/// One labeled pixel per target, origin top-left.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointAnnotation {
    #[serde(default)]
    pub image_id: String,
    pub x: usize,
    pub y: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<TargetCategory>,
}

impl PointAnnotation {
    pub fn new(image_id: impl Into<String>, x: usize, y: usize) -> Self {
        PointAnnotation {
            image_id: image_id.into(),
            x,
            y,
            category: None,
        }
    }

    pub fn with_category(mut self, category: TargetCategory) -> Self {
        self.category = Some(category);
        self
    }

    pub fn check_bounds(&self, width: usize, height: usize) -> Result<()> {
        if self.x >= width || self.y >= height {
            return Err(Error::OutOfBounds {
                x: self.x,
                y: self.y,
                width,
                height,
            });
        }
        Ok(())
    }

    pub fn index(&self, width: usize) -> usize {
        self.y * width + self.x
    }
}
