//! Binary rasters and 8-connected component utilities shared by the
//! clustering, refinement and evaluation code.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMethod {
    Lca,
    Mclc,
    Crf,
    GroundTruth,
    Loaded,
    Merged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: MaskMethod,
    pub seed: Option<u64>,
}

/// Binary per-pixel foreground mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
    pub provenance: Option<Provenance>,
}

impl PseudoMask {
    pub fn empty(width: usize, height: usize) -> Self {
        PseudoMask {
            width,
            height,
            data: vec![false; width * height],
            provenance: None,
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::LengthMismatch(format!(
                "mask data has {} entries, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(PseudoMask {
            width,
            height,
            data,
            provenance: None,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        PseudoMask {
            width,
            height,
            data,
            provenance: None,
        }
    }

    pub fn with_provenance(mut self, method: MaskMethod, seed: Option<u64>) -> Self {
        self.provenance = Some(Provenance { method, seed });
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&v| v)
    }

    pub fn same_dims(&self, other: &PseudoMask) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    /// Pixel-wise OR, used to merge per-target masks of one image.
    pub fn union_with(&mut self, other: &PseudoMask) -> Result<()> {
        self.same_dims(other)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a |= b;
        }
        Ok(())
    }

    /// Component of foreground pixels 8-connected to `(x, y)`; empty if the
    /// seed itself is background.
    pub fn component_at(&self, x: usize, y: usize) -> PseudoMask {
        let data = flood_fill(self.width, self.height, x + y * self.width, |i| {
            self.data[i]
        });
        PseudoMask {
            width: self.width,
            height: self.height,
            data,
            provenance: self.provenance.clone(),
        }
    }

    pub fn components(&self) -> Vec<Component> {
        components(self.width, self.height, &self.data)
    }

    /// Foreground pixels with at least one 8-neighbour outside the mask or
    /// outside the image.
    pub fn boundary(&self) -> Vec<usize> {
        let (w, h) = (self.width as isize, self.height as isize);
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let i = (y * w + x) as usize;
                if !self.data[i] {
                    continue;
                }
                let edge = NEIGHBOURS_8.iter().any(|&(dx, dy)| {
                    let (nx, ny) = (x + dx, y + dy);
                    nx < 0 || ny < 0 || nx >= w || ny >= h || !self.data[(ny * w + nx) as usize]
                });
                if edge {
                    out.push(i);
                }
            }
        }
        out
    }

    /// Background pixels 8-adjacent to the mask.
    pub fn outer_ring(&self) -> Vec<usize> {
        let (w, h) = (self.width as isize, self.height as isize);
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let i = (y * w + x) as usize;
                if self.data[i] {
                    continue;
                }
                let touches = NEIGHBOURS_8.iter().any(|&(dx, dy)| {
                    let (nx, ny) = (x + dx, y + dy);
                    nx >= 0 && ny >= 0 && nx < w && ny < h && self.data[(ny * w + nx) as usize]
                });
                if touches {
                    out.push(i);
                }
            }
        }
        out
    }
}

pub(crate) const NEIGHBOURS_8: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Breadth-first 8-connected fill from `seed` over pixels where `inside`
/// holds. Returns an all-false raster when the seed is outside.
pub fn flood_fill(
    width: usize,
    height: usize,
    seed: usize,
    inside: impl Fn(usize) -> bool,
) -> Vec<bool> {
    let mut filled = vec![false; width * height];
    if !inside(seed) {
        return filled;
    }
    let mut queue = VecDeque::new();
    filled[seed] = true;
    queue.push_back(seed);
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % width) as isize, (i / width) as isize);
        for &(dx, dy) in &NEIGHBOURS_8 {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                continue;
            }
            let j = ny as usize * width + nx as usize;
            if !filled[j] && inside(j) {
                filled[j] = true;
                queue.push_back(j);
            }
        }
    }
    filled
}

/// One 8-connected foreground component.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub pixels: Vec<usize>,
    pub centroid: (f64, f64),
}

impl Component {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }
}

/// Components in raster order of their first pixel.
pub fn components(width: usize, height: usize, data: &[bool]) -> Vec<Component> {
    let mut seen = vec![false; data.len()];
    let mut out = Vec::new();
    for start in 0..data.len() {
        if !data[start] || seen[start] {
            continue;
        }
        let mut pixels = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            pixels.push(i);
            let (x, y) = ((i % width) as isize, (i / width) as isize);
            for &(dx, dy) in &NEIGHBOURS_8 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                    continue;
                }
                let j = ny as usize * width + nx as usize;
                if data[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        pixels.sort_unstable();
        let n = pixels.len() as f64;
        let (sx, sy) = pixels.iter().fold((0.0, 0.0), |(sx, sy), &i| {
            (sx + (i % width) as f64, sy + (i / width) as f64)
        });
        out.push(Component {
            pixels,
            centroid: (sx / n, sy / n),
        });
    }
    out
}
