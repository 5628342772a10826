//! Grid-seeded linear clustering over joint intensity/position features.
//!
//! Two assignment backends share initialization, update and convergence:
//! `SlicLike` restricts each pixel to centers within a `2S x 2S` window
//! (falling back to all centers when none is in range), `KMeans` always
//! searches every center.

use serde::{Deserialize, Serialize};

use crate::annotation::PointAnnotation;
use crate::error::{Error, Result};
use crate::imaging::InfraredImage;
use crate::mask::{flood_fill, MaskMethod, PseudoMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    SlicLike,
    #[serde(alias = "k_means")]
    KMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterParams {
    pub n_clusters: usize,
    /// Intensity normalization.
    pub mu_c: f64,
    /// Spatial normalization; `None` uses the grid interval `S`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_s: Option<f64>,
    /// Stop once the largest normalized center movement drops below this.
    pub conv_threshold: f64,
    pub max_iters: usize,
    pub backend: Backend,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            n_clusters: 9,
            mu_c: 45.0,
            mu_s: None,
            conv_threshold: 0.5,
            max_iters: 10,
            backend: Backend::SlicLike,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_clusters == 0 {
            return Err(Error::InvalidParams("n_clusters must be at least 1".into()));
        }
        if !(self.mu_c > 0.0 && self.mu_c.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "mu_c must be positive, got {}",
                self.mu_c
            )));
        }
        if let Some(mu_s) = self.mu_s {
            if !(mu_s > 0.0 && mu_s.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "mu_s must be positive, got {mu_s}"
                )));
            }
        }
        if !(self.conv_threshold > 0.0) {
            return Err(Error::InvalidParams(format!(
                "conv_threshold must be positive, got {}",
                self.conv_threshold
            )));
        }
        Ok(())
    }

    pub fn validate_for(&self, img: &InfraredImage) -> Result<()> {
        self.validate()?;
        if self.n_clusters > img.len() {
            return Err(Error::InvalidParams(format!(
                "{} clusters exceed the {} pixels of a {}x{} image",
                self.n_clusters,
                img.len(),
                img.width(),
                img.height()
            )));
        }
        Ok(())
    }

    /// Resolved normalization for an image of the given size.
    pub fn metric(&self, width: usize, height: usize) -> Metric {
        Metric {
            mu_c: self.mu_c,
            mu_s: self
                .mu_s
                .unwrap_or_else(|| grid_interval(width, height, self.n_clusters)),
        }
    }
}

/// Normalization coefficients of the joint distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric {
    pub mu_c: f64,
    pub mu_s: f64,
}

impl Metric {
    #[inline]
    fn squared(&self, center: &ClusterCenter, c: f64, x: f64, y: f64) -> f64 {
        let dc = c - center.c;
        let (dx, dy) = (x - center.x, y - center.y);
        dc * dc / (self.mu_c * self.mu_c) + (dx * dx + dy * dy) / (self.mu_s * self.mu_s)
    }
}

/// Cluster center `[c, s]`: mean intensity and sub-pixel position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterCenter {
    pub c: f64,
    pub x: f64,
    pub y: f64,
}

impl ClusterCenter {
    pub fn new(c: f64, x: f64, y: f64) -> Self {
        ClusterCenter { c, x, y }
    }

    /// Normalized L2 distance between two centers.
    pub fn shift(&self, other: &ClusterCenter, metric: &Metric) -> f64 {
        metric.squared(self, other.c, other.x, other.y).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterField {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    pub centers: Vec<ClusterCenter>,
    pub iterations_run: usize,
    pub converged: bool,
}

impl ClusterField {
    pub fn label_at(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }
}

/// One assignment/update state of the iteration, recorded by [`run_lca_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct LcaStep {
    pub centers: Vec<ClusterCenter>,
    pub labels: Vec<u32>,
}

/// Grid interval `S = sqrt(W H / N)`.
pub fn grid_interval(width: usize, height: usize, n: usize) -> f64 {
    ((width * height) as f64 / n as f64).sqrt()
}

/// Real-valued cell centroids of an `N`-cell grid in pixel-center
/// coordinates. Rows are `round(H / S)`; the `N` cells are spread across
/// rows as evenly as possible, so square counts on square images give the
/// regular `sqrt(N) x sqrt(N)` layout.
pub fn grid_centroids(width: usize, height: usize, n: usize) -> Vec<(f64, f64)> {
    let s = grid_interval(width, height, n);
    let rows = ((height as f64 / s).round() as usize).clamp(1, n.min(height));
    let (base, extra) = (n / rows, n % rows);
    let row_h = height as f64 / rows as f64;
    let mut out = Vec::with_capacity(n);
    for r in 0..rows {
        let cols = base + usize::from(r < extra);
        let col_w = width as f64 / cols as f64;
        let cy = (r as f64 + 0.5) * row_h - 0.5;
        for c in 0..cols {
            out.push(((c as f64 + 0.5) * col_w - 0.5, cy));
        }
    }
    out
}

/// Sum of absolute central differences with replicated borders.
pub fn gradient_at(img: &InfraredImage, x: usize, y: usize) -> f64 {
    let (w, h) = (img.width(), img.height());
    let (xl, xr) = (x.saturating_sub(1), (x + 1).min(w - 1));
    let (yu, yd) = (y.saturating_sub(1), (y + 1).min(h - 1));
    (img.get(xr, y) - img.get(xl, y)).abs() + (img.get(x, yd) - img.get(x, yu)).abs()
}

#[inline]
fn pixel_of(v: f64, len: usize) -> usize {
    (v.round().max(0.0) as usize).min(len - 1)
}

/// Grid seeding followed by a move to the lowest-gradient pixel of the 3x3
/// neighbourhood. A center only leaves its real-valued centroid when some
/// neighbour has a strictly lower gradient than the centroid pixel.
pub fn init_centers(img: &InfraredImage, params: &ClusterParams) -> Result<Vec<ClusterCenter>> {
    params.validate_for(img)?;
    let (w, h) = (img.width(), img.height());
    Ok(grid_centroids(w, h, params.n_clusters)
        .into_iter()
        .map(|(cx, cy)| {
            let (bx, by) = (pixel_of(cx, w), pixel_of(cy, h));
            let base = gradient_at(img, bx, by);
            let mut best: Option<(f64, usize, usize)> = None;
            for ny in by.saturating_sub(1)..=(by + 1).min(h - 1) {
                for nx in bx.saturating_sub(1)..=(bx + 1).min(w - 1) {
                    let g = gradient_at(img, nx, ny);
                    if best.is_none_or(|(bg, _, _)| g < bg) {
                        best = Some((g, nx, ny));
                    }
                }
            }
            match best {
                Some((g, nx, ny)) if g < base => {
                    ClusterCenter::new(img.get(nx, ny), nx as f64, ny as f64)
                }
                _ => ClusterCenter::new(img.get(bx, by), cx, cy),
            }
        })
        .collect())
}

/// Joint distance `sqrt((c_i - c_n)^2 / mu_c^2 + |s_i - s_n|^2 / mu_s^2)`.
pub fn distance(center: &ClusterCenter, pixel: (f64, f64, f64), metric: &Metric) -> f64 {
    let (c, x, y) = pixel;
    metric.squared(center, c, x, y).sqrt()
}

/// Nearest-center labels; ties go to the lowest center index.
pub fn assign(img: &InfraredImage, centers: &[ClusterCenter], params: &ClusterParams) -> Vec<u32> {
    let (w, h) = (img.width(), img.height());
    let metric = params.metric(w, h);
    match params.backend {
        Backend::KMeans => assign_global(img, centers, &metric),
        Backend::SlicLike => assign_windowed(
            img,
            centers,
            &metric,
            grid_interval(w, h, params.n_clusters),
        ),
    }
}

fn nearest(centers: &[ClusterCenter], metric: &Metric, c: f64, x: f64, y: f64) -> u32 {
    let mut best = (f64::INFINITY, 0u32);
    for (k, center) in centers.iter().enumerate() {
        let d = metric.squared(center, c, x, y);
        if d < best.0 {
            best = (d, k as u32);
        }
    }
    best.1
}

fn assign_global(img: &InfraredImage, centers: &[ClusterCenter], metric: &Metric) -> Vec<u32> {
    let w = img.width();
    img.data()
        .iter()
        .enumerate()
        .map(|(i, &c)| nearest(centers, metric, c, (i % w) as f64, (i / w) as f64))
        .collect()
}

fn assign_windowed(
    img: &InfraredImage,
    centers: &[ClusterCenter],
    metric: &Metric,
    s: f64,
) -> Vec<u32> {
    let (w, h) = (img.width(), img.height());
    let data = img.data();
    let mut best = vec![f64::INFINITY; w * h];
    let mut labels = vec![u32::MAX; w * h];
    // Visiting centers in index order with a strict comparison keeps the
    // lowest index on ties.
    for (k, center) in centers.iter().enumerate() {
        let x_lo = (center.x - s).ceil().max(0.0) as usize;
        let y_lo = (center.y - s).ceil().max(0.0) as usize;
        let x_hi = (center.x + s).floor();
        let y_hi = (center.y + s).floor();
        if x_hi < 0.0 || y_hi < 0.0 {
            continue;
        }
        let x_hi = (x_hi as usize).min(w - 1);
        let y_hi = (y_hi as usize).min(h - 1);
        for y in y_lo..=y_hi {
            let row = y * w;
            for x in x_lo..=x_hi {
                let i = row + x;
                let d = metric.squared(center, data[i], x as f64, y as f64);
                if d < best[i] {
                    best[i] = d;
                    labels[i] = k as u32;
                }
            }
        }
    }
    for (i, label) in labels.iter_mut().enumerate() {
        if *label == u32::MAX {
            *label = nearest(centers, metric, data[i], (i % w) as f64, (i / w) as f64);
        }
    }
    labels
}

/// Mean `[c, x, y]` of each cluster's members; empty clusters keep their
/// previous center.
pub fn update_centers(
    img: &InfraredImage,
    labels: &[u32],
    previous: &[ClusterCenter],
) -> Vec<ClusterCenter> {
    let w = img.width();
    let mut sums = vec![(0usize, 0.0f64, 0.0f64, 0.0f64); previous.len()];
    for (i, (&label, &c)) in labels.iter().zip(img.data()).enumerate() {
        let s = &mut sums[label as usize];
        s.0 += 1;
        s.1 += c;
        s.2 += (i % w) as f64;
        s.3 += (i / w) as f64;
    }
    sums.iter()
        .zip(previous)
        .map(|(&(n, c, x, y), prev)| {
            if n == 0 {
                *prev
            } else {
                let n = n as f64;
                ClusterCenter::new(c / n, x / n, y / n)
            }
        })
        .collect()
}

/// Iterates assignment and update until the largest normalized center
/// movement falls below `conv_threshold` or `max_iters` updates have run.
pub fn run_lca(img: &InfraredImage, params: &ClusterParams) -> Result<ClusterField> {
    let centers = init_centers(img, params)?;
    Ok(iterate(img, params, centers, |_| {}))
}

/// [`run_lca`] starting from caller-supplied centers.
pub fn run_lca_from(
    img: &InfraredImage,
    params: &ClusterParams,
    centers: Vec<ClusterCenter>,
) -> Result<ClusterField> {
    params.validate()?;
    if centers.is_empty() {
        return Err(Error::InvalidParams("no initial centers".into()));
    }
    Ok(iterate(img, params, centers, |_| {}))
}

/// [`run_lca`] that also returns every intermediate state: the initial
/// assignment first, then one entry per update.
pub fn run_lca_traced(
    img: &InfraredImage,
    params: &ClusterParams,
) -> Result<(ClusterField, Vec<LcaStep>)> {
    let centers = init_centers(img, params)?;
    let mut trace = Vec::new();
    let field = iterate(img, params, centers, |step| trace.push(step));
    Ok((field, trace))
}

fn iterate(
    img: &InfraredImage,
    params: &ClusterParams,
    mut centers: Vec<ClusterCenter>,
    mut observe: impl FnMut(LcaStep),
) -> ClusterField {
    let metric = params.metric(img.width(), img.height());
    let mut labels = assign(img, &centers, params);
    observe(LcaStep {
        centers: centers.clone(),
        labels: labels.clone(),
    });
    let mut iterations_run = 0;
    let mut converged = false;
    while iterations_run < params.max_iters {
        let updated = update_centers(img, &labels, &centers);
        let movement = updated
            .iter()
            .zip(&centers)
            .map(|(a, b)| a.shift(b, &metric))
            .fold(0.0, f64::max);
        centers = updated;
        labels = assign(img, &centers, params);
        iterations_run += 1;
        observe(LcaStep {
            centers: centers.clone(),
            labels: labels.clone(),
        });
        if movement < params.conv_threshold {
            converged = true;
            break;
        }
    }
    ClusterField {
        width: img.width(),
        height: img.height(),
        labels,
        centers,
        iterations_run,
        converged,
    }
}

/// The 8-connected region of the annotation pixel's cluster.
pub fn extract_target_cluster(field: &ClusterField, anno: &PointAnnotation) -> Result<PseudoMask> {
    anno.check_bounds(field.width, field.height)?;
    let target = field.label_at(anno.x, anno.y);
    let data = flood_fill(field.width, field.height, anno.index(field.width), |i| {
        field.labels[i] == target
    });
    Ok(PseudoMask::from_vec(field.width, field.height, data)?
        .with_provenance(MaskMethod::Lca, None))
}
