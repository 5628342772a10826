//! Monte Carlo regularized clustering: repeated clustering of
//! noise-perturbed copies of the image, accumulated into a target
//! probability map (TPM).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::PointAnnotation;
use crate::clustering::{extract_target_cluster, run_lca, ClusterCenter, ClusterParams};
use crate::error::{Error, Result};
use crate::imaging::{add_noise, GrayRaster, InfraredImage, NoiseSpec};
use crate::mask::{MaskMethod, PseudoMask};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MclcParams {
    pub cluster: ClusterParams,
    /// Run `k` (1-based) uses `noise.seed + k`.
    pub noise: NoiseSpec,
    pub max_runs: usize,
    /// Early stop once successive running means of the annotation cluster
    /// center differ by less than this (normalized units).
    pub outer_threshold: f64,
    pub check_interval: usize,
    pub binarize_threshold: f64,
    /// Cluster only the `(2r + 1)`-pixel square around the annotation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patch_radius: Option<usize>,
}

impl Default for MclcParams {
    fn default() -> Self {
        MclcParams {
            cluster: ClusterParams::default(),
            noise: NoiseSpec::salt(0.05, 0),
            max_runs: 100,
            outer_threshold: 0.1,
            check_interval: 10,
            binarize_threshold: 0.5,
            patch_radius: None,
        }
    }
}

impl MclcParams {
    pub fn validate(&self) -> Result<()> {
        self.cluster.validate()?;
        self.noise.validate()?;
        if self.max_runs == 0 {
            return Err(Error::InvalidParams("max_runs must be at least 1".into()));
        }
        if self.check_interval == 0 {
            return Err(Error::InvalidParams(
                "check_interval must be at least 1".into(),
            ));
        }
        if !(self.outer_threshold > 0.0) {
            return Err(Error::InvalidParams(
                "outer_threshold must be positive".into(),
            ));
        }
        check_tau(self.binarize_threshold)
    }

    /// Fixed number of runs with early stopping disabled.
    pub fn with_fixed_runs(mut self, runs: usize) -> Self {
        self.max_runs = runs;
        self.outer_threshold = f64::MIN_POSITIVE;
        self.check_interval = runs.max(1);
        self
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "binarize threshold {tau} not in (0, 1)"
        )))
    }
}

/// Per-pixel fraction of runs in which the pixel was clustered with the
/// annotation. Stored as integer counts so accumulation order never matters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetProbabilityMap {
    width: usize,
    height: usize,
    counts: Vec<u32>,
    runs: u32,
}

impl TargetProbabilityMap {
    pub fn new(width: usize, height: usize) -> Self {
        TargetProbabilityMap {
            width,
            height,
            counts: vec![0; width * height],
            runs: 0,
        }
    }

    pub fn from_counts(width: usize, height: usize, counts: Vec<u32>, runs: u32) -> Result<Self> {
        if counts.len() != width * height {
            return Err(Error::LengthMismatch(format!(
                "{} counts for a {width}x{height} map",
                counts.len()
            )));
        }
        if runs == 0 || counts.iter().any(|&c| c > runs) {
            return Err(Error::InvalidParams(
                "counts must lie in [0, runs] with runs >= 1".into(),
            ));
        }
        Ok(TargetProbabilityMap {
            width,
            height,
            counts,
            runs,
        })
    }

    pub fn from_mask(mask: &PseudoMask) -> Self {
        let counts = mask.data().iter().map(|&v| u32::from(v)).collect();
        TargetProbabilityMap {
            width: mask.width(),
            height: mask.height(),
            counts,
            runs: 1,
        }
    }

    pub fn add(&mut self, mask: &PseudoMask) -> Result<()> {
        if mask.width() != self.width || mask.height() != self.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                mask.width(),
                mask.height(),
            ));
        }
        for (c, &m) in self.counts.iter_mut().zip(mask.data()) {
            *c += u32::from(m);
        }
        self.runs += 1;
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn runs_accumulated(&self) -> u32 {
        self.runs
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn prob_at_index(&self, i: usize) -> f64 {
        if self.runs == 0 {
            0.0
        } else {
            f64::from(self.counts[i]) / f64::from(self.runs)
        }
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.prob_at_index(y * self.width + x)
    }

    pub fn probs(&self) -> Vec<f64> {
        (0..self.counts.len())
            .map(|i| self.prob_at_index(i))
            .collect()
    }
}

impl GrayRaster for TargetProbabilityMap {
    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn to_gray8(&self) -> Vec<u8> {
        (0..self.counts.len())
            .map(|i| (255.0 * self.prob_at_index(i)).round() as u8)
            .collect()
    }
}

/// Square clustering domain around an annotation, clamped to the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Domain {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl Domain {
    pub fn around(img: &InfraredImage, anno: &PointAnnotation, radius: Option<usize>) -> Domain {
        match radius {
            None => Domain {
                x0: 0,
                y0: 0,
                width: img.width(),
                height: img.height(),
            },
            Some(r) => {
                let x0 = anno.x.saturating_sub(r);
                let y0 = anno.y.saturating_sub(r);
                let x1 = (anno.x + r + 1).min(img.width());
                let y1 = (anno.y + r + 1).min(img.height());
                Domain {
                    x0,
                    y0,
                    width: x1 - x0,
                    height: y1 - y0,
                }
            }
        }
    }

    fn is_full(&self, img: &InfraredImage) -> bool {
        self.x0 == 0 && self.y0 == 0 && self.width == img.width() && self.height == img.height()
    }

    pub fn crop(&self, img: &InfraredImage) -> Result<InfraredImage> {
        if self.is_full(img) {
            Ok(img.clone())
        } else {
            img.crop(self.x0, self.y0, self.width, self.height)
        }
    }

    pub fn local(&self, anno: &PointAnnotation) -> PointAnnotation {
        PointAnnotation {
            x: anno.x - self.x0,
            y: anno.y - self.y0,
            ..anno.clone()
        }
    }

    /// Pastes a domain-sized mask into a zero mask of the full image.
    pub fn paste(&self, local: &PseudoMask, width: usize, height: usize) -> PseudoMask {
        if self.x0 == 0 && self.y0 == 0 && self.width == width && self.height == height {
            return local.clone();
        }
        let mut out = PseudoMask::empty(width, height);
        for y in 0..self.height {
            for x in 0..self.width {
                if local.get(x, y) {
                    out.set(x + self.x0, y + self.y0, true);
                }
            }
        }
        out.provenance = local.provenance.clone();
        out
    }
}

/// Outcome of one clustering run: the annotation's region and the center of
/// its cluster in image coordinates.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub mask: PseudoMask,
    pub center: ClusterCenter,
}

/// One clustering of `clip(img + noise)` around the annotation. `noise` of
/// `None` clusters the clean image.
pub fn cluster_once(
    img: &InfraredImage,
    anno: &PointAnnotation,
    cluster: &ClusterParams,
    noise: Option<&NoiseSpec>,
    patch_radius: Option<usize>,
) -> Result<RunOutcome> {
    anno.check_bounds(img.width(), img.height())?;
    let domain = Domain::around(img, anno, patch_radius);
    let local = domain.crop(img)?;
    let input = match noise {
        Some(spec) => add_noise(&local, spec)?,
        None => local,
    };
    let local_anno = domain.local(anno);
    let field = run_lca(&input, cluster)?;
    let mask = extract_target_cluster(&field, &local_anno)?;
    let c = field.centers[field.label_at(local_anno.x, local_anno.y) as usize];
    Ok(RunOutcome {
        mask: domain.paste(&mask, img.width(), img.height()),
        center: ClusterCenter::new(c.c, c.x + domain.x0 as f64, c.y + domain.y0 as f64),
    })
}

/// Plain clustering mask without noise.
pub fn lca_mask(
    img: &InfraredImage,
    anno: &PointAnnotation,
    params: &MclcParams,
) -> Result<PseudoMask> {
    Ok(cluster_once(img, anno, &params.cluster, None, params.patch_radius)?.mask)
}

pub fn run_mclc(
    img: &InfraredImage,
    anno: &PointAnnotation,
    params: &MclcParams,
) -> Result<TargetProbabilityMap> {
    Ok(run_mclc_with_snapshots(img, anno, params, &[])?.0)
}

/// Runs the Monte Carlo loop and additionally returns a copy of the TPM
/// after each run count listed in `snapshots` that is actually reached.
pub fn run_mclc_with_snapshots(
    img: &InfraredImage,
    anno: &PointAnnotation,
    params: &MclcParams,
    snapshots: &[usize],
) -> Result<(TargetProbabilityMap, Vec<TargetProbabilityMap>)> {
    params.validate()?;
    anno.check_bounds(img.width(), img.height())?;
    let domain = Domain::around(img, anno, params.patch_radius);
    params.cluster.validate_for(&domain.crop(img)?)?;
    let metric = params.cluster.metric(domain.width, domain.height);

    let mut tpm = TargetProbabilityMap::new(img.width(), img.height());
    let mut snaps = Vec::new();
    let mut center_sum = (0.0, 0.0, 0.0);
    let mut previous_mean: Option<ClusterCenter> = None;
    let mut done = 0usize;
    while done < params.max_runs {
        let batch_end = (done + params.check_interval).min(params.max_runs);
        let outcomes: Vec<RunOutcome> = (done + 1..=batch_end)
            .into_par_iter()
            .map(|k| {
                let noise = params
                    .noise
                    .with_seed(params.noise.seed.wrapping_add(k as u64));
                cluster_once(
                    img,
                    anno,
                    &params.cluster,
                    Some(&noise),
                    params.patch_radius,
                )
            })
            .collect::<Result<_>>()?;
        for outcome in outcomes {
            tpm.add(&outcome.mask)?;
            done += 1;
            center_sum.0 += outcome.center.c;
            center_sum.1 += outcome.center.x;
            center_sum.2 += outcome.center.y;
            if snapshots.contains(&done) {
                snaps.push(tpm.clone());
            }
        }
        let n = done as f64;
        let mean = ClusterCenter::new(center_sum.0 / n, center_sum.1 / n, center_sum.2 / n);
        if done % params.check_interval == 0 {
            if let Some(prev) = previous_mean {
                if mean.shift(&prev, &metric) < params.outer_threshold {
                    break;
                }
            }
            previous_mean = Some(mean);
        }
    }
    Ok((tpm, snaps))
}

/// Pixels with probability at least `tau`, restricted to the 8-connected
/// component of the annotation. When the annotation itself is below `tau`
/// the component of the highest-probability pixel within 5 px is used.
pub fn binarize(
    tpm: &TargetProbabilityMap,
    tau: f64,
    anno: &PointAnnotation,
) -> Result<PseudoMask> {
    check_tau(tau)?;
    anno.check_bounds(tpm.width, tpm.height)?;
    let above = PseudoMask::from_vec(
        tpm.width,
        tpm.height,
        (0..tpm.counts.len())
            .map(|i| tpm.prob_at_index(i) >= tau)
            .collect(),
    )?;
    if above.is_empty() {
        return Err(Error::EmptyMask(format!(
            "no pixel reaches threshold {tau}"
        )));
    }
    let (sx, sy) = if above.get(anno.x, anno.y) {
        (anno.x, anno.y)
    } else {
        fallback_seed(tpm, anno, 5)
    };
    if !above.get(sx, sy) {
        return Err(Error::EmptyMask(format!(
            "no pixel within 5 px of ({}, {}) reaches threshold {tau}",
            anno.x, anno.y
        )));
    }
    Ok(above
        .component_at(sx, sy)
        .with_provenance(MaskMethod::Mclc, None))
}

fn fallback_seed(
    tpm: &TargetProbabilityMap,
    anno: &PointAnnotation,
    radius: usize,
) -> (usize, usize) {
    let r2 = (radius * radius) as isize;
    let mut best = (anno.x, anno.y, tpm.prob(anno.x, anno.y));
    let (ax, ay) = (anno.x as isize, anno.y as isize);
    let r = radius as isize;
    for y in (ay - r).max(0)..=(ay + r).min(tpm.height as isize - 1) {
        for x in (ax - r).max(0)..=(ax + r).min(tpm.width as isize - 1) {
            let (dx, dy) = (x - ax, y - ay);
            if dx * dx + dy * dy > r2 {
                continue;
            }
            let p = tpm.prob(x as usize, y as usize);
            if p > best.2 {
                best = (x as usize, y as usize, p);
            }
        }
    }
    (best.0, best.1)
}
