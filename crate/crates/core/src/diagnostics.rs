//! Colour-shift diagnostic: how much added noise moves the colour distance
//! between a target's edge pixels and the true centre versus the adjacent
//! background centres.
//!
//! The true centre is the ground-truth target region. The false centres are
//! the clean-run clusters touching the target's outer ring; on a noisy copy
//! each is replaced by the noisy-run cluster covering most of its
//! background part. Edge pixels are the target's 8-connected boundary.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::annotation::PointAnnotation;
use crate::clustering::run_lca;
use crate::error::{Error, Result};
use crate::imaging::{add_noise, InfraredImage};
use crate::mask::PseudoMask;
use crate::monte_carlo::{Domain, MclcParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub noise_intensity: f64,
    pub delta_dc_true: f64,
    pub delta_dc_false_min: f64,
    pub delta_dc_false_max: f64,
    /// Edge pixels times trials.
    pub samples: usize,
}

fn mean_over(values: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| values[i]).sum::<f64>() / idx.len() as f64
}

/// `|mean(edge) - mean(region)|` on `values`.
fn color_distance(values: &[f64], edge: &[usize], region: &[usize]) -> f64 {
    (mean_over(values, edge) - mean_over(values, region)).abs()
}

/// Most frequent label over `idx`, ties to the lowest label.
fn dominant_label(labels: &[u32], idx: &[usize]) -> u32 {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &i in idx {
        *counts.entry(labels[i]).or_default() += 1;
    }
    let mut best = (0u32, 0usize);
    for (l, c) in counts {
        if c > best.1 {
            best = (l, c);
        }
    }
    best.0
}

/// Runs `trials` noisy copies per intensity, with seeds `noise.seed + t` for
/// `t = 1..=trials`, using the noise kind of `params.noise`.
pub fn measure_color_shift(
    img: &InfraredImage,
    anno: &PointAnnotation,
    gt: &PseudoMask,
    params: &MclcParams,
    intensities: &[f64],
    trials: usize,
) -> Result<Vec<DiagnosticsRecord>> {
    params.validate()?;
    anno.check_bounds(img.width(), img.height())?;
    if gt.width() != img.width() || gt.height() != img.height() {
        return Err(Error::DimensionMismatch(
            img.width(),
            img.height(),
            gt.width(),
            gt.height(),
        ));
    }
    if !gt.get(anno.x, anno.y) {
        return Err(Error::MissingGroundTruth(format!(
            "no ground-truth target at ({}, {})",
            anno.x, anno.y
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }

    let domain = Domain::around(img, anno, params.patch_radius);
    let local = domain.crop(img)?;
    let la = domain.local(anno);
    let local_gt = PseudoMask::from_fn(domain.width, domain.height, |x, y| {
        gt.get(x + domain.x0, y + domain.y0)
    });
    let target = local_gt.component_at(la.x, la.y);
    let region: Vec<usize> = (0..target.data().len())
        .filter(|&i| target.data()[i])
        .collect();
    let field = run_lca(&local, &params.cluster)?;
    let edge = target.boundary();
    let mut false_sets: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for i in target.outer_ring() {
        false_sets.entry(field.labels[i]).or_default();
    }
    for (i, &l) in field.labels.iter().enumerate() {
        if !target.data()[i] {
            if let Some(set) = false_sets.get_mut(&l) {
                set.push(i);
            }
        }
    }
    false_sets.retain(|_, s| !s.is_empty());
    if false_sets.is_empty() {
        return Err(Error::EmptyMask(
            "target has no background neighbours".into(),
        ));
    }

    let clean = local.data();
    let d_true = color_distance(clean, &edge, &region);
    let d_false: Vec<f64> = false_sets
        .keys()
        .map(|&l| (mean_over(clean, &edge) - field.centers[l as usize].c).abs())
        .collect();

    let mut out = Vec::with_capacity(intensities.len());
    for &p in intensities {
        let mut sum_true = 0.0;
        let mut sum_false = vec![0.0; d_false.len()];
        for t in 1..=trials {
            let mut spec = params
                .noise
                .with_seed(params.noise.seed.wrapping_add(t as u64));
            spec.intensity = p;
            let noisy = add_noise(&local, &spec)?;
            let v = noisy.data();
            let edge_mean = mean_over(v, &edge);
            sum_true += color_distance(v, &edge, &region) - d_true;
            let noisy_field = if p == 0.0 {
                field.clone()
            } else {
                run_lca(&noisy, &params.cluster)?
            };
            for (k, set) in false_sets.values().enumerate() {
                let c = noisy_field.centers[dominant_label(&noisy_field.labels, set) as usize].c;
                sum_false[k] += (edge_mean - c).abs() - d_false[k];
            }
        }
        let n = trials as f64;
        let means: Vec<f64> = sum_false.iter().map(|s| s / n).collect();
        out.push(DiagnosticsRecord {
            noise_intensity: p,
            delta_dc_true: sum_true / n,
            delta_dc_false_min: means.iter().copied().fold(f64::INFINITY, f64::min),
            delta_dc_false_max: means.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            samples: edge.len() * trials,
        });
    }
    Ok(out)
}

pub fn write_diagnostics_csv(records: &[DiagnosticsRecord], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "intensity",
        "delta_true",
        "delta_false_min",
        "delta_false_max",
        "samples",
    ])
    .map_err(|e| Error::io("<csv>", e))?;
    for r in records {
        w.write_record([
            r.noise_intensity.to_string(),
            r.delta_dc_true.to_string(),
            r.delta_dc_false_min.to_string(),
            r.delta_dc_false_max.to_string(),
            r.samples.to_string(),
        ])
        .map_err(|e| Error::io("<csv>", e))?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}
