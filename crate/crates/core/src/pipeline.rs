//! End-to-end recovery, evaluation and parameter sweeps over a set of
//! labeled images, in memory. The `cli` module adds file handling on top.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::PointAnnotation;
use crate::error::{Error, Result};
use crate::imaging::{InfraredImage, NoiseKind};
use crate::mask::{MaskMethod, PseudoMask};
use crate::metrics::{compute_iou, evaluate_dataset, EvalReport};
use crate::monte_carlo::{binarize, run_mclc, MclcParams, TargetProbabilityMap};
use crate::refine::{refine_tpm, CrfParams};
use crate::synth::{perturb_annotation, GeneratedScene};

/// One image with its labels and, when available, ground truth.
#[derive(Debug, Clone)]
pub struct LabeledImage {
    pub id: String,
    pub image: InfraredImage,
    pub annotations: Vec<PointAnnotation>,
    pub gt: Option<PseudoMask>,
}

impl From<&GeneratedScene> for LabeledImage {
    fn from(s: &GeneratedScene) -> Self {
        LabeledImage {
            id: s.id.clone(),
            image: s.image.clone(),
            annotations: s.annotations.clone(),
            gt: Some(s.gt_mask.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TargetResult {
    pub annotation: PointAnnotation,
    pub tpm: TargetProbabilityMap,
    /// Empty when nothing survived binarization or refinement.
    pub mask: PseudoMask,
    /// Why the mask is empty, if it is.
    pub note: Option<String>,
    pub wall_time_s: f64,
}

/// MCLC, then CRF refinement or thresholding at the configured `tau`.
/// An empty result is not an error: the mask is returned empty with a note.
pub fn recover_target(
    img: &InfraredImage,
    anno: &PointAnnotation,
    params: &MclcParams,
    crf: Option<&CrfParams>,
) -> Result<TargetResult> {
    let start = Instant::now();
    let tpm = run_mclc(img, anno, params)?;
    let mask = match crf {
        Some(c) => refine_tpm(img, &tpm, anno, c),
        None => binarize(&tpm, params.binarize_threshold, anno),
    };
    let (mask, note) = match mask {
        Ok(m) => (m, None),
        Err(e @ (Error::EmptyMask(_) | Error::DegenerateUnary)) => {
            log::warn!("{} ({}, {}): {e}", anno.image_id, anno.x, anno.y);
            let method = if crf.is_some() {
                MaskMethod::Crf
            } else {
                MaskMethod::Mclc
            };
            (
                PseudoMask::empty(img.width(), img.height()).with_provenance(method, None),
                Some(e.to_string()),
            )
        }
        Err(e) => return Err(e),
    };
    Ok(TargetResult {
        annotation: anno.clone(),
        tpm,
        mask,
        note,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone)]
pub struct ImageResult {
    pub id: String,
    pub targets: Vec<TargetResult>,
    /// Pixel-wise OR of the target masks.
    pub merged: PseudoMask,
}

/// Recovers every target of every image. Targets run concurrently; the
/// output order follows the input order.
pub fn recover_all(
    images: &[LabeledImage],
    params_for: impl Fn(&PointAnnotation) -> MclcParams + Sync,
    crf: Option<&CrfParams>,
) -> Result<Vec<ImageResult>> {
    let jobs: Vec<(usize, &PointAnnotation)> = images
        .iter()
        .enumerate()
        .flat_map(|(i, im)| im.annotations.iter().map(move |a| (i, a)))
        .collect();
    let results: Vec<(usize, TargetResult)> = jobs
        .par_iter()
        .map(|&(i, a)| recover_target(&images[i].image, a, &params_for(a), crf).map(|r| (i, r)))
        .collect::<Result<_>>()?;
    let mut out: Vec<ImageResult> = images
        .iter()
        .map(|im| ImageResult {
            id: im.id.clone(),
            targets: Vec::new(),
            merged: PseudoMask::empty(im.image.width(), im.image.height())
                .with_provenance(MaskMethod::Merged, None),
        })
        .collect();
    for (i, r) in results {
        out[i].merged.union_with(&r.mask)?;
        out[i].targets.push(r);
    }
    Ok(out)
}

/// Dataset report plus the mean of per-image IoU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub report: EvalReport,
    pub mean_image_iou: f64,
    pub per_image_iou: Vec<(String, f64)>,
}

pub fn evaluate(
    ids: &[String],
    preds: &[PseudoMask],
    gts: &[PseudoMask],
    match_radius: f64,
) -> Result<EvalSummary> {
    let report = evaluate_dataset(preds, gts, match_radius)?;
    let per_image_iou: Vec<(String, f64)> = ids
        .iter()
        .zip(preds.iter().zip(gts))
        .map(|(id, (p, g))| compute_iou(p, g).map(|v| (id.clone(), v)))
        .collect::<Result<_>>()?;
    let mean_image_iou =
        per_image_iou.iter().map(|x| x.1).sum::<f64>() / per_image_iou.len() as f64;
    Ok(EvalSummary {
        report,
        mean_image_iou,
        per_image_iou,
    })
}

/// Recover and evaluate against the images' ground truth.
pub fn recover_and_evaluate(
    images: &[LabeledImage],
    params_for: impl Fn(&PointAnnotation) -> MclcParams + Sync,
    crf: Option<&CrfParams>,
    match_radius: f64,
) -> Result<EvalSummary> {
    let results = recover_all(images, params_for, crf)?;
    let gts: Vec<PseudoMask> = images
        .iter()
        .map(|im| {
            im.gt
                .clone()
                .ok_or_else(|| Error::MissingGroundTruth(im.id.clone()))
        })
        .collect::<Result<_>>()?;
    let ids: Vec<String> = results.iter().map(|r| r.id.clone()).collect();
    let preds: Vec<PseudoMask> = results.into_iter().map(|r| r.merged).collect();
    evaluate(&ids, &preds, &gts, match_radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    NoiseType,
    NoiseIntensity,
    ClusterCount,
    LabelDeviation,
    BinarizeThreshold,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "noise-type" => SweepAxis::NoiseType,
            "noise-intensity" => SweepAxis::NoiseIntensity,
            "cluster-count" => SweepAxis::ClusterCount,
            "label-deviation" => SweepAxis::LabelDeviation,
            "binarize-threshold" => SweepAxis::BinarizeThreshold,
            other => {
                return Err(Error::InvalidParams(format!(
                    "unknown sweep axis `{other}`"
                )))
            }
        })
    }
}

/// Annotation perturbation seeds averaged over on the label-deviation axis.
pub const DEVIATION_SEEDS: [u64; 3] = [1, 2, 3];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: String,
    pub iou: f64,
    pub pd: f64,
    pub fa: f64,
}

/// One row per value. Noise-type values are kind names; all other axes
/// take numbers. Label-deviation rows average [`DEVIATION_SEEDS`].
pub fn sweep(
    images: &[LabeledImage],
    base: &MclcParams,
    crf: Option<&CrfParams>,
    match_radius: f64,
    axis: SweepAxis,
    values: &[String],
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::InvalidParams(
            "sweep needs at least one value".into(),
        ));
    }
    let mut rows = Vec::with_capacity(values.len());
    for v in values {
        let mut p = base.clone();
        let num = || {
            v.parse::<f64>()
                .map_err(|_| Error::InvalidParams(format!("sweep value `{v}` is not a number")))
        };
        let summary = match axis {
            SweepAxis::NoiseType => {
                p.noise.kind = v.parse::<NoiseKind>()?;
                run_one(images, &p, crf, match_radius)?
            }
            SweepAxis::NoiseIntensity => {
                p.noise.intensity = num()?;
                run_one(images, &p, crf, match_radius)?
            }
            SweepAxis::ClusterCount => {
                let n = num()?;
                if n < 1.0 || n.fract() != 0.0 {
                    return Err(Error::InvalidParams(format!(
                        "cluster count `{v}` is not a positive integer"
                    )));
                }
                p.cluster.n_clusters = n as usize;
                run_one(images, &p, crf, match_radius)?
            }
            SweepAxis::BinarizeThreshold => {
                p.binarize_threshold = num()?;
                run_one(images, &p, crf, match_radius)?
            }
            SweepAxis::LabelDeviation => {
                let sigma = num()?;
                if !(sigma >= 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "deviation `{v}` must be non-negative"
                    )));
                }
                let mut acc = (0.0, 0.0, 0.0);
                for seed in DEVIATION_SEEDS {
                    let moved = perturbed(images, sigma, seed);
                    let s = run_one(&moved, &p, crf, match_radius)?;
                    acc.0 += s.0;
                    acc.1 += s.1;
                    acc.2 += s.2;
                }
                let n = DEVIATION_SEEDS.len() as f64;
                (acc.0 / n, acc.1 / n, acc.2 / n)
            }
        };
        log::info!("sweep {axis:?} = {v}: iou {:.4}", summary.0);
        rows.push(SweepRow {
            value: v.clone(),
            iou: summary.0,
            pd: summary.1,
            fa: summary.2,
        });
    }
    Ok(rows)
}

/// Mean per-image IoU, Pd, Fa.
fn run_one(
    images: &[LabeledImage],
    p: &MclcParams,
    crf: Option<&CrfParams>,
    match_radius: f64,
) -> Result<(f64, f64, f64)> {
    let s = recover_and_evaluate(images, |_| p.clone(), crf, match_radius)?;
    Ok((s.mean_image_iou, s.report.pd, s.report.fa))
}

/// Copies of `images` with every annotation perturbed; seeds differ per
/// target so that targets do not move in lockstep.
pub fn perturbed(images: &[LabeledImage], sigma: f64, seed: u64) -> Vec<LabeledImage> {
    let mut k = 0u64;
    images
        .iter()
        .map(|im| {
            let mut im = im.clone();
            for a in im.annotations.iter_mut() {
                let s = seed.wrapping_mul(1_000_003).wrapping_add(k);
                *a = perturb_annotation(a, sigma, s, im.image.width(), im.image.height());
                k += 1;
            }
            im
        })
        .collect()
}

pub fn write_sweep_csv(rows: &[SweepRow], out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::io("<csv>", e))?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}
