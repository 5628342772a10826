//! Pixel-level IoU and target-level detection probability / false alarms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::PseudoMask;

pub const DEFAULT_MATCH_RADIUS: f64 = 3.0;

/// Raw integer tallies; every metric is a ratio of these, so per-image
/// counts reduce by plain sums.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub intersection: u64,
    pub union: u64,
    pub n_targets_gt: u64,
    pub n_targets_detected: u64,
    pub n_false_components: u64,
    pub false_alarm_pixels: u64,
    pub total_pixels: u64,
}

impl std::ops::Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts {
            intersection: self.intersection + o.intersection,
            union: self.union + o.union,
            n_targets_gt: self.n_targets_gt + o.n_targets_gt,
            n_targets_detected: self.n_targets_detected + o.n_targets_detected,
            n_false_components: self.n_false_components + o.n_false_components,
            false_alarm_pixels: self.false_alarm_pixels + o.false_alarm_pixels,
            total_pixels: self.total_pixels + o.total_pixels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub iou: f64,
    pub pd: f64,
    /// False-alarm pixels per image pixel (unscaled).
    pub fa: f64,
    pub n_targets_gt: u64,
    pub n_targets_detected: u64,
    pub n_false_components: u64,
    pub n_images: usize,
}

impl EvalReport {
    pub fn from_counts(c: &Counts, n_images: usize) -> Self {
        EvalReport {
            iou: if c.union == 0 {
                1.0
            } else {
                c.intersection as f64 / c.union as f64
            },
            pd: if c.n_targets_gt == 0 {
                1.0
            } else {
                c.n_targets_detected as f64 / c.n_targets_gt as f64
            },
            fa: if c.total_pixels == 0 {
                0.0
            } else {
                c.false_alarm_pixels as f64 / c.total_pixels as f64
            },
            n_targets_gt: c.n_targets_gt,
            n_targets_detected: c.n_targets_detected,
            n_false_components: c.n_false_components,
            n_images,
        }
    }

    /// IoU and Pd in units of 1e-2, Fa in units of 1e-6.
    pub fn table_units(&self) -> (f64, f64, f64) {
        (self.iou * 1e2, self.pd * 1e2, self.fa * 1e6)
    }

    pub fn to_table(&self) -> String {
        let (iou, pd, fa) = self.table_units();
        format!(
            "{:>10} {:>10} {:>10} {:>8} {:>9} {:>7}\n{:>10.2} {:>10.2} {:>10.2} {:>8} {:>9} {:>7}\n",
            "IoU(e-2)",
            "Pd(e-2)",
            "Fa(e-6)",
            "targets",
            "detected",
            "false",
            iou,
            pd,
            fa,
            self.n_targets_gt,
            self.n_targets_detected,
            self.n_false_components
        )
    }
}

/// `|pred & gt| / |pred | gt|`, 1.0 when both are empty.
pub fn compute_iou(pred: &PseudoMask, gt: &PseudoMask) -> Result<f64> {
    let c = iou_counts(pred, gt)?;
    Ok(if c.1 == 0 {
        1.0
    } else {
        c.0 as f64 / c.1 as f64
    })
}

fn iou_counts(pred: &PseudoMask, gt: &PseudoMask) -> Result<(u64, u64)> {
    pred.same_dims(gt)?;
    let (mut inter, mut union) = (0u64, 0u64);
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        inter += u64::from(p && g);
        union += u64::from(p || g);
    }
    Ok((inter, union))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionResult {
    pub pd: f64,
    pub fa: f64,
    pub counts: Counts,
}

/// Ground-truth targets are the 8-connected components of `gt`. Predicted
/// components are matched greedily, closest centroid pair first, each to at
/// most one target within `match_radius`.
pub fn compute_pd_fa(
    pred: &PseudoMask,
    gt: &PseudoMask,
    match_radius: f64,
) -> Result<DetectionResult> {
    let counts = image_counts(pred, gt, match_radius)?;
    let report = EvalReport::from_counts(&counts, 1);
    Ok(DetectionResult {
        pd: if counts.n_targets_gt == 0 {
            0.0
        } else {
            report.pd
        },
        fa: report.fa,
        counts,
    })
}

fn image_counts(pred: &PseudoMask, gt: &PseudoMask, match_radius: f64) -> Result<Counts> {
    let (intersection, union) = iou_counts(pred, gt)?;
    let targets = gt.components();
    let predicted = pred.components();
    let mut pairs = Vec::new();
    for (pi, p) in predicted.iter().enumerate() {
        for (ti, t) in targets.iter().enumerate() {
            let d = ((p.centroid.0 - t.centroid.0).powi(2) + (p.centroid.1 - t.centroid.1).powi(2))
                .sqrt();
            if d <= match_radius {
                pairs.push((d, pi, ti));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut pred_used = vec![false; predicted.len()];
    let mut target_used = vec![false; targets.len()];
    let mut detected = 0u64;
    for (_, pi, ti) in pairs {
        if !pred_used[pi] && !target_used[ti] {
            pred_used[pi] = true;
            target_used[ti] = true;
            detected += 1;
        }
    }
    let (mut false_components, mut false_pixels) = (0u64, 0u64);
    for (p, used) in predicted.iter().zip(&pred_used) {
        if !used {
            false_components += 1;
            false_pixels += p.area() as u64;
        }
    }
    Ok(Counts {
        intersection,
        union,
        n_targets_gt: targets.len() as u64,
        n_targets_detected: detected,
        n_false_components: false_components,
        false_alarm_pixels: false_pixels,
        total_pixels: (pred.width() * pred.height()) as u64,
    })
}

/// Dataset totals: IoU from summed intersections and unions, Pd and Fa
/// from summed target and pixel counts.
pub fn evaluate_dataset(
    preds: &[PseudoMask],
    gts: &[PseudoMask],
    match_radius: f64,
) -> Result<EvalReport> {
    if preds.is_empty() || preds.len() != gts.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions for {} ground-truth masks",
            preds.len(),
            gts.len()
        )));
    }
    let mut total = Counts::default();
    for (p, g) in preds.iter().zip(gts) {
        total = total + image_counts(p, g, match_radius)?;
    }
    Ok(EvalReport::from_counts(&total, preds.len()))
}
