//! Independent reference implementations and shared corpus helpers.
//!
//! The references work on plain vectors and share no code with the library
//! beyond reading pixel values out of its image type.

#![allow(dead_code)]

use mclc::imaging::InfraredImage;
use mclc::metrics::compute_iou;
use mclc::monte_carlo::{binarize, lca_mask, run_mclc, MclcParams};
use mclc::pipeline::LabeledImage;
use mclc::synth::{standard_corpus, GeneratedScene};
use mclc::{PseudoMask, TargetProbabilityMap};

pub struct RefImage {
    pub w: usize,
    pub h: usize,
    pub v: Vec<f64>,
}

impl RefImage {
    pub fn of(img: &InfraredImage) -> RefImage {
        let mut v = Vec::new();
        for y in 0..img.height() {
            for x in 0..img.width() {
                v.push(img.get(x, y));
            }
        }
        RefImage {
            w: img.width(),
            h: img.height(),
            v,
        }
    }

    fn at(&self, x: usize, y: usize) -> f64 {
        self.v[y * self.w + x]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefCenter {
    pub c: f64,
    pub x: f64,
    pub y: f64,
}

/// One state of the reference iteration: centers and the labels assigned
/// from them.
#[derive(Debug, Clone)]
pub struct RefStep {
    pub centers: Vec<RefCenter>,
    pub labels: Vec<u32>,
}

pub struct RefParams {
    pub n: usize,
    pub mu_c: f64,
    pub mu_s: Option<f64>,
    pub threshold: f64,
    pub max_iters: usize,
    pub windowed: bool,
}

fn gradient(img: &RefImage, x: usize, y: usize) -> f64 {
    let xl = if x == 0 { 0 } else { x - 1 };
    let xr = if x + 1 >= img.w { img.w - 1 } else { x + 1 };
    let yu = if y == 0 { 0 } else { y - 1 };
    let yd = if y + 1 >= img.h { img.h - 1 } else { y + 1 };
    (img.at(xr, y) - img.at(xl, y)).abs() + (img.at(x, yd) - img.at(x, yu)).abs()
}

/// Cell centroids: rows = round(H/S) (at least 1, at most min(N, H)), the
/// N cells dealt to rows so the first `N mod rows` rows get one extra.
pub fn ref_grid(w: usize, h: usize, n: usize) -> Vec<(f64, f64)> {
    let s = ((w * h) as f64 / n as f64).sqrt();
    let mut rows = (h as f64 / s).round() as usize;
    if rows < 1 {
        rows = 1;
    }
    if rows > n.min(h) {
        rows = n.min(h);
    }
    let mut out = Vec::new();
    for r in 0..rows {
        let cols = n / rows + if r < n % rows { 1 } else { 0 };
        for c in 0..cols {
            let cx = (c as f64 + 0.5) * (w as f64 / cols as f64) - 0.5;
            let cy = (r as f64 + 0.5) * (h as f64 / rows as f64) - 0.5;
            out.push((cx, cy));
        }
    }
    out
}

fn nearest_pixel(v: f64, len: usize) -> usize {
    let r = v.round();
    if r < 0.0 {
        0
    } else if r as usize >= len {
        len - 1
    } else {
        r as usize
    }
}

/// Brute-force gradient minimum over the 3x3 neighbourhood, scanned row by
/// row; moves only on a strictly lower gradient than the centroid pixel.
pub fn ref_init(img: &RefImage, n: usize) -> Vec<RefCenter> {
    let mut centers = Vec::new();
    for (cx, cy) in ref_grid(img.w, img.h, n) {
        let bx = nearest_pixel(cx, img.w);
        let by = nearest_pixel(cy, img.h);
        let g0 = gradient(img, bx, by);
        let mut best_g = f64::INFINITY;
        let mut best = (bx, by);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (nx, ny) = (bx as i64 + dx, by as i64 + dy);
                if nx < 0 || ny < 0 || nx >= img.w as i64 || ny >= img.h as i64 {
                    continue;
                }
                let g = gradient(img, nx as usize, ny as usize);
                if g < best_g {
                    best_g = g;
                    best = (nx as usize, ny as usize);
                }
            }
        }
        if best_g < g0 {
            centers.push(RefCenter {
                c: img.at(best.0, best.1),
                x: best.0 as f64,
                y: best.1 as f64,
            });
        } else {
            centers.push(RefCenter {
                c: img.at(bx, by),
                x: cx,
                y: cy,
            });
        }
    }
    centers
}

fn dist(c: &RefCenter, v: f64, x: f64, y: f64, mu_c: f64, mu_s: f64) -> f64 {
    ((v - c.c) * (v - c.c) / (mu_c * mu_c)
        + ((x - c.x) * (x - c.x) + (y - c.y) * (y - c.y)) / (mu_s * mu_s))
        .sqrt()
}

fn ref_assign(img: &RefImage, centers: &[RefCenter], p: &RefParams, s: f64, mu_s: f64) -> Vec<u32> {
    let mut labels = vec![0u32; img.w * img.h];
    for y in 0..img.h {
        for x in 0..img.w {
            let v = img.at(x, y);
            let mut best: Option<(f64, usize)> = None;
            if p.windowed {
                for (k, c) in centers.iter().enumerate() {
                    let inside = (x as f64 - c.x).abs() <= s && (y as f64 - c.y).abs() <= s;
                    if !inside {
                        continue;
                    }
                    let d = dist(c, v, x as f64, y as f64, p.mu_c, mu_s);
                    if best.is_none() || d < best.unwrap().0 {
                        best = Some((d, k));
                    }
                }
            }
            if best.is_none() {
                for (k, c) in centers.iter().enumerate() {
                    let d = dist(c, v, x as f64, y as f64, p.mu_c, mu_s);
                    if best.is_none() || d < best.unwrap().0 {
                        best = Some((d, k));
                    }
                }
            }
            labels[y * img.w + x] = best.unwrap().1 as u32;
        }
    }
    labels
}

fn ref_update(img: &RefImage, labels: &[u32], prev: &[RefCenter]) -> Vec<RefCenter> {
    let mut out = Vec::new();
    for (k, old) in prev.iter().enumerate() {
        let (mut n, mut sc, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0);
        for y in 0..img.h {
            for x in 0..img.w {
                if labels[y * img.w + x] as usize == k {
                    n += 1.0;
                    sc += img.at(x, y);
                    sx += x as f64;
                    sy += y as f64;
                }
            }
        }
        if n == 0.0 {
            out.push(*old);
        } else {
            out.push(RefCenter {
                c: sc / n,
                x: sx / n,
                y: sy / n,
            });
        }
    }
    out
}

/// Full reference trace: initial assignment, then one step per update.
pub fn ref_lca(img: &RefImage, p: &RefParams) -> Vec<RefStep> {
    let s = ((img.w * img.h) as f64 / p.n as f64).sqrt();
    let mu_s = p.mu_s.unwrap_or(s);
    let mut centers = ref_init(img, p.n);
    let mut labels = ref_assign(img, &centers, p, s, mu_s);
    let mut trace = vec![RefStep {
        centers: centers.clone(),
        labels: labels.clone(),
    }];
    for _ in 0..p.max_iters {
        let next = ref_update(img, &labels, &centers);
        let mut moved: f64 = 0.0;
        for (a, b) in next.iter().zip(&centers) {
            let m = dist(b, a.c, a.x, a.y, p.mu_c, mu_s);
            if m > moved {
                moved = m;
            }
        }
        centers = next;
        labels = ref_assign(img, &centers, p, s, mu_s);
        trace.push(RefStep {
            centers: centers.clone(),
            labels: labels.clone(),
        });
        if moved < p.threshold {
            break;
        }
    }
    trace
}

/// Reference two-label dense mean-field with Potts compatibility: for each
/// pixel and label, the pairwise term sums kernel times the probability of
/// every other pixel taking a different label.
pub struct RefCrf {
    pub w_app: f64,
    pub w_smooth: f64,
    pub theta_alpha: f64,
    pub theta_beta: f64,
    pub theta_gamma: f64,
    pub eps: f64,
    pub iters: usize,
}

pub fn ref_mean_field(
    w: usize,
    h: usize,
    c: &[f64],
    p: &[f64],
    prm: &RefCrf,
) -> Vec<Vec<[f64; 2]>> {
    let n = w * h;
    let mut unary = vec![[0.0; 2]; n];
    for i in 0..n {
        let mut q = p[i];
        if q < prm.eps {
            q = prm.eps;
        }
        if q > 1.0 - prm.eps {
            q = 1.0 - prm.eps;
        }
        unary[i] = [-(1.0 - q).ln(), -q.ln()];
    }
    let softmax = |e: [f64; 2]| {
        let a = (-e[0]).exp();
        let b = (-e[1]).exp();
        [a / (a + b), b / (a + b)]
    };
    let mut q: Vec<[f64; 2]> = unary.iter().map(|&u| softmax(u)).collect();
    let mut history = Vec::new();
    for _ in 0..prm.iters {
        let mut next = vec![[0.0; 2]; n];
        for i in 0..n {
            let (xi, yi) = ((i % w) as f64, (i / w) as f64);
            let mut e = unary[i];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let (xj, yj) = ((j % w) as f64, (j / w) as f64);
                let d2 = (xi - xj) * (xi - xj) + (yi - yj) * (yi - yj);
                let dc = c[i] - c[j];
                let k = prm.w_app
                    * (-d2 / (2.0 * prm.theta_alpha * prm.theta_alpha)
                        - dc * dc / (2.0 * prm.theta_beta * prm.theta_beta))
                        .exp()
                    + prm.w_smooth * (-d2 / (2.0 * prm.theta_gamma * prm.theta_gamma)).exp();
                for l in 0..2 {
                    for m in 0..2 {
                        if m != l {
                            e[l] += k * q[j][m];
                        }
                    }
                }
            }
            next[i] = softmax(e);
        }
        q = next;
        history.push(q.clone());
    }
    history
}

pub fn corpus() -> Vec<GeneratedScene> {
    standard_corpus()
}

pub fn labeled(corpus: &[GeneratedScene]) -> Vec<LabeledImage> {
    corpus.iter().map(LabeledImage::from).collect()
}

/// Per-scene IoU of the OR of the per-target masks produced by `f`.
pub fn scene_ious(
    corpus: &[GeneratedScene],
    f: impl Fn(&GeneratedScene, &mclc::PointAnnotation) -> Option<PseudoMask> + Sync,
) -> Vec<f64> {
    use rayon::prelude::*;
    corpus
        .par_iter()
        .map(|s| {
            let mut merged = PseudoMask::empty(s.image.width(), s.image.height());
            for a in &s.annotations {
                if let Some(m) = f(s, a) {
                    merged.union_with(&m).unwrap();
                }
            }
            compute_iou(&merged, &s.gt_mask).unwrap()
        })
        .collect()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn mc_mask(
    s: &GeneratedScene,
    a: &mclc::PointAnnotation,
    p: &MclcParams,
) -> Option<PseudoMask> {
    let tpm = run_mclc(&s.image, a, p).unwrap();
    binarize(&tpm, p.binarize_threshold, a).ok()
}

pub fn clean_mask(
    s: &GeneratedScene,
    a: &mclc::PointAnnotation,
    p: &MclcParams,
) -> Option<PseudoMask> {
    Some(lca_mask(&s.image, a, p).unwrap())
}

pub fn tpm(s: &GeneratedScene, a: &mclc::PointAnnotation, p: &MclcParams) -> TargetProbabilityMap {
    run_mclc(&s.image, a, p).unwrap()
}
pub mod invariants;
