//! Windowed fully connected CRF refinement of a target probability map.
//!
//! Two labels (background, target), Potts compatibility, an appearance
//! kernel over position and intensity plus a position-only smoothness
//! kernel. Inference is exact mean-field: every pair in the window is
//! visited, no lattice approximation.

use serde::{Deserialize, Serialize};

use crate::annotation::PointAnnotation;
use crate::error::{Error, Result};
use crate::imaging::InfraredImage;
use crate::mask::{MaskMethod, PseudoMask};
use crate::monte_carlo::{Domain, TargetProbabilityMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrfParams {
    /// Half-size of the square window around the annotation.
    pub window_radius: usize,
    pub iters: usize,
    pub w_appearance: f64,
    pub w_smoothness: f64,
    /// Appearance kernel bandwidth in pixels.
    pub theta_alpha: f64,
    /// Appearance kernel bandwidth in intensity units.
    pub theta_beta: f64,
    /// Smoothness kernel bandwidth in pixels.
    pub theta_gamma: f64,
    /// Probabilities are clamped to `[eps, 1 - eps]` before taking logs.
    pub unary_epsilon: f64,
}

impl Default for CrfParams {
    fn default() -> Self {
        CrfParams {
            window_radius: 32,
            iters: 5,
            w_appearance: 3.0,
            w_smoothness: 0.0,
            theta_alpha: 8.0,
            theta_beta: 5.0,
            theta_gamma: 3.0,
            unary_epsilon: 0.05,
        }
    }
}

impl CrfParams {
    pub fn validate(&self) -> Result<()> {
        if self.window_radius == 0 {
            return Err(Error::InvalidParams(
                "window_radius must be at least 1".into(),
            ));
        }
        if self.iters == 0 {
            return Err(Error::InvalidParams("iters must be at least 1".into()));
        }
        for (name, w) in [
            ("w_appearance", self.w_appearance),
            ("w_smoothness", self.w_smoothness),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be non-negative, got {w}"
                )));
            }
        }
        for (name, t) in [
            ("theta_alpha", self.theta_alpha),
            ("theta_beta", self.theta_beta),
            ("theta_gamma", self.theta_gamma),
        ] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be positive, got {t}"
                )));
            }
        }
        if !(self.unary_epsilon > 0.0 && self.unary_epsilon < 0.5) {
            return Err(Error::InvalidParams(format!(
                "unary_epsilon must lie in (0, 0.5), got {}",
                self.unary_epsilon
            )));
        }
        Ok(())
    }
}

/// Posteriors after each mean-field iteration.
#[derive(Debug, Clone)]
pub struct MeanField {
    pub width: usize,
    pub height: usize,
    /// `history[t][i] = [q_background, q_target]` after iteration `t + 1`.
    pub history: Vec<Vec<[f64; 2]>>,
    /// Mean-field free energy of the initial posterior and after each iteration.
    pub free_energy: Vec<f64>,
}

impl MeanField {
    pub fn posterior(&self) -> &[[f64; 2]] {
        self.history.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Per-pixel argmax; ties go to background.
    pub fn labels(&self) -> Vec<bool> {
        self.posterior().iter().map(|q| q[1] > q[0]).collect()
    }
}

/// `-log` of the clamped probabilities, `[background, target]` per pixel.
pub fn unary(probs: &[f64], eps: f64) -> Vec<[f64; 2]> {
    probs
        .iter()
        .map(|&p| {
            let p = p.clamp(eps, 1.0 - eps);
            [-(1.0 - p).ln(), -p.ln()]
        })
        .collect()
}

struct Kernel {
    width: usize,
    height: usize,
    w_app: f64,
    w_smooth: f64,
    // indexed by (|dx|, |dy|)
    spatial_app: Vec<f64>,
    spatial_smooth: Vec<f64>,
    color: ColorFactor,
}

enum ColorFactor {
    // all intensities integral: factor looked up by |dc|
    Table(Vec<f64>),
    Direct(f64),
}

impl Kernel {
    fn new(width: usize, height: usize, intensities: &[f64], p: &CrfParams) -> Kernel {
        let ta = 2.0 * p.theta_alpha * p.theta_alpha;
        let tg = 2.0 * p.theta_gamma * p.theta_gamma;
        let mut spatial_app = vec![0.0; width * height];
        let mut spatial_smooth = vec![0.0; width * height];
        for dy in 0..height {
            for dx in 0..width {
                let d2 = (dx * dx + dy * dy) as f64;
                spatial_app[dy * width + dx] = (-d2 / ta).exp();
                spatial_smooth[dy * width + dx] = (-d2 / tg).exp();
            }
        }
        let tb = 2.0 * p.theta_beta * p.theta_beta;
        let integral = intensities
            .iter()
            .all(|c| c.fract() == 0.0 && *c >= 0.0 && *c <= 255.0);
        let color = if integral {
            ColorFactor::Table((0..=255).map(|d| (-((d * d) as f64) / tb).exp()).collect())
        } else {
            ColorFactor::Direct(tb)
        };
        Kernel {
            width,
            height,
            w_app: p.w_appearance,
            w_smooth: p.w_smoothness,
            spatial_app,
            spatial_smooth,
            color,
        }
    }

    #[inline]
    fn eval(&self, i: usize, j: usize, ci: f64, cj: f64) -> f64 {
        let (xi, yi) = (i % self.width, i / self.width);
        let (xj, yj) = (j % self.width, j / self.width);
        let off = xi.abs_diff(xj) + yi.abs_diff(yj) * self.width;
        let dc = ci - cj;
        let color = match &self.color {
            ColorFactor::Table(t) => t[dc.abs() as usize],
            ColorFactor::Direct(tb) => (-(dc * dc) / tb).exp(),
        };
        self.w_app * self.spatial_app[off] * color + self.w_smooth * self.spatial_smooth[off]
    }

    /// `(sum_j k_ij, sum_j k_ij q_j[1])` over `j != i`, for every `i`.
    fn messages(&self, c: &[f64], q: &[[f64; 2]]) -> Vec<(f64, f64)> {
        let n = self.width * self.height;
        let mut out = vec![(0.0, 0.0); n];
        for i in 0..n {
            for j in (i + 1)..n {
                let k = self.eval(i, j, c[i], c[j]);
                out[i].0 += k;
                out[i].1 += k * q[j][1];
                out[j].0 += k;
                out[j].1 += k * q[i][1];
            }
        }
        out
    }
}

fn normalize(e: [f64; 2]) -> [f64; 2] {
    // q_l ∝ exp(-e_l)
    let m = e[0].min(e[1]);
    let a = (-(e[0] - m)).exp();
    let b = (-(e[1] - m)).exp();
    let s = a + b;
    [a / s, b / s]
}

fn free_energy(u: &[[f64; 2]], q: &[[f64; 2]], msg: &[(f64, f64)]) -> f64 {
    let mut f = 0.0;
    for i in 0..u.len() {
        for l in 0..2 {
            if q[i][l] > 0.0 {
                f += q[i][l] * (u[i][l] + q[i][l].ln());
            }
        }
        // sum_{j != i} k_ij q_i[0] q_j[1] counts every disagreeing pair once
        // when summed over i.
        f += q[i][0] * msg[i].1;
    }
    f
}

/// Mean-field inference on a `width x height` window. `probs` are target
/// probabilities per pixel, `intensities` the image values.
pub fn mean_field(
    width: usize,
    height: usize,
    intensities: &[f64],
    probs: &[f64],
    params: &CrfParams,
) -> Result<MeanField> {
    params.validate()?;
    let n = width * height;
    if intensities.len() != n || probs.len() != n {
        return Err(Error::LengthMismatch(format!(
            "window {width}x{height} with {} intensities and {} probabilities",
            intensities.len(),
            probs.len()
        )));
    }
    let u = unary(probs, params.unary_epsilon);
    let kernel = Kernel::new(width, height, intensities, params);
    let mut q: Vec<[f64; 2]> = u.iter().map(|&e| normalize(e)).collect();
    let mut history = Vec::with_capacity(params.iters);
    let mut energies = Vec::with_capacity(params.iters + 1);
    let mut msg = kernel.messages(intensities, &q);
    energies.push(free_energy(&u, &q, &msg));
    for _ in 0..params.iters {
        // Potts: label 0 pays k_ij q_j[1], label 1 pays k_ij q_j[0].
        q = (0..n)
            .map(|i| {
                let (ksum, k1) = msg[i];
                normalize([u[i][0] + k1, u[i][1] + (ksum - k1)])
            })
            .collect();
        msg = kernel.messages(intensities, &q);
        energies.push(free_energy(&u, &q, &msg));
        history.push(q.clone());
    }
    Ok(MeanField {
        width,
        height,
        history,
        free_energy: energies,
    })
}

/// Refines the TPM inside the window around `anno` and returns the target
/// component containing the annotation, pasted into a full-size mask.
pub fn refine_tpm(
    img: &InfraredImage,
    tpm: &TargetProbabilityMap,
    anno: &PointAnnotation,
    params: &CrfParams,
) -> Result<PseudoMask> {
    params.validate()?;
    anno.check_bounds(img.width(), img.height())?;
    if tpm.width() != img.width() || tpm.height() != img.height() {
        return Err(Error::DimensionMismatch(
            img.width(),
            img.height(),
            tpm.width(),
            tpm.height(),
        ));
    }
    let domain = Domain::around(img, anno, Some(params.window_radius));
    let mut intensities = Vec::with_capacity(domain.width * domain.height);
    let mut probs = Vec::with_capacity(domain.width * domain.height);
    for y in domain.y0..domain.y0 + domain.height {
        for x in domain.x0..domain.x0 + domain.width {
            intensities.push(img.get(x, y));
            probs.push(tpm.prob(x, y));
        }
    }
    if probs.iter().all(|&p| p == 0.0) {
        return Err(Error::DegenerateUnary);
    }
    let mf = mean_field(domain.width, domain.height, &intensities, &probs, params)?;
    let local = PseudoMask::from_vec(domain.width, domain.height, mf.labels())?;
    let la = domain.local(anno);
    let seed = if local.get(la.x, la.y) {
        Some((la.x, la.y))
    } else {
        best_within(&mf, la.x, la.y, 5)
    };
    let Some((sx, sy)) = seed else {
        return Err(Error::EmptyMask(format!(
            "refinement removed every target pixel within 5 px of ({}, {})",
            anno.x, anno.y
        )));
    };
    let component = local.component_at(sx, sy);
    Ok(domain
        .paste(&component, img.width(), img.height())
        .with_provenance(MaskMethod::Crf, None))
}

fn best_within(mf: &MeanField, ax: usize, ay: usize, radius: usize) -> Option<(usize, usize)> {
    let q = mf.posterior();
    let r = radius as isize;
    let mut best: Option<(usize, usize, f64)> = None;
    for y in (ay as isize - r).max(0)..=(ay as isize + r).min(mf.height as isize - 1) {
        for x in (ax as isize - r).max(0)..=(ax as isize + r).min(mf.width as isize - 1) {
            let (dx, dy) = (x - ax as isize, y - ay as isize);
            if dx * dx + dy * dy > r * r {
                continue;
            }
            let p = q[y as usize * mf.width + x as usize];
            if p[1] > p[0] && best.is_none_or(|b| p[1] > b.2) {
                best = Some((x as usize, y as usize, p[1]));
            }
        }
    }
    best.map(|b| (b.0, b.1))
}
