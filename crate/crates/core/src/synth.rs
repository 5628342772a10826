//! Synthetic infrared scenes with analytic ground truth.
//!
//! Targets are Gaussian intensity bumps; a pixel belongs to a target's
//! ground truth when that target contributes at least 10% of its peak.
//! All randomness comes from ChaCha8 streams seeded by the scene seed, and
//! images are quantized to integer intensities, so a scene's bytes are a
//! pure function of its spec.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::annotation::{PointAnnotation, TargetCategory};
use crate::error::{Error, Result};
use crate::imaging::{clip, InfraredImage, MAX_INTENSITY};
use crate::mask::{MaskMethod, PseudoMask};

/// Fraction of the peak above which a pixel counts as target.
pub const GT_CUTOFF: f64 = 0.1;
/// Largest image-area fraction a point or spot target may cover.
pub const SMALL_TARGET_AREA: f64 = 0.0015;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub kind: TargetCategory,
    pub center: (f64, f64),
    pub peak: f64,
    /// Spread along the major axis.
    pub sigma: f64,
    /// Minor/major spread ratio in `(0, 1]`; 1 is isotropic.
    #[serde(default = "one")]
    pub aspect: f64,
    /// Major axis orientation in radians.
    #[serde(default)]
    pub angle: f64,
}

fn one() -> f64 {
    1.0
}

impl TargetSpec {
    pub fn isotropic(kind: TargetCategory, center: (f64, f64), peak: f64, sigma: f64) -> Self {
        TargetSpec {
            kind,
            center,
            peak,
            sigma,
            aspect: 1.0,
            angle: 0.0,
        }
    }

    /// Contribution of this target at pixel `(x, y)`.
    pub fn contribution(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.center.0, y - self.center.1);
        let (sin, cos) = self.angle.sin_cos();
        let u = dx * cos + dy * sin;
        let v = -dx * sin + dy * cos;
        let minor = self.sigma * self.aspect;
        self.peak
            * (-(u * u) / (2.0 * self.sigma * self.sigma) - (v * v) / (2.0 * minor * minor)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSpec {
    pub base: f64,
    /// Standard deviation of the per-pixel texture.
    pub clutter_sigma: f64,
    /// Number of low-frequency clutter blobs.
    pub blobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub targets: Vec<TargetSpec>,
    pub background: BackgroundSpec,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidSpec("scene has zero size".into()));
        }
        let b = &self.background;
        if !(0.0..=MAX_INTENSITY).contains(&b.base) || b.clutter_sigma < 0.0 {
            return Err(Error::InvalidSpec("background out of range".into()));
        }
        let limit = SMALL_TARGET_AREA * (self.width * self.height) as f64;
        for t in &self.targets {
            let (x, y) = t.center;
            if x < 0.0 || y < 0.0 || x > (self.width - 1) as f64 || y > (self.height - 1) as f64 {
                return Err(Error::InvalidSpec(format!(
                    "target at ({x}, {y}) outside scene"
                )));
            }
            if !(t.peak > 0.0 && t.peak <= MAX_INTENSITY) {
                return Err(Error::InvalidSpec(format!(
                    "peak {} not in (0, 255]",
                    t.peak
                )));
            }
            if !(t.sigma > 0.0) || !(t.aspect > 0.0 && t.aspect <= 1.0) {
                return Err(Error::InvalidSpec("target spread must be positive".into()));
            }
            if matches!(t.kind, TargetCategory::Point | TargetCategory::Spot)
                && analytic_area(t) > limit
            {
                return Err(Error::InvalidSpec(format!(
                    "{:?} target area {:.1} px exceeds {:.1} px",
                    t.kind,
                    analytic_area(t),
                    limit
                )));
            }
        }
        Ok(())
    }
}

/// Area of the ellipse where the contribution reaches the cutoff.
pub fn analytic_area(t: &TargetSpec) -> f64 {
    std::f64::consts::PI * 2.0 * (1.0 / GT_CUTOFF).ln() * t.sigma * t.sigma * t.aspect
}

/// Radius of the cutoff disc of an isotropic target.
pub fn cutoff_radius(sigma: f64) -> f64 {
    sigma * (2.0 * (1.0 / GT_CUTOFF).ln()).sqrt()
}

#[derive(Debug, Clone)]
pub struct GeneratedScene {
    pub id: String,
    pub spec: SceneSpec,
    pub image: InfraredImage,
    pub gt_mask: PseudoMask,
    /// One mask per target, in spec order.
    pub target_masks: Vec<PseudoMask>,
    pub annotations: Vec<PointAnnotation>,
}

pub fn generate_scene(spec: &SceneSpec) -> Result<GeneratedScene> {
    generate_scene_with_id(spec, format!("scene_{:03}", spec.seed))
}

pub fn generate_scene_with_id(spec: &SceneSpec, id: String) -> Result<GeneratedScene> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let background = render_background(spec);
    let mut target_masks = Vec::with_capacity(spec.targets.len());
    let mut annotations = Vec::with_capacity(spec.targets.len());
    let mut total = vec![0.0; w * h];
    for t in &spec.targets {
        let mut mask = PseudoMask::empty(w, h);
        let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
        for y in 0..h {
            for x in 0..w {
                let v = t.contribution(x as f64, y as f64);
                total[y * w + x] += v;
                if v >= GT_CUTOFF * t.peak {
                    mask.set(x, y, true);
                    sx += v * x as f64;
                    sy += v * y as f64;
                    sw += v;
                }
            }
        }
        if sw == 0.0 {
            return Err(Error::InvalidSpec(format!(
                "target at {:?} covers no pixel center",
                t.center
            )));
        }
        let (ax, ay) = ((sx / sw).round() as usize, (sy / sw).round() as usize);
        let (ax, ay) = if mask.get(ax, ay) {
            (ax, ay)
        } else {
            (t.center.0.round() as usize, t.center.1.round() as usize)
        };
        annotations.push(PointAnnotation::new(id.clone(), ax, ay).with_category(t.kind));
        target_masks.push(mask.with_provenance(MaskMethod::GroundTruth, None));
    }
    let image = InfraredImage::new(
        w,
        h,
        background
            .iter()
            .zip(&total)
            .map(|(b, t)| clip(b + t).round())
            .collect(),
    )?;
    let mut gt_mask = PseudoMask::empty(w, h).with_provenance(MaskMethod::GroundTruth, None);
    for m in &target_masks {
        gt_mask.union_with(m)?;
    }
    Ok(GeneratedScene {
        id,
        spec: spec.clone(),
        image,
        gt_mask,
        target_masks,
        annotations,
    })
}

/// Base level plus smooth Gaussian blobs plus white texture, unclipped.
fn render_background(spec: &SceneSpec) -> Vec<f64> {
    let (w, h) = (spec.width, spec.height);
    let b = &spec.background;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = vec![b.base; w * h];
    let diag = ((w * w + h * h) as f64).sqrt();
    for _ in 0..b.blobs {
        let cx = rng.random::<f64>() * w as f64;
        let cy = rng.random::<f64>() * h as f64;
        let radius = diag * (0.05 + 0.15 * rng.random::<f64>());
        let amplitude = 30.0 * (2.0 * rng.random::<f64>() - 1.0);
        let inv = 1.0 / (2.0 * radius * radius);
        for y in 0..h {
            for x in 0..w {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                out[y * w + x] += amplitude * (-(dx * dx + dy * dy) * inv).exp();
            }
        }
    }
    if b.clutter_sigma > 0.0 {
        let texture = Normal::new(0.0, b.clutter_sigma).expect("sigma checked non-negative");
        for v in out.iter_mut() {
            *v += texture.sample(&mut rng);
        }
    }
    out
}

/// Scene spec of the fixed standard corpus entry for `seed` in `1..=20`.
///
/// Seeds cycle through four layouts: a single spot, two or three point
/// targets, a spot with a companion point, and an elongated extended target.
/// Peaks, spreads, positions and clutter levels are drawn from a ChaCha8
/// stream keyed by the seed.
pub fn corpus_spec(seed: u64) -> SceneSpec {
    const SIZE: f64 = 256.0;
    const MARGIN: f64 = 40.0;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + seed);
    let mut uniform = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
    let base = uniform(35.0, 75.0);
    let clutter_sigma = uniform(2.0, 6.0);
    let kinds: Vec<TargetCategory> = match (seed - 1) % 4 {
        0 => vec![TargetCategory::Spot],
        1 => vec![TargetCategory::Point; 2 + (seed as usize % 2)],
        2 => vec![TargetCategory::Spot, TargetCategory::Point],
        _ => vec![TargetCategory::Extended],
    };
    let mut targets: Vec<TargetSpec> = Vec::new();
    for kind in kinds {
        let center = loop {
            let c = (
                uniform(MARGIN, SIZE - MARGIN).round(),
                uniform(MARGIN, SIZE - MARGIN).round(),
            );
            let clear = targets
                .iter()
                .all(|t| ((t.center.0 - c.0).powi(2) + (t.center.1 - c.1).powi(2)).sqrt() > 48.0);
            if clear {
                break c;
            }
        };
        let peak = uniform(130.0, 190.0);
        targets.push(match kind {
            TargetCategory::Point => TargetSpec::isotropic(kind, center, peak, uniform(0.7, 1.1)),
            TargetCategory::Spot => TargetSpec::isotropic(kind, center, peak, uniform(1.5, 2.4)),
            TargetCategory::Extended => TargetSpec {
                kind,
                center,
                peak,
                sigma: uniform(4.0, 8.0),
                aspect: uniform(0.45, 0.85),
                angle: uniform(0.0, std::f64::consts::PI),
            },
        });
    }
    SceneSpec {
        width: SIZE as usize,
        height: SIZE as usize,
        targets,
        background: BackgroundSpec {
            base,
            clutter_sigma,
            blobs: 3 + (seed as usize % 5),
        },
        seed,
    }
}

/// The fixed 20-scene corpus, seeds 1 through 20.
pub fn standard_corpus() -> Vec<GeneratedScene> {
    (1..=20)
        .map(|seed| generate_scene(&corpus_spec(seed)).expect("corpus specs are valid"))
        .collect()
}

/// Shifts an annotation by a rounded isotropic Gaussian offset truncated at
/// `3 sigma`, clamped into the image.
pub fn perturb_annotation(
    anno: &PointAnnotation,
    sigma: f64,
    seed: u64,
    width: usize,
    height: usize,
) -> PointAnnotation {
    if sigma <= 0.0 {
        return anno.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (dx, dy) = loop {
        let dx: f64 = StandardNormal.sample(&mut rng);
        let dy: f64 = StandardNormal.sample(&mut rng);
        if dx * dx + dy * dy <= 9.0 {
            break (dx * sigma, dy * sigma);
        }
    };
    let x = (anno.x as f64 + dx.round()).clamp(0.0, (width - 1) as f64) as usize;
    let y = (anno.y as f64 + dy.round()).clamp(0.0, (height - 1) as f64) as usize;
    PointAnnotation {
        x,
        y,
        ..anno.clone()
    }
}
