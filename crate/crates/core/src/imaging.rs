//! Single-channel image representation, PNG input/output and the noise
//! injectors used to perturb clustering inputs.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader, RgbImage};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::PseudoMask;

pub const MAX_INTENSITY: f64 = 255.0;

/// Row-major intensity raster with every value in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfraredImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl InfraredImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "zero-sized image {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} values for a {width}x{height} image",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=MAX_INTENSITY).contains(*v)) {
            return Err(Error::InvalidImage(format!(
                "intensity {v} outside [0, 255]"
            )));
        }
        Ok(InfraredImage {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image from a generator, clipping every value into range.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(clip(f(x, y)));
            }
        }
        InfraredImage {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Copies the rectangle `[x0, x0 + w) x [y0, y0 + h)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<InfraredImage> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::InvalidParams(format!(
                "crop {w}x{h}+{x0}+{y0} outside {}x{} image",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + w]);
        }
        Ok(InfraredImage {
            width: w,
            height: h,
            data,
        })
    }

    /// Quantizes to 8-bit gray by rounding.
    pub fn to_gray8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| v.round() as u8).collect()
    }
}

#[inline]
pub fn clip(v: f64) -> f64 {
    v.clamp(0.0, MAX_INTENSITY)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Salt,
    Pepper,
    Gaussian,
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "salt" => Ok(NoiseKind::Salt),
            "pepper" => Ok(NoiseKind::Pepper),
            "gaussian" => Ok(NoiseKind::Gaussian),
            other => Err(Error::InvalidSpec(format!("unknown noise kind `{other}`"))),
        }
    }
}

/// Salt/pepper intensity is the fraction of pixels replaced; Gaussian
/// intensity is the standard deviation in intensity units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub intensity: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn salt(intensity: f64, seed: u64) -> Self {
        NoiseSpec {
            kind: NoiseKind::Salt,
            intensity,
            seed,
        }
    }

    pub fn pepper(intensity: f64, seed: u64) -> Self {
        NoiseSpec {
            kind: NoiseKind::Pepper,
            intensity,
            seed,
        }
    }

    pub fn gaussian(sigma: f64, seed: u64) -> Self {
        NoiseSpec {
            kind: NoiseKind::Gaussian,
            intensity: sigma,
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        NoiseSpec { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            NoiseKind::Salt | NoiseKind::Pepper => (0.0..=1.0).contains(&self.intensity),
            NoiseKind::Gaussian => self.intensity >= 0.0 && self.intensity.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!(
                "{:?} intensity {} out of range",
                self.kind, self.intensity
            )))
        }
    }

    /// Number of pixels a salt/pepper spec replaces on an image of `n` pixels.
    pub fn replaced_count(&self, n: usize) -> usize {
        ((self.intensity * n as f64).round() as usize).min(n)
    }
}

/// Returns `clip(img + noise)`. Deterministic in `(img, spec)`.
pub fn add_noise(img: &InfraredImage, spec: &NoiseSpec) -> Result<InfraredImage> {
    spec.validate()?;
    let mut out = img.clone();
    if spec.intensity == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.kind {
        NoiseKind::Salt | NoiseKind::Pepper => {
            let value = if spec.kind == NoiseKind::Salt {
                MAX_INTENSITY
            } else {
                0.0
            };
            let n = out.data.len();
            for i in index::sample(&mut rng, n, spec.replaced_count(n)) {
                out.data[i] = value;
            }
        }
        NoiseKind::Gaussian => {
            let normal =
                Normal::new(0.0, spec.intensity).map_err(|e| Error::InvalidSpec(e.to_string()))?;
            for v in out.data.iter_mut() {
                *v = clip(*v + normal.sample(&mut rng));
            }
        }
    }
    Ok(out)
}

/// Decodes an 8-bit or 16-bit grayscale PNG, or an 8-bit RGB PNG (luma
/// weighted 0.299/0.587/0.114). 16-bit values are rescaled linearly so that
/// 65535 maps to 255.
pub fn load_image(path: impl AsRef<Path>) -> Result<InfraredImage> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let decoded = reader.decode().map_err(|e| match e {
        image::ImageError::Unsupported(u) => Error::Format {
            path: path.to_path_buf(),
            message: u.to_string(),
        },
        other => Error::io(path, other),
    })?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let data: Vec<f64> = match decoded {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(f64::from).collect(),
        DynamicImage::ImageLuma16(buf) => buf
            .into_raw()
            .into_iter()
            .map(|v| f64::from(v) * MAX_INTENSITY / 65535.0)
            .collect(),
        DynamicImage::ImageRgb8(buf) => buf
            .into_raw()
            .chunks_exact(3)
            .map(|p| {
                clip(0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]))
            })
            .collect(),
        other => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!("unsupported color type {:?}", other.color()),
            })
        }
    };
    InfraredImage::new(w, h, data)
}

/// Reads a binary mask: any non-zero pixel (after conversion to 8-bit luma)
/// is foreground.
pub fn load_mask(path: impl AsRef<Path>) -> Result<PseudoMask> {
    let path = path.as_ref();
    let decoded = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| Error::io(path, e))?
        .into_luma8();
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    PseudoMask::from_vec(
        w,
        h,
        decoded.into_raw().into_iter().map(|v| v > 0).collect(),
    )
}

/// Anything that renders to an 8-bit grayscale raster.
pub trait GrayRaster {
    fn dims(&self) -> (usize, usize);
    fn to_gray8(&self) -> Vec<u8>;
}

impl GrayRaster for PseudoMask {
    fn dims(&self) -> (usize, usize) {
        (self.width(), self.height())
    }

    fn to_gray8(&self) -> Vec<u8> {
        self.data()
            .iter()
            .map(|&v| if v { 255 } else { 0 })
            .collect()
    }
}

impl GrayRaster for InfraredImage {
    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn to_gray8(&self) -> Vec<u8> {
        InfraredImage::to_gray8(self)
    }
}

/// Writes masks as {0, 255} and probability maps as `round(255 p)`.
pub fn save_mask_png(raster: &impl GrayRaster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = raster.dims();
    let buf = GrayImage::from_raw(w as u32, h as u32, raster.to_gray8())
        .ok_or_else(|| Error::InvalidImage("raster length does not match dimensions".into()))?;
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::io(path, e))
}

/// Heatmap export through [`heat_color`].
pub fn save_heatmap_png(raster: &impl GrayRaster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = raster.dims();
    let rgb: Vec<u8> = raster.to_gray8().into_iter().flat_map(heat_color).collect();
    let buf = RgbImage::from_raw(w as u32, h as u32, rgb)
        .ok_or_else(|| Error::InvalidImage("raster length does not match dimensions".into()))?;
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::io(path, e))
}

/// Fixed five-stop colormap: black, dark purple (80, 18, 123), red
/// (182, 54, 121), orange (251, 136, 97), pale yellow (252, 253, 191),
/// linearly interpolated over equal intervals of the 8-bit value.
pub fn heat_color(v: u8) -> [u8; 3] {
    const STOPS: [[f64; 3]; 5] = [
        [0.0, 0.0, 0.0],
        [80.0, 18.0, 123.0],
        [182.0, 54.0, 121.0],
        [251.0, 136.0, 97.0],
        [252.0, 253.0, 191.0],
    ];
    let t = f64::from(v) / 255.0 * 4.0;
    let i = (t.floor() as usize).min(3);
    let f = t - i as f64;
    let mut out = [0u8; 3];
    for (c, o) in out.iter_mut().enumerate() {
        *o = (STOPS[i][c] + (STOPS[i + 1][c] - STOPS[i][c]) * f).round() as u8;
    }
    out
}
