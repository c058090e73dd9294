//! Synthetic attention maps with a controllable amount of attention leaking
//! from an object region onto the background.
//!
//! Each image gets an elliptical "bird" mask and a disjoint "background" mask
//! (separated by a one-attention-pixel gap) at `mask_scale` times the
//! attention resolution. The attention map mixes a bird-region component and
//! a background component, `(1 - leakage) * bird + leakage * background`,
//! plus seeded uniform noise at 1% of the peak value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::container::{MapContainer, MapRecord, RecordKind};
use crate::error::{Error, Result};
use crate::labels::LabelTable;
use crate::map::{bilinear_downsample, l1_normalize, Map};

pub const NOISE_FRACTION: f64 = 0.01;
pub const TARGET_ATTRIBUTE: &str = "Waterbird";
pub const PROTECTED_ATTRIBUTE: &str = "WaterBackground";
pub const OBJECT_MASK: &str = "bird";
pub const BACKGROUND_MASK: &str = "background";

/// Isotropic Gaussian bump. `center` is (row, col) in `[0, 1]^2`, `sigma` in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobSpec {
    pub center: (f64, f64),
    pub sigma: f64,
    pub amplitude: f64,
}

/// Sum of Gaussian bumps evaluated at pixel centers. A blob too narrow to
/// register at any pixel center deposits its amplitude on the nearest pixel.
pub fn gen_blob_map(height: usize, width: usize, blobs: &[BlobSpec]) -> Result<Map> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidMap(format!("size {height}x{width}")));
    }
    let mut data = vec![0.0; height * width];
    for b in blobs {
        if !(b.sigma > 0.0 && b.amplitude > 0.0) {
            return Err(Error::InvalidMap(format!("invalid blob {b:?}")));
        }
        let cy = b.center.0 * height as f64;
        let cx = b.center.1 * width as f64;
        let inv = 1.0 / (2.0 * b.sigma * b.sigma);
        let mut deposited = false;
        for r in 0..height {
            let dy = r as f64 + 0.5 - cy;
            for c in 0..width {
                let dx = c as f64 + 0.5 - cx;
                let v = b.amplitude * (-(dy * dy + dx * dx) * inv).exp();
                if v > 0.0 {
                    data[r * width + c] += v;
                    deposited = true;
                }
            }
        }
        if !deposited {
            let r = (cy.floor().max(0.0) as usize).min(height - 1);
            let c = (cx.floor().max(0.0) as usize).min(width - 1);
            data[r * width + c] += b.amplitude;
        }
    }
    Map::new(height, width, data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasFixture {
    pub n_images: usize,
    /// Attention map (height, width).
    pub map_size: (usize, usize),
    /// Mask resolution as a multiple of the attention resolution.
    pub mask_scale: usize,
    /// Fraction of attention mass placed on the background region.
    pub leakage: f64,
    pub seed: u64,
}

impl BiasFixture {
    pub fn new(n_images: usize, leakage: f64, seed: u64) -> Self {
        Self {
            n_images,
            map_size: (14, 14),
            mask_scale: 4,
            leakage,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSet {
    pub attention: MapContainer,
    pub masks: MapContainer,
    pub labels: LabelTable,
}

pub fn image_id(index: usize) -> String {
    format!("img{index:05}")
}

struct SyntheticImage {
    attention: Map,
    object: Map,
    background: Map,
    target: bool,
    protected: bool,
}

fn gen_image(f: &BiasFixture, index: usize) -> Result<SyntheticImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(f.seed);
    rng.set_stream(index as u64);

    let (h, w) = f.map_size;
    let s = f.mask_scale;
    let (mh, mw) = (h * s, w * s);

    // ellipse in mask pixels
    let cy = rng.gen_range(0.35..0.65) * mh as f64;
    let cx = rng.gen_range(0.35..0.65) * mw as f64;
    let ry = rng.gen_range(0.15..0.25) * mh as f64;
    let rx = rng.gen_range(0.15..0.25) * mw as f64;
    let gap = s as f64;
    let mut object = vec![0.0; mh * mw];
    let mut background = vec![0.0; mh * mw];
    for r in 0..mh {
        let dy = r as f64 + 0.5 - cy;
        for c in 0..mw {
            let dx = c as f64 + 0.5 - cx;
            let inner = (dy / ry).powi(2) + (dx / rx).powi(2);
            let outer = (dy / (ry + gap)).powi(2) + (dx / (rx + gap)).powi(2);
            if inner <= 1.0 {
                object[r * mw + c] = 1.0;
            } else if outer > 1.0 {
                background[r * mw + c] = 1.0;
            }
        }
    }
    let object = Map::new(mh, mw, object)?;
    let background = Map::new(mh, mw, background)?;

    let object_small = bilinear_downsample(&object, h, w)?;
    let background_small = bilinear_downsample(&background, h, w)?;

    let focus = gen_blob_map(
        h,
        w,
        &[BlobSpec {
            center: (cy / mh as f64, cx / mw as f64),
            sigma: 0.5 * ry.min(rx) / s as f64,
            amplitude: 0.25,
        }],
    )?;
    let distractor = gen_blob_map(
        h,
        w,
        &[BlobSpec {
            center: (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)),
            sigma: 0.25 * h.min(w) as f64,
            amplitude: 0.5,
        }],
    )?;
    let object_part: Vec<f64> = object_small
        .data()
        .iter()
        .zip(focus.data())
        .map(|(m, g)| m * (0.75 + g))
        .collect();
    let background_part: Vec<f64> = background_small
        .data()
        .iter()
        .zip(distractor.data())
        .map(|(m, g)| m * (0.5 + g))
        .collect();
    let object_part = normalized_or_zero(h, w, object_part)?;
    let background_part = normalized_or_zero(h, w, background_part)?;

    let lambda = f.leakage;
    let mut signal: Vec<f64> = object_part
        .iter()
        .zip(&background_part)
        .map(|(o, b)| (1.0 - lambda) * o + lambda * b)
        .collect();
    let peak = signal.iter().copied().fold(0.0, f64::max);
    for v in &mut signal {
        *v += NOISE_FRACTION * peak * rng.gen::<f64>();
    }

    let target = rng.gen_bool(0.5);
    let protected = if rng.gen_bool(0.7) { target } else { !target };

    Ok(SyntheticImage {
        attention: Map::new(h, w, signal)?,
        object,
        background,
        target,
        protected,
    })
}

fn normalized_or_zero(h: usize, w: usize, data: Vec<f64>) -> Result<Vec<f64>> {
    let m = Map::new(h, w, data)?;
    if m.is_degenerate() {
        return Ok(m.into_data());
    }
    Ok(l1_normalize(&m)?.into_map().into_data())
}

/// Attention maps, object/background masks and labels for a fixture. Output is
/// a pure function of the fixture; images are generated in parallel from
/// per-image random streams.
pub fn gen_bias_fixture(f: &BiasFixture) -> Result<SyntheticSet> {
    if !(0.0..=1.0).contains(&f.leakage) {
        return Err(Error::InvalidMap(format!("leakage {} outside [0, 1]", f.leakage)));
    }
    if f.mask_scale == 0 || f.map_size.0 == 0 || f.map_size.1 == 0 {
        return Err(Error::InvalidMap("fixture sizes must be positive".into()));
    }
    let images = (0..f.n_images)
        .into_par_iter()
        .map(|i| gen_image(f, i))
        .collect::<Result<Vec<_>>>()?;

    let mut attention = Vec::with_capacity(images.len());
    let mut masks = Vec::with_capacity(2 * images.len());
    let mut ids = Vec::with_capacity(images.len());
    let mut target = Vec::with_capacity(images.len());
    let mut protected = Vec::with_capacity(images.len());
    for (i, img) in images.into_iter().enumerate() {
        let id = image_id(i);
        attention.push(MapRecord::new(&id, TARGET_ATTRIBUTE, RecordKind::Attention, img.attention)?);
        masks.push(MapRecord::new(&id, OBJECT_MASK, RecordKind::Mask, img.object)?);
        masks.push(MapRecord::new(&id, BACKGROUND_MASK, RecordKind::Mask, img.background)?);
        target.push(img.target);
        protected.push(img.protected);
        ids.push(id);
    }
    let labels = LabelTable::new(
        ids,
        vec![TARGET_ATTRIBUTE.into(), PROTECTED_ATTRIBUTE.into()],
        vec![target, protected],
    )?;
    Ok(SyntheticSet {
        attention: MapContainer::new(attention),
        masks: MapContainer::new(masks),
        labels,
    })
}
