//! Synthetic True-FISP-like slices with known ground truth.
//!
//! A phantom is a dark background with a bright elliptical vessel lumen. Inside
//! the lumen sits one of:
//!
//! * a **real clot**: a solid, uniformly hypointense disc;
//! * a **turbulence** artifact: a smooth, elongated, mildly attenuating
//!   Gaussian ridge;
//! * nothing (**clean lumen**).
//!
//! Each phantom comes with the lumen and clot ROIs an operator would draw and
//! the expected verdict. Images are quantized to 16-bit stored values and
//! normalized exactly as a PGM-16 file of the same samples would be on load.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::Verdict;
use crate::image_io::{write_pgm16, StudySlice};
use crate::roi::{make_masks, RoiError, RoiPair, RoiShape};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhantomError {
    #[error("inclusion or clot ROI is not strictly inside the lumen")]
    InclusionOutsideLumen,
    #[error("invalid phantom spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomKind {
    RealClot,
    Turbulence,
    CleanLumen,
}

impl PhantomKind {
    pub const ALL: [PhantomKind; 3] = [
        PhantomKind::RealClot,
        PhantomKind::Turbulence,
        PhantomKind::CleanLumen,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PhantomKind::RealClot => "real_clot",
            PhantomKind::Turbulence => "turbulence",
            PhantomKind::CleanLumen => "clean_lumen",
        }
    }

    pub fn expected(self) -> Verdict {
        match self {
            PhantomKind::RealClot => Verdict::Positive,
            PhantomKind::Turbulence | PhantomKind::CleanLumen => Verdict::Negative,
        }
    }
}

impl std::fmt::Display for PhantomKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PhantomKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PhantomKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown phantom kind {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LumenSpec {
    pub cx: f64,
    pub cy: f64,
    pub a: f64,
    pub b: f64,
    pub rot: f64,
    pub intensity: f64,
}

/// What sits inside the lumen, together with the clot ROI drawn around it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Inclusion {
    RealClot {
        cx: f64,
        cy: f64,
        radius: f64,
        /// Inclusion intensity relative to the lumen intensity.
        intensity_ratio: f64,
        roi_radius: f64,
    },
    Turbulence {
        cx: f64,
        cy: f64,
        /// Gaussian standard deviation along the ridge.
        length_sigma: f64,
        /// Gaussian standard deviation across the ridge.
        width_sigma: f64,
        rot: f64,
        /// Fractional darkening at the ridge centre.
        peak_attenuation: f64,
        roi_a: f64,
        roi_b: f64,
    },
    CleanLumen {
        roi_cx: f64,
        roi_cy: f64,
        roi_a: f64,
        roi_b: f64,
        roi_rot: f64,
    },
}

impl Inclusion {
    pub fn kind(&self) -> PhantomKind {
        match self {
            Inclusion::RealClot { .. } => PhantomKind::RealClot,
            Inclusion::Turbulence { .. } => PhantomKind::Turbulence,
            Inclusion::CleanLumen { .. } => PhantomKind::CleanLumen,
        }
    }

    fn clot_roi(&self) -> RoiShape {
        match *self {
            Inclusion::RealClot {
                cx, cy, roi_radius, ..
            } => RoiShape::circle(cx, cy, roi_radius),
            Inclusion::Turbulence {
                cx,
                cy,
                rot,
                roi_a,
                roi_b,
                ..
            } => RoiShape::Ellipse {
                cx,
                cy,
                a: roi_a,
                b: roi_b,
                rot,
            },
            Inclusion::CleanLumen {
                roi_cx,
                roi_cy,
                roi_a,
                roi_b,
                roi_rot,
            } => RoiShape::Ellipse {
                cx: roi_cx,
                cy: roi_cy,
                a: roi_a,
                b: roi_b,
                rot: roi_rot,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub seed: u64,
    pub image_size: usize,
    pub background: f64,
    pub lumen: LumenSpec,
    /// The lumen ROI is the lumen ellipse shrunk by this many pixels.
    pub lumen_roi_margin: f64,
    pub inclusion: Inclusion,
    pub noise_sigma: f64,
}

impl PhantomSpec {
    /// Default geometry for a kind: 256×256 slice, lumen 80×50 px at the centre.
    pub fn default_for(kind: PhantomKind, seed: u64) -> Self {
        let inclusion = match kind {
            PhantomKind::RealClot => Inclusion::RealClot {
                cx: 148.0,
                cy: 128.0,
                radius: 12.0,
                intensity_ratio: 0.4,
                roi_radius: 24.0,
            },
            PhantomKind::Turbulence => Inclusion::Turbulence {
                cx: 118.0,
                cy: 128.0,
                length_sigma: 10.0,
                width_sigma: 2.5,
                rot: 0.0,
                peak_attenuation: 0.2,
                roi_a: 30.0,
                roi_b: 7.5,
            },
            PhantomKind::CleanLumen => Inclusion::CleanLumen {
                roi_cx: 128.0,
                roi_cy: 128.0,
                roi_a: 24.0,
                roi_b: 8.0,
                roi_rot: 0.0,
            },
        };
        Self {
            seed,
            image_size: 256,
            background: 0.1,
            lumen: LumenSpec {
                cx: 128.0,
                cy: 128.0,
                a: 80.0,
                b: 50.0,
                rot: 0.0,
                intensity: 0.8,
            },
            lumen_roi_margin: 3.0,
            inclusion,
            noise_sigma: 0.02,
        }
    }

    pub fn kind(&self) -> PhantomKind {
        self.inclusion.kind()
    }

    pub fn lumen_roi(&self) -> RoiShape {
        let l = &self.lumen;
        RoiShape::Ellipse {
            cx: l.cx,
            cy: l.cy,
            a: l.a - self.lumen_roi_margin,
            b: l.b - self.lumen_roi_margin,
            rot: l.rot,
        }
    }

    pub fn clot_roi(&self) -> RoiShape {
        self.inclusion.clot_roi()
    }

    fn validate(&self) -> Result<(), PhantomError> {
        let bad = |m: &str| Err(PhantomError::InvalidSpec(m.to_string()));
        if self.image_size < 32 {
            return bad("image_size must be at least 32");
        }
        let l = &self.lumen;
        if !(0.0 < self.background && self.background < 1.0)
            || !(0.0 < l.intensity && l.intensity < 1.0)
        {
            return bad("intensities must lie strictly inside (0, 1)");
        }
        if l.a <= self.lumen_roi_margin || l.b <= self.lumen_roi_margin {
            return bad("lumen must be larger than the ROI margin");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be non-negative");
        }
        match self.inclusion {
            Inclusion::RealClot {
                radius,
                intensity_ratio,
                roi_radius,
                ..
            } => {
                if radius <= 0.0 || roi_radius <= radius {
                    return bad("clot ROI must be larger than the inclusion");
                }
                if !(0.0 < intensity_ratio && intensity_ratio < 1.0) {
                    return bad("intensity_ratio must lie in (0, 1)");
                }
            }
            Inclusion::Turbulence {
                length_sigma,
                width_sigma,
                peak_attenuation,
                roi_a,
                roi_b,
                ..
            } => {
                if width_sigma <= 0.0 || length_sigma < 3.0 * width_sigma {
                    return bad("turbulence axis ratio must be at least 3");
                }
                if !(0.0 < peak_attenuation && peak_attenuation < 0.25) {
                    return bad("turbulence peak attenuation must lie in (0, 0.25)");
                }
                if roi_a <= 0.0 || roi_b <= 0.0 {
                    return bad("clot ROI axes must be positive");
                }
            }
            Inclusion::CleanLumen { roi_a, roi_b, .. } => {
                if roi_a <= 0.0 || roi_b <= 0.0 {
                    return bad("clot ROI axes must be positive");
                }
            }
        }
        Ok(())
    }

    /// Checks that the inclusion and both ROIs sit strictly inside the lumen.
    fn check_containment(&self) -> Result<(), PhantomError> {
        let l = &self.lumen;
        let (s, c) = l.rot.sin_cos();
        let inside_lumen = |px: f64, py: f64| {
            let dx = px - l.cx;
            let dy = py - l.cy;
            let u = (dx * c + dy * s) / l.a;
            let v = (-dx * s + dy * c) / l.b;
            u * u + v * v < 1.0
        };
        // boundary of the inclusion body (3σ for the ridge)
        let body: Option<(f64, f64, f64, f64, f64)> = match self.inclusion {
            Inclusion::RealClot { cx, cy, radius, .. } => Some((cx, cy, radius, radius, 0.0)),
            Inclusion::Turbulence {
                cx,
                cy,
                length_sigma,
                width_sigma,
                rot,
                ..
            } => Some((cx, cy, 3.0 * length_sigma, 3.0 * width_sigma, rot)),
            Inclusion::CleanLumen { .. } => None,
        };
        if let Some((cx, cy, a, b, rot)) = body {
            let (rs, rc) = rot.sin_cos();
            for i in 0..360 {
                let t = (i as f64).to_radians();
                let (u, v) = (a * t.cos(), b * t.sin());
                if !inside_lumen(cx + u * rc - v * rs, cy + u * rs + v * rc) {
                    return Err(PhantomError::InclusionOutsideLumen);
                }
            }
        }
        let n = self.image_size;
        match make_masks(&self.lumen_roi(), &self.clot_roi(), n, n) {
            Ok(_) => Ok(()),
            Err(RoiError::ClotNotContained { .. }) | Err(RoiError::EmptyMask(_)) => {
                Err(PhantomError::InclusionOutsideLumen)
            }
            Err(e) => Err(PhantomError::InvalidSpec(e.to_string())),
        }
    }

    /// Noise-free intensity at a point.
    fn intensity_at(&self, px: f64, py: f64) -> f64 {
        let l = &self.lumen;
        let (s, c) = l.rot.sin_cos();
        let dx = px - l.cx;
        let dy = py - l.cy;
        let u = (dx * c + dy * s) / l.a;
        let v = (-dx * s + dy * c) / l.b;
        if u * u + v * v > 1.0 {
            return self.background;
        }
        match self.inclusion {
            Inclusion::RealClot {
                cx,
                cy,
                radius,
                intensity_ratio,
                ..
            } => {
                let (ddx, ddy) = (px - cx, py - cy);
                if ddx * ddx + ddy * ddy <= radius * radius {
                    l.intensity * intensity_ratio
                } else {
                    l.intensity
                }
            }
            Inclusion::Turbulence {
                cx,
                cy,
                length_sigma,
                width_sigma,
                rot,
                peak_attenuation,
                ..
            } => {
                let (rs, rc) = rot.sin_cos();
                let (ddx, ddy) = (px - cx, py - cy);
                let along = ddx * rc + ddy * rs;
                let across = -ddx * rs + ddy * rc;
                let g = (-(along * along) / (2.0 * length_sigma * length_sigma)
                    - (across * across) / (2.0 * width_sigma * width_sigma))
                    .exp();
                l.intensity * (1.0 - peak_attenuation * g)
            }
            Inclusion::CleanLumen { .. } => l.intensity,
        }
    }
}

/// A generated slice with its ROIs and ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub slice: StudySlice,
    /// 16-bit stored values the slice was normalized from.
    pub samples: Vec<u16>,
    pub lumen_roi: RoiShape,
    pub clot_roi: RoiShape,
    pub expected: Verdict,
    pub spec: PhantomSpec,
}

/// JSON written next to each phantom image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSidecar {
    pub roi: RoiPair,
    pub expected: Verdict,
    pub spec: PhantomSpec,
}

impl Phantom {
    pub fn roi_pair(&self) -> RoiPair {
        RoiPair {
            lumen: self.lumen_roi.clone(),
            clot: self.clot_roi.clone(),
        }
    }

    pub fn sidecar(&self) -> PhantomSidecar {
        PhantomSidecar {
            roi: self.roi_pair(),
            expected: self.expected,
            spec: self.spec.clone(),
        }
    }

    /// The image as a PGM-16 file; loading it reproduces `slice.image`.
    pub fn to_pgm(&self) -> Vec<u8> {
        let n = self.spec.image_size;
        write_pgm16(n, n, &self.samples)
    }
}

/// Renders a phantom. Deterministic for a given spec (including its seed).
pub fn generate(spec: &PhantomSpec) -> Result<Phantom, PhantomError> {
    spec.validate()?;
    spec.check_containment()?;
    let n = spec.image_size;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = (spec.noise_sigma > 0.0)
        .then(|| Normal::new(0.0, spec.noise_sigma).expect("finite positive sigma"));
    let lo = 1.0 / 65535.0;
    let hi = 1.0 - lo;
    let mut samples = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            let mut v = spec.intensity_at(x as f64 + 0.5, y as f64 + 0.5);
            if let Some(dist) = noise {
                v += rng.sample(dist);
            }
            samples.push((v.clamp(lo, hi) * 65535.0).round() as u16);
        }
    }
    let stored: Vec<i32> = samples.iter().map(|&s| i32::from(s)).collect();
    let source_id = format!("phantom_{}_{}", spec.kind(), spec.seed);
    let slice = StudySlice::from_stored(n, n, &stored, 16, source_id)
        .map_err(|e| PhantomError::InvalidSpec(e.to_string()))?;
    Ok(Phantom {
        slice,
        samples,
        lumen_roi: spec.lumen_roi(),
        clot_roi: spec.clot_roi(),
        expected: spec.kind().expected(),
        spec: spec.clone(),
    })
}

/// A corpus member named `case_<kind>_<index>`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCase {
    pub name: String,
    pub phantom: Phantom,
}

fn mix_seed(base: u64, kind: PhantomKind, index: usize) -> u64 {
    // splitmix64 finalizer over (base, kind, index)
    let kind_tag = PhantomKind::ALL.iter().position(|&k| k == kind).unwrap() as u64;
    let mut z = base.wrapping_add(
        0x9E37_79B9_7F4A_7C15u64.wrapping_mul(kind_tag * 1_000_003 + index as u64 + 1),
    );
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Default geometry with jittered size, position, rotation and noise seed.
pub fn jittered_spec(kind: PhantomKind, seed: u64, noise_sigma: f64) -> PhantomSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5_5A5A_0F0F_F0F0);
    let mut spec = PhantomSpec::default_for(kind, seed);
    spec.noise_sigma = noise_sigma;
    let lumen = &mut spec.lumen;
    lumen.cx += rng.random_range(-8.0..=8.0);
    lumen.cy += rng.random_range(-8.0..=8.0);
    lumen.a = rng.random_range(75.0..=90.0);
    lumen.b = rng.random_range(50.0..=60.0);
    lumen.rot = rng.random_range(-0.5..=0.5);
    let (s, c) = lumen.rot.sin_cos();
    let along: f64 = rng.random_range(-20.0..=20.0);
    let across: f64 = rng.random_range(-8.0..=8.0);
    let cx = lumen.cx + along * c - across * s;
    let cy = lumen.cy + along * s + across * c;
    let lumen_rot = lumen.rot;
    spec.inclusion = match kind {
        PhantomKind::RealClot => {
            let radius = 12.0 * rng.random_range(0.7..=1.3);
            Inclusion::RealClot {
                cx,
                cy,
                radius,
                intensity_ratio: rng.random_range(0.35..=0.45),
                roi_radius: 2.0 * radius,
            }
        }
        PhantomKind::Turbulence => {
            let length_sigma = rng.random_range(8.0..=12.0);
            let ratio = rng.random_range(3.0..=5.0);
            Inclusion::Turbulence {
                cx,
                cy,
                length_sigma,
                width_sigma: length_sigma / ratio,
                rot: lumen_rot + rng.random_range(-0.3..=0.3),
                peak_attenuation: rng.random_range(0.12..=0.22),
                roi_a: 3.0 * length_sigma,
                roi_b: 3.0 * length_sigma / ratio,
            }
        }
        PhantomKind::CleanLumen => {
            let roi_a = rng.random_range(18.0..=30.0);
            Inclusion::CleanLumen {
                roi_cx: cx,
                roi_cy: cy,
                roi_a,
                roi_b: roi_a / 3.0,
                roi_rot: lumen_rot + rng.random_range(-0.3..=0.3),
            }
        }
    };
    spec
}

/// `n_per_kind` jittered cases of each kind, grouped by kind.
pub fn generate_corpus(
    n_per_kind: usize,
    base_seed: u64,
    noise_sigma: f64,
) -> Result<Vec<LabeledCase>, PhantomError> {
    if n_per_kind == 0 {
        return Err(PhantomError::InvalidSpec(
            "n_per_kind must be at least 1".into(),
        ));
    }
    corpus_for_kinds(&PhantomKind::ALL, n_per_kind, base_seed, noise_sigma)
}

/// Like [`generate_corpus`] for a chosen subset of kinds.
pub fn corpus_for_kinds(
    kinds: &[PhantomKind],
    n_per_kind: usize,
    base_seed: u64,
    noise_sigma: f64,
) -> Result<Vec<LabeledCase>, PhantomError> {
    let mut cases = Vec::with_capacity(kinds.len() * n_per_kind);
    for &kind in kinds {
        for index in 0..n_per_kind {
            let spec = jittered_spec(kind, mix_seed(base_seed, kind, index), noise_sigma);
            let mut phantom = generate(&spec)?;
            let name = format!("case_{kind}_{index:03}");
            phantom.slice.source_id = name.clone();
            cases.push(LabeledCase { name, phantom });
        }
    }
    Ok(cases)
}
