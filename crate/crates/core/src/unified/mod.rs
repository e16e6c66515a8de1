//! The shared transform every quality feature consumes: SAST rescaling,
//! multi-level 2-D Haar decomposition, and CSF subband weighting.
//!
//! The transform is computed once per plane per frame and the resulting
//! pyramids are immutable, so any number of features can share them. A
//! thread-local instrumentation counter records how many base transforms
//! actually ran, which the test suite uses to verify the sharing contract.

pub mod haar;

use crate::frameio::PlanarFrame;
use crate::plane::Plane;

/// Default decomposition depth: the coarsest-scale features and the 4-scale
/// VIF side channel both need four levels.
pub const DEFAULT_LEVELS: usize = 4;

/// Golden-ratio reference ratio used by the SAST approximation.
const SAST_REFERENCE_RATIO: f64 = 1.618;

/// Snap tolerance around powers of two for the SAST factor.
const SAST_SNAP_TOLERANCE: f64 = 0.15;

/// Errors from the unified-transform layer.
#[derive(Debug, thiserror::Error)]
pub enum UnifiedError {
    #[error("level count {0} must be >= 1")]
    BadLevelCount(usize),
    #[error("plane {width}x{height} too small for {levels} wavelet levels")]
    PlaneTooSmall {
        width: usize,
        height: usize,
        levels: usize,
    },
    #[error("SAST factor {0} must be positive")]
    BadSastFactor(f64),
    #[error("rescale output {0}x{1} is degenerate")]
    RescaleTooSmall(usize, usize),
    #[error("CSF weights already applied to this pyramid")]
    CsfAlreadyApplied,
    #[error("CSF weight table covers {have} levels, pyramid has {need}")]
    CsfLevelMismatch { have: usize, need: usize },
    #[error("viewing geometry requires distance_to_height > 0, got {0}")]
    BadGeometry(f64),
}

/// Viewing setup: distance-to-height ratio and display height in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewingGeometry {
    pub distance_to_height: f64,
    pub display_height_px: u32,
}

impl ViewingGeometry {
    pub fn new(distance_to_height: f64, display_height_px: u32) -> Result<Self, UnifiedError> {
        if distance_to_height.is_nan() || distance_to_height <= 0.0 {
            return Err(UnifiedError::BadGeometry(distance_to_height));
        }
        Ok(ViewingGeometry {
            distance_to_height,
            display_height_px,
        })
    }
}

impl Default for ViewingGeometry {
    /// 4K viewing: D/H = 1.5 at a 2160-pixel display.
    fn default() -> Self {
        ViewingGeometry {
            distance_to_height: 1.5,
            display_height_px: 2160,
        }
    }
}

/// SAST scale factor `(D/H) / 1.618`.
pub fn sast_factor(geom: &ViewingGeometry) -> f64 {
    geom.distance_to_height / SAST_REFERENCE_RATIO
}

/// Snaps a scale factor to the nearest power of two when within 15%,
/// so the two canonical geometries (factor ~1 and ~2) avoid resampling blur.
pub fn snap_factor(factor: f64) -> f64 {
    if factor <= 0.0 {
        return factor;
    }
    let pow = factor.log2().round();
    let snapped = pow.exp2();
    if (factor / snapped - 1.0).abs() <= SAST_SNAP_TOLERANCE {
        snapped
    } else {
        factor
    }
}

/// Rescales a plane by the (snapped) SAST factor using bilinear
/// interpolation; a snapped factor of exactly 1 is a bit-exact pass-through.
pub fn sast_rescale(plane: &Plane, factor: f64) -> Result<Plane, UnifiedError> {
    if factor.is_nan() || factor <= 0.0 {
        return Err(UnifiedError::BadSastFactor(factor));
    }
    let applied = snap_factor(factor);
    if applied == 1.0 {
        return Ok(plane.clone());
    }
    let ow = (plane.width() as f64 / applied).round() as usize;
    let oh = (plane.height() as f64 / applied).round() as usize;
    if ow < 2 || oh < 2 {
        return Err(UnifiedError::RescaleTooSmall(ow, oh));
    }
    Ok(bilinear_resize(plane, ow, oh))
}

/// Bilinear resize with centers-aligned sampling and clamped taps.
fn bilinear_resize(plane: &Plane, ow: usize, oh: usize) -> Plane {
    let (w, h) = plane.dims();
    let sx = w as f64 / ow as f64;
    let sy = h as f64 / oh as f64;
    let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
    let mut out = Plane::new(ow, oh);
    for yo in 0..oh {
        let fy = ((yo as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let ty = fy - y0 as f64;
        for xo in 0..ow {
            let fx = ((xo as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let tx = fx - x0 as f64;
            let top = lerp(plane.get(x0, y0), plane.get(x1, y0), tx);
            let bot = lerp(plane.get(x0, y1), plane.get(x1, y1), tx);
            out.set(xo, yo, lerp(top, bot, ty));
        }
    }
    out
}

/// The four subbands of one decomposition level.
#[derive(Debug, Clone)]
pub struct LevelBands {
    /// Approximation (low-pass both axes).
    pub a: Plane,
    /// Horizontal-frequency detail (high-pass along x).
    pub h: Plane,
    /// Vertical-frequency detail (high-pass along y).
    pub v: Plane,
    /// Diagonal detail.
    pub d: Plane,
}

/// Multi-level Haar decomposition of one plane, optionally CSF-weighted.
#[derive(Debug, Clone)]
pub struct WaveletPyramid {
    pub input_width: usize,
    pub input_height: usize,
    pub levels: Vec<LevelBands>,
    pub csf_applied: bool,
}

impl WaveletPyramid {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Subbands at 1-indexed `level`.
    pub fn level(&self, level: usize) -> &LevelBands {
        &self.levels[level - 1]
    }

    /// Dimensions of the plane that level `l` (0-indexed) was computed from.
    fn level_parent_dims(&self, l: usize) -> (usize, usize) {
        if l == 0 {
            (self.input_width, self.input_height)
        } else {
            self.levels[l - 1].a.dims()
        }
    }

    /// Total energy of the non-redundant coefficient set (detail bands at
    /// every level plus the deepest approximation).
    pub fn coefficient_energy(&self) -> f64 {
        let mut sum = self.levels.last().map_or(0.0, |b| b.a.energy());
        for bands in &self.levels {
            sum += bands.h.energy() + bands.v.energy() + bands.d.energy();
        }
        sum
    }
}

/// Multi-level Haar analysis; see [`haar::forward`].
pub fn haar_dwt(plane: &Plane, levels: usize) -> Result<WaveletPyramid, UnifiedError> {
    haar::forward(plane, levels)
}

/// Per-subband contrast-sensitivity weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CsfWeights {
    /// One weight per level for the approximation band (default 1).
    pub approx: Vec<f64>,
    /// One `[h, v, d]` triple per level.
    pub detail: Vec<[f64; 3]>,
}

impl CsfWeights {
    /// Identity weights (no perceptual shaping).
    pub fn identity(levels: usize) -> Self {
        CsfWeights {
            approx: vec![1.0; levels],
            detail: vec![[1.0; 3]; levels],
        }
    }

    /// Mannos-Sakrison weights for a display sampled at `ppd` pixels per
    /// degree: the detail bands at level `l` sit at `ppd / 2^(l+1)` cycles
    /// per degree.
    pub fn from_ppd(ppd: f64, levels: usize) -> Self {
        let detail = (1..=levels)
            .map(|l| {
                let f = ppd / (1u64 << (l + 1)) as f64;
                [mannos_weight(f); 3]
            })
            .collect();
        CsfWeights {
            approx: vec![1.0; levels],
            detail,
        }
    }

    pub fn levels(&self) -> usize {
        self.detail.len()
    }

    /// Audit dump: `level,orientation,weight` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,orientation,weight\n");
        for (i, (&a, d)) in self.approx.iter().zip(self.detail.iter()).enumerate() {
            let level = i + 1;
            out.push_str(&format!("{level},A,{a}\n"));
            for (name, w) in [("H", d[0]), ("V", d[1]), ("D", d[2])] {
                out.push_str(&format!("{level},{name},{w}\n"));
            }
        }
        out
    }
}

/// Mannos-Sakrison contrast sensitivity at `f` cycles per degree:
/// `2.6 (0.0192 + 0.114 f) exp(-(0.114 f)^1.1)`. Positive for all `f > 0`.
pub fn mannos_weight(f: f64) -> f64 {
    2.6 * (0.0192 + 0.114 * f) * (-(0.114 * f).powf(1.1)).exp()
}

/// Pixels per degree of visual angle subtended by the display.
pub fn pixels_per_degree(geom: &ViewingGeometry) -> f64 {
    let degrees =
        2.0 * (1.0 / (2.0 * geom.distance_to_height)).atan() * 180.0 / std::f64::consts::PI;
    geom.display_height_px as f64 / degrees
}

/// CSF weights for the luma plane of the given geometry.
pub fn csf_weights(geom: &ViewingGeometry, levels: usize) -> CsfWeights {
    CsfWeights::from_ppd(pixels_per_degree(geom), levels)
}

/// Multiplies each subband by its scalar weight. Applying twice is an error.
pub fn apply_csf(
    mut pyr: WaveletPyramid,
    weights: &CsfWeights,
) -> Result<WaveletPyramid, UnifiedError> {
    if pyr.csf_applied {
        return Err(UnifiedError::CsfAlreadyApplied);
    }
    if weights.levels() < pyr.depth() {
        return Err(UnifiedError::CsfLevelMismatch {
            have: weights.levels(),
            need: pyr.depth(),
        });
    }
    for (l, bands) in pyr.levels.iter_mut().enumerate() {
        let scale = |p: &mut Plane, w: f64| {
            if w != 1.0 {
                for v in p.as_mut_slice() {
                    *v *= w;
                }
            }
        };
        scale(&mut bands.a, weights.approx[l]);
        scale(&mut bands.h, weights.detail[l][0]);
        scale(&mut bands.v, weights.detail[l][1]);
        scale(&mut bands.d, weights.detail[l][2]);
    }
    pyr.csf_applied = true;
    Ok(pyr)
}

/// What a transform invocation was for; the instrumentation counters are
/// kept separately per kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    /// The shared per-plane transform every base feature consumes.
    Base,
    /// Transform of an HDRMAX-preprocessed plane (side-channel features).
    Hdrmax,
    /// Transform of a temporal difference plane.
    TemporalDiff,
}

/// Per-thread instrumentation counts of executed plane transforms.
pub mod instrumentation {
    use std::cell::Cell;

    thread_local! {
        static COUNTS: Cell<[u64; 3]> = const { Cell::new([0; 3]) };
    }

    pub(super) fn record(kind: super::TransformKind) {
        COUNTS.with(|c| {
            let mut v = c.get();
            v[kind_index(kind)] += 1;
            c.set(v);
        });
    }

    fn kind_index(kind: super::TransformKind) -> usize {
        match kind {
            super::TransformKind::Base => 0,
            super::TransformKind::Hdrmax => 1,
            super::TransformKind::TemporalDiff => 2,
        }
    }

    /// Base plane transforms executed on this thread since the last reset.
    pub fn base_transform_count() -> u64 {
        COUNTS.with(|c| c.get()[0])
    }

    /// `[base, hdrmax, temporal_diff]` counts for this thread.
    pub fn counts() -> [u64; 3] {
        COUNTS.with(|c| c.get())
    }

    pub fn reset() {
        COUNTS.with(|c| c.set([0; 3]));
    }
}

/// The full per-plane pipeline: SAST rescale, Haar analysis, CSF weighting.
/// Records one instrumentation count of the given kind.
pub fn transform_plane(
    plane: &Plane,
    factor: f64,
    levels: usize,
    weights: Option<&CsfWeights>,
    kind: TransformKind,
) -> Result<WaveletPyramid, UnifiedError> {
    let rescaled = sast_rescale(plane, factor)?;
    let min_dim = 1usize << levels;
    if rescaled.width() < min_dim || rescaled.height() < min_dim {
        return Err(UnifiedError::PlaneTooSmall {
            width: rescaled.width(),
            height: rescaled.height(),
            levels,
        });
    }
    let pyr = haar::forward(&rescaled, levels)?;
    let pyr = match weights {
        Some(w) => apply_csf(pyr, w)?,
        None => pyr,
    };
    instrumentation::record(kind);
    Ok(pyr)
}

/// Per-plane pyramids of one frame.
#[derive(Debug, Clone)]
pub struct FramePyramids {
    pub y: WaveletPyramid,
    pub cb: WaveletPyramid,
    pub cr: WaveletPyramid,
}

/// Applies the unified transform to all three planes of a frame. Chroma
/// planes reuse the luma CSF at their own sampling density (their
/// pixels-per-degree scales with plane resolution).
pub fn unified_transform(
    frame: &PlanarFrame,
    geom: &ViewingGeometry,
    levels: usize,
) -> Result<FramePyramids, UnifiedError> {
    let factor = sast_factor(geom);
    let ppd = pixels_per_degree(geom);
    let luma_weights = CsfWeights::from_ppd(ppd, levels);
    let chroma_ppd = ppd * frame.cb.height() as f64 / frame.y.height() as f64;
    let chroma_weights = CsfWeights::from_ppd(chroma_ppd, levels);
    Ok(FramePyramids {
        y: transform_plane(
            &frame.y,
            factor,
            levels,
            Some(&luma_weights),
            TransformKind::Base,
        )?,
        cb: transform_plane(
            &frame.cb,
            factor,
            levels,
            Some(&chroma_weights),
            TransformKind::Base,
        )?,
        cr: transform_plane(
            &frame.cr,
            factor,
            levels,
            Some(&chroma_weights),
            TransformKind::Base,
        )?,
    })
}
