//! Luminance transforms: the ST-2084 PQ EOTF, PU21 perceptual encoding, and
//! the HDRMAX preprocessing chains (local normalization followed by
//! expansive exponential non-linearities).
//!
//! HDRMAX operates on `[0, 1]`-normalized code values: the exponential
//! constants (0.5, -5, 4) only produce bounded, usable dynamic ranges on
//! order-unity inputs.

use once_cell::sync::Lazy;
use serde::Deserialize;

use crate::kernels::{gaussian_blur, sliding_max, sliding_min};
use crate::plane::Plane;

/// Peak luminance representable by PQ, in cd/m².
pub const PQ_PEAK_NITS: f64 = 10000.0;

// SMPTE ST-2084 rational-polynomial constants.
const PQ_M1: f64 = 2610.0 / 16384.0;
const PQ_M2: f64 = 2523.0 * 128.0 / 4096.0;
const PQ_C1: f64 = 3424.0 / 4096.0;
const PQ_C2: f64 = 2413.0 * 32.0 / 4096.0;
const PQ_C3: f64 = 2392.0 * 32.0 / 4096.0;

/// Errors from the transfer-function layer.
#[derive(Debug, thiserror::Error)]
pub enum TransferError {
    #[error("PQ code value {0} outside [0, 1]")]
    CodeOutOfRange(f64),
    #[error("negative luminance {0} cd/m²")]
    NegativeLuminance(f64),
    #[error("window size {0} must be odd and >= 3")]
    BadWindow(usize),
    #[error("gaussian sigma must be positive, got {0}")]
    BadSigma(f64),
    #[error("bundled PU21 coefficient table is invalid: {0}")]
    BadCoefficients(String),
}

/// PQ EOTF: decodes a non-linear code value in `[0, 1]` to absolute
/// luminance in cd/m². Monotone, with `pq_eotf(0) = 0` and
/// `pq_eotf(1) = 10000` exactly.
pub fn pq_eotf(code: f64) -> Result<f64, TransferError> {
    if !(0.0..=1.0).contains(&code) {
        return Err(TransferError::CodeOutOfRange(code));
    }
    if code == 0.0 {
        return Ok(0.0);
    }
    let vp = code.powf(1.0 / PQ_M2);
    let num = (vp - PQ_C1).max(0.0);
    let den = PQ_C2 - PQ_C3 * vp;
    Ok(PQ_PEAK_NITS * (num / den).powf(1.0 / PQ_M1))
}

/// PU21 encoder (banding + glare fit). Coefficients come from a bundled
/// table and are validated once at first use.
#[derive(Debug, Clone, Deserialize)]
pub struct Pu21 {
    variant: String,
    coefficients: [f64; 7],
}

static PU21_BANDING_GLARE: Lazy<Pu21> = Lazy::new(|| {
    let table: Pu21 = serde_json::from_str(include_str!("../data/pu21_banding_glare.json"))
        .expect("bundled PU21 table must parse");
    table
        .validate()
        .expect("bundled PU21 table must satisfy the encoder properties");
    table
});

impl Pu21 {
    /// The bundled banding+glare variant.
    pub fn banding_glare() -> &'static Pu21 {
        &PU21_BANDING_GLARE
    }

    pub fn variant(&self) -> &str {
        &self.variant
    }

    /// Encodes absolute luminance (cd/m²) to a perceptually uniform value.
    /// Luminance below 0.005 is clamped; negative luminance is an error.
    pub fn encode(&self, luminance: f64) -> Result<f64, TransferError> {
        if luminance < 0.0 {
            return Err(TransferError::NegativeLuminance(luminance));
        }
        Ok(self.encode_clamped(luminance))
    }

    fn encode_clamped(&self, luminance: f64) -> f64 {
        let [p0, p1, p2, p3, p4, p5, p6] = self.coefficients;
        let y = luminance.clamp(0.005, PQ_PEAK_NITS);
        let yp = y.powf(p3);
        p6 * (((p0 + p1 * yp) / (1.0 + p2 * yp)).powf(p4) - p5)
    }

    /// Encoded value at the PQ peak; used to rescale PU values to `[0, 1]`.
    pub fn peak(&self) -> f64 {
        self.encode_clamped(PQ_PEAK_NITS)
    }

    /// Checks strict monotonicity and the near-zero anchor at 0.005 cd/m².
    fn validate(&self) -> Result<(), TransferError> {
        let at_floor = self.encode_clamped(0.005);
        if at_floor.abs() >= 1e-3 {
            return Err(TransferError::BadCoefficients(format!(
                "encode(0.005) = {at_floor}, expected ~0"
            )));
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=1000 {
            // log-spaced grid over the full domain
            let lum = 0.005 * (PQ_PEAK_NITS / 0.005).powf(i as f64 / 1000.0);
            let v = self.encode_clamped(lum);
            if v <= prev {
                return Err(TransferError::BadCoefficients(format!(
                    "not strictly increasing near {lum} cd/m²"
                )));
            }
            prev = v;
        }
        Ok(())
    }
}

/// Convenience wrapper over the bundled banding+glare encoder.
pub fn pu21_encode(luminance: f64) -> Result<f64, TransferError> {
    Pu21::banding_glare().encode(luminance)
}

/// Window configuration for the HDRMAX local normalizations.
#[derive(Debug, Clone, Copy)]
pub struct LocalNormConfig {
    minmax_window: usize,
    meansub_window: usize,
    gaussian_sigma: f64,
}

impl LocalNormConfig {
    /// Windows must be odd and at least 3.
    pub fn new(
        minmax_window: usize,
        meansub_window: usize,
        gaussian_sigma: Option<f64>,
    ) -> Result<Self, TransferError> {
        for w in [minmax_window, meansub_window] {
            if w < 3 || w % 2 == 0 {
                return Err(TransferError::BadWindow(w));
            }
        }
        let sigma = gaussian_sigma.unwrap_or(meansub_window as f64 / 6.0);
        if sigma <= 0.0 {
            return Err(TransferError::BadSigma(sigma));
        }
        Ok(LocalNormConfig {
            minmax_window,
            meansub_window,
            gaussian_sigma: sigma,
        })
    }

    pub fn minmax_window(&self) -> usize {
        self.minmax_window
    }

    pub fn meansub_window(&self) -> usize {
        self.meansub_window
    }

    pub fn gaussian_sigma(&self) -> f64 {
        self.gaussian_sigma
    }
}

impl Default for LocalNormConfig {
    /// 17x17 min-max window, 31x31 Gaussian window with sigma = 31/6.
    fn default() -> Self {
        LocalNormConfig::new(17, 31, None).expect("default windows are valid")
    }
}

/// Local min-max normalization to `[-1, 1]` over the configured window,
/// edge-replicated. A flat window (max == min) maps to 0.
pub fn local_minmax_normalize(plane: &Plane, cfg: &LocalNormConfig) -> Plane {
    let radius = cfg.minmax_window / 2;
    let min = sliding_min(plane, radius);
    let max = sliding_max(plane, radius);
    let mut out = Plane::new(plane.width(), plane.height());
    for y in 0..plane.height() {
        for x in 0..plane.width() {
            let (lo, hi, v) = (min.get(x, y), max.get(x, y), plane.get(x, y));
            let norm = if hi > lo {
                2.0 * ((v - lo) / (hi - lo)) - 1.0
            } else {
                0.0
            };
            out.set(x, y, norm);
        }
    }
    out
}

/// Local mean subtraction: the plane minus its Gaussian-weighted local mean
/// (unit-sum kernel truncated at the configured window, edge-replicated).
pub fn local_meansub_normalize(plane: &Plane, cfg: &LocalNormConfig) -> Plane {
    let mean = gaussian_blur(plane, cfg.gaussian_sigma, cfg.meansub_window / 2);
    plane.zip_map(&mean, |v, m| v - m)
}

/// Mathematical sign: -1, 0, or +1 (unlike `f64::signum`, zero maps to 0).
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// The HDRMAX1 double-exponential, in the continuous odd-symmetric form
/// `sgn(x) * (exp(4|x|) - 1)`.
pub fn hdrmax1(x: f64) -> f64 {
    sgn(x) * ((4.0 * x.abs()).exp() - 1.0)
}

/// Literal transcription `sgn(x) * exp(4|x|) - 1`, kept for compatibility.
/// Discontinuous at 0 (limits 0 from above, -2 from below).
pub fn hdrmax1_literal(x: f64) -> f64 {
    sgn(x) * (4.0 * x.abs()).exp() - 1.0
}

/// Bright-emphasizing HDRMAX2 branch: `exp(0.5 x)`.
pub fn hdrmax2_pos(x: f64) -> f64 {
    (0.5 * x).exp()
}

/// Dark-emphasizing HDRMAX2 branch: `exp(-5 x)`.
pub fn hdrmax2_neg(x: f64) -> f64 {
    (-5.0 * x).exp()
}

/// One branch of the HDRMAX preprocessing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HdrmaxVariant {
    /// min-max normalization followed by [`hdrmax1`].
    H1,
    /// mean subtraction followed by [`hdrmax2_pos`].
    H2Pos,
    /// mean subtraction followed by [`hdrmax2_neg`].
    H2Neg,
}

impl HdrmaxVariant {
    pub fn name(&self) -> &'static str {
        match self {
            HdrmaxVariant::H1 => "H1",
            HdrmaxVariant::H2Pos => "H2-POS",
            HdrmaxVariant::H2Neg => "H2-NEG",
        }
    }
}

/// Which reading of the HDRMAX1 non-linearity to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Hdrmax1Form {
    /// Continuous odd-symmetric `sgn(x)(exp(4|x|) - 1)`.
    #[default]
    Symmetric,
    /// Compatibility form `sgn(x) exp(4|x|) - 1`, discontinuous at 0.
    Literal,
}

/// Applies one HDRMAX branch to a `[0, 1]`-normalized luma plane.
pub fn hdrmax_transform(luma: &Plane, variant: HdrmaxVariant, cfg: &LocalNormConfig) -> Plane {
    hdrmax_transform_with(luma, variant, cfg, Hdrmax1Form::default())
}

/// [`hdrmax_transform`] with an explicit choice of the H1 form.
pub fn hdrmax_transform_with(
    luma: &Plane,
    variant: HdrmaxVariant,
    cfg: &LocalNormConfig,
    h1_form: Hdrmax1Form,
) -> Plane {
    match variant {
        HdrmaxVariant::H1 => {
            let normalized = local_minmax_normalize(luma, cfg);
            match h1_form {
                Hdrmax1Form::Symmetric => normalized.map(hdrmax1),
                Hdrmax1Form::Literal => normalized.map(hdrmax1_literal),
            }
        }
        HdrmaxVariant::H2Pos => local_meansub_normalize(luma, cfg).map(hdrmax2_pos),
        HdrmaxVariant::H2Neg => local_meansub_normalize(luma, cfg).map(hdrmax2_neg),
    }
}

/// A sampled non-linearity, for curve emission and plotting.
#[derive(Debug, Clone)]
pub struct NonlinearityCurve {
    pub kind: CurveKind,
    pub domain: (f64, f64),
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Hdrmax1,
    Hdrmax2Pos,
    Hdrmax2Neg,
    Pu21,
    PqEotf,
}

impl CurveKind {
    fn eval(&self, x: f64) -> f64 {
        match self {
            CurveKind::Hdrmax1 => hdrmax1(x),
            CurveKind::Hdrmax2Pos => hdrmax2_pos(x),
            CurveKind::Hdrmax2Neg => hdrmax2_neg(x),
            CurveKind::Pu21 => Pu21::banding_glare().encode_clamped(x),
            CurveKind::PqEotf => pq_eotf(x.clamp(0.0, 1.0)).unwrap_or(0.0),
        }
    }
}

/// Samples a curve uniformly over `domain` at `n >= 2` points.
pub fn sample_curve(kind: CurveKind, domain: (f64, f64), n: usize) -> NonlinearityCurve {
    assert!(n >= 2 && domain.1 > domain.0);
    let half = (n - 1) as f64 / 2.0;
    let mid = (domain.0 + domain.1) / 2.0;
    let samples = (0..n)
        .map(|i| {
            // Centered grid so symmetric domains sample exactly antisymmetric x.
            let x = mid + (i as f64 - half) / half * (domain.1 - domain.0) / 2.0;
            (x, kind.eval(x))
        })
        .collect::<Vec<_>>();
    debug_assert!(samples.windows(2).all(|w| w[1].0 > w[0].0));
    NonlinearityCurve {
        kind,
        domain,
        samples,
    }
}

/// CSV of the three HDRMAX curves over `x in [-1, 1]`, header
/// `x,hdrmax1,hdrmax2_pos,hdrmax2_neg`, sampled at `n` points.
pub fn hdrmax_curves_csv(n: usize) -> String {
    let mut out = String::from("x,hdrmax1,hdrmax2_pos,hdrmax2_neg\n");
    let half = (n - 1) as f64 / 2.0;
    for i in 0..n {
        let x = (i as f64 - half) / half;
        out.push_str(&format!(
            "{},{},{},{}\n",
            x,
            hdrmax1(x),
            hdrmax2_pos(x),
            hdrmax2_neg(x)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn pq_endpoints_exact() {
        assert_eq!(pq_eotf(0.0).unwrap(), 0.0);
        assert_eq!(pq_eotf(1.0).unwrap(), 10000.0);
    }

    #[test]
    fn pq_reference_white_anchor() {
        // ST-2084 closed form puts 100 cd/m² near code 0.5081.
        let nits = pq_eotf(0.5081).unwrap();
        assert!((nits - 100.0).abs() <= 1.0, "got {nits}");
    }

    #[test]
    fn pq_domain_errors() {
        assert!(matches!(
            pq_eotf(-0.1),
            Err(TransferError::CodeOutOfRange(_))
        ));
        assert!(matches!(
            pq_eotf(1.5),
            Err(TransferError::CodeOutOfRange(_))
        ));
    }

    #[test]
    fn pq_monotone_on_grid() {
        let mut prev = -1.0;
        for i in 0..=10_000 {
            let v = pq_eotf(i as f64 / 10_000.0).unwrap();
            assert!(v > prev || (i == 0 && v == 0.0));
            prev = v;
        }
    }

    #[test]
    fn pu21_floor_near_zero_and_monotone_composition() {
        let pu = Pu21::banding_glare();
        assert!(pu.encode(0.005).unwrap().abs() < 1e-3);
        assert!(pu.encode(100.0).unwrap() < pu.encode(1000.0).unwrap());
        assert!(matches!(
            pu.encode(-1.0),
            Err(TransferError::NegativeLuminance(_))
        ));

        // pu21(pq(x)) is non-decreasing over [0.01, 1] (the 0.005 cd/m² input
        // clamp makes it flat for codes below ~0.015) and strictly
        // increasing once the luminance clears the clamp.
        let mut prev = f64::NEG_INFINITY;
        for i in 0..1000 {
            let x = 0.01 + 0.99 * i as f64 / 999.0;
            let v = pu.encode(pq_eotf(x).unwrap()).unwrap();
            if x >= 0.02 {
                assert!(v > prev, "composition not increasing at x={x}");
            } else {
                assert!(v >= prev, "composition decreasing at x={x}");
            }
            prev = v;
        }
    }

    #[test]
    fn hdrmax_point_values() {
        assert_eq!(hdrmax1(0.0), 0.0);
        assert!((hdrmax1(1.0) - 53.598150033144236).abs() < 1e-12);
        assert!((hdrmax1(-1.0) + 53.598150033144236).abs() < 1e-12);
        assert_eq!(hdrmax2_pos(0.0), 1.0);
        assert_eq!(hdrmax2_neg(0.0), 1.0);
        assert!((hdrmax2_pos(1.0) - 0.5f64.exp()).abs() < 1e-15);
        assert!((hdrmax2_neg(-1.0) - 5f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn hdrmax1_odd_symmetry() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let x = rng.gen_range(-1.0..1.0);
            assert!((hdrmax1(-x) + hdrmax1(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn hdrmax1_literal_is_discontinuous_at_zero() {
        assert_eq!(hdrmax1_literal(0.0), -1.0);
        assert!((hdrmax1_literal(1e-12) - 0.0).abs() < 1e-9);
        assert!((hdrmax1_literal(-1e-12) + 2.0).abs() < 1e-9);
    }

    #[test]
    fn minmax_normalize_hits_extremes_and_bounds() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let p = Plane::from_vec((0..40 * 30).map(|_| rng.gen::<f64>()).collect(), 40, 30);
        let cfg = LocalNormConfig::default();
        let n = local_minmax_normalize(&p, &cfg);
        let r = cfg.minmax_window() / 2;
        assert!(n.iter().all(|&v| (-1.0..=1.0).contains(&v)));
        // A pixel equal to its window extremum maps exactly to ±1.
        let min = sliding_min(&p, r);
        let max = sliding_max(&p, r);
        let mut saw_lo = false;
        let mut saw_hi = false;
        for y in 0..30 {
            for x in 0..40 {
                if p.get(x, y) == min.get(x, y) {
                    assert_eq!(n.get(x, y), -1.0);
                    saw_lo = true;
                }
                if p.get(x, y) == max.get(x, y) {
                    assert_eq!(n.get(x, y), 1.0);
                    saw_hi = true;
                }
            }
        }
        assert!(saw_lo && saw_hi);
    }

    #[test]
    fn constant_plane_normalizations() {
        let cfg = LocalNormConfig::default();
        let p = Plane::constant(48, 40, 0.42);
        let mm = local_minmax_normalize(&p, &cfg);
        assert!(mm.iter().all(|&v| v == 0.0));
        let ms = local_meansub_normalize(&p, &cfg);
        assert!(ms.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn meansub_impulse_response() {
        let cfg = LocalNormConfig::default();
        let mut p = Plane::new(65, 65);
        p.set(32, 32, 1.0);
        let ms = local_meansub_normalize(&p, &cfg);
        let k = crate::kernels::gaussian_kernel(cfg.gaussian_sigma(), cfg.meansub_window() / 2);
        let center_weight = k[15] * k[15];
        assert!((ms.get(32, 32) - (1.0 - center_weight)).abs() < 1e-12);
        // outputs of a [0,1] plane stay inside (-1, 1)
        assert!(ms.iter().all(|&v| v > -1.0 && v < 1.0));
    }

    #[test]
    fn hdrmax_transform_constant_planes() {
        let cfg = LocalNormConfig::default();
        let p = Plane::constant(40, 40, 0.7);
        let h1 = hdrmax_transform(&p, HdrmaxVariant::H1, &cfg);
        assert!(h1.iter().all(|&v| v == 0.0));
        let pos = hdrmax_transform(&p, HdrmaxVariant::H2Pos, &cfg);
        assert!(pos.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        // the literal compatibility form shifts a flat plane to -1
        let lit = hdrmax_transform_with(&p, HdrmaxVariant::H1, &cfg, Hdrmax1Form::Literal);
        assert!(lit.iter().all(|&v| v == -1.0));
    }

    #[test]
    fn hdrmax_transform_range_bound() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(9);
        let p = Plane::from_vec((0..32 * 32).map(|_| rng.gen::<f64>()).collect(), 32, 32);
        let bound = 4f64.exp() - 1.0;
        let h1 = hdrmax_transform(&p, HdrmaxVariant::H1, &LocalNormConfig::default());
        assert!(h1.iter().all(|&v| v.abs() <= bound));
    }

    #[test]
    fn hdrmax_translation_equivariance_interior() {
        let cfg = LocalNormConfig::default();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(13);
        let (w, h) = (56, 48);
        let base = Plane::from_vec((0..w * h).map(|_| rng.gen::<f64>()).collect(), w, h);
        let (dx, dy) = (3usize, 2usize);
        let mut shifted = Plane::new(w, h);
        for y in 0..h {
            for x in 0..w {
                let src_x = x.saturating_sub(dx);
                let src_y = y.saturating_sub(dy);
                shifted.set(x, y, base.get(src_x, src_y));
            }
        }
        for variant in [
            HdrmaxVariant::H1,
            HdrmaxVariant::H2Pos,
            HdrmaxVariant::H2Neg,
        ] {
            let a = hdrmax_transform(&base, variant, &cfg);
            let b = hdrmax_transform(&shifted, variant, &cfg);
            let margin = cfg.meansub_window() / 2;
            for y in margin + dy..h - margin {
                for x in margin + dx..w - margin {
                    let d = (a.get(x - dx, y - dy) - b.get(x, y)).abs();
                    assert!(d < 1e-12, "variant {variant:?} at ({x},{y}): {d}");
                }
            }
        }
    }

    #[test]
    fn curve_sampling_properties() {
        let c = sample_curve(CurveKind::Hdrmax1, (-1.0, 1.0), 1001);
        assert_eq!(c.samples.len(), 1001);
        assert_eq!(c.samples[500].0, 0.0);
        assert!(c.samples.windows(2).all(|w| w[1].0 > w[0].0));
        // exact odd grid symmetry
        for i in 0..=1000 {
            assert_eq!(c.samples[i].0, -c.samples[1000 - i].0);
        }

        let csv = hdrmax_curves_csv(1001);
        let mid = csv.lines().nth(1 + 500).unwrap();
        assert_eq!(mid, "0,0,1,1");
    }
}
