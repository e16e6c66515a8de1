//! Multi-scale enhanced SSIM over the approximation bands of the shared
//! pyramid, pooled by coefficient of variation instead of the plain mean.

use super::moments::moment_maps;
use super::AtomsError;
use crate::plane::Plane;
use crate::unified::WaveletPyramid;

/// Side of the square moment window.
pub(crate) const MOMENT_WINDOW: usize = 9;

/// Per-scale product exponents (the first four MS-SSIM weights); they are
/// renormalized to unit sum at use.
pub const MS_ESSIM_EXPONENTS: [f64; 4] = [0.0448, 0.2856, 0.3001, 0.2363];

/// SSIM map between two bands with square windows and the given stabilizers.
pub fn ssim_map(reference: &Plane, test: &Plane, window: usize, c1: f64, c2: f64) -> Plane {
    let m = moment_maps(reference, test, window);
    let (ow, oh) = m.mean_ref.dims();
    let mut out = Plane::new(ow, oh);
    for y in 0..oh {
        for x in 0..ow {
            let (mr, mt) = (m.mean_ref.get(x, y), m.mean_test.get(x, y));
            let (vr, vt) = (m.var_ref.get(x, y), m.var_test.get(x, y));
            // Two flat signals have zero covariance; without this the
            // variance clamp and the raw covariance residue can disagree by
            // an ulp and an identical pair would not score exactly 1.
            let cv = if vr == 0.0 && vt == 0.0 {
                0.0
            } else {
                m.cov.get(x, y)
            };
            let s = ((2.0 * mr * mt + c1) * (2.0 * cv + c2))
                / ((mr * mr + mt * mt + c1) * (vr + vt + c2));
            out.set(x, y, s);
        }
    }
    out
}

/// Coefficient-of-variation pooling: `clamp(mu * (1 - sigma/mu), 0, 1)`,
/// with a degenerate zero-mean map scoring 0.
pub fn cov_pooled_score(map: &Plane) -> f64 {
    let mu = map.mean();
    if mu.abs() < 1e-12 {
        return 0.0;
    }
    let var = map.iter().map(|&v| (v - mu) * (v - mu)).sum::<f64>() / map.len() as f64;
    let cv = var.sqrt() / mu;
    (mu * (1.0 - cv)).clamp(0.0, 1.0)
}

/// MS-ESSIM across approximation bands at levels 1..=4. The stabilizers
/// scale with the level: a `[0,1]` input has dynamic range `2^l` at level
/// `l`, so `C1 = (0.01 * 2^l)^2` and `C2 = (0.03 * 2^l)^2`.
pub fn ms_essim(ref_pyr: &WaveletPyramid, test_pyr: &WaveletPyramid) -> Result<f64, AtomsError> {
    let scales = MS_ESSIM_EXPONENTS.len();
    for pyr in [ref_pyr, test_pyr] {
        if pyr.depth() < scales {
            return Err(AtomsError::NotEnoughLevels {
                have: pyr.depth(),
                need: scales,
            });
        }
    }
    let beta_sum: f64 = MS_ESSIM_EXPONENTS.iter().sum();
    let mut score = 1.0;
    for l in 1..=scales {
        let ra = &ref_pyr.level(l).a;
        let ta = &test_pyr.level(l).a;
        if ra.dims() != ta.dims() {
            return Err(AtomsError::BandMismatch {
                reference: ra.dims(),
                test: ta.dims(),
            });
        }
        let range = (1u64 << l) as f64;
        let c1 = (0.01 * range) * (0.01 * range);
        let c2 = (0.03 * range) * (0.03 * range);
        let q = cov_pooled_score(&ssim_map(ra, ta, MOMENT_WINDOW, c1, c2));
        score *= q.powf(MS_ESSIM_EXPONENTS[l - 1] / beta_sum);
    }
    Ok(score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unified::haar_dwt;
    use rand::{Rng, SeedableRng};

    fn random_plane(w: usize, h: usize, seed: u64) -> Plane {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        Plane::from_vec((0..w * h).map(|_| rng.gen::<f64>()).collect(), w, h)
    }

    #[test]
    fn identity_scores_exactly_one() {
        let p = random_plane(96, 96, 31);
        let pyr = haar_dwt(&p, 4).unwrap();
        assert_eq!(ms_essim(&pyr, &pyr).unwrap(), 1.0);
    }

    #[test]
    fn identity_exact_on_flat_input() {
        // Flat windows stress the variance clamp vs covariance residue.
        let p = Plane::constant(16, 16, 512.0 / 1023.0);
        let pyr = haar_dwt(&p, 4).unwrap();
        assert_eq!(ms_essim(&pyr, &pyr).unwrap(), 1.0);
    }

    #[test]
    fn zero_test_scores_near_zero() {
        let p = random_plane(96, 96, 32);
        let z = Plane::new(96, 96);
        let rp = haar_dwt(&p, 4).unwrap();
        let zp = haar_dwt(&z, 4).unwrap();
        let s = ms_essim(&rp, &zp).unwrap();
        assert!(s < 0.05, "got {s}");
    }

    #[test]
    fn pooling_formula_hand_case() {
        // Map with mean 0.9 and population std 0.09: q = 0.9 * (1 - 0.1).
        let map = Plane::from_vec(vec![0.81, 0.99], 2, 1);
        assert!((cov_pooled_score(&map) - 0.81).abs() < 1e-12);
    }

    #[test]
    fn pooling_degenerate_zero_mean() {
        let map = Plane::new(4, 4);
        assert_eq!(cov_pooled_score(&map), 0.0);
    }

    #[test]
    fn blur_decreases_score() {
        let p = random_plane(128, 128, 33);
        let blurred = crate::kernels::gaussian_blur(&p, 1.5, 7);
        let rp = haar_dwt(&p, 4).unwrap();
        let bp = haar_dwt(&blurred, 4).unwrap();
        let s = ms_essim(&rp, &bp).unwrap();
        assert!(s < 1.0 && s > 0.0);
    }
}
