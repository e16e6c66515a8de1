//! Legacy-metric baselines on perceptually encoded luminance: the luma
//! plane is decoded through the PQ EOTF, PU21-encoded, and rescaled by the
//! PU21 peak to `[0, 1]` before PSNR/SSIM run on it.

use super::essim::{ssim_map, MOMENT_WINDOW};
use super::AtomsError;
use crate::plane::Plane;
use crate::transfer::{pq_eotf, Pu21};

/// PSNR cap for (near-)identical inputs, in dB.
const PSNR_CAP_DB: f64 = 100.0;

/// PQ-decodes and PU21-encodes a `[0, 1]` luma plane, rescaled to `[0, 1]`.
fn pu_normalized(luma: &Plane) -> Result<Plane, AtomsError> {
    let pu = Pu21::banding_glare();
    let peak = pu.peak();
    let mut data = Vec::with_capacity(luma.len());
    for &v in luma.iter() {
        let nits = pq_eotf(v).map_err(AtomsError::Transfer)?;
        data.push(pu.encode(nits).map_err(AtomsError::Transfer)? / peak);
    }
    Ok(Plane::from_vec(data, luma.width(), luma.height()))
}

/// PU21-PSNR in dB over rescaled PU values, capped at 100 dB.
pub fn pu21_psnr(ref_luma: &Plane, test_luma: &Plane) -> Result<f64, AtomsError> {
    if ref_luma.dims() != test_luma.dims() {
        return Err(AtomsError::BandMismatch {
            reference: ref_luma.dims(),
            test: test_luma.dims(),
        });
    }
    let r = pu_normalized(ref_luma)?;
    let t = pu_normalized(test_luma)?;
    let mse = r
        .as_slice()
        .iter()
        .zip(t.as_slice())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<f64>()
        / r.len() as f64;
    if mse <= 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB))
}

/// PU21-SSIM: global mean of the 9x9-window SSIM map over rescaled PU
/// values, with the unit-range stabilizers `C1 = 0.01²`, `C2 = 0.03²`.
pub fn pu21_ssim(ref_luma: &Plane, test_luma: &Plane) -> Result<f64, AtomsError> {
    if ref_luma.dims() != test_luma.dims() {
        return Err(AtomsError::BandMismatch {
            reference: ref_luma.dims(),
            test: test_luma.dims(),
        });
    }
    let r = pu_normalized(ref_luma)?;
    let t = pu_normalized(test_luma)?;
    let map = ssim_map(&r, &t, MOMENT_WINDOW, 0.01 * 0.01, 0.03 * 0.03);
    Ok(map.mean())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identical_inputs_hit_caps() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(81);
        let p = Plane::from_vec((0..32 * 32).map(|_| rng.gen::<f64>()).collect(), 32, 32);
        assert_eq!(pu21_psnr(&p, &p).unwrap(), 100.0);
        assert_eq!(pu21_ssim(&p, &p).unwrap(), 1.0);
    }

    #[test]
    fn known_mse_maps_to_twenty_db() {
        // Build planes whose rescaled PU values differ by exactly 0.1
        // everywhere by inverting the PU pipeline numerically.
        let pu = Pu21::banding_glare();
        let peak = pu.peak();
        let target = |code: f64| pu.encode(pq_eotf(code).unwrap()).unwrap() / peak;
        // binary-search codes hitting PU values 0.4 and 0.5
        let solve = |want: f64| {
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if target(mid) < want {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let a = Plane::constant(16, 16, solve(0.4));
        let b = Plane::constant(16, 16, solve(0.5));
        let psnr = pu21_psnr(&a, &b).unwrap();
        assert!((psnr - 20.0).abs() < 1e-3, "got {psnr}");
    }

    #[test]
    fn inverted_structure_scores_negative_ssim() {
        // Binary texture and its inversion anticorrelate within windows.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(82);
        let p = Plane::from_vec(
            (0..48 * 48)
                .map(|_| if rng.gen::<bool>() { 0.9 } else { 0.1 })
                .collect(),
            48,
            48,
        );
        let inv = p.map(|v| 1.0 - v);
        let s = pu21_ssim(&p, &inv).unwrap();
        assert!(s < 0.0, "got {s}");
    }
}
