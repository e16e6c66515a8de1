//! Single-scale detail loss: the ratio of masked restored detail energy to
//! reference detail energy at one wavelet level.

use super::AtomsError;
use crate::unified::WaveletPyramid;

const EPS: f64 = 1e-12;
const ONE_DEGREE: f64 = std::f64::consts::PI / 180.0;

/// Detail loss at the 1-indexed `level` (callers normally pass the coarsest).
///
/// Per coefficient location, detail is "restored" in full when the local
/// orientation `atan2(V, H)` agrees between reference and test within one
/// degree, otherwise by the clamped gain `clamp(T/O, 0, 1) * O`. The
/// additive residue masks the restoration, and the score is the ratio of
/// Minkowski-3 norms over a central region that discards a border of
/// `ceil(0.1 * min(h, w))` coefficients. Identical inputs score exactly 1,
/// an all-zero reference scores 1 (nothing to lose), a zero test scores 0.
pub fn dlm_s(
    ref_pyr: &WaveletPyramid,
    test_pyr: &WaveletPyramid,
    level: usize,
) -> Result<f64, AtomsError> {
    if level == 0 || ref_pyr.depth() < level || test_pyr.depth() < level {
        return Err(AtomsError::NotEnoughLevels {
            have: ref_pyr.depth().min(test_pyr.depth()),
            need: level,
        });
    }
    let rb = ref_pyr.level(level);
    let tb = test_pyr.level(level);
    if rb.h.dims() != tb.h.dims() {
        return Err(AtomsError::BandMismatch {
            reference: rb.h.dims(),
            test: tb.h.dims(),
        });
    }

    let (w, h) = rb.h.dims();
    let border = (0.1 * w.min(h) as f64).ceil() as usize;
    if w <= 2 * border || h <= 2 * border {
        return Ok(1.0);
    }

    let mut restored_cubes = [0.0f64; 3];
    let mut reference_cubes = [0.0f64; 3];
    for y in border..h - border {
        for x in border..w - border {
            let o = [rb.h.get(x, y), rb.v.get(x, y), rb.d.get(x, y)];
            let t = [tb.h.get(x, y), tb.v.get(x, y), tb.d.get(x, y)];
            let psi_ref = o[1].atan2(o[0]);
            let psi_test = t[1].atan2(t[0]);
            let angles_match = wrapped_abs_diff(psi_ref, psi_test) < ONE_DEGREE;
            for theta in 0..3 {
                let restored = if angles_match {
                    t[theta]
                } else if o[theta] == 0.0 {
                    0.0
                } else {
                    (t[theta] / o[theta]).clamp(0.0, 1.0) * o[theta]
                };
                let additive = t[theta] - restored;
                let masked = (restored.abs() - additive.abs()).max(0.0);
                restored_cubes[theta] += masked * masked * masked;
                reference_cubes[theta] += o[theta].abs().powi(3);
            }
        }
    }

    let numerator: f64 = restored_cubes.iter().map(|&s| s.cbrt()).sum();
    let denominator: f64 = reference_cubes.iter().map(|&s| s.cbrt()).sum();
    if denominator <= EPS {
        return Ok(1.0);
    }
    Ok((numerator / denominator).clamp(0.0, 1.0))
}

/// |a - b| wrapped into [0, pi].
fn wrapped_abs_diff(a: f64, b: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut d = (a - b).abs() % two_pi;
    if d > std::f64::consts::PI {
        d = two_pi - d;
    }
    d
}
