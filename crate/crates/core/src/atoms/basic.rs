//! Mean-absolute-difference and edge-enhancement features.

use super::AtomsError;
use crate::plane::Plane;
use crate::unified::WaveletPyramid;

const EPS: f64 = 1e-12;

/// Mean absolute difference between two equally sized bands.
pub fn mad(reference: &Plane, test: &Plane) -> Result<f64, AtomsError> {
    if reference.dims() != test.dims() {
        return Err(AtomsError::BandMismatch {
            reference: reference.dims(),
            test: test.dims(),
        });
    }
    let n = reference.len() as f64;
    let sum: f64 = reference
        .as_slice()
        .iter()
        .zip(test.as_slice())
        .map(|(&a, &b)| (a - b).abs())
        .sum();
    Ok(sum / n)
}

/// MAD between the level-1 approximation bands of two pyramids (used both
/// for reference/test comparison and for consecutive-frame temporal MAD).
pub fn mad_approx(a: &WaveletPyramid, b: &WaveletPyramid) -> Result<f64, AtomsError> {
    mad(&a.level(1).a, &b.level(1).a)
}

/// One-sided edge enhancement over the detail subbands at `level`:
/// rectified magnitude gain of the test relative to the reference,
/// normalized by the reference detail magnitude.
pub fn edge(
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
    let mut gain = 0.0;
    let mut magnitude = 0.0;
    for (o, t) in [(&rb.h, &tb.h), (&rb.v, &tb.v), (&rb.d, &tb.d)] {
        if o.dims() != t.dims() {
            return Err(AtomsError::BandMismatch {
                reference: o.dims(),
                test: t.dims(),
            });
        }
        let n = o.len() as f64;
        let mut g = 0.0;
        let mut m = 0.0;
        for (&ov, &tv) in o.as_slice().iter().zip(t.as_slice()) {
            g += (tv.abs() - ov.abs()).max(0.0);
            m += ov.abs();
        }
        gain += g / n;
        magnitude += m / n;
    }
    Ok(gain / (magnitude + EPS))
}
