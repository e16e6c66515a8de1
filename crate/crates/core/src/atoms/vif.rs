//! Visual information fidelity at one pyramid scale, from windowed moments
//! of the approximation bands under a Gaussian channel model.

use super::essim::MOMENT_WINDOW;
use super::moments::moment_maps;
use super::AtomsError;
use crate::unified::WaveletPyramid;

const EPS: f64 = 1e-12;
const CLAMP_DELTA: f64 = 1e-6;

/// VIF on the approximation bands at `scale` in 1..=4.
///
/// Windows where the reference carries no measurable variance are skipped on
/// both sides of the ratio, which keeps the identity case exactly 1. The
/// noise floor scales with the band gain: `sigma_n² = 2 * (2^scale / 1023)²`
/// in normalized units.
pub fn vif_scale(
    ref_pyr: &WaveletPyramid,
    test_pyr: &WaveletPyramid,
    scale: usize,
) -> Result<f64, AtomsError> {
    if scale == 0 || ref_pyr.depth() < scale || test_pyr.depth() < scale {
        return Err(AtomsError::NotEnoughLevels {
            have: ref_pyr.depth().min(test_pyr.depth()),
            need: scale,
        });
    }
    let ra = &ref_pyr.level(scale).a;
    let ta = &test_pyr.level(scale).a;
    if ra.dims() != ta.dims() {
        return Err(AtomsError::BandMismatch {
            reference: ra.dims(),
            test: ta.dims(),
        });
    }
    let sigma_nsq = 2.0 * ((1u64 << scale) as f64 / 1023.0).powi(2);
    let m = moment_maps(ra, ta, MOMENT_WINDOW);
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for (i, (&var_r, &var_t)) in m
        .var_ref
        .as_slice()
        .iter()
        .zip(m.var_test.as_slice())
        .enumerate()
    {
        if var_r <= EPS {
            continue;
        }
        let cov = m.cov.as_slice()[i];
        let g = cov / var_r;
        let sigma_vsq = (var_t - g * cov).max(0.0);
        numerator += (1.0 + g * g * var_r / (sigma_vsq + sigma_nsq)).ln();
        denominator += (1.0 + var_r / sigma_nsq).ln();
    }
    if denominator <= EPS {
        return Ok(1.0);
    }
    Ok((numerator / denominator).clamp(0.0, 1.0 + CLAMP_DELTA))
}
