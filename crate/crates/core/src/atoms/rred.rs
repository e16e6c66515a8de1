//! Scalar entropic-difference features: local entropy proxies of wavelet
//! coefficients compared block-wise between reference and test.

use super::AtomsError;
use crate::plane::Plane;
use crate::unified::WaveletPyramid;

/// Non-overlapping block side for the local variance estimates.
const BLOCK: usize = 5;

/// Stabilizing "neural noise" variance added inside the entropy proxy.
const SIGMA_NSQ: f64 = 0.1;

/// Entropic difference of one subband pair: blocks are 5x5, each block
/// contributes `|gamma_ref * h_ref - gamma_test * h_test|` where
/// `h = ln(2*pi*e*(sigma² + 0.1))` and `gamma = ln(1 + sigma²)` with the
/// unbiased block variance; the result is the mean over blocks.
pub fn band_entropic_difference(
    reference: &Plane,
    test: &Plane,
    block: usize,
    sigma_nsq: f64,
) -> Result<f64, AtomsError> {
    if reference.dims() != test.dims() {
        return Err(AtomsError::BandMismatch {
            reference: reference.dims(),
            test: test.dims(),
        });
    }
    let (w, h) = reference.dims();
    let (bx, by) = (w / block, h / block);
    if bx == 0 || by == 0 {
        return Err(AtomsError::BandTooSmall {
            width: w,
            height: h,
            block,
        });
    }
    let mut total = 0.0;
    for j in 0..by {
        for i in 0..bx {
            let vr = block_variance(reference, i * block, j * block, block);
            let vt = block_variance(test, i * block, j * block, block);
            total += (weighted_entropy(vr, sigma_nsq) - weighted_entropy(vt, sigma_nsq)).abs();
        }
    }
    Ok(total / (bx * by) as f64)
}

/// `gamma * h` for one block variance.
fn weighted_entropy(variance: f64, sigma_nsq: f64) -> f64 {
    let gamma = (1.0 + variance).ln();
    let entropy = (2.0 * std::f64::consts::PI * std::f64::consts::E * (variance + sigma_nsq)).ln();
    gamma * entropy
}

/// Unbiased variance of a `k x k` block.
fn block_variance(plane: &Plane, x0: usize, y0: usize, k: usize) -> f64 {
    let n = (k * k) as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for y in y0..y0 + k {
        for x in x0..x0 + k {
            let v = plane.get(x, y);
            sum += v;
            sum_sq += v * v;
        }
    }
    ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0)
}

/// Spatial entropic difference averaged over the H and V subbands at the
/// 1-indexed `level`.
pub fn srred_hv(
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
    let ed_h = band_entropic_difference(&rb.h, &tb.h, BLOCK, SIGMA_NSQ)?;
    let ed_v = band_entropic_difference(&rb.v, &tb.v, BLOCK, SIGMA_NSQ)?;
    Ok((ed_h + ed_v) / 2.0)
}

/// Temporal entropic difference: the same statistic computed on pyramids of
/// frame-difference planes (`frame_t - frame_{t-1}`) of each video.
pub fn trred_hv(
    ref_diff_pyr: &WaveletPyramid,
    test_diff_pyr: &WaveletPyramid,
    level: usize,
) -> Result<f64, AtomsError> {
    srred_hv(ref_diff_pyr, test_diff_pyr, level)
}
