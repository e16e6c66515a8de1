//! Accuracy statistics between predictions and subjective scores.

use super::EvalError;

fn check_pair(a: &[f64], b: &[f64], min_len: usize) -> Result<(), EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < min_len {
        return Err(EvalError::TooFewSamples {
            got: a.len(),
            need: min_len,
        });
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(EvalError::NonFiniteInput);
    }
    Ok(())
}

/// Pearson product-moment correlation. Constant inputs are an error, not NaN.
pub fn pcc(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    check_pair(a, b, 3)?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    let mut sab = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        saa += dx * dx;
        sbb += dy * dy;
        sab += dx * dy;
    }
    let denom = (saa * sbb).sqrt();
    if denom == 0.0 {
        return Err(EvalError::ConstantInput);
    }
    Ok(sab / denom)
}

/// Spearman rank correlation: Pearson correlation of midrank-transformed
/// vectors (ties get the mean of the ranks they straddle).
pub fn srocc(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    check_pair(a, b, 3)?;
    pcc(&midranks(a), &midranks(b))
}

/// Root mean squared error.
pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    check_pair(a, b, 1)?;
    let n = a.len() as f64;
    let sum: f64 = a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum();
    Ok((sum / n).sqrt())
}

/// 1-based midranks with tie correction.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // items i..=j are tied: average of ranks i+1 ..= j+1
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Lower median: the `floor((n-1)/2)`-th order statistic, deterministic for
/// even counts.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).expect("finite values"));
    Some(sorted[(sorted.len() - 1) / 2])
}
