//! Windowed image kernels shared across modules: separable sliding min/max
//! and separable Gaussian convolution, both with edge replication.
//!
//! Edge replication for min/max is implemented by clamping the window to the
//! plane: a replicated border sample is a copy of an in-window edge sample,
//! so the extremum over the clamped window is identical.

use std::collections::VecDeque;

use crate::plane::Plane;

/// Sliding minimum over a `(2*radius+1)`² window, edge-replicated.
pub fn sliding_min(plane: &Plane, radius: usize) -> Plane {
    sliding_extreme(plane, radius, |new, back| new <= back)
}

/// Sliding maximum over a `(2*radius+1)`² window, edge-replicated.
pub fn sliding_max(plane: &Plane, radius: usize) -> Plane {
    sliding_extreme(plane, radius, |new, back| new >= back)
}

/// Separable monotonic-deque sliding extremum, O(1) amortized per sample.
/// `dominates(new, back)` pops `back` from the deque when `new` wins.
fn sliding_extreme(plane: &Plane, radius: usize, dominates: impl Fn(f64, f64) -> bool) -> Plane {
    let (w, h) = plane.dims();
    let mut rows = Plane::new(w, h);
    let mut buf = vec![0.0; w.max(h)];
    for y in 0..h {
        sliding_extreme_1d(plane.row(y), radius, &dominates, &mut buf[..w]);
        rows.row_mut(y).copy_from_slice(&buf[..w]);
    }
    let mut out = Plane::new(w, h);
    let mut col = vec![0.0; h];
    for x in 0..w {
        for (y, c) in col.iter_mut().enumerate() {
            *c = rows.get(x, y);
        }
        sliding_extreme_1d(&col, radius, &dominates, &mut buf[..h]);
        for (y, &v) in buf[..h].iter().enumerate() {
            out.set(x, y, v);
        }
    }
    out
}

fn sliding_extreme_1d(
    src: &[f64],
    radius: usize,
    dominates: &impl Fn(f64, f64) -> bool,
    out: &mut [f64],
) {
    let n = src.len();
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut next = 0usize;
    for (i, slot) in out.iter_mut().enumerate() {
        let end = (i + radius).min(n - 1);
        while next <= end {
            while let Some(&back) = deque.back() {
                if dominates(src[next], src[back]) {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(next);
            next += 1;
        }
        let start = i.saturating_sub(radius);
        while let Some(&front) = deque.front() {
            if front < start {
                deque.pop_front();
            } else {
                break;
            }
        }
        *slot = src[*deque.front().expect("window is never empty")];
    }
}

/// Symmetric 1-D Gaussian kernel of half-width `radius`, normalized to unit sum.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    assert!(sigma > 0.0, "gaussian sigma must be positive");
    let mut kernel = Vec::with_capacity(2 * radius + 1);
    let inv = -0.5 / (sigma * sigma);
    for i in 0..=2 * radius {
        let d = i as f64 - radius as f64;
        kernel.push((d * d * inv).exp());
    }
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }
    kernel
}

/// Separable convolution with the same 1-D kernel on both axes,
/// edge-replicated. The kernel length must be odd.
pub fn convolve_separable(plane: &Plane, kernel: &[f64]) -> Plane {
    assert!(kernel.len() % 2 == 1, "kernel length must be odd");
    let radius = kernel.len() / 2;
    let (w, h) = plane.dims();
    let mut rows = Plane::new(w, h);
    for y in 0..h {
        let src = plane.row(y);
        let dst = rows.row_mut(y);
        for (x, d) in dst.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let xi = (x + k).saturating_sub(radius).min(w - 1);
                acc += kv * src[xi];
            }
            *d = acc;
        }
    }
    let mut out = Plane::new(w, h);
    for x in 0..w {
        for y in 0..h {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let yi = (y + k).saturating_sub(radius).min(h - 1);
                acc += kv * rows.get(x, yi);
            }
            out.set(x, y, acc);
        }
    }
    out
}

/// Gaussian blur with a kernel truncated at `radius`, edge-replicated.
pub fn gaussian_blur(plane: &Plane, sigma: f64, radius: usize) -> Plane {
    convolve_separable(plane, &gaussian_kernel(sigma, radius))
}
