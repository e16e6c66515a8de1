//! Local moments over square windows via integral images.
//!
//! Maps cover the "valid" window positions only: for a `k`-sized window and a
//! `w x h` input, the output is `(w-k+1) x (h-k+1)`. Callers clamp `k` to
//! the band size with [`effective_window`], so bands smaller than the nominal
//! window degrade to a single global window instead of failing.

use crate::plane::Plane;

/// Local mean/variance/covariance maps of a (reference, test) band pair.
#[derive(Debug, Clone)]
pub struct MomentMaps {
    pub mean_ref: Plane,
    pub mean_test: Plane,
    pub var_ref: Plane,
    pub var_test: Plane,
    pub cov: Plane,
    pub window: usize,
}

/// Window size actually used for a band: the nominal `k` shrunk to fit.
pub fn effective_window(k: usize, width: usize, height: usize) -> usize {
    k.min(width).min(height).max(1)
}

/// Summed-area table with a zero top row and left column.
struct Integral {
    sums: Vec<f64>,
    stride: usize,
}

impl Integral {
    fn build(plane: &Plane, f: impl Fn(usize) -> f64) -> Self {
        let (w, h) = plane.dims();
        let stride = w + 1;
        let mut sums = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row_acc = 0.0;
            for x in 0..w {
                row_acc += f(y * w + x);
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row_acc;
            }
        }
        Integral { sums, stride }
    }

    /// Sum over the window with top-left `(x, y)` and side `k`.
    #[inline]
    fn window_sum(&self, x: usize, y: usize, k: usize) -> f64 {
        let s = &self.sums;
        let st = self.stride;
        s[(y + k) * st + x + k] - s[y * st + x + k] - s[(y + k) * st + x] + s[y * st + x]
    }
}

/// Population moments (divide by `k²`) of both bands over every valid
/// `k x k` window. Variances are clamped at zero.
pub fn moment_maps(reference: &Plane, test: &Plane, k: usize) -> MomentMaps {
    assert_eq!(reference.dims(), test.dims(), "band dimension mismatch");
    let (w, h) = reference.dims();
    let k = effective_window(k, w, h);
    let (ow, oh) = (w - k + 1, h - k + 1);
    let n = (k * k) as f64;

    let r = reference.as_slice();
    let t = test.as_slice();
    let sum_r = Integral::build(reference, |i| r[i]);
    let sum_t = Integral::build(test, |i| t[i]);
    let sum_rr = Integral::build(reference, |i| r[i] * r[i]);
    let sum_tt = Integral::build(test, |i| t[i] * t[i]);
    let sum_rt = Integral::build(reference, |i| r[i] * t[i]);

    let mut mean_ref = Plane::new(ow, oh);
    let mut mean_test = Plane::new(ow, oh);
    let mut var_ref = Plane::new(ow, oh);
    let mut var_test = Plane::new(ow, oh);
    let mut cov = Plane::new(ow, oh);
    for y in 0..oh {
        for x in 0..ow {
            let mr = sum_r.window_sum(x, y, k) / n;
            let mt = sum_t.window_sum(x, y, k) / n;
            let vr = (sum_rr.window_sum(x, y, k) / n - mr * mr).max(0.0);
            let vt = (sum_tt.window_sum(x, y, k) / n - mt * mt).max(0.0);
            let cv = sum_rt.window_sum(x, y, k) / n - mr * mt;
            mean_ref.set(x, y, mr);
            mean_test.set(x, y, mt);
            var_ref.set(x, y, vr);
            var_test.set(x, y, vt);
            cov.set(x, y, cv);
        }
    }
    MomentMaps {
        mean_ref,
        mean_test,
        var_ref,
        var_test,
        cov,
        window: k,
    }
}
