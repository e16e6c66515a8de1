//! Orthonormal multi-level 2-D Haar analysis and synthesis.
//!
//! The 1-D step maps a pair `(a, b)` to `((a+b)/sqrt(2), (a-b)/sqrt(2))`.
//! Odd-length axes replicate their last sample to complete the final pair;
//! perfect reconstruction still holds exactly (the synthesized duplicate is
//! discarded), while strict energy conservation requires even lengths.

use std::f64::consts::FRAC_1_SQRT_2;

use super::{LevelBands, UnifiedError, WaveletPyramid};
use crate::plane::Plane;

/// Multi-level forward transform. The approximation band is retained at
/// every level (it is also the input to the next level).
pub fn forward(plane: &Plane, levels: usize) -> Result<WaveletPyramid, UnifiedError> {
    if levels == 0 {
        return Err(UnifiedError::BadLevelCount(levels));
    }
    let min_dim = 1usize << levels;
    if plane.width() < min_dim || plane.height() < min_dim {
        return Err(UnifiedError::PlaneTooSmall {
            width: plane.width(),
            height: plane.height(),
            levels,
        });
    }
    let mut bands = Vec::with_capacity(levels);
    let mut current = plane.clone();
    for _ in 0..levels {
        let level = forward_level(&current);
        current = level.a.clone();
        bands.push(level);
    }
    Ok(WaveletPyramid {
        input_width: plane.width(),
        input_height: plane.height(),
        levels: bands,
        csf_applied: false,
    })
}

/// Inverse transform from the deepest approximation plus all detail bands.
/// Requires an untouched (non-CSF-weighted) pyramid.
pub fn inverse(pyr: &WaveletPyramid) -> Result<Plane, UnifiedError> {
    if pyr.csf_applied {
        return Err(UnifiedError::CsfAlreadyApplied);
    }
    let depth = pyr.levels.len();
    let mut approx = pyr.levels[depth - 1].a.clone();
    for l in (0..depth).rev() {
        let (pw, ph) = pyr.level_parent_dims(l);
        let bands = &pyr.levels[l];
        approx = inverse_level(&approx, &bands.h, &bands.v, &bands.d, pw, ph);
    }
    Ok(approx)
}

/// One analysis level: returns (A, H, V, D) with H carrying horizontal
/// frequency detail (high-pass along x) and V vertical (high-pass along y).
pub(super) fn forward_level(plane: &Plane) -> LevelBands {
    let (w, h) = plane.dims();
    let (w2, h2) = (w.div_ceil(2), h.div_ceil(2));

    // Row pass: low/high along x.
    let mut lo = Plane::new(w2, h);
    let mut hi = Plane::new(w2, h);
    for y in 0..h {
        let row = plane.row(y);
        for i in 0..w2 {
            let a = row[2 * i];
            let b = if 2 * i + 1 < w { row[2 * i + 1] } else { a };
            lo.set(i, y, (a + b) * FRAC_1_SQRT_2);
            hi.set(i, y, (a - b) * FRAC_1_SQRT_2);
        }
    }

    // Column pass: low/high along y.
    let mut a = Plane::new(w2, h2);
    let mut v = Plane::new(w2, h2);
    let mut hb = Plane::new(w2, h2);
    let mut d = Plane::new(w2, h2);
    for x in 0..w2 {
        for j in 0..h2 {
            let y0 = 2 * j;
            let y1 = if 2 * j + 1 < h { 2 * j + 1 } else { y0 };
            let (l0, l1) = (lo.get(x, y0), lo.get(x, y1));
            let (h0, h1) = (hi.get(x, y0), hi.get(x, y1));
            a.set(x, j, (l0 + l1) * FRAC_1_SQRT_2);
            v.set(x, j, (l0 - l1) * FRAC_1_SQRT_2);
            hb.set(x, j, (h0 + h1) * FRAC_1_SQRT_2);
            d.set(x, j, (h0 - h1) * FRAC_1_SQRT_2);
        }
    }
    LevelBands { a, h: hb, v, d }
}

fn inverse_level(
    a: &Plane,
    h: &Plane,
    v: &Plane,
    d: &Plane,
    parent_w: usize,
    parent_h: usize,
) -> Plane {
    let (w2, h2) = a.dims();

    // Undo the column pass.
    let mut lo = Plane::new(w2, parent_h);
    let mut hi = Plane::new(w2, parent_h);
    for x in 0..w2 {
        for j in 0..h2 {
            let l0 = (a.get(x, j) + v.get(x, j)) * FRAC_1_SQRT_2;
            let l1 = (a.get(x, j) - v.get(x, j)) * FRAC_1_SQRT_2;
            let h0 = (h.get(x, j) + d.get(x, j)) * FRAC_1_SQRT_2;
            let h1 = (h.get(x, j) - d.get(x, j)) * FRAC_1_SQRT_2;
            lo.set(x, 2 * j, l0);
            hi.set(x, 2 * j, h0);
            if 2 * j + 1 < parent_h {
                lo.set(x, 2 * j + 1, l1);
                hi.set(x, 2 * j + 1, h1);
            }
        }
    }

    // Undo the row pass.
    let mut out = Plane::new(parent_w, parent_h);
    for y in 0..parent_h {
        for i in 0..w2 {
            let x0 = (lo.get(i, y) + hi.get(i, y)) * FRAC_1_SQRT_2;
            let x1 = (lo.get(i, y) - hi.get(i, y)) * FRAC_1_SQRT_2;
            out.set(2 * i, y, x0);
            if 2 * i + 1 < parent_w {
                out.set(2 * i + 1, y, x1);
            }
        }
    }
    out
}
