//! Synthetic desk-scale dataset: procedural HDR-like reference videos, a
//! Gaussian-blur-plus-quantization distortion ladder, and exponential proxy
//! MOS. Everything is a pure function of the seed.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::{DatasetManifest, EvalError, ManifestEntry};
use crate::frameio::{ChromaSubsampling, PlanarFrame, RawYuvWriter};
use crate::kernels::gaussian_blur;
use crate::plane::Plane;

/// Generator parameters.
#[derive(Debug, Clone, Copy)]
pub struct SynthParams {
    pub n_contents: usize,
    pub n_levels: usize,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

impl Default for SynthParams {
    /// 10 contents x 5 distortion levels, 8 frames of 96x96.
    fn default() -> Self {
        SynthParams {
            n_contents: 10,
            n_levels: 5,
            frames: 8,
            width: 96,
            height: 96,
            seed: 0,
        }
    }
}

const BIT_DEPTH: u8 = 10;

/// Generates the dataset under `out_dir` (10-bit raw 4:2:0 YUV files plus
/// `manifest.csv` with paths relative to `out_dir`) and returns the manifest.
///
/// Distortion level 0 is bit-exactly the reference. Proxy MOS is
/// `100 * exp(-0.35 * level)` plus small seeded noise per condition.
pub fn synth_dataset(
    params: &SynthParams,
    out_dir: impl AsRef<Path>,
) -> Result<DatasetManifest, EvalError> {
    if params.width < 64 || params.height < 64 {
        return Err(EvalError::BadParams(format!(
            "synthetic frames must be at least 64x64, got {}x{}",
            params.width, params.height
        )));
    }
    if params.n_contents == 0 || params.n_levels == 0 || params.frames == 0 {
        return Err(EvalError::BadParams(
            "n_contents, n_levels, and frames must all be positive".into(),
        ));
    }
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir.join("refs"))?;
    std::fs::create_dir_all(dir.join("dist"))?;

    let mut entries = Vec::new();
    for content in 0..params.n_contents {
        let frames = generate_reference(params, content);
        let ref_rel = format!("refs/content_{content:02}.yuv");
        write_video(&dir.join(&ref_rel), &frames)?;

        for level in 0..params.n_levels {
            let distorted: Vec<PlanarFrame> =
                frames.iter().map(|f| distort_frame(f, level)).collect();
            let test_rel = format!("dist/c{content:02}_d{level}.yuv");
            write_video(&dir.join(&test_rel), &distorted)?;

            let mut mos_rng = ChaCha12Rng::seed_from_u64(params.seed);
            mos_rng.set_stream(1_000_000 + (content * params.n_levels + level) as u64);
            let base = 100.0 * (-0.35 * level as f64).exp();
            entries.push(ManifestEntry {
                video_id: format!("c{content:02}_d{level}"),
                content_id: format!("content_{content:02}"),
                content_group: format!("content_{content:02}"),
                ref_path: ref_rel.clone(),
                test_path: test_rel,
                mos_dark: base + 0.5 * (mos_rng.gen::<f64>() - 0.5),
                mos_bright: base + 0.5 * (mos_rng.gen::<f64>() - 0.5),
            });
        }
    }
    let manifest = DatasetManifest::new(entries)?;
    std::fs::write(dir.join("manifest.csv"), manifest.to_csv())?;
    Ok(manifest)
}

fn write_video(path: &Path, frames: &[PlanarFrame]) -> Result<(), EvalError> {
    let mut writer = RawYuvWriter::create(path, BIT_DEPTH)?;
    for f in frames {
        writer.write_frame(f)?;
    }
    writer.finish()?;
    Ok(())
}

/// One reference video: band-limited noise sliding one pixel per frame,
/// a static diagonal gradient, and drifting specular blobs that reach the
/// top of the code range.
fn generate_reference(params: &SynthParams, content: usize) -> Vec<PlanarFrame> {
    let (w, h) = (params.width, params.height);
    let mut rng = ChaCha12Rng::seed_from_u64(params.seed);
    rng.set_stream(content as u64);

    // Noise field wide enough to slide horizontally for every frame.
    let field_w = w + params.frames;
    let noise = Plane::from_vec(
        (0..field_w * h).map(|_| rng.gen::<f64>()).collect(),
        field_w,
        h,
    );
    let field = normalize_range(&gaussian_blur(&noise, 1.5, 5), 0.05, 0.55);

    // Chroma fields at half resolution, gentler texture.
    let (cw, ch) = ChromaSubsampling::C420.chroma_dims(w, h);
    let cfield_w = cw + params.frames;
    let cb_noise = Plane::from_vec(
        (0..cfield_w * ch).map(|_| rng.gen::<f64>()).collect(),
        cfield_w,
        ch,
    );
    let cr_noise = Plane::from_vec(
        (0..cfield_w * ch).map(|_| rng.gen::<f64>()).collect(),
        cfield_w,
        ch,
    );
    let cb_field = normalize_range(&gaussian_blur(&cb_noise, 2.0, 6), 0.35, 0.6);
    let cr_field = normalize_range(&gaussian_blur(&cr_noise, 2.0, 6), 0.4, 0.65);

    struct Blob {
        x: f64,
        y: f64,
        radius: f64,
        amplitude: f64,
        drift: (f64, f64),
    }
    let blobs: Vec<Blob> = (0..3)
        .map(|_| Blob {
            x: rng.gen_range(0.2..0.8) * w as f64,
            y: rng.gen_range(0.2..0.8) * h as f64,
            radius: rng.gen_range(w as f64 / 16.0..w as f64 / 8.0),
            amplitude: rng.gen_range(0.5..0.7),
            drift: (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)),
        })
        .collect();

    (0..params.frames)
        .map(|t| {
            let mut y = Plane::new(w, h);
            for yy in 0..h {
                for xx in 0..w {
                    let mut v = field.get(xx + t, yy);
                    v += 0.15 * (xx as f64 / (w - 1) as f64 + yy as f64 / (h - 1) as f64) / 2.0;
                    for blob in &blobs {
                        let cx = blob.x + blob.drift.0 * t as f64;
                        let cy = blob.y + blob.drift.1 * t as f64;
                        let dist2 = (xx as f64 - cx).powi(2) + (yy as f64 - cy).powi(2);
                        v += blob.amplitude * (-dist2 / (2.0 * blob.radius * blob.radius)).exp();
                    }
                    y.set(xx, yy, v.clamp(0.0, 1.0));
                }
            }
            let mut cb = Plane::new(cw, ch);
            let mut cr = Plane::new(cw, ch);
            for yy in 0..ch {
                for xx in 0..cw {
                    cb.set(xx, yy, cb_field.get(xx + t, yy));
                    cr.set(xx, yy, cr_field.get(xx + t, yy));
                }
            }
            PlanarFrame {
                y,
                cb,
                cr,
                width: w,
                height: h,
                subsampling: ChromaSubsampling::C420,
                bit_depth: BIT_DEPTH,
                frame_index: t as u64,
            }
        })
        .collect()
}

/// Distortion ladder: level 0 is the identity; level `d` applies a Gaussian
/// blur of sigma `0.75 d` followed by uniform quantization to `1024 >> d`
/// bins (floored at 2).
fn distort_frame(frame: &PlanarFrame, level: usize) -> PlanarFrame {
    if level == 0 {
        return frame.clone();
    }
    let sigma = 0.75 * level as f64;
    let radius = (3.0 * sigma).ceil() as usize;
    let bins = ((1024usize >> level).max(2) - 1) as f64;
    let degrade = |p: &Plane| gaussian_blur(p, sigma, radius).map(|v| (v * bins).round() / bins);
    PlanarFrame {
        y: degrade(&frame.y),
        cb: degrade(&frame.cb),
        cr: degrade(&frame.cr),
        ..frame.clone()
    }
}

/// Affine map of a plane onto `[lo, hi]` (constant planes map to `lo`).
fn normalize_range(plane: &Plane, lo: f64, hi: f64) -> Plane {
    let min = plane.iter().copied().fold(f64::INFINITY, f64::min);
    let max = plane.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= min {
        return Plane::constant(plane.width(), plane.height(), lo);
    }
    plane.map(|v| lo + (hi - lo) * (v - min) / (max - min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frameio::{FrameSource, RawYuvReader};

    #[test]
    fn manifest_shape_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let params = SynthParams {
            n_contents: 3,
            n_levels: 2,
            frames: 2,
            width: 64,
            height: 64,
            seed: 5,
        };
        let m = synth_dataset(&params, dir.path().join("a")).unwrap();
        assert_eq!(m.entries.len(), 6);
        assert_eq!(m.groups().len(), 3);

        let m2 = synth_dataset(&params, dir.path().join("b")).unwrap();
        assert_eq!(m.to_csv(), m2.to_csv());
        // video bytes identical across runs
        let a = std::fs::read(dir.path().join("a/dist/c00_d1.yuv")).unwrap();
        let b = std::fs::read(dir.path().join("b/dist/c00_d1.yuv")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn level_zero_is_bit_exact_reference() {
        let dir = tempfile::tempdir().unwrap();
        let params = SynthParams {
            n_contents: 1,
            n_levels: 1,
            frames: 3,
            width: 64,
            height: 64,
            seed: 1,
        };
        let m = synth_dataset(&params, dir.path()).unwrap();
        assert_eq!(m.entries.len(), 1);
        let r = std::fs::read(dir.path().join(&m.entries[0].ref_path)).unwrap();
        let t = std::fs::read(dir.path().join(&m.entries[0].test_path)).unwrap();
        assert_eq!(r, t);
        assert!(m.entries[0].mos_dark > 99.0 && m.entries[0].mos_dark < 101.0);
    }

    #[test]
    fn generated_files_decode_with_expected_geometry() {
        let dir = tempfile::tempdir().unwrap();
        let params = SynthParams {
            n_contents: 1,
            n_levels: 2,
            frames: 4,
            width: 72,
            height: 64,
            seed: 2,
        };
        let m = synth_dataset(&params, dir.path()).unwrap();
        let mut src = RawYuvReader::open(
            dir.path().join(&m.entries[0].ref_path),
            72,
            64,
            BIT_DEPTH,
            ChromaSubsampling::C420,
        )
        .unwrap();
        assert_eq!(src.frame_count(), Some(4));
        let f = src.next_frame().unwrap().unwrap();
        assert!(f.y.iter().all(|&v| (0.0..=1.0).contains(&v)));
        // luma uses a good part of the range including near-peak speculars
        let max = f.y.iter().copied().fold(0.0, f64::max);
        assert!(max > 0.8, "peak luma {max}");
    }

    #[test]
    fn small_dims_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let params = SynthParams {
            width: 32,
            height: 96,
            ..SynthParams::default()
        };
        assert!(matches!(
            synth_dataset(&params, dir.path()),
            Err(EvalError::BadParams(_))
        ));
    }
}
