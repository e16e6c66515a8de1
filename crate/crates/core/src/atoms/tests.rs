use super::*;
use crate::frameio::ChromaSubsampling;
use crate::fusion::{HdrmaxAugmentation, ModelSpec};
use crate::unified::instrumentation;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn textured_frame(w: usize, h: usize, seed: u64) -> PlanarFrame {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let (cw, ch) = ChromaSubsampling::C420.chroma_dims(w, h);
    let mut plane = |n: usize, width: usize, height: usize| {
        Plane::from_vec((0..n).map(|_| rng.gen::<f64>()).collect(), width, height)
    };
    PlanarFrame {
        y: plane(w * h, w, h),
        cb: plane(cw * ch, cw, ch),
        cr: plane(cw * ch, cw, ch),
        width: w,
        height: h,
        subsampling: ChromaSubsampling::C420,
        bit_depth: 10,
        frame_index: 0,
    }
}

/// A short "video": the base frame plus slight per-frame global drift so
/// temporal features are non-degenerate.
fn drifting_video(w: usize, h: usize, seed: u64, frames: usize) -> Vec<PlanarFrame> {
    let base = textured_frame(w, h, seed);
    (0..frames)
        .map(|t| {
            let shift = 0.003 * t as f64;
            let mut f = base.clone();
            f.y = f.y.map(|v| (v + shift).clamp(0.0, 1.0));
            f.frame_index = t as u64;
            f
        })
        .collect()
}

#[test]
fn registry_resolves_all_model_features() {
    for name in ModelSpec::builtin_names() {
        let spec = ModelSpec::builtin(name).unwrap();
        for f in &spec.features {
            parse_feature(f).unwrap();
        }
    }
    for branch in [
        HdrmaxVariant::H1,
        HdrmaxVariant::H2Pos,
        HdrmaxVariant::H2Neg,
    ] {
        for f in branch_side_features(branch) {
            parse_feature(&f).unwrap();
        }
    }
    assert!(matches!(
        parse_feature("Y-VIF-9"),
        Err(AtomsError::UnknownFeature(_))
    ));
    assert!(matches!(
        parse_feature("Y-H1-VIF-5"),
        Err(AtomsError::UnknownFeature(_))
    ));
}

#[test]
fn feature_counts_follow_the_protocol() {
    let cfg = ExtractorConfig::default;
    let frames = drifting_video(96, 96, 1, 2);
    let cases = [
        (ModelSpec::builtin("Y-FUNQUE+").unwrap(), 3usize),
        (ModelSpec::builtin("3C-FUNQUE+").unwrap(), 7),
        (
            ModelSpec::builtin("Y-FUNQUE+")
                .unwrap()
                .with_hdrmax(HdrmaxAugmentation::H1)
                .unwrap(),
            8,
        ),
        (
            ModelSpec::builtin("3C-FUNQUE+")
                .unwrap()
                .with_hdrmax(HdrmaxAugmentation::H2)
                .unwrap(),
            17,
        ),
    ];
    for (spec, expected) in cases {
        let mut ex = VideoPairExtractor::new(&spec, cfg()).unwrap();
        ex.push_pair(&frames[0], &frames[0]).unwrap();
        ex.push_pair(&frames[1], &frames[1]).unwrap();
        let records = ex.finish().unwrap();
        assert_eq!(records[0].values.len(), expected, "model {}", spec.name);
        assert_eq!(records[1].values.len(), expected);
    }
}

#[test]
fn identity_and_null_values_on_identical_static_input() {
    // Static video, test == reference: similarity features are exactly 1,
    // difference features exactly 0.
    let spec = ModelSpec::builtin("3C-FUNQUE+").unwrap();
    let frame = textured_frame(96, 96, 2);
    let mut ex = VideoPairExtractor::new(&spec, ExtractorConfig::default()).unwrap();
    ex.push_pair(&frame, &frame).unwrap();
    ex.push_pair(&frame, &frame).unwrap();
    let records = ex.finish().unwrap();
    for r in &records {
        assert_eq!(r.get("Y-MS-ESSIM"), Some(1.0));
        assert_eq!(r.get("Y-DLM-S"), Some(1.0));
        assert_eq!(r.get("Y-MAD-Dis"), Some(0.0));
        assert_eq!(r.get("Y-SRRED-HV"), Some(0.0));
        assert_eq!(r.get("Y-TRRED-HV"), Some(0.0));
        assert_eq!(r.get("Cb-Edge"), Some(0.0));
        assert_eq!(r.get("Cr-MAD"), Some(0.0));
    }
}

#[test]
fn temporal_backfill_copies_t1_and_zero_for_single_frame() {
    let spec = ModelSpec::builtin("Y-FUNQUE+").unwrap();
    let frames = drifting_video(64, 64, 3, 3);

    let mut ex = VideoPairExtractor::new(&spec, ExtractorConfig::default()).unwrap();
    for f in &frames {
        ex.push_pair(f, f).unwrap();
    }
    let records = ex.finish().unwrap();
    assert_eq!(records.len(), 3);
    let t1 = records[1].get("Y-MAD-Ref").unwrap();
    assert!(t1 > 0.0, "drifting video must have temporal activity");
    assert_eq!(records[0].get("Y-MAD-Ref").unwrap(), t1);

    let mut ex = VideoPairExtractor::new(&spec, ExtractorConfig::default()).unwrap();
    ex.push_pair(&frames[0], &frames[0]).unwrap();
    let records = ex.finish().unwrap();
    assert_eq!(records[0].get("Y-MAD-Ref"), Some(0.0));
}

#[test]
fn temporal_mad_constant_offset_matches_haar_gain() {
    // Consecutive frames differing by a constant 0.1: the level-1
    // approximation differs by 2 * 0.1 times the approximation CSF weight
    // (which defaults to 1).
    let spec = ModelSpec::builtin("Y-FUNQUE+").unwrap();
    let base = textured_frame(64, 64, 4);
    let mut next = base.clone();
    next.y = base.y.map(|v| v * 0.5 + 0.1); // keep in range, constant +0.1 after halving both
    let mut first = base.clone();
    first.y = base.y.map(|v| v * 0.5);
    let mut ex = VideoPairExtractor::new(&spec, ExtractorConfig::default()).unwrap();
    ex.push_pair(&first, &first).unwrap();
    ex.push_pair(&next, &next).unwrap();
    let records = ex.finish().unwrap();
    let mad_ref = records[1].get("Y-MAD-Ref").unwrap();
    assert!((mad_ref - 0.2).abs() < 1e-12, "got {mad_ref}");
}

#[test]
fn computation_sharing_counts_base_transforms() {
    let frames = drifting_video(96, 96, 5, 2);

    // Luma-only model: one Y transform per side per frame.
    let spec = ModelSpec::builtin("Y-FUNQUE+").unwrap();
    instrumentation::reset();
    let mut ex = VideoPairExtractor::new(&spec, ExtractorConfig::default()).unwrap();
    for f in &frames {
        ex.push_pair(f, f).unwrap();
    }
    ex.finish().unwrap();
    assert_eq!(instrumentation::base_transform_count(), 2 * 2);

    // Three-channel model: three planes per side per frame, HDRMAX2 adds
    // side-channel transforms without touching the base count.
    let spec = ModelSpec::builtin("3C-FUNQUE+")
        .unwrap()
        .with_hdrmax(HdrmaxAugmentation::H2)
        .unwrap();
    instrumentation::reset();
    let mut ex = VideoPairExtractor::new(&spec, ExtractorConfig::default()).unwrap();
    for f in &frames {
        ex.push_pair(f, f).unwrap();
    }
    ex.finish().unwrap();
    let [base, hdrmax, diff] = instrumentation::counts();
    assert_eq!(base, 2 * 2 * 3);
    assert_eq!(hdrmax, 2 * 2 * 2); // two branches, both sides, both frames
    assert_eq!(diff, 2); // one diff pair from t=1
    instrumentation::reset();
}

#[test]
fn extraction_is_deterministic() {
    let spec = ModelSpec::builtin("3C-FUNQUE+")
        .unwrap()
        .with_hdrmax(HdrmaxAugmentation::H1)
        .unwrap();
    let frames = drifting_video(96, 96, 6, 3);
    let run = || {
        let mut ex = VideoPairExtractor::new(&spec, ExtractorConfig::default()).unwrap();
        for f in &frames {
            let mut distorted = f.clone();
            distorted.y = crate::kernels::gaussian_blur(&f.y, 1.0, 3);
            ex.push_pair(f, &distorted).unwrap();
        }
        ex.finish().unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a.len(), b.len());
    for (ra, rb) in a.iter().zip(&b) {
        for ((na, va), (nb, vb)) in ra.values.iter().zip(&rb.values) {
            assert_eq!(na, nb);
            assert_eq!(va.to_bits(), vb.to_bits());
        }
    }
}

#[test]
fn unknown_feature_is_a_registry_error() {
    let spec = ModelSpec {
        name: "broken".into(),
        features: vec!["Y-NOT-REAL".into()],
        hdrmax_variants: vec![],
        target_condition: None,
    };
    assert!(matches!(
        VideoPairExtractor::new(&spec, ExtractorConfig::default()),
        Err(AtomsError::UnknownFeature(_))
    ));
}

#[test]
fn frame_mismatch_is_rejected() {
    let spec = ModelSpec::builtin("Y-FUNQUE+").unwrap();
    let a = textured_frame(64, 64, 7);
    let b = textured_frame(96, 64, 8);
    let mut ex = VideoPairExtractor::new(&spec, ExtractorConfig::default()).unwrap();
    assert!(matches!(
        ex.push_pair(&a, &b),
        Err(AtomsError::FrameMismatch(_))
    ));
}

#[test]
fn jsonl_row_shape() {
    let spec = ModelSpec::builtin("Y-FUNQUE+").unwrap();
    let frame = textured_frame(64, 64, 9);
    let record =
        extract_frame_features(&frame, &frame, None, &spec, ExtractorConfig::default()).unwrap();
    let line = record.to_jsonl("clipA");
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert_eq!(v["video_id"], "clipA");
    assert_eq!(v["frame_index"], 0);
    assert_eq!(v["features"]["Y-MS-ESSIM"], 1.0);
    assert_eq!(v["features"].as_object().unwrap().len(), 3);
}

#[test]
fn mean_aggregation() {
    let mut r0 = indexmap::IndexMap::new();
    r0.insert("A".to_string(), 1.0);
    let mut r1 = indexmap::IndexMap::new();
    r1.insert("A".to_string(), 3.0);
    let records = vec![
        FeatureRecord {
            frame_index: 0,
            values: r0,
        },
        FeatureRecord {
            frame_index: 1,
            values: r1,
        },
    ];
    assert_eq!(mean_features(&records)["A"], 2.0);
    assert!(mean_features(&[]).is_empty());
}

#[test]
fn hdrmax_side_channel_identity_values() {
    let spec = ModelSpec::builtin("Y-FUNQUE+")
        .unwrap()
        .with_hdrmax(HdrmaxAugmentation::H1)
        .unwrap();
    let frame = textured_frame(96, 96, 10);
    let record =
        extract_frame_features(&frame, &frame, None, &spec, ExtractorConfig::default()).unwrap();
    for scale in 1..=4 {
        assert_eq!(record.get(&format!("Y-H1-VIF-{scale}")), Some(1.0));
    }
    assert_eq!(record.get("Y-H1-DLM-S"), Some(1.0));
}
