pub mod evaluate;
pub mod extract;
pub mod plot;
pub mod score;
pub mod synth;
pub mod train;

use std::path::{Path, PathBuf};

use hdrfunque::atoms::{self, ExtractorConfig, VideoPairExtractor};
use hdrfunque::eval::{DatasetManifest, FeatureMatrix};
use hdrfunque::frameio::VideoPairStream;
use hdrfunque::fusion::{HdrmaxAugmentation, ModelSpec};
use hdrfunque::transfer::LocalNormConfig;
use rayon::prelude::*;

use crate::util::{open_video, timestamp, CliError, Globals};
use crate::{ModelArgs, RawVideoArgs};

/// Builds the effective model spec from `--model` and the HDRMAX flags.
pub fn build_spec(args: &ModelArgs) -> Result<ModelSpec, CliError> {
    let mut spec = ModelSpec::builtin(&args.model)?;
    if args.hdrmax1 {
        spec = spec.with_hdrmax(HdrmaxAugmentation::H1)?;
    }
    if args.hdrmax2 {
        spec = spec.with_hdrmax(HdrmaxAugmentation::H2)?;
    }
    Ok(spec)
}

pub fn extractor_config(globals: &Globals) -> ExtractorConfig {
    ExtractorConfig {
        geometry: globals.geometry,
        levels: hdrfunque::unified::DEFAULT_LEVELS,
        norm: LocalNormConfig::default(),
    }
}

/// Resolves a manifest-relative path against the manifest's directory.
fn resolve(manifest_dir: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest_dir.join(p)
    }
}

/// Per-video mean features for every manifest entry. Rows present in
/// `existing` are reused without recomputation; failed videos are returned
/// alongside the (partial) matrix so callers can keep the successes.
pub fn extract_manifest_features(
    manifest: &DatasetManifest,
    manifest_dir: &Path,
    spec: &ModelSpec,
    cfg: &ExtractorConfig,
    raw: &RawVideoArgs,
    existing: Option<&FeatureMatrix>,
) -> (FeatureMatrix, Vec<(String, CliError)>) {
    let reusable = existing.filter(|m| m.feature_names == spec.features);

    let results: Vec<Option<Result<Vec<f64>, CliError>>> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            if let Some(m) = reusable {
                if m.row(&entry.video_id).is_some() {
                    return None; // cached
                }
            }
            Some(extract_one(
                &resolve(manifest_dir, &entry.ref_path),
                &resolve(manifest_dir, &entry.test_path),
                spec,
                cfg.clone(),
                raw,
            ))
        })
        .collect();

    let mut matrix = FeatureMatrix::new(spec.features.clone());
    let mut failures = Vec::new();
    for (entry, outcome) in manifest.entries.iter().zip(results) {
        match outcome {
            None => {
                let row = reusable
                    .and_then(|m| m.row(&entry.video_id))
                    .expect("checked above")
                    .to_vec();
                eprintln!(
                    "[{}] {}: reused cached features",
                    timestamp(),
                    entry.video_id
                );
                matrix.push_row(entry.video_id.clone(), row);
            }
            Some(Ok(row)) => {
                eprintln!("[{}] {}: extracted", timestamp(), entry.video_id);
                matrix.push_row(entry.video_id.clone(), row);
            }
            Some(Err(err)) => {
                eprintln!("error[row]: video_id={}: {err}", entry.video_id);
                failures.push((entry.video_id.clone(), err));
            }
        }
    }
    (matrix, failures)
}

fn extract_one(
    ref_path: &Path,
    test_path: &Path,
    spec: &ModelSpec,
    cfg: ExtractorConfig,
    raw: &RawVideoArgs,
) -> Result<Vec<f64>, CliError> {
    let mut stream = VideoPairStream::new(open_video(ref_path, raw)?, open_video(test_path, raw)?);
    let mut extractor = VideoPairExtractor::new(spec, cfg)?;
    while let Some((r, t)) = stream.next_pair()? {
        extractor.push_pair(&r, &t)?;
    }
    if extractor.frames() == 0 {
        return Err(CliError::input(format!(
            "{} contains no frames",
            ref_path.display()
        )));
    }
    let records = extractor.finish()?;
    let means = atoms::mean_features(&records);
    Ok(spec.features.iter().map(|f| means[f.as_str()]).collect())
}
