use std::path::Path;

use hdrfunque::eval::{DatasetManifest, FeatureMatrix};
use hdrfunque::fusion::{self, AmbientCondition};

use super::build_spec;
use crate::util::{CliError, Globals};
use crate::ModelArgs;

#[allow(clippy::too_many_arguments)]
pub fn run(
    globals: &Globals,
    manifest_path: &Path,
    features_path: &Path,
    model_args: &ModelArgs,
    condition: &str,
    lambda: f64,
    out: &Path,
) -> Result<(), CliError> {
    let manifest = DatasetManifest::from_csv_path(manifest_path)?;
    let features = FeatureMatrix::from_csv_path(features_path)?;
    let mut spec = build_spec(model_args)?;
    let condition = match condition {
        "dark" => AmbientCondition::Dark,
        "bright" => AmbientCondition::Bright,
        other => return Err(CliError::input(format!("unknown condition {other:?}"))),
    };
    spec.target_condition = Some(condition);

    let aligned = features.aligned_rows(&spec.features)?;
    let mut rows = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        let idx = features
            .video_ids
            .iter()
            .position(|v| v == &e.video_id)
            .ok_or_else(|| CliError::input(format!("no feature row for video {:?}", e.video_id)))?;
        rows.push(aligned[idx].clone());
    }
    let y = manifest.mos(condition);

    let model = fusion::train_seeded(&spec, &rows, &y, lambda, Some(globals.seed))?;
    std::fs::write(out, model.save())?;
    eprintln!(
        "trained {} ({} condition, lambda {}, {} rows, {} features retained) -> {}",
        model.spec.name,
        condition.name(),
        lambda,
        rows.len(),
        model.features.len(),
        out.display()
    );
    Ok(())
}
