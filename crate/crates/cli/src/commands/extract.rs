use std::path::Path;

use hdrfunque::eval::{DatasetManifest, FeatureMatrix};

use super::{build_spec, extract_manifest_features, extractor_config};
use crate::util::{CliError, Globals};
use crate::{ModelArgs, RawVideoArgs};

pub fn run(
    globals: &Globals,
    manifest_path: &Path,
    model_args: &ModelArgs,
    out: &Path,
    raw: &RawVideoArgs,
) -> Result<(), CliError> {
    let manifest = DatasetManifest::from_csv_path(manifest_path)?;
    let manifest_dir = manifest_path.parent().unwrap_or(Path::new("."));
    let spec = build_spec(model_args)?;

    let existing = if out.exists() {
        let m = FeatureMatrix::from_csv_path(out)?;
        if m.feature_names != spec.features {
            return Err(CliError::input(format!(
                "{} holds columns for a different feature set; remove it or pick another --out",
                out.display()
            )));
        }
        Some(m)
    } else {
        None
    };

    let cfg = extractor_config(globals);
    let (matrix, failures) =
        extract_manifest_features(&manifest, manifest_dir, &spec, &cfg, raw, existing.as_ref());

    // Atomic replace so an interrupted run never leaves a torn file.
    let tmp = out.with_extension("csv.tmp");
    std::fs::write(&tmp, matrix.to_csv())?;
    std::fs::rename(&tmp, out)?;

    eprintln!(
        "wrote {} rows ({} features) to {}",
        matrix.video_ids.len(),
        matrix.feature_names.len(),
        out.display()
    );
    if !failures.is_empty() {
        let ids: Vec<&str> = failures.iter().map(|(id, _)| id.as_str()).collect();
        return Err(CliError::input(format!(
            "{} of {} videos failed: {}",
            failures.len(),
            manifest.entries.len(),
            ids.join(", ")
        )));
    }
    Ok(())
}
