use std::path::Path;

use hdrfunque::eval::{self, DatasetManifest, FeatureMatrix, SplitProtocol};
use hdrfunque::fusion::LAMBDA_GRID;

use super::{build_spec, extract_manifest_features, extractor_config};
use crate::util::{CliError, Globals};
use crate::{ModelArgs, RawVideoArgs};

#[allow(clippy::too_many_arguments)]
pub fn run(
    globals: &Globals,
    manifest_path: &Path,
    features_path: Option<&Path>,
    model_args: &ModelArgs,
    splits: usize,
    test_fraction: f64,
    lambdas: &[f64],
    out_dir: &Path,
    raw: &RawVideoArgs,
) -> Result<(), CliError> {
    let manifest = DatasetManifest::from_csv_path(manifest_path)?;
    let spec = build_spec(model_args)?;

    let features: FeatureMatrix = match features_path {
        Some(path) => FeatureMatrix::from_csv_path(path)?,
        None => {
            let manifest_dir = manifest_path.parent().unwrap_or(Path::new("."));
            let cfg = extractor_config(globals);
            let (matrix, failures) =
                extract_manifest_features(&manifest, manifest_dir, &spec, &cfg, raw, None);
            if let Some((id, err)) = failures.into_iter().next() {
                return Err(CliError::input(format!(
                    "feature extraction failed for {id}: {err}"
                )));
            }
            matrix
        }
    };

    let protocol = SplitProtocol {
        n_splits: splits,
        test_fraction,
        lambda_grid: if lambdas.is_empty() {
            LAMBDA_GRID.to_vec()
        } else {
            lambdas.to_vec()
        },
        seed: globals.seed,
    };
    let report = eval::evaluate(&manifest, &features, &spec, &protocol)?;
    eval::write_report(&report, out_dir)?;

    print!("{}", report.summary_csv());
    eprintln!(
        "evaluated {} over {} splits (lambda {}): dark SROCC {:.4} / PCC {:.4} / RMSE {:.4}, bright SROCC {:.4} / PCC {:.4} / RMSE {:.4}",
        report.model,
        report.n_splits,
        report.lambda,
        report.medians.dark.srocc,
        report.medians.dark.pcc,
        report.medians.dark.rmse,
        report.medians.bright.srocc,
        report.medians.bright.pcc,
        report.medians.bright.rmse,
    );
    if !report.failed_splits.is_empty() {
        eprintln!("warning: {} splits failed", report.failed_splits.len());
    }
    Ok(())
}
