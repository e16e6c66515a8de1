use std::path::Path;

use hdrfunque::transfer::hdrmax_curves_csv;
use hdrfunque::unified::csf_weights;

use crate::util::{CliError, Globals};

pub fn run(globals: &Globals, out_dir: &Path, samples: usize) -> Result<(), CliError> {
    if samples < 2 {
        return Err(CliError::input("--samples must be at least 2"));
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", out_dir.display())))?;

    let curves = out_dir.join("hdrmax_curves.csv");
    std::fs::write(&curves, hdrmax_curves_csv(samples))?;

    let weights = out_dir.join("csf_weights.csv");
    std::fs::write(
        &weights,
        csf_weights(&globals.geometry, hdrfunque::unified::DEFAULT_LEVELS).to_csv(),
    )?;

    eprintln!(
        "wrote {} ({} samples) and {}",
        curves.display(),
        samples,
        weights.display()
    );
    Ok(())
}
