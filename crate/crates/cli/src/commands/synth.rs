use std::path::Path;

use hdrfunque::eval::{synth_dataset, SynthParams};

use crate::util::{CliError, Globals};

pub fn run(
    globals: &Globals,
    out_dir: &Path,
    contents: usize,
    levels: usize,
    frames: usize,
    width: usize,
    height: usize,
) -> Result<(), CliError> {
    let params = SynthParams {
        n_contents: contents,
        n_levels: levels,
        frames,
        width,
        height,
        seed: globals.seed,
    };
    let manifest = synth_dataset(&params, out_dir)?;
    println!("{}", out_dir.join("manifest.csv").display());
    eprintln!(
        "generated {} videos ({} contents x {} levels, {} frames of {}x{}, seed {}) under {}",
        manifest.entries.len(),
        contents,
        levels,
        frames,
        width,
        height,
        globals.seed,
        out_dir.display()
    );
    Ok(())
}
