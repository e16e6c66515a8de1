use std::io::Write;
use std::path::Path;

use hdrfunque::atoms::{self, VideoPairExtractor};
use hdrfunque::frameio::VideoPairStream;
use hdrfunque::fusion::TrainedModel;

use super::{build_spec, extractor_config};
use crate::util::{open_video, CliError, Globals};
use crate::{ModelArgs, RawVideoArgs};

#[allow(clippy::too_many_arguments)]
pub fn run(
    globals: &Globals,
    reference: &Path,
    test: &Path,
    model_args: &ModelArgs,
    model_file: Option<&Path>,
    output: &str,
    video_id: Option<String>,
    raw: &RawVideoArgs,
) -> Result<(), CliError> {
    let trained = match model_file {
        Some(path) => Some(TrainedModel::load(&std::fs::read(path)?)?),
        None => None,
    };
    let spec = match &trained {
        Some(m) => m.spec.clone(),
        None => build_spec(model_args)?,
    };

    // Validate both inputs before any output file is created.
    let mut stream = VideoPairStream::new(open_video(reference, raw)?, open_video(test, raw)?);

    let mut extractor = VideoPairExtractor::new(&spec, extractor_config(globals))?;
    while let Some((r, t)) = stream.next_pair()? {
        extractor.push_pair(&r, &t)?;
    }
    if extractor.frames() == 0 {
        return Err(CliError::input("input videos contain no frames"));
    }
    let records = extractor.finish()?;

    let video_id = video_id.unwrap_or_else(|| {
        test.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "test".into())
    });

    let mut sink: Box<dyn Write> = if output == "-" {
        Box::new(std::io::stdout().lock())
    } else {
        Box::new(std::fs::File::create(output)?)
    };
    for record in &records {
        writeln!(sink, "{}", record.to_jsonl(&video_id))?;
    }
    sink.flush()?;

    let means = atoms::mean_features(&records);
    let predicted = trained.as_ref().map(|m| m.predict(&means)).transpose()?;

    #[derive(serde::Serialize)]
    struct Summary<'a> {
        video_id: &'a str,
        frames: usize,
        mean_features: &'a indexmap::IndexMap<String, f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        predicted_mos: Option<f64>,
    }
    let summary = Summary {
        video_id: &video_id,
        frames: records.len(),
        mean_features: &means,
        predicted_mos: predicted,
    };
    println!(
        "{}",
        serde_json::to_string(&summary).expect("summary serializes")
    );

    eprintln!(
        "scored {} frames of {} with {}{}",
        records.len(),
        video_id,
        spec.name,
        predicted
            .map(|p| format!(", predicted MOS {p:.2}"))
            .unwrap_or_default()
    );
    Ok(())
}
