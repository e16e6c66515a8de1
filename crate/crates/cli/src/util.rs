//! Shared plumbing: error classification and exit codes, config-file
//! resolution, geometry parsing, and video-source opening.

use std::path::Path;

use hdrfunque::atoms::AtomsError;
use hdrfunque::eval::EvalError;
use hdrfunque::frameio::{ChromaSubsampling, FrameSource, RawYuvReader, SampleRange, Y4mReader};
use hdrfunque::fusion::FusionError;
use hdrfunque::unified::ViewingGeometry;
use hdrfunque::{FrameIoError, TransferError, UnifiedError};

use crate::RawVideoArgs;

/// CLI failure, classified for the exit code contract.
#[derive(Debug)]
pub enum CliError {
    /// Usage or input problem (exit 2).
    Input(String),
    /// Numeric failure while computing (exit 3).
    Numeric(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Numeric(_) => "numeric",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn input(msg: impl std::fmt::Display) -> CliError {
        CliError::Input(msg.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Numeric(m) => write!(f, "{m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<FrameIoError> for CliError {
    fn from(e: FrameIoError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<TransferError> for CliError {
    fn from(e: TransferError) -> Self {
        match e {
            TransferError::CodeOutOfRange(_) | TransferError::NegativeLuminance(_) => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<UnifiedError> for CliError {
    fn from(e: UnifiedError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<AtomsError> for CliError {
    fn from(e: AtomsError) -> Self {
        match e {
            AtomsError::NonFiniteFeature { .. } => CliError::Numeric(e.to_string()),
            AtomsError::Transfer(t) => t.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<FusionError> for CliError {
    fn from(e: FusionError) -> Self {
        match e {
            FusionError::NonFiniteTraining { .. } | FusionError::NothingToFit => {
                CliError::Numeric(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::ConstantInput
            | EvalError::NonFiniteInput
            | EvalError::AllSplitsFailed { .. } => CliError::Numeric(e.to_string()),
            EvalError::Fusion(f) => f.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

/// Optional defaults loadable from a TOML config file.
#[derive(Debug, Default, serde::Deserialize)]
struct FileConfig {
    seed: Option<u64>,
    threads: Option<usize>,
    geometry: Option<String>,
}

/// Shared flags after flag > config > default resolution.
#[derive(Debug, Clone)]
pub struct Globals {
    pub seed: u64,
    pub threads: Option<usize>,
    pub geometry: ViewingGeometry,
}

impl Globals {
    pub fn resolve(
        config_path: Option<&Path>,
        seed: Option<u64>,
        threads: Option<usize>,
        geometry: Option<&str>,
    ) -> Result<Globals, CliError> {
        let file: FileConfig = match config_path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::input(format!("cannot read config {path:?}: {e}")))?;
                toml::from_str(&text)
                    .map_err(|e| CliError::input(format!("bad config {path:?}: {e}")))?
            }
            None => FileConfig::default(),
        };
        let geometry = match geometry.map(str::to_owned).or(file.geometry) {
            Some(text) => parse_geometry(&text)?,
            None => ViewingGeometry::default(),
        };
        Ok(Globals {
            seed: seed.or(file.seed).unwrap_or(0),
            threads: threads.or(file.threads),
            geometry,
        })
    }
}

/// Parses `D_H:HEIGHT_PX`, e.g. `1.5:2160`.
pub fn parse_geometry(text: &str) -> Result<ViewingGeometry, CliError> {
    let (ratio, px) = text
        .split_once(':')
        .ok_or_else(|| CliError::input(format!("geometry must be D_H:HEIGHT_PX, got {text:?}")))?;
    let ratio: f64 = ratio
        .parse()
        .map_err(|e| CliError::input(format!("bad D/H ratio {ratio:?}: {e}")))?;
    let px: u32 = px
        .parse()
        .map_err(|e| CliError::input(format!("bad display height {px:?}: {e}")))?;
    ViewingGeometry::new(ratio, px).map_err(CliError::from)
}

/// Opens a video by extension: `.y4m` is self-describing, anything else is
/// raw planar YUV described by the `--raw-*` flags.
pub fn open_video(path: &Path, raw: &RawVideoArgs) -> Result<Box<dyn FrameSource>, CliError> {
    if !path.exists() {
        return Err(CliError::input(format!("no such file: {}", path.display())));
    }
    let range = if raw.limited_range {
        SampleRange::Limited
    } else {
        SampleRange::Full
    };
    let is_y4m = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("y4m"))
        .unwrap_or(false);
    if is_y4m {
        Ok(Box::new(Y4mReader::open(path)?.with_range(range)))
    } else {
        let (Some(width), Some(height)) = (raw.raw_width, raw.raw_height) else {
            return Err(CliError::input(format!(
                "{} is raw YUV; --raw-width and --raw-height are required",
                path.display()
            )));
        };
        let subsampling: ChromaSubsampling = raw
            .raw_subsampling
            .parse()
            .map_err(|e: FrameIoError| CliError::input(e))?;
        Ok(Box::new(
            RawYuvReader::open(path, width, height, raw.raw_bit_depth, subsampling)?
                .with_range(range),
        ))
    }
}

/// `HH:MM:SS.mmm` local timestamp for progress logging.
pub fn timestamp() -> String {
    chrono::Local::now().format("%H:%M:%S%.3f").to_string()
}
