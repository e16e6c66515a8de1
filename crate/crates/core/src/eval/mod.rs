//! Dataset manifests, content-separated random splits, the median-over-splits
//! evaluation protocol with regularizer tuning, and a synthetic dataset
//! generator for self-contained end-to-end runs.

pub mod stats;
mod synth;

pub use stats::{lower_median, midranks, pcc, rmse, srocc};
pub use synth::{synth_dataset, SynthParams};

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::frameio::FrameIoError;
use crate::fusion::{self, AmbientCondition, FusionError, ModelSpec, LAMBDA_GRID};

/// Errors from manifests, splitting, and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("duplicate video_id {0:?}")]
    DuplicateVideo(String),
    #[error("content {content_id:?} appears in groups {first:?} and {second:?}")]
    GroupConflict {
        content_id: String,
        first: String,
        second: String,
    },
    #[error("non-finite MOS for video {0:?}")]
    NonFiniteMos(String),
    #[error("need at least 2 content groups, got {0}")]
    NotEnoughGroups(usize),
    #[error("test fraction {fraction} yields no valid split of {groups} groups")]
    BadTestFraction { fraction: f64, groups: usize },
    #[error("vector lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("correlation is undefined for a constant vector")]
    ConstantInput,
    #[error("non-finite value in metric input")]
    NonFiniteInput,
    #[error("no feature row for video {0:?}")]
    MissingFeatureRow(String),
    #[error("feature matrix has no column {0:?}")]
    MissingFeatureColumn(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("every split failed; first failure (split {index}): {reason}")]
    AllSplitsFailed { index: usize, reason: String },
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    FrameIo(#[from] FrameIoError),
}

/// One dataset row: a (reference, test) video with its group label and MOS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub video_id: String,
    pub content_id: String,
    pub content_group: String,
    pub ref_path: String,
    pub test_path: String,
    pub mos_dark: f64,
    pub mos_bright: f64,
}

/// A validated dataset manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Builds and validates a manifest from rows.
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self, EvalError> {
        let mut seen_videos = std::collections::HashSet::new();
        let mut group_of: BTreeMap<&str, &str> = BTreeMap::new();
        for e in &entries {
            if !seen_videos.insert(e.video_id.as_str()) {
                return Err(EvalError::DuplicateVideo(e.video_id.clone()));
            }
            if let Some(&g) = group_of.get(e.content_id.as_str()) {
                if g != e.content_group {
                    return Err(EvalError::GroupConflict {
                        content_id: e.content_id.clone(),
                        first: g.to_string(),
                        second: e.content_group.clone(),
                    });
                }
            } else {
                group_of.insert(&e.content_id, &e.content_group);
            }
            if !e.mos_dark.is_finite() || !e.mos_bright.is_finite() {
                return Err(EvalError::NonFiniteMos(e.video_id.clone()));
            }
        }
        Ok(DatasetManifest { entries })
    }

    pub fn from_csv_reader(reader: impl Read) -> Result<Self, EvalError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut entries = Vec::new();
        for row in rdr.deserialize::<ManifestEntry>() {
            entries.push(row?);
        }
        DatasetManifest::new(entries)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        for e in &self.entries {
            wtr.serialize(e).expect("manifest row serializes");
        }
        String::from_utf8(wtr.into_inner().expect("flushes")).expect("utf8")
    }

    /// Sorted unique content groups.
    pub fn groups(&self) -> Vec<String> {
        let mut groups: Vec<String> = self
            .entries
            .iter()
            .map(|e| e.content_group.clone())
            .collect();
        groups.sort();
        groups.dedup();
        groups
    }

    /// MOS vector for one ambient condition, in entry order.
    pub fn mos(&self, condition: AmbientCondition) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| match condition {
                AmbientCondition::Dark => e.mos_dark,
                AmbientCondition::Bright => e.mos_bright,
            })
            .collect()
    }
}

/// One train/test partition, as indices into the manifest entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub test_groups: Vec<String>,
}

/// Content-separated random splits: whole groups travel to the test side.
/// `ceil(test_fraction * G)` of the `G` groups are held out per split. The
/// RNG is a seeded ChaCha12 with one stream per split index, so any split
/// can be regenerated independently and the list is platform-stable.
pub fn make_splits(
    manifest: &DatasetManifest,
    n_splits: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<Vec<Split>, EvalError> {
    let groups = manifest.groups();
    let g = groups.len();
    if g < 2 {
        return Err(EvalError::NotEnoughGroups(g));
    }
    let n_test = (test_fraction * g as f64).ceil() as usize;
    if n_test == 0 || n_test >= g {
        return Err(EvalError::BadTestFraction {
            fraction: test_fraction,
            groups: g,
        });
    }
    let mut splits = Vec::with_capacity(n_splits);
    for split_index in 0..n_splits {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(split_index as u64);
        let mut shuffled = groups.clone();
        shuffled.shuffle(&mut rng);
        let test_groups: Vec<String> = {
            let mut t = shuffled[..n_test].to_vec();
            t.sort();
            t
        };
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, e) in manifest.entries.iter().enumerate() {
            if test_groups.binary_search(&e.content_group).is_ok() {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        splits.push(Split {
            train,
            test,
            test_groups,
        });
    }
    Ok(splits)
}

/// Per-video feature vectors keyed by `video_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub feature_names: Vec<String>,
    pub video_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn new(feature_names: Vec<String>) -> Self {
        FeatureMatrix {
            feature_names,
            video_ids: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, video_id: String, row: Vec<f64>) {
        assert_eq!(row.len(), self.feature_names.len(), "row width mismatch");
        self.video_ids.push(video_id);
        self.rows.push(row);
    }

    pub fn row(&self, video_id: &str) -> Option<&[f64]> {
        self.video_ids
            .iter()
            .position(|v| v == video_id)
            .map(|i| self.rows[i].as_slice())
    }

    /// CSV with header `video_id,<feature>,...`, one row per video.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("video_id");
        for name in &self.feature_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (id, row) in self.video_ids.iter().zip(&self.rows) {
            out.push_str(id);
            for v in row {
                out.push(',');
                out.push_str(&format!("{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv_reader(reader: impl Read) -> Result<Self, EvalError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let mut cols = headers.iter();
        match cols.next() {
            Some("video_id") => {}
            other => {
                return Err(EvalError::Manifest(format!(
                    "features CSV must start with a video_id column, got {other:?}"
                )))
            }
        }
        let feature_names: Vec<String> = cols.map(|c| c.to_string()).collect();
        let mut matrix = FeatureMatrix::new(feature_names);
        for record in rdr.records() {
            let record = record?;
            let mut fields = record.iter();
            let id = fields
                .next()
                .ok_or_else(|| EvalError::Manifest("empty row in features CSV".into()))?
                .to_string();
            let row: Result<Vec<f64>, _> = fields.map(|f| f.parse::<f64>()).collect();
            let row = row.map_err(|e| {
                EvalError::Manifest(format!("bad feature value for video {id:?}: {e}"))
            })?;
            if row.len() != matrix.feature_names.len() {
                return Err(EvalError::Manifest(format!(
                    "video {id:?} has {} values, header has {} features",
                    row.len(),
                    matrix.feature_names.len()
                )));
            }
            matrix.push_row(id, row);
        }
        Ok(matrix)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    /// Reorders columns to match `wanted`, erroring on absent features.
    pub fn aligned_rows(&self, wanted: &[String]) -> Result<Vec<Vec<f64>>, EvalError> {
        let mut col_of = Vec::with_capacity(wanted.len());
        for name in wanted {
            let idx = self
                .feature_names
                .iter()
                .position(|f| f == name)
                .ok_or_else(|| EvalError::MissingFeatureColumn(name.clone()))?;
            col_of.push(idx);
        }
        Ok(self
            .rows
            .iter()
            .map(|row| col_of.iter().map(|&c| row[c]).collect())
            .collect())
    }
}

/// Protocol parameters for [`evaluate`].
#[derive(Debug, Clone)]
pub struct SplitProtocol {
    pub n_splits: usize,
    pub test_fraction: f64,
    pub lambda_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for SplitProtocol {
    /// 1000 content-separated splits, 80/20, the standard regularizer grid.
    fn default() -> Self {
        SplitProtocol {
            n_splits: 1000,
            test_fraction: 0.2,
            lambda_grid: LAMBDA_GRID.to_vec(),
            seed: 0,
        }
    }
}

/// PCC/SROCC/RMSE for one condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionMetrics {
    pub pcc: f64,
    pub srocc: f64,
    pub rmse: f64,
}

/// Metrics of one split under both ambient conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub index: usize,
    pub dark: ConditionMetrics,
    pub bright: ConditionMetrics,
}

/// A split that could not be scored, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedSplit {
    pub index: usize,
    pub reason: String,
}

/// The evaluation outcome: per-split metrics at the chosen regularizer and
/// their medians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub model: String,
    pub n_splits: usize,
    pub test_fraction: f64,
    pub seed: u64,
    pub lambda: f64,
    pub medians: Medians,
    pub splits: Vec<SplitMetrics>,
    pub failed_splits: Vec<FailedSplit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Medians {
    pub dark: ConditionMetrics,
    pub bright: ConditionMetrics,
}

impl SplitReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One-line summary CSV mirroring the published comparison layout.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "model,srocc_dark,pcc_dark,rmse_dark,srocc_bright,pcc_bright,rmse_bright\n",
        );
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            self.model,
            self.medians.dark.srocc,
            self.medians.dark.pcc,
            self.medians.dark.rmse,
            self.medians.bright.srocc,
            self.medians.bright.pcc,
            self.medians.bright.rmse,
        ));
        out
    }
}

struct LambdaOutcome {
    lambda: f64,
    objective: f64,
    splits: Vec<SplitMetrics>,
    failures: Vec<FailedSplit>,
}

/// Runs the content-separated cross-validation protocol.
///
/// For every regularizer in the grid, every split trains one model per
/// ambient condition on the train side and scores the held-out side; the
/// grid point maximizing the average of the median PCC and SROCC over both
/// conditions wins. Failed splits (e.g. degenerate predictions) are logged,
/// recorded in the report, and excluded from the medians.
pub fn evaluate(
    manifest: &DatasetManifest,
    features: &FeatureMatrix,
    spec: &ModelSpec,
    protocol: &SplitProtocol,
) -> Result<SplitReport, EvalError> {
    // Aligned per-entry rows and targets.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(manifest.entries.len());
    let col_rows = features.aligned_rows(&spec.features)?;
    for e in &manifest.entries {
        let idx = features
            .video_ids
            .iter()
            .position(|v| v == &e.video_id)
            .ok_or_else(|| EvalError::MissingFeatureRow(e.video_id.clone()))?;
        rows.push(col_rows[idx].clone());
    }
    let mos_dark = manifest.mos(AmbientCondition::Dark);
    let mos_bright = manifest.mos(AmbientCondition::Bright);

    let splits = make_splits(
        manifest,
        protocol.n_splits,
        protocol.test_fraction,
        protocol.seed,
    )?;

    let run_split = |index: usize, split: &Split, lambda: f64| -> Result<SplitMetrics, String> {
        let train_rows: Vec<Vec<f64>> = split.train.iter().map(|&i| rows[i].clone()).collect();
        let mut metrics = [None, None];
        for (slot, condition) in [AmbientCondition::Dark, AmbientCondition::Bright]
            .into_iter()
            .enumerate()
        {
            let y_all = match condition {
                AmbientCondition::Dark => &mos_dark,
                AmbientCondition::Bright => &mos_bright,
            };
            let y_train: Vec<f64> = split.train.iter().map(|&i| y_all[i]).collect();
            let model =
                fusion::train_seeded(spec, &train_rows, &y_train, lambda, Some(protocol.seed))
                    .map_err(|e| format!("{} training failed: {e}", condition.name()))?;
            let mut predictions = Vec::with_capacity(split.test.len());
            let mut targets = Vec::with_capacity(split.test.len());
            for &i in &split.test {
                predictions.push(
                    model
                        .predict_row(&rows[i])
                        .map_err(|e| format!("{} prediction failed: {e}", condition.name()))?,
                );
                targets.push(y_all[i]);
            }
            let pcc_v = stats::pcc(&predictions, &targets)
                .map_err(|e| format!("{} pcc: {e}", condition.name()))?;
            let srocc_v = stats::srocc(&predictions, &targets)
                .map_err(|e| format!("{} srocc: {e}", condition.name()))?;
            let rmse_v = stats::rmse(&predictions, &targets)
                .map_err(|e| format!("{} rmse: {e}", condition.name()))?;
            metrics[slot] = Some(ConditionMetrics {
                pcc: pcc_v,
                srocc: srocc_v,
                rmse: rmse_v,
            });
        }
        Ok(SplitMetrics {
            index,
            dark: metrics[0].unwrap(),
            bright: metrics[1].unwrap(),
        })
    };

    let mut best: Option<LambdaOutcome> = None;
    for &lambda in &protocol.lambda_grid {
        // Splits are independent; the ordered collect keys results by split
        // index so parallel and serial runs emit identical reports.
        let results: Vec<Result<SplitMetrics, String>> = splits
            .par_iter()
            .enumerate()
            .map(|(i, split)| run_split(i, split, lambda))
            .collect();
        let mut ok = Vec::with_capacity(results.len());
        let mut failures = Vec::new();
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok(m) => ok.push(m),
                Err(reason) => {
                    log::warn!("split {i} failed at lambda {lambda}: {reason}");
                    failures.push(FailedSplit { index: i, reason });
                }
            }
        }
        if ok.is_empty() {
            let first = failures.into_iter().next().expect("some split exists");
            return Err(EvalError::AllSplitsFailed {
                index: first.index,
                reason: first.reason,
            });
        }
        let med = |f: fn(&SplitMetrics) -> f64| {
            stats::lower_median(&ok.iter().map(f).collect::<Vec<_>>()).expect("non-empty")
        };
        let objective = (med(|m| m.dark.pcc)
            + med(|m| m.dark.srocc)
            + med(|m| m.bright.pcc)
            + med(|m| m.bright.srocc))
            / 4.0;
        let better = match &best {
            None => true,
            Some(b) => objective > b.objective,
        };
        if better {
            best = Some(LambdaOutcome {
                lambda,
                objective,
                splits: ok,
                failures,
            });
        }
    }

    let best = best.expect("lambda grid is non-empty");
    let med = |f: &dyn Fn(&SplitMetrics) -> f64| {
        stats::lower_median(&best.splits.iter().map(f).collect::<Vec<_>>()).expect("non-empty")
    };
    let medians = Medians {
        dark: ConditionMetrics {
            pcc: med(&|m| m.dark.pcc),
            srocc: med(&|m| m.dark.srocc),
            rmse: med(&|m| m.dark.rmse),
        },
        bright: ConditionMetrics {
            pcc: med(&|m| m.bright.pcc),
            srocc: med(&|m| m.bright.srocc),
            rmse: med(&|m| m.bright.rmse),
        },
    };
    Ok(SplitReport {
        model: spec.name.clone(),
        n_splits: protocol.n_splits,
        test_fraction: protocol.test_fraction,
        seed: protocol.seed,
        lambda: best.lambda,
        medians,
        splits: best.splits,
        failed_splits: best.failures,
    })
}

/// Writes `report.json` and `summary.csv` into a directory.
pub fn write_report(report: &SplitReport, out_dir: impl AsRef<Path>) -> Result<(), EvalError> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut j = std::fs::File::create(dir.join("report.json"))?;
    j.write_all(report.to_json().as_bytes())?;
    j.write_all(b"\n")?;
    let mut c = std::fs::File::create(dir.join("summary.csv"))?;
    c.write_all(report.summary_csv().as_bytes())?;
    Ok(())
}
