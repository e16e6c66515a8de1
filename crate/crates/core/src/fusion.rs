//! Declarative model specifications and the fusion regressor: features are
//! standardized on the training set and combined by closed-form ridge
//! regression, which keeps the 1000-split protocol fast and exactly
//! reproducible.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::atoms::{self, AtomsError};
use crate::transfer::HdrmaxVariant;

/// Serialized model format version.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Default regularizer grid for hyperparameter tuning, spanning under- to
/// over-regularized on standardized features.
pub const LAMBDA_GRID: [f64; 7] = [1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0];

/// Variance below which a feature column counts as constant and is dropped.
const ZERO_VARIANCE: f64 = 1e-24;

/// Errors from model specification, training, and serialization.
#[derive(Debug, thiserror::Error)]
pub enum FusionError {
    #[error("unknown model {0:?}")]
    UnknownModel(String),
    #[error("duplicate feature {0:?} in model spec")]
    DuplicateFeature(String),
    #[error("HDRMAX augmentation {0:?} already applied")]
    DuplicateAugmentation(HdrmaxAugmentation),
    #[error("training needs at least 2 rows, got {0}")]
    NotEnoughRows(usize),
    #[error("feature matrix row {row} has {got} values, spec has {want} features")]
    RowWidthMismatch { row: usize, got: usize, want: usize },
    #[error("non-finite value in training data (row {row})")]
    NonFiniteTraining { row: usize },
    #[error("all features were dropped as zero-variance; nothing to fit")]
    NothingToFit,
    #[error("system is singular at lambda = 0; use lambda > 0")]
    SingularSystem,
    #[error("prediction input is missing feature {0:?}")]
    MissingFeature(String),
    #[error("model file version {found}, this build reads version {supported}")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("model file is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Registry(#[from] AtomsError),
}

/// HDRMAX augmentation applied to a model's feature set: H1 adds one
/// side-channel branch (5 features), H2 adds two (10 features).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HdrmaxAugmentation {
    H1,
    H2,
}

impl HdrmaxAugmentation {
    fn branches(self) -> &'static [HdrmaxVariant] {
        match self {
            HdrmaxAugmentation::H1 => &[HdrmaxVariant::H1],
            HdrmaxAugmentation::H2 => &[HdrmaxVariant::H2Pos, HdrmaxVariant::H2Neg],
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            HdrmaxAugmentation::H1 => " +HDRMAX1",
            HdrmaxAugmentation::H2 => " +HDRMAX2",
        }
    }
}

/// Ambient viewing condition a model's MOS targets were collected under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmbientCondition {
    Dark,
    Bright,
}

impl AmbientCondition {
    pub fn name(&self) -> &'static str {
        match self {
            AmbientCondition::Dark => "dark",
            AmbientCondition::Bright => "bright",
        }
    }
}

/// A declarative model: its ordered feature list plus the HDRMAX
/// augmentations already folded into that list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub features: Vec<String>,
    #[serde(default)]
    pub hdrmax_variants: Vec<HdrmaxAugmentation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_condition: Option<AmbientCondition>,
}

impl ModelSpec {
    /// Built-in model names.
    pub fn builtin_names() -> &'static [&'static str] {
        &["Y-FUNQUE+", "3C-FUNQUE+", "PU21-PSNR", "PU21-SSIM"]
    }

    /// Looks up a built-in model (case-insensitive).
    pub fn builtin(name: &str) -> Result<ModelSpec, FusionError> {
        let canonical = name.to_ascii_uppercase();
        let features: &[&str] = match canonical.as_str() {
            "Y-FUNQUE+" => &["Y-MS-ESSIM", "Y-MAD-Ref", "Y-DLM-S"],
            "3C-FUNQUE+" => &[
                "Y-MS-ESSIM",
                "Y-MAD-Dis",
                "Y-DLM-S",
                "Y-SRRED-HV",
                "Y-TRRED-HV",
                "Cb-Edge",
                "Cr-MAD",
            ],
            "PU21-PSNR" => &["PU21-PSNR"],
            "PU21-SSIM" => &["PU21-SSIM"],
            _ => return Err(FusionError::UnknownModel(name.to_string())),
        };
        let spec = ModelSpec {
            name: canonical,
            features: features.iter().map(|s| s.to_string()).collect(),
            hdrmax_variants: Vec::new(),
            target_condition: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// A custom spec from an explicit feature list.
    pub fn custom(
        name: impl Into<String>,
        features: Vec<String>,
    ) -> Result<ModelSpec, FusionError> {
        let spec = ModelSpec {
            name: name.into(),
            features,
            hdrmax_variants: Vec::new(),
            target_condition: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Appends the side-channel feature block of one HDRMAX augmentation.
    pub fn with_hdrmax(mut self, aug: HdrmaxAugmentation) -> Result<ModelSpec, FusionError> {
        if self.hdrmax_variants.contains(&aug) {
            return Err(FusionError::DuplicateAugmentation(aug));
        }
        for branch in aug.branches() {
            self.features.extend(atoms::branch_side_features(*branch));
        }
        self.hdrmax_variants.push(aug);
        self.name.push_str(aug.suffix());
        self.validate()?;
        Ok(self)
    }

    /// Checks the feature list is registry-known and duplicate-free.
    pub fn validate(&self) -> Result<(), FusionError> {
        for (i, name) in self.features.iter().enumerate() {
            atoms::parse_feature(name)?;
            if self.features[..i].contains(name) {
                return Err(FusionError::DuplicateFeature(name.clone()));
            }
        }
        Ok(())
    }
}

/// Per-feature standardization parameters fitted on the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Training provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub training_rows: usize,
    /// FNV-1a hash over the training matrix and targets.
    pub training_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Features dropped for having zero variance on the training set.
    #[serde(default)]
    pub dropped_features: Vec<String>,
}

/// A fitted fusion model: retained features, their standardization, ridge
/// weights, and the intercept (the training MOS mean).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    /// Features actually used, in spec order minus dropped ones.
    pub features: Vec<String>,
    pub standardization: Standardization,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub metadata: ModelMetadata,
}

/// Fits a ridge regressor on standardized features.
///
/// `rows[i]` is aligned with `spec.features`; `y` is the MOS target. The
/// solution is `w = (Z'Z + lambda I)^-1 Z'(y - mean(y))` over the
/// standardized columns, computed by Cholesky factorization.
pub fn train(
    spec: &ModelSpec,
    rows: &[Vec<f64>],
    y: &[f64],
    lambda: f64,
) -> Result<TrainedModel, FusionError> {
    train_seeded(spec, rows, y, lambda, None)
}

/// [`train`] with a recorded protocol seed in the metadata.
pub fn train_seeded(
    spec: &ModelSpec,
    rows: &[Vec<f64>],
    y: &[f64],
    lambda: f64,
    seed: Option<u64>,
) -> Result<TrainedModel, FusionError> {
    let n = rows.len();
    if n < 2 || y.len() != n {
        return Err(FusionError::NotEnoughRows(n.min(y.len())));
    }
    let p_all = spec.features.len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != p_all {
            return Err(FusionError::RowWidthMismatch {
                row: i,
                got: row.len(),
                want: p_all,
            });
        }
        if row.iter().any(|v| !v.is_finite()) || !y[i].is_finite() {
            return Err(FusionError::NonFiniteTraining { row: i });
        }
    }

    // Column statistics; drop zero-variance features.
    let mut retained: Vec<usize> = Vec::with_capacity(p_all);
    let mut dropped: Vec<String> = Vec::new();
    let mut means = Vec::with_capacity(p_all);
    let mut stds = Vec::with_capacity(p_all);
    for j in 0..p_all {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let var = rows
            .iter()
            .map(|r| (r[j] - mean) * (r[j] - mean))
            .sum::<f64>()
            / n as f64;
        if var <= ZERO_VARIANCE {
            dropped.push(spec.features[j].clone());
        } else {
            retained.push(j);
            means.push(mean);
            stds.push(var.sqrt());
        }
    }
    if retained.is_empty() {
        return Err(FusionError::NothingToFit);
    }
    let p = retained.len();

    let y_mean = y.iter().sum::<f64>() / n as f64;

    // Z'Z + lambda I and Z'(y - y_mean) over standardized columns.
    let z = |i: usize, jj: usize| (rows[i][retained[jj]] - means[jj]) / stds[jj];
    let mut ata = vec![0.0; p * p];
    let mut aty = vec![0.0; p];
    for (i, &yi) in y.iter().enumerate() {
        let yc = yi - y_mean;
        for a in 0..p {
            let za = z(i, a);
            aty[a] += za * yc;
            for b in a..p {
                ata[a * p + b] += za * z(i, b);
            }
        }
    }
    for a in 0..p {
        ata[a * p + a] += lambda;
        for b in 0..a {
            ata[a * p + b] = ata[b * p + a];
        }
    }

    let weights = cholesky_solve(&ata, &aty, p).ok_or(FusionError::SingularSystem)?;

    Ok(TrainedModel {
        spec: spec.clone(),
        features: retained.iter().map(|&j| spec.features[j].clone()).collect(),
        standardization: Standardization { means, stds },
        weights,
        intercept: y_mean,
        lambda,
        metadata: ModelMetadata {
            training_rows: n,
            training_hash: fnv1a_hash(rows, y),
            seed,
            dropped_features: dropped,
        },
    })
}

/// Solves `A x = b` for symmetric positive-definite `A` (row-major, `p x p`).
fn cholesky_solve(a: &[f64], b: &[f64], p: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut sum = a[i * p + j];
            for k in 0..j {
                sum -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                // A pivot that lost essentially all of the diagonal to
                // cancellation means the system is (numerically) singular.
                if sum <= 1e-12 * a[i * p + i].abs() {
                    return None;
                }
                l[i * p + i] = sum.sqrt();
            } else {
                l[i * p + j] = sum / l[j * p + j];
            }
        }
    }
    // forward substitution L z = b
    let mut z = vec![0.0; p];
    for i in 0..p {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * p + k] * z[k];
        }
        z[i] = sum / l[i * p + i];
    }
    // back substitution L' x = z
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut sum = z[i];
        for k in i + 1..p {
            sum -= l[k * p + i] * x[k];
        }
        x[i] = sum / l[i * p + i];
    }
    Some(x)
}

fn fnv1a_hash(rows: &[Vec<f64>], y: &[f64]) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: [u8; 8]| {
        for b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    };
    for row in rows {
        for &v in row {
            eat(v.to_le_bytes());
        }
    }
    for &v in y {
        eat(v.to_le_bytes());
    }
    format!("{hash:016x}")
}

impl TrainedModel {
    /// Predicted MOS for a name-keyed feature vector; feature order in the
    /// map is irrelevant. Unclipped.
    pub fn predict(&self, features: &IndexMap<String, f64>) -> Result<f64, FusionError> {
        let mut score = self.intercept;
        for (j, name) in self.features.iter().enumerate() {
            let x = features
                .get(name)
                .copied()
                .ok_or_else(|| FusionError::MissingFeature(name.clone()))?;
            score += self.weights[j] * (x - self.standardization.means[j])
                / self.standardization.stds[j];
        }
        Ok(score)
    }

    /// Prediction from a slice aligned with `spec.features`.
    pub fn predict_row(&self, row: &[f64]) -> Result<f64, FusionError> {
        if row.len() != self.spec.features.len() {
            return Err(FusionError::RowWidthMismatch {
                row: 0,
                got: row.len(),
                want: self.spec.features.len(),
            });
        }
        let mut score = self.intercept;
        let mut k = 0usize;
        for (j, name) in self.spec.features.iter().enumerate() {
            if k < self.features.len() && self.features[k] == *name {
                score += self.weights[k] * (row[j] - self.standardization.means[k])
                    / self.standardization.stds[k];
                k += 1;
            }
        }
        Ok(score)
    }

    /// Versioned JSON serialization.
    pub fn save(&self) -> Vec<u8> {
        #[derive(Serialize)]
        struct File<'a> {
            version: u32,
            #[serde(flatten)]
            model: &'a TrainedModel,
        }
        serde_json::to_vec_pretty(&File {
            version: MODEL_FORMAT_VERSION,
            model: self,
        })
        .expect("model serializes")
    }

    /// Parses a model file, checking version and feature-registry validity.
    pub fn load(bytes: &[u8]) -> Result<TrainedModel, FusionError> {
        #[derive(Deserialize)]
        struct File {
            version: u32,
            #[serde(flatten)]
            model: TrainedModel,
        }
        let file: File = serde_json::from_slice(bytes)?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(FusionError::VersionMismatch {
                found: file.version,
                supported: MODEL_FORMAT_VERSION,
            });
        }
        let model = file.model;
        model.spec.validate()?;
        for name in &model.features {
            atoms::parse_feature(name)?;
        }
        Ok(model)
    }
}
