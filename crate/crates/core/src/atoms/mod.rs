//! Per-frame quality features ("atoms") computed in the shared transform
//! space, the feature-name registry, and the streaming per-video extractor.
//!
//! The extractor owns the computation-sharing contract: per (reference,
//! test) frame pair it builds exactly the pyramids the model's feature set
//! requires (the base per-plane transforms, one per requested HDRMAX
//! branch, and temporal-difference transforms), then evaluates every
//! feature against those shared, immutable pyramids.

mod basic;
mod dlm;
mod essim;
mod moments;
mod pu21_metrics;
mod rred;
mod vif;

pub use basic::{edge, mad, mad_approx};
pub use dlm::dlm_s;
pub use essim::{cov_pooled_score, ms_essim, ssim_map, MS_ESSIM_EXPONENTS};
pub use moments::{moment_maps, MomentMaps};
pub use pu21_metrics::{pu21_psnr, pu21_ssim};
pub use rred::{band_entropic_difference, srred_hv, trred_hv};
pub use vif::vif_scale;

use indexmap::IndexMap;

use crate::frameio::{FrameIoError, PlanarFrame, VideoPairStream};
use crate::fusion::ModelSpec;
use crate::plane::Plane;
use crate::transfer::{hdrmax_transform, HdrmaxVariant, LocalNormConfig, TransferError};
use crate::unified::{
    pixels_per_degree, sast_factor, transform_plane, CsfWeights, TransformKind, UnifiedError,
    ViewingGeometry, WaveletPyramid, DEFAULT_LEVELS,
};

/// Errors from feature computation and extraction.
#[derive(Debug, thiserror::Error)]
pub enum AtomsError {
    #[error("unknown feature name {0:?}")]
    UnknownFeature(String),
    #[error("duplicate feature name {0:?} in feature list")]
    DuplicateFeature(String),
    #[error("pyramid has {have} levels, feature needs {need}")]
    NotEnoughLevels { have: usize, need: usize },
    #[error("band dimensions differ: reference {}x{}, test {}x{}", reference.0, reference.1, test.0, test.1)]
    BandMismatch {
        reference: (usize, usize),
        test: (usize, usize),
    },
    #[error("band {width}x{height} smaller than one {block}x{block} block")]
    BandTooSmall {
        width: usize,
        height: usize,
        block: usize,
    },
    #[error("frame mismatch: {0}")]
    FrameMismatch(String),
    #[error("feature {name:?} is non-finite at frame {frame_index}")]
    NonFiniteFeature { name: String, frame_index: u64 },
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Unified(#[from] UnifiedError),
    #[error(transparent)]
    FrameIo(#[from] FrameIoError),
}

/// What a registered feature computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    /// Multi-scale enhanced SSIM on luma approximation bands.
    MsEssim,
    /// Temporal MAD of the reference video's level-1 approximation.
    MadRef,
    /// Temporal MAD of the test video's level-1 approximation.
    MadDis,
    /// Detail loss at the coarsest scale, luma.
    DlmS,
    /// Spatial entropic difference, luma H/V at level 1.
    SrredHv,
    /// Temporal entropic difference on frame-difference pyramids.
    TrredHv,
    /// Edge enhancement on the Cb detail bands at level 1.
    CbEdge,
    /// MAD between Cr level-1 approximation bands.
    CrMad,
    /// PU21-encoded PSNR baseline on raw luma.
    Pu21Psnr,
    /// PU21-encoded SSIM baseline on raw luma.
    Pu21Ssim,
    /// VIF at one scale on an HDRMAX-branch pyramid.
    SideVif { branch: HdrmaxVariant, scale: u8 },
    /// Detail loss at the coarsest scale on an HDRMAX-branch pyramid.
    SideDlm { branch: HdrmaxVariant },
}

impl FeatureKind {
    /// Temporal features need a previous frame; their t=0 value is
    /// backfilled from t=1 (or 0 for single-frame videos).
    pub fn is_temporal(&self) -> bool {
        matches!(
            self,
            FeatureKind::MadRef | FeatureKind::MadDis | FeatureKind::TrredHv
        )
    }
}

const BASE_FEATURES: &[(&str, FeatureKind)] = &[
    ("Y-MS-ESSIM", FeatureKind::MsEssim),
    ("Y-MAD-Ref", FeatureKind::MadRef),
    ("Y-MAD-Dis", FeatureKind::MadDis),
    ("Y-DLM-S", FeatureKind::DlmS),
    ("Y-SRRED-HV", FeatureKind::SrredHv),
    ("Y-TRRED-HV", FeatureKind::TrredHv),
    ("Cb-Edge", FeatureKind::CbEdge),
    ("Cr-MAD", FeatureKind::CrMad),
    ("PU21-PSNR", FeatureKind::Pu21Psnr),
    ("PU21-SSIM", FeatureKind::Pu21Ssim),
];

/// Resolves a feature name against the registry.
pub fn parse_feature(name: &str) -> Result<FeatureKind, AtomsError> {
    if let Some((_, kind)) = BASE_FEATURES.iter().find(|(n, _)| *n == name) {
        return Ok(*kind);
    }
    // Side-channel names: Y-<branch>-VIF-<scale> and Y-<branch>-DLM-S.
    for branch in [
        HdrmaxVariant::H1,
        HdrmaxVariant::H2Pos,
        HdrmaxVariant::H2Neg,
    ] {
        let prefix = format!("Y-{}-", branch.name());
        if let Some(rest) = name.strip_prefix(&prefix) {
            if rest == "DLM-S" {
                return Ok(FeatureKind::SideDlm { branch });
            }
            if let Some(scale) = rest.strip_prefix("VIF-") {
                if let Ok(s @ 1..=4) = scale.parse::<u8>() {
                    return Ok(FeatureKind::SideVif { branch, scale: s });
                }
            }
        }
    }
    Err(AtomsError::UnknownFeature(name.to_string()))
}

/// The five side-channel feature names contributed by one HDRMAX branch:
/// VIF at scales 1-4 plus the coarsest-scale detail loss.
pub fn branch_side_features(branch: HdrmaxVariant) -> Vec<String> {
    let mut names: Vec<String> = (1..=4)
        .map(|s| format!("Y-{}-VIF-{s}", branch.name()))
        .collect();
    names.push(format!("Y-{}-DLM-S", branch.name()));
    names
}

/// Named per-frame feature values for one (reference, test) frame pair.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FeatureRecord {
    pub frame_index: u64,
    pub values: IndexMap<String, f64>,
}

impl FeatureRecord {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    /// One JSON-lines object: `{video_id, frame_index, features:{...}}`.
    pub fn to_jsonl(&self, video_id: &str) -> String {
        #[derive(serde::Serialize)]
        struct Row<'a> {
            video_id: &'a str,
            frame_index: u64,
            features: &'a IndexMap<String, f64>,
        }
        serde_json::to_string(&Row {
            video_id,
            frame_index: self.frame_index,
            features: &self.values,
        })
        .expect("feature record serializes")
    }
}

/// Arithmetic per-feature mean over a video's frame records.
pub fn mean_features(records: &[FeatureRecord]) -> IndexMap<String, f64> {
    let mut out: IndexMap<String, f64> = IndexMap::new();
    if records.is_empty() {
        return out;
    }
    for record in records {
        for (name, &v) in &record.values {
            *out.entry(name.clone()).or_insert(0.0) += v;
        }
    }
    let n = records.len() as f64;
    for v in out.values_mut() {
        *v /= n;
    }
    out
}

/// Geometry and preprocessing configuration for feature extraction.
#[derive(Debug, Clone)]
pub struct ExtractorConfig {
    pub geometry: ViewingGeometry,
    pub levels: usize,
    pub norm: LocalNormConfig,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig {
            geometry: ViewingGeometry::default(),
            levels: DEFAULT_LEVELS,
            norm: LocalNormConfig::default(),
        }
    }
}

/// Which transforms the current feature plan requires.
#[derive(Debug, Default)]
struct TransformNeeds {
    y: bool,
    cb: bool,
    cr: bool,
    temporal_mad: bool,
    temporal_diff: bool,
    branches: Vec<HdrmaxVariant>,
}

/// Streaming feature extractor over a (reference, test) frame-pair sequence.
///
/// Frames are pushed in display order; each frame's pyramids are built once
/// and cached exactly as long as the temporal features need them. Call
/// [`VideoPairExtractor::finish`] to backfill the t=0 temporal values and
/// take the records.
pub struct VideoPairExtractor {
    plan: Vec<(String, FeatureKind)>,
    cfg: ExtractorConfig,
    factor: f64,
    luma_weights: CsfWeights,
    chroma_weights: Option<CsfWeights>,
    needs: TransformNeeds,
    prev_ref_a1: Option<Plane>,
    prev_test_a1: Option<Plane>,
    prev_ref_y: Option<Plane>,
    prev_test_y: Option<Plane>,
    records: Vec<FeatureRecord>,
}

impl VideoPairExtractor {
    pub fn new(spec: &ModelSpec, cfg: ExtractorConfig) -> Result<Self, AtomsError> {
        let mut plan = Vec::with_capacity(spec.features.len());
        let mut needs = TransformNeeds::default();
        for name in &spec.features {
            if plan.iter().any(|(n, _): &(String, _)| n == name) {
                return Err(AtomsError::DuplicateFeature(name.clone()));
            }
            let kind = parse_feature(name)?;
            match kind {
                FeatureKind::MsEssim
                | FeatureKind::DlmS
                | FeatureKind::SrredHv
                | FeatureKind::MadRef
                | FeatureKind::MadDis => needs.y = true,
                FeatureKind::CbEdge => needs.cb = true,
                FeatureKind::CrMad => needs.cr = true,
                FeatureKind::TrredHv => needs.temporal_diff = true,
                FeatureKind::Pu21Psnr | FeatureKind::Pu21Ssim => {}
                FeatureKind::SideVif { branch, .. } | FeatureKind::SideDlm { branch } => {
                    if !needs.branches.contains(&branch) {
                        needs.branches.push(branch);
                    }
                }
            }
            if matches!(kind, FeatureKind::MadRef | FeatureKind::MadDis) {
                needs.temporal_mad = true;
            }
            plan.push((name.clone(), kind));
        }
        let factor = sast_factor(&cfg.geometry);
        let luma_weights = CsfWeights::from_ppd(pixels_per_degree(&cfg.geometry), cfg.levels);
        Ok(VideoPairExtractor {
            plan,
            cfg,
            factor,
            luma_weights,
            chroma_weights: None,
            needs,
            prev_ref_a1: None,
            prev_test_a1: None,
            prev_ref_y: None,
            prev_test_y: None,
            records: Vec::new(),
        })
    }

    /// Ordered feature names this extractor produces.
    pub fn feature_names(&self) -> Vec<String> {
        self.plan.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Processes the next lockstep frame pair.
    pub fn push_pair(
        &mut self,
        reference: &PlanarFrame,
        test: &PlanarFrame,
    ) -> Result<(), AtomsError> {
        if (reference.width, reference.height) != (test.width, test.height)
            || reference.subsampling != test.subsampling
        {
            return Err(AtomsError::FrameMismatch(format!(
                "reference {}x{} {:?} vs test {}x{} {:?}",
                reference.width,
                reference.height,
                reference.subsampling,
                test.width,
                test.height,
                test.subsampling
            )));
        }
        let frame_index = self.records.len() as u64;
        let levels = self.cfg.levels;
        let factor = self.factor;

        // Base per-plane pyramids, each computed at most once per frame.
        let y_pair = if self.needs.y {
            Some((
                transform_plane(
                    &reference.y,
                    factor,
                    levels,
                    Some(&self.luma_weights),
                    TransformKind::Base,
                )?,
                transform_plane(
                    &test.y,
                    factor,
                    levels,
                    Some(&self.luma_weights),
                    TransformKind::Base,
                )?,
            ))
        } else {
            None
        };
        if (self.needs.cb || self.needs.cr) && self.chroma_weights.is_none() {
            let ppd = pixels_per_degree(&self.cfg.geometry) * reference.cb.height() as f64
                / reference.y.height() as f64;
            self.chroma_weights = Some(CsfWeights::from_ppd(ppd, self.cfg.levels));
        }
        let cb_pair = if self.needs.cb {
            let w = self.chroma_weights.as_ref().expect("set above");
            Some((
                transform_plane(&reference.cb, factor, levels, Some(w), TransformKind::Base)?,
                transform_plane(&test.cb, factor, levels, Some(w), TransformKind::Base)?,
            ))
        } else {
            None
        };
        let cr_pair = if self.needs.cr {
            let w = self.chroma_weights.as_ref().expect("set above");
            Some((
                transform_plane(&reference.cr, factor, levels, Some(w), TransformKind::Base)?,
                transform_plane(&test.cr, factor, levels, Some(w), TransformKind::Base)?,
            ))
        } else {
            None
        };

        // One shared pyramid pair per requested HDRMAX branch.
        let mut branch_pyrs: Vec<(HdrmaxVariant, WaveletPyramid, WaveletPyramid)> = Vec::new();
        for &branch in &self.needs.branches {
            let r = hdrmax_transform(&reference.y, branch, &self.cfg.norm);
            let t = hdrmax_transform(&test.y, branch, &self.cfg.norm);
            branch_pyrs.push((
                branch,
                transform_plane(
                    &r,
                    factor,
                    levels,
                    Some(&self.luma_weights),
                    TransformKind::Hdrmax,
                )?,
                transform_plane(
                    &t,
                    factor,
                    levels,
                    Some(&self.luma_weights),
                    TransformKind::Hdrmax,
                )?,
            ));
        }

        // Temporal-difference pyramids for TRRED (from t = 1 on).
        let diff_pair = if self.needs.temporal_diff {
            match (&self.prev_ref_y, &self.prev_test_y) {
                (Some(pr), Some(pt)) => {
                    let dr = reference.y.zip_map(pr, |a, b| a - b);
                    let dt = test.y.zip_map(pt, |a, b| a - b);
                    Some((
                        transform_plane(
                            &dr,
                            factor,
                            levels,
                            Some(&self.luma_weights),
                            TransformKind::TemporalDiff,
                        )?,
                        transform_plane(
                            &dt,
                            factor,
                            levels,
                            Some(&self.luma_weights),
                            TransformKind::TemporalDiff,
                        )?,
                    ))
                }
                _ => None,
            }
        } else {
            None
        };

        fn pair(
            p: &Option<(WaveletPyramid, WaveletPyramid)>,
        ) -> (&WaveletPyramid, &WaveletPyramid) {
            let (r, t) = p.as_ref().expect("plan guarantees pyramid availability");
            (r, t)
        }

        let mut values: IndexMap<String, f64> = IndexMap::with_capacity(self.plan.len());
        for (name, kind) in &self.plan {
            let value = match kind {
                FeatureKind::MsEssim => {
                    let (r, t) = pair(&y_pair);
                    Some(ms_essim(r, t)?)
                }
                FeatureKind::DlmS => {
                    let (r, t) = pair(&y_pair);
                    Some(dlm_s(r, t, levels)?)
                }
                FeatureKind::SrredHv => {
                    let (r, t) = pair(&y_pair);
                    Some(srred_hv(r, t, 1)?)
                }
                FeatureKind::MadRef => {
                    let (r, _) = pair(&y_pair);
                    self.prev_ref_a1
                        .as_ref()
                        .map(|prev| mad(&r.level(1).a, prev))
                        .transpose()?
                }
                FeatureKind::MadDis => {
                    let (_, t) = pair(&y_pair);
                    self.prev_test_a1
                        .as_ref()
                        .map(|prev| mad(&t.level(1).a, prev))
                        .transpose()?
                }
                FeatureKind::TrredHv => match &diff_pair {
                    Some((dr, dt)) => Some(trred_hv(dr, dt, 1)?),
                    None => None,
                },
                FeatureKind::CbEdge => {
                    let (r, t) = pair(&cb_pair);
                    Some(edge(r, t, 1)?)
                }
                FeatureKind::CrMad => {
                    let (r, t) = pair(&cr_pair);
                    Some(mad_approx(r, t)?)
                }
                FeatureKind::Pu21Psnr => Some(pu21_psnr(&reference.y, &test.y)?),
                FeatureKind::Pu21Ssim => Some(pu21_ssim(&reference.y, &test.y)?),
                FeatureKind::SideVif { branch, scale } => {
                    let (_, r, t) = branch_pyrs
                        .iter()
                        .find(|(b, _, _)| b == branch)
                        .expect("plan guarantees branch pyramids");
                    Some(vif_scale(r, t, *scale as usize)?)
                }
                FeatureKind::SideDlm { branch } => {
                    let (_, r, t) = branch_pyrs
                        .iter()
                        .find(|(b, _, _)| b == branch)
                        .expect("plan guarantees branch pyramids");
                    Some(dlm_s(r, t, levels)?)
                }
            };
            match value {
                Some(v) => {
                    if !v.is_finite() {
                        return Err(AtomsError::NonFiniteFeature {
                            name: name.clone(),
                            frame_index,
                        });
                    }
                    values.insert(name.clone(), v);
                }
                // Temporal feature at t=0: placeholder, backfilled in finish().
                None => {
                    values.insert(name.clone(), f64::NAN);
                }
            }
        }

        // Cache what the temporal features will need at t+1.
        if self.needs.temporal_mad {
            let (r, t) = pair(&y_pair);
            self.prev_ref_a1 = Some(r.level(1).a.clone());
            self.prev_test_a1 = Some(t.level(1).a.clone());
        }
        if self.needs.temporal_diff {
            self.prev_ref_y = Some(reference.y.clone());
            self.prev_test_y = Some(test.y.clone());
        }

        self.records.push(FeatureRecord {
            frame_index,
            values,
        });
        Ok(())
    }

    /// Number of frame pairs processed so far.
    pub fn frames(&self) -> usize {
        self.records.len()
    }

    /// Backfills t=0 temporal values (copied from t=1, or 0 for single-frame
    /// videos) and returns the per-frame records.
    pub fn finish(mut self) -> Result<Vec<FeatureRecord>, AtomsError> {
        let temporal: Vec<String> = self
            .plan
            .iter()
            .filter(|(_, k)| k.is_temporal())
            .map(|(n, _)| n.clone())
            .collect();
        if !self.records.is_empty() {
            for name in &temporal {
                let fill = if self.records.len() >= 2 {
                    self.records[1].values[name.as_str()]
                } else {
                    0.0
                };
                self.records[0].values[name.as_str()] = fill;
            }
        }
        for record in &self.records {
            for (name, &v) in &record.values {
                if !v.is_finite() {
                    return Err(AtomsError::NonFiniteFeature {
                        name: name.clone(),
                        frame_index: record.frame_index,
                    });
                }
            }
        }
        Ok(self.records)
    }
}

/// Extracts features for a single frame pair, optionally preceded by a
/// previous pair for the temporal features.
pub fn extract_frame_features(
    reference: &PlanarFrame,
    test: &PlanarFrame,
    previous: Option<(&PlanarFrame, &PlanarFrame)>,
    spec: &ModelSpec,
    cfg: ExtractorConfig,
) -> Result<FeatureRecord, AtomsError> {
    let mut extractor = VideoPairExtractor::new(spec, cfg)?;
    if let Some((pr, pt)) = previous {
        extractor.push_pair(pr, pt)?;
    }
    extractor.push_pair(reference, test)?;
    let mut records = extractor.finish()?;
    Ok(records.pop().expect("at least one record"))
}

/// Runs the extractor over an entire video pair stream.
pub fn extract_video_features(
    stream: &mut VideoPairStream,
    spec: &ModelSpec,
    cfg: ExtractorConfig,
) -> Result<Vec<FeatureRecord>, AtomsError> {
    let mut extractor = VideoPairExtractor::new(spec, cfg)?;
    while let Some((r, t)) = stream.next_pair()? {
        extractor.push_pair(&r, &t)?;
    }
    extractor.finish()
}

#[cfg(test)]
mod tests;
