//! End-to-end detection on one channel: pipeline, decision loop and
//! localization back to raw-signal sample indices.

use std::fmt;
use std::str::FromStr;

use crate::decision::{
    detect, detect_pt, localize_rpeaks, ms_to_samples, DetectionResult, Provenance,
};
use crate::error::{Error, Result};
use crate::pipeline::{run_pipeline, PipelineConfig, StageOutputs};
use crate::settings::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    Ptpp,
    Pt,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 2] = [DetectorKind::Ptpp, DetectorKind::Pt];

    pub fn as_str(&self) -> &'static str {
        match self {
            DetectorKind::Ptpp => "ptpp",
            DetectorKind::Pt => "pt",
        }
    }

    pub fn pipeline_config(&self, settings: &Settings) -> PipelineConfig {
        match self {
            DetectorKind::Ptpp => settings.pipeline.clone(),
            DetectorKind::Pt => settings.pt_pipeline(),
        }
    }

    /// Minimum spacing between detections, in samples.
    pub fn min_separation(&self, settings: &Settings, fs: f64) -> usize {
        let ms = match self {
            DetectorKind::Ptpp => settings.detector.min_peak_separation_ms,
            DetectorKind::Pt => settings.pt.refractory_ms,
        };
        ms_to_samples(ms, fs).max(1)
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ptpp" | "pt++" => Ok(DetectorKind::Ptpp),
            "pt" => Ok(DetectorKind::Pt),
            other => Err(Error::Config(format!(
                "unknown detector {other:?}; expected ptpp or pt"
            ))),
        }
    }
}

/// Detections on one channel in raw-signal coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDetection {
    pub kind: DetectorKind,
    pub r_peaks: Vec<usize>,
    pub provenance: Vec<Provenance>,
    /// Decision-loop output in integrated-signal coordinates.
    pub decision: DetectionResult,
}

pub fn run_stages(
    kind: DetectorKind,
    samples: &[f64],
    fs: f64,
    settings: &Settings,
) -> Result<StageOutputs> {
    run_pipeline(samples, fs, &kind.pipeline_config(settings))
}

pub fn decide(
    kind: DetectorKind,
    stages: &StageOutputs,
    fs: f64,
    settings: &Settings,
) -> Result<DetectionResult> {
    match kind {
        DetectorKind::Ptpp => detect(stages, fs, &settings.detector),
        DetectorKind::Pt => detect_pt(stages, fs, &settings.pt),
    }
}

pub fn detect_channel(
    kind: DetectorKind,
    samples: &[f64],
    fs: f64,
    settings: &Settings,
) -> Result<ChannelDetection> {
    let stages = run_stages(kind, samples, fs, settings)?;
    let decision = decide(kind, &stages, fs, settings)?;
    let (r_peaks, provenance) = localize(kind, samples, &stages, &decision, fs, settings)?;
    Ok(ChannelDetection {
        kind,
        r_peaks,
        provenance,
        decision,
    })
}

fn localize(
    kind: DetectorKind,
    raw: &[f64],
    stages: &StageOutputs,
    decision: &DetectionResult,
    fs: f64,
    settings: &Settings,
) -> Result<(Vec<usize>, Vec<Provenance>)> {
    let located = localize_rpeaks(
        raw,
        &decision.r_peaks,
        &stages.delays,
        fs,
        &kind.pipeline_config(settings),
        kind.min_separation(settings, fs),
    )?;
    Ok(located
        .into_iter()
        .map(|(i, k)| (i, decision.provenance[k]))
        .unzip())
}
