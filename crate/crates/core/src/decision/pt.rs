use serde::{Deserialize, Serialize};

use super::{
    abs_peak_near, find_candidates, init_thresholds, mean_slope, ms_to_samples, window_peak,
    DetectionResult, Provenance, RejectReason, RrTracker, ThresholdState, TraceEntry,
    PT_T2_RATIO,
};
use crate::error::{Error, Result};
use crate::pipeline::StageOutputs;

const PAIR_WINDOW_MS: f64 = 75.0;
const SLOPE_WINDOW_MS: f64 = 70.0;
const INIT_WINDOW_S: f64 = 2.0;
const RR_HISTORY: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PtConfig {
    pub refractory_ms: f64,
    pub twave_window_ms: f64,
    pub twave_slope_ratio: f64,
    pub searchback_rr_factor: f64,
    pub rr_low_frac: f64,
    pub rr_high_frac: f64,
}

impl Default for PtConfig {
    fn default() -> Self {
        PtConfig {
            refractory_ms: 200.0,
            twave_window_ms: 360.0,
            twave_slope_ratio: 0.5,
            searchback_rr_factor: 1.66,
            rr_low_frac: 0.92,
            rr_high_frac: 1.16,
        }
    }
}

impl PtConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("refractory_ms", self.refractory_ms),
            ("twave_window_ms", self.twave_window_ms),
            ("twave_slope_ratio", self.twave_slope_ratio),
            ("searchback_rr_factor", self.searchback_rr_factor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("pt.{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("rr_low_frac", self.rr_low_frac),
            ("rr_high_frac", self.rr_high_frac),
        ] {
            if !(v > 0.0 && v < 2.0) {
                return Err(Error::Config(format!("pt.{name} must lie in (0, 2), got {v}")));
            }
        }
        if self.rr_low_frac >= self.rr_high_frac {
            return Err(Error::Config("pt.rr_low_frac must be below pt.rr_high_frac".into()));
        }
        Ok(())
    }
}

fn halve(mut s: ThresholdState) -> ThresholdState {
    s.threshold1 *= 0.5;
    s.threshold2 *= 0.5;
    s
}

pub fn detect_pt(stages: &StageOutputs, fs: f64, cfg: &PtConfig) -> Result<DetectionResult> {
    detect_pt_with_trace(stages, fs, cfg).map(|(r, _)| r)
}

/// Classic two-threshold decision loop.
pub fn detect_pt_with_trace(
    stages: &StageOutputs,
    fs: f64,
    cfg: &PtConfig,
) -> Result<(DetectionResult, Vec<TraceEntry>)> {
    cfg.validate()?;
    let integrated = &stages.integrated;
    let filtered = &stages.filtered;
    let abs_filtered: Vec<f64> = filtered.iter().map(|v| v.abs()).collect();

    let mut thr_i = init_thresholds(integrated, fs, INIT_WINDOW_S)?;
    let mut thr_f = init_thresholds(&abs_filtered, fs, INIT_WINDOW_S)?;

    let sep = ms_to_samples(cfg.refractory_ms, fs).max(1);
    let twave_limit = ms_to_samples(cfg.twave_window_ms, fs);
    let slope_window = ms_to_samples(SLOPE_WINDOW_MS, fs).max(1);
    let pair_half = ms_to_samples(PAIR_WINDOW_MS, fs);
    let shift = stages.delays.filtered_to_integrated();

    let candidates = find_candidates(integrated, sep);
    let mut result = DetectionResult::default();
    result
        .rejected
        .extend(candidates.dropped.iter().map(|&i| (i, RejectReason::Refractory)));
    let mut trace = Vec::with_capacity(candidates.kept.len());

    let filtered_peak = |i: usize| abs_peak_near(filtered, i.saturating_sub(shift), pair_half);
    let slope_at = |i: usize| mean_slope(filtered, filtered_peak(i).0, slope_window);

    // (index, slope) of the most recent beat
    let mut last: Option<(usize, f64)> = None;
    let mut rr = RrTracker::new(RR_HISTORY);

    for &c in &candidates.kept {
        if let (Some((prev, _)), Some(mean)) = (last, rr.mean()) {
            let gap = c - prev;
            if gap as f64 > cfg.searchback_rr_factor * mean && c >= sep && prev + sep <= c - sep {
                if let Some(w) = window_peak(integrated, prev + sep..=c - sep) {
                    let (amp_i, amp_f) = (integrated[w], filtered_peak(w).1);
                    if amp_i > thr_i.threshold2 && amp_f > thr_f.threshold2 {
                        thr_i = thr_i.rule1_with_ratio(amp_i, true, PT_T2_RATIO);
                        thr_f = thr_f.rule1_with_ratio(amp_f, true, PT_T2_RATIO);
                        rr.push(w - prev);
                        last = Some((w, slope_at(w)));
                        result.r_peaks.push(w);
                        result.provenance.push(Provenance::SearchbackT2);
                    }
                }
            }
        }

        let amp_i = integrated[c];
        let amp_f = filtered_peak(c).1;
        let mut verdict = if amp_i > thr_i.threshold1 && amp_f > thr_f.threshold1 {
            Ok(())
        } else {
            Err(RejectReason::BelowThreshold)
        };
        if let (Ok(()), Some((prev, prev_slope))) = (verdict, last) {
            if c - prev < twave_limit && slope_at(c) < cfg.twave_slope_ratio * prev_slope {
                verdict = Err(RejectReason::TWave);
            }
        }
        match verdict {
            Ok(()) => {
                thr_i = thr_i.rule1_with_ratio(amp_i, true, PT_T2_RATIO);
                thr_f = thr_f.rule1_with_ratio(amp_f, true, PT_T2_RATIO);
                if let Some((prev, _)) = last {
                    let interval = (c - prev) as f64;
                    let irregular = rr.mean().is_some_and(|m| {
                        interval < cfg.rr_low_frac * m || interval > cfg.rr_high_frac * m
                    });
                    if irregular {
                        thr_i = halve(thr_i);
                        thr_f = halve(thr_f);
                    }
                    rr.push(c - prev);
                }
                last = Some((c, slope_at(c)));
                result.r_peaks.push(c);
                result.provenance.push(Provenance::Threshold1);
            }
            Err(reason) => {
                thr_i = thr_i.rule1_with_ratio(amp_i, false, PT_T2_RATIO);
                thr_f = thr_f.rule1_with_ratio(amp_f, false, PT_T2_RATIO);
                result.rejected.push((c, reason));
            }
        }
        trace.push(TraceEntry {
            candidate: c,
            integrated: thr_i,
            filtered: thr_f,
        });
    }
    result.rejected.sort_unstable_by_key(|&(i, _)| i);
    Ok((result, trace))
}
