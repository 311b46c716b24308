use serde::{Deserialize, Serialize};

use super::{
    abs_peak_near, find_candidates, init_thresholds, mean_slope, ms_to_samples, window_peak,
    DetectionResult, Provenance, RejectReason, RrTracker, TraceEntry,
};
use crate::error::{Error, Result};
use crate::pipeline::StageOutputs;

/// Half-width of the window searched for the filtered-channel peak that
/// pairs with an integrated-channel candidate.
const PAIR_WINDOW_MS: f64 = 75.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub min_peak_separation_ms: f64,
    pub twave_window_ms: f64,
    pub twave_slope_window_ms: f64,
    pub twave_slope_ratio: f64,
    pub searchback_rr_factor: f64,
    pub searchback_abs_s: f64,
    pub spike_recovery_s: f64,
    pub spike_recovery_t2_frac: f64,
    pub rr_history_beats: usize,
    pub init_window_s: f64,
    /// Search-back windows start this long after the last beat.
    pub post_peak_blank_ms: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            min_peak_separation_ms: 231.0,
            twave_window_ms: 360.0,
            twave_slope_window_ms: 70.0,
            twave_slope_ratio: 0.6,
            searchback_rr_factor: 1.66,
            searchback_abs_s: 1.0,
            spike_recovery_s: 1.4,
            spike_recovery_t2_frac: 0.2,
            rr_history_beats: 8,
            init_window_s: 2.0,
            post_peak_blank_ms: 360.0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("min_peak_separation_ms", self.min_peak_separation_ms),
            ("twave_window_ms", self.twave_window_ms),
            ("twave_slope_window_ms", self.twave_slope_window_ms),
            ("searchback_rr_factor", self.searchback_rr_factor),
            ("searchback_abs_s", self.searchback_abs_s),
            ("spike_recovery_s", self.spike_recovery_s),
            ("init_window_s", self.init_window_s),
            ("post_peak_blank_ms", self.post_peak_blank_ms),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("detector.{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("twave_slope_ratio", self.twave_slope_ratio),
            ("spike_recovery_t2_frac", self.spike_recovery_t2_frac),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("detector.{name} must lie in (0, 1), got {v}")));
            }
        }
        if self.rr_history_beats == 0 {
            return Err(Error::Config("detector.rr_history_beats must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn detect(stages: &StageOutputs, fs: f64, cfg: &DetectorConfig) -> Result<DetectionResult> {
    detect_with_trace(stages, fs, cfg).map(|(r, _)| r)
}

struct Beat {
    index: usize,
    amplitude: f64,
    slope: f64,
}

/// Runs the three-threshold decision loop and also returns the threshold
/// states after each candidate.
pub fn detect_with_trace(
    stages: &StageOutputs,
    fs: f64,
    cfg: &DetectorConfig,
) -> Result<(DetectionResult, Vec<TraceEntry>)> {
    cfg.validate()?;
    let integrated = &stages.integrated;
    let filtered = &stages.filtered;
    let abs_filtered: Vec<f64> = filtered.iter().map(|v| v.abs()).collect();

    let mut thr_i = init_thresholds(integrated, fs, cfg.init_window_s)?;
    let mut thr_f = init_thresholds(&abs_filtered, fs, cfg.init_window_s)?;

    let sep = ms_to_samples(cfg.min_peak_separation_ms, fs).max(1);
    let twave_limit = ms_to_samples(cfg.twave_window_ms, fs);
    let slope_window = ms_to_samples(cfg.twave_slope_window_ms, fs).max(1);
    let blank = ms_to_samples(cfg.post_peak_blank_ms, fs);
    let searchback_abs = (cfg.searchback_abs_s * fs).round() as usize;
    let recovery_abs = (cfg.spike_recovery_s * fs).round() as usize;
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

    let mut beats: Vec<Beat> = Vec::new();
    let mut rr = RrTracker::new(cfg.rr_history_beats);

    let accept = |beats: &mut Vec<Beat>,
                      rr: &mut RrTracker,
                      result: &mut DetectionResult,
                      index: usize,
                      provenance: Provenance| {
        if let Some(last) = beats.last() {
            rr.push(index - last.index);
        }
        beats.push(Beat {
            index,
            amplitude: integrated[index],
            slope: slope_at(index),
        });
        result.r_peaks.push(index);
        result.provenance.push(provenance);
    };

    for (ci, &c) in candidates.kept.iter().enumerate() {
        // Search-back over the gap since the last beat.
        let anchor = beats.last().map_or(0, |b| b.index);
        let gap = c - anchor;
        let rr_mean = rr.mean();
        let long_gap = gap > searchback_abs
            || rr_mean.is_some_and(|m| gap as f64 > cfg.searchback_rr_factor * m);
        if long_gap && c >= sep {
            let start = if beats.is_empty() { 0 } else { anchor + blank };
            if let Some(w) = window_peak(integrated, start..=c - sep) {
                let before = beats.iter().rev().take(3).map(|b| b.amplitude);
                let after = candidates.kept[ci..]
                    .iter()
                    .take(3)
                    .map(|&k| integrated[k]);
                let pool: Vec<f64> = before.chain(after).collect();
                let meansb = pool.iter().sum::<f64>() / pool.len() as f64;
                let peak = integrated[w];
                let provenance = if peak > thr_i.threshold3(meansb) {
                    Some(Provenance::SearchbackT3)
                } else if gap > recovery_abs && peak > cfg.spike_recovery_t2_frac * thr_i.threshold2
                {
                    Some(Provenance::SpikeRecovery)
                } else {
                    None
                };
                if let Some(p) = provenance {
                    thr_i = thr_i.update_rule2(peak);
                    thr_f = thr_f.update_rule2(filtered_peak(w).1);
                    accept(&mut beats, &mut rr, &mut result, w, p);
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
        if verdict.is_ok() {
            if let Some(last) = beats.last() {
                let interval = c - last.index;
                let close = interval < twave_limit
                    || rr.mean().is_some_and(|m| (interval as f64) < 0.5 * m);
                if close && slope_at(c) < cfg.twave_slope_ratio * last.slope {
                    verdict = Err(RejectReason::TWave);
                }
            }
        }
        match verdict {
            Ok(()) => {
                thr_i = thr_i.update_rule1(amp_i, true);
                thr_f = thr_f.update_rule1(amp_f, true);
                accept(&mut beats, &mut rr, &mut result, c, Provenance::Threshold1);
            }
            Err(reason) => {
                thr_i = thr_i.update_rule1(amp_i, false);
                thr_f = thr_f.update_rule1(amp_f, false);
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
