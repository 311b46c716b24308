//! Decision phase: candidate selection, adaptive thresholds and R-peak
//! localization shared by both detectors.

mod pt;
mod ptpp;

pub use pt::{detect_pt, detect_pt_with_trace, PtConfig};
pub use ptpp::{detect, detect_with_trace, DetectorConfig};

use std::collections::{BTreeSet, VecDeque};
use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::pipeline::{PipelineConfig, StageDelays};

/// Running signal/noise peak estimates and the two derived thresholds for
/// one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdState {
    pub spk: f64,
    pub npk: f64,
    pub threshold1: f64,
    pub threshold2: f64,
}

/// `threshold2 / threshold1` for the three-threshold detector.
pub const PTPP_T2_RATIO: f64 = 0.4;
/// `threshold2 / threshold1` for the classic detector.
pub const PT_T2_RATIO: f64 = 0.5;

impl ThresholdState {
    /// Initial state from the maximum and mean amplitude of a learning window.
    pub fn from_learning_window(max: f64, mean: f64) -> Self {
        let threshold1 = max / 3.0;
        let threshold2 = 0.5 * mean;
        ThresholdState {
            spk: threshold1,
            npk: threshold2,
            threshold1,
            threshold2,
        }
    }

    /// Recomputes both thresholds from `spk` and `npk`.
    pub fn recompute(&mut self, t2_ratio: f64) {
        self.threshold1 = self.npk + 0.25 * (self.spk - self.npk);
        self.threshold2 = t2_ratio * self.threshold1;
    }

    /// Slow update (weight 0.125 on the new peak) of `spk` or `npk`,
    /// followed by a threshold recompute with the given ratio.
    pub fn rule1_with_ratio(mut self, peak: f64, is_signal: bool, t2_ratio: f64) -> Self {
        if is_signal {
            self.spk = 0.125 * peak + 0.875 * self.spk;
        } else {
            self.npk = 0.125 * peak + 0.875 * self.npk;
        }
        self.recompute(t2_ratio);
        self
    }

    pub fn update_rule1(self, peak: f64, is_signal: bool) -> Self {
        self.rule1_with_ratio(peak, is_signal, PTPP_T2_RATIO)
    }

    /// Fast update (weight 0.75 on the new peak) applied to both `spk` and
    /// `npk`, used after a search-back recovery.
    pub fn update_rule2(mut self, peak: f64) -> Self {
        self.spk = 0.75 * peak + 0.25 * self.spk;
        self.npk = 0.75 * peak + 0.25 * self.npk;
        self.recompute(PTPP_T2_RATIO);
        self
    }

    /// Search-back threshold: midway between `threshold2` and the mean
    /// amplitude of the surrounding peaks.
    pub fn threshold3(&self, meansb: f64) -> f64 {
        0.5 * self.threshold2 + 0.5 * meansb
    }

    pub fn is_finite(&self) -> bool {
        self.spk.is_finite()
            && self.npk.is_finite()
            && self.threshold1.is_finite()
            && self.threshold2.is_finite()
    }
}

/// Initializes thresholds from the first `init_window_s` seconds of a
/// nonnegative amplitude signal.
pub fn init_thresholds(signal: &[f64], fs: f64, init_window_s: f64) -> Result<ThresholdState> {
    let len = (init_window_s * fs).round() as usize;
    if len == 0 || signal.len() < len {
        return Err(Error::InputTooShort {
            needed: len.max(1),
            got: signal.len(),
        });
    }
    let head = &signal[..len];
    let max = head.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = head.iter().sum::<f64>() / len as f64;
    Ok(ThresholdState::from_learning_window(max, mean))
}

/// Ring of the most recent RR intervals (in samples).
#[derive(Debug, Clone, PartialEq)]
pub struct RrTracker {
    recent: VecDeque<usize>,
    capacity: usize,
}

impl RrTracker {
    pub fn new(capacity: usize) -> Self {
        RrTracker {
            recent: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, interval: usize) {
        if self.recent.len() == self.capacity {
            self.recent.pop_front();
        }
        self.recent.push_back(interval);
    }

    /// Mean interval, defined only once the ring is full.
    pub fn mean(&self) -> Option<f64> {
        (self.capacity > 0 && self.recent.len() == self.capacity)
            .then(|| self.recent.iter().sum::<usize>() as f64 / self.capacity as f64)
    }

    pub fn len(&self) -> usize {
        self.recent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recent.is_empty()
    }
}

/// How a beat was accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// Exceeded threshold1 on first examination.
    Threshold1,
    /// Recovered by search-back against threshold3.
    SearchbackT3,
    /// Recovered after a long silence against 0.2·threshold2.
    SpikeRecovery,
    /// Classic detector search-back against threshold2.
    SearchbackT2,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Threshold1 => "threshold1",
            Provenance::SearchbackT3 => "searchback_t3",
            Provenance::SpikeRecovery => "spike_recovery",
            Provenance::SearchbackT2 => "searchback_t2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    BelowThreshold,
    TWave,
    Refractory,
}

/// Detector output, indexed in integrated-signal coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionResult {
    pub r_peaks: Vec<usize>,
    pub provenance: Vec<Provenance>,
    pub rejected: Vec<(usize, RejectReason)>,
}

/// Threshold states after one candidate has been processed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub candidate: usize,
    pub integrated: ThresholdState,
    pub filtered: ThresholdState,
}

/// Local maxima that survived thinning, plus those removed for being too
/// close to a larger one.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Candidates {
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
}

/// Interior local maxima of `x` inside `range`. Plateaus report their
/// middle sample.
pub fn local_maxima(x: &[f64], range: RangeInclusive<usize>) -> Vec<usize> {
    let mut out = Vec::new();
    if x.len() < 3 {
        return out;
    }
    let lo = (*range.start()).max(1);
    let hi = (*range.end()).min(x.len() - 2);
    let mut i = lo;
    while i <= hi {
        if x[i] > x[i - 1] {
            let mut j = i;
            while j + 1 < x.len() - 1 && x[j + 1] == x[i] {
                j += 1;
            }
            if x[j + 1] < x[i] {
                let mid = (i + j) / 2;
                if mid <= hi {
                    out.push(mid);
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Local maxima thinned so survivors are at least `min_separation` samples
/// apart. Larger peaks win; equal peaks resolve to the earlier index.
pub fn find_candidates(integrated: &[f64], min_separation: usize) -> Candidates {
    if integrated.len() < 3 {
        return Candidates::default();
    }
    let maxima = local_maxima(integrated, 1..=integrated.len() - 2);
    let mut order = maxima.clone();
    order.sort_by(|&a, &b| integrated[b].total_cmp(&integrated[a]).then(a.cmp(&b)));

    let mut kept = BTreeSet::new();
    let mut dropped = Vec::new();
    for idx in order {
        let near_before = kept
            .range(..=idx)
            .next_back()
            .is_some_and(|&k| idx - k < min_separation);
        let near_after = kept
            .range(idx..)
            .next()
            .is_some_and(|&k| k - idx < min_separation);
        if near_before || near_after {
            dropped.push(idx);
        } else {
            kept.insert(idx);
        }
    }
    dropped.sort_unstable();
    Candidates {
        kept: kept.into_iter().collect(),
        dropped,
    }
}

/// Mean absolute first difference over the `window` samples ending at
/// `idx`, truncated at the start of the signal.
pub fn mean_slope(filtered: &[f64], idx: usize, window: usize) -> f64 {
    if filtered.len() < 2 || window == 0 {
        return 0.0;
    }
    let end = idx.min(filtered.len() - 1);
    let start = end.saturating_sub(window).max(1);
    if start > end {
        return 0.0;
    }
    let total: f64 = (start..=end)
        .map(|i| (filtered[i] - filtered[i - 1]).abs())
        .sum();
    total / (end - start + 1) as f64
}

/// Largest-magnitude sample of `signal` within `half` samples of `center`.
pub(crate) fn abs_peak_near(signal: &[f64], center: usize, half: usize) -> (usize, f64) {
    let last = signal.len().saturating_sub(1);
    let center = center.min(last);
    let lo = center.saturating_sub(half);
    let hi = (center + half).min(last);
    let mut best = (center, signal.get(center).map_or(0.0, |v| v.abs()));
    for (i, v) in signal.iter().enumerate().take(hi + 1).skip(lo) {
        if v.abs() > best.1 {
            best = (i, v.abs());
        }
    }
    best
}

/// Highest local maximum of `x` inside `range`, if any.
pub(crate) fn window_peak(x: &[f64], range: RangeInclusive<usize>) -> Option<usize> {
    if range.is_empty() {
        return None;
    }
    local_maxima(x, range)
        .into_iter()
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if x[b] >= x[i] => Some(b),
            _ => Some(i),
        })
}

pub(crate) fn ms_to_samples(ms: f64, fs: f64) -> usize {
    (ms * fs / 1000.0).round() as usize
}

/// Maps detections from integrated-signal coordinates back to the raw
/// record: each is shifted back by the causal delay and snapped to the
/// largest magnitude of the zero-phase bandpassed raw signal within
/// ±75 ms. Located peaks closer than `min_separation` collapse onto the
/// larger one. Returns `(raw index, position in detections)` pairs in
/// increasing raw order.
pub fn localize_rpeaks(
    raw: &[f64],
    detections: &[usize],
    delays: &StageDelays,
    fs: f64,
    cfg: &PipelineConfig,
    min_separation: usize,
) -> Result<Vec<(usize, usize)>> {
    if raw.is_empty() || detections.is_empty() {
        return Ok(Vec::new());
    }
    let filtered = cfg.design_filter(fs)?.filtfilt(raw);
    let half = ms_to_samples(75.0, fs);
    let shift = delays.causal_total();
    let mut located: Vec<(usize, f64, usize)> = detections
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            let (i, amp) = abs_peak_near(&filtered, d.saturating_sub(shift), half);
            (i, amp, k)
        })
        .collect();
    located.sort_by_key(|&(i, _, k)| (i, k));

    let mut kept: Vec<(usize, f64, usize)> = Vec::with_capacity(located.len());
    for peak in located {
        match kept.last_mut() {
            Some(prev) if peak.0 - prev.0 < min_separation.max(1) => {
                if peak.1 > prev.1 {
                    *prev = peak;
                }
            }
            _ => kept.push(peak),
        }
    }
    Ok(kept.into_iter().map(|(i, _, k)| (i, k)).collect())
}
