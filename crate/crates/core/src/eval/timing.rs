use std::time::Instant;

use crate::detector::{decide, run_stages, DetectorKind};
use crate::error::Result;
use crate::settings::Settings;

/// Fewest repetitions a timing median is taken over.
pub const MIN_RUNS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub kind: DetectorKind,
    pub runs: usize,
    /// Median wall time of pipeline plus decision loop.
    pub median_total_s: f64,
    /// Median wall time of the decision loop alone.
    pub median_decision_s: f64,
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Times the in-memory pipeline and decision loop on `samples`; file I/O
/// is not included. Runs at least [`MIN_RUNS`] times.
pub fn time_detector(
    kind: DetectorKind,
    samples: &[f64],
    fs: f64,
    settings: &Settings,
    runs: usize,
) -> Result<TimingReport> {
    let runs = runs.max(MIN_RUNS);
    let mut total = Vec::with_capacity(runs);
    let mut decision = Vec::with_capacity(runs);
    for _ in 0..runs {
        let t0 = Instant::now();
        let stages = run_stages(kind, samples, fs, settings)?;
        let t1 = Instant::now();
        let result = decide(kind, &stages, fs, settings)?;
        let t2 = Instant::now();
        std::hint::black_box(&result);
        total.push((t2 - t0).as_secs_f64());
        decision.push((t2 - t1).as_secs_f64());
    }
    Ok(TimingReport {
        kind,
        runs,
        median_total_s: median(&mut total),
        median_decision_s: median(&mut decision),
    })
}
