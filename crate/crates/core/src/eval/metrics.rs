use super::MatchReport;
use crate::error::{Error, Result};

/// Pooled detection metrics. Ratios with a zero denominator are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub ppv: Option<f64>,
    pub sensitivity: Option<f64>,
    pub f_score: Option<f64>,
    pub fp_rate: Option<f64>,
    pub fn_rate: Option<f64>,
    pub execution_time_s: f64,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Sums counts over all reports before forming ratios.
pub fn metrics(reports: &[MatchReport], execution_time_s: f64) -> Result<Metrics> {
    if reports.is_empty() {
        return Err(Error::Validation("no match reports to aggregate".into()));
    }
    let tp: usize = reports.iter().map(|r| r.tp).sum();
    let fp: usize = reports.iter().map(|r| r.fp).sum();
    let fn_: usize = reports.iter().map(|r| r.fn_).sum();
    Ok(from_counts(tp, fp, fn_, execution_time_s))
}

pub fn from_counts(tp: usize, fp: usize, fn_: usize, execution_time_s: f64) -> Metrics {
    let ppv = ratio(tp, tp + fp);
    let sensitivity = ratio(tp, tp + fn_);
    let f_score = match (ppv, sensitivity) {
        (Some(p), Some(s)) if p + s > 0.0 => Some(2.0 * p * s / (p + s)),
        _ => None,
    };
    Metrics {
        tp,
        fp,
        fn_,
        ppv,
        sensitivity,
        f_score,
        fp_rate: ratio(fp, tp + fp),
        fn_rate: ratio(fn_, tp + fn_),
        execution_time_s,
    }
}
