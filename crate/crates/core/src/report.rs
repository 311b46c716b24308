//! CSV outputs: detections, stage dumps, metrics tables and timings.
//!
//! Every writer emits a header row and formats floats with Rust's
//! shortest round-trip representation, so identical inputs give
//! byte-identical files.

use std::io::Write;

use crate::decision::Provenance;
use crate::eval::{MatchReport, Metrics, TimingReport};
use crate::pipeline::StageOutputs;

type CsvResult = std::result::Result<(), csv::Error>;

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// `sample_index,time_s,provenance`, one row per R-peak.
pub fn write_detections<W: Write>(
    w: W,
    r_peaks: &[usize],
    provenance: &[Provenance],
    fs: f64,
) -> CsvResult {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["sample_index", "time_s", "provenance"])?;
    for (&i, p) in r_peaks.iter().zip(provenance) {
        out.write_record([i.to_string(), (i as f64 / fs).to_string(), p.as_str().to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// One row per sample with every intermediate pipeline signal.
pub fn write_stages<W: Write>(w: W, raw: &[f64], stages: &StageOutputs) -> CsvResult {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "sample_index",
        "raw",
        "filtered",
        "derived",
        "squared",
        "smoothed",
        "integrated",
    ])?;
    for (i, &x) in raw.iter().enumerate() {
        out.write_record([
            i.to_string(),
            x.to_string(),
            stages.filtered[i].to_string(),
            stages.derived[i].to_string(),
            stages.squared[i].to_string(),
            stages.smoothed[i].to_string(),
            stages.integrated[i].to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Record name used for the pooled summary row of a metrics table.
pub const POOLED: &str = "pooled";

/// One evaluated record.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordResult {
    pub detector: String,
    pub dataset: String,
    pub report: MatchReport,
    /// Wall time of pipeline plus decision; `None` when not measured.
    pub exec_time_s: Option<f64>,
}

/// Per-record rows followed by one pooled row per (detector, dataset),
/// in first-appearance order. Undefined ratios and unmeasured times are
/// left empty; a pooled time is the sum over its records.
pub fn write_metrics<W: Write>(w: W, results: &[RecordResult]) -> CsvResult {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "detector",
        "dataset",
        "record",
        "tp",
        "fp",
        "fn",
        "ppv",
        "sensitivity",
        "f_score",
        "exec_time_s",
    ])?;
    let row = |out: &mut csv::Writer<W>, r: &RecordResult, record: &str, m: &Metrics, t: Option<f64>| {
        out.write_record([
            r.detector.clone(),
            r.dataset.clone(),
            record.to_string(),
            m.tp.to_string(),
            m.fp.to_string(),
            m.fn_.to_string(),
            opt(m.ppv),
            opt(m.sensitivity),
            opt(m.f_score),
            opt(t),
        ])
    };
    for r in results {
        let t = r.exec_time_s;
        let m = crate::eval::from_counts(r.report.tp, r.report.fp, r.report.fn_, t.unwrap_or(0.0));
        row(&mut out, r, &r.report.record_id, &m, t)?;
    }
    for (detector, dataset) in groups(results) {
        let members: Vec<&RecordResult> = results
            .iter()
            .filter(|r| r.detector == detector && r.dataset == dataset)
            .collect();
        let reports: Vec<MatchReport> = members.iter().map(|r| r.report.clone()).collect();
        let time: Option<f64> = members.iter().map(|r| r.exec_time_s).sum();
        let m = crate::eval::metrics(&reports, time.unwrap_or(0.0)).expect("group is nonempty");
        row(&mut out, members[0], POOLED, &m, time)?;
    }
    out.flush()?;
    Ok(())
}

fn groups(results: &[RecordResult]) -> Vec<(String, String)> {
    let mut seen: Vec<(String, String)> = Vec::new();
    for r in results {
        let key = (r.detector.clone(), r.dataset.clone());
        if !seen.contains(&key) {
            seen.push(key);
        }
    }
    seen
}

/// One disagreement between two detectors on a record: a beat one of them
/// found that the other did not, judged at the matching tolerance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disagreement {
    pub record: String,
    pub sample_index: usize,
    pub found_by: String,
    pub missed_by: String,
    /// Whether the beat matches a reference annotation.
    pub is_reference_beat: bool,
}

pub fn write_disagreements<W: Write>(w: W, rows: &[Disagreement], fs_of: impl Fn(&str) -> f64) -> CsvResult {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "record",
        "sample_index",
        "time_s",
        "found_by",
        "missed_by",
        "is_reference_beat",
    ])?;
    for d in rows {
        out.write_record([
            d.record.clone(),
            d.sample_index.to_string(),
            (d.sample_index as f64 / fs_of(&d.record)).to_string(),
            d.found_by.clone(),
            d.missed_by.clone(),
            d.is_reference_beat.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One timed record. The time columns change between runs; everything
/// else is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub record: String,
    pub duration_s: f64,
    pub report: TimingReport,
}

pub fn write_timing<W: Write>(w: W, rows: &[TimingRow]) -> CsvResult {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "detector",
        "record",
        "duration_s",
        "runs",
        "median_total_s",
        "median_decision_s",
        "realtime_factor",
    ])?;
    for r in rows {
        out.write_record([
            r.report.kind.as_str().to_string(),
            r.record.clone(),
            r.duration_s.to_string(),
            r.report.runs.to_string(),
            r.report.median_total_s.to_string(),
            r.report.median_decision_s.to_string(),
            (r.duration_s / r.report.median_total_s).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
