use std::io::Write;
use std::path::Path;
use std::time::Instant;

use ptpp_core::detector::{detect_channel, run_stages, DetectorKind};
use ptpp_core::eval::{match_beats, synth_ecg, time_detector, SynthSpec};
use ptpp_core::io::{write_plain_annotations, write_record_csv, write_wfdb, DEFAULT_GAIN};
use ptpp_core::report::{
    write_detections, write_disagreements, write_metrics, write_stages, write_timing, Disagreement,
    RecordResult, TimingRow,
};
use ptpp_core::settings::Settings;

use crate::error::{CliError, CliResult};
use crate::input::{load_record, load_reference, record_id, select_channel};
use crate::{RecordInput, RecordSet};

/// Renders into memory, then replaces the target in one write; `None`
/// goes to stdout.
fn emit<E>(out: Option<&Path>, render: impl FnOnce(&mut Vec<u8>) -> Result<(), E>) -> CliResult<()>
where
    E: Into<Box<dyn std::error::Error + Send + Sync>>,
{
    let mut buf = Vec::new();
    let target = out.unwrap_or(Path::new("<stdout>"));
    render(&mut buf).map_err(|e| CliError::output(target, e))?;
    match out {
        Some(path) => std::fs::write(path, &buf).map_err(|e| CliError::output(path, e)),
        None => std::io::stdout()
            .write_all(&buf)
            .map_err(|e| CliError::output(target, e)),
    }
}

pub fn detect(input: &RecordInput, kind: DetectorKind, settings: &Settings, out: Option<&Path>) -> CliResult<()> {
    let (path, record) = load_record(&input.record, input.fs)?;
    let fs = record.sampling_rate_hz();
    settings.validate(fs)?;
    let name = record_id(&path);
    let samples = select_channel(&record, input.channel.as_deref(), &name)?;
    let d = detect_channel(kind, samples, fs, settings)?;
    log::info!("{name}: {} R-peaks from {kind}", d.r_peaks.len());
    emit(out, |w| write_detections(w, &d.r_peaks, &d.provenance, fs))
}

pub fn stages(input: &RecordInput, kind: DetectorKind, settings: &Settings, out: Option<&Path>) -> CliResult<()> {
    let (path, record) = load_record(&input.record, input.fs)?;
    let fs = record.sampling_rate_hz();
    settings.validate(fs)?;
    let samples = select_channel(&record, input.channel.as_deref(), &record_id(&path))?;
    let s = run_stages(kind, samples, fs, settings)?;
    emit(out, |w| write_stages(w, samples, &s))
}

/// Runs `kinds` over every record of the set. With two detectors and a
/// disagreement path, also lists beats found by one and not the other.
pub fn eval(
    set: &RecordSet,
    kinds: &[DetectorKind],
    settings: &Settings,
    out: Option<&Path>,
    disagreements: Option<&Path>,
) -> CliResult<()> {
    if !set.annotations.is_empty() && set.annotations.len() != set.records.len() {
        return Err(CliError::Config(format!(
            "{} annotation files given for {} records",
            set.annotations.len(),
            set.records.len()
        )));
    }
    let tol = settings.eval.tolerance_ms;
    let filter = settings.eval.beat_filter();
    let mut results = Vec::new();
    let mut disputed = Vec::new();
    let mut rates = Vec::new();

    for (k, rec_path) in set.records.iter().enumerate() {
        let (path, record) = load_record(rec_path, set.fs)?;
        let fs = record.sampling_rate_hz();
        settings.validate(fs)?;
        let name = record_id(&path);
        let reference = load_reference(&path, set.annotations.get(k).map(|p| p.as_path()), &filter)?;
        reference.check_bounds(record.duration_samples())?;
        let samples = select_channel(&record, set.channel.as_deref(), &name)?;

        let mut peaks = Vec::new();
        for &kind in kinds {
            let t0 = Instant::now();
            let d = detect_channel(kind, samples, fs, settings)?;
            let elapsed = t0.elapsed().as_secs_f64();
            let report = match_beats(&name, &d.r_peaks, reference.beat_samples(), fs, tol)?;
            log::info!("{name} {kind}: TP {} FP {} FN {}", report.tp, report.fp, report.fn_);
            results.push(RecordResult {
                detector: kind.to_string(),
                dataset: set.dataset.clone(),
                report,
                exec_time_s: set.time.then_some(elapsed),
            });
            peaks.push((kind, d.r_peaks));
        }
        if let [(a, pa), (b, pb)] = peaks.as_slice() {
            disputed.extend(disagree(&name, (*a, pa), (*b, pb), reference.beat_samples(), fs, tol)?);
        }
        rates.push((name, fs));
    }

    emit(out, |w| write_metrics(w, &results))?;
    if let Some(path) = disagreements {
        let fs_of = |r: &str| rates.iter().find(|(n, _)| n == r).map_or(1.0, |&(_, fs)| fs);
        emit(Some(path), |w| write_disagreements(w, &disputed, fs_of))?;
    }
    Ok(())
}

fn disagree(
    record: &str,
    (a, pa): (DetectorKind, &[usize]),
    (b, pb): (DetectorKind, &[usize]),
    reference: &[usize],
    fs: f64,
    tol: f64,
) -> CliResult<Vec<Disagreement>> {
    let matched_in = |mine: &[usize], other: &[usize]| -> CliResult<Vec<bool>> {
        let r = match_beats(record, mine, other, fs, tol)?;
        let hits: std::collections::BTreeSet<usize> = r.matched_pairs.iter().map(|&(_, d)| d).collect();
        Ok(mine.iter().map(|i| hits.contains(i)).collect())
    };
    let mut rows = Vec::new();
    for (found, missed, mine, other) in [(a, b, pa, pb), (b, a, pb, pa)] {
        let shared = matched_in(mine, other)?;
        let is_beat = matched_in(mine, reference)?;
        for (k, &i) in mine.iter().enumerate() {
            if !shared[k] {
                rows.push(Disagreement {
                    record: record.to_string(),
                    sample_index: i,
                    found_by: found.to_string(),
                    missed_by: missed.to_string(),
                    is_reference_beat: is_beat[k],
                });
            }
        }
    }
    rows.sort_by(|x, y| (x.sample_index, &x.found_by).cmp(&(y.sample_index, &y.found_by)));
    Ok(rows)
}

pub fn bench(
    records: &[std::path::PathBuf],
    channel: Option<&str>,
    fs_hint: Option<f64>,
    kinds: &[DetectorKind],
    runs: usize,
    settings: &Settings,
    out: Option<&Path>,
) -> CliResult<()> {
    let mut rows = Vec::new();
    for rec_path in records {
        let (path, record) = load_record(rec_path, fs_hint)?;
        let fs = record.sampling_rate_hz();
        settings.validate(fs)?;
        let name = record_id(&path);
        let samples = select_channel(&record, channel, &name)?;
        for &kind in kinds {
            let report = time_detector(kind, samples, fs, settings, runs)?;
            rows.push(TimingRow {
                record: name.clone(),
                duration_s: record.duration_s(),
                report,
            });
        }
    }
    let total = |kind: DetectorKind| -> f64 {
        rows.iter()
            .filter(|r| r.report.kind == kind)
            .map(|r| r.report.median_total_s)
            .sum()
    };
    if kinds.contains(&DetectorKind::Ptpp) && kinds.contains(&DetectorKind::Pt) {
        eprintln!(
            "ptpp/pt time ratio {:.3} over {} record(s); timings are sequential wall-clock medians",
            total(DetectorKind::Ptpp) / total(DetectorKind::Pt),
            records.len()
        );
    }
    emit(out, |w| write_timing(w, &rows))
}

pub fn synth(spec_path: Option<&Path>, out_dir: &Path, name: &str) -> CliResult<()> {
    let spec: SynthSpec = match spec_path {
        Some(p) => {
            let p = crate::input::resolve(p);
            let text = std::fs::read_to_string(&p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", p.display(), e.message())))?
        }
        None => SynthSpec::default(),
    };
    let (record, annotations) = synth_ecg(&spec)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::output(out_dir, e))?;
    write_wfdb(out_dir, name, &record, DEFAULT_GAIN)?;
    emit(Some(&out_dir.join(format!("{name}.csv"))), |w| write_record_csv(w, &record))?;
    emit(Some(&out_dir.join(format!("{name}.beats"))), |w| write_plain_annotations(w, &annotations))?;
    log::info!("{name}: {} beats, {} s", annotations.len(), record.duration_s());
    Ok(())
}
