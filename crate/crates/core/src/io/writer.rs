//! Writers for records and annotations, the inverse of the loaders.

use std::io::Write;
use std::path::Path;

use super::{encode_format212, AnnotationSet, Record};
use crate::error::{Error, Result};

const ADC_MIN: i32 = -2048;
const ADC_MAX: i32 = 2047;

/// Converts millivolts to 12-bit ADC counts, saturating at the code range.
/// Returns the counts and how many samples saturated.
pub fn to_counts(samples_mv: &[f64], gain: f64, baseline: i32) -> (Vec<i16>, usize) {
    let mut clipped = 0;
    let counts = samples_mv
        .iter()
        .map(|v| {
            let c = (v * gain).round() as i64 + baseline as i64;
            if c < ADC_MIN as i64 || c > ADC_MAX as i64 {
                clipped += 1;
            }
            c.clamp(ADC_MIN as i64, ADC_MAX as i64) as i16
        })
        .collect();
    (counts, clipped)
}

/// Writes `<name>.hea` and a format-212 `<name>.dat` into `dir`, every
/// channel stored at `gain` counts per millivolt with zero baseline.
pub fn write_wfdb(dir: &Path, name: &str, record: &Record, gain: f64) -> Result<()> {
    if !(gain > 0.0 && gain.is_finite()) {
        return Err(Error::Config(format!("gain must be positive, got {gain}")));
    }
    let n = record.duration_samples();
    let mut per_channel = Vec::with_capacity(record.channels().len());
    for ch in record.channels() {
        let (counts, clipped) = to_counts(&ch.samples, gain, 0);
        if clipped > 0 {
            log::warn!("{name}: {clipped} samples of {} saturated the 12-bit range", ch.label);
        }
        per_channel.push(counts);
    }
    let mut interleaved = Vec::with_capacity(n * per_channel.len());
    for i in 0..n {
        interleaved.extend(per_channel.iter().map(|c| c[i]));
    }

    let dat = format!("{name}.dat");
    let mut hea = format!(
        "{name} {} {} {n}\n",
        per_channel.len(),
        record.sampling_rate_hz()
    );
    for (ch, counts) in record.channels().iter().zip(&per_channel) {
        let checksum = counts.iter().fold(0i16, |acc, &c| acc.wrapping_add(c));
        let first = counts.first().copied().unwrap_or(0);
        hea.push_str(&format!(
            "{dat} 212 {gain}/mV 12 0 {first} {checksum} 0 {}\n",
            ch.label
        ));
    }
    write_file(&dir.join(format!("{name}.hea")), hea.as_bytes())?;
    write_file(&dir.join(dat), &encode_format212(&interleaved))
}

/// One sample index per line, readable by the plain-text loader.
pub fn write_plain_annotations<W: Write>(mut w: W, annotations: &AnnotationSet) -> std::io::Result<()> {
    for i in annotations.beat_samples() {
        writeln!(w, "{i}")?;
    }
    w.flush()
}

/// `sample_index,value` rows of the first channel, readable by the CSV
/// loader.
pub fn write_record_csv<W: Write>(w: W, record: &Record) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["sample_index", "value"])?;
    for (i, v) in record.channels()[0].samples.iter().enumerate() {
        out.write_record([i.to_string(), v.to_string()])?;
    }
    out.flush()
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{load_wfdb, parse_csv, parse_plain_annotations};

    #[test]
    fn counts_round_and_saturate() {
        let (c, clipped) = to_counts(&[0.0, 0.5, -0.5, 0.0026, 20.0, -20.0], 200.0, 0);
        assert_eq!(c, vec![0, 100, -100, 1, 2047, -2048]);
        assert_eq!(clipped, 2);
    }

    #[test]
    fn wfdb_round_trip_on_grid() {
        let dir = tempfile::tempdir().unwrap();
        let samples: Vec<f64> = (0..101).map(|i| (((i * 37) % 400) as f64 - 200.0) / 200.0).collect();
        let rec = Record::single(250.0, "II", samples.clone()).unwrap();
        write_wfdb(dir.path(), "r", &rec, 200.0).unwrap();
        let back = load_wfdb(&dir.path().join("r.hea")).unwrap();
        assert_eq!(back.sampling_rate_hz(), 250.0);
        assert_eq!(back.labels(), vec!["II"]);
        assert_eq!(back.channels()[0].samples, samples);
    }

    #[test]
    fn text_writers_round_trip() {
        let ann = AnnotationSet::new(vec![3, 90, 400], None).unwrap();
        let mut buf = Vec::new();
        write_plain_annotations(&mut buf, &ann).unwrap();
        assert_eq!(parse_plain_annotations(std::str::from_utf8(&buf).unwrap()).unwrap(), ann);

        let rec = Record::single(360.0, "II", vec![0.25, -1.5, 3.0]).unwrap();
        let mut buf = Vec::new();
        write_record_csv(&mut buf, &rec).unwrap();
        let back = parse_csv(std::str::from_utf8(&buf).unwrap(), 360.0).unwrap();
        assert_eq!(back.channels()[0].samples, rec.channels()[0].samples);
    }
}
