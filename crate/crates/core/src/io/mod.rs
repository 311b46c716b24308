//! Record and annotation ingestion.
//!
//! Everything downstream consumes [`Record`]s whose samples are already
//! converted to millivolts, and [`AnnotationSet`]s holding strictly
//! increasing beat sample indices.

mod annotations;
mod csv_record;
mod format212;
mod header;
mod writer;

pub use annotations::{
    load_annotations, parse_plain_annotations, read_atr, AnnotationFormat, AtrReadout, BeatFilter,
    DEFAULT_BEAT_CODES,
};
pub use csv_record::{load_csv, parse_csv};
pub use format212::{decode_format16, decode_format212, decode_signal, encode_format212};
pub use header::{parse_wfdb_header, HeaderInfo, SignalSpec, DEFAULT_GAIN};
pub use writer::{to_counts, write_plain_annotations, write_record_csv, write_wfdb};

use std::path::Path;

use crate::error::{Error, Result};

/// One lead of a record.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub label: String,
    /// Samples in millivolts.
    pub samples: Vec<f64>,
    /// ADC counts per millivolt.
    pub gain: f64,
    pub baseline: i32,
}

/// A sampled ECG record.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    sampling_rate_hz: f64,
    channels: Vec<Channel>,
}

impl Record {
    /// Builds a record, checking the rate, equal channel lengths and finiteness.
    pub fn new(sampling_rate_hz: f64, channels: Vec<Channel>) -> Result<Self> {
        if !(sampling_rate_hz.is_finite() && sampling_rate_hz > 0.0) {
            return Err(Error::Config(format!(
                "sampling rate must be positive, got {sampling_rate_hz}"
            )));
        }
        if channels.is_empty() {
            return Err(Error::EmptyInput("record has no channels".into()));
        }
        let len = channels[0].samples.len();
        for ch in &channels {
            if ch.samples.len() != len {
                return Err(Error::Structure(format!(
                    "channel {} has {} samples, expected {len}",
                    ch.label,
                    ch.samples.len()
                )));
            }
            if let Some(pos) = ch.samples.iter().position(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "channel {} has a non-finite sample at index {pos}",
                    ch.label
                )));
            }
        }
        Ok(Record {
            sampling_rate_hz,
            channels,
        })
    }

    /// Single-channel record with unit gain and zero baseline.
    pub fn single(sampling_rate_hz: f64, label: &str, samples: Vec<f64>) -> Result<Self> {
        Record::new(
            sampling_rate_hz,
            vec![Channel {
                label: label.to_string(),
                samples,
                gain: 1.0,
                baseline: 0,
            }],
        )
    }

    pub fn sampling_rate_hz(&self) -> f64 {
        self.sampling_rate_hz
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn duration_samples(&self) -> usize {
        self.channels[0].samples.len()
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_samples() as f64 / self.sampling_rate_hz
    }

    pub fn labels(&self) -> Vec<&str> {
        self.channels.iter().map(|c| c.label.as_str()).collect()
    }

    pub fn channel_by_label(&self, label: &str) -> Option<(usize, &Channel)> {
        self.channels
            .iter()
            .enumerate()
            .find(|(_, c)| c.label == label)
    }
}

/// Reference beat locations for one record.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnnotationSet {
    beat_samples: Vec<usize>,
    beat_labels: Option<Vec<char>>,
}

impl AnnotationSet {
    /// Fails unless `beat_samples` is strictly increasing.
    pub fn new(beat_samples: Vec<usize>, beat_labels: Option<Vec<char>>) -> Result<Self> {
        if let Some(w) = beat_samples.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!(
                "beat indices not strictly increasing: {} followed by {}",
                w[0], w[1]
            )));
        }
        if let Some(labels) = &beat_labels {
            if labels.len() != beat_samples.len() {
                return Err(Error::Validation(format!(
                    "{} labels for {} beats",
                    labels.len(),
                    beat_samples.len()
                )));
            }
        }
        Ok(AnnotationSet {
            beat_samples,
            beat_labels,
        })
    }

    pub fn beat_samples(&self) -> &[usize] {
        &self.beat_samples
    }

    pub fn beat_labels(&self) -> Option<&[char]> {
        self.beat_labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.beat_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beat_samples.is_empty()
    }

    /// Checks every index lies inside `[0, duration_samples)`.
    pub fn check_bounds(&self, duration_samples: usize) -> Result<()> {
        match self.beat_samples.last() {
            Some(&last) if last >= duration_samples => Err(Error::Validation(format!(
                "annotation at sample {last} outside record of {duration_samples} samples"
            ))),
            _ => Ok(()),
        }
    }
}

/// Loads a WFDB record from its header path; the signal file is resolved
/// relative to the header's directory.
pub fn load_wfdb(header_path: &Path) -> Result<Record> {
    let text =
        std::fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
    let header = parse_wfdb_header(&text)?;
    let dir = header_path.parent().unwrap_or_else(|| Path::new("."));
    let file_name = header
        .signals
        .first()
        .map(|s| s.file_name.clone())
        .ok_or_else(|| Error::Structure("header declares no signals".into()))?;
    if header.signals.iter().any(|s| s.file_name != file_name) {
        return Err(Error::Structure(
            "signals spread across several data files are not supported".into(),
        ));
    }
    let data_path = dir.join(&file_name);
    let bytes = std::fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
    decode_signal(&bytes, &header)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_rejects_unequal_channels() {
        let chans = vec![
            Channel {
                label: "a".into(),
                samples: vec![0.0; 3],
                gain: 1.0,
                baseline: 0,
            },
            Channel {
                label: "b".into(),
                samples: vec![0.0; 4],
                gain: 1.0,
                baseline: 0,
            },
        ];
        assert!(matches!(
            Record::new(360.0, chans),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn record_rejects_nan_and_bad_rate() {
        assert!(Record::single(360.0, "x", vec![0.0, f64::NAN]).is_err());
        assert!(Record::single(0.0, "x", vec![0.0]).is_err());
        assert!(Record::single(-1.0, "x", vec![0.0]).is_err());
    }

    #[test]
    fn annotation_bounds() {
        let a = AnnotationSet::new(vec![1, 5, 9], None).unwrap();
        assert!(a.check_bounds(10).is_ok());
        assert!(a.check_bounds(9).is_err());
        assert!(AnnotationSet::new(vec![3, 3], None).is_err());
    }
}
