use crate::error::{Error, Result};

/// WFDB default ADC gain in counts per millivolt.
pub const DEFAULT_GAIN: f64 = 200.0;

/// Sampling frequency assumed when the record line omits it.
const DEFAULT_FS: f64 = 250.0;

/// Parsed contents of a WFDB `.hea` file.
#[derive(Debug, Clone, PartialEq)]
pub struct HeaderInfo {
    pub record_name: String,
    pub n_channels: usize,
    pub sampling_rate_hz: f64,
    /// Samples per channel; 0 when the header leaves it unspecified.
    pub n_samples: usize,
    pub signals: Vec<SignalSpec>,
}

/// One signal specification line.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub file_name: String,
    pub format_code: u16,
    /// Byte offset of the first sample in the data file.
    pub byte_offset: usize,
    pub gain: f64,
    pub baseline: i32,
    pub units: Option<String>,
    pub adc_resolution: Option<u32>,
    pub adc_zero: i32,
    pub initial_value: Option<i32>,
    pub checksum: Option<i32>,
    pub label: String,
}

/// Parses WFDB header text. Unknown format codes are accepted here and
/// rejected when the signal file is decoded.
pub fn parse_wfdb_header(text: &str) -> Result<HeaderInfo> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));

    let record_line = lines
        .next()
        .ok_or_else(|| Error::EmptyInput("header has no record line".into()))?;
    let mut fields = record_line.split_whitespace();

    let name_field = fields.next().unwrap_or_default();
    if name_field.contains('/') {
        return Err(Error::Structure(format!(
            "multi-segment record {name_field:?} is not supported"
        )));
    }
    let n_channels: usize = fields
        .next()
        .ok_or_else(|| Error::Structure("record line lacks the signal count".into()))?
        .parse()
        .map_err(|_| Error::Structure(format!("bad signal count in {record_line:?}")))?;
    if n_channels == 0 {
        return Err(Error::Structure("record declares zero signals".into()));
    }
    let sampling_rate_hz = match fields.next() {
        Some(f) => {
            // `fs/counter(base)`: only the sampling frequency matters here.
            let fs_text = f.split('/').next().unwrap_or(f);
            let fs: f64 = fs_text
                .parse()
                .map_err(|_| Error::Structure(format!("bad sampling frequency {f:?}")))?;
            if !(fs > 0.0 && fs.is_finite()) {
                return Err(Error::Structure(format!("sampling frequency {fs} not positive")));
            }
            fs
        }
        None => DEFAULT_FS,
    };
    let n_samples = match fields.next() {
        Some(f) => f
            .parse()
            .map_err(|_| Error::Structure(format!("bad sample count {f:?}")))?,
        None => 0,
    };

    let signals = lines
        .by_ref()
        .take(n_channels)
        .map(parse_signal_line)
        .collect::<Result<Vec<_>>>()?;
    if signals.len() != n_channels {
        return Err(Error::Structure(format!(
            "header declares {n_channels} signals but provides {} signal lines",
            signals.len()
        )));
    }

    Ok(HeaderInfo {
        record_name: name_field.to_string(),
        n_channels,
        sampling_rate_hz,
        n_samples,
        signals,
    })
}

fn parse_signal_line(line: &str) -> Result<SignalSpec> {
    let bad = |what: &str| Error::Structure(format!("bad {what} in signal line {line:?}"));

    // The description is free text that may contain spaces: it is whatever
    // follows the eighth field.
    let mut rest = line;
    let mut take = || -> Option<&str> {
        let trimmed = rest.trim_start();
        if trimmed.is_empty() {
            return None;
        }
        let end = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
        let (tok, tail) = trimmed.split_at(end);
        rest = tail;
        Some(tok)
    };

    let file_name = take().ok_or_else(|| bad("file name"))?.to_string();
    let fmt = take().ok_or_else(|| bad("format"))?;
    let digits: String = fmt.chars().take_while(char::is_ascii_digit).collect();
    let format_code: u16 = digits.parse().map_err(|_| bad("format"))?;
    let byte_offset = match fmt.split_once('+') {
        Some((_, off)) => off.parse().map_err(|_| bad("byte offset"))?,
        None => 0,
    };

    let mut gain = DEFAULT_GAIN;
    let mut explicit_baseline = None;
    let mut units = None;
    if let Some(g) = take() {
        let (g, u) = match g.split_once('/') {
            Some((g, u)) => (g, Some(u.to_string())),
            None => (g, None),
        };
        units = u;
        let (g, b) = match g.split_once('(') {
            Some((g, b)) => {
                let b = b.strip_suffix(')').ok_or_else(|| bad("baseline"))?;
                (g, Some(b.parse::<i32>().map_err(|_| bad("baseline"))?))
            }
            None => (g, None),
        };
        let parsed: f64 = g.parse().map_err(|_| bad("gain"))?;
        if parsed != 0.0 {
            gain = parsed;
        }
        explicit_baseline = b;
    }
    let adc_resolution = take().map(|t| t.parse().map_err(|_| bad("ADC resolution"))).transpose()?;
    let adc_zero = take()
        .map(|t| t.parse().map_err(|_| bad("ADC zero")))
        .transpose()?
        .unwrap_or(0);
    let initial_value = take().map(|t| t.parse().map_err(|_| bad("initial value"))).transpose()?;
    let checksum = take().map(|t| t.parse().map_err(|_| bad("checksum"))).transpose()?;
    let _block_size = take();
    let label = rest.trim().to_string();

    Ok(SignalSpec {
        file_name,
        format_code,
        byte_offset,
        gain,
        baseline: explicit_baseline.unwrap_or(adc_zero),
        units,
        adc_resolution,
        adc_zero,
        initial_value,
        checksum,
        label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MITDB_100: &str = "100 2 360 650000\n\
        100.dat 212 200 11 1024 995 -22131 0 MLII\n\
        100.dat 212 200 11 1024 1011 20052 0 V5\n\
        # 69 M 1085 1629 x1\n\
        # Aldomet, Inderal\n";

    #[test]
    fn mitdb_100_fields() {
        let h = parse_wfdb_header(MITDB_100).unwrap();
        assert_eq!(h.record_name, "100");
        assert_eq!(h.n_channels, 2);
        assert_eq!(h.sampling_rate_hz, 360.0);
        assert_eq!(h.n_samples, 650_000);
        let ml = &h.signals[0];
        assert_eq!(ml.file_name, "100.dat");
        assert_eq!(ml.format_code, 212);
        assert_eq!(ml.gain, 200.0);
        assert_eq!(ml.adc_resolution, Some(11));
        assert_eq!(ml.adc_zero, 1024);
        assert_eq!(ml.baseline, 1024);
        assert_eq!(ml.initial_value, Some(995));
        assert_eq!(ml.checksum, Some(-22131));
        assert_eq!(ml.label, "MLII");
        assert_eq!(h.signals[1].label, "V5");
        assert_eq!(h.signals[1].initial_value, Some(1011));
    }

    #[test]
    fn minimal_signal_line_defaults() {
        let h = parse_wfdb_header("rec 1 500 10\nrec.dat 16\n").unwrap();
        let s = &h.signals[0];
        assert_eq!(s.format_code, 16);
        assert_eq!(s.gain, DEFAULT_GAIN);
        assert_eq!(s.baseline, 0);
        assert_eq!(s.label, "");
    }

    #[test]
    fn explicit_baseline_units_and_description_with_spaces() {
        let h = parse_wfdb_header(
            "r 1 128 0\nr.dat 212+24 400(-5)/mV 12 0 3 17 0 Lead II (chest)\n",
        )
        .unwrap();
        let s = &h.signals[0];
        assert_eq!(s.byte_offset, 24);
        assert_eq!(s.gain, 400.0);
        assert_eq!(s.baseline, -5);
        assert_eq!(s.units.as_deref(), Some("mV"));
        assert_eq!(s.label, "Lead II (chest)");
        assert_eq!(h.n_samples, 0);
    }

    #[test]
    fn zero_gain_means_default() {
        let h = parse_wfdb_header("r 1 360\nr.dat 212 0 12 0\n").unwrap();
        assert_eq!(h.signals[0].gain, DEFAULT_GAIN);
    }

    #[test]
    fn channel_count_mismatch() {
        let text = "r 3 360 100\nr.dat 212 200 11 0 0 0 0 a\nr.dat 212 200 11 0 0 0 0 b\n";
        assert!(matches!(parse_wfdb_header(text), Err(Error::Structure(_))));
    }

    #[test]
    fn unknown_format_parses() {
        let h = parse_wfdb_header("r 1 360 100\nr.dat 999 200\n").unwrap();
        assert_eq!(h.signals[0].format_code, 999);
    }

    #[test]
    fn multi_segment_rejected() {
        assert!(parse_wfdb_header("r/2 1 360 100\nr.dat 212\n").is_err());
    }
}
