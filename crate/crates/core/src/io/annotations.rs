//! Reference annotations: plain-text index lists and MIT-format `.atr` files.

use std::collections::BTreeSet;
use std::path::Path;

use super::AnnotationSet;
use crate::error::{Error, Result};

/// Beat annotation mnemonics kept by default.
pub const DEFAULT_BEAT_CODES: &str = "NLRBAaJSVrFejnE/fQ";

/// MIT annotation code → mnemonic, indexed by code (0..=41).
const MNEMONICS: [char; 42] = [
    ' ', 'N', 'L', 'R', 'a', 'V', 'F', 'J', 'A', 'S', 'E', 'j', '/', 'Q', '~', ' ', '|', ' ',
    's', 'T', '*', 'D', '"', '=', 'p', 'B', '^', 't', '+', 'u', '?', '!', '[', ']', 'e', 'n',
    '@', 'x', 'f', '(', ')', 'r',
];

const SKIP: u16 = 59;
const NUM: u16 = 60;
const SUB: u16 = 61;
const CHN: u16 = 62;
const AUX: u16 = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnotationFormat {
    PlainText,
    WfdbAtr,
}

impl AnnotationFormat {
    /// Guesses from the file extension: `.atr`/`.ann`/`.qrs` are binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("atr" | "ann" | "qrs" | "ecg" | "pu" | "pu0" | "pu1") => AnnotationFormat::WfdbAtr,
            _ => AnnotationFormat::PlainText,
        }
    }
}

/// Set of annotation mnemonics that count as beats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeatFilter(BTreeSet<char>);

impl BeatFilter {
    pub fn from_codes(codes: &str) -> Self {
        BeatFilter(codes.chars().collect())
    }

    pub fn contains(&self, mnemonic: char) -> bool {
        self.0.contains(&mnemonic)
    }

    pub fn codes(&self) -> String {
        self.0.iter().collect()
    }
}

impl Default for BeatFilter {
    fn default() -> Self {
        BeatFilter::from_codes(DEFAULT_BEAT_CODES)
    }
}

/// Result of reading an `.atr` stream.
#[derive(Debug, Clone)]
pub struct AtrReadout {
    pub annotations: AnnotationSet,
    /// Annotations carrying codes outside the standard table.
    pub unknown_codes: usize,
    /// Known annotations dropped by the beat filter.
    pub non_beat: usize,
}

pub fn load_annotations(
    path: &Path,
    format: AnnotationFormat,
    filter: &BeatFilter,
) -> Result<AnnotationSet> {
    match format {
        AnnotationFormat::PlainText => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_plain_annotations(&text)
        }
        AnnotationFormat::WfdbAtr => {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            let readout = read_atr(&bytes, filter)?;
            if readout.unknown_codes > 0 {
                log::warn!(
                    "{}: skipped {} annotations with unknown codes",
                    path.display(),
                    readout.unknown_codes
                );
            }
            Ok(readout.annotations)
        }
    }
}

/// One decimal sample index per line; `#` starts a comment.
pub fn parse_plain_annotations(text: &str) -> Result<AnnotationSet> {
    let mut beats: Vec<usize> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let idx: usize = line.parse().map_err(|_| Error::Parse {
            line: n as u64 + 1,
            message: format!("not a sample index: {line:?}"),
        })?;
        if let Some(&prev) = beats.last() {
            if idx <= prev {
                return Err(Error::Validation(format!(
                    "line {}: index {idx} does not follow {prev}",
                    n + 1
                )));
            }
        }
        beats.push(idx);
    }
    AnnotationSet::new(beats, None)
}

/// Decodes MIT annotation format: little-endian 16-bit words with the
/// code in the top 6 bits and the time increment in the low 10 bits.
pub fn read_atr(bytes: &[u8], filter: &BeatFilter) -> Result<AtrReadout> {
    let word_at = |pos: usize| -> Result<u16> {
        match bytes.get(pos..pos + 2) {
            Some(b) => Ok(u16::from_le_bytes([b[0], b[1]])),
            None => Err(Error::Decode {
                offset: pos,
                message: "annotation stream ends mid-word".into(),
            }),
        }
    };

    let mut pos = 0usize;
    let mut time: u64 = 0;
    let mut beats: Vec<(u64, char)> = Vec::new();
    let mut unknown_codes = 0;
    let mut non_beat = 0;

    while pos + 1 < bytes.len() {
        let word = word_at(pos)?;
        pos += 2;
        let code = word >> 10;
        let value = word & 0x03FF;
        match code {
            0 if value == 0 => break,
            SKIP => {
                // 32-bit interval stored as two words, high word first.
                let hi = word_at(pos)? as u32;
                let lo = word_at(pos + 2)? as u32;
                pos += 4;
                let skip = ((hi << 16) | lo) as i32;
                time = time.checked_add_signed(skip as i64).ok_or(Error::Decode {
                    offset: pos - 4,
                    message: "SKIP moves annotation time before record start".into(),
                })?;
            }
            NUM | SUB | CHN => {}
            AUX => pos += (value as usize).div_ceil(2) * 2,
            _ => {
                time += u64::from(value);
                match MNEMONICS.get(code as usize).copied().filter(|&m| m != ' ') {
                    Some(m) if filter.contains(m) => beats.push((time, m)),
                    Some(_) => non_beat += 1,
                    None => unknown_codes += 1,
                }
            }
        }
    }

    beats.sort_by_key(|&(t, _)| t);
    beats.dedup_by_key(|&mut (t, _)| t);
    let (samples, labels): (Vec<usize>, Vec<char>) =
        beats.into_iter().map(|(t, m)| (t as usize, m)).unzip();
    Ok(AtrReadout {
        annotations: AnnotationSet::new(samples, Some(labels))?,
        unknown_codes,
        non_beat,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Minimal MIT-format writer for tests: (code, interval) words.
    pub(crate) fn atr_bytes(entries: &[(u16, u32)]) -> Vec<u8> {
        let mut out = Vec::new();
        for &(code, interval) in entries {
            if interval > 1023 {
                out.extend_from_slice(&(SKIP << 10).to_le_bytes());
                out.extend_from_slice(&((interval >> 16) as u16).to_le_bytes());
                out.extend_from_slice(&((interval & 0xFFFF) as u16).to_le_bytes());
                out.extend_from_slice(&(code << 10).to_le_bytes());
            } else {
                out.extend_from_slice(&((code << 10) | interval as u16).to_le_bytes());
            }
        }
        out.extend_from_slice(&[0, 0]);
        out
    }

    #[test]
    fn plain_text_echo() {
        let a = parse_plain_annotations("18\n300\n650\n").unwrap();
        assert_eq!(a.beat_samples(), &[18, 300, 650]);
    }

    #[test]
    fn plain_text_non_monotonic() {
        assert!(matches!(
            parse_plain_annotations("300\n18\n"),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn plain_text_comments_and_garbage() {
        let a = parse_plain_annotations("# header\n5 # first\n\n9\n").unwrap();
        assert_eq!(a.beat_samples(), &[5, 9]);
        assert!(matches!(
            parse_plain_annotations("5\nx\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn atr_filters_non_beats() {
        // N at 10, rhythm '+' at 12, V at 20, unknown code 45 at 25, N at 2000 (via SKIP)
        let bytes = atr_bytes(&[(1, 10), (28, 2), (5, 8), (45, 5), (1, 1975)]);
        let r = read_atr(&bytes, &BeatFilter::default()).unwrap();
        assert_eq!(r.annotations.beat_samples(), &[10, 20, 2000]);
        assert_eq!(r.annotations.beat_labels().unwrap(), &['N', 'V', 'N']);
        assert_eq!(r.unknown_codes, 1);
        assert_eq!(r.non_beat, 1);
    }

    #[test]
    fn atr_aux_and_chn_do_not_advance_time() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&((1u16 << 10) | 100).to_le_bytes());
        // AUX with 3 bytes of payload (padded to 4)
        bytes.extend_from_slice(&((AUX << 10) | 3).to_le_bytes());
        bytes.extend_from_slice(b"(N\0\0");
        bytes.extend_from_slice(&((CHN << 10) | 1).to_le_bytes());
        bytes.extend_from_slice(&((1u16 << 10) | 50).to_le_bytes());
        bytes.extend_from_slice(&[0, 0]);
        let r = read_atr(&bytes, &BeatFilter::default()).unwrap();
        assert_eq!(r.annotations.beat_samples(), &[100, 150]);
    }

    #[test]
    fn custom_filter() {
        let bytes = atr_bytes(&[(1, 10), (5, 10)]);
        let r = read_atr(&bytes, &BeatFilter::from_codes("V")).unwrap();
        assert_eq!(r.annotations.beat_samples(), &[20]);
    }

    proptest! {
        #[test]
        fn atr_output_strictly_increasing(
            entries in proptest::collection::vec((0u16..64, 0u32..3000), 0..80)
        ) {
            let entries: Vec<(u16, u32)> = entries
                .into_iter()
                .filter(|&(c, i)| !(c == 0 && i == 0) && !(SKIP..=AUX).contains(&c))
                .collect();
            let r = read_atr(&atr_bytes(&entries), &BeatFilter::default()).unwrap();
            let s = r.annotations.beat_samples();
            prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
