//! Packed WFDB signal encodings.
//!
//! Format 212 stores two 12-bit two's-complement samples in three bytes:
//!
//! ```text
//! sample A = byte0 | (byte1 & 0x0F) << 8
//! sample B = byte2 | (byte1 & 0xF0) << 4
//! ```
//!
//! Samples are interleaved frame by frame across channels, so the packing
//! pairs are formed over the interleaved stream, not per channel.

use super::{Channel, HeaderInfo, Record};
use crate::error::{Error, Result};

#[inline]
fn sign_extend_12(v: u16) -> i16 {
    ((v << 4) as i16) >> 4
}

/// Unpacks `count` interleaved 12-bit samples.
fn unpack_212(bytes: &[u8], count: usize) -> Result<Vec<i16>> {
    let needed = (count * 3).div_ceil(2);
    if bytes.len() < needed {
        return Err(Error::Decode {
            offset: bytes.len(),
            message: format!("format 212 needs {needed} bytes for {count} samples"),
        });
    }
    let mut out = Vec::with_capacity(count);
    for group in bytes[..needed].chunks(3) {
        let b0 = group[0] as u16;
        let b1 = group[1] as u16;
        out.push(sign_extend_12(b0 | ((b1 & 0x0F) << 8)));
        if out.len() < count {
            let b2 = group[2] as u16;
            out.push(sign_extend_12(b2 | ((b1 & 0xF0) << 4)));
        }
    }
    Ok(out)
}

/// Packs 12-bit samples (each in `-2048..=2047`) into format 212 bytes.
/// An odd trailing sample occupies two bytes.
pub fn encode_format212(samples: &[i16]) -> Vec<u8> {
    let mut out = Vec::with_capacity((samples.len() * 3).div_ceil(2));
    for pair in samples.chunks(2) {
        let a = (pair[0] as u16) & 0x0FFF;
        out.push((a & 0xFF) as u8);
        match pair.get(1) {
            Some(&b) => {
                let b = (b as u16) & 0x0FFF;
                out.push(((a >> 8) | ((b >> 4) & 0xF0)) as u8);
                out.push((b & 0xFF) as u8);
            }
            None => out.push((a >> 8) as u8),
        }
    }
    out
}

fn check_format(header: &HeaderInfo, code: u16) -> Result<()> {
    match header.signals.iter().find(|s| s.format_code != code) {
        Some(s) => Err(Error::UnsupportedFormat(s.format_code)),
        None => Ok(()),
    }
}

fn frame_count(header: &HeaderInfo, available_samples: usize) -> usize {
    if header.n_samples > 0 {
        header.n_samples
    } else {
        available_samples / header.n_channels
    }
}

fn payload<'a>(bytes: &'a [u8], header: &HeaderInfo) -> Result<&'a [u8]> {
    let offset = header.signals.first().map_or(0, |s| s.byte_offset);
    bytes.get(offset..).ok_or(Error::Decode {
        offset: bytes.len(),
        message: format!("byte offset {offset} beyond end of data"),
    })
}

fn into_record(raw: Vec<i16>, frames: usize, header: &HeaderInfo) -> Result<Record> {
    let n = header.n_channels;
    let channels = header
        .signals
        .iter()
        .enumerate()
        .map(|(c, spec)| Channel {
            label: spec.label.clone(),
            samples: (0..frames)
                .map(|f| (f64::from(raw[f * n + c]) - f64::from(spec.baseline)) / spec.gain)
                .collect(),
            gain: spec.gain,
            baseline: spec.baseline,
        })
        .collect();
    Record::new(header.sampling_rate_hz, channels)
}

/// Decodes a format-212 signal file into millivolt samples.
pub fn decode_format212(bytes: &[u8], header: &HeaderInfo) -> Result<Record> {
    check_format(header, 212)?;
    let data = payload(bytes, header)?;
    let frames = frame_count(header, data.len() * 2 / 3);
    let raw = unpack_212(data, frames * header.n_channels).map_err(|e| match e {
        Error::Decode { offset, message } => Error::Decode {
            offset: offset + (bytes.len() - data.len()),
            message,
        },
        other => other,
    })?;
    into_record(raw, frames, header)
}

/// Decodes a format-16 (little-endian 16-bit) signal file.
pub fn decode_format16(bytes: &[u8], header: &HeaderInfo) -> Result<Record> {
    check_format(header, 16)?;
    let data = payload(bytes, header)?;
    let frames = frame_count(header, data.len() / 2);
    let count = frames * header.n_channels;
    if data.len() < count * 2 {
        return Err(Error::Decode {
            offset: bytes.len(),
            message: format!("format 16 needs {} bytes for {count} samples", count * 2),
        });
    }
    let raw = data[..count * 2]
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]))
        .collect();
    into_record(raw, frames, header)
}

/// Dispatches on the header's (uniform) format code.
pub fn decode_signal(bytes: &[u8], header: &HeaderInfo) -> Result<Record> {
    match header.signals.first().map(|s| s.format_code) {
        Some(212) => decode_format212(bytes, header),
        Some(16) => decode_format16(bytes, header),
        Some(code) => Err(Error::UnsupportedFormat(code)),
        None => Err(Error::Structure("header declares no signals".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_wfdb_header;
    use proptest::prelude::*;

    fn header(n_ch: usize, n: usize, fmt: u16) -> HeaderInfo {
        let mut text = format!("t {n_ch} 360 {n}\n");
        for c in 0..n_ch {
            text.push_str(&format!("t.dat {fmt} 200 12 0 0 0 0 ch{c}\n"));
        }
        parse_wfdb_header(&text).unwrap()
    }

    // Independent unpacking: assemble the 24-bit little-endian word and
    // slice out 12-bit fields, then sign-extend through a lookup table.
    fn oracle_pair(b: [u8; 3]) -> (i32, i32) {
        let table: Vec<i32> = (0..4096).map(|c| if c >= 2048 { c - 4096 } else { c }).collect();
        let a = (b[0] as usize) + 256 * (b[1] as usize % 16);
        let bb = (b[2] as usize) + 256 * (b[1] as usize / 16);
        (table[a], table[bb])
    }

    #[test]
    fn documented_byte_layout() {
        // 0xE8 | 0x3 << 8 = 1000; 0x3E | 0x0 << 4 = 62.
        assert_eq!(unpack_212(&[0xE8, 0x03, 0x3E], 2).unwrap(), vec![1000, 62]);
        assert_eq!(oracle_pair([0xE8, 0x03, 0x3E]), (1000, 62));
        // The (1000, 995) pair packs as E8 33 E3.
        assert_eq!(unpack_212(&[0xE8, 0x33, 0xE3], 2).unwrap(), vec![1000, 995]);
        assert_eq!(encode_format212(&[1000, 995]), vec![0xE8, 0x33, 0xE3]);
    }

    #[test]
    fn millivolt_conversion() {
        let h = header(2, 1, 212);
        let rec = decode_format212(&[0xE8, 0x33, 0xE3], &h).unwrap();
        assert_eq!(rec.channels()[0].samples, vec![5.0]);
        assert!((rec.channels()[1].samples[0] - 4.975).abs() < 1e-12);
    }

    #[test]
    fn zero_group() {
        let h = header(2, 1, 212);
        let rec = decode_format212(&[0, 0, 0], &h).unwrap();
        assert_eq!(rec.channels()[0].samples, vec![0.0]);
        assert_eq!(rec.channels()[1].samples, vec![0.0]);
    }

    #[test]
    fn all_codes_match_sign_extension_oracle() {
        for code in 0u16..4096 {
            let expected = if code >= 0x800 { code as i32 - 4096 } else { code as i32 };
            // As sample A and as sample B.
            let a = [(code & 0xFF) as u8, (code >> 8) as u8, 0];
            let b = [0, ((code >> 8) << 4) as u8, (code & 0xFF) as u8];
            assert_eq!(unpack_212(&a, 2).unwrap()[0] as i32, expected, "A {code:#x}");
            assert_eq!(unpack_212(&b, 2).unwrap()[1] as i32, expected, "B {code:#x}");
            assert_eq!(oracle_pair(a).0, expected);
        }
        assert_eq!(sign_extend_12(0x800), -2048);
    }

    #[test]
    fn truncated_stream_reports_offset() {
        let h = header(1, 4, 212);
        match decode_format212(&[1, 2, 3, 4], &h) {
            Err(Error::Decode { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn other_formats_rejected() {
        let h = header(1, 2, 999);
        assert!(matches!(decode_signal(&[0; 8], &h), Err(Error::UnsupportedFormat(999))));
        assert!(matches!(decode_format212(&[0; 8], &h), Err(Error::UnsupportedFormat(999))));
    }

    #[test]
    fn odd_sample_count() {
        let raw = [-3i16, 7, -2048];
        let bytes = encode_format212(&raw);
        assert_eq!(bytes.len(), 5);
        assert_eq!(unpack_212(&bytes, 3).unwrap(), raw.to_vec());
    }

    #[test]
    fn format16_interleaved() {
        let h = header(2, 2, 16);
        let mut bytes = Vec::new();
        for v in [200i16, -400, 0, 1] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let rec = decode_format16(&bytes, &h).unwrap();
        assert_eq!(rec.channels()[0].samples, vec![1.0, 0.0]);
        assert_eq!(rec.channels()[1].samples, vec![-2.0, 0.005]);
    }

    #[test]
    fn unspecified_length_uses_data_size() {
        let h = header(1, 0, 212);
        let rec = decode_format212(&encode_format212(&[1, 2, 3, 4]), &h).unwrap();
        assert_eq!(rec.duration_samples(), 4);
    }

    proptest! {
        #[test]
        fn roundtrip_bytes(groups in proptest::collection::vec(any::<[u8; 3]>(), 0..200)) {
            let bytes: Vec<u8> = groups.concat();
            let raw = unpack_212(&bytes, groups.len() * 2).unwrap();
            prop_assert_eq!(encode_format212(&raw), bytes);
        }

        #[test]
        fn roundtrip_samples(raw in proptest::collection::vec(-2048i16..=2047, 0..301)) {
            let bytes = encode_format212(&raw);
            prop_assert_eq!(unpack_212(&bytes, raw.len()).unwrap(), raw);
        }
    }
}
