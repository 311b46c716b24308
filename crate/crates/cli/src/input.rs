//! Locating and loading records, channels and annotations.

use std::path::{Path, PathBuf};

use ptpp_core::io::{load_annotations, load_csv, load_wfdb, AnnotationFormat, AnnotationSet, BeatFilter, Record};

use crate::error::{CliError, CliResult};

/// Root for relative input paths.
pub const DATA_DIR_VAR: &str = "PTPP_DATA_DIR";

/// Lead labels tried, in order, when no channel is requested.
const PREFERRED_LEADS: [&str; 2] = ["MLII", "II"];

/// Relative paths that do not exist under the working directory are looked
/// up under `$PTPP_DATA_DIR`.
pub fn resolve(path: &Path) -> PathBuf {
    if path.is_absolute() || path.exists() {
        return path.to_path_buf();
    }
    match std::env::var_os(DATA_DIR_VAR) {
        Some(root) => {
            let candidate = Path::new(&root).join(path);
            if candidate.exists() {
                candidate
            } else {
                path.to_path_buf()
            }
        }
        None => path.to_path_buf(),
    }
}

pub fn record_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Loads a WFDB record (by its `.hea` path or extensionless record name)
/// or a single-channel CSV file, which needs `fs`.
pub fn load_record(path: &Path, fs: Option<f64>) -> CliResult<(PathBuf, Record)> {
    let mut path = resolve(path);
    if path.extension().is_none() {
        path = resolve(&path.with_extension("hea"));
    }
    if !path.is_file() {
        return Err(CliError::Config(format!("record {} does not exist", path.display())));
    }
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("csv") => {
            let fs = fs.ok_or_else(|| {
                CliError::Config(format!("{}: CSV records need --fs", path.display()))
            })?;
            let rec = load_csv(&path, fs)?;
            Ok((path, rec))
        }
        Some("hea") => {
            let rec = load_wfdb(&path)?;
            Ok((path, rec))
        }
        _ => Err(CliError::Config(format!(
            "{}: unrecognised record type; expected .hea or .csv",
            path.display()
        ))),
    }
}

/// Picks a channel by label or zero-based index. Without a selector the
/// first preferred lead is used, else channel 0 with a warning.
pub fn select_channel<'a>(record: &'a Record, selector: Option<&str>, name: &str) -> CliResult<&'a [f64]> {
    let channels = record.channels();
    let labels = || record.labels().join(", ");
    let index = match selector {
        Some(sel) => match record.channel_by_label(sel) {
            Some((i, _)) => i,
            None => match sel.parse::<usize>() {
                Ok(i) if i < channels.len() => i,
                Ok(i) => {
                    return Err(CliError::Config(format!(
                        "{name}: channel index {i} out of range; available channels: {}",
                        labels()
                    )))
                }
                Err(_) => {
                    return Err(CliError::Config(format!(
                        "{name}: no channel labelled {sel:?}; available channels: {}",
                        labels()
                    )))
                }
            },
        },
        None => match PREFERRED_LEADS.iter().find_map(|l| record.channel_by_label(l)) {
            Some((i, _)) => i,
            None => {
                if channels.len() > 1 {
                    log::warn!(
                        "{name}: none of {} present, using channel 0 ({})",
                        PREFERRED_LEADS.join("/"),
                        channels[0].label
                    );
                }
                0
            }
        },
    };
    Ok(&channels[index].samples)
}

/// Reference annotations for a record: the explicit path if given, else a
/// sibling `<record>.atr` or `<record>.beats` file.
pub fn load_reference(record_path: &Path, explicit: Option<&Path>, filter: &BeatFilter) -> CliResult<AnnotationSet> {
    let path = match explicit {
        Some(p) => {
            let p = resolve(p);
            if !p.exists() {
                return Err(CliError::Config(format!(
                    "annotation file {} does not exist",
                    p.display()
                )));
            }
            p
        }
        None => ["atr", "beats"]
            .iter()
            .map(|ext| record_path.with_extension(ext))
            .find(|p| p.exists())
            .ok_or_else(|| {
                CliError::Config(format!(
                    "no annotation file for {}; pass --annotations or place a .atr or .beats file beside it",
                    record_path.display()
                ))
            })?,
    };
    Ok(load_annotations(&path, AnnotationFormat::from_path(&path), filter)?)
}
