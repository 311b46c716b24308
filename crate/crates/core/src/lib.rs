//! R-peak detection for ECG records.
//!
//! The crate covers the full path from WFDB/CSV ingestion through a
//! five-stage enhancement pipeline to two decision state machines (the
//! three-threshold Pan-Tompkins++ detector and a classic Pan-Tompkins
//! baseline) and beat-matching evaluation against reference annotations.

pub mod decision;
pub mod detector;
pub mod error;
pub mod eval;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod settings;

pub use error::{Error, ErrorKind, Result};
