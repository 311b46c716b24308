//! Beat matching, pooled metrics, execution timing and the synthetic
//! record generator used as a test oracle.

mod matching;
mod metrics;
mod synth;
mod timing;

pub use matching::{match_beats, tolerance_samples, MatchReport};
pub use metrics::{from_counts, metrics, Metrics};
pub use synth::{synth_ecg, Modulation, RateChange, SpikeSpec, SynthSpec, TWaveSpec};
pub use timing::{time_detector, TimingReport, MIN_RUNS};
