//! Five-stage QRS enhancement: bandpass → derivative → square → flattop
//! smoothing → moving-window integration.

mod butterworth;
mod stages;

pub use butterworth::{Biquad, SosFilter};
pub use stages::{
    derivative, flattop_kernel, flattop_raw, mwi, smooth, square, window_samples, FLATTOP_COEFFS,
    MIN_FLATTOP_WIDTH,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequency at which the causal bandpass group delay is evaluated.
const DELAY_REFERENCE_HZ: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub filter_order: usize,
    /// Flattop smoothing stage; disabled for the classic detector.
    pub smooth_enabled: bool,
    pub smooth_window_ms: f64,
    pub mwi_window_ms: f64,
    pub zero_phase: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            band_low_hz: 5.0,
            band_high_hz: 18.0,
            filter_order: 3,
            smooth_enabled: true,
            smooth_window_ms: 60.0,
            mwi_window_ms: 150.0,
            zero_phase: false,
        }
    }
}

impl PipelineConfig {
    /// Preprocessing used by the classic detector: 5–15 Hz, no smoothing.
    pub fn classic() -> Self {
        PipelineConfig {
            band_high_hz: 15.0,
            smooth_enabled: false,
            ..PipelineConfig::default()
        }
    }

    pub fn validate(&self, fs: f64) -> Result<()> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::Config(format!("sampling rate {fs} must be positive")));
        }
        if !(self.band_low_hz > 0.0
            && self.band_low_hz < self.band_high_hz
            && self.band_high_hz < fs / 2.0)
        {
            return Err(Error::Config(format!(
                "band edges must satisfy 0 < {} < {} < {} (Nyquist)",
                self.band_low_hz,
                self.band_high_hz,
                fs / 2.0
            )));
        }
        if self.filter_order == 0 {
            return Err(Error::Config("filter order must be at least 1".into()));
        }
        if !(self.smooth_window_ms > 0.0 && self.mwi_window_ms > 0.0) {
            return Err(Error::Config("window widths must be positive".into()));
        }
        Ok(())
    }

    pub fn smooth_width(&self, fs: f64) -> usize {
        window_samples(self.smooth_window_ms, fs, MIN_FLATTOP_WIDTH)
    }

    pub fn mwi_width(&self, fs: f64) -> usize {
        window_samples(self.mwi_window_ms, fs, 1)
    }

    pub fn design_filter(&self, fs: f64) -> Result<SosFilter> {
        SosFilter::butter_bandpass(self.filter_order, self.band_low_hz, self.band_high_hz, fs)
    }
}

/// Nominal group delay of each stage, in samples.
///
/// The derivative and smoothing stages are centred (non-causal), so they
/// do not shift features even though the smoothing kernel has a nominal
/// delay of `(N−1)/2`. The causal bandpass and the trailing MWI do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StageDelays {
    pub bandpass: usize,
    pub derivative: usize,
    pub smooth: usize,
    pub mwi: usize,
}

impl StageDelays {
    /// Offset from raw-signal coordinates to integrated-signal coordinates.
    pub fn causal_total(&self) -> usize {
        self.bandpass + self.mwi
    }

    /// Offset from filtered-signal coordinates to integrated coordinates.
    pub fn filtered_to_integrated(&self) -> usize {
        self.mwi
    }
}

/// Intermediate signals of one pipeline run, all the length of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOutputs {
    pub filtered: Vec<f64>,
    pub derived: Vec<f64>,
    pub squared: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub integrated: Vec<f64>,
    pub delays: StageDelays,
}

impl StageOutputs {
    pub fn len(&self) -> usize {
        self.integrated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.integrated.is_empty()
    }
}

pub fn bandpass(samples: &[f64], fs: f64, cfg: &PipelineConfig) -> Result<Vec<f64>> {
    cfg.validate(fs)?;
    let filter = cfg.design_filter(fs)?;
    Ok(if cfg.zero_phase {
        filter.filtfilt(samples)
    } else {
        filter.filter(samples)
    })
}

pub fn run_pipeline(channel: &[f64], fs: f64, cfg: &PipelineConfig) -> Result<StageOutputs> {
    cfg.validate(fs)?;
    let filter = cfg.design_filter(fs)?;
    let filtered = if cfg.zero_phase {
        filter.filtfilt(channel)
    } else {
        filter.filter(channel)
    };
    let derived = derivative(&filtered, fs)?;
    let squared = square(&derived);
    let (smoothed, smooth_delay) = if cfg.smooth_enabled {
        let kernel = flattop_kernel(cfg.smooth_width(fs))?;
        // The flattop tails are slightly negative; the energy envelope is
        // clamped so it stays nonnegative.
        let mut smoothed = smooth(&squared, &kernel)?;
        smoothed.iter_mut().for_each(|v| *v = v.max(0.0));
        (smoothed, (kernel.len() - 1) / 2)
    } else {
        (squared.clone(), 0)
    };
    let mwi_width = cfg.mwi_width(fs);
    let integrated = mwi(&smoothed, mwi_width)?;

    let bandpass_delay = if cfg.zero_phase {
        0
    } else {
        filter
            .group_delay_at(DELAY_REFERENCE_HZ.min(fs / 4.0), fs)
            .round()
            .max(0.0) as usize
    };
    Ok(StageOutputs {
        filtered,
        derived,
        squared,
        smoothed,
        integrated,
        delays: StageDelays {
            bandpass: bandpass_delay,
            derivative: 0,
            smooth: smooth_delay,
            mwi: (mwi_width - 1) / 2,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_in_zero_out() {
        let out = run_pipeline(&[0.0; 1000], 360.0, &PipelineConfig::default()).unwrap();
        for s in [&out.filtered, &out.derived, &out.squared, &out.smoothed, &out.integrated] {
            assert_eq!(s.len(), 1000);
            assert!(s.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn default_delays_at_360() {
        let out = run_pipeline(&[0.0; 1000], 360.0, &PipelineConfig::default()).unwrap();
        assert_eq!(out.delays.smooth, 10);
        assert_eq!(out.delays.mwi, 26);
        assert_eq!(out.delays.derivative, 0);
        assert_eq!(out.delays.bandpass, 17);
        let zp = PipelineConfig {
            zero_phase: true,
            ..PipelineConfig::default()
        };
        let out = run_pipeline(&[0.0; 1000], 360.0, &zp).unwrap();
        assert_eq!(out.delays.bandpass, 0);
    }

    #[test]
    fn classic_bypasses_smoothing() {
        let x: Vec<f64> = (0..500).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let out = run_pipeline(&x, 360.0, &PipelineConfig::classic()).unwrap();
        assert_eq!(out.smoothed, out.squared);
        assert_eq!(out.delays.smooth, 0);
    }

    #[test]
    fn invalid_config() {
        let cfg = PipelineConfig {
            band_high_hz: 200.0,
            ..PipelineConfig::default()
        };
        assert!(matches!(run_pipeline(&[0.0; 100], 360.0, &cfg), Err(Error::Config(_))));
        assert!(matches!(
            bandpass(&[0.0; 100], 30.0, &PipelineConfig::default()),
            Err(Error::Config(_))
        ));
        let cfg = PipelineConfig {
            mwi_window_ms: 0.0,
            ..PipelineConfig::default()
        };
        assert!(cfg.validate(360.0).is_err());
    }

    #[test]
    fn deterministic() {
        let x: Vec<f64> = (0..3000).map(|i| (i as f64 * 0.37).sin() * (i % 17) as f64).collect();
        let a = run_pipeline(&x, 360.0, &PipelineConfig::default()).unwrap();
        let b = run_pipeline(&x, 360.0, &PipelineConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn nonnegative_stages(x in proptest::collection::vec(-50.0f64..50.0, 30..400)) {
            let out = run_pipeline(&x, 360.0, &PipelineConfig::default()).unwrap();
            prop_assert!(out.squared.iter().all(|&v| v >= 0.0));
            prop_assert!(out.integrated.iter().all(|&v| v >= 0.0));
        }

        // Powers of two scale floating-point values exactly, so homogeneity
        // holds bit for bit.
        #[test]
        fn homogeneity_degrees(
            x in proptest::collection::vec(-5.0f64..5.0, 30..300),
            exp in -3i32..4,
        ) {
            let alpha = 2f64.powi(exp);
            let cfg = PipelineConfig::default();
            let fs = 360.0;
            let ax: Vec<f64> = x.iter().map(|v| alpha * v).collect();
            let f = bandpass(&x, fs, &cfg).unwrap();
            let af = bandpass(&ax, fs, &cfg).unwrap();
            prop_assert!(f.iter().zip(&af).all(|(a, b)| alpha * a == *b));
            let d = derivative(&x, fs).unwrap();
            let ad = derivative(&ax, fs).unwrap();
            prop_assert!(d.iter().zip(&ad).all(|(a, b)| alpha * a == *b));
            let s = square(&x);
            let as_ = square(&ax);
            prop_assert!(s.iter().zip(&as_).all(|(a, b)| alpha * alpha * a == *b));
            let k = flattop_kernel(22).unwrap();
            let sm = smooth(&x, &k).unwrap();
            let asm = smooth(&ax, &k).unwrap();
            prop_assert!(sm.iter().zip(&asm).all(|(a, b)| alpha * a == *b));
            let m = mwi(&x, 54).unwrap();
            let am = mwi(&ax, 54).unwrap();
            prop_assert!(m.iter().zip(&am).all(|(a, b)| alpha * a == *b));
        }

        #[test]
        fn homogeneity_general_scale(
            x in proptest::collection::vec(-5.0f64..5.0, 30..300),
            alpha in 0.01f64..100.0,
        ) {
            let cfg = PipelineConfig::default();
            let ax: Vec<f64> = x.iter().map(|v| alpha * v).collect();
            let a = run_pipeline(&x, 360.0, &cfg).unwrap();
            let b = run_pipeline(&ax, 360.0, &cfg).unwrap();
            let scale = a.integrated.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
            for (u, v) in a.integrated.iter().zip(&b.integrated) {
                prop_assert!((alpha * alpha * u - v).abs() <= 1e-9 * alpha * alpha * scale);
            }
        }
    }
}
