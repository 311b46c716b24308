//! Deterministic synthetic ECG with known beat positions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{AnnotationSet, Record};

/// QRS support extends this many Ricker widths either side of the apex.
const QRS_SUPPORT_SIGMAS: f64 = 6.0;
/// T-wave support extends this many standard deviations either side.
const T_SUPPORT_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TWaveSpec {
    /// Peak amplitude relative to the QRS amplitude of the same beat.
    pub relative_amplitude: f64,
    pub delay_ms: f64,
    /// Full width, taken as six standard deviations of a Gaussian.
    pub width_ms: f64,
}

impl Default for TWaveSpec {
    fn default() -> Self {
        TWaveSpec {
            relative_amplitude: 0.3,
            delay_ms: 300.0,
            width_ms: 160.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpikeSpec {
    pub time_s: f64,
    pub scale: f64,
}

/// Per-beat amplitude scaling, applied multiplicatively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Modulation {
    /// Beats `offset`, `offset + every`, … (0-based) are scaled.
    EveryNth { every: usize, offset: usize, scale: f64 },
    /// Beats with apex in `[start_s, end_s)` are scaled.
    Segment { start_s: f64, end_s: f64, scale: f64 },
}

/// Heart rate change taking effect for beats from `at_s` onward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateChange {
    pub at_s: f64,
    pub bpm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub fs: f64,
    pub duration_s: f64,
    pub heart_rate_bpm: f64,
    pub rate_changes: Vec<RateChange>,
    pub qrs_amplitude_mv: f64,
    pub modulations: Vec<Modulation>,
    pub qrs_width_ms: f64,
    pub t_wave: Option<TWaveSpec>,
    pub noise_snr_db: Option<f64>,
    pub spike: Option<SpikeSpec>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            fs: 360.0,
            duration_s: 60.0,
            heart_rate_bpm: 80.0,
            rate_changes: Vec::new(),
            qrs_amplitude_mv: 1.0,
            modulations: Vec::new(),
            qrs_width_ms: 100.0,
            t_wave: Some(TWaveSpec::default()),
            noise_snr_db: None,
            spike: None,
            seed: 0,
        }
    }
}

fn check_bpm(bpm: f64) -> Result<()> {
    if bpm > 20.0 && bpm <= 260.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("heart rate {bpm} bpm outside (20, 260]")))
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(Error::Config(format!("fs {} must be positive", self.fs)));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::Config(format!("duration {} must be positive", self.duration_s)));
        }
        check_bpm(self.heart_rate_bpm)?;
        for rc in &self.rate_changes {
            check_bpm(rc.bpm)?;
        }
        if self.qrs_width_ms.is_nan() || self.qrs_width_ms <= 0.0 {
            return Err(Error::Config("qrs_width_ms must be positive".into()));
        }
        if let Some(t) = &self.t_wave {
            if !(t.width_ms > 0.0 && t.delay_ms >= 0.0) {
                return Err(Error::Config("t_wave width must be positive, delay nonnegative".into()));
            }
        }
        for m in &self.modulations {
            if let Modulation::EveryNth { every: 0, .. } = m {
                return Err(Error::Config("every_nth modulation needs every >= 1".into()));
            }
        }
        Ok(())
    }

    fn bpm_at(&self, t: f64) -> f64 {
        self.rate_changes
            .iter()
            .filter(|rc| rc.at_s <= t)
            .max_by(|a, b| a.at_s.total_cmp(&b.at_s))
            .map_or(self.heart_rate_bpm, |rc| rc.bpm)
    }

    /// Beat apex times: the first half an interval in, then one interval
    /// at the rate in force at the previous beat.
    fn beat_times(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut t = 30.0 / self.heart_rate_bpm;
        while t < self.duration_s {
            out.push(t);
            t += 60.0 / self.bpm_at(t);
        }
        out
    }
}

/// Mexican-hat pulse, unit height at the apex.
fn ricker(t: f64) -> f64 {
    let t2 = t * t;
    (1.0 - t2) * (-t2 / 2.0).exp()
}

fn add_pulse(x: &mut [f64], center: isize, half: isize, f: impl Fn(isize) -> f64) {
    let n = x.len() as isize;
    for i in (center - half).max(0)..=(center + half).min(n - 1) {
        x[i as usize] += f(i - center);
    }
}

/// Generates a single-channel record and the apex index of every beat.
pub fn synth_ecg(spec: &SynthSpec) -> Result<(Record, AnnotationSet)> {
    spec.validate()?;
    let fs = spec.fs;
    let n = (spec.duration_s * fs).round() as usize;
    let mut x = vec![0.0; n];

    let times = spec.beat_times();
    let spike_beat = spec.spike.map(|s| {
        let (k, _) = times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - s.time_s).abs().total_cmp(&(b.1 - s.time_s).abs()))
            .unwrap_or((usize::MAX, &0.0));
        (k, s.scale)
    });

    let sigma = spec.qrs_width_ms / 6.0 * fs / 1000.0;
    let qrs_half = (QRS_SUPPORT_SIGMAS * sigma).round() as isize;
    let mut apexes = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let apex = (t * fs).round() as usize;
        if apex >= n {
            break;
        }
        let mut amp = spec.qrs_amplitude_mv;
        for m in &spec.modulations {
            match *m {
                Modulation::EveryNth { every, offset, scale } => {
                    if k >= offset && (k - offset) % every == 0 {
                        amp *= scale;
                    }
                }
                Modulation::Segment { start_s, end_s, scale } => {
                    if t >= start_s && t < end_s {
                        amp *= scale;
                    }
                }
            }
        }
        if let Some((sk, scale)) = spike_beat {
            if sk == k {
                amp *= scale;
            }
        }
        add_pulse(&mut x, apex as isize, qrs_half, |d| amp * ricker(d as f64 / sigma));
        if let Some(tw) = &spec.t_wave {
            let tsig = tw.width_ms / 6.0 * fs / 1000.0;
            let center = apex as isize + (tw.delay_ms * fs / 1000.0).round() as isize;
            let half = (T_SUPPORT_SIGMAS * tsig).round() as isize;
            let height = amp * tw.relative_amplitude;
            add_pulse(&mut x, center, half, |d| {
                let u = d as f64 / tsig;
                height * (-u * u / 2.0).exp()
            });
        }
        apexes.push(apex);
    }

    if let Some(snr) = spec.noise_snr_db {
        let power = x.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64;
        let sd = (power / 10f64.powf(snr / 10.0)).sqrt();
        if sd > 0.0 {
            let normal = Normal::new(0.0, sd)
                .map_err(|e| Error::Config(format!("noise level: {e}")))?;
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            for v in x.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }

    let record = Record::single(fs, "II", x)?;
    let annotations = AnnotationSet::new(apexes, None)?;
    Ok((record, annotations))
}
