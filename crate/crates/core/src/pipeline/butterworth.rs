//! Butterworth bandpass design as cascaded second-order sections.
//!
//! The analog lowpass prototype poles are shifted to a bandpass with the
//! standard s → (s² + ω₀²)/(s·B) substitution, then mapped to the z-plane
//! with the pre-warped bilinear transform. An order-N design has N
//! sections, each with one zero at z = 1 and one at z = −1.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One direct-form-II-transposed biquad, `a[0] == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, w: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -w);
        let z2 = z1 * z1;
        (self.b[0] + self.b[1] * z1 + self.b[2] * z2) / (self.a[0] + self.a[1] * z1 + self.a[2] * z2)
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2])
    }

    /// DF2T state reached after an infinitely long constant input `u`.
    fn steady_state(&self, u: f64) -> ([f64; 2], f64) {
        let y = self.dc_gain() * u;
        let z2 = self.b[2] * u - self.a[2] * y;
        let z1 = self.b[1] * u - self.a[1] * y + z2;
        ([z1, z2], y)
    }
}

/// Cascade of biquads forming a bandpass filter.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    sections: Vec<Biquad>,
}

impl SosFilter {
    /// Designs an order-`order` Butterworth bandpass with edges `low_hz`
    /// and `high_hz` at sampling rate `fs`.
    pub fn butter_bandpass(order: usize, low_hz: f64, high_hz: f64, fs: f64) -> Result<Self> {
        let nyquist = fs / 2.0;
        if order == 0 {
            return Err(Error::Config("filter order must be at least 1".into()));
        }
        if !(low_hz > 0.0 && low_hz < high_hz && high_hz < nyquist) {
            return Err(Error::Config(format!(
                "band edges must satisfy 0 < {low_hz} < {high_hz} < {nyquist} (Nyquist)"
            )));
        }

        let fs2 = 2.0 * fs;
        let w1 = fs2 * (PI * low_hz / fs).tan();
        let w2 = fs2 * (PI * high_hz / fs).tan();
        let bw = w2 - w1;
        let w0_sq = w1 * w2;

        let mut complex_poles = Vec::new();
        let mut real_poles = Vec::new();
        for k in 0..order {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            let proto = Complex64::from_polar(1.0, theta);
            let half = proto * (bw / 2.0);
            let disc = (half * half - w0_sq).sqrt();
            for s in [half + disc, half - disc] {
                let z = (fs2 + s) / (fs2 - s);
                if z.im > 1e-12 {
                    complex_poles.push(z);
                } else if z.im.abs() <= 1e-12 {
                    real_poles.push(z.re);
                }
            }
        }
        real_poles.sort_by(f64::total_cmp);

        let numerator = [1.0, 0.0, -1.0];
        let mut sections: Vec<Biquad> = complex_poles
            .iter()
            .map(|p| Biquad {
                b: numerator,
                a: [1.0, -2.0 * p.re, p.norm_sqr()],
            })
            .collect();
        for pair in real_poles.chunks(2) {
            let (r1, r2) = (pair[0], pair.get(1).copied().unwrap_or(0.0));
            sections.push(Biquad {
                b: numerator,
                a: [1.0, -(r1 + r2), r1 * r2],
            });
        }
        debug_assert_eq!(sections.len(), order);

        let mut filter = SosFilter { sections };
        // Unit gain at the digital image of the analog center frequency.
        let center = 2.0 * (w0_sq.sqrt() / fs2).atan();
        let g = filter.response(center).norm();
        for c in &mut filter.sections[0].b {
            *c /= g;
        }
        Ok(filter)
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Complex response at normalized angular frequency `w` (rad/sample).
    pub fn response(&self, w: f64) -> Complex64 {
        self.sections
            .iter()
            .map(|s| s.response(w))
            .product()
    }

    pub fn magnitude_at(&self, freq_hz: f64, fs: f64) -> f64 {
        self.response(2.0 * PI * freq_hz / fs).norm()
    }

    /// Group delay in samples at `freq_hz`.
    pub fn group_delay_at(&self, freq_hz: f64, fs: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / fs;
        let poly_delay = |c: &[f64; 3]| {
            let e1 = Complex64::from_polar(1.0, -w);
            let e2 = e1 * e1;
            let num = c[1] * e1 + 2.0 * c[2] * e2;
            let den = c[0] + c[1] * e1 + c[2] * e2;
            (num / den).re
        };
        self.sections
            .iter()
            .map(|s| poly_delay(&s.b) - poly_delay(&s.a))
            .sum()
    }

    /// Causal filtering. The state starts as if `x[0]` had been applied
    /// forever, so a constant prefix produces no start-up transient.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        if y.is_empty() {
            return y;
        }
        for s in &self.sections {
            let ([mut z1, mut z2], _) = s.steady_state(y[0]);
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[1] * out + z2;
                z2 = s.b[2] * input - s.a[2] * out;
                *v = out;
            }
        }
        y
    }

    /// Forward-backward filtering (zero phase, squared magnitude).
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.filter(x);
        y.reverse();
        let mut y = self.filter(&y);
        y.reverse();
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn impulse(n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        x[0] = 1.0;
        x
    }

    // Reference: scipy.signal.butter(3, [5, 18], 'band', fs=360, output='sos')
    // followed by sosfilt on a unit impulse.
    const SCIPY_IMPULSE_5_18: [f64; 12] = [
        0.0011782201214798047,
        0.006445993256250259,
        0.016942067659760345,
        0.029994887723070542,
        0.041930604098580945,
        0.05008356877618736,
        0.05283752894685739,
        0.049570322414910994,
        0.04052327345211267,
        0.02661903153382754,
        0.009251824334537667,
        -0.009927639633979302,
    ];

    const SCIPY_IMPULSE_5_15: [f64; 8] = [
        0.0005622892813788521,
        0.0031413803737757174,
        0.008512710318101432,
        0.015713777588105757,
        0.023168505025970863,
        0.029564165259149133,
        0.0339025565750931,
        0.035523771650097194,
    ];

    #[test]
    fn impulse_response_matches_reference_design() {
        let f = SosFilter::butter_bandpass(3, 5.0, 18.0, 360.0).unwrap();
        // Zero initial state: impulse starts from x[0] = 1, so feed a
        // leading zero and drop it.
        let mut x = vec![0.0];
        x.extend(impulse(40));
        let y = &f.filter(&x)[1..];
        for (got, want) in y.iter().zip(SCIPY_IMPULSE_5_18) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        let f = SosFilter::butter_bandpass(3, 5.0, 15.0, 360.0).unwrap();
        let y = &f.filter(&x)[1..];
        for (got, want) in y.iter().zip(SCIPY_IMPULSE_5_15) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn magnitude_matches_reference_design() {
        let f = SosFilter::butter_bandpass(3, 5.0, 18.0, 360.0).unwrap();
        let expected = [
            (0.3, 8.217526086440436e-05),
            (10.0, 0.9999999203114646),
            (12.0, 0.9991917017373815),
            (50.0, 0.016405485876256336),
        ];
        for (freq, mag) in expected {
            let got = f.magnitude_at(freq, 360.0);
            assert!((got - mag).abs() < 1e-9 * mag.max(1.0), "{freq} Hz: {got} vs {mag}");
        }
        assert!((f.group_delay_at(10.0, 360.0) - 16.76440168).abs() < 1e-6);
    }

    /// Steady-state amplitude measured by simulation, independent of the
    /// analytic response.
    fn measured_gain(f: &SosFilter, freq: f64, fs: f64) -> f64 {
        let n = (fs * 40.0 / freq.min(1.0)) as usize + (fs * 20.0) as usize;
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * freq * i as f64 / fs).sin())
            .collect();
        let y = f.filter(&x);
        // Project the settled half onto sin/cos at the test frequency.
        let (mut s, mut c) = (0.0, 0.0);
        let start = n / 2;
        for (i, v) in y.iter().enumerate().skip(start) {
            let ph = 2.0 * PI * freq * i as f64 / fs;
            s += v * ph.sin();
            c += v * ph.cos();
        }
        2.0 * s.hypot(c) / (n - start) as f64
    }

    #[test]
    fn frequency_sweep() {
        let f = SosFilter::butter_bandpass(3, 5.0, 18.0, 360.0).unwrap();
        let g12 = measured_gain(&f, 12.0, 360.0);
        let g03 = measured_gain(&f, 0.3, 360.0);
        let g50 = measured_gain(&f, 50.0, 360.0);
        assert!(g12 >= 0.7, "{g12}");
        assert!(g03 <= 0.05, "{g03}");
        assert!(g12 > g03 && g12 > g50);
        for freq in [0.3, 2.0, 5.0, 12.0, 18.0, 30.0, 50.0] {
            let m = measured_gain(&f, freq, 360.0);
            let a = f.magnitude_at(freq, 360.0);
            assert!((m - a).abs() < 1e-3, "{freq} Hz: measured {m}, analytic {a}");
        }
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(SosFilter::butter_bandpass(3, 5.0, 180.0, 360.0).is_err());
        assert!(SosFilter::butter_bandpass(3, 18.0, 5.0, 360.0).is_err());
        assert!(SosFilter::butter_bandpass(3, 0.0, 5.0, 360.0).is_err());
        assert!(SosFilter::butter_bandpass(0, 5.0, 18.0, 360.0).is_err());
    }

    #[test]
    fn even_orders_and_other_rates() {
        for (order, fs) in [(1, 250.0), (2, 360.0), (4, 500.0), (5, 128.0)] {
            let f = SosFilter::butter_bandpass(order, 5.0, 18.0, fs).unwrap();
            assert_eq!(f.sections().len(), order);
            assert!((f.magnitude_at(5.0, fs) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
            assert!((f.magnitude_at(18.0, fs) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_input_has_no_transient() {
        let f = SosFilter::butter_bandpass(3, 5.0, 18.0, 360.0).unwrap();
        let y = f.filter(&[2.5; 100]);
        assert!(y.iter().all(|v| v.abs() < 1e-12));
        assert_eq!(f.filter(&[0.0; 10]), vec![0.0; 10]);
    }
}
