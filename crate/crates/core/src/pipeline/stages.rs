use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Flattop cosine-sum coefficients a₀..a₄.
pub const FLATTOP_COEFFS: [f64; 5] = [0.2155789, 0.4166316, 0.27726316, 0.08357895, 0.00694737];

/// Smallest flattop kernel that still resolves all four harmonics.
pub const MIN_FLATTOP_WIDTH: usize = 5;

/// Five-point derivative, `y(n) = (fs/8)(−x(n−2) − 2x(n−1) + 2x(n+1) + x(n+2))`,
/// with the signal edge-replicated beyond both ends.
pub fn derivative(samples: &[f64], fs: f64) -> Result<Vec<f64>> {
    let n = samples.len();
    if n < 5 {
        return Err(Error::InputTooShort { needed: 5, got: n });
    }
    let at = |i: isize| samples[i.clamp(0, n as isize - 1) as usize];
    let scale = fs / 8.0;
    Ok((0..n as isize)
        .map(|i| scale * (-at(i - 2) - 2.0 * at(i - 1) + 2.0 * at(i + 1) + at(i + 2)))
        .collect())
}

pub fn square(samples: &[f64]) -> Vec<f64> {
    samples.iter().map(|v| v * v).collect()
}

/// Un-normalized flattop window value at `n` for width `width`, using the
/// periodic convention ψ = 2πn/N.
pub fn flattop_raw(n: usize, width: usize) -> f64 {
    let [a0, a1, a2, a3, a4] = FLATTOP_COEFFS;
    let psi = 2.0 * PI * n as f64 / width as f64;
    a0 - a1 * psi.cos() + a2 * (2.0 * psi).cos() - a3 * (3.0 * psi).cos()
        + a4 * (4.0 * psi).cos()
}

/// Flattop kernel of `width` samples normalized to unit sum.
pub fn flattop_kernel(width: usize) -> Result<Vec<f64>> {
    if width < MIN_FLATTOP_WIDTH {
        return Err(Error::Config(format!(
            "flattop width {width} below minimum {MIN_FLATTOP_WIDTH}"
        )));
    }
    let raw: Vec<f64> = (0..width).map(|n| flattop_raw(n, width)).collect();
    let sum: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| v / sum).collect())
}

/// Same-length convolution, `y(n) = Σ k(j)·x(n − j + (len−1)/2)`, with the
/// signal edge-replicated beyond both ends.
pub fn smooth(samples: &[f64], kernel: &[f64]) -> Result<Vec<f64>> {
    let n = samples.len();
    if kernel.is_empty() || kernel.len() > n {
        return Err(Error::InputTooShort {
            needed: kernel.len().max(1),
            got: n,
        });
    }
    let half = (kernel.len() - 1) / 2;
    let first = samples[0];
    let last = samples[n - 1];
    let mut padded = Vec::with_capacity(n + kernel.len());
    padded.extend(std::iter::repeat_n(first, kernel.len() - 1 - half));
    padded.extend_from_slice(samples);
    padded.extend(std::iter::repeat_n(last, half));
    Ok(padded
        .windows(kernel.len())
        .map(|w| w.iter().zip(kernel.iter().rev()).map(|(x, k)| x * k).sum())
        .collect())
}

/// Trailing moving-window mean over `width` samples; samples before the
/// start take the value of `x(0)`.
pub fn mwi(samples: &[f64], width: usize) -> Result<Vec<f64>> {
    if width == 0 {
        return Err(Error::Config("MWI width must be at least 1".into()));
    }
    let Some(&first) = samples.first() else {
        return Ok(Vec::new());
    };
    let inv = 1.0 / width as f64;
    // Direct summation per output keeps results bit-reproducible and
    // free of running-sum drift; widths are tens of samples.
    let mut padded = Vec::with_capacity(samples.len() + width - 1);
    padded.extend(std::iter::repeat_n(first, width - 1));
    padded.extend_from_slice(samples);
    Ok(padded
        .windows(width)
        .map(|w| w.iter().sum::<f64>() * inv)
        .collect())
}

/// Converts a window length in milliseconds to samples, rounding to
/// nearest and clamping to `min`.
pub fn window_samples(ms: f64, fs: f64, min: usize) -> usize {
    ((ms * fs / 1000.0).round() as usize).max(min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn derivative_of_constant_and_ramp() {
        let y = derivative(&[3.0; 20], 360.0).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
        for fs in [8.0, 250.0, 360.0] {
            let x: Vec<f64> = (0..30).map(|i| i as f64 / fs).collect();
            let y = derivative(&x, fs).unwrap();
            for v in &y[2..28] {
                assert!((v - 1.0).abs() < 1e-9, "{v}");
            }
        }
    }

    #[test]
    fn derivative_hand_stencil() {
        let y = derivative(&[0.0, 0.0, 1.0, 0.0, 0.0], 8.0).unwrap();
        assert_eq!(y[2], 0.0);
        assert_eq!(y[1], 2.0);
        assert_eq!(y[3], -2.0);
        // edge replication: y(0) = −x0 −2x0 + 2x1 + x2 = 1
        assert_eq!(y[0], 1.0);
    }

    #[test]
    fn derivative_too_short() {
        assert!(matches!(
            derivative(&[1.0; 4], 360.0),
            Err(Error::InputTooShort { needed: 5, got: 4 })
        ));
    }

    #[test]
    fn square_values() {
        assert_eq!(square(&[-2.0, 0.0, 3.0]), vec![4.0, 0.0, 9.0]);
        assert_eq!(square(&[0.0; 3]), vec![0.0; 3]);
    }

    #[test]
    fn flattop_endpoint_and_normalization() {
        let [a0, a1, a2, a3, a4] = FLATTOP_COEFFS;
        let w0 = a0 - a1 + a2 - a3 + a4;
        assert!((w0 - (-0.00042112)).abs() < 1e-12);
        assert!((flattop_raw(0, 22) - w0).abs() < 1e-15);
        assert!(w0 < 0.0);
        for width in 5..200 {
            let k = flattop_kernel(width).unwrap();
            let s: f64 = k.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(flattop_kernel(4).is_err());
    }

    #[test]
    fn flattop_symmetry_periodic_convention() {
        // Periodic window: w(n) = w(N − n), so the kernel is symmetric
        // about n = N/2 and w(n) vs w(N−1−n) differ by one-sample shift.
        let n = 21;
        let k = flattop_kernel(n).unwrap();
        for i in 1..n {
            assert!((k[i] - k[n - i]).abs() < 1e-15);
        }
        let max_idx = k
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!(max_idx == 10 || max_idx == 11);
    }

    #[test]
    fn smooth_preserves_constant_and_reproduces_kernel() {
        let k = flattop_kernel(22).unwrap();
        let y = smooth(&[1.7; 100], &k).unwrap();
        assert!(y.iter().all(|v| (v - 1.7).abs() < 1e-12));

        let mut x = vec![0.0; 61];
        x[30] = 1.0;
        let y = smooth(&x, &k).unwrap();
        let half = (k.len() - 1) / 2;
        // Kernel element `half` lands on the impulse.
        for (j, kj) in k.iter().enumerate() {
            assert!((y[30 + j - half] - kj).abs() < 1e-15);
        }
    }

    #[test]
    fn smooth_too_short() {
        let k = flattop_kernel(22).unwrap();
        assert!(matches!(smooth(&[0.0; 10], &k), Err(Error::InputTooShort { .. })));
    }

    #[test]
    fn smooth_reduces_white_noise_variance() {
        let k = flattop_kernel(22).unwrap();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>() - 0.5).collect();
            let y = smooth(&x, &k).unwrap();
            let var = |v: &[f64]| {
                let m = v.iter().sum::<f64>() / v.len() as f64;
                v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / v.len() as f64
            };
            assert!(var(&y) < var(&x));
        }
    }

    #[test]
    fn mwi_definition() {
        let y = mwi(&[2.5; 50], 7).unwrap();
        assert!(y.iter().all(|v| (v - 2.5).abs() < 1e-12));

        let mut x = vec![0.0; 20];
        x[10] = 1.0;
        let y = mwi(&x, 4).unwrap();
        for (i, v) in y.iter().enumerate() {
            let expect = if (10..=13).contains(&i) { 0.25 } else { 0.0 };
            assert_eq!(*v, expect, "index {i}");
        }
        assert!(mwi(&x, 0).is_err());
        assert!(mwi(&[], 3).unwrap().is_empty());
    }

    #[test]
    fn window_sizes_at_360() {
        assert_eq!(window_samples(150.0, 360.0, 1), 54);
        assert_eq!(window_samples(60.0, 360.0, MIN_FLATTOP_WIDTH), 22);
        assert_eq!(window_samples(1.0, 100.0, 1), 1);
    }
}
