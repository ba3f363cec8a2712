use rustfft::FftPlanner;

use crate::error::{OctdError, Result};
use crate::operators::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    /// Cycles per unit time, `0 ..= 1/(2dt)`.
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
}

impl Spectrum {
    /// Frequency of the largest non-zero-frequency bin.
    pub fn dominant_frequency(&self) -> Option<f64> {
        (1..self.power.len())
            .max_by(|a, b| self.power[*a].total_cmp(&self.power[*b]))
            .filter(|k| self.power[*k] > 0.0)
            .map(|k| self.frequencies[k])
    }

    pub fn bin_width(&self) -> f64 {
        self.frequencies.get(1).copied().unwrap_or(0.0)
    }
}

/// One-sided power spectrum of a linearly detrended, uniformly sampled series.
pub fn fourier_spectrum(times: &[f64], values: &[f64]) -> Result<Spectrum> {
    let n = values.len();
    if times.len() != n || n < 4 {
        return Err(OctdError::InvalidParams("spectrum needs at least 4 matching samples".into()));
    }
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(dt > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
        return Err(OctdError::InvalidParams("spectrum requires uniform sampling".into()));
    }
    let (tm, vm) = (times.iter().sum::<f64>() / n as f64, values.iter().sum::<f64>() / n as f64);
    let sxx: f64 = times.iter().map(|t| (t - tm).powi(2)).sum();
    let sxy: f64 = times.iter().zip(values).map(|(t, v)| (t - tm) * (v - vm)).sum();
    let slope = sxy / sxx;
    let mut buf: Vec<C64> = times.iter().zip(values).map(|(t, v)| C64::new(v - vm - slope * (t - tm), 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let frequencies = (0..=half).map(|k| k as f64 / (n as f64 * dt)).collect();
    let power = buf[..=half].iter().map(|c| c.norm_sqr() / n as f64).collect();
    Ok(Spectrum { frequencies, power })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinusoid_peak() {
        let times: Vec<f64> = (0..1000).map(|k| 0.1 * k as f64).collect();
        let f0 = 0.37;
        let vals: Vec<f64> = times.iter().map(|t| (2.0 * std::f64::consts::PI * f0 * t).sin() + 0.01 * t).collect();
        let s = fourier_spectrum(&times, &vals).unwrap();
        assert!((s.dominant_frequency().unwrap() - f0).abs() <= s.bin_width());
    }

    #[test]
    fn constant_series_has_no_power() {
        let times: Vec<f64> = (0..64).map(|k| k as f64).collect();
        let s = fourier_spectrum(&times, &[3.0; 64]).unwrap();
        assert!(s.power.iter().all(|p| *p < 1e-20));
        assert_eq!(s.dominant_frequency(), None);
    }

    #[test]
    fn rejects_nonuniform_sampling() {
        assert!(fourier_spectrum(&[0.0, 1.0, 2.0, 3.5, 4.0], &[0.0; 5]).is_err());
    }
}
