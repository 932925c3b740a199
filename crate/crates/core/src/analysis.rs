//! Signal analysis: oscillation frequency, the √I law, pulse areas and
//! pulse delays.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use thiserror::Error;

use crate::fft;
use crate::model::{Pulse, PulseShape};
use crate::propagation::OpticalPulseTrace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("need at least {needed} samples in the window, found {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("samples are not uniformly spaced")]
    NonUniform,
    #[error("times and values differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no oscillation detected (peak {peak:.3e} vs median floor {floor:.3e})")]
    NoOscillation { peak: f64, floor: f64 },
    #[error("at least 3 points are required, got {0}")]
    TooFewPoints(usize),
    #[error("all intensities are equal")]
    DegenerateIntensities,
    #[error("negative or non-finite intensity {0}")]
    BadIntensity(f64),
    #[error("trace `{0}` has zero energy")]
    ZeroEnergy(String),
    #[error("traces are on different time grids")]
    GridMismatch,
}

pub type Result<T, E = AnalysisError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMethod {
    Fft,
    Extrema,
}

impl EstimateMethod {
    pub fn tag(self) -> &'static str {
        match self {
            EstimateMethod::Fft => "fft",
            EstimateMethod::Extrema => "extrema",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationEstimate {
    /// Reported frequency, kHz.
    pub frequency_khz: f64,
    /// Half peak-to-peak amplitude of the detrended oscillation at its peak
    /// spectral component.
    pub amplitude: f64,
    /// Envelope decay rate from the extrema, 1/μs.
    pub damping_rate: Option<f64>,
    pub method: EstimateMethod,
    /// Frequency from the mean extremum spacing, kHz.
    pub extrema_frequency_khz: Option<f64>,
    pub extrema_count: usize,
    pub note: String,
}

impl OscillationEstimate {
    /// Angular frequency, rad/μs.
    pub fn angular(&self) -> f64 {
        2.0 * PI * self.frequency_khz * 1e-3
    }

    /// Frequency of the undamped oscillator with the same poles,
    /// √(f² + (κ/2π)²), kHz. Equal to `frequency_khz` when no damping was
    /// measured.
    pub fn natural_frequency_khz(&self) -> f64 {
        match self.damping_rate {
            Some(k) if k > 0.0 => {
                let kk = k / (2.0 * PI) * 1e3;
                (self.frequency_khz.powi(2) + kk * kk).sqrt()
            }
            _ => self.frequency_khz,
        }
    }
}

/// Tukey window shape parameter (fraction of the window that is tapered).
const TAPER_FRACTION: f64 = 0.25;
const MIN_SAMPLES: usize = 32;
const ZERO_PAD: usize = 8;
const PEAK_OVER_FLOOR: f64 = 3.0;
const DISAGREEMENT: f64 = 0.05;
/// Extremum detection hysteresis, relative to the largest detrended value.
const LOBE_THRESHOLD: f64 = 0.1;
/// Detrended signals this small relative to the raw samples are roundoff.
const RESIDUAL_FLOOR: f64 = 1e-9;

fn window_slice<'a>(times: &'a [f64], values: &'a [f64], window: (f64, f64)) -> Result<(&'a [f64], &'a [f64])> {
    if times.len() != values.len() {
        return Err(AnalysisError::LengthMismatch(times.len(), values.len()));
    }
    let (lo, hi) = (window.0.min(window.1), window.0.max(window.1));
    let tol = 1e-9 * lo.abs().max(hi.abs()).max(1.0);
    let a = times.partition_point(|&t| t < lo - tol);
    let b = times.partition_point(|&t| t <= hi + tol);
    let (t, v) = (&times[a..b.max(a)], &values[a..b.max(a)]);
    if t.len() < MIN_SAMPLES {
        return Err(AnalysisError::TooFewSamples {
            needed: MIN_SAMPLES,
            found: t.len(),
        });
    }
    let dt = t[1] - t[0];
    if !(dt > 0.0) || t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt) {
        return Err(AnalysisError::NonUniform);
    }
    Ok((t, v))
}

/// Least-squares polynomial of the given order, evaluated and subtracted.
fn detrend(times: &[f64], values: &[f64], order: usize) -> Vec<f64> {
    let n = times.len();
    let mid = 0.5 * (times[0] + times[n - 1]);
    let half = (0.5 * (times[n - 1] - times[0])).max(f64::MIN_POSITIVE);
    let xs: Vec<f64> = times.iter().map(|t| (t - mid) / half).collect();
    let m = order + 1;
    let design = nalgebra::DMatrix::from_fn(n, m, |i, j| xs[i].powi(j as i32));
    let rhs = nalgebra::DVector::from_column_slice(values);
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .expect("SVD with both factors computed");
    let fit = design * coef;
    values.iter().zip(fit.iter()).map(|(v, f)| v - f).collect()
}

fn tukey(n: usize, alpha: f64) -> Vec<f64> {
    let edge = alpha * (n - 1) as f64 / 2.0;
    (0..n)
        .map(|i| {
            let x = i as f64;
            let d = x.min((n - 1) as f64 - x);
            if d >= edge || edge == 0.0 {
                1.0
            } else {
                0.5 * (1.0 - (PI * d / edge).cos())
            }
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Signed extremum of each lobe of `x`, where a lobe is a run that stays on
/// one side of the ±threshold band.
fn lobe_extrema(times: &[f64], x: &[f64]) -> Vec<(f64, f64)> {
    let max = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let thr = LOBE_THRESHOLD * max;
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut sign = 0i8;
    let mut best = (0.0, 0.0);
    for (&t, &v) in times.iter().zip(x) {
        let s = if v > thr {
            1
        } else if v < -thr {
            -1
        } else {
            0
        };
        if s != 0 && s != sign {
            if sign != 0 {
                out.push(best);
            }
            sign = s;
            best = (t, v);
        } else if sign != 0 && v * sign as f64 > best.1 * sign as f64 {
            best = (t, v);
        }
    }
    if sign != 0 {
        out.push(best);
    }
    // the first and last lobes may be cut by the window edge
    if out.len() > 2 {
        out.remove(0);
        out.pop();
    }
    out
}

/// Linear least squares y = a + b·x; returns (a, b, R²).
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else if ss_res <= f64::EPSILON * my.abs().max(1.0) {
        1.0
    } else {
        0.0
    };
    (a, b, r2)
}

/// Dominant oscillation frequency of `values(times)` inside `window`.
///
/// The samples are detrended with a quadratic, Tukey-tapered, zero-padded
/// to at least 8× and the magnitude spectrum peak above 1/T is refined by a
/// parabola through the three top bins. The mean spacing of alternating
/// extrema provides a cross-check and, from their amplitudes, a damping
/// rate.
pub fn extract_oscillation_frequency(
    times: &[f64],
    values: &[f64],
    window: (f64, f64),
) -> Result<OscillationEstimate> {
    let (t, v) = window_slice(times, values, window)?;
    let n = t.len();
    let dt = t[1] - t[0];
    let span = dt * (n - 1) as f64;
    let x = detrend(t, v, 2);
    let scale = v.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    let rms = (x.iter().map(|a| a * a).sum::<f64>() / n as f64).sqrt();
    if rms <= RESIDUAL_FLOOR * scale {
        return Err(AnalysisError::NoOscillation { peak: rms, floor: RESIDUAL_FLOOR * scale });
    }

    let taper = tukey(n, TAPER_FRACTION);
    let m = (ZERO_PAD * n).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for i in 0..n {
        buf[i] = Complex64::new(x[i] * taper[i], 0.0);
    }
    fft::forward(&mut buf);
    let mag: Vec<f64> = buf[..=m / 2].iter().map(|z| z.norm()).collect();
    let df = 1.0 / (m as f64 * dt);
    let k_min = ((1.0 / span) / df).ceil() as usize;
    let k_min = k_min.max(1);
    if k_min + 2 >= mag.len() {
        return Err(AnalysisError::TooFewSamples {
            needed: MIN_SAMPLES,
            found: n,
        });
    }
    let search = &mag[k_min..];
    let (off, &peak) = search
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty search range");
    let floor = median(search.to_vec());
    if !(peak > PEAK_OVER_FLOOR * floor) || peak == 0.0 {
        return Err(AnalysisError::NoOscillation { peak, floor });
    }
    let k = k_min + off;
    let shift = if k > 0 && k + 1 < mag.len() {
        let (a, b, c) = (mag[k - 1], mag[k], mag[k + 1]);
        let den = a - 2.0 * b + c;
        if den != 0.0 {
            (0.5 * (a - c) / den).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    let f_fft = (k as f64 + shift) * df;
    let nyquist = 0.5 / dt;
    let f_fft = f_fft.min(nyquist * (1.0 - 1e-12));
    let amplitude = 2.0 * peak / taper.iter().sum::<f64>();

    let extrema = lobe_extrema(t, &x);
    let extrema_freq = if extrema.len() >= 2 {
        let spacing = (extrema[extrema.len() - 1].0 - extrema[0].0) / (extrema.len() - 1) as f64;
        Some(1.0 / (2.0 * spacing))
    } else {
        None
    };
    let damping_rate = if extrema.len() >= 3 {
        let ts: Vec<f64> = extrema.iter().map(|e| e.0).collect();
        let ls: Vec<f64> = extrema.iter().map(|e| e.1.abs().ln()).collect();
        let (_, slope, _) = line_fit(&ts, &ls);
        Some((-slope).max(0.0))
    } else {
        None
    };

    let mut note = String::new();
    match extrema_freq {
        Some(fe) => {
            let rel = (fe - f_fft).abs() / f_fft;
            if rel > DISAGREEMENT {
                note = format!("extrema spacing disagrees with FFT peak by {:.1}%", 100.0 * rel);
            }
        }
        None => note = "too few extrema for a cross-check".to_string(),
    }

    Ok(OscillationEstimate {
        frequency_khz: f_fft * 1e3,
        amplitude,
        damping_rate,
        method: EstimateMethod::Fft,
        extrema_frequency_khz: extrema_freq.map(|f| f * 1e3),
        extrema_count: extrema.len(),
        note,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqrtLawFit {
    /// kHz per √(W/cm²).
    pub slope: f64,
    /// kHz.
    pub intercept: f64,
    pub r_squared: f64,
    /// f − (slope·√I + intercept) per input point, kHz.
    pub residuals: Vec<f64>,
}

impl SqrtLawFit {
    pub fn predict(&self, intensity: f64) -> f64 {
        self.slope * intensity.sqrt() + self.intercept
    }

    /// Index and value of the largest |residual|.
    pub fn max_residual(&self) -> (usize, f64) {
        self.residuals
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap_or((0, 0.0))
    }
}

/// Ordinary least squares of frequency (kHz) against √intensity.
pub fn fit_sqrt_law(points: &[(f64, f64)]) -> Result<SqrtLawFit> {
    if points.len() < 3 {
        return Err(AnalysisError::TooFewPoints(points.len()));
    }
    if let Some(&(i, _)) = points.iter().find(|(i, _)| !(i.is_finite() && *i >= 0.0)) {
        return Err(AnalysisError::BadIntensity(i));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.sqrt()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    if x.iter().all(|&v| v == x[0]) {
        return Err(AnalysisError::DegenerateIntensities);
    }
    let (intercept, slope, r_squared) = line_fit(&x, &y);
    let residuals = x.iter().zip(&y).map(|(u, v)| v - slope * u - intercept).collect();
    Ok(SqrtLawFit {
        slope,
        intercept,
        r_squared,
        residuals,
    })
}

/// ∫Ω(t)dt in radians.
pub fn pulse_area(p: &Pulse) -> f64 {
    match &p.shape {
        PulseShape::Rectangular => p.rabi_peak * p.duration,
        PulseShape::Gaussian => p.rabi_peak * p.duration * (PI / (4.0 * LN_2)).sqrt(),
        PulseShape::Sampled(env) => {
            let v = &env.values;
            if v.len() < 2 {
                return 0.0;
            }
            let inner: f64 = v[1..v.len() - 1].iter().sum();
            p.rabi_peak * env.dt * (inner + 0.5 * (v[0] + v[v.len() - 1]))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayMeasurement {
    /// Intensity-centroid difference, μs.
    pub centroid: f64,
    /// Difference of parabola-refined intensity peaks, μs.
    pub peak: f64,
}

fn centroid(tr: &OpticalPulseTrace) -> Result<f64> {
    let i = tr.intensity();
    let e: f64 = i.iter().sum();
    if !(e > 0.0) {
        return Err(AnalysisError::ZeroEnergy(tr.label.clone()));
    }
    Ok(tr.times.iter().zip(&i).map(|(t, v)| t * v).sum::<f64>() / e)
}

fn refined_peak(tr: &OpticalPulseTrace) -> f64 {
    let i = tr.intensity();
    let k = i
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let dt = tr.step();
    if k == 0 || k + 1 >= i.len() {
        return tr.times[k];
    }
    let (a, b, c) = (i[k - 1], i[k], i[k + 1]);
    let den = a - 2.0 * b + c;
    let s = if den != 0.0 { 0.5 * (a - c) / den } else { 0.0 };
    tr.times[k] + s.clamp(-0.5, 0.5) * dt
}

/// Delay of `output` relative to `input`.
pub fn measure_delay(input: &OpticalPulseTrace, output: &OpticalPulseTrace) -> Result<DelayMeasurement> {
    if input.times.len() < 2 || !input.same_grid(output) {
        return Err(AnalysisError::GridMismatch);
    }
    Ok(DelayMeasurement {
        centroid: centroid(output)? - centroid(input)?,
        peak: refined_peak(output) - refined_peak(input),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid(t1: f64, dt: f64) -> Vec<f64> {
        (0..=((t1 / dt).round() as usize)).map(|k| k as f64 * dt).collect()
    }

    #[test]
    fn pure_sinusoid() {
        let t = grid(100.0, 0.1);
        let v: Vec<f64> = t.iter().map(|t| (2.0 * PI * 0.1 * t).sin()).collect();
        let est = extract_oscillation_frequency(&t, &v, (0.0, 100.0)).unwrap();
        assert_relative_eq!(est.frequency_khz, 100.0, max_relative = 1e-3);
        assert_eq!(est.method, EstimateMethod::Fft);
        assert!(est.note.is_empty(), "{}", est.note);
        assert_relative_eq!(est.extrema_frequency_khz.unwrap(), 100.0, max_relative = 5e-3);
        assert!(est.damping_rate.unwrap() < 1e-3);
    }

    #[test]
    fn damped_sinusoid() {
        let t = grid(100.0, 0.1);
        let v: Vec<f64> = t.iter().map(|t| (-t / 20.0).exp() * (2.0 * PI * 0.1 * t).sin()).collect();
        let est = extract_oscillation_frequency(&t, &v, (0.0, 100.0)).unwrap();
        assert_relative_eq!(est.frequency_khz, 100.0, max_relative = 1e-2);
        assert_relative_eq!(est.damping_rate.unwrap(), 0.05, max_relative = 0.05);
    }

    #[test]
    fn sinusoid_on_gaussian_background() {
        let t = grid(60.0, 0.1);
        let v: Vec<f64> = t
            .iter()
            .map(|t| 2.0 * (-((t - 30.0) / 40.0).powi(2)).exp() + 0.3 * (2.0 * PI * 0.08 * t).cos())
            .collect();
        let est = extract_oscillation_frequency(&t, &v, (0.0, 60.0)).unwrap();
        assert_relative_eq!(est.frequency_khz, 80.0, max_relative = 1e-2);
    }

    #[test]
    fn flat_and_short_signals_fail() {
        let t = grid(50.0, 0.1);
        let flat: Vec<f64> = t.iter().map(|t| 1.0 + 0.2 * t).collect();
        assert!(matches!(
            extract_oscillation_frequency(&t, &flat, (0.0, 50.0)),
            Err(AnalysisError::NoOscillation { .. })
        ));
        assert!(matches!(
            extract_oscillation_frequency(&t, &flat, (0.0, 2.0)),
            Err(AnalysisError::TooFewSamples { .. })
        ));
        assert!(matches!(
            extract_oscillation_frequency(&t, &flat[1..], (0.0, 2.0)),
            Err(AnalysisError::LengthMismatch(..))
        ));
    }

    #[test]
    fn white_noise_is_not_an_oscillation() {
        // deterministic LCG noise
        let mut s = 12345u64;
        let t = grid(100.0, 0.1);
        let v: Vec<f64> = t
            .iter()
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        match extract_oscillation_frequency(&t, &v, (0.0, 100.0)) {
            Err(AnalysisError::NoOscillation { .. }) => {}
            Ok(est) => assert!(!est.note.is_empty(), "noise gave a clean estimate {est:?}"),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn sqrt_law_exact_points() {
        let fit = fit_sqrt_law(&[(1.0, 2.0), (4.0, 4.0), (9.0, 6.0)]).unwrap();
        assert_relative_eq!(fit.slope, 2.0, epsilon = 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0);
        assert_relative_eq!(fit.predict(16.0), 8.0, epsilon = 1e-12);
    }

    #[test]
    fn sqrt_law_outlier_is_flagged() {
        let mut pts: Vec<(f64, f64)> = (1..=6).map(|k| (k as f64, 3.0 * (k as f64).sqrt())).collect();
        pts[3].1 += 2.0;
        let fit = fit_sqrt_law(&pts).unwrap();
        assert_eq!(fit.max_residual().0, 3);
        assert!(fit.r_squared < 1.0);
    }

    #[test]
    fn sqrt_law_errors() {
        assert_eq!(fit_sqrt_law(&[(1.0, 1.0), (2.0, 2.0)]), Err(AnalysisError::TooFewPoints(2)));
        assert_eq!(
            fit_sqrt_law(&[(2.0, 1.0), (2.0, 2.0), (2.0, 3.0)]),
            Err(AnalysisError::DegenerateIntensities)
        );
        assert!(matches!(
            fit_sqrt_law(&[(-1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]),
            Err(AnalysisError::BadIntensity(_))
        ));
        // constant frequencies are a perfect (flat) fit
        let fit = fit_sqrt_law(&[(1.0, 5.0), (2.0, 5.0), (3.0, 5.0)]).unwrap();
        assert_eq!(fit.r_squared, 1.0);
        assert!(fit.slope.abs() < 1e-12);
    }

    #[test]
    fn pulse_areas() {
        let omega = 2.0 * PI * 0.1;
        let p = Pulse::rectangular("A", ("3", "5"), 0.0, 5.0, omega);
        assert_relative_eq!(pulse_area(&p), PI, epsilon = 1e-12);
        let z = Pulse::rectangular("A", ("3", "5"), 0.0, 5.0, 0.0);
        assert_eq!(pulse_area(&z), 0.0);
        let g = Pulse::gaussian("P", ("2", "5"), 10.0, 1.0, 2.0 * PI * 0.5);
        assert_relative_eq!(pulse_area(&g), 2.0 * PI * 0.5 * 1.064_467_019_431_226_2, max_relative = 1e-12);
        // trapezoid over a finely sampled Gaussian agrees with the closed form
        let dt = 0.01;
        let vals: Vec<f64> = (0..=2000)
            .map(|k| {
                let x = 2.0 * (k as f64 * dt - 10.0) / 1.0;
                (-LN_2 * x * x).exp()
            })
            .collect();
        let s = Pulse::sampled("P", ("2", "5"), crate::model::SampledEnvelope::new(0.0, dt, vals), g.rabi_peak);
        assert_relative_eq!(pulse_area(&s), pulse_area(&g), max_relative = 1e-9);
    }

    fn gaussian_trace(center: f64, width: f64) -> OpticalPulseTrace {
        let times = grid(200.0, 0.1);
        let field = times
            .iter()
            .map(|t| Complex64::new((-((t - center) / width).powi(2)).exp(), 0.0))
            .collect();
        OpticalPulseTrace::new("x", times, field)
    }

    #[test]
    fn delay_of_shifted_pulse() {
        let a = gaussian_trace(60.0, 8.0);
        let b = gaussian_trace(70.0, 8.0);
        let d = measure_delay(&a, &b).unwrap();
        assert!((d.centroid - 10.0).abs() <= 0.1 / 100.0);
        assert!((d.peak - 10.0).abs() <= 0.1 / 100.0);
        assert_eq!(measure_delay(&a, &a).unwrap().centroid, 0.0);
    }

    #[test]
    fn delay_errors() {
        let a = gaussian_trace(60.0, 8.0);
        let mut z = a.clone();
        z.field.iter_mut().for_each(|f| *f = Complex64::new(0.0, 0.0));
        assert!(matches!(measure_delay(&a, &z), Err(AnalysisError::ZeroEnergy(_))));
        let mut short = a.clone();
        short.times.pop();
        short.field.pop();
        assert_eq!(measure_delay(&a, &short), Err(AnalysisError::GridMismatch));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn frequency_invariant_under_scale_and_offset(
            f in 0.05f64..0.3, scale in 0.01f64..100.0, offset in -50.0f64..50.0, phase in 0.0f64..6.28
        ) {
            let t = grid(80.0, 0.1);
            let v: Vec<f64> = t.iter().map(|t| (-t / 40.0).exp() * (2.0 * PI * f * t + phase).sin()).collect();
            let w: Vec<f64> = v.iter().map(|x| scale * x + offset).collect();
            let a = extract_oscillation_frequency(&t, &v, (0.0, 80.0)).unwrap();
            let b = extract_oscillation_frequency(&t, &w, (0.0, 80.0)).unwrap();
            prop_assert!((a.frequency_khz - b.frequency_khz).abs() <= 1e-6 * a.frequency_khz);
            prop_assert!((b.amplitude / a.amplitude - scale).abs() <= 1e-6 * scale);
        }

        #[test]
        fn sqrt_fit_is_equivariant(
            ys in proptest::collection::vec(1.0f64..100.0, 4..10), c in 0.1f64..10.0
        ) {
            let pts: Vec<(f64, f64)> = ys.iter().enumerate().map(|(k, &y)| ((k + 1) as f64, y)).collect();
            let scaled: Vec<(f64, f64)> = pts.iter().map(|&(i, f)| (i, c * f)).collect();
            let a = fit_sqrt_law(&pts).unwrap();
            let b = fit_sqrt_law(&scaled).unwrap();
            let tol = 1e-9 * (1.0 + a.slope.abs() + a.intercept.abs()) * c;
            prop_assert!((b.slope - c * a.slope).abs() <= tol);
            prop_assert!((b.intercept - c * a.intercept).abs() <= tol);
            prop_assert!((b.r_squared - a.r_squared).abs() <= 1e-9);
            prop_assert!((0.0..=1.0).contains(&a.r_squared));
        }

        #[test]
        fn pulse_area_is_additive(
            omega in 0.0f64..5.0, t0 in -10.0f64..10.0, d1 in 0.01f64..20.0, d2 in 0.01f64..20.0
        ) {
            let whole = Pulse::rectangular("A", ("3", "5"), t0, d1 + d2, omega);
            let first = Pulse::rectangular("A1", ("3", "5"), t0, d1, omega);
            let second = Pulse::rectangular("A2", ("3", "5"), t0 + d1, d2, omega);
            let sum = pulse_area(&first) + pulse_area(&second);
            prop_assert!((pulse_area(&whole) - sum).abs() <= 1e-12 * (1.0 + sum));
        }

        #[test]
        fn delay_is_antisymmetric(c1 in 40.0f64..160.0, c2 in 40.0f64..160.0, w in 3.0f64..15.0) {
            let a = gaussian_trace(c1, w);
            let b = gaussian_trace(c2, w * 1.3);
            let ab = measure_delay(&a, &b).unwrap();
            let ba = measure_delay(&b, &a).unwrap();
            prop_assert!((ab.centroid + ba.centroid).abs() <= 1e-12 * (1.0 + ab.centroid.abs()));
            prop_assert!((ab.peak + ba.peak).abs() <= 1e-12 * (1.0 + ab.peak.abs()));
        }
    }
}
