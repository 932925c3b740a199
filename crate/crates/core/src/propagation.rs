//! Probe propagation through the hole spectrum and the thin-medium coupling
//! between the density-matrix solution and the transmitted probe.

use num_complex::Complex64;
use thiserror::Error;

use crate::fft;
use crate::liouville::{evolve_validated, sample_grid, Dissipator, LiouvilleError, TimeSeries};
use crate::model::{
    IntensityCalibration, LevelScheme, ModelError, Pulse, PulseSequence, RelaxationSpec, SampledEnvelope,
    ScenarioConfig, SolverSettings,
};
use crate::spectra::AbsorptionSpectrum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("probe: {0}")]
    InvalidProbe(String),
    #[error("time window too short: {fraction:e} of the output energy sits at the window edges")]
    WindowTooShort { fraction: f64 },
    #[error("probe bandwidth {bandwidth} rad/us exceeds a quarter of the spectrum span {span} rad/us")]
    BandwidthTooWide { bandwidth: f64, span: f64 },
    #[error("probe pulse `{0}` not found in the time series")]
    ProbeNotFound(String),
    #[error("{undefined} of {in_pulse} in-pulse samples fall below the Rabi threshold")]
    UndefinedAbsorption { undefined: usize, in_pulse: usize },
    #[error("traces are on different time grids")]
    GridMismatch,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Liouville(#[from] LiouvilleError),
}

pub type Result<T, E = PropagationError> = std::result::Result<T, E>;

/// Complex field envelope on a uniform time grid; intensity is |E|².
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalPulseTrace {
    pub label: String,
    pub times: Vec<f64>,
    pub field: Vec<Complex64>,
}

impl OpticalPulseTrace {
    pub fn new(label: &str, times: Vec<f64>, field: Vec<Complex64>) -> Self {
        Self {
            label: label.to_string(),
            times,
            field,
        }
    }

    /// Real field √I from an intensity profile.
    pub fn from_intensity(label: &str, times: Vec<f64>, intensity: &[f64]) -> Self {
        let field = intensity.iter().map(|&i| Complex64::new(i.max(0.0).sqrt(), 0.0)).collect();
        Self::new(label, times, field)
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.field.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn step(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// ∫|E|² dt (rectangle rule).
    pub fn energy(&self) -> f64 {
        self.intensity().iter().sum::<f64>() * self.step()
    }

    pub fn peak_intensity(&self) -> f64 {
        self.intensity().into_iter().fold(0.0, f64::max)
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.times.len() == other.times.len()
            && self
                .times
                .iter()
                .zip(&other.times)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0))
    }
}

/// Gaussian probe pulse and the time grid it is sampled on.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbePulseSpec {
    /// Intensity FWHM, μs.
    pub fwhm: f64,
    /// Peak time of the input pulse, μs.
    pub center: f64,
    /// Carrier detuning from the hole centre, rad/μs.
    pub carrier_detuning: f64,
    /// Peak input intensity, W/cm².
    pub peak_intensity: f64,
    /// Sampled interval, μs.
    pub window: (f64, f64),
    pub step: f64,
}

impl ProbePulseSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PropagationError::InvalidProbe(m));
        if !(self.fwhm > 0.0) {
            return bad(format!("FWHM {} must be > 0", self.fwhm));
        }
        if !(self.peak_intensity >= 0.0) {
            return bad(format!("intensity {} must be >= 0", self.peak_intensity));
        }
        let (t0, t1) = self.window;
        if !(self.step > 0.0 && t1 > t0) {
            return bad(format!("bad time grid [{t0}, {t1}] step {}", self.step));
        }
        if !self.carrier_detuning.is_finite() {
            return bad("non-finite carrier detuning".into());
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        sample_grid(self.window.0, self.window.1, self.step)
    }

    /// Input field √I(t) with I Gaussian of the given FWHM.
    pub fn input_trace(&self) -> OpticalPulseTrace {
        let times = self.times();
        let amp = self.peak_intensity.sqrt();
        let field = times
            .iter()
            .map(|&t| {
                let x = (t - self.center) / self.fwhm;
                Complex64::new(amp * (-2.0 * std::f64::consts::LN_2 * x * x).exp(), 0.0)
            })
            .collect();
        OpticalPulseTrace::new("P_in", times, field)
    }

    /// FWHM of the intensity spectrum, rad/μs.
    pub fn bandwidth(&self) -> f64 {
        4.0 * std::f64::consts::LN_2 / self.fwhm
    }
}

/// Fraction of total intensity in the outer 1/16 of the window on each side.
fn edge_energy_fraction(intensity: &[f64]) -> f64 {
    let n = intensity.len();
    let edge = (n / 16).max(1);
    let total: f64 = intensity.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let outer: f64 = intensity[..edge].iter().chain(&intensity[n - edge..]).sum();
    outer / total
}

const EDGE_ENERGY_TOL: f64 = 1e-6;

/// Frequency-domain propagation: Ẽ_out(ω) = Ẽ_in(ω)·exp(−αL(ω)/2 + iφ(ω)).
///
/// Fields are written as E(t) = ∫Ẽ(ω)e^{−iωt}dω/2π, so a positive phase
/// slope delays the envelope. The spectrum is evaluated at
/// `hole_center + carrier_detuning + ω`.
pub fn propagate_pulse(probe: &ProbePulseSpec, spectrum: &AbsorptionSpectrum) -> Result<OpticalPulseTrace> {
    probe.validate()?;
    let span = spectrum.grid.span();
    if probe.bandwidth() > 0.25 * span {
        return Err(PropagationError::BandwidthTooWide {
            bandwidth: probe.bandwidth(),
            span,
        });
    }
    let input = probe.input_trace();
    let fraction = edge_energy_fraction(&input.intensity());
    if fraction > EDGE_ENERGY_TOL {
        return Err(PropagationError::WindowTooShort { fraction });
    }
    let n = input.times.len();
    let dt = probe.step;
    let offset = spectrum.hole_center + probe.carrier_detuning;
    let mut buf = input.field.clone();
    fft::forward(&mut buf);
    for (k, z) in buf.iter_mut().enumerate() {
        // forward DFT bin k carries e^{−iωt} with ω = −2πk/(NΔt)
        let omega = -2.0 * std::f64::consts::PI * fft::signed_bin(k, n) as f64 / (n as f64 * dt);
        *z *= spectrum.transfer(offset + omega);
    }
    fft::inverse(&mut buf);
    let out = OpticalPulseTrace::new("P_out", input.times, buf);
    let fraction = edge_energy_fraction(&out.intensity());
    if fraction > EDGE_ENERGY_TOL {
        return Err(PropagationError::WindowTooShort { fraction });
    }
    Ok(out)
}

/// Default threshold on Ω_p(t), relative to its peak, below which the
/// normalized absorption is set to zero.
pub const DEFAULT_RABI_THRESHOLD: f64 = 1e-3;

/// Result of [`transmit_thin`].
#[derive(Debug, Clone, PartialEq)]
pub struct ThinTransmission {
    /// Probe intensity (Ω_p(t)/Ω_p,peak)².
    pub input: OpticalPulseTrace,
    pub output: OpticalPulseTrace,
    /// Normalized absorption a(t).
    pub absorption: Vec<f64>,
}

impl ThinTransmission {
    /// I_out/I_in, 1 where the input vanishes.
    pub fn transmission(&self) -> Vec<f64> {
        let i_in = self.input.intensity();
        let i_out = self.output.intensity();
        i_in.iter()
            .zip(&i_out)
            .map(|(&i, &o)| if i > 0.0 { o / i } else { 1.0 })
            .collect()
    }
}

/// Thin-medium transmission of the probe from the density-matrix solution.
///
/// a(t) = 2γ_probe·Im ρ_ge(t)/Ω_p(t) where Ω_p exceeds `threshold`×peak
/// (else 0), I_out = I_in·exp(−OD_eff·a). With every ion in the probe
/// ground state and a weak resonant probe, a = 1. `probe.transition` must
/// be ordered (ground, excited), as produced by validation.
pub fn transmit_thin(
    series: &TimeSeries,
    probe: &Pulse,
    od_eff: f64,
    gamma_probe: f64,
    threshold: f64,
) -> Result<ThinTransmission> {
    let envelope = series
        .envelope(&probe.label)
        .ok_or_else(|| PropagationError::ProbeNotFound(probe.label.clone()))?;
    let coherence = series.coherence(&probe.transition.0, &probe.transition.1)?;
    let peak = envelope.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let eps = threshold * peak;
    let mut undefined = 0usize;
    let mut in_pulse = 0usize;
    let absorption: Vec<f64> = envelope
        .iter()
        .zip(&coherence)
        .map(|(&omega, rho)| {
            if peak > 0.0 && omega >= 0.1 * peak {
                in_pulse += 1;
            }
            if peak > 0.0 && omega > eps {
                2.0 * gamma_probe * rho.im / omega
            } else {
                if peak > 0.0 && omega >= 0.1 * peak {
                    undefined += 1;
                }
                0.0
            }
        })
        .collect();
    if in_pulse > 0 && undefined * 5 > in_pulse {
        return Err(PropagationError::UndefinedAbsorption { undefined, in_pulse });
    }
    let i_in: Vec<f64> = envelope
        .iter()
        .map(|&o| if peak > 0.0 { (o / peak).powi(2) } else { 0.0 })
        .collect();
    let i_out: Vec<f64> = i_in
        .iter()
        .zip(&absorption)
        .map(|(&i, &a)| i * (-od_eff * a).exp())
        .collect();
    Ok(ThinTransmission {
        input: OpticalPulseTrace::from_intensity(&probe.label, series.times.clone(), &i_in),
        output: OpticalPulseTrace::from_intensity(&probe.label, series.times.clone(), &i_out),
        absorption,
    })
}

/// Everything the time-domain switching stage needs besides the pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingSetup {
    pub scheme: LevelScheme,
    pub relaxation: RelaxationSpec,
    pub calibration: IntensityCalibration,
    pub initial_populations: Vec<(String, f64)>,
    pub solver: SolverSettings,
    /// Probe transition as (ground, excited).
    pub probe_transition: (String, String),
    /// Defaults to the residual optical depth at the hole centre.
    pub od_eff: Option<f64>,
    pub rabi_threshold: f64,
    /// Pulses integrated in both runs ahead of the probe, e.g. repump.
    pub preparation: Vec<Pulse>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingOutcome {
    pub input: OpticalPulseTrace,
    /// Delayed slow light without control.
    pub slow: OpticalPulseTrace,
    /// Slow light after the switching stage.
    pub switched: OpticalPulseTrace,
    pub series: TimeSeries,
    pub reference: TimeSeries,
    pub absorption: Vec<f64>,
    pub reference_absorption: Vec<f64>,
    pub od_eff: f64,
    /// 1 − min(I_switched/I_slow) while the control is on.
    pub contrast: f64,
}

/// Slow-light switching: the propagated probe envelope drives the probe
/// transition in the master equation together with `control`, and the
/// thin-medium transmission relative to a control-free run modulates the
/// slow light.
pub fn run_switching_scenario(
    probe: &ProbePulseSpec,
    spectrum: &AbsorptionSpectrum,
    control: &Pulse,
    setup: &SwitchingSetup,
) -> Result<SwitchingOutcome> {
    let input = probe.input_trace();
    let slow = propagate_pulse(probe, spectrum)?;
    let slow_i = slow.intensity();
    let peak_i = slow_i.iter().copied().fold(0.0, f64::max);
    let (g, e) = (&setup.probe_transition.0, &setup.probe_transition.1);
    let probe_rabi = setup.calibration.rabi(g, e, peak_i)?;
    let env = SampledEnvelope::new(
        slow.times[0],
        probe.step,
        slow_i.iter().map(|i| i.max(0.0).sqrt()).collect(),
    );
    let probe_pulse = Pulse::sampled("P", (g.as_str(), e.as_str()), env, probe_rabi);
    let span = probe.window;

    let run = |control: &Pulse| -> Result<(TimeSeries, ThinTransmission)> {
        let cfg = ScenarioConfig {
            scheme: setup.scheme.clone(),
            relaxation: setup.relaxation.clone(),
            pulses: PulseSequence::new(
                setup
                    .preparation
                    .iter()
                    .cloned()
                    .chain([probe_pulse.clone(), control.clone()])
                    .collect(),
            ),
            initial_populations: setup.initial_populations.clone(),
            solver: SolverSettings {
                sample_step: probe.step,
                ..setup.solver
            },
        }
        .validate()?;
        let series = evolve_validated(&cfg, span)?;
        let (p, _) = cfg.pulses.get("P").expect("probe pulse present");
        let diss = Dissipator::new(&cfg.scheme, &cfg.relaxation)?;
        let (gi, ei) = (cfg.scheme.index(g)?, cfg.scheme.index(e)?);
        let od = setup.od_eff.unwrap_or_else(|| spectrum.alpha_at(spectrum.hole_center));
        let thin = transmit_thin(&series, p, od, diss.coherence_rate(gi, ei), setup.rabi_threshold)?;
        Ok((series, thin))
    };

    let (series, thin) = run(control)?;
    let mut off = control.clone();
    off.rabi_peak = 0.0;
    let (reference, thin_ref) = run(&off)?;
    let od_eff = setup.od_eff.unwrap_or_else(|| spectrum.alpha_at(spectrum.hole_center));

    let ratio: Vec<f64> = thin
        .absorption
        .iter()
        .zip(&thin_ref.absorption)
        .map(|(a, a0)| (-od_eff * (a - a0)).exp())
        .collect();
    let switched_i: Vec<f64> = slow_i.iter().zip(&ratio).map(|(i, r)| i * r).collect();
    let contrast = series
        .times
        .iter()
        .zip(&ratio)
        .zip(&slow_i)
        .filter(|((&t, _), &i)| control.envelope(t) != 0.0 && i >= 1e-3 * peak_i)
        .map(|((_, &r), _)| 1.0 - r)
        .fold(0.0, f64::max);

    Ok(SwitchingOutcome {
        input,
        switched: OpticalPulseTrace::from_intensity("P_switched", slow.times.clone(), &switched_i),
        slow,
        series,
        reference,
        absorption: thin.absorption,
        reference_absorption: thin_ref.absorption,
        od_eff,
        contrast,
    })
}
