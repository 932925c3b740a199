use std::path::PathBuf;

use holeburn::analysis::{extract_oscillation_frequency, fit_sqrt_law, measure_delay, DelayMeasurement, OscillationEstimate};
use holeburn::model::{
    angular_to_khz, build_pr_yso_scheme, khz_rate, khz_to_angular, mhz_to_angular, probe_saturated_populations,
    InitialPreset, IntensityCalibration, Pulse, RelaxationSpec, SolverSettings,
};
use holeburn::propagation::{propagate_pulse, run_switching_scenario, ProbePulseSpec, SwitchingOutcome, SwitchingSetup};
use holeburn::spectra::{group_delay, hole_spectrum, kramers_kronig, AbsorptionSpectrum, FrequencyGrid, HoleBurnConfig};
use holeburn::OpticalPulseTrace;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, InitialState, ScenarioName, Settings};
use crate::output::{csv_table, fmt_num, Cell};
use crate::plot::{LinePlot, Series};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// A component failed; `stage` names the pipeline step.
    #[error("{stage}: {message}")]
    Stage {
        stage: &'static str,
        message: String,
        validation: bool,
    },
    #[error("I/O: {0}")]
    Io(String),
}

impl RunError {
    /// 1 for invalid input, 2 for numerical failures, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Stage { validation: true, .. } => 1,
            RunError::Stage { .. } => 2,
            RunError::Io(_) => 3,
        }
    }
}

fn setup_err(e: impl std::fmt::Display) -> RunError {
    RunError::Stage {
        stage: "setup",
        message: e.to_string(),
        validation: true,
    }
}

fn stage<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> RunError {
    move |e| RunError::Stage {
        stage,
        message: e.to_string(),
        validation: false,
    }
}

/// A file produced by a scenario, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub path: PathBuf,
    pub contents: Vec<u8>,
}

/// Headline numbers, also used as the row of a parameter sweep table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Headline {
    pub delay_us: Option<f64>,
    pub f_osc_khz: Option<f64>,
    pub contrast: Option<f64>,
    pub fit_slope: Option<f64>,
    pub fit_r_squared: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub scenario: ScenarioName,
    pub artifacts: Vec<Artifact>,
    pub headline: Headline,
    /// `summary.txt` lines as (key, value).
    pub summary: Vec<(String, String)>,
}

impl Report {
    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.summary {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(v);
            s.push('\n');
        }
        s
    }

    pub fn artifact(&self, path: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.path == std::path::Path::new(path))
    }
}

/// Everything shared by the scenarios once the medium and the slow light
/// are known.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub spectrum: AbsorptionSpectrum,
    pub probe: ProbePulseSpec,
    pub setup: SwitchingSetup,
    pub slow: OpticalPulseTrace,
    pub delay: DelayMeasurement,
    pub control_start: f64,
}

pub fn relaxation(s: &Settings) -> RelaxationSpec {
    RelaxationSpec::new()
        .decay("5", "2", khz_rate(s.decay_25_khz))
        .decay("5", "3", khz_rate(s.decay_35_khz))
        .coherence("2", "5", khz_rate(s.coh_25_khz))
        .coherence("3", "5", khz_rate(s.coh_35_khz))
        .coherence("1", "5", khz_rate(s.coh_15_khz))
        .coherence("2", "3", khz_rate(s.coh_23_khz))
}

pub fn hole_config(s: &Settings) -> HoleBurnConfig {
    HoleBurnConfig::new(s.hole_od, s.hole_depth, khz_to_angular(s.hole_width_khz()))
}

pub fn spectrum(s: &Settings) -> Result<AbsorptionSpectrum, RunError> {
    let hb = hole_config(s);
    let grid = FrequencyGrid::for_width(hb.fwhm, s.spectrum_span_fwhm, s.spectrum_points_per_fwhm);
    let absorption = hole_spectrum(&hb, grid).map_err(stage("spectrum"))?;
    kramers_kronig(&absorption).map_err(stage("dispersion"))
}

fn window(s: &Settings) -> (f64, f64) {
    let start = if s.repump_explicit {
        s.time_start_us - s.repump_separation_us - s.repump_duration_us
    } else {
        s.time_start_us
    };
    (start, s.time_end_us)
}

pub fn probe_spec(s: &Settings) -> ProbePulseSpec {
    ProbePulseSpec {
        fwhm: s.probe_fwhm_us,
        center: s.probe_center_us,
        carrier_detuning: khz_to_angular(s.probe_detuning_khz),
        peak_intensity: s.intensity_p,
        window: window(s),
        step: s.time_step_us,
    }
}

fn initial_populations(s: &Settings, relax: &RelaxationSpec) -> Result<Vec<(String, f64)>, RunError> {
    match &s.initial {
        InitialState::Saturated => {
            let rabi = khz_to_angular(s.probe_coupling() * s.intensity_p.sqrt());
            probe_saturated_populations(relax, "2", "5", rabi).map_err(setup_err)
        }
        InitialState::Repumped => Ok(InitialPreset::Repumped.populations()),
        InitialState::Thermal => Ok(InitialPreset::Thermal.populations()),
        InitialState::Explicit(p) => Ok(p.clone()),
    }
}

fn repump_pulses(s: &Settings) -> Vec<Pulse> {
    if !s.repump_explicit {
        return Vec::new();
    }
    let start = s.time_start_us - s.repump_separation_us - s.repump_duration_us;
    let rabi = khz_to_angular(s.repump_rabi_khz);
    vec![
        Pulse::rectangular("R1", ("1", "5"), start, s.repump_duration_us, rabi),
        Pulse::rectangular("R2", ("3", "5"), start, s.repump_duration_us, rabi),
    ]
}

pub fn prepare(s: &Settings) -> Result<Prepared, RunError> {
    s.validate()?;
    let spectrum = spectrum(s)?;
    let probe = probe_spec(s);
    let slow = propagate_pulse(&probe, &spectrum).map_err(stage("propagation"))?;
    let delay = measure_delay(&probe.input_trace(), &slow).map_err(stage("delay"))?;
    let relax = relaxation(s);
    let calibration = IntensityCalibration::new()
        .with("2", "5", s.probe_coupling())
        .map_err(|e| RunError::Stage {
            stage: "setup",
            message: format!("rabi.P_kHz / calib.P_kHz_per_sqrtWcm2: {e}"),
            validation: true,
        })?;
    let setup = SwitchingSetup {
        scheme: build_pr_yso_scheme(),
        initial_populations: initial_populations(s, &relax)?,
        relaxation: relax,
        calibration,
        solver: SolverSettings {
            rtol: s.rtol,
            atol: s.atol,
            sample_step: s.time_step_us,
        },
        probe_transition: ("2".into(), "5".into()),
        od_eff: s.od_eff,
        rabi_threshold: s.rabi_threshold,
        preparation: repump_pulses(s),
    };
    let control_start = s.control_start_us.unwrap_or(s.probe_center_us + delay.peak);
    Ok(Prepared {
        spectrum,
        probe,
        setup,
        slow,
        delay,
        control_start,
    })
}

pub fn control_pulse(s: &Settings, start: f64, rabi_khz: f64, detuning_mhz: f64) -> Pulse {
    Pulse::rectangular("A", ("3", "5"), start, s.control_duration_us, khz_to_angular(rabi_khz))
        .with_detuning(mhz_to_angular(detuning_mhz))
}

fn analysis_window(s: &Settings, start: f64) -> (f64, f64) {
    let len = s.analysis_window_us.unwrap_or(s.control_duration_us);
    (start, (start + len).min(s.time_end_us))
}

/// Adds seeded Gaussian noise of relative size `analysis.noise`.
fn noisy(s: &Settings, values: &[f64], stream: u64) -> Vec<f64> {
    if s.analysis_noise == 0.0 {
        return values.to_vec();
    }
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    rng.set_stream(stream);
    let normal = Normal::new(0.0, s.analysis_noise * scale).expect("finite, non-negative sigma");
    values.iter().map(|v| v + normal.sample(&mut rng)).collect()
}

/// Population difference ρ55 − ρ33, the oscillating signal during A.
pub fn population_signal(out: &SwitchingOutcome) -> Vec<f64> {
    out.series
        .population_difference("5", "3")
        .expect("scheme has levels 3 and 5")
}

fn oscillation(
    s: &Settings,
    times: &[f64],
    values: &[f64],
    start: f64,
    stream: u64,
) -> Result<OscillationEstimate, String> {
    let v = noisy(s, values, stream);
    extract_oscillation_frequency(times, &v, analysis_window(s, start)).map_err(|e| e.to_string())
}

fn trace_csv(out: &SwitchingOutcome) -> Vec<u8> {
    let i_in = out.input.intensity();
    let i_out = out.switched.intensity();
    let r22 = out.series.population("2").expect("level 2");
    let r33 = out.series.population("3").expect("level 3");
    let r55 = out.series.population("5").expect("level 5");
    let coh = out.series.coherence("2", "5").expect("probe transition");
    let a = out.series.envelope("A");
    let rows = (0..out.series.len()).map(|k| {
        vec![
            Cell::Num(out.series.times[k]),
            Cell::Num(i_in[k]),
            Cell::Num(i_out[k]),
            Cell::Num(r22[k]),
            Cell::Num(r33[k]),
            Cell::Num(r55[k]),
            Cell::Num(coh[k].im),
            Cell::Num(a.map_or(0.0, |a| angular_to_khz(a[k]))),
        ]
    });
    csv_table(
        &["t_us", "I_in", "I_out", "rho22", "rho33", "rho55", "Im_rho_probe", "Omega_A"],
        rows,
    )
}

fn spectrum_csv(spec: &AbsorptionSpectrum) -> Vec<u8> {
    let rows = spec
        .frequencies()
        .into_iter()
        .enumerate()
        .map(|(k, w)| vec![Cell::Num(angular_to_khz(w)), Cell::Num(spec.alpha_l[k]), Cell::Num(spec.phase[k])]);
    csv_table(&["detuning_kHz", "alphaL", "phase_rad"], rows)
}

fn artifact(path: &str, contents: Vec<u8>) -> Artifact {
    Artifact {
        path: PathBuf::from(path),
        contents,
    }
}

fn trace_plot(out: &SwitchingOutcome) -> LinePlot {
    let t = &out.series.times;
    LinePlot::new("Probe intensity", "t (μs)", "I (W/cm²)")
        .with(Series::new("I_in", t, &out.input.intensity()))
        .with(Series::new("I_out", t, &out.switched.intensity()))
}

fn population_plot(out: &SwitchingOutcome) -> LinePlot {
    let t = &out.series.times;
    let mut p = LinePlot::new("Populations", "t (μs)", "ρ");
    for l in ["2", "3", "5"] {
        p = p.with(Series::new(&format!("rho{l}{l}"), t, &out.series.population(l).expect("level")));
    }
    p
}

fn spectrum_plot(spec: &AbsorptionSpectrum) -> LinePlot {
    let f: Vec<f64> = spec.frequencies().into_iter().map(angular_to_khz).collect();
    LinePlot::new("Hole spectrum", "detuning (kHz)", "αL, φ (rad)")
        .with(Series::new("alphaL", &f, &spec.alpha_l))
        .with(Series::new("phase_rad", &f, &spec.phase))
}

fn run_switch(prep: &Prepared, control: &Pulse) -> Result<SwitchingOutcome, RunError> {
    run_switching_scenario(&prep.probe, &prep.spectrum, control, &prep.setup).map_err(stage("switching"))
}

fn base_summary(s: &Settings, prep: &Prepared) -> Vec<(String, String)> {
    let carrier = prep.spectrum.hole_center + prep.probe.carrier_detuning;
    let mut v = vec![
        ("scenario".to_string(), s.scenario.to_string()),
        ("hole_fwhm_kHz".to_string(), fmt_num(s.hole_width_khz())),
        ("initial_state".to_string(), s.initial.to_string()),
        ("delay_centroid_us".to_string(), fmt_num(prep.delay.centroid)),
        ("delay_peak_us".to_string(), fmt_num(prep.delay.peak)),
    ];
    let gd = group_delay(&prep.spectrum, carrier).map_or_else(|e| format!("unavailable ({e})"), fmt_num);
    v.push(("group_delay_us".to_string(), gd));
    v
}

fn describe(e: &Result<OscillationEstimate, String>) -> String {
    match e {
        Ok(e) => {
            let mut s = fmt_num(e.frequency_khz);
            if !e.note.is_empty() {
                s.push_str(&format!(" ({})", e.note));
            }
            s
        }
        Err(msg) => format!("not detected ({msg})"),
    }
}

fn slowlight(s: &Settings) -> Result<Report, RunError> {
    let prep = prepare(s)?;
    let off = control_pulse(s, prep.control_start, 0.0, 0.0);
    let out = run_switch(&prep, &off)?;
    let input = prep.probe.input_trace();
    let mut summary = base_summary(s, &prep);
    summary.push((
        "energy_transmission".into(),
        fmt_num(prep.slow.energy() / input.energy()),
    ));
    summary.push(("alphaL_at_carrier".into(), fmt_num(prep.spectrum.alpha_at(prep.spectrum.hole_center + prep.probe.carrier_detuning))));
    let mut artifacts = vec![artifact("spectrum.csv", spectrum_csv(&prep.spectrum)), artifact("trace.csv", trace_csv(&out))];
    if s.plots {
        artifacts.push(artifact("trace.svg", trace_plot(&out).render().into_bytes()));
        artifacts.push(artifact("spectrum.svg", spectrum_plot(&prep.spectrum).render().into_bytes()));
    }
    Ok(Report {
        scenario: s.scenario,
        artifacts,
        headline: Headline {
            delay_us: Some(prep.delay.centroid),
            ..Headline::default()
        },
        summary,
    })
}

fn oscillation_csv(rows: &[(&str, &Result<OscillationEstimate, String>)]) -> Vec<u8> {
    let rows = rows.iter().map(|(name, est)| match est {
        Ok(e) => vec![
            Cell::Text(name.to_string()),
            Cell::Text(e.method.tag().to_string()),
            Cell::Num(e.frequency_khz),
            Cell::Num(e.natural_frequency_khz()),
            Cell::Num(e.amplitude),
            Cell::Num(e.damping_rate.unwrap_or(f64::NAN)),
            Cell::Num(e.extrema_frequency_khz.unwrap_or(f64::NAN)),
            Cell::Int(e.extrema_count as i64),
        ],
        Err(_) => vec![
            Cell::Text(name.to_string()),
            Cell::Text("none".into()),
            Cell::Num(f64::NAN),
            Cell::Num(f64::NAN),
            Cell::Num(f64::NAN),
            Cell::Num(f64::NAN),
            Cell::Num(f64::NAN),
            Cell::Int(0),
        ],
    });
    csv_table(
        &[
            "signal",
            "method",
            "frequency_kHz",
            "natural_frequency_kHz",
            "amplitude",
            "damping_per_us",
            "extrema_frequency_kHz",
            "extrema_count",
        ],
        rows,
    )
}

/// `switch` and `transient` share one pipeline; the transient report adds
/// the oscillation table.
fn switching(s: &Settings, with_oscillation_table: bool) -> Result<Report, RunError> {
    let prep = prepare(s)?;
    let rabi = s.control_rabi_khz();
    let control = control_pulse(s, prep.control_start, rabi, s.control_detuning_mhz);
    let out = run_switch(&prep, &control)?;
    let pop = oscillation(s, &out.series.times, &population_signal(&out), prep.control_start, 0);
    let transmitted = oscillation(s, &out.series.times, &out.switched.intensity(), prep.control_start, 1);

    let mut summary = base_summary(s, &prep);
    summary.extend([
        ("control_start_us".to_string(), fmt_num(prep.control_start)),
        ("rabi_A_kHz".to_string(), fmt_num(rabi)),
        ("control_detuning_MHz".to_string(), fmt_num(s.control_detuning_mhz)),
        ("od_eff".to_string(), fmt_num(out.od_eff)),
        ("switching_contrast".to_string(), fmt_num(out.contrast)),
        ("f_osc_kHz".to_string(), describe(&pop)),
        ("f_osc_transmitted_kHz".to_string(), describe(&transmitted)),
    ]);
    let mut artifacts = vec![artifact("spectrum.csv", spectrum_csv(&prep.spectrum)), artifact("trace.csv", trace_csv(&out))];
    if with_oscillation_table {
        artifacts.push(artifact(
            "oscillation.csv",
            oscillation_csv(&[("rho55-rho33", &pop), ("I_out", &transmitted)]),
        ));
    }
    if s.plots {
        artifacts.push(artifact("trace.svg", trace_plot(&out).render().into_bytes()));
        artifacts.push(artifact("populations.svg", population_plot(&out).render().into_bytes()));
        artifacts.push(artifact("spectrum.svg", spectrum_plot(&prep.spectrum).render().into_bytes()));
    }
    Ok(Report {
        scenario: s.scenario,
        artifacts,
        headline: Headline {
            delay_us: Some(prep.delay.centroid),
            f_osc_khz: pop.as_ref().ok().map(|e| e.frequency_khz),
            contrast: Some(out.contrast),
            ..Headline::default()
        },
        summary,
    })
}

/// Contrast for each configured control detuning.
pub fn detuning_contrasts(s: &Settings, prep: &Prepared) -> Result<Vec<(f64, SwitchingOutcome)>, RunError> {
    let rabi = s.control_rabi_khz();
    s.sweep_detunings_mhz
        .par_iter()
        .map(|&d| {
            let control = control_pulse(s, prep.control_start, rabi, d);
            run_switch(prep, &control).map(|o| (d, o))
        })
        .collect()
}

fn detuning_sweep(s: &Settings) -> Result<Report, RunError> {
    let prep = prepare(s)?;
    let rabi = s.control_rabi_khz();
    let points = detuning_contrasts(s, &prep)?;
    let oracle = |d_mhz: f64| {
        let w = rabi * 1e-3;
        w * w / (w * w + d_mhz * d_mhz)
    };
    let rows = points
        .iter()
        .map(|(d, o)| vec![Cell::Num(*d), Cell::Num(o.contrast), Cell::Num(oracle(*d))]);
    let mut artifacts = vec![artifact(
        "contrast.csv",
        csv_table(&["detuning_MHz", "contrast", "transfer_oracle"], rows),
    )];
    for (k, (_, o)) in points.iter().enumerate() {
        artifacts.push(artifact(&format!("points/trace_{k:02}.csv"), trace_csv(o)));
    }
    let mut by_abs: Vec<(f64, f64)> = points.iter().map(|(d, o)| (d.abs(), o.contrast)).collect();
    by_abs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = by_abs.windows(2).all(|w| w[1].1 <= w[0].1);
    let mut summary = base_summary(s, &prep);
    summary.push(("control_start_us".into(), fmt_num(prep.control_start)));
    summary.push(("rabi_A_kHz".into(), fmt_num(rabi)));
    for (d, o) in &points {
        summary.push((format!("contrast[{}MHz]", d), fmt_num(o.contrast)));
    }
    summary.push(("contrast_monotone_non_increasing".into(), monotone.to_string()));
    if s.plots {
        let d: Vec<f64> = points.iter().map(|p| p.0).collect();
        let c: Vec<f64> = points.iter().map(|p| p.1.contrast).collect();
        let plot = LinePlot::new("Switching contrast", "δ (MHz)", "contrast").with(Series::new("contrast", &d, &c).markers());
        artifacts.push(artifact("contrast.svg", plot.render().into_bytes()));
    }
    let zero = points.iter().find(|(d, _)| *d == 0.0).map(|(_, o)| o.contrast);
    Ok(Report {
        scenario: s.scenario,
        artifacts,
        headline: Headline {
            delay_us: Some(prep.delay.centroid),
            contrast: zero,
            ..Headline::default()
        },
        summary,
    })
}

/// One point of the control-intensity sweep.
#[derive(Debug, Clone)]
pub struct IntensityPoint {
    pub intensity: f64,
    pub rabi_khz: f64,
    pub population: OscillationEstimate,
    pub transmitted: Result<OscillationEstimate, String>,
    pub outcome: SwitchingOutcome,
}

pub fn intensity_points(s: &Settings, prep: &Prepared) -> Result<Vec<IntensityPoint>, RunError> {
    let coupling = s.control_coupling();
    s.sweep_intensities_wcm2
        .par_iter()
        .enumerate()
        .map(|(k, &i)| {
            let rabi_khz = coupling * i.sqrt();
            let control = control_pulse(s, prep.control_start, rabi_khz, s.control_detuning_mhz);
            let outcome = run_switch(prep, &control)?;
            let stream = 2 * k as u64;
            let population = oscillation(s, &outcome.series.times, &population_signal(&outcome), prep.control_start, stream)
                .map_err(|m| RunError::Stage {
                    stage: "analysis",
                    message: format!("I_A = {i} W/cm²: {m}"),
                    validation: false,
                })?;
            let transmitted = oscillation(s, &outcome.series.times, &outcome.switched.intensity(), prep.control_start, stream + 1);
            Ok(IntensityPoint {
                intensity: i,
                rabi_khz,
                population,
                transmitted,
                outcome,
            })
        })
        .collect()
}

fn intensity_sweep(s: &Settings) -> Result<Report, RunError> {
    let prep = prepare(s)?;
    let points = intensity_points(s, &prep)?;
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.intensity, p.population.frequency_khz)).collect();
    let fit = fit_sqrt_law(&pairs).map_err(stage("fit"))?;
    let rows = points.iter().zip(&fit.residuals).map(|(p, r)| {
        vec![
            Cell::Num(p.intensity),
            Cell::Num(p.intensity.sqrt()),
            Cell::Num(p.rabi_khz),
            Cell::Num(p.population.frequency_khz),
            Cell::Num(fit.predict(p.intensity)),
            Cell::Num(*r),
            Cell::Num(p.transmitted.as_ref().map_or(f64::NAN, |e| e.frequency_khz)),
        ]
    });
    let mut artifacts = vec![artifact(
        "fit.csv",
        csv_table(
            &[
                "intensity_Wcm2",
                "sqrt_intensity",
                "rabi_A_kHz",
                "f_osc_kHz",
                "fit_kHz",
                "residual_kHz",
                "f_transmitted_kHz",
            ],
            rows,
        ),
    )];
    for (k, p) in points.iter().enumerate() {
        artifacts.push(artifact(&format!("points/trace_{k:02}.csv"), trace_csv(&p.outcome)));
    }
    let f_max = pairs.iter().map(|p| p.1).fold(0.0, f64::max);
    let (worst, worst_res) = fit.max_residual();
    let mut summary = base_summary(s, &prep);
    summary.extend([
        ("control_start_us".to_string(), fmt_num(prep.control_start)),
        ("fit_slope_kHz_per_sqrtWcm2".to_string(), fmt_num(fit.slope)),
        ("fit_intercept_kHz".to_string(), fmt_num(fit.intercept)),
        ("fit_intercept_fraction_of_max".to_string(), fmt_num(fit.intercept / f_max)),
        ("fit_r_squared".to_string(), fmt_num(fit.r_squared)),
        (
            "fit_max_residual".to_string(),
            format!("{} kHz at {} W/cm²", fmt_num(worst_res), fmt_num(pairs[worst].0)),
        ),
    ]);
    for p in &points {
        summary.push((format!("f_osc_kHz[{}Wcm2]", p.intensity), fmt_num(p.population.frequency_khz)));
    }
    if s.plots {
        let x: Vec<f64> = pairs.iter().map(|p| p.0.sqrt()).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let yf: Vec<f64> = pairs.iter().map(|p| fit.predict(p.0)).collect();
        let plot = LinePlot::new("Oscillation frequency", "√I_A (√(W/cm²))", "f (kHz)")
            .with(Series::new("f_osc", &x, &y).markers())
            .with(Series::new("fit", &x, &yf));
        artifacts.push(artifact("fit.svg", plot.render().into_bytes()));
    }
    let f_ref = points
        .iter()
        .find(|p| p.intensity == s.intensity_a)
        .map(|p| p.population.frequency_khz);
    Ok(Report {
        scenario: s.scenario,
        artifacts,
        headline: Headline {
            delay_us: Some(prep.delay.centroid),
            f_osc_khz: f_ref,
            fit_slope: Some(fit.slope),
            fit_r_squared: Some(fit.r_squared),
            ..Headline::default()
        },
        summary,
    })
}

/// Runs the scenario named in `s` and returns its artifacts in memory.
pub fn run_scenario(s: &Settings) -> Result<Report, RunError> {
    let mut report = match s.scenario {
        ScenarioName::SlowLight => slowlight(s),
        ScenarioName::Switch => switching(s, false),
        ScenarioName::Transient => switching(s, true),
        ScenarioName::DetuningSweep => detuning_sweep(s),
        ScenarioName::IntensitySweep => intensity_sweep(s),
    }?;
    report.summary.insert(1, ("seed".into(), s.seed.to_string()));
    Ok(report)
}
