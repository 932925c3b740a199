//! Scenario configuration: a flat `key = value` text format with dotted
//! section names. Units are spelled out in the key names.
//!
//! ```text
//! # transient response with a stronger control field
//! scenario = transient
//! intensity.A_Wcm2 = 12
//! sweep.intensities_Wcm2 = 2, 4, 6
//! ```
//!
//! Blank lines and `#` comments are ignored. Values are numbers, booleans,
//! bare or double-quoted words, or comma-separated lists (optionally in
//! square brackets). Every key must appear in [`KEYS`]; anything else is an
//! error carrying the line number.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioName {
    SlowLight,
    Switch,
    DetuningSweep,
    Transient,
    IntensitySweep,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 5] = [
        Self::SlowLight,
        Self::Switch,
        Self::DetuningSweep,
        Self::Transient,
        Self::IntensitySweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::SlowLight => "slowlight",
            Self::Switch => "switch",
            Self::DetuningSweep => "detuning-sweep",
            Self::Transient => "transient",
            Self::IntensitySweep => "intensity-sweep",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|n| n.as_str()).collect();
                format!("unknown scenario `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// Populations at the start of the integration window.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// Steady-state 2-5 balance established by the leading edge of the probe.
    Saturated,
    /// Everything in |2>.
    Repumped,
    /// 1/3 in each ground level.
    Thermal,
    /// Explicit `level:fraction` pairs.
    Explicit(Vec<(String, f64)>),
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Saturated => f.write_str("saturated"),
            Self::Repumped => f.write_str("repumped"),
            Self::Thermal => f.write_str("thermal"),
            Self::Explicit(p) => {
                let parts: Vec<String> = p.iter().map(|(l, v)| format!("{l}:{v}")).collect();
                f.write_str(&parts.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub scenario: ScenarioName,
    pub seed: u64,
    pub initial: InitialState,

    pub repump_explicit: bool,
    pub repump_rabi_khz: f64,
    pub repump_duration_us: f64,
    pub repump_separation_us: f64,

    /// Population decay 5→2 and 5→3, kHz rate constants.
    pub decay_25_khz: f64,
    pub decay_35_khz: f64,
    /// Total coherence decay, kHz rate constants.
    pub coh_25_khz: f64,
    pub coh_35_khz: f64,
    pub coh_15_khz: f64,
    pub coh_23_khz: f64,

    /// Rabi frequency per √(W/cm²), kHz.
    pub calib_p: f64,
    pub calib_a: f64,
    pub intensity_p: f64,
    pub intensity_a: f64,
    /// Overrides: when set, the calibration is rescaled so that the
    /// configured intensity yields this Rabi frequency.
    pub rabi_p_khz: Option<f64>,
    pub rabi_a_khz: Option<f64>,

    pub control_detuning_mhz: f64,
    /// Defaults to the peak of the delayed slow light.
    pub control_start_us: Option<f64>,
    pub control_duration_us: f64,

    /// Intensity FWHM.
    pub probe_fwhm_us: f64,
    pub probe_center_us: f64,
    pub probe_detuning_khz: f64,

    pub hole_od: f64,
    pub hole_depth: f64,
    pub hole_jitter_khz: f64,
    pub hole_homogeneous_khz: f64,
    /// Overrides the jitter-derived width.
    pub hole_fwhm_khz: Option<f64>,

    pub spectrum_span_fwhm: f64,
    pub spectrum_points_per_fwhm: f64,

    pub time_start_us: f64,
    pub time_end_us: f64,
    pub time_step_us: f64,

    pub rtol: f64,
    pub atol: f64,

    pub od_eff: Option<f64>,
    pub rabi_threshold: f64,

    pub sweep_detunings_mhz: Vec<f64>,
    pub sweep_intensities_wcm2: Vec<f64>,

    /// Relative amplitude of Gaussian noise added before frequency analysis.
    pub analysis_noise: f64,
    /// Defaults to the control duration.
    pub analysis_window_us: Option<f64>,

    pub plots: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            scenario: ScenarioName::Transient,
            seed: 0,
            initial: InitialState::Saturated,
            repump_explicit: false,
            repump_rabi_khz: 100.0,
            repump_duration_us: 100.0,
            repump_separation_us: 200.0,
            decay_25_khz: 1.0,
            decay_35_khz: 1.0,
            coh_25_khz: 50.0,
            coh_35_khz: 50.0,
            coh_15_khz: 50.0,
            coh_23_khz: 100.0,
            calib_p: 10.0 / 3f64.sqrt(),
            calib_a: 100.0 / 10f64.sqrt(),
            intensity_p: 3.0,
            intensity_a: 10.0,
            rabi_p_khz: None,
            rabi_a_khz: None,
            control_detuning_mhz: 0.0,
            control_start_us: None,
            control_duration_us: 50.0,
            probe_fwhm_us: 10.0,
            probe_center_us: 60.0,
            probe_detuning_khz: 0.0,
            hole_od: 10.0,
            hole_depth: 0.8,
            hole_jitter_khz: 300.0,
            hole_homogeneous_khz: 0.0,
            hole_fwhm_khz: None,
            spectrum_span_fwhm: 64.0,
            spectrum_points_per_fwhm: 64.0,
            time_start_us: 0.0,
            time_end_us: 200.0,
            time_step_us: 0.1,
            rtol: 1e-8,
            atol: 1e-10,
            od_eff: None,
            rabi_threshold: holeburn::propagation::DEFAULT_RABI_THRESHOLD,
            sweep_detunings_mhz: vec![0.0, 0.5, 1.0, 2.0],
            sweep_intensities_wcm2: (1..=10).map(|k| 2.0 * k as f64).collect(),
            analysis_noise: 0.0,
            analysis_window_us: None,
            plots: false,
        }
    }
}

/// Every recognised key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("scenario", "slowlight | switch | detuning-sweep | transient | intensity-sweep"),
    ("seed", "seed for synthetic analysis noise"),
    ("initial.state", "saturated | repumped | thermal | explicit `level:fraction` list"),
    ("repump.explicit", "integrate R1 (1-5) and R2 (3-5) instead of folding them into the initial state"),
    ("repump.rabi_kHz", "Rabi frequency of both repump pulses"),
    ("repump.duration_us", "repump pulse length"),
    ("repump.separation_us", "gap between the end of the repump and the start of the time window"),
    ("relax.G25_kHz", "population decay 5→2"),
    ("relax.G35_kHz", "population decay 5→3"),
    ("relax.g25_kHz", "total 2-5 coherence decay"),
    ("relax.g35_kHz", "total 3-5 coherence decay"),
    ("relax.g15_kHz", "total 1-5 coherence decay"),
    ("relax.g23_kHz", "total 2-3 ground coherence decay"),
    ("calib.P_kHz_per_sqrtWcm2", "probe Rabi frequency per √(W/cm²)"),
    ("calib.A_kHz_per_sqrtWcm2", "control Rabi frequency per √(W/cm²)"),
    ("intensity.P_Wcm2", "probe input peak intensity"),
    ("intensity.A_Wcm2", "control intensity"),
    ("rabi.P_kHz", "probe Rabi frequency at intensity.P_Wcm2 (rescales the calibration)"),
    ("rabi.A_kHz", "control Rabi frequency at intensity.A_Wcm2 (rescales the calibration)"),
    ("control.detuning_MHz", "control detuning from the 3-5 transition"),
    ("control.start_us", "control switch-on time (default: slow-light peak)"),
    ("control.duration_us", "control pulse length"),
    ("probe.fwhm_us", "probe intensity FWHM"),
    ("probe.center_us", "probe input peak time"),
    ("probe.detuning_kHz", "probe carrier offset from the hole centre"),
    ("hole.D", "background optical depth"),
    ("hole.depth", "fraction of absorption removed at the hole centre"),
    ("hole.jitter_kHz", "laser jitter; FWHM = 2·(jitter + homogeneous)"),
    ("hole.homogeneous_kHz", "homogeneous linewidth"),
    ("hole.fwhm_kHz", "explicit hole FWHM (overrides jitter)"),
    ("spectrum.span_fwhm", "frequency grid span in hole widths"),
    ("spectrum.points_per_fwhm", "frequency grid density"),
    ("time.start_us", "start of the simulated window"),
    ("time.end_us", "end of the simulated window"),
    ("time.step_us", "sampling step"),
    ("solver.rtol", "integrator relative tolerance"),
    ("solver.atol", "integrator absolute tolerance"),
    ("switch.od_eff", "optical depth of the switching stage (default: residual depth at the hole centre)"),
    ("switch.rabi_threshold", "relative probe Rabi level below which absorption is undefined"),
    ("sweep.detunings_MHz", "control detunings for detuning-sweep"),
    ("sweep.intensities_Wcm2", "control intensities for intensity-sweep"),
    ("analysis.noise", "relative Gaussian noise added before frequency analysis"),
    ("analysis.window_us", "analysis window length after control switch-on"),
    ("output.plots", "emit SVG plots"),
];

pub fn is_known_key(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(raw: &str) -> Result<&str, String> {
    let raw = raw.trim();
    match (raw.starts_with('"'), raw.ends_with('"') && raw.len() >= 2) {
        (true, true) => Ok(&raw[1..raw.len() - 1]),
        (true, false) => Err(format!("unterminated string {raw}")),
        _ => Ok(raw),
    }
}

fn number(raw: &str) -> Result<f64, String> {
    let s = unquote(raw)?;
    let v: f64 = s.parse().map_err(|_| format!("expected a number, got `{s}`"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a finite number, got `{s}`"))
    }
}

fn items(raw: &str) -> Result<Vec<&str>, String> {
    let mut s = unquote(raw)?.trim();
    if let Some(inner) = s.strip_prefix('[') {
        s = inner
            .strip_suffix(']')
            .ok_or_else(|| format!("unterminated list {raw}"))?;
    }
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    Ok(s.split(',').map(str::trim).collect())
}

fn list(raw: &str) -> Result<Vec<f64>, String> {
    items(raw)?.into_iter().map(number).collect()
}

fn boolean(raw: &str) -> Result<bool, String> {
    match unquote(raw)? {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        s => Err(format!("expected true or false, got `{s}`")),
    }
}

fn initial_state(raw: &str) -> Result<InitialState, String> {
    match unquote(raw)? {
        "saturated" => Ok(InitialState::Saturated),
        "repumped" => Ok(InitialState::Repumped),
        "thermal" => Ok(InitialState::Thermal),
        _ => {
            let mut pops = Vec::new();
            for item in items(raw)? {
                let (level, frac) = item
                    .split_once(':')
                    .ok_or_else(|| format!("expected `level:fraction`, got `{item}`"))?;
                pops.push((level.trim().to_string(), number(frac)?));
            }
            Ok(InitialState::Explicit(pops))
        }
    }
}

impl Settings {
    /// Assigns one key from its textual value. Unknown keys give `Ok(false)`.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<bool, String> {
        let optional = |raw: &str| -> Result<Option<f64>, String> {
            if matches!(unquote(raw)?, "none" | "auto" | "") {
                Ok(None)
            } else {
                number(raw).map(Some)
            }
        };
        match key {
            "scenario" => self.scenario = unquote(raw)?.parse()?,
            "seed" => {
                let s = unquote(raw)?;
                self.seed = s.parse().map_err(|_| format!("expected a non-negative integer, got `{s}`"))?
            }
            "initial.state" => self.initial = initial_state(raw)?,
            "repump.explicit" => self.repump_explicit = boolean(raw)?,
            "repump.rabi_kHz" => self.repump_rabi_khz = number(raw)?,
            "repump.duration_us" => self.repump_duration_us = number(raw)?,
            "repump.separation_us" => self.repump_separation_us = number(raw)?,
            "relax.G25_kHz" => self.decay_25_khz = number(raw)?,
            "relax.G35_kHz" => self.decay_35_khz = number(raw)?,
            "relax.g25_kHz" => self.coh_25_khz = number(raw)?,
            "relax.g35_kHz" => self.coh_35_khz = number(raw)?,
            "relax.g15_kHz" => self.coh_15_khz = number(raw)?,
            "relax.g23_kHz" => self.coh_23_khz = number(raw)?,
            "calib.P_kHz_per_sqrtWcm2" => self.calib_p = number(raw)?,
            "calib.A_kHz_per_sqrtWcm2" => self.calib_a = number(raw)?,
            "intensity.P_Wcm2" => self.intensity_p = number(raw)?,
            "intensity.A_Wcm2" => self.intensity_a = number(raw)?,
            "rabi.P_kHz" => self.rabi_p_khz = optional(raw)?,
            "rabi.A_kHz" => self.rabi_a_khz = optional(raw)?,
            "control.detuning_MHz" => self.control_detuning_mhz = number(raw)?,
            "control.start_us" => self.control_start_us = optional(raw)?,
            "control.duration_us" => self.control_duration_us = number(raw)?,
            "probe.fwhm_us" => self.probe_fwhm_us = number(raw)?,
            "probe.center_us" => self.probe_center_us = number(raw)?,
            "probe.detuning_kHz" => self.probe_detuning_khz = number(raw)?,
            "hole.D" => self.hole_od = number(raw)?,
            "hole.depth" => self.hole_depth = number(raw)?,
            "hole.jitter_kHz" => self.hole_jitter_khz = number(raw)?,
            "hole.homogeneous_kHz" => self.hole_homogeneous_khz = number(raw)?,
            "hole.fwhm_kHz" => self.hole_fwhm_khz = optional(raw)?,
            "spectrum.span_fwhm" => self.spectrum_span_fwhm = number(raw)?,
            "spectrum.points_per_fwhm" => self.spectrum_points_per_fwhm = number(raw)?,
            "time.start_us" => self.time_start_us = number(raw)?,
            "time.end_us" => self.time_end_us = number(raw)?,
            "time.step_us" => self.time_step_us = number(raw)?,
            "solver.rtol" => self.rtol = number(raw)?,
            "solver.atol" => self.atol = number(raw)?,
            "switch.od_eff" => self.od_eff = optional(raw)?,
            "switch.rabi_threshold" => self.rabi_threshold = number(raw)?,
            "sweep.detunings_MHz" => self.sweep_detunings_mhz = list(raw)?,
            "sweep.intensities_Wcm2" => self.sweep_intensities_wcm2 = list(raw)?,
            "analysis.noise" => self.analysis_noise = number(raw)?,
            "analysis.window_us" => self.analysis_window_us = optional(raw)?,
            "output.plots" => self.plots = boolean(raw)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Parses configuration text on top of the defaults and validates it.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut settings = Self::default();
        let mut seen: Vec<String> = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = strip_comment(raw_line).trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("malformed key `{key}`"),
                });
            }
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::Duplicate { line, key: key.into() });
            }
            match settings.set(key, value.trim()) {
                Ok(true) => seen.push(key.to_string()),
                Ok(false) => return Err(ConfigError::UnknownKey { line, key: key.into() }),
                Err(message) => {
                    return Err(ConfigError::Parse {
                        line,
                        message: format!("{key}: {message}"),
                    })
                }
            }
        }
        settings.validate()?;
        Ok(settings)
    }

    /// Range and consistency checks, reported against the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, message: String| {
            Err(ConfigError::Invalid {
                key: key.to_string(),
                message,
            })
        };
        let non_negative = [
            ("repump.rabi_kHz", self.repump_rabi_khz),
            ("repump.separation_us", self.repump_separation_us),
            ("relax.G25_kHz", self.decay_25_khz),
            ("relax.G35_kHz", self.decay_35_khz),
            ("relax.g25_kHz", self.coh_25_khz),
            ("relax.g35_kHz", self.coh_35_khz),
            ("relax.g15_kHz", self.coh_15_khz),
            ("relax.g23_kHz", self.coh_23_khz),
            ("intensity.P_Wcm2", self.intensity_p),
            ("intensity.A_Wcm2", self.intensity_a),
            ("hole.D", self.hole_od),
            ("hole.jitter_kHz", self.hole_jitter_khz),
            ("hole.homogeneous_kHz", self.hole_homogeneous_khz),
            ("switch.rabi_threshold", self.rabi_threshold),
            ("analysis.noise", self.analysis_noise),
        ];
        for (key, v) in non_negative {
            if v < 0.0 {
                return bad(key, format!("must be non-negative, got {v}"));
            }
        }
        let optional_non_negative = [
            ("rabi.P_kHz", self.rabi_p_khz),
            ("rabi.A_kHz", self.rabi_a_khz),
            ("switch.od_eff", self.od_eff),
        ];
        for (key, v) in optional_non_negative {
            if let Some(v) = v.filter(|v| *v < 0.0) {
                return bad(key, format!("must be non-negative, got {v}"));
            }
        }
        let positive = [
            ("repump.duration_us", self.repump_duration_us),
            ("calib.P_kHz_per_sqrtWcm2", self.calib_p),
            ("calib.A_kHz_per_sqrtWcm2", self.calib_a),
            ("control.duration_us", self.control_duration_us),
            ("probe.fwhm_us", self.probe_fwhm_us),
            ("spectrum.span_fwhm", self.spectrum_span_fwhm),
            ("spectrum.points_per_fwhm", self.spectrum_points_per_fwhm),
            ("time.step_us", self.time_step_us),
            ("solver.rtol", self.rtol),
            ("solver.atol", self.atol),
        ];
        for (key, v) in positive {
            if v <= 0.0 {
                return bad(key, format!("must be positive, got {v}"));
            }
        }
        if let Some(w) = self.hole_fwhm_khz.filter(|w| *w <= 0.0) {
            return bad("hole.fwhm_kHz", format!("must be positive, got {w}"));
        }
        if let Some(w) = self.analysis_window_us.filter(|w| *w <= 0.0) {
            return bad("analysis.window_us", format!("must be positive, got {w}"));
        }
        if self.hole_fwhm_khz.is_none() && self.hole_jitter_khz + self.hole_homogeneous_khz <= 0.0 {
            return bad("hole.jitter_kHz", "jitter and homogeneous width are both zero".into());
        }
        if !(0.0..=1.0).contains(&self.hole_depth) {
            return bad("hole.depth", format!("must lie in [0, 1], got {}", self.hole_depth));
        }
        if self.time_end_us <= self.time_start_us {
            return bad(
                "time.end_us",
                format!("must exceed time.start_us ({} <= {})", self.time_end_us, self.time_start_us),
            );
        }
        if (self.time_end_us - self.time_start_us) / self.time_step_us > 2e6 {
            return bad("time.step_us", "more than 2·10⁶ samples requested".into());
        }
        if let InitialState::Explicit(pops) = &self.initial {
            let scheme = holeburn::model::build_pr_yso_scheme();
            for (level, p) in pops {
                if scheme.index(level).is_err() {
                    return bad("initial.state", format!("unknown level `{level}`"));
                }
                if !(0.0..=1.0).contains(p) {
                    return bad("initial.state", format!("population of {level} is {p}"));
                }
            }
            let total: f64 = pops.iter().map(|(_, p)| p).sum();
            if (total - 1.0).abs() > 1e-12 {
                return bad("initial.state", format!("populations sum to {total}"));
            }
        }
        if self.sweep_detunings_mhz.is_empty() {
            return bad("sweep.detunings_MHz", "empty list".into());
        }
        if let Some(i) = self.sweep_intensities_wcm2.iter().find(|i| **i < 0.0) {
            return bad("sweep.intensities_Wcm2", format!("negative intensity {i}"));
        }
        if self.scenario == ScenarioName::IntensitySweep {
            let mut distinct = self.sweep_intensities_wcm2.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            if distinct.len() < 3 {
                return bad("sweep.intensities_Wcm2", "the √I fit needs at least 3 distinct intensities".into());
            }
        }
        Ok(())
    }

    /// Hole FWHM in kHz after applying the jitter rule or the override.
    pub fn hole_width_khz(&self) -> f64 {
        self.hole_fwhm_khz
            .unwrap_or(2.0 * (self.hole_jitter_khz + self.hole_homogeneous_khz))
    }

    /// Effective probe calibration constant (kHz per √(W/cm²)).
    pub fn probe_coupling(&self) -> f64 {
        match self.rabi_p_khz {
            Some(r) if self.intensity_p > 0.0 => r / self.intensity_p.sqrt(),
            _ => self.calib_p,
        }
    }

    pub fn control_coupling(&self) -> f64 {
        match self.rabi_a_khz {
            Some(r) if self.intensity_a > 0.0 => r / self.intensity_a.sqrt(),
            _ => self.calib_a,
        }
    }

    /// Control Rabi frequency in kHz at the configured intensity.
    pub fn control_rabi_khz(&self) -> f64 {
        self.rabi_a_khz.unwrap_or(self.calib_a * self.intensity_a.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gives_defaults() {
        let s = Settings::parse("scenario = transient\n").unwrap();
        assert_eq!(s, Settings::default());
        assert!((s.control_rabi_khz() - 100.0).abs() < 1e-12);
        assert!((s.probe_coupling() * 3f64.sqrt() - 10.0).abs() < 1e-12);
        assert!((s.hole_width_khz() - 600.0).abs() < 1e-12);
    }

    #[test]
    fn comments_quotes_and_lists() {
        let text = "# header\n\nscenario = \"switch\"   # trailing\nsweep.detunings_MHz = [0, 1, 2]\nsweep.intensities_Wcm2 = 1, 4,9\ninitial.state = 2:0.75, 3:0.25\noutput.plots = yes\n";
        let s = Settings::parse(text).unwrap();
        assert_eq!(s.scenario, ScenarioName::Switch);
        assert_eq!(s.sweep_detunings_mhz, vec![0.0, 1.0, 2.0]);
        assert_eq!(s.sweep_intensities_wcm2, vec![1.0, 4.0, 9.0]);
        assert_eq!(s.initial, InitialState::Explicit(vec![("2".into(), 0.75), ("3".into(), 0.25)]));
        assert!(s.plots);
    }

    #[test]
    fn errors_carry_line_and_key() {
        assert_eq!(
            Settings::parse("scenario = transient\nprobe.width = 3\n").unwrap_err(),
            ConfigError::UnknownKey { line: 2, key: "probe.width".into() }
        );
        assert!(matches!(
            Settings::parse("\n\nhole.D = ten\n").unwrap_err(),
            ConfigError::Parse { line: 3, .. }
        ));
        assert!(matches!(
            Settings::parse("hole.D = 1\nhole.D = 2\n").unwrap_err(),
            ConfigError::Duplicate { line: 2, .. }
        ));
        assert!(matches!(
            Settings::parse("just words\n").unwrap_err(),
            ConfigError::Parse { line: 1, .. }
        ));
        assert!(matches!(
            Settings::parse("scenario = fig5\n").unwrap_err(),
            ConfigError::Parse { line: 1, .. }
        ));
    }

    #[test]
    fn validation_names_the_key() {
        let err = Settings::parse("rabi.A_kHz = -5\n").unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { key, .. } if key == "rabi.A_kHz"), "{err}");
        let err = Settings::parse("time.end_us = 0\n").unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { key, .. } if key == "time.end_us"));
        let err = Settings::parse("initial.state = 2:0.5, 3:0.4\n").unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { key, .. } if key == "initial.state"));
        let err = Settings::parse("scenario = intensity-sweep\nsweep.intensities_Wcm2 = 4, 4, 9\n").unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { key, .. } if key == "sweep.intensities_Wcm2"));
    }

    #[test]
    fn overrides_round_trip() {
        let s = Settings::parse("hole.fwhm_kHz = 600\n").unwrap();
        assert_eq!(s.hole_fwhm_khz, Some(600.0));
        assert!((s.hole_width_khz() - 600.0).abs() < 1e-12);
        let s = Settings::parse("hole.jitter_kHz = 100\nhole.homogeneous_kHz = 50\n").unwrap();
        assert!((s.hole_width_khz() - 300.0).abs() < 1e-12);
        let s = Settings::parse("intensity.A_Wcm2 = 4\nrabi.A_kHz = 50\n").unwrap();
        assert!((s.control_coupling() - 25.0).abs() < 1e-12);
        let s = Settings::parse("rabi.A_kHz = none\n").unwrap();
        assert_eq!(s.rabi_a_khz, None);
    }

    #[test]
    fn every_key_is_settable() {
        for (key, _) in KEYS {
            let mut s = Settings::default();
            let probe_values = ["1", "true", "transient", "saturated", "1, 2, 3"];
            assert!(
                probe_values.iter().any(|v| s.set(key, v) == Ok(true)),
                "{key} not handled"
            );
        }
        assert_eq!(Settings::default().set("nope", "1"), Ok(false));
    }
}
