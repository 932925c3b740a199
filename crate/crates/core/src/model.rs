//! Domain types: level schemes, driving pulses, relaxation rates, the
//! intensity to Rabi-frequency calibration and complete scenario
//! configurations.
//!
//! Configured frequencies are ordinary frequencies (kHz, MHz). Everything
//! stored in these types is already converted to angular units (rad/μs),
//! with time in μs.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown level label `{0}`")]
    UnknownLevel(String),
    #[error("duplicate level label `{0}`")]
    DuplicateLevel(String),
    #[error("a level scheme needs at least 2 levels, got {0}")]
    TooFewLevels(usize),
    #[error("transition {0}-{1} must connect a ground and an excited level")]
    InvalidTransition(String, String),
    #[error("transition {0}-{1} is not an allowed transition of the scheme")]
    UnknownTransition(String, String),
    #[error("pulse `{label}`: {reason}")]
    InvalidPulse { label: String, reason: String },
    #[error("negative rate {rate} for {what}")]
    NegativeRate { what: String, rate: f64 },
    #[error("intensity must be non-negative, got {0}")]
    NegativeIntensity(f64),
    #[error("calibration constant must be positive, got {0}")]
    InvalidCalibration(f64),
    #[error("no intensity calibration for transition {0}-{1}")]
    MissingCalibration(String, String),
    #[error("initial populations: {0}")]
    InvalidPopulations(String),
    #[error("solver setting: {0}")]
    InvalidSolverSetting(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

/// kHz (ordinary frequency) to rad/μs.
pub fn khz_to_angular(khz: f64) -> f64 {
    2.0 * PI * khz * 1e-3
}

/// MHz (ordinary frequency) to rad/μs.
pub fn mhz_to_angular(mhz: f64) -> f64 {
    2.0 * PI * mhz
}

/// Rate constant given in kHz (10³ s⁻¹) to 1/μs. Relaxation rates are
/// inverse lifetimes and carry no factor 2π.
pub fn khz_rate(khz: f64) -> f64 {
    khz * 1e-3
}

/// rad/μs to kHz.
pub fn angular_to_khz(omega: f64) -> f64 {
    omega / (2.0 * PI) * 1e3
}

/// rad/μs to MHz.
pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Ground,
    Excited,
}

/// An optically allowed transition, stored as level indices into the
/// owning [`LevelScheme`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub ground: usize,
    pub excited: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelScheme {
    labels: Vec<String>,
    roles: Vec<Role>,
    transitions: Vec<Transition>,
}

impl LevelScheme {
    pub fn new<S: AsRef<str>>(levels: &[(S, Role)], transitions: &[(S, S)]) -> Result<Self> {
        if levels.len() < 2 {
            return Err(ModelError::TooFewLevels(levels.len()));
        }
        let mut labels: Vec<String> = Vec::with_capacity(levels.len());
        let mut roles = Vec::with_capacity(levels.len());
        for (label, role) in levels {
            let label = label.as_ref().to_string();
            if labels.contains(&label) {
                return Err(ModelError::DuplicateLevel(label));
            }
            labels.push(label);
            roles.push(*role);
        }
        let mut scheme = Self {
            labels,
            roles,
            transitions: Vec::new(),
        };
        for (a, b) in transitions {
            let t = scheme.resolve_pair(a.as_ref(), b.as_ref())?;
            if !scheme.transitions.contains(&t) {
                scheme.transitions.push(t);
            }
        }
        Ok(scheme)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn role(&self, index: usize) -> Role {
        self.roles[index]
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| ModelError::UnknownLevel(label.to_string()))
    }

    /// Orders a level pair as (ground, excited), rejecting ground-ground
    /// and excited-excited pairs. Does not require the pair to be allowed.
    fn resolve_pair(&self, a: &str, b: &str) -> Result<Transition> {
        let (ia, ib) = (self.index(a)?, self.index(b)?);
        match (self.roles[ia], self.roles[ib]) {
            (Role::Ground, Role::Excited) => Ok(Transition {
                ground: ia,
                excited: ib,
            }),
            (Role::Excited, Role::Ground) => Ok(Transition {
                ground: ib,
                excited: ia,
            }),
            _ => Err(ModelError::InvalidTransition(a.into(), b.into())),
        }
    }

    /// Resolves an allowed transition from two labels in either order.
    pub fn transition(&self, a: &str, b: &str) -> Result<Transition> {
        let t = self.resolve_pair(a, b)?;
        if self.transitions.contains(&t) {
            Ok(t)
        } else {
            Err(ModelError::UnknownTransition(a.into(), b.into()))
        }
    }

    pub fn ground_levels(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.roles[i] == Role::Ground)
    }
}

/// Four-level Pr:YSO scheme: hyperfine ground states 1, 2, 3 and the
/// excited state 5, each ground state optically coupled to 5.
pub fn build_pr_yso_scheme() -> LevelScheme {
    LevelScheme::new(
        &[
            ("1", Role::Ground),
            ("2", Role::Ground),
            ("3", Role::Ground),
            ("5", Role::Excited),
        ],
        &[("2", "5"), ("3", "5"), ("1", "5")],
    )
    .expect("static scheme is valid")
}

/// Normalized pulse envelope samples on a uniform grid, linearly
/// interpolated and zero outside `[t0, t0 + (n-1)·dt]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledEnvelope {
    pub t0: f64,
    pub dt: f64,
    pub values: Arc<[f64]>,
}

impl SampledEnvelope {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Self {
        Self {
            t0,
            dt,
            values: values.into(),
        }
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.dt * (self.values.len().saturating_sub(1)) as f64
    }

    pub fn value(&self, t: f64) -> f64 {
        let n = self.values.len();
        if n == 0 || t < self.t0 || t > self.end() {
            return 0.0;
        }
        let x = (t - self.t0) / self.dt;
        let i = (x.floor() as usize).min(n - 1);
        if i + 1 >= n {
            return self.values[n - 1];
        }
        let f = x - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PulseShape {
    /// Flat top over `[start, start + duration]`.
    Rectangular,
    /// Peak at `start`, FWHM `duration`.
    Gaussian,
    /// Tabulated envelope; `rabi_peak` scales the samples.
    Sampled(SampledEnvelope),
}

/// Gaussian tails are dropped beyond this many FWHM from the peak
/// (envelope below 2^-144 of peak).
const GAUSSIAN_SUPPORT_FWHM: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    pub label: String,
    /// Level labels; validation reorders them as (ground, excited).
    pub transition: (String, String),
    pub shape: PulseShape,
    pub start: f64,
    pub duration: f64,
    /// Peak Rabi frequency, rad/μs.
    pub rabi_peak: f64,
    /// Field minus transition frequency, rad/μs.
    pub detuning: f64,
    pub phase: f64,
}

impl Pulse {
    pub fn rectangular(
        label: &str,
        transition: (&str, &str),
        start: f64,
        duration: f64,
        rabi_peak: f64,
    ) -> Self {
        Self {
            label: label.to_string(),
            transition: (transition.0.to_string(), transition.1.to_string()),
            shape: PulseShape::Rectangular,
            start,
            duration,
            rabi_peak,
            detuning: 0.0,
            phase: 0.0,
        }
    }

    pub fn gaussian(label: &str, transition: (&str, &str), center: f64, fwhm: f64, rabi_peak: f64) -> Self {
        Self {
            shape: PulseShape::Gaussian,
            ..Self::rectangular(label, transition, center, fwhm, rabi_peak)
        }
    }

    /// Envelope given by samples; they are rescaled so the largest magnitude
    /// maps onto `rabi_peak`.
    pub fn sampled(label: &str, transition: (&str, &str), envelope: SampledEnvelope, rabi_peak: f64) -> Self {
        let peak = envelope.peak();
        let envelope = if peak > 0.0 && peak != 1.0 {
            SampledEnvelope::new(
                envelope.t0,
                envelope.dt,
                envelope.values.iter().map(|v| v / peak).collect(),
            )
        } else {
            envelope
        };
        Self {
            start: envelope.t0,
            duration: envelope.end() - envelope.t0,
            shape: PulseShape::Sampled(envelope),
            ..Self::rectangular(label, transition, 0.0, 0.0, rabi_peak)
        }
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning = detuning;
        self
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn is_noop(&self) -> bool {
        self.rabi_peak == 0.0
    }

    /// Rabi frequency Ω(t) in rad/μs.
    pub fn envelope(&self, t: f64) -> f64 {
        if self.is_noop() {
            return 0.0;
        }
        let (lo, hi) = self.support();
        if t < lo || t > hi {
            return 0.0;
        }
        match &self.shape {
            PulseShape::Rectangular => self.rabi_peak,
            PulseShape::Gaussian => {
                let x = 2.0 * (t - self.start) / self.duration;
                self.rabi_peak * (-LN_2 * x * x).exp()
            }
            PulseShape::Sampled(env) => self.rabi_peak * env.value(t),
        }
    }

    /// Time interval outside which the envelope is zero.
    pub fn support(&self) -> (f64, f64) {
        match &self.shape {
            PulseShape::Rectangular => (self.start, self.start + self.duration),
            PulseShape::Gaussian => {
                let half = GAUSSIAN_SUPPORT_FWHM * self.duration;
                (self.start - half, self.start + half)
            }
            PulseShape::Sampled(env) => (env.t0, env.end()),
        }
    }

    /// Times at which the envelope or its derivative may be discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        if self.is_noop() {
            return Vec::new();
        }
        let (lo, hi) = self.support();
        match &self.shape {
            PulseShape::Gaussian => Vec::new(),
            _ => vec![lo, hi],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseSequence {
    pub pulses: Vec<Pulse>,
}

impl PulseSequence {
    pub fn new(pulses: Vec<Pulse>) -> Self {
        Self { pulses }
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&Pulse> {
        self.pulses.iter().find(|p| p.label == label)
    }
}

impl FromIterator<Pulse> for PulseSequence {
    fn from_iter<I: IntoIterator<Item = Pulse>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// A pulse sequence that has been checked against a scheme: transitions
/// are ordered (ground, excited) and the pulses sorted by start time, then
/// label.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedSequence {
    pulses: Vec<Pulse>,
    transitions: Vec<Transition>,
}

impl CheckedSequence {
    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    /// Resolved transition of each pulse, same order as [`Self::pulses`].
    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Pulse, Transition)> {
        self.pulses.iter().zip(self.transitions.iter().copied())
    }

    pub fn to_sequence(&self) -> PulseSequence {
        PulseSequence::new(self.pulses.clone())
    }

    pub fn get(&self, label: &str) -> Option<(&Pulse, Transition)> {
        self.iter().find(|(p, _)| p.label == label)
    }
}

pub fn validate_pulse_sequence(seq: &PulseSequence, scheme: &LevelScheme) -> Result<CheckedSequence> {
    let mut checked: Vec<(Pulse, Transition)> = Vec::with_capacity(seq.pulses.len());
    for pulse in &seq.pulses {
        let invalid = |reason: String| ModelError::InvalidPulse {
            label: pulse.label.clone(),
            reason,
        };
        let t = scheme.transition(&pulse.transition.0, &pulse.transition.1)?;
        if !pulse.duration.is_finite() || !pulse.start.is_finite() || !pulse.rabi_peak.is_finite() {
            return Err(invalid("non-finite timing or amplitude".into()));
        }
        if pulse.duration < 0.0 {
            return Err(invalid(format!("negative duration {}", pulse.duration)));
        }
        if pulse.duration == 0.0 && !pulse.is_noop() {
            return Err(invalid("zero duration with nonzero amplitude".into()));
        }
        if pulse.rabi_peak < 0.0 {
            return Err(invalid(format!("negative Rabi amplitude {}", pulse.rabi_peak)));
        }
        let mut normalized = pulse.clone();
        normalized.transition = (scheme.label(t.ground).to_string(), scheme.label(t.excited).to_string());
        checked.push((normalized, t));
    }
    checked.sort_by(|(a, _), (b, _)| a.start.total_cmp(&b.start).then_with(|| a.label.cmp(&b.label)));
    let (pulses, transitions) = checked.into_iter().unzip();
    Ok(CheckedSequence { pulses, transitions })
}

/// Population decay and total coherence decay rates, rad/μs.
///
/// `coherence_decay_total` is the full transverse rate of a pair, including
/// the contribution of population decay; the master equation adds only the
/// pure-dephasing remainder.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RelaxationSpec {
    /// (from, to) → rate.
    pub population_decay: BTreeMap<(String, String), f64>,
    /// Unordered pair (stored sorted) → rate.
    pub coherence_decay_total: BTreeMap<(String, String), f64>,
}

fn sorted_pair(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl RelaxationSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn decay(mut self, from: &str, to: &str, rate: f64) -> Self {
        self.population_decay.insert((from.to_string(), to.to_string()), rate);
        self
    }

    pub fn coherence(mut self, a: &str, b: &str, rate: f64) -> Self {
        self.coherence_decay_total.insert(sorted_pair(a, b), rate);
        self
    }

    pub fn coherence_rate(&self, a: &str, b: &str) -> Option<f64> {
        self.coherence_decay_total.get(&sorted_pair(a, b)).copied()
    }

    /// Total population decay rate out of a level.
    pub fn decay_out_of(&self, level: &str) -> f64 {
        self.population_decay
            .iter()
            .filter(|((from, _), _)| from == level)
            .map(|(_, r)| r)
            .sum()
    }

    /// Checks labels and signs. Returns warnings for pairs whose total
    /// coherence decay is below half the population decay out of both
    /// members; such pairs are integrated with no extra dephasing.
    pub fn check(&self, scheme: &LevelScheme) -> Result<Vec<String>> {
        for ((from, to), &rate) in &self.population_decay {
            scheme.index(from)?;
            scheme.index(to)?;
            if !(rate >= 0.0) {
                return Err(ModelError::NegativeRate {
                    what: format!("population decay {from}->{to}"),
                    rate,
                });
            }
        }
        let mut warnings = Vec::new();
        for ((a, b), &rate) in &self.coherence_decay_total {
            scheme.index(a)?;
            scheme.index(b)?;
            if !(rate >= 0.0) {
                return Err(ModelError::NegativeRate {
                    what: format!("coherence decay {a}-{b}"),
                    rate,
                });
            }
            let floor = 0.5 * (self.decay_out_of(a) + self.decay_out_of(b));
            if rate < floor {
                warnings.push(format!(
                    "coherence decay {a}-{b} = {rate} rad/us is below the population-decay floor {floor} rad/us"
                ));
            }
        }
        warnings.extend(self.dephasing_triangle_violations());
        Ok(warnings)
    }

    fn pure_dephasing(&self, a: &str, b: &str) -> Option<f64> {
        self.coherence_rate(a, b)
            .map(|r| (r - 0.5 * (self.decay_out_of(a) + self.decay_out_of(b))).max(0.0))
    }

    /// Element-wise dephasing is completely positive only if, for every
    /// triple of levels, √d_ac ≤ √d_ab + √d_bc. Triples with an
    /// unconfigured pair are skipped.
    fn dephasing_triangle_violations(&self) -> Vec<String> {
        let labels: Vec<&String> = self
            .coherence_decay_total
            .keys()
            .flat_map(|(a, b)| [a, b])
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut out = Vec::new();
        for (i, a) in labels.iter().enumerate() {
            for (j, c) in labels.iter().enumerate().skip(i + 1) {
                let Some(dac) = self.pure_dephasing(a, c) else { continue };
                for (k, b) in labels.iter().enumerate() {
                    if k == i || k == j {
                        continue;
                    }
                    let (Some(dab), Some(dbc)) = (self.pure_dephasing(a, b), self.pure_dephasing(b, c)) else {
                        continue;
                    };
                    if dac.sqrt() > (dab.sqrt() + dbc.sqrt()) * (1.0 + 1e-12) {
                        out.push(format!(
                            "pure dephasing {a}-{c} = {dac} rad/us exceeds the bound set by {a}-{b} and {b}-{c}; \
                             positivity of the density matrix is not guaranteed"
                        ));
                    }
                }
            }
        }
        out
    }

    /// 1/(total decay out of `level`), μs. Infinite when the level is stable.
    pub fn lifetime(&self, level: &str) -> f64 {
        1.0 / self.decay_out_of(level)
    }
}

/// Returns the Rabi frequency (rad/μs) of a field of intensity `intensity`
/// (W/cm²) on a transition with coupling `coupling_khz` (kHz per √(W/cm²)).
pub fn rabi_from_intensity(intensity: f64, coupling_khz: f64) -> Result<f64> {
    if !(intensity >= 0.0) {
        return Err(ModelError::NegativeIntensity(intensity));
    }
    if !(coupling_khz > 0.0) {
        return Err(ModelError::InvalidCalibration(coupling_khz));
    }
    Ok(khz_to_angular(coupling_khz * intensity.sqrt()))
}

/// Per-transition coupling constants k, with ν_Rabi = k·√I.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntensityCalibration {
    couplings: BTreeMap<(String, String), f64>,
}

impl IntensityCalibration {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, a: &str, b: &str, coupling_khz: f64) -> Result<Self> {
        if !(coupling_khz > 0.0) {
            return Err(ModelError::InvalidCalibration(coupling_khz));
        }
        self.couplings.insert(sorted_pair(a, b), coupling_khz);
        Ok(self)
    }

    pub fn coupling(&self, a: &str, b: &str) -> Result<f64> {
        self.couplings
            .get(&sorted_pair(a, b))
            .copied()
            .ok_or_else(|| ModelError::MissingCalibration(a.into(), b.into()))
    }

    pub fn rabi(&self, a: &str, b: &str, intensity: f64) -> Result<f64> {
        rabi_from_intensity(intensity, self.coupling(a, b)?)
    }

    /// Inverse of [`Self::rabi`]: intensity in W/cm² for a Rabi frequency.
    pub fn intensity(&self, a: &str, b: &str, rabi: f64) -> Result<f64> {
        let nu = angular_to_khz(rabi) / self.coupling(a, b)?;
        Ok(nu * nu)
    }
}

/// Calibration pairing the probe (3 W/cm² ↔ 10 kHz on 2-5) and the control
/// (10 W/cm² ↔ 100 kHz on 3-5). The repump transition 1-5 reuses the
/// probe constant.
pub fn pr_yso_calibration() -> IntensityCalibration {
    let probe = 10.0 / 3.0_f64.sqrt();
    let control = 100.0 / 10.0_f64.sqrt();
    IntensityCalibration::new()
        .with("2", "5", probe)
        .and_then(|c| c.with("3", "5", control))
        .and_then(|c| c.with("1", "5", probe))
        .expect("constants are positive")
}

/// Relaxation of the Pr:YSO scheme with rate constants in kHz (10³ s⁻¹):
/// `decay` for 5→2 and 5→3, `optical` for the total decay of the 2-5 and
/// 3-5 (and 1-5) coherences, `ground` for the 2-3 ground-state coherence.
pub fn pr_yso_relaxation(decay_khz: f64, optical_khz: f64, ground_khz: f64) -> RelaxationSpec {
    RelaxationSpec::new()
        .decay("5", "2", khz_rate(decay_khz))
        .decay("5", "3", khz_rate(decay_khz))
        .coherence("2", "5", khz_rate(optical_khz))
        .coherence("3", "5", khz_rate(optical_khz))
        .coherence("1", "5", khz_rate(optical_khz))
        .coherence("2", "3", khz_rate(ground_khz))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialPreset {
    /// Repump has moved all spectrally selected ions into |2>.
    Repumped,
    /// Thermal distribution: 1/3 in each hyperfine ground state.
    Thermal,
}

impl InitialPreset {
    pub fn populations(self) -> Vec<(String, f64)> {
        match self {
            Self::Repumped => vec![("2".into(), 1.0)],
            Self::Thermal => ["1", "2", "3"].iter().map(|l| (l.to_string(), 1.0 / 3.0)).collect(),
        }
    }
}

/// Populations left behind by a probe that has been driving `ground`-`excited`
/// long enough to reach its two-level steady state, i.e. the balance the
/// leading edge of the probe establishes before the slow part arrives.
///
/// With saturation parameter s = Ω²/(γΓ), where γ is the optical coherence
/// decay rate and Γ the total decay out of `excited`, the excited fraction is
/// s/(2(1+s)). Leakage into other ground states is neglected, so the result
/// is only meaningful when Γ is small compared with the inverse probe
/// duration.
pub fn probe_saturated_populations(
    relax: &RelaxationSpec,
    ground: &str,
    excited: &str,
    probe_rabi: f64,
) -> Result<Vec<(String, f64)>> {
    let gamma = relax.coherence_rate(ground, excited).unwrap_or(0.0);
    let big_gamma = relax.decay_out_of(excited);
    if !probe_rabi.is_finite() || probe_rabi < 0.0 {
        return Err(ModelError::InvalidPopulations(format!("probe Rabi frequency {probe_rabi}")));
    }
    if !(gamma > 0.0 && big_gamma > 0.0) {
        return Err(ModelError::InvalidPopulations(format!(
            "saturated populations need positive decay on {ground}-{excited} (γ={gamma}, Γ={big_gamma})"
        )));
    }
    let s = probe_rabi * probe_rabi / (gamma * big_gamma);
    let excited_fraction = s / (2.0 * (1.0 + s));
    Ok(vec![
        (ground.to_string(), 1.0 - excited_fraction),
        (excited.to_string(), excited_fraction),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Output sampling interval, μs.
    pub sample_step: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            sample_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scheme: LevelScheme,
    pub relaxation: RelaxationSpec,
    pub pulses: PulseSequence,
    /// Missing levels start empty.
    pub initial_populations: Vec<(String, f64)>,
    pub solver: SolverSettings,
}

/// A configuration whose parts have been checked against each other.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    pub scheme: LevelScheme,
    pub relaxation: RelaxationSpec,
    pub pulses: CheckedSequence,
    /// One entry per level, scheme order.
    pub initial_populations: Vec<f64>,
    pub solver: SolverSettings,
    pub warnings: Vec<String>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<ValidatedConfig> {
        let pulses = validate_pulse_sequence(&self.pulses, &self.scheme)?;
        let warnings = self.relaxation.check(&self.scheme)?;
        let mut pops = vec![0.0; self.scheme.len()];
        for (label, p) in &self.initial_populations {
            let i = self.scheme.index(label)?;
            if !(0.0..=1.0).contains(p) {
                return Err(ModelError::InvalidPopulations(format!("population of {label} is {p}")));
            }
            pops[i] += p;
        }
        let total: f64 = pops.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ModelError::InvalidPopulations(format!("populations sum to {total}")));
        }
        let s = &self.solver;
        if !(s.rtol > 0.0 && s.atol > 0.0) {
            return Err(ModelError::InvalidSolverSetting(format!(
                "tolerances must be positive (rtol={}, atol={})",
                s.rtol, s.atol
            )));
        }
        if !(s.sample_step > 0.0) {
            return Err(ModelError::InvalidSolverSetting(format!(
                "sample step must be positive, got {}",
                s.sample_step
            )));
        }
        Ok(ValidatedConfig {
            scheme: self.scheme.clone(),
            relaxation: self.relaxation.clone(),
            pulses,
            initial_populations: pops,
            solver: self.solver,
            warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn pr_yso_scheme_shape() {
        let s = build_pr_yso_scheme();
        assert_eq!(s.len(), 4);
        assert_eq!(s.transitions().len(), 3);
        assert_eq!(s.ground_levels().count(), 3);
        assert_eq!(s.role(s.index("5").unwrap()), Role::Excited);
        assert!(s.transition("5", "2").is_ok());
    }

    #[test]
    fn scheme_rejects_bad_input() {
        let g = Role::Ground;
        assert_eq!(
            LevelScheme::new(&[("a", g)], &[]).unwrap_err(),
            ModelError::TooFewLevels(1)
        );
        assert!(matches!(
            LevelScheme::new(&[("a", g), ("a", Role::Excited)], &[]),
            Err(ModelError::DuplicateLevel(_))
        ));
        assert!(matches!(
            LevelScheme::new(&[("a", g), ("b", g)], &[("a", "b")]),
            Err(ModelError::InvalidTransition(..))
        ));
    }

    #[test]
    fn empty_sequence_is_valid() {
        let s = build_pr_yso_scheme();
        let checked = validate_pulse_sequence(&PulseSequence::default(), &s).unwrap();
        assert!(checked.pulses().is_empty());
    }

    #[test]
    fn ground_ground_pulses_rejected() {
        let s = build_pr_yso_scheme();
        for pair in [("1", "2"), ("2", "3")] {
            let seq = PulseSequence::new(vec![Pulse::rectangular("X", pair, 0.0, 1.0, 1.0)]);
            assert!(matches!(
                validate_pulse_sequence(&seq, &s),
                Err(ModelError::InvalidTransition(..))
            ));
        }
    }

    #[test]
    fn unknown_label_and_negative_duration() {
        let s = build_pr_yso_scheme();
        let seq = PulseSequence::new(vec![Pulse::rectangular("X", ("4", "5"), 0.0, 1.0, 1.0)]);
        assert_eq!(
            validate_pulse_sequence(&seq, &s).unwrap_err(),
            ModelError::UnknownLevel("4".into())
        );
        let seq = PulseSequence::new(vec![Pulse::rectangular("X", ("2", "5"), 0.0, -1.0, 1.0)]);
        assert!(matches!(
            validate_pulse_sequence(&seq, &s),
            Err(ModelError::InvalidPulse { .. })
        ));
    }

    #[test]
    fn probe_then_control_is_sorted_and_normalized() {
        let s = build_pr_yso_scheme();
        let probe = Pulse::gaussian("P", ("5", "2"), 50.0, 10.0, khz_to_angular(10.0));
        // control switched on at the probe peak
        let control = Pulse::rectangular("A", ("3", "5"), 50.0, 50.0, khz_to_angular(100.0));
        let early = Pulse::rectangular("R", ("1", "5"), 0.0, 5.0, 1.0);
        let checked = validate_pulse_sequence(&PulseSequence::new(vec![probe, control, early]), &s).unwrap();
        let labels: Vec<_> = checked.pulses().iter().map(|p| p.label.as_str()).collect();
        assert_eq!(labels, ["R", "A", "P"]);
        assert_eq!(checked.get("P").unwrap().0.transition, ("2".to_string(), "5".to_string()));
    }

    #[test]
    fn zero_pulse_is_a_noop() {
        let s = build_pr_yso_scheme();
        let p = Pulse::rectangular("Z", ("2", "5"), 3.0, 0.0, 0.0);
        let checked = validate_pulse_sequence(&PulseSequence::new(vec![p]), &s).unwrap();
        assert!(checked.pulses()[0].is_noop());
        assert_eq!(checked.pulses()[0].envelope(3.0), 0.0);
    }

    #[test]
    fn rabi_from_intensity_values() {
        let k = 100.0 / 10.0_f64.sqrt();
        assert_relative_eq!(rabi_from_intensity(10.0, k).unwrap(), khz_to_angular(100.0), max_relative = 1e-12);
        assert_eq!(rabi_from_intensity(0.0, k).unwrap(), 0.0);
        assert_relative_eq!(rabi_from_intensity(40.0, k).unwrap(), khz_to_angular(200.0), max_relative = 1e-12);
        // the rounded constant 31.62 kHz per √(W/cm²)
        let nu = angular_to_khz(rabi_from_intensity(10.0, 31.62).unwrap());
        assert!((nu - 100.0).abs() < 0.01);
        assert!(matches!(rabi_from_intensity(-1.0, k), Err(ModelError::NegativeIntensity(_))));
    }

    #[test]
    fn reference_calibration() {
        let cal = pr_yso_calibration();
        assert_relative_eq!(angular_to_khz(cal.rabi("2", "5", 3.0).unwrap()), 10.0, max_relative = 1e-12);
        assert_relative_eq!(angular_to_khz(cal.rabi("5", "3", 10.0).unwrap()), 100.0, max_relative = 1e-12);
        assert_relative_eq!(cal.intensity("3", "5", khz_to_angular(100.0)).unwrap(), 10.0, max_relative = 1e-12);
        assert!(cal.rabi("2", "3", 1.0).is_err());
    }

    #[test]
    fn relaxation_floor_warning() {
        let s = build_pr_yso_scheme();
        let ok = pr_yso_relaxation(1.0, 50.0, 100.0);
        assert!(ok.check(&s).unwrap().is_empty());
        let low = RelaxationSpec::new().decay("5", "2", 1.0).coherence("2", "5", 0.2);
        assert_eq!(low.check(&s).unwrap().len(), 1);
        let neg = RelaxationSpec::new().decay("5", "2", -1.0);
        assert!(matches!(neg.check(&s), Err(ModelError::NegativeRate { .. })));
        // 2-3 dephasing beyond (√d25 + √d35)² cannot come from a Lindblad generator
        let too_fast = pr_yso_relaxation(1.0, 50.0, 600.0);
        let w = too_fast.check(&s).unwrap();
        assert_eq!(w.len(), 1, "{w:?}");
        assert!(w[0].contains("2-3"));
        // 2 kHz total decay out of |5>
        assert_relative_eq!(ok.lifetime("5"), 1.0 / khz_rate(2.0));
    }

    #[test]
    fn gaussian_half_width() {
        let p = Pulse::gaussian("P", ("2", "5"), 20.0, 10.0, 3.0);
        assert_relative_eq!(p.envelope(25.0), 1.5, max_relative = 1e-14);
        assert_relative_eq!(p.envelope(20.0), 3.0);
        let dt = 3.7;
        let expected = 3.0 * 2f64.powf(-(2.0 * dt / 10.0_f64).powi(2));
        assert_relative_eq!(p.envelope(20.0 + dt), expected, max_relative = 1e-14);
    }

    #[test]
    fn sampled_envelope_is_rescaled() {
        let env = SampledEnvelope::new(0.0, 1.0, vec![0.0, 2.0, 4.0, 2.0]);
        let p = Pulse::sampled("P", ("2", "5"), env, 0.5);
        assert_relative_eq!(p.envelope(2.0), 0.5);
        assert_relative_eq!(p.envelope(1.5), 0.375);
        assert_eq!(p.envelope(3.5), 0.0);
        assert_eq!(p.support(), (0.0, 3.0));
    }

    #[test]
    fn config_population_checks() {
        let base = ScenarioConfig {
            scheme: build_pr_yso_scheme(),
            relaxation: pr_yso_relaxation(1.0, 50.0, 100.0),
            pulses: PulseSequence::default(),
            initial_populations: InitialPreset::Thermal.populations(),
            solver: SolverSettings::default(),
        };
        let v = base.validate().unwrap();
        assert_relative_eq!(v.initial_populations[2], 1.0 / 3.0);
        assert_eq!(v.initial_populations[3], 0.0);
        let mut bad = base.clone();
        bad.initial_populations = vec![("2".into(), 0.9)];
        assert!(matches!(bad.validate(), Err(ModelError::InvalidPopulations(_))));
        let mut bad = base;
        bad.initial_populations = vec![("2".into(), 1.5), ("3".into(), -0.5)];
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn quadrupling_intensity_doubles_rabi(i in 0.0f64..1e4, k in 0.01f64..1e3) {
            let a = rabi_from_intensity(i, k).unwrap();
            let b = rabi_from_intensity(4.0 * i, k).unwrap();
            prop_assert!((b - 2.0 * a).abs() <= 1e-12 * b.max(1e-300));
        }

        #[test]
        fn rabi_is_monotone(i in 0.0f64..1e4, di in 0.0f64..10.0) {
            prop_assert!(rabi_from_intensity(i + di, 5.0).unwrap() >= rabi_from_intensity(i, 5.0).unwrap());
        }

        #[test]
        fn khz_round_trip(nu in -1e6f64..1e6) {
            let back = angular_to_khz(khz_to_angular(nu));
            prop_assert!((back - nu).abs() <= 1e-12 * nu.abs());
            let back = angular_to_mhz(mhz_to_angular(nu));
            prop_assert!((back - nu).abs() <= 1e-12 * nu.abs());
        }

        #[test]
        fn validation_is_idempotent(starts in proptest::collection::vec(0.0f64..100.0, 0..6)) {
            let s = build_pr_yso_scheme();
            let pairs = [("5", "2"), ("3", "5"), ("1", "5")];
            let seq: PulseSequence = starts
                .iter()
                .enumerate()
                .map(|(i, &t)| Pulse::rectangular(&format!("p{i}"), pairs[i % 3], t, 1.0, 1.0))
                .collect();
            let once = validate_pulse_sequence(&seq, &s).unwrap();
            let twice = validate_pulse_sequence(&once.to_sequence(), &s).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
