//! Hole-burnt absorption profiles, their minimal-phase dispersion and the
//! resulting group delay.
//!
//! Frequencies are angular detunings in rad/μs on a uniform grid whose zero
//! is the probe reference frequency. The phase φ(ω) is the spectral phase a
//! field picks up through the sample, so that a field spectrum multiplied
//! by `exp(−αL/2 + iφ)` is the transmitted spectrum and dφ/dω is the group
//! delay in μs.

use num_complex::Complex64;
use thiserror::Error;

use crate::fft;
use crate::model::khz_to_angular;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("hole configuration: {0}")]
    InvalidConfig(String),
    #[error("grid too coarse: {points_per_fwhm:.1} points per hole FWHM, need at least {required}")]
    GridTooCoarse { points_per_fwhm: f64, required: f64 },
    #[error("grid too narrow: span is {span_fwhm:.1} hole FWHM, need at least {required}")]
    GridTooNarrow { span_fwhm: f64, required: f64 },
    #[error("grid length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("grid is not uniform near index {0}")]
    NonUniformGrid(usize),
    #[error("absorption is negative ({value}) at {detuning} rad/us")]
    NegativeAbsorption { detuning: f64, value: f64 },
    #[error("absorption not settled at the grid edges (relative deviation {0:e} > 1e-3)")]
    EdgesNotSettled(f64),
    #[error("phase has not been computed; run kramers_kronig first")]
    PhaseMissing,
    #[error("frequency {0} rad/us is outside the central half of the grid")]
    OutsideCentralHalf(f64),
}

pub type Result<T, E = SpectrumError> = std::result::Result<T, E>;

pub const MIN_SPAN_FWHM: f64 = 20.0;
pub const MIN_POINTS_PER_FWHM: f64 = 50.0;
const EDGE_SETTLE_TOL: f64 = 1e-3;

/// Extra Lorentzian feature with the main hole's width. Positive `depth`
/// removes absorption, negative adds it (anti-hole).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideHole {
    pub center: f64,
    pub depth: f64,
}

/// Parametric hole: αL(ω) = D·(1 − d·Λ(ω − ω_h) − Σ d_k·Λ(ω − ω_k)),
/// with Λ a unit-peak Lorentzian of FWHM Γ_h.
#[derive(Debug, Clone, PartialEq)]
pub struct HoleBurnConfig {
    /// Background optical depth α0·L.
    pub optical_depth: f64,
    /// Hole centre, rad/μs.
    pub center: f64,
    /// Fractional absorption removed at the centre.
    pub depth: f64,
    /// Hole FWHM, rad/μs.
    pub fwhm: f64,
    pub side_holes: Vec<SideHole>,
}

impl HoleBurnConfig {
    pub fn new(optical_depth: f64, depth: f64, fwhm: f64) -> Self {
        Self {
            optical_depth,
            center: 0.0,
            depth,
            fwhm,
            side_holes: Vec::new(),
        }
    }

    /// Hole burnt by a jittering laser: FWHM = 2·(jitter + homogeneous
    /// linewidth), both in kHz.
    pub fn from_jitter(optical_depth: f64, depth: f64, jitter_khz: f64, homogeneous_khz: f64) -> Self {
        Self::new(optical_depth, depth, khz_to_angular(2.0 * (jitter_khz + homogeneous_khz)))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SpectrumError::InvalidConfig(m));
        if !(self.optical_depth >= 0.0) {
            return bad(format!("optical depth {} must be >= 0", self.optical_depth));
        }
        if !(0.0..=1.0).contains(&self.depth) {
            return bad(format!("hole depth {} must lie in [0, 1]", self.depth));
        }
        if !(self.fwhm > 0.0 && self.fwhm.is_finite()) {
            return bad(format!("hole FWHM {} must be > 0", self.fwhm));
        }
        if !self.center.is_finite() || self.side_holes.iter().any(|s| !(s.center.is_finite() && s.depth.is_finite())) {
            return bad("non-finite hole position".into());
        }
        Ok(())
    }

    fn lorentzian(&self, x: f64) -> f64 {
        let hw = 0.5 * self.fwhm;
        hw * hw / (x * x + hw * hw)
    }

    /// αL at detuning ω.
    pub fn alpha_l(&self, omega: f64) -> f64 {
        let mut removed = self.depth * self.lorentzian(omega - self.center);
        for s in &self.side_holes {
            removed += s.depth * self.lorentzian(omega - s.center);
        }
        self.optical_depth * (1.0 - removed)
    }

    /// Residual optical depth at the hole centre.
    pub fn residual_depth(&self) -> f64 {
        self.alpha_l(self.center)
    }
}

/// Uniform grid ω_k = (k − N/2)·step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub len: usize,
    pub step: f64,
}

impl FrequencyGrid {
    /// Smallest power-of-two grid with at least `points_per_fwhm` points per
    /// FWHM spanning at least `span_fwhm` FWHM.
    pub fn for_width(fwhm: f64, span_fwhm: f64, points_per_fwhm: f64) -> Self {
        let step = fwhm / points_per_fwhm;
        let len = ((span_fwhm * points_per_fwhm).ceil() as usize).next_power_of_two();
        Self { len, step }
    }

    pub fn frequency(&self, k: usize) -> f64 {
        (k as f64 - (self.len / 2) as f64) * self.step
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.frequency(k)).collect()
    }

    pub fn span(&self) -> f64 {
        self.len as f64 * self.step
    }

    pub fn first(&self) -> f64 {
        self.frequency(0)
    }

    pub fn last(&self) -> f64 {
        self.frequency(self.len - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionSpectrum {
    pub grid: FrequencyGrid,
    /// Optical depth per grid point.
    pub alpha_l: Vec<f64>,
    /// Spectral phase per grid point, radians; zero until computed.
    pub phase: Vec<f64>,
    pub phase_computed: bool,
    /// Hole centre the spectrum was built around, rad/μs.
    pub hole_center: f64,
}

impl AbsorptionSpectrum {
    /// Spectrum from tabulated detunings (must be uniform and of
    /// power-of-two length) and optical depths.
    pub fn from_samples(detunings: &[f64], alpha_l: Vec<f64>, hole_center: f64) -> Result<Self> {
        let n = detunings.len();
        if n != alpha_l.len() || n < 8 {
            return Err(SpectrumError::InvalidConfig(format!(
                "{} detunings vs {} absorption values (need at least 8)",
                n,
                alpha_l.len()
            )));
        }
        if !n.is_power_of_two() {
            return Err(SpectrumError::NotPowerOfTwo(n));
        }
        let step = detunings[1] - detunings[0];
        if !(step > 0.0) {
            return Err(SpectrumError::NonUniformGrid(0));
        }
        for k in 1..n {
            let d = detunings[k] - detunings[k - 1];
            if (d - step).abs() > 1e-9 * step.max(detunings[k].abs() * 1e-3) {
                return Err(SpectrumError::NonUniformGrid(k));
            }
        }
        let grid = FrequencyGrid { len: n, step };
        if (grid.first() - detunings[0]).abs() > 1e-6 * step {
            return Err(SpectrumError::InvalidConfig("grid must be centred with zero at index N/2".into()));
        }
        if let Some(k) = alpha_l.iter().position(|a| !(*a >= 0.0)) {
            return Err(SpectrumError::NegativeAbsorption {
                detuning: detunings[k],
                value: alpha_l[k],
            });
        }
        Ok(Self {
            grid,
            phase: vec![0.0; n],
            alpha_l,
            phase_computed: false,
            hole_center,
        })
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.grid.frequencies()
    }

    fn interpolate(&self, values: &[f64], omega: f64) -> f64 {
        let x = (omega - self.grid.first()) / self.grid.step;
        if x <= 0.0 {
            return values[0];
        }
        let n = values.len();
        if x >= (n - 1) as f64 {
            return values[n - 1];
        }
        let i = x.floor() as usize;
        let f = x - i as f64;
        values[i] * (1.0 - f) + values[i + 1] * f
    }

    /// αL at ω, linearly interpolated and held constant beyond the grid.
    pub fn alpha_at(&self, omega: f64) -> f64 {
        self.interpolate(&self.alpha_l, omega)
    }

    /// φ at ω, linearly interpolated and held constant beyond the grid.
    pub fn phase_at(&self, omega: f64) -> f64 {
        self.interpolate(&self.phase, omega)
    }

    /// Amplitude transfer function exp(−αL/2 + iφ) at ω.
    pub fn transfer(&self, omega: f64) -> Complex64 {
        Complex64::from_polar((-0.5 * self.alpha_at(omega)).exp(), self.phase_at(omega))
    }
}

/// Absorption profile of a hole on a grid, phase left empty.
pub fn hole_spectrum(cfg: &HoleBurnConfig, grid: FrequencyGrid) -> Result<AbsorptionSpectrum> {
    cfg.validate()?;
    if !grid.len.is_power_of_two() {
        return Err(SpectrumError::NotPowerOfTwo(grid.len));
    }
    let ppf = cfg.fwhm / grid.step;
    if ppf < MIN_POINTS_PER_FWHM * (1.0 - 1e-12) {
        return Err(SpectrumError::GridTooCoarse {
            points_per_fwhm: ppf,
            required: MIN_POINTS_PER_FWHM,
        });
    }
    let span = grid.span() / cfg.fwhm;
    if span < MIN_SPAN_FWHM {
        return Err(SpectrumError::GridTooNarrow {
            span_fwhm: span,
            required: MIN_SPAN_FWHM,
        });
    }
    if cfg.center.abs() > 0.25 * grid.span() {
        return Err(SpectrumError::InvalidConfig(format!(
            "hole centre {} rad/us lies outside the central half of the grid",
            cfg.center
        )));
    }
    let freqs = grid.frequencies();
    let alpha_l: Vec<f64> = freqs.iter().map(|&w| cfg.alpha_l(w)).collect();
    if let Some(k) = alpha_l.iter().position(|&a| a < 0.0) {
        return Err(SpectrumError::NegativeAbsorption {
            detuning: freqs[k],
            value: alpha_l[k],
        });
    }
    Ok(AbsorptionSpectrum {
        grid,
        phase: vec![0.0; grid.len],
        alpha_l,
        phase_computed: false,
        hole_center: cfg.center,
    })
}

/// Zero-padding factor applied before the discrete Hilbert transform.
const KK_PADDING: usize = 4;

/// Fills φ(ω) with the minimal-phase partner of the absorption:
/// φ = H[−αL/2], H the Hilbert transform (1/π) PV ∫ f(ω')/(ω − ω') dω'.
///
/// The level of the outermost samples is subtracted (a constant has zero
/// Hilbert transform), the remainder is zero-padded to 4N so the circular
/// FFT convolution approximates the linear one, and H is applied as
/// multiplication by −i·sgn in the conjugate domain. No taper is used: the
/// profile is required to be flat at the edges instead.
pub fn kramers_kronig(spectrum: &AbsorptionSpectrum) -> Result<AbsorptionSpectrum> {
    let n = spectrum.alpha_l.len();
    let a = &spectrum.alpha_l;
    let level = 0.5 * (a[0] + a[n - 1]);
    let edge = (n / 16).max(2);
    let edge_dev = a[..edge]
        .iter()
        .chain(&a[n - edge..])
        .map(|v| (v - level).abs())
        .fold(0.0, f64::max);
    let range = a.iter().map(|v| (v - level).abs()).fold(0.0, f64::max);
    let scale = level.abs().max(range);
    let rel = if scale > 0.0 { edge_dev / scale } else { 0.0 };
    if rel > EDGE_SETTLE_TOL {
        return Err(SpectrumError::EdgesNotSettled(rel));
    }

    let m = KK_PADDING * n;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (b, v) in buf.iter_mut().zip(a) {
        *b = Complex64::new(-0.5 * (v - level), 0.0);
    }
    fft::forward(&mut buf);
    for (k, z) in buf.iter_mut().enumerate() {
        let s = fft::signed_bin(k, m);
        *z *= if s > 0 && 2 * k != m {
            Complex64::new(0.0, -1.0)
        } else if s < 0 {
            Complex64::new(0.0, 1.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    fft::inverse(&mut buf);

    let mut out = spectrum.clone();
    out.phase = buf[..n].iter().map(|z| z.re).collect();
    out.phase_computed = true;
    Ok(out)
}

/// τ_g = dφ/dω at `omega` (μs), fourth-order central differences on the
/// grid, linearly interpolated between grid points.
pub fn group_delay(spectrum: &AbsorptionSpectrum, omega: f64) -> Result<f64> {
    if !spectrum.phase_computed {
        return Err(SpectrumError::PhaseMissing);
    }
    let g = spectrum.grid;
    if omega.abs() > 0.25 * g.span() {
        return Err(SpectrumError::OutsideCentralHalf(omega));
    }
    let p = &spectrum.phase;
    let h = g.step;
    let deriv = |i: usize| (p[i - 2] - 8.0 * p[i - 1] + 8.0 * p[i + 1] - p[i + 2]) / (12.0 * h);
    let x = (omega - g.first()) / h;
    let i = x.floor() as usize;
    let f = x - i as f64;
    Ok(if f == 0.0 {
        deriv(i)
    } else {
        deriv(i) * (1.0 - f) + deriv(i + 1) * f
    })
}
