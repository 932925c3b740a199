//! Density-matrix dynamics: RWA Hamiltonians, the Lindblad master equation,
//! time evolution and steady states.

mod hamiltonian;
mod lindblad;
pub mod ode;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

pub use hamiltonian::{build_hamiltonian, Hamiltonian};
pub use lindblad::{lindblad_rhs, Dissipator};
use ode::{Dopri5, OdeError};

use crate::model::{LevelScheme, ModelError, ScenarioConfig, ValidatedConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LiouvilleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Integration(#[from] OdeError),
    #[error("pulses `{first}` and `{second}` drive the same transition at different frequencies simultaneously")]
    Bichromatic { first: String, second: String },
    #[error("expected {expected}x{expected} matrix, found {found:?}")]
    DimensionMismatch { expected: usize, found: (usize, usize) },
    #[error("invalid time span [{0}, {1}]")]
    InvalidSpan(f64, f64),
    #[error("state invariant violated at t = {t} us: {what}")]
    Invariant { t: f64, what: String },
    #[error("steady state is not unique: generator null space has dimension {dimension}")]
    DegenerateSteadyState { dimension: usize },
    #[error("steady state residual {0:e} exceeds 1e-10")]
    SteadyStateResidual(f64),
}

pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITICITY_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-7;

/// Hermitian, unit-trace state over the ordering of a [`LevelScheme`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(DMatrix<Complex64>);

impl DensityMatrix {
    /// Diagonal state with the given populations and no coherences.
    pub fn from_populations(pops: &[f64]) -> Self {
        let n = pops.len();
        Self(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(pops[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    /// Wraps a matrix without checking invariants.
    pub fn from_matrix(m: DMatrix<Complex64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn population(&self, i: usize) -> f64 {
        self.0[(i, i)].re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.population(i)).collect()
    }

    pub fn element(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// max |ρ − ρ†|.
    pub fn hermiticity_drift(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// (ρ + ρ†)/2.
    pub fn symmetrized(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0))
    }

    /// Trace, Hermiticity, positivity and population-range checks.
    pub fn check(&self) -> Result<(), String> {
        let drift = self.hermiticity_drift();
        if drift > HERMITICITY_TOL {
            return Err(format!("Hermiticity drift {drift:e}"));
        }
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(format!("trace {tr}"));
        }
        for (i, p) in self.populations().into_iter().enumerate() {
            if !(-POSITIVITY_TOL..=1.0 + POSITIVITY_TOL).contains(&p) {
                return Err(format!("population {i} = {p}"));
            }
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(format!("smallest eigenvalue {min:e}"));
        }
        Ok(())
    }

    fn to_reals(&self) -> Vec<f64> {
        let n = self.dim();
        let mut y = Vec::with_capacity(2 * n * n);
        for i in 0..n {
            for j in 0..n {
                let z = self.0[(i, j)];
                y.push(z.re);
                y.push(z.im);
            }
        }
        y
    }

    fn from_reals(n: usize, y: &[f64]) -> Self {
        Self(DMatrix::from_fn(n, n, |i, j| {
            let k = 2 * (i * n + j);
            Complex64::new(y[k], y[k + 1])
        }))
    }
}

/// Sampled evolution on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    /// Symmetrized state at every sample.
    pub states: Vec<DensityMatrix>,
    /// Pulse label → Ω(t) samples, rad/μs.
    pub envelopes: Vec<(String, Vec<f64>)>,
    /// Pulses whose envelope is still on at either end of the span.
    pub clipped: Vec<String>,
    pub warnings: Vec<String>,
    /// Largest Hermiticity drift seen before symmetrization.
    pub max_hermiticity_drift: f64,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn step(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    fn level(&self, label: &str) -> Result<usize, ModelError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| ModelError::UnknownLevel(label.to_string()))
    }

    pub fn population(&self, label: &str) -> Result<Vec<f64>, ModelError> {
        let i = self.level(label)?;
        Ok(self.states.iter().map(|s| s.population(i)).collect())
    }

    /// ρ_ab at every sample.
    pub fn coherence(&self, a: &str, b: &str) -> Result<Vec<Complex64>, ModelError> {
        let (i, j) = (self.level(a)?, self.level(b)?);
        Ok(self.states.iter().map(|s| s.element(i, j)).collect())
    }

    pub fn envelope(&self, pulse: &str) -> Option<&[f64]> {
        self.envelopes.iter().find(|(l, _)| l == pulse).map(|(_, v)| v.as_slice())
    }

    /// ρ_aa − ρ_bb at every sample.
    pub fn population_difference(&self, a: &str, b: &str) -> Result<Vec<f64>, ModelError> {
        let pa = self.population(a)?;
        let pb = self.population(b)?;
        Ok(pa.into_iter().zip(pb).map(|(x, y)| x - y).collect())
    }
}

/// Uniform grid `t0, t0 + dt, …` up to and including `t1` (within rounding).
pub fn sample_grid(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let n = ((t1 - t0) / dt + 1e-9).floor() as usize;
    (0..=n).map(|k| t0 + k as f64 * dt).collect()
}

/// Integrates the master equation of a scenario over `t_span` (μs).
pub fn evolve(config: &ScenarioConfig, t_span: (f64, f64)) -> Result<TimeSeries, LiouvilleError> {
    evolve_validated(&config.validate()?, t_span)
}

pub fn evolve_validated(config: &ValidatedConfig, t_span: (f64, f64)) -> Result<TimeSeries, LiouvilleError> {
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite() && t1 >= t0) {
        return Err(LiouvilleError::InvalidSpan(t0, t1));
    }
    let scheme = &config.scheme;
    let n = scheme.len();
    let ham = Hamiltonian::new(scheme, &config.pulses);
    if let Some((first, second)) = ham.bichromatic_overlap() {
        return Err(LiouvilleError::Bichromatic { first, second });
    }
    let diss = Dissipator::new(scheme, &config.relaxation)?;
    let solver = Dopri5::new(config.solver.rtol, config.solver.atol);

    let times = sample_grid(t0, t1, config.solver.sample_step);
    let mut states: Vec<Option<DensityMatrix>> = vec![None; times.len()];
    let mut failure: Option<LiouvilleError> = None;
    let mut max_drift = 0.0_f64;

    // restart the integrator at envelope discontinuities
    let mut cuts: Vec<f64> = config
        .pulses
        .pulses()
        .iter()
        .flat_map(|p| p.breakpoints())
        .filter(|&b| b > t0 && b < t1)
        .collect();
    cuts.push(t1);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut y = DensityMatrix::from_populations(&config.initial_populations).to_reals();
    let mut hbuf = vec![Complex64::new(0.0, 0.0); n * n];
    let mut rho = vec![Complex64::new(0.0, 0.0); n * n];
    let mut drho = vec![Complex64::new(0.0, 0.0); n * n];
    let mut rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        for (k, z) in rho.iter_mut().enumerate() {
            *z = Complex64::new(y[2 * k], y[2 * k + 1]);
        }
        ham.fill(t, &mut hbuf);
        lindblad::rhs_into(&hbuf, &rho, &diss, &mut drho);
        for (k, z) in drho.iter().enumerate() {
            dy[2 * k] = z.re;
            dy[2 * k + 1] = z.im;
        }
    };
    let mut emit = |i: usize, y: &[f64]| {
        if failure.is_some() {
            return;
        }
        let raw = DensityMatrix::from_reals(n, y);
        let drift = raw.hermiticity_drift();
        max_drift = max_drift.max(drift);
        if drift > HERMITICITY_TOL {
            failure = Some(LiouvilleError::Invariant {
                t: times[i],
                what: format!("Hermiticity drift {drift:e} before symmetrization"),
            });
            return;
        }
        let state = raw.symmetrized();
        if let Err(what) = state.check() {
            failure = Some(LiouvilleError::Invariant { t: times[i], what });
            return;
        }
        states[i] = Some(state);
    };

    let mut from = t0;
    for &to in &cuts {
        solver.integrate(&mut rhs, from, to, &mut y, &times, &mut emit)?;
        from = to;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    let states: Vec<DensityMatrix> = states
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.ok_or_else(|| LiouvilleError::Invariant {
                t: times[i],
                what: "sample not produced".into(),
            })
        })
        .collect::<Result<_, _>>()?;

    let envelopes = config
        .pulses
        .pulses()
        .iter()
        .map(|p| (p.label.clone(), times.iter().map(|&t| p.envelope(t)).collect()))
        .collect();
    let clipped = config
        .pulses
        .pulses()
        .iter()
        .filter(|p| {
            let peak = p.rabi_peak.abs();
            !p.is_noop() && (p.envelope(t0).abs() > 1e-6 * peak || p.envelope(t1).abs() > 1e-6 * peak)
        })
        .map(|p| p.label.clone())
        .collect();

    Ok(TimeSeries {
        labels: scheme.labels().to_vec(),
        times,
        states,
        envelopes,
        clipped,
        warnings: config.warnings.clone(),
        max_hermiticity_drift: max_drift,
    })
}

/// Null-space steady state of the generator for a constant Hamiltonian.
pub fn steady_state(h: &DMatrix<Complex64>, diss: &Dissipator) -> Result<DensityMatrix, LiouvilleError> {
    let n = diss.dim();
    if h.nrows() != n || h.ncols() != n {
        return Err(LiouvilleError::DimensionMismatch {
            expected: n,
            found: (h.nrows(), h.ncols()),
        });
    }
    let h_rm: Vec<Complex64> = h.transpose().iter().copied().collect();
    let l = lindblad::superoperator(&h_rm, diss);
    let svd = l.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let sigma_max = svd.singular_values.max();
    let tol = 1e-10 * sigma_max.max(f64::MIN_POSITIVE);
    let null: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] <= tol)
        .collect();
    if null.len() != 1 {
        return Err(LiouvilleError::DegenerateSteadyState { dimension: null.len() });
    }
    let row = v_t.row(null[0]);
    // V^T rows are conjugated right singular vectors
    let vec: Vec<Complex64> = row.iter().map(|z| z.conj()).collect();
    let mut rho = DMatrix::from_row_slice(n, n, &vec);
    let tr = rho.trace();
    rho /= tr;
    let state = DensityMatrix(rho).symmetrized();
    let residual = lindblad_rhs(state.matrix(), h, diss)?.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if residual > 1e-10 {
        return Err(LiouvilleError::SteadyStateResidual(residual));
    }
    Ok(state)
}

/// Convenience: the scheme labels of a state as (label, population) pairs.
pub fn labelled_populations(scheme: &LevelScheme, state: &DensityMatrix) -> Vec<(String, f64)> {
    scheme.labels().iter().cloned().zip(state.populations()).collect()
}
