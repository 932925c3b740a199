//! Simulation and analysis of self-induced slow light in a spectral-hole-burning
//! medium, and of its switching by a control field acting on the shelved
//! excited-state population.
//!
//! Units used throughout the library: time in microseconds, angular
//! frequencies and rates in rad/μs. Configuration-facing values (kHz, MHz)
//! are ordinary frequencies and are converted with [`model::khz_to_angular`]
//! and friends.

pub mod analysis;
pub mod liouville;
pub mod model;
pub mod propagation;
pub mod spectra;

mod fft;

pub use analysis::{OscillationEstimate, SqrtLawFit};
pub use liouville::{DensityMatrix, TimeSeries};
pub use model::{LevelScheme, Pulse, PulseSequence, RelaxationSpec, ScenarioConfig};
pub use propagation::{OpticalPulseTrace, ProbePulseSpec};
pub use spectra::{AbsorptionSpectrum, HoleBurnConfig};
