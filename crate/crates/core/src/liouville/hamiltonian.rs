//! Rotating-wave Hamiltonians for pulse sequences.
//!
//! The frame is fixed for the whole sequence. For every connected component
//! of driven transitions one ground level is put at zero energy and the
//! others follow from the detuning of the first pulse seen on each
//! transition (E_e = E_g − δ). Pulses whose detuning disagrees with the
//! frame (a later pulse on the same transition, or a transition closing a
//! loop) carry the difference as a phase ramp, which is exact.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::LiouvilleError;
use crate::model::{CheckedSequence, LevelScheme, Pulse, Transition};

#[derive(Debug, Clone)]
struct Drive {
    pulse: Pulse,
    transition: Transition,
    /// Detuning left over after the frame, rad/μs.
    residual: f64,
}

/// Hamiltonian of a checked pulse sequence, ħ = 1, in rad/μs.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    n: usize,
    energies: Vec<f64>,
    drives: Vec<Drive>,
}

impl Hamiltonian {
    pub fn new(scheme: &LevelScheme, pulses: &CheckedSequence) -> Self {
        let n = scheme.len();
        let active: Vec<(&Pulse, Transition)> = pulses.iter().filter(|(p, _)| !p.is_noop()).collect();

        // frame detuning per transition: first pulse wins
        let mut edges: Vec<(Transition, f64)> = Vec::new();
        for (p, t) in &active {
            if !edges.iter().any(|(e, _)| e == t) {
                edges.push((*t, p.detuning));
            }
        }
        let mut energies = vec![0.0; n];
        let mut placed = vec![false; n];
        for root in 0..n {
            if placed[root] {
                continue;
            }
            placed[root] = true;
            let mut queue = VecDeque::from([root]);
            while let Some(level) = queue.pop_front() {
                for (t, detuning) in &edges {
                    let (other, energy) = if t.ground == level {
                        (t.excited, energies[level] - detuning)
                    } else if t.excited == level {
                        (t.ground, energies[level] + detuning)
                    } else {
                        continue;
                    };
                    if !placed[other] {
                        placed[other] = true;
                        energies[other] = energy;
                        queue.push_back(other);
                    }
                }
            }
        }

        let drives = active
            .into_iter()
            .map(|(p, t)| Drive {
                pulse: p.clone(),
                transition: t,
                residual: p.detuning - (energies[t.ground] - energies[t.excited]),
            })
            .collect();
        Self { n, energies, drives }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Diagonal of the Hamiltonian in the rotating frame.
    pub fn frame_energies(&self) -> &[f64] {
        &self.energies
    }

    /// First pair of pulses that drive the same transition at different
    /// frequencies while their envelopes overlap.
    pub fn bichromatic_overlap(&self) -> Option<(String, String)> {
        for (i, a) in self.drives.iter().enumerate() {
            for b in &self.drives[i + 1..] {
                if a.transition != b.transition || a.pulse.detuning == b.pulse.detuning {
                    continue;
                }
                let (a0, a1) = a.pulse.support();
                let (b0, b1) = b.pulse.support();
                if a0 < b1 && b0 < a1 {
                    return Some((a.pulse.label.clone(), b.pulse.label.clone()));
                }
            }
        }
        None
    }

    /// Writes H(t) into a row-major `n×n` buffer.
    pub(crate) fn fill(&self, t: f64, h: &mut [Complex64]) {
        let n = self.n;
        h.fill(Complex64::new(0.0, 0.0));
        for (i, &e) in self.energies.iter().enumerate() {
            h[i * n + i] = Complex64::new(e, 0.0);
        }
        for d in &self.drives {
            let omega = d.pulse.envelope(t);
            if omega == 0.0 {
                continue;
            }
            let coupling = Complex64::from_polar(0.5 * omega, d.pulse.phase + d.residual * t);
            let (g, e) = (d.transition.ground, d.transition.excited);
            h[g * n + e] += coupling;
            h[e * n + g] += coupling.conj();
        }
    }

    /// H(t). Fails if two pulses on one transition with different detunings
    /// are both on at `t`.
    pub fn at(&self, t: f64) -> Result<DMatrix<Complex64>, LiouvilleError> {
        let on: Vec<&Drive> = self.drives.iter().filter(|d| d.pulse.envelope(t) != 0.0).collect();
        for (i, a) in on.iter().enumerate() {
            if let Some(b) = on[i + 1..]
                .iter()
                .find(|b| b.transition == a.transition && b.pulse.detuning != a.pulse.detuning)
            {
                return Err(LiouvilleError::Bichromatic {
                    first: a.pulse.label.clone(),
                    second: b.pulse.label.clone(),
                });
            }
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n * self.n];
        self.fill(t, &mut buf);
        Ok(DMatrix::from_row_slice(self.n, self.n, &buf))
    }
}

/// H(t)/ħ for a validated pulse sequence.
pub fn build_hamiltonian(
    scheme: &LevelScheme,
    pulses: &CheckedSequence,
    t: f64,
) -> Result<DMatrix<Complex64>, LiouvilleError> {
    Hamiltonian::new(scheme, pulses).at(t)
}
