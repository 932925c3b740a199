use nalgebra::DMatrix;
use num_complex::Complex64;

use super::LiouvilleError;
use crate::model::{LevelScheme, RelaxationSpec};

/// Relaxation part of the master equation resolved to level indices.
///
/// Population decay e→g is a Lindblad channel with jump operator
/// √Γ |g⟩⟨e|. Pairs with a configured total coherence decay get the extra
/// pure dephasing needed to reach that total.
#[derive(Debug, Clone, PartialEq)]
pub struct Dissipator {
    n: usize,
    channels: Vec<(usize, usize, f64)>,
    /// Total decay of each off-diagonal element, row-major, diagonal unused.
    coherence: Vec<f64>,
}

impl Dissipator {
    pub fn new(scheme: &LevelScheme, relax: &RelaxationSpec) -> Result<Self, LiouvilleError> {
        relax.check(scheme)?;
        let n = scheme.len();
        let mut channels = Vec::new();
        let mut out = vec![0.0; n];
        for ((from, to), &rate) in &relax.population_decay {
            let (e, g) = (scheme.index(from)?, scheme.index(to)?);
            if rate > 0.0 && e != g {
                channels.push((e, g, rate));
                out[e] += rate;
            }
        }
        let mut coherence = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    coherence[i * n + j] = 0.5 * (out[i] + out[j]);
                }
            }
        }
        for ((a, b), &total) in &relax.coherence_decay_total {
            let (i, j) = (scheme.index(a)?, scheme.index(b)?);
            if i == j {
                continue;
            }
            // below the floor: warned about in `check`, no extra dephasing
            let rate = total.max(coherence[i * n + j]);
            coherence[i * n + j] = rate;
            coherence[j * n + i] = rate;
        }
        Ok(Self { n, channels, coherence })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Total decay rate of ρ_ij.
    pub fn coherence_rate(&self, i: usize, j: usize) -> f64 {
        self.coherence[i * self.n + j]
    }

    /// Adds D(ρ) to `out` (row-major buffers).
    pub(crate) fn apply(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        for &(e, g, rate) in &self.channels {
            let flow = rate * rho[e * n + e];
            out[g * n + g] += flow;
            out[e * n + e] -= flow;
        }
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    out[i * n + j] -= self.coherence[i * n + j] * rho[i * n + j];
                }
            }
        }
    }
}

/// −i[H, ρ] + D(ρ) on row-major buffers. The commutator sums in the same
/// order for (i, j) and (j, i), so Hermitian input gives bit-exact Hermitian
/// output.
pub(crate) fn rhs_into(h: &[Complex64], rho: &[Complex64], diss: &Dissipator, out: &mut [Complex64]) {
    let n = diss.n;
    let minus_i = Complex64::new(0.0, -1.0);
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += h[i * n + k] * rho[k * n + j] - rho[i * n + k] * h[k * n + j];
            }
            out[i * n + j] = minus_i * acc;
        }
    }
    diss.apply(rho, out);
}

/// dρ/dt of the master equation.
pub fn lindblad_rhs(
    rho: &DMatrix<Complex64>,
    h: &DMatrix<Complex64>,
    diss: &Dissipator,
) -> Result<DMatrix<Complex64>, LiouvilleError> {
    let n = diss.dim();
    for m in [rho, h] {
        if m.nrows() != n || m.ncols() != n {
            return Err(LiouvilleError::DimensionMismatch {
                expected: n,
                found: (m.nrows(), m.ncols()),
            });
        }
    }
    let rho_rm: Vec<Complex64> = rho.transpose().iter().copied().collect();
    let h_rm: Vec<Complex64> = h.transpose().iter().copied().collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    rhs_into(&h_rm, &rho_rm, diss, &mut out);
    Ok(DMatrix::from_row_slice(n, n, &out))
}

/// Matrix of the linear map ρ ↦ dρ/dt acting on row-major vec(ρ).
pub(crate) fn superoperator(h: &[Complex64], diss: &Dissipator) -> DMatrix<Complex64> {
    let n = diss.n;
    let dim = n * n;
    let mut l = DMatrix::zeros(dim, dim);
    let mut basis = vec![Complex64::new(0.0, 0.0); dim];
    let mut col = vec![Complex64::new(0.0, 0.0); dim];
    for k in 0..dim {
        basis.fill(Complex64::new(0.0, 0.0));
        basis[k] = Complex64::new(1.0, 0.0);
        rhs_into(h, &basis, diss, &mut col);
        for (r, v) in col.iter().enumerate() {
            l[(r, k)] = *v;
        }
    }
    l
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_pr_yso_scheme, pr_yso_relaxation, Role};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_level() -> LevelScheme {
        LevelScheme::new(&[("g", Role::Ground), ("e", Role::Excited)], &[("g", "e")]).unwrap()
    }

    #[test]
    fn rate_equation_for_single_decay() {
        let s = build_pr_yso_scheme();
        let gamma = 0.7;
        let d = Dissipator::new(&s, &RelaxationSpec::new().decay("5", "3", gamma)).unwrap();
        let mut rho = DMatrix::zeros(4, 4);
        rho[(1, 1)] = c(0.6, 0.0);
        rho[(3, 3)] = c(0.4, 0.0);
        let out = lindblad_rhs(&rho, &DMatrix::zeros(4, 4), &d).unwrap();
        assert_relative_eq!(out[(3, 3)].re, -gamma * 0.4, max_relative = 1e-15);
        assert_relative_eq!(out[(2, 2)].re, gamma * 0.4, max_relative = 1e-15);
        assert_eq!(out[(1, 1)], c(0.0, 0.0));
    }

    #[test]
    fn dephasing_completion_reaches_total_rate() {
        let s = build_pr_yso_scheme();
        let relax = pr_yso_relaxation(1.0, 50.0, 0.0);
        let d = Dissipator::new(&s, &relax).unwrap();
        let (i2, i5) = (s.index("2").unwrap(), s.index("5").unwrap());
        assert_relative_eq!(d.coherence_rate(i2, i5), relax.coherence_rate("2", "5").unwrap());
        // ground pair configured at 0: kept at the population floor (0 here)
        assert_eq!(d.coherence_rate(i2, s.index("3").unwrap()), 0.0);
        // unconfigured 1-3 pair: floor only
        assert_eq!(d.coherence_rate(s.index("1").unwrap(), s.index("3").unwrap()), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let d = Dissipator::new(&two_level(), &RelaxationSpec::new()).unwrap();
        let err = lindblad_rhs(&DMatrix::zeros(3, 3), &DMatrix::zeros(2, 2), &d).unwrap_err();
        assert!(matches!(err, LiouvilleError::DimensionMismatch { .. }));
    }

    #[test]
    fn weak_drive_coherence_limit() {
        // Im ρ_ge = Ω/(2γ) in the weak-drive steady state: check dρ_ge/dt
        // vanishes there with all population in |g⟩.
        let gamma = 2.0;
        let omega = 1e-3;
        let s = two_level();
        let d = Dissipator::new(&s, &RelaxationSpec::new().decay("e", "g", 1.0).coherence("g", "e", gamma)).unwrap();
        let mut h = DMatrix::zeros(2, 2);
        h[(0, 1)] = c(omega / 2.0, 0.0);
        h[(1, 0)] = c(omega / 2.0, 0.0);
        let mut rho = DMatrix::zeros(2, 2);
        rho[(0, 0)] = c(1.0, 0.0);
        rho[(0, 1)] = c(0.0, omega / (2.0 * gamma));
        rho[(1, 0)] = c(0.0, -omega / (2.0 * gamma));
        let out = lindblad_rhs(&rho, &h, &d).unwrap();
        assert!(out[(0, 1)].norm() < 1e-15);
    }

    fn arb_hermitian(n: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
        proptest::collection::vec(-1.0f64..1.0, 2 * n * n).prop_map(move |v| {
            let m = DMatrix::from_fn(n, n, |i, j| c(v[2 * (i * n + j)], v[2 * (i * n + j) + 1]));
            (&m + m.adjoint()) * c(0.5, 0.0)
        })
    }

    proptest! {
        #[test]
        fn rhs_is_traceless_and_hermitian(rho in arb_hermitian(4), h in arb_hermitian(4)) {
            let s = build_pr_yso_scheme();
            let relax = pr_yso_relaxation(1.0, 50.0, 100.0).decay("5", "1", 0.3);
            let d = Dissipator::new(&s, &relax).unwrap();
            let out = lindblad_rhs(&rho, &h, &d).unwrap();
            prop_assert!(out.trace().norm() <= 1e-14);
            prop_assert_eq!(out.adjoint(), out);
        }
    }
}
