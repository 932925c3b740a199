//! Adaptive Dormand-Prince 5(4) integrator with dense output onto a
//! caller-supplied sample grid.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} us (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("maximum number of steps ({steps}) exceeded at t = {t} us")]
    TooManySteps { t: f64, steps: usize },
    #[error("tolerance not achievable: {0}")]
    ToleranceNotAchievable(String),
    #[error("non-finite state at t = {t} us")]
    NonFinite { t: f64 },
}

/// Interpolant used between accepted steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenseOutput {
    /// Cubic Hermite from the endpoint values and slopes.
    Hermite,
    /// Fourth-order continuous extension of the Dormand-Prince pair
    /// (Hermite plus one extra stage combination).
    Dopri,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
    pub dense: DenseOutput,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
            dense: DenseOutput::Dopri,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// 5th minus embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
            err: vec![0.0; n],
        }
    }
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    fn check_tolerances(&self) -> Result<(), OdeError> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(OdeError::ToleranceNotAchievable(format!(
                "rtol={} atol={} must be positive",
                self.rtol, self.atol
            )));
        }
        if self.rtol < 100.0 * f64::EPSILON {
            return Err(OdeError::ToleranceNotAchievable(format!(
                "rtol={:e} is below 100 machine epsilons",
                self.rtol
            )));
        }
        Ok(())
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1`, calling `emit(i, y)` for
    /// every `samples[i]` inside `[t0, t1]` (samples must be sorted). `y` is
    /// overwritten with the state at `t1`.
    ///
    /// Returns the number of accepted steps.
    pub fn integrate<F, E>(
        &self,
        mut f: F,
        t0: f64,
        t1: f64,
        y: &mut [f64],
        samples: &[f64],
        mut emit: E,
    ) -> Result<usize, OdeError>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        E: FnMut(usize, &[f64]),
    {
        self.check_tolerances()?;
        let n = y.len();
        let mut next_sample = samples.partition_point(|&s| s < t0);
        let mut interp = vec![0.0; n];
        // sample exactly at t0
        while next_sample < samples.len() && samples[next_sample] == t0 {
            emit(next_sample, y);
            next_sample += 1;
        }
        if t1 <= t0 {
            return Ok(0);
        }

        let mut st = Stages::new(n);
        f(t0, y, &mut st.k[0]);
        let mut t = t0;
        let mut h = self.initial_step(&mut f, t0, y, &mut st, t1 - t0);
        let mut steps = 0usize;
        let mut accepted = 0usize;

        while t < t1 {
            if steps >= self.max_steps {
                return Err(OdeError::TooManySteps { t, steps });
            }
            steps += 1;
            let last = t + h >= t1 || (t1 - (t + h)) < 1e-12 * t1.abs().max(1.0);
            if last {
                h = t1 - t;
            }
            self.step(&mut f, t, h, y, &mut st);
            let err = self.error_norm(y, &st);
            if !err.is_finite() {
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(OdeError::NonFinite { t });
                }
                h *= FAC_MIN;
                continue;
            }
            if err <= 1.0 {
                let t_new = if last { t1 } else { t + h };
                // stage 7 is f(t_new, y_new) (first-same-as-last)
                while next_sample < samples.len() && samples[next_sample] <= t_new {
                    let s = samples[next_sample];
                    if s == t_new {
                        emit(next_sample, &st.y_new);
                    } else {
                        self.dense_eval(y, &st, h, (s - t) / h, &mut interp);
                        emit(next_sample, &interp);
                    }
                    next_sample += 1;
                }
                y.copy_from_slice(&st.y_new);
                let (k0, rest) = st.k.split_at_mut(1);
                k0[0].copy_from_slice(&rest[5]);
                t = t_new;
                accepted += 1;
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(OdeError::NonFinite { t });
                }
                let fac = (SAFETY * err.max(1e-10).powf(-0.2)).clamp(FAC_MIN, FAC_MAX);
                h = (h * fac).min(self.h_max);
            } else {
                let fac = (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
                h *= fac;
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(OdeError::StepUnderflow { t, h });
                }
            }
        }
        Ok(accepted)
    }

    fn initial_step<F>(&self, f: &mut F, t0: f64, y: &[f64], st: &mut Stages, span: f64) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len() as f64;
        let scale = |v: f64| self.atol + self.rtol * v.abs();
        let d0 = (y.iter().map(|&v| (v / scale(v)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (y
            .iter()
            .zip(&st.k[0])
            .map(|(&v, &dv)| (dv / scale(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span).min(self.h_max);
        for ((tmp, &v), &dv) in st.tmp.iter_mut().zip(y).zip(&st.k[0]) {
            *tmp = v + h0 * dv;
        }
        let (k0, rest) = st.k.split_at_mut(1);
        f(t0 + h0, &st.tmp, &mut rest[0]);
        let d2 = (y
            .iter()
            .zip(k0[0].iter().zip(&rest[0]))
            .map(|(&v, (&a, &b))| ((b - a) / scale(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span).min(self.h_max)
    }

    fn step<F>(&self, f: &mut F, t: f64, h: f64, y: &[f64], st: &mut Stages)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        macro_rules! stage {
            ($dst:expr, $c:expr, [$(($a:expr, $i:expr)),*]) => {{
                for j in 0..n {
                    st.tmp[j] = y[j] + h * (0.0 $(+ $a * st.k[$i][j])*);
                }
                let (_, rest) = st.k.split_at_mut($dst);
                f(t + $c * h, &st.tmp, &mut rest[0]);
            }};
        }
        stage!(1, C2, [(A21, 0)]);
        stage!(2, C3, [(A31, 0), (A32, 1)]);
        stage!(3, C4, [(A41, 0), (A42, 1), (A43, 2)]);
        stage!(4, C5, [(A51, 0), (A52, 1), (A53, 2), (A54, 3)]);
        stage!(5, 1.0, [(A61, 0), (A62, 1), (A63, 2), (A64, 3), (A65, 4)]);
        let k = &st.k;
        for j in 0..n {
            st.y_new[j] = y[j] + h * (A71 * k[0][j] + A73 * k[2][j] + A74 * k[3][j] + A75 * k[4][j] + A76 * k[5][j]);
        }
        let (_, rest) = st.k.split_at_mut(6);
        f(t + h, &st.y_new, &mut rest[0]);
        let k = &st.k;
        for j in 0..n {
            st.err[j] = h
                * (E1 * k[0][j] + E3 * k[2][j] + E4 * k[3][j] + E5 * k[4][j] + E6 * k[5][j] + E7 * k[6][j]);
        }
    }

    fn error_norm(&self, y: &[f64], st: &Stages) -> f64 {
        let n = y.len() as f64;
        let sum: f64 = y
            .iter()
            .zip(&st.y_new)
            .zip(&st.err)
            .map(|((&a, &b), &e)| {
                let sc = self.atol + self.rtol * a.abs().max(b.abs());
                (e / sc).powi(2)
            })
            .sum();
        (sum / n).sqrt()
    }

    fn dense_eval(&self, y: &[f64], st: &Stages, h: f64, theta: f64, out: &mut [f64]) {
        let th1 = 1.0 - theta;
        let k = &st.k;
        for j in 0..y.len() {
            let dy = st.y_new[j] - y[j];
            let bspl = h * k[0][j] - dy;
            let c4 = dy - h * k[6][j] - bspl;
            let c5 = match self.dense {
                DenseOutput::Hermite => 0.0,
                DenseOutput::Dopri => {
                    h * (D1 * k[0][j] + D3 * k[2][j] + D4 * k[3][j] + D5 * k[4][j] + D6 * k[5][j] + D7 * k[6][j])
                }
            };
            out[j] = y[j] + theta * (dy + th1 * (bspl + theta * (c4 + th1 * c5)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = -y[0];
    }

    fn max_sample_error(dense: DenseOutput, rtol: f64) -> f64 {
        let solver = Dopri5 {
            dense,
            ..Dopri5::new(rtol, rtol * 1e-2)
        };
        let samples: Vec<f64> = (0..=2000).map(|i| i as f64 * 0.01).collect();
        let mut y = vec![0.0, 1.0];
        let mut worst = 0.0_f64;
        solver
            .integrate(oscillator, 0.0, 20.0, &mut y, &samples, |i, s| {
                worst = worst.max((s[0] - samples[i].sin()).abs());
            })
            .unwrap();
        worst
    }

    #[test]
    fn harmonic_oscillator_accuracy() {
        assert!(max_sample_error(DenseOutput::Dopri, 1e-10) < 1e-8);
        assert!(max_sample_error(DenseOutput::Hermite, 1e-10) < 1e-6);
    }

    #[test]
    fn continuous_extension_beats_hermite() {
        let d = max_sample_error(DenseOutput::Dopri, 1e-6);
        let h = max_sample_error(DenseOutput::Hermite, 1e-6);
        assert!(d < h, "dopri {d:e} hermite {h:e}");
    }

    #[test]
    fn every_sample_is_emitted_once() {
        let samples: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let mut seen = vec![0; samples.len()];
        let mut y = vec![1.0];
        Dopri5::default()
            .integrate(|_, y, dy| dy[0] = -y[0], 0.0, 10.0, &mut y, &samples, |i, _| seen[i] += 1)
            .unwrap();
        assert!(seen.iter().all(|&c| c == 1));
        assert!((y[0] - (-10.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn rejects_unreachable_tolerance() {
        let mut y = vec![1.0];
        let err = Dopri5::new(1e-17, 1e-20)
            .integrate(|_, y, dy| dy[0] = y[0], 0.0, 1.0, &mut y, &[], |_, _| {})
            .unwrap_err();
        assert!(matches!(err, OdeError::ToleranceNotAchievable(_)));
    }

    #[test]
    fn blow_up_reports_failure_time() {
        // y' = y², y(0) = 1 diverges at t = 1
        let mut y = vec![1.0];
        let err = Dopri5::default()
            .integrate(|_, y, dy| dy[0] = y[0] * y[0], 0.0, 2.0, &mut y, &[], |_, _| {})
            .unwrap_err();
        match err {
            OdeError::StepUnderflow { t, .. } | OdeError::NonFinite { t } | OdeError::TooManySteps { t, .. } => {
                assert!((t - 1.0).abs() < 1e-3, "failed at {t}")
            }
            e => panic!("unexpected {e}"),
        }
    }
}
