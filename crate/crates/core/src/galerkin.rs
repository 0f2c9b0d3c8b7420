//! Truncated Fourier–Galerkin reference solutions.
//!
//! The PDE is projected onto modes `|n| ≤ M`, integrated with classical RK4 on
//! a uniform grid, and trajectory moments are formed by composite Simpson
//! quadrature in time. Only exact up to its own truncation.

use std::io::Write;

use crate::error::{Error, Result};
use crate::index::{canonicalize, enumerate_moment_vector, Frequency, TruncationDegrees};
use crate::model::{HeatModel, InitialData};
use crate::quadrature::simpson_weights;
use crate::scalar::{Complex, Real};
use crate::table::{MeasureTables, MomentTable};

/// Mode amplitudes `u_n(t)` for `|n| ≤ cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinState<T: Real> {
    cutoff: u32,
    modes: Vec<Complex<T>>,
    pub time: T,
}

impl<T: Real> GalerkinState<T> {
    pub fn zeros(cutoff: u32) -> Self {
        Self {
            cutoff,
            modes: vec![Complex::default(); 2 * cutoff as usize + 1],
            time: T::zero(),
        }
    }

    /// Projects the initial condition; coefficients above the cutoff are discarded.
    pub fn from_initial(u0: &InitialData<T>, cutoff: u32) -> Self {
        let mut s = Self::zeros(cutoff);
        for (&n, &c) in u0.coeffs() {
            if n.unsigned_abs() <= cutoff {
                s.set(n, c);
            }
        }
        s
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    /// `u_n`, zero outside the retained band.
    pub fn get(&self, n: Frequency) -> Complex<T> {
        if n.unsigned_abs() > self.cutoff {
            Complex::default()
        } else {
            self.modes[(n + self.cutoff as Frequency) as usize]
        }
    }

    pub fn set(&mut self, n: Frequency, value: Complex<T>) {
        let c = self.cutoff as Frequency;
        assert!(n.abs() <= c, "mode {n} outside cutoff {c}");
        self.modes[(n + c) as usize] = value;
    }

    pub fn modes(&self) -> &[Complex<T>] {
        &self.modes
    }

    pub fn frequencies(&self) -> impl Iterator<Item = Frequency> {
        let c = self.cutoff as Frequency;
        -c..=c
    }

    /// Largest `|u_{-n} - conj(u_n)|`.
    pub fn conjugate_asymmetry(&self) -> T {
        self.frequencies()
            .map(|n| crate::scalar::modulus(self.get(-n) - self.get(n).conj()))
            .fold(T::zero(), |a, b| a.max(b))
    }

    fn product(&self, freqs: &[Frequency]) -> Complex<T> {
        freqs
            .iter()
            .fold(Complex::new(T::one(), T::zero()), |acc, &n| acc * self.get(n))
    }
}

/// Time derivative of every retained mode.
pub fn rhs<T: Real>(model: &HeatModel<T>, state: &GalerkinState<T>) -> Vec<Complex<T>> {
    let c = state.cutoff as Frequency;
    let mut out: Vec<Complex<T>> = state
        .frequencies()
        .map(|n| state.get(n) * (-T::from_i64_lossy((n as i64) * (n as i64))))
        .collect();
    match *model {
        HeatModel::Linear => {}
        HeatModel::DistributedQuadratic { epsilon, m1, m2 } => {
            let (m1, m2) = (m1 as Frequency, m2 as Frequency);
            let f1 = state.get(m1) + state.get(-m1);
            let f2 = state.get(m2) + state.get(-m2);
            out[c as usize] += f1 * f2 * epsilon;
        }
        HeatModel::LocalQuadratic { epsilon } => {
            if epsilon != T::zero() {
                for n in -c..=c {
                    let lo = (n - c).max(-c);
                    let hi = (n + c).min(c);
                    let conv = (lo..=hi).fold(Complex::default(), |acc, m| {
                        acc + state.get(m) * state.get(n - m)
                    });
                    out[(n + c) as usize] += conv * epsilon;
                }
            }
        }
    }
    out
}

/// Uniformly sampled trajectory on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub step: T,
    pub states: Vec<GalerkinState<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn terminal(&self) -> &GalerkinState<T> {
        self.states.last().expect("trajectory has at least two samples")
    }

    pub fn intervals(&self) -> usize {
        self.states.len() - 1
    }

    /// Writes `t, re(u_n), im(u_n), ...` for every retained mode.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let first = &self.states[0];
        let mut header = vec!["t".to_string()];
        for n in first.frequencies() {
            header.push(format!("re_u{n}"));
            header.push(format!("im_u{n}"));
        }
        w.write_record(&header)?;
        for s in &self.states {
            let mut row = vec![format!("{:.16e}", s.time.to_f64_lossy())];
            for v in s.modes() {
                row.push(format!("{:.16e}", v.re.to_f64_lossy()));
                row.push(format!("{:.16e}", v.im.to_f64_lossy()));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn axpy<T: Real>(base: &[Complex<T>], k: &[Complex<T>], a: T) -> Vec<Complex<T>> {
    base.iter().zip(k).map(|(b, k)| *b + *k * a).collect()
}

/// Classical RK4 with fixed `step`, which must divide 1.
pub fn integrate<T: Real>(
    model: &HeatModel<T>,
    u0: &InitialData<T>,
    step: T,
    cutoff: u32,
) -> Result<Trajectory<T>> {
    let step_f = step.to_f64_lossy();
    if !(step_f > 0.0 && step_f <= 1.0) {
        return Err(Error::InvalidStep(step_f));
    }
    let count = (1.0 / step_f).round();
    if (count * step_f - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidStep(step_f));
    }
    let count = count as usize;
    let h = T::one() / T::from_usize_lossy(count);
    let half = T::lit(0.5);
    let sixth = h / T::lit(6.0);

    let mut state = GalerkinState::from_initial(u0, cutoff);
    let mut states = Vec::with_capacity(count + 1);
    states.push(state.clone());
    let with_modes = |modes: Vec<Complex<T>>| GalerkinState {
        cutoff,
        modes,
        time: T::zero(),
    };
    for i in 1..=count {
        let y = &state.modes;
        let k1 = rhs(model, &state);
        let k2 = rhs(model, &with_modes(axpy(y, &k1, half * h)));
        let k3 = rhs(model, &with_modes(axpy(y, &k2, half * h)));
        let k4 = rhs(model, &with_modes(axpy(y, &k3, h)));
        let two = T::lit(2.0);
        let next: Vec<Complex<T>> = (0..y.len())
            .map(|j| y[j] + (k1[j] + k2[j] * two + k3[j] * two + k4[j]) * sixth)
            .collect();
        let time = T::from_usize_lossy(i) * h;
        if let Some(j) = next.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite {
                time: time.to_f64_lossy(),
                mode: j as Frequency - cutoff as Frequency,
            });
        }
        state = GalerkinState {
            cutoff,
            modes: next,
            time,
        };
        states.push(state.clone());
    }
    Ok(Trajectory { step: h, states })
}

/// Occupation moments by Simpson quadrature and terminal moments `Π u_{n_j}(1)`.
///
/// Terminal entries are filled for every time degree, all equal.
pub fn trajectory_moments<T: Real>(
    traj: &Trajectory<T>,
    deg: &TruncationDegrees,
) -> (MomentTable<T>, MomentTable<T>) {
    let weights = simpson_weights(traj.intervals(), traj.step);
    let terminal_state = traj.terminal();
    let mut occupation = MomentTable::new();
    let mut terminal = MomentTable::new();
    for idx in enumerate_moment_vector(deg) {
        let canon = canonicalize(&idx);
        if canon.conjugated {
            continue;
        }
        let l = idx.time_degree() as i32;
        let value = traj
            .states
            .iter()
            .zip(&weights)
            .fold(Complex::default(), |acc, (s, &w)| {
                acc + s.product(idx.freqs()) * (w * s.time.powi(l))
            });
        occupation.insert(&idx, value);
        terminal.insert(&idx, terminal_state.product(idx.freqs()));
    }
    (occupation, terminal)
}

/// Full per-measure tables for a model, including the initial measure.
pub fn galerkin_tables<T: Real>(
    model: &HeatModel<T>,
    u0: &InitialData<T>,
    deg: &TruncationDegrees,
    step: T,
    cutoff: u32,
) -> Result<MeasureTables<T>> {
    let traj = integrate(model, u0, step, cutoff)?;
    let (occupation, terminal) = trajectory_moments(&traj, deg);
    Ok(MeasureTables {
        initial: u0.table(deg),
        terminal,
        occupation,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::index::MomentIndex;
    use crate::analytic::AnalyticOracle;
    use crate::scalar::modulus;

    fn single_mode() -> InitialData<f64> {
        let coeffs: BTreeMap<_, _> = [(1, Complex::new(1.0, 0.0)), (-1, Complex::new(1.0, 0.0))]
            .into_iter()
            .collect();
        InitialData::new(coeffs).unwrap()
    }

    #[test]
    fn linear_rhs() {
        let mut s = GalerkinState::<f64>::zeros(2);
        s.set(1, Complex::new(1.0, 0.0));
        let d = rhs(&HeatModel::Linear, &s);
        assert_eq!(d[3], Complex::new(-1.0, 0.0));
    }

    #[test]
    fn distributed_rhs_gains_on_mean_mode() {
        let eps = 0.125;
        let mut s = GalerkinState::<f64>::zeros(2);
        s.set(1, Complex::new(1.0, 0.0));
        s.set(-1, Complex::new(1.0, 0.0));
        let lin = rhs(&HeatModel::Linear, &s);
        let d = rhs(&HeatModel::distributed(eps), &s);
        // (u1 + u-1)(u1 + u-1) expanded by hand
        let expanded = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
            .iter()
            .map(|&(a, b)| s.get(a) * s.get(b))
            .fold(Complex::default(), |x, y| x + y);
        assert_eq!(expanded, Complex::new(4.0, 0.0));
        assert_eq!(d[2] - lin[2], expanded * eps);
        for j in [0, 1, 3, 4] {
            assert_eq!(d[j], lin[j]);
        }
    }

    #[test]
    fn local_rhs_with_zero_epsilon_is_linear() {
        let s = GalerkinState::from_initial(&InitialData::<f64>::default_profile(), 3);
        assert_eq!(
            rhs(&HeatModel::LocalQuadratic { epsilon: 0.0 }, &s),
            rhs(&HeatModel::Linear, &s)
        );
    }

    #[test]
    fn local_rhs_convolution() {
        let s = GalerkinState::from_initial(&InitialData::<f64>::default_profile(), 2);
        let lin = rhs(&HeatModel::Linear, &s);
        let d = rhs(&HeatModel::LocalQuadratic { epsilon: 1.0 }, &s);
        // (1 + 2cos x)^2 = 3 + 4 cos x + 2 cos 2x: coefficients 3, 2, 1
        let expected = [1.0, 2.0, 3.0, 2.0, 1.0];
        for j in 0..5 {
            assert!((d[j] - lin[j] - Complex::new(expected[j], 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn linear_terminal_matches_exponential() {
        let traj = integrate(&HeatModel::Linear, &single_mode(), 1e-3, 2).unwrap();
        assert_eq!(traj.intervals(), 1000);
        let u1 = traj.terminal().get(1);
        assert!((u1.re - (-1.0f64).exp()).abs() < 1e-10);
        assert!((traj.terminal().time - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_epsilon_trajectories_coincide() {
        let u0 = InitialData::<f64>::default_profile();
        let lin = integrate(&HeatModel::Linear, &u0, 0.01, 3).unwrap();
        for model in [HeatModel::distributed(0.0), HeatModel::LocalQuadratic { epsilon: 0.0 }] {
            let other = integrate(&model, &u0, 0.01, 3).unwrap();
            assert_eq!(other.states, lin.states);
        }
    }

    #[test]
    fn rk4_step_halving_ratio() {
        let u0 = InitialData::<f64>::default_profile();
        let exact = (-1.0f64).exp();
        let err = |h: f64| {
            let t = integrate(&HeatModel::Linear, &u0, h, 1).unwrap();
            (t.terminal().get(1).re - exact).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn invalid_step_rejected() {
        let u0 = InitialData::<f64>::default_profile();
        assert!(matches!(
            integrate(&HeatModel::Linear, &u0, 0.3, 1),
            Err(Error::InvalidStep(_))
        ));
        assert!(integrate(&HeatModel::Linear, &u0, -0.5, 1).is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        // u_t = u_xx + u^2 from 1 + 2cos x leaves every bound before t = 1
        let u0 = InitialData::<f64>::default_profile();
        let err = integrate(&HeatModel::LocalQuadratic { epsilon: 1.0 }, &u0, 1e-3, 4).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }), "{err}");
    }

    #[test]
    fn moments_match_analytic() {
        let u0 = single_mode();
        let d = TruncationDegrees::new(2, 2, 1).unwrap();
        let traj = integrate(&HeatModel::Linear, &u0, 1e-3, 1).unwrap();
        let (occ, term) = trajectory_moments(&traj, &d);
        let oracle = AnalyticOracle::new(u0);
        assert!((occ.get(&MomentIndex::empty(0)).unwrap().re - 1.0).abs() < 1e-14);
        let v = occ.get(&MomentIndex::new(0, vec![1])).unwrap();
        assert!((v.re - (1.0 - (-1.0f64).exp())).abs() < 1e-8);
        let idx = MomentIndex::new(2, vec![1, -1]);
        let exact = oracle.occupation_moment(&idx);
        assert!(modulus(occ.get(&idx).unwrap() - exact) < 1e-8);
        let t = term.get(&MomentIndex::new(2, vec![1])).unwrap();
        assert!((t.re - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn conjugate_symmetry_preserved() {
        let coeffs: BTreeMap<_, _> = [
            (0, Complex::new(0.5, 0.0)),
            (1, Complex::new(0.3, 0.4)),
            (-1, Complex::new(0.3, -0.4)),
            (2, Complex::new(-0.1, 0.2)),
            (-2, Complex::new(-0.1, -0.2)),
        ]
        .into_iter()
        .collect();
        let u0 = InitialData::new(coeffs).unwrap();
        for model in [
            HeatModel::Linear,
            HeatModel::distributed(0.3),
            HeatModel::LocalQuadratic { epsilon: 0.3 },
        ] {
            let traj = integrate(&model, &u0, 1e-2, 4).unwrap();
            for s in &traj.states {
                assert!(s.conjugate_asymmetry() <= 1e-12, "{model}");
            }
        }
    }

    #[test]
    fn trajectory_csv_shape() {
        let traj = integrate(&HeatModel::Linear, &single_mode(), 0.25, 1).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], "t,re_u-1,im_u-1,re_u0,im_u0,re_u1,im_u1");
    }
}
