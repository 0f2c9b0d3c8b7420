//! Heat-equation models and the truncated linear moment equations they induce.
//!
//! For a test index `(l, n_1..n_k)` every model yields
//!
//! ```text
//! y1[l,n] - y0[l,n] = l y[l-1,n] - (Σ n_j²) y[l,n] + nonlinear terms
//! ```
//!
//! tying terminal (`y1`), initial (`y0`) and occupation (`y`) moments. The
//! `l y[l-1,n]` term is absent for `l = 0`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{enumerate_moment_vector, Frequency, MomentIndex, TruncationDegrees};
use crate::scalar::{modulus, Complex, Real};
use crate::table::{MeasureTables, MomentTable};

/// Right-hand side of `du/dt = F(u)` on the torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeatModel<T> {
    /// `F(u) = u_xx`.
    Linear,
    /// `F(u) = u_xx + ε <u,f1> <u,f2>` with `f_i = ψ_{m_i} + ψ_{-m_i}`.
    DistributedQuadratic { epsilon: T, m1: u32, m2: u32 },
    /// `F(u) = u_xx + ε u²`.
    LocalQuadratic { epsilon: T },
}

impl<T: Real> HeatModel<T> {
    pub fn distributed(epsilon: T) -> Self {
        Self::DistributedQuadratic {
            epsilon,
            m1: 1,
            m2: 1,
        }
    }

    pub fn epsilon(&self) -> T {
        match *self {
            Self::Linear => T::zero(),
            Self::DistributedQuadratic { epsilon, .. } | Self::LocalQuadratic { epsilon } => epsilon,
        }
    }

    pub fn is_effectively_linear(&self) -> bool {
        self.epsilon() == T::zero()
    }

    /// Checks finiteness of ε and, for the distributed model, `1 ≤ m_i ≤ d_h`.
    pub fn validate(&self, deg: &TruncationDegrees) -> Result<()> {
        if !self.epsilon().is_finite() {
            return Err(Error::InvalidModel("epsilon must be finite".into()));
        }
        if let Self::DistributedQuadratic { m1, m2, .. } = *self {
            for m in [m1, m2] {
                if m == 0 || m > deg.harmonic {
                    return Err(Error::InvalidModel(format!(
                        "weight frequency {m} must lie in 1..={}",
                        deg.harmonic
                    )));
                }
            }
        }
        Ok(())
    }
}

impl<T: Real> fmt::Display for HeatModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Linear => write!(f, "linear"),
            Self::DistributedQuadratic { epsilon, m1, m2 } => {
                write!(f, "distributed(eps={epsilon}, m1={m1}, m2={m2})")
            }
            Self::LocalQuadratic { epsilon } => write!(f, "local(eps={epsilon})"),
        }
    }
}

/// Fourier coefficients `u_n(0)` of a real initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData<T: Real> {
    coeffs: BTreeMap<Frequency, Complex<T>>,
}

impl<T: Real> InitialData<T> {
    /// Rejects coefficient sets violating `u_{-n} = conj(u_n)` beyond a relative `1e-12`.
    pub fn new(coeffs: BTreeMap<Frequency, Complex<T>>) -> Result<Self> {
        let tol = T::lit(1e-12);
        for (&n, &c) in &coeffs {
            let mirror = coeffs.get(&-n).copied().unwrap_or_else(Complex::default);
            let scale = modulus(c).max(T::one());
            if modulus(mirror - c.conj()) > tol * scale {
                return Err(Error::NonRealInitialData(n));
            }
        }
        Ok(Self { coeffs })
    }

    /// The initial condition `u_{-1} = u_0 = u_1 = 1`, i.e. `1 + 2 cos x`.
    pub fn default_profile() -> Self {
        let one = Complex::new(T::one(), T::zero());
        Self {
            coeffs: [(-1, one), (0, one), (1, one)].into_iter().collect(),
        }
    }

    /// `u_n(0)`, zero when absent.
    pub fn coeff(&self, n: Frequency) -> Complex<T> {
        self.coeffs.get(&n).copied().unwrap_or_default()
    }

    pub fn coeffs(&self) -> &BTreeMap<Frequency, Complex<T>> {
        &self.coeffs
    }

    pub fn max_frequency(&self) -> u32 {
        self.coeffs.keys().map(|n| n.unsigned_abs()).max().unwrap_or(0)
    }

    /// `Π_j u_{n_j}(0)`.
    pub fn product(&self, freqs: &[Frequency]) -> Complex<T> {
        freqs
            .iter()
            .fold(Complex::new(T::one(), T::zero()), |acc, &n| acc * self.coeff(n))
    }

    /// Initial-measure moments over the whole truncated moment vector.
    pub fn table(&self, deg: &TruncationDegrees) -> MomentTable<T> {
        enumerate_moment_vector(deg)
            .into_iter()
            .map(|idx| {
                let v = initial_moment(self, &idx);
                (idx, v)
            })
            .collect()
    }
}

/// Moments of the Dirac initial measure: `0^l Π u_{n_j}(0)`.
pub fn initial_moment<T: Real>(u0: &InitialData<T>, idx: &MomentIndex) -> Complex<T> {
    if idx.time_degree() > 0 {
        Complex::default()
    } else {
        u0.product(idx.freqs())
    }
}

/// Which measure a moment belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MeasureTag {
    Initial,
    Terminal,
    Occupation,
}

impl MeasureTag {
    pub const ALL: [MeasureTag; 3] = [Self::Initial, Self::Terminal, Self::Occupation];

    pub fn name(self) -> &'static str {
        match self {
            Self::Initial => "initial",
            Self::Terminal => "terminal",
            Self::Occupation => "occupation",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.trim() {
            "initial" => Some(Self::Initial),
            "terminal" => Some(Self::Terminal),
            "occupation" => Some(Self::Occupation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term<T: Real> {
    pub coeff: Complex<T>,
    pub measure: MeasureTag,
    pub index: MomentIndex,
}

/// `Σ coeff·y[measure, index] = rhs`, all moments moved to the left-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint<T: Real> {
    pub test_index: MomentIndex,
    pub terms: Vec<Term<T>>,
    pub rhs: Complex<T>,
}

impl<T: Real> LinearConstraint<T> {
    pub fn evaluate(&self, tables: &MeasureTables<T>) -> Result<Complex<T>> {
        self.terms.iter().try_fold(Complex::default(), |acc, t| {
            Ok(acc + t.coeff * tables.lookup(t.measure, &t.index)?)
        })
    }

    pub fn residual(&self, tables: &MeasureTables<T>) -> Result<T> {
        Ok(modulus(self.evaluate(tables)? - self.rhs))
    }
}

fn real<T: Real>(v: T) -> Complex<T> {
    Complex::new(v, T::zero())
}

/// Builds one moment equation per admissible test index of the moment vector.
///
/// Terms are stored as `y1 - y0 - l y[l-1] + N y[l] - ε S = 0`, where `S` is the
/// sum of nonlinear moments obtained from `<F(h), ψ_j>`; the ε-terms therefore
/// carry coefficient `-ε`.
///
/// With `ε ≠ 0`, test indices whose nonlinear terms would need `k + 1 > d_a`
/// factors are dropped. The local convolution is truncated to `|m| ≤ d_h`,
/// `|n_j - m| ≤ d_h`.
pub fn generate_constraints<T: Real>(
    model: &HeatModel<T>,
    deg: &TruncationDegrees,
) -> Result<Vec<LinearConstraint<T>>> {
    model.validate(deg)?;
    let eps = model.epsilon();
    let nonlinear = eps != T::zero();
    let h = deg.harmonic as Frequency;
    let max_order = deg.algebraic as usize;

    let mut out = Vec::new();
    for idx in enumerate_moment_vector(deg) {
        let l = idx.time_degree();
        let k = idx.order();
        let mut terms = vec![
            Term {
                coeff: real(T::one()),
                measure: MeasureTag::Terminal,
                index: idx.clone(),
            },
            Term {
                coeff: real(-T::one()),
                measure: MeasureTag::Initial,
                index: idx.clone(),
            },
        ];
        if l > 0 {
            terms.push(Term {
                coeff: real(-T::from_usize_lossy(l as usize)),
                measure: MeasureTag::Occupation,
                index: idx.with_time_degree(l - 1),
            });
        }
        let norm = idx.squared_norm();
        if norm > 0 {
            terms.push(Term {
                coeff: real(T::from_usize_lossy(norm as usize)),
                measure: MeasureTag::Occupation,
                index: idx.clone(),
            });
        }

        if nonlinear {
            match *model {
                HeatModel::Linear => {}
                HeatModel::DistributedQuadratic { m1, m2, .. } => {
                    let zeros = idx.freqs().iter().filter(|&&n| n == 0).count();
                    if zeros > 0 && k + 1 > max_order {
                        continue;
                    }
                    let (m1, m2) = (m1 as Frequency, m2 as Frequency);
                    for j in 0..k {
                        if idx.freqs()[j] != 0 {
                            continue;
                        }
                        let rest = without(idx.freqs(), j);
                        for (a, b) in [(m1, m2), (m1, -m2), (-m1, m2), (-m1, -m2)] {
                            terms.push(Term {
                                coeff: real(-eps),
                                measure: MeasureTag::Occupation,
                                index: MomentIndex::new(l, extend(&rest, a, b)),
                            });
                        }
                    }
                }
                HeatModel::LocalQuadratic { .. } => {
                    if k > 0 && k + 1 > max_order {
                        continue;
                    }
                    for j in 0..k {
                        let nj = idx.freqs()[j];
                        let rest = without(idx.freqs(), j);
                        for m in -h..=h {
                            if (nj - m).abs() > h {
                                continue;
                            }
                            terms.push(Term {
                                coeff: real(-eps),
                                measure: MeasureTag::Occupation,
                                index: MomentIndex::new(l, extend(&rest, m, nj - m)),
                            });
                        }
                    }
                }
            }
        }

        out.push(LinearConstraint {
            test_index: idx,
            terms,
            rhs: Complex::default(),
        });
    }
    Ok(out)
}

fn without(freqs: &[Frequency], j: usize) -> Vec<Frequency> {
    freqs
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != j)
        .map(|(_, &n)| n)
        .collect()
}

fn extend(rest: &[Frequency], a: Frequency, b: Frequency) -> Vec<Frequency> {
    let mut v = Vec::with_capacity(rest.len() + 2);
    v.extend_from_slice(rest);
    v.push(a);
    v.push(b);
    v
}

/// Largest `|Σ terms - rhs|` over the constraints.
pub fn constraint_residual<T: Real>(
    constraints: &[LinearConstraint<T>],
    tables: &MeasureTables<T>,
) -> Result<T> {
    constraints
        .iter()
        .try_fold(T::zero(), |acc, c| Ok(acc.max(c.residual(tables)?)))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;

    fn deg(t: u32, a: u32, h: u32) -> TruncationDegrees {
        TruncationDegrees::new(t, a, h).unwrap()
    }

    fn find<'a>(cs: &'a [LinearConstraint<f64>], idx: &MomentIndex) -> &'a LinearConstraint<f64> {
        cs.iter().find(|c| &c.test_index == idx).expect("constraint present")
    }

    fn occupation_terms(c: &LinearConstraint<f64>) -> Vec<(f64, MomentIndex)> {
        c.terms
            .iter()
            .filter(|t| t.measure == MeasureTag::Occupation)
            .map(|t| (t.coeff.re, t.index.clone()))
            .collect()
    }

    #[test]
    fn initial_moment_examples() {
        let u0 = InitialData::<f64>::default_profile();
        assert_eq!(initial_moment(&u0, &MomentIndex::new(0, vec![1, -1])), Complex::new(1.0, 0.0));
        assert_eq!(initial_moment(&u0, &MomentIndex::new(2, vec![1])), Complex::new(0.0, 0.0));
        assert_eq!(initial_moment(&u0, &MomentIndex::new(0, vec![2])), Complex::new(0.0, 0.0));
    }

    #[test]
    fn non_real_initial_data_rejected() {
        let coeffs = [(1, Complex::new(1.0, 1.0)), (-1, Complex::new(1.0, 1.0))]
            .into_iter()
            .collect();
        assert!(matches!(
            InitialData::<f64>::new(coeffs),
            Err(Error::NonRealInitialData(_))
        ));
        let coeffs = [(1, Complex::new(1.0, 1.0)), (-1, Complex::new(1.0, -1.0))]
            .into_iter()
            .collect();
        assert!(InitialData::<f64>::new(coeffs).is_ok());
    }

    #[test]
    fn linear_first_mode_constraint() {
        let cs = generate_constraints(&HeatModel::<f64>::Linear, &deg(2, 2, 2)).unwrap();
        let c = find(&cs, &MomentIndex::new(0, vec![1]));
        assert_eq!(c.terms.len(), 3);
        assert_eq!(occupation_terms(c), vec![(1.0, MomentIndex::new(0, vec![1]))]);
        assert!(c.terms.iter().any(|t| t.measure == MeasureTag::Terminal && t.coeff.re == 1.0));
        assert!(c.terms.iter().any(|t| t.measure == MeasureTag::Initial && t.coeff.re == -1.0));
    }

    #[test]
    fn linear_mass_conservation() {
        let cs = generate_constraints(&HeatModel::<f64>::Linear, &deg(2, 2, 2)).unwrap();
        let c = find(&cs, &MomentIndex::empty(0));
        assert!(occupation_terms(c).is_empty());
        assert_eq!(c.terms.len(), 2);
    }

    #[test]
    fn linear_count_matches_moment_vector() {
        for d in [deg(2, 2, 2), deg(4, 2, 2), deg(4, 4, 2)] {
            let cs = generate_constraints(&HeatModel::<f64>::Linear, &d).unwrap();
            assert_eq!(cs.len() as u128, d.moment_vector_len());
        }
    }

    #[test]
    fn local_convolution_terms() {
        let model = HeatModel::LocalQuadratic { epsilon: 0.5 };
        let cs = generate_constraints(&model, &deg(2, 2, 2)).unwrap();
        let c = find(&cs, &MomentIndex::new(0, vec![1]));
        let eps_terms: BTreeSet<MomentIndex> = occupation_terms(c)
            .into_iter()
            .filter(|(coef, _)| *coef == -0.5)
            .map(|(_, i)| i)
            .collect();
        // brute force over |m| <= d_h keeping |1 - m| <= d_h
        let expected: BTreeSet<MomentIndex> = (-2..=2)
            .filter(|m: &i32| (1 - m).abs() <= 2)
            .map(|m| MomentIndex::new(0, vec![m, 1 - m]))
            .collect();
        assert_eq!(
            expected,
            [vec![-1, 2], vec![0, 1], vec![1, 0], vec![2, -1]]
                .into_iter()
                .map(|f| MomentIndex::new(0, f))
                .collect()
        );
        assert_eq!(eps_terms, expected);
        // m and 1-m give the same multiset; both terms are kept
        assert_eq!(occupation_terms(c).len(), 1 + 4);
    }

    #[test]
    fn distributed_terms_need_zero_frequency() {
        let eps = 1e-3;
        let model = HeatModel::distributed(eps);
        let cs = generate_constraints(&model, &deg(2, 4, 2)).unwrap();
        for c in &cs {
            let eps_count = occupation_terms(c).iter().filter(|(coef, _)| *coef == -eps).count();
            let zeros = c.test_index.freqs().iter().filter(|&&n| n == 0).count();
            assert_eq!(eps_count, 4 * zeros, "{}", c.test_index);
        }
        let c = find(&cs, &MomentIndex::new(1, vec![0]));
        let eps_terms: Vec<MomentIndex> = occupation_terms(c)
            .into_iter()
            .filter(|(coef, _)| *coef == -eps)
            .map(|(_, i)| i)
            .collect();
        assert_eq!(
            eps_terms,
            vec![
                MomentIndex::new(1, vec![1, 1]),
                MomentIndex::new(1, vec![1, -1]),
                MomentIndex::new(1, vec![-1, 1]),
                MomentIndex::new(1, vec![-1, -1]),
            ]
        );
    }

    #[test]
    fn nonlinear_terms_stay_in_truncation() {
        let d = deg(4, 2, 2);
        for model in [HeatModel::distributed(1.0), HeatModel::LocalQuadratic { epsilon: 1.0 }] {
            let cs = generate_constraints(&model, &d).unwrap();
            assert!(cs.len() as u128 <= d.moment_vector_len());
            for c in &cs {
                for t in &c.terms {
                    assert!(t.index.fits(&d), "{model}: {} outside {d}", t.index);
                }
            }
        }
    }

    #[test]
    fn zero_epsilon_regenerates_linear() {
        let d = deg(4, 2, 2);
        let linear = generate_constraints(&HeatModel::<f64>::Linear, &d).unwrap();
        assert_eq!(generate_constraints(&HeatModel::distributed(0.0), &d).unwrap(), linear);
        assert_eq!(
            generate_constraints(&HeatModel::LocalQuadratic { epsilon: 0.0 }, &d).unwrap(),
            linear
        );
    }

    #[test]
    fn conjugated_test_index_gives_conjugated_constraint() {
        let d = deg(2, 4, 2);
        for model in [
            HeatModel::Linear,
            HeatModel::distributed(0.25),
            HeatModel::LocalQuadratic { epsilon: 0.25 },
        ] {
            let cs = generate_constraints(&model, &d).unwrap();
            for c in &cs {
                let twin = find(&cs, &c.test_index.negated());
                let negate = |c: &LinearConstraint<f64>| -> Vec<(MeasureTag, MomentIndex, i64)> {
                    let mut v: Vec<_> = c
                        .terms
                        .iter()
                        .map(|t| (t.measure, t.index.negated(), (t.coeff.re * 1e6) as i64))
                        .collect();
                    v.sort();
                    v
                };
                let mut mine: Vec<_> = twin
                    .terms
                    .iter()
                    .map(|t| (t.measure, t.index.clone(), (t.coeff.re * 1e6) as i64))
                    .collect();
                mine.sort();
                assert_eq!(negate(c), mine, "{model} at {}", c.test_index);
            }
        }
    }

    #[test]
    fn distributed_weight_frequency_bounds() {
        let model = HeatModel::DistributedQuadratic {
            epsilon: 1.0,
            m1: 3,
            m2: 1,
        };
        assert!(matches!(
            generate_constraints(&model, &deg(2, 2, 2)),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn zeroed_occupation_residual() {
        let d = deg(2, 2, 2);
        let cs = generate_constraints(&HeatModel::<f64>::Linear, &d).unwrap();
        let u0 = InitialData::default_profile();
        let mut tables = MeasureTables::default();
        tables.initial = u0.table(&d);
        tables.occupation = tables.initial.map_values(|_| Complex::default());
        tables.terminal = tables
            .initial
            .map_values(|_| Complex::new(0.0, 0.0));
        // every y1 - y0 = -y0, largest |y0| is 1
        let r = constraint_residual(&cs, &tables).unwrap();
        assert_eq!(r, 1.0);

        tables.terminal = MomentTable::new();
        assert!(matches!(
            constraint_residual(&cs, &tables),
            Err(Error::MissingMoment { measure: MeasureTag::Terminal, .. })
        ));
    }
}
