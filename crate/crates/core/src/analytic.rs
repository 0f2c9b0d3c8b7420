//! Closed-form moments of the linear heat equation.
//!
//! With `u_n(t) = u_n(0) e^{-n² t}` the trajectory is explicit, so for
//! `N = Σ n_j²`:
//!
//! * terminal moments are `Π u_{n_j}(0) e^{-N}` for every time degree;
//! * occupation moments are `Π u_{n_j}(0) I_l(N)` with
//!   `I_l(N) = ∫₀¹ t^l e^{-N t} dt`, or `u_0(0)^k / (l+1)` when all `n_j = 0`.
//!
//! `I_l` has the closed form
//! `l!/N^{l+1} - e^{-N} Σ_{j=1}^{l+1} l! / (N^j (l-j+1)!)`, which cancels
//! catastrophically for small `N`. [`AnalyticOracle`] therefore integrates
//! with a 64-node Gauss–Legendre rule up to [`QUADRATURE_MAX_N`] and uses the
//! closed form only above it, where the exponential tail is negligible.

use crate::index::{enumerate_moment_vector, MomentIndex, TruncationDegrees};
use crate::model::InitialData;
use crate::quadrature::GaussLegendre;
use crate::scalar::{Complex, Real};
use crate::table::{MeasureTables, MomentTable};

pub const QUADRATURE_NODES: usize = 64;

/// Largest `N` evaluated by quadrature.
pub const QUADRATURE_MAX_N: u64 = 64;

/// `l!/N^{l+1} - e^{-N} Σ_{j=1}^{l+1} l!/(N^j (l-j+1)!)`, evaluated literally.
pub fn i_ell_closed_form<T: Real>(ell: u32, n: u64) -> T {
    assert!(n >= 1, "I_l(N) needs N >= 1");
    let nf = T::from_usize_lossy(n as usize);
    let fact = |m: u32| (1..=m).fold(T::one(), |acc, i| acc * T::from_usize_lossy(i as usize));
    let l_fact = fact(ell);
    let lead = l_fact / nf.powi(ell as i32 + 1);
    let tail = (1..=ell + 1).fold(T::zero(), |acc, j| {
        acc + l_fact / (nf.powi(j as i32) * fact(ell + 1 - j))
    });
    lead - (-nf).exp() * tail
}

/// `((l+1) I_l(N) - e^{-N}) / N`, the integration-by-parts step to `I_{l+1}`.
pub fn i_ell_recurrence_step<T: Real>(ell: u32, n: u64, i_ell: T) -> T {
    let nf = T::from_usize_lossy(n as usize);
    (T::from_usize_lossy(ell as usize + 1) * i_ell - (-nf).exp()) / nf
}

/// `∫₀¹ t^l e^{-N t} dt` for `N ≥ 1`.
pub fn i_ell<T: Real>(ell: u32, n: u64) -> T {
    AnalyticOracle::new(InitialData::default_profile()).i_ell(ell, n)
}

/// Ground-truth moments for a given initial condition.
#[derive(Debug, Clone)]
pub struct AnalyticOracle<T: Real> {
    u0: InitialData<T>,
    rule: GaussLegendre<T>,
}

impl<T: Real> AnalyticOracle<T> {
    pub fn new(u0: InitialData<T>) -> Self {
        Self {
            u0,
            rule: GaussLegendre::new(QUADRATURE_NODES),
        }
    }

    pub fn initial_data(&self) -> &InitialData<T> {
        &self.u0
    }

    pub fn i_ell(&self, ell: u32, n: u64) -> T {
        assert!(n >= 1, "I_l(N) needs N >= 1");
        if n > QUADRATURE_MAX_N {
            return i_ell_closed_form(ell, n);
        }
        let nf = T::from_usize_lossy(n as usize);
        self.rule.integrate(|t| t.powi(ell as i32) * (-nf * t).exp())
    }

    pub fn occupation_moment(&self, idx: &MomentIndex) -> Complex<T> {
        let l = idx.time_degree();
        if idx.is_zero_frequency() {
            let mass = self.u0.coeff(0).powu(idx.order() as u32);
            return mass / T::from_usize_lossy(l as usize + 1);
        }
        let prod = self.u0.product(idx.freqs());
        if prod == Complex::default() {
            return prod;
        }
        prod * self.i_ell(l, idx.squared_norm())
    }

    /// Independent of the time degree.
    pub fn terminal_moment(&self, idx: &MomentIndex) -> Complex<T> {
        let n = T::from_usize_lossy(idx.squared_norm() as usize);
        self.u0.product(idx.freqs()) * (-n).exp()
    }

    /// Initial, terminal and occupation tables over the whole moment vector.
    pub fn tables(&self, deg: &TruncationDegrees) -> MeasureTables<T> {
        let mut tables = MeasureTables {
            initial: self.u0.table(deg),
            ..Default::default()
        };
        for idx in enumerate_moment_vector(deg) {
            tables.terminal.insert(&idx, self.terminal_moment(&idx));
            tables.occupation.insert(&idx, self.occupation_moment(&idx));
        }
        tables
    }

    pub fn occupation_table(&self, deg: &TruncationDegrees) -> MomentTable<T> {
        enumerate_moment_vector(deg)
            .into_iter()
            .map(|idx| {
                let v = self.occupation_moment(&idx);
                (idx, v)
            })
            .collect()
    }
}

/// Convenience wrapper around [`AnalyticOracle::occupation_moment`].
pub fn analytic_occupation_moment<T: Real>(u0: &InitialData<T>, idx: &MomentIndex) -> Complex<T> {
    AnalyticOracle::new(u0.clone()).occupation_moment(idx)
}

/// Convenience wrapper around [`AnalyticOracle::terminal_moment`].
pub fn analytic_terminal_moment<T: Real>(u0: &InitialData<T>, idx: &MomentIndex) -> Complex<T> {
    AnalyticOracle::new(u0.clone()).terminal_moment(idx)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::scalar::modulus;

    fn first_mode_only() -> InitialData<f64> {
        let coeffs: BTreeMap<_, _> = [(1, Complex::new(1.0, 0.0)), (-1, Complex::new(1.0, 0.0))]
            .into_iter()
            .collect();
        InitialData::new(coeffs).unwrap()
    }

    /// Composite Simpson with many panels; independent of the Gauss rule.
    fn simpson(f: impl Fn(f64) -> f64, panels: usize) -> f64 {
        let h = 1.0 / panels as f64;
        let mut s = f(0.0) + f(1.0);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn mass_moments() {
        let u0 = InitialData::<f64>::default_profile();
        let o = AnalyticOracle::new(u0);
        assert_eq!(o.occupation_moment(&MomentIndex::empty(0)).re, 1.0);
        assert_eq!(o.occupation_moment(&MomentIndex::empty(1)).re, 0.5);
        assert_eq!(o.terminal_moment(&MomentIndex::empty(5)).re, 1.0);
    }

    #[test]
    fn first_mode_occupation() {
        let o = AnalyticOracle::new(first_mode_only());
        let v = o.occupation_moment(&MomentIndex::new(0, vec![1]));
        let quad = simpson(|t| (-t).exp(), 2000);
        assert!((v.re - quad).abs() < 1e-12);
        assert!((v.re - 0.6321205588285577).abs() < 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn terminal_examples() {
        let o = AnalyticOracle::new(first_mode_only());
        let v = o.terminal_moment(&MomentIndex::new(0, vec![1, 1]));
        assert!((v.re - (-2.0f64).exp()).abs() < 1e-16);
        assert!((v.re - 0.1353352832366127).abs() < 1e-15);
        assert_eq!(
            o.terminal_moment(&MomentIndex::new(3, vec![1])),
            o.terminal_moment(&MomentIndex::new(0, vec![1]))
        );
        assert!((o.terminal_moment(&MomentIndex::new(0, vec![1])).re - (-1.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn i_ell_base_case() {
        let v: f64 = i_ell(0, 1);
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        let closed: f64 = i_ell_closed_form(0, 1);
        assert!((closed - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn i_ell_against_simpson() {
        // I_2(4) by a fine independent Simpson sum
        let quad = simpson(|t| t * t * (-4.0 * t).exp(), 20000);
        let v: f64 = i_ell(2, 4);
        assert!((v - quad).abs() < 1e-13, "{v} vs {quad}");
    }

    #[test]
    fn large_n_uses_closed_form() {
        let v: f64 = i_ell(3, 200);
        let expected = 6.0 / 200f64.powi(4);
        assert!(((v - expected) / expected).abs() < 1e-14);
    }

    #[test]
    fn zero_product_short_circuits() {
        let o = AnalyticOracle::new(InitialData::<f64>::default_profile());
        assert_eq!(o.occupation_moment(&MomentIndex::new(2, vec![2, 1])), Complex::default());
    }

    #[test]
    fn table_conjugation() {
        let coeffs: BTreeMap<_, _> = [
            (1, Complex::new(0.5, 0.25)),
            (-1, Complex::new(0.5, -0.25)),
            (0, Complex::new(1.0, 0.0)),
        ]
        .into_iter()
        .collect();
        let o = AnalyticOracle::new(InitialData::new(coeffs).unwrap());
        let d = TruncationDegrees::new(2, 2, 1).unwrap();
        let t = o.tables(&d);
        for idx in enumerate_moment_vector(&d) {
            let a = t.occupation.get(&idx).unwrap();
            let b = t.occupation.get(&idx.negated()).unwrap();
            assert!(modulus(a - b.conj()) < 1e-15);
            assert!(modulus(a - o.occupation_moment(&idx)) < 1e-15);
        }
    }

    #[test]
    fn single_precision_oracle() {
        let v: f32 = i_ell(1, 2);
        let exact = (1.0 - 3.0 * (-2.0f64).exp()) / 4.0;
        assert!((v as f64 - exact).abs() < 1e-6);
    }
}
