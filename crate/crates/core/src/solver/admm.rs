//! Over-relaxed ADMM in the `z = Ax`, `z ∈ C = b − K` form.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rayon::prelude::*;

use super::psd::{project_svec, smat, svec_len, svec_pos};
use super::{SolveStatus, SolverSettings};
use crate::error::{Error, Result};
use crate::relaxation::ConicProblem;
use crate::scalar::Real;

const RUIZ_PASSES: usize = 10;
const EQUALITY_PENALTY_FACTOR: f64 = 1e3;
const ADAPT_INTERVAL: usize = 100;
const PENALTY_MIN: f64 = 1e-6;
const PENALTY_MAX: f64 = 1e6;
const ANDERSON_MAX_REJECTIONS: usize = 10;
const ANDERSON_PAUSE: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Cone {
    Zero { offset: usize, len: usize },
    Psd { offset: usize, n: usize },
}

impl Cone {
    fn range(&self) -> std::ops::Range<usize> {
        match *self {
            Cone::Zero { offset, len } => offset..offset + len,
            Cone::Psd { offset, n } => offset..offset + svec_len(n),
        }
    }
}

/// Sparse rows of `A`, dense `b` and `q`.
#[derive(Debug, Clone)]
struct Standard<T> {
    n: usize,
    rows: Vec<Vec<(usize, T)>>,
    b: Vec<T>,
    q: Vec<T>,
    cones: Vec<Cone>,
}

fn merge<T: Real>(mut row: Vec<(usize, T)>) -> Vec<(usize, T)> {
    row.sort_by_key(|&(j, _)| j);
    let mut out: Vec<(usize, T)> = Vec::with_capacity(row.len());
    for (j, a) in row {
        match out.last_mut() {
            Some((k, acc)) if *k == j => *acc += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|&(_, a)| a != T::zero());
    out
}

impl<T: Real> Standard<T> {
    fn from_problem(p: &ConicProblem<T>) -> Self {
        let mut rows = Vec::new();
        let mut b = Vec::new();
        let mut cones = Vec::new();
        if !p.equalities.is_empty() {
            for r in &p.equalities {
                rows.push(merge(r.coeffs.clone()));
                b.push(r.rhs);
            }
            cones.push(Cone::Zero {
                offset: 0,
                len: p.equalities.len(),
            });
        }
        let s2 = T::lit(2.0).sqrt();
        for blk in &p.blocks {
            let offset = rows.len();
            let len = svec_len(blk.dim);
            rows.resize_with(offset + len, Vec::new);
            b.resize(offset + len, T::zero());
            for &(r, c, v, coeff) in &blk.entries {
                let row = offset + svec_pos(blk.dim, r, c);
                let scale = if r == c { T::one() } else { s2 };
                match v {
                    Some(v) => rows[row].push((v, -coeff * scale)),
                    None => b[row] += coeff * scale,
                }
            }
            cones.push(Cone::Psd { offset, n: blk.dim });
        }
        for row in rows.iter_mut().skip(p.equalities.len()) {
            *row = merge(std::mem::take(row));
        }
        let mut q = vec![T::zero(); p.num_vars];
        for &(v, c) in &p.objective {
            q[v] += c;
        }
        Self {
            n: p.num_vars,
            rows,
            b,
            q,
            cones,
        }
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn mul(&self, x: &[T]) -> Vec<T> {
        self.rows
            .iter()
            .map(|row| row.iter().fold(T::zero(), |acc, &(j, a)| acc + a * x[j]))
            .collect()
    }

    fn mul_t(&self, y: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        for (row, &yi) in self.rows.iter().zip(y) {
            if yi != T::zero() {
                for &(j, a) in row {
                    out[j] += a * yi;
                }
            }
        }
        out
    }
}

/// `Â = E A D`, `b̂ = E b`, `q̂ = c D q`.
#[derive(Debug, Clone)]
struct Scaling<T> {
    d: Vec<T>,
    e: Vec<T>,
    c: T,
}

fn clamp_norm<T: Real>(v: T) -> T {
    if v < T::lit(1e-4) {
        T::one()
    } else {
        v.min(T::lit(1e4))
    }
}

fn ruiz<T: Real>(sf: &mut Standard<T>, passes: usize) -> Scaling<T> {
    let mut d = vec![T::one(); sf.n];
    let mut e = vec![T::one(); sf.m()];
    for _ in 0..passes {
        let mut col = vec![T::zero(); sf.n];
        let mut row_norm = vec![T::zero(); sf.m()];
        for (i, row) in sf.rows.iter().enumerate() {
            for &(j, a) in row {
                let v = a.abs();
                col[j] = col[j].max(v);
                row_norm[i] = row_norm[i].max(v);
            }
        }
        // one factor per PSD cone keeps the cone invariant
        for cone in &sf.cones {
            if let Cone::Psd { .. } = cone {
                let r = cone.range();
                let mx = row_norm[r.clone()].iter().fold(T::zero(), |a, &b| a.max(b));
                row_norm[r].iter_mut().for_each(|v| *v = mx);
            }
        }
        let dc: Vec<T> = col.iter().map(|&v| T::one() / clamp_norm(v).sqrt()).collect();
        let ec: Vec<T> = row_norm.iter().map(|&v| T::one() / clamp_norm(v).sqrt()).collect();
        for (i, row) in sf.rows.iter_mut().enumerate() {
            for (j, a) in row.iter_mut() {
                *a *= ec[i] * dc[*j];
            }
        }
        for (bi, &s) in sf.b.iter_mut().zip(&ec) {
            *bi *= s;
        }
        for (qi, &s) in sf.q.iter_mut().zip(&dc) {
            *qi *= s;
        }
        d.iter_mut().zip(&dc).for_each(|(a, &b)| *a *= b);
        e.iter_mut().zip(&ec).for_each(|(a, &b)| *a *= b);
    }
    let c = T::one() / clamp_norm(inf_norm(&sf.q));
    sf.q.iter_mut().for_each(|v| *v *= c);
    Scaling { d, e, c }
}

fn inf_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, &b| a.max(b.abs()))
}

fn penalties<T: Real>(sf: &Standard<T>, rho: T) -> Vec<T> {
    let mut out = vec![rho; sf.m()];
    for cone in &sf.cones {
        if let Cone::Zero { .. } = cone {
            for i in cone.range() {
                out[i] = rho * T::lit(EQUALITY_PENALTY_FACTOR);
            }
        }
    }
    out
}

fn factor<T: Real>(sf: &Standard<T>, rho: &[T], sigma: T) -> Result<Cholesky<T, Dyn>> {
    let mut k = DMatrix::<T>::identity(sf.n, sf.n) * sigma;
    for (row, &r) in sf.rows.iter().zip(rho) {
        for &(j, a) in row {
            for &(l, b) in row {
                k[(j, l)] += r * a * b;
            }
        }
    }
    Cholesky::new(k).ok_or_else(|| Error::Numerical("linear system is not positive definite".into()))
}

/// `Π_C(w) = b − Π_K(b − w)`.
fn project_c<T: Real>(sf: &Standard<T>, w: &mut [T]) {
    let psd: Vec<(usize, usize)> = sf
        .cones
        .iter()
        .filter_map(|c| match *c {
            Cone::Psd { offset, n } => Some((offset, n)),
            Cone::Zero { .. } => None,
        })
        .collect();
    for cone in &sf.cones {
        if let Cone::Zero { .. } = cone {
            for i in cone.range() {
                w[i] = sf.b[i];
            }
        }
    }
    let projected: Vec<Vec<T>> = psd
        .par_iter()
        .map(|&(offset, n)| {
            let mut v: Vec<T> = (offset..offset + svec_len(n)).map(|i| sf.b[i] - w[i]).collect();
            project_svec(&mut v, n);
            v
        })
        .collect();
    for ((offset, _), v) in psd.iter().zip(projected) {
        for (k, val) in v.into_iter().enumerate() {
            w[offset + k] = sf.b[offset + k] - val;
        }
    }
}

/// Unscaled residuals of a scaled iterate.
struct Residuals<T> {
    primal: T,
    dual: T,
    eps_primal: T,
    eps_dual: T,
}

impl<T: Real> Residuals<T> {
    fn merit(&self) -> T {
        (self.primal / self.eps_primal).max(self.dual / self.eps_dual)
    }

    fn converged(&self) -> bool {
        self.primal <= self.eps_primal && self.dual <= self.eps_dual
    }
}

/// ADMM state: primal point and the pre-projection point `w`.
///
/// `z = Π_C(w)` and `y = ρ(w − z)` are recovered from `w`.
#[derive(Debug, Clone)]
struct State<T> {
    x: Vec<T>,
    w: Vec<T>,
}

struct Decoded<T> {
    z: Vec<T>,
    y: Vec<T>,
}

impl<T: Real> State<T> {
    /// Coordinates `(√σ x, √ρ w)` of the metric in which the ADMM map is nonexpansive.
    fn flat(&self, sigma: T, rho: &[T]) -> DVector<T> {
        let sx = sigma.sqrt();
        DVector::from_iterator(
            self.x.len() + self.w.len(),
            self.x
                .iter()
                .map(|&v| v * sx)
                .chain(self.w.iter().zip(rho).map(|(&v, &r)| v * r.sqrt())),
        )
    }

    fn from_flat(v: &DVector<T>, n: usize, sigma: T, rho: &[T]) -> Self {
        let sx = sigma.sqrt();
        Self {
            x: v.rows(0, n).iter().map(|&a| a / sx).collect(),
            w: v
                .rows(n, v.len() - n)
                .iter()
                .zip(rho)
                .map(|(&a, &r)| a / r.sqrt())
                .collect(),
        }
    }
}

/// One application of the relaxed ADMM map.
struct Stepper<'a, T: Real> {
    sf: &'a Standard<T>,
    rho: Vec<T>,
    chol: Cholesky<T, Dyn>,
    sigma: T,
    alpha: T,
}

impl<T: Real> Stepper<'_, T> {
    fn decode(&self, w: &[T]) -> Decoded<T> {
        let mut z = w.to_vec();
        project_c(self.sf, &mut z);
        let y = (0..w.len()).map(|i| self.rho[i] * (w[i] - z[i])).collect();
        Decoded { z, y }
    }

    fn apply(&self, s: &State<T>, d: &Decoded<T>) -> State<T> {
        let (n, m) = (s.x.len(), s.w.len());
        let one = T::one();
        let v: Vec<T> = (0..m).map(|i| self.rho[i] * d.z[i] - d.y[i]).collect();
        let mut rhs = self.sf.mul_t(&v);
        for j in 0..n {
            rhs[j] += self.sigma * s.x[j] - self.sf.q[j];
        }
        let xt = self.chol.solve(&DVector::from_vec(rhs));
        let zt = self.sf.mul(xt.as_slice());
        State {
            x: (0..n)
                .map(|j| self.alpha * xt[j] + (one - self.alpha) * s.x[j])
                .collect(),
            w: (0..m)
                .map(|i| self.alpha * zt[i] + (one - self.alpha) * d.z[i] + d.y[i] / self.rho[i])
                .collect(),
        }
    }
}

/// Type-II Anderson extrapolation over the last few fixed-point steps.
struct Anderson<T: Real> {
    memory: usize,
    prev: Option<(DVector<T>, DVector<T>)>,
    dt: Vec<DVector<T>>,
    dg: Vec<DVector<T>>,
}

impl<T: Real> Anderson<T> {
    fn new(memory: usize) -> Self {
        Self {
            memory,
            prev: None,
            dt: Vec::new(),
            dg: Vec::new(),
        }
    }

    fn reset(&mut self) {
        self.prev = None;
        self.dt.clear();
        self.dg.clear();
    }

    /// Records `(s, T(s))` and proposes an extrapolated point.
    fn propose(&mut self, s: &DVector<T>, ts: &DVector<T>) -> Option<DVector<T>> {
        let g = ts - s;
        if let Some((pt, pg)) = self.prev.take() {
            self.dt.push(ts - pt);
            self.dg.push(&g - pg);
            if self.dt.len() > self.memory {
                self.dt.remove(0);
                self.dg.remove(0);
            }
        }
        self.prev = Some((ts.clone(), g.clone()));
        if self.dg.is_empty() {
            return None;
        }
        let mat = DMatrix::from_columns(&self.dg);
        let svd = mat.svd(true, true);
        let cutoff = svd.singular_values.max() * T::lit(1e-10);
        let gamma = svd.solve(&g, cutoff).ok()?;
        if !gamma.iter().all(|v| v.is_finite()) {
            return None;
        }
        let mut out = ts.clone();
        for (k, col) in self.dt.iter().enumerate() {
            out.axpy(-gamma[k], col, T::one());
        }
        Some(out)
    }
}

fn residuals<T: Real>(
    sf: &Standard<T>,
    sc: &Scaling<T>,
    x: &[T],
    d: &Decoded<T>,
    settings: &SolverSettings<T>,
) -> Residuals<T> {
    let ax = sf.mul(x);
    let aty = sf.mul_t(&d.y);
    let unscale_rows = |v: &[T]| -> Vec<T> { v.iter().zip(&sc.e).map(|(&a, &e)| a / e).collect() };
    let unscale_cols =
        |v: &[T]| -> Vec<T> { v.iter().zip(&sc.d).map(|(&a, &d)| a / (d * sc.c)).collect() };
    let r_p: Vec<T> = ax.iter().zip(&d.z).map(|(&a, &z)| a - z).collect();
    let r_d: Vec<T> = aty.iter().zip(&sf.q).map(|(&a, &q)| a + q).collect();
    let primal = inf_norm(&unscale_rows(&r_p));
    let dual = inf_norm(&unscale_cols(&r_d));
    let scale_p = inf_norm(&unscale_rows(&ax)).max(inf_norm(&unscale_rows(&d.z)));
    let scale_d = inf_norm(&unscale_cols(&aty)).max(inf_norm(&unscale_cols(&sf.q)));
    Residuals {
        primal,
        dual,
        eps_primal: settings.abs_tol + settings.rel_tol * scale_p,
        eps_dual: settings.abs_tol + settings.rel_tol * scale_d,
    }
}

/// Farkas test on a dual step: `Aᵀδy ≈ 0`, `bᵀδy < 0`, `δy ∈ K*`.
fn certifies_infeasibility<T: Real>(sf: &Standard<T>, sc: &Scaling<T>, dy: &[T], tol: T) -> bool {
    let dy_u: Vec<T> = dy.iter().zip(&sc.e).map(|(&v, &e)| v * e).collect();
    let norm = inf_norm(&dy_u);
    if !(norm > T::lit(1e-12)) {
        return false;
    }
    let aty: Vec<T> = sf
        .mul_t(dy)
        .iter()
        .zip(&sc.d)
        .map(|(&v, &d)| v / d)
        .collect();
    if inf_norm(&aty) > tol * norm {
        return false;
    }
    let bty = sf.b.iter().zip(dy).fold(T::zero(), |acc, (&b, &y)| acc + b * y);
    if bty >= -tol * norm {
        return false;
    }
    sf.cones.iter().all(|c| match *c {
        Cone::Zero { .. } => true,
        Cone::Psd { offset, n } => {
            let m = smat(&dy_u[offset..offset + svec_len(n)], n);
            n == 0 || SymmetricEigen::new(m).eigenvalues.min() >= -tol * norm
        }
    })
}

/// `√(σ‖Δx‖² + Σ ρᵢ Δzᵢ² + Δyᵢ²/ρᵢ)` between two decoded states.
fn step_length<T: Real>(st: &Stepper<T>, a: &State<T>, da: &Decoded<T>, b: &State<T>, db: &Decoded<T>) -> T {
    let dx = a.x.iter().zip(&b.x).fold(T::zero(), |acc, (&p, &q)| {
        let d = p - q;
        acc + st.sigma * d * d
    });
    let dv = (0..a.w.len()).fold(T::zero(), |acc, i| {
        let dz = da.z[i] - db.z[i];
        let dy = da.y[i] - db.y[i];
        acc + st.rho[i] * dz * dz + dy * dy / st.rho[i]
    });
    (dx + dv).sqrt()
}

fn finite<T: Real>(s: &State<T>) -> bool {
    s.x.iter().chain(&s.w).all(|v| v.is_finite())
}

/// Raw result of the iteration on a (presolved) problem.
pub(super) struct Outcome<T> {
    pub x: Vec<T>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_residual: T,
    pub dual_residual: T,
    pub penalty: T,
    pub history: Vec<T>,
}

/// Runs the iteration; `MaxIters` carries the best iterate seen at a check.
pub(super) fn run<T: Real>(problem: &ConicProblem<T>, settings: &SolverSettings<T>) -> Result<Outcome<T>> {
    let mut sf = Standard::from_problem(problem);
    let sc = if settings.scaling {
        ruiz(&mut sf, RUIZ_PASSES)
    } else {
        Scaling {
            d: vec![T::one(); sf.n],
            e: vec![T::one(); sf.m()],
            c: T::one(),
        }
    };
    let (n, m) = (sf.n, sf.m());
    let mut penalty = settings.penalty;
    let rho = penalties(&sf, penalty);
    let mut st = Stepper {
        chol: factor(&sf, &rho, settings.sigma)?,
        sf: &sf,
        rho,
        sigma: settings.sigma,
        alpha: settings.relaxation,
    };
    let mut anderson = Anderson::new(settings.acceleration_memory);

    let mut s = State {
        x: vec![T::zero(); n],
        w: vec![T::zero(); m],
    };
    let mut ds = st.decode(&s.w);
    let mut history = Vec::new();
    let mut best: Option<(T, Vec<T>, Residuals<T>)> = None;
    let mut status = SolveStatus::MaxIters;
    let mut iterations = settings.max_iters;

    // T(s) when already evaluated by an accepted extrapolation
    let mut pending: Option<(State<T>, Decoded<T>)> = None;
    let mut rejections = 0;
    let mut paused_until = 0;

    for k in 1..=settings.max_iters {
        let (ts, dts) = match pending.take() {
            Some(p) => p,
            None => {
                let ts = st.apply(&s, &ds);
                if !finite(&ts) {
                    return Err(Error::Numerical(format!("non-finite iterate at iteration {k}")));
                }
                let dts = st.decode(&ts.w);
                (ts, dts)
            }
        };
        if settings.record_history {
            history.push(step_length(&st, &ts, &dts, &s, &ds));
        }
        let dy: Vec<T> = (0..m).map(|i| dts.y[i] - ds.y[i]).collect();

        let mut next = None;
        if settings.acceleration_memory > 0 && k >= paused_until {
            let (sv, tv) = (s.flat(st.sigma, &st.rho), ts.flat(st.sigma, &st.rho));
            if let Some(acc) = anderson.propose(&sv, &tv) {
                let sa = State::from_flat(&acc, n, st.sigma, &st.rho);
                if finite(&sa) {
                    let da = st.decode(&sa.w);
                    let tsa = st.apply(&sa, &da);
                    let g_plain = (&tv - &sv).norm();
                    let g_acc = (tsa.flat(st.sigma, &st.rho) - &acc).norm();
                    // accept only if the fixed-point residual shrinks
                    if finite(&tsa) && g_acc <= g_plain {
                        let dta = st.decode(&tsa.w);
                        pending = Some((tsa, dta));
                        next = Some((sa, da));
                    }
                }
            }
            if next.is_some() {
                rejections = 0;
            } else {
                rejections += 1;
                if rejections >= ANDERSON_MAX_REJECTIONS {
                    rejections = 0;
                    paused_until = k + ANDERSON_PAUSE;
                    anderson.reset();
                }
            }
        }
        (s, ds) = next.unwrap_or((ts, dts));

        if k % settings.check_interval != 0 && k != settings.max_iters {
            continue;
        }
        let res = residuals(&sf, &sc, &s.x, &ds, settings);
        let x_u: Vec<T> = s.x.iter().zip(&sc.d).map(|(&x, &d)| x * d).collect();
        if res.converged()
            && problem.max_equality_residual(&x_u) <= settings.abs_tol
            && problem.min_block_eigenvalue(&x_u) >= -settings.abs_tol
        {
            best = Some((res.merit(), x_u, res));
            status = SolveStatus::Optimal;
            iterations = k;
            break;
        }
        if certifies_infeasibility(&sf, &sc, &dy, settings.infeasibility_tol) {
            best = Some((res.merit(), x_u, res));
            status = SolveStatus::InfeasibleSuspect;
            iterations = k;
            break;
        }
        let merit = res.merit();
        if best.as_ref().is_none_or(|(b, _, _)| merit < *b) {
            best = Some((merit, x_u, res));
        }

        if settings.adaptive_penalty && k % ADAPT_INTERVAL == 0 {
            let ax = sf.mul(&s.x);
            let aty = sf.mul_t(&ds.y);
            let tiny = T::lit(1e-30);
            let rp = (0..m).fold(T::zero(), |a, i| a.max((ax[i] - ds.z[i]).abs()));
            let rd = (0..n).fold(T::zero(), |a, j| a.max((aty[j] + sf.q[j]).abs()));
            let p_ratio = rp / inf_norm(&ax).max(inf_norm(&ds.z)).max(tiny);
            let d_ratio = rd / inf_norm(&aty).max(inf_norm(&sf.q)).max(tiny);
            let proposal = (penalty * (p_ratio / d_ratio.max(tiny)).sqrt())
                .max(T::lit(PENALTY_MIN))
                .min(T::lit(PENALTY_MAX));
            if proposal.is_finite()
                && (proposal > penalty * T::lit(5.0) || proposal < penalty / T::lit(5.0))
            {
                penalty = proposal;
                st.rho = penalties(&sf, penalty);
                st.chol = factor(&sf, &st.rho, st.sigma)?;
                // re-encode (z, y) under the new penalty
                s.w = (0..m).map(|i| ds.z[i] + ds.y[i] / st.rho[i]).collect();
                ds = st.decode(&s.w);
                anderson.reset();
                pending = None;
            }
        }
    }

    let (_, x, res) = best.expect("at least one termination check runs");
    Ok(Outcome {
        x,
        status,
        iterations,
        primal_residual: res.primal,
        dual_residual: res.dual,
        penalty,
        history,
    })
}
