//! Assembly of the truncated moment relaxation as a real conic problem.
//!
//! Each canonical complex moment becomes one real variable (self-conjugate
//! multisets, whose moments are real) or a `(re, im)` pair. Terminal moments do
//! not depend on the time degree, so only `l = 0` terminal slots exist. Initial
//! moments are data and enter the right-hand sides.
//!
//! Hermitian blocks `H = A + iB` are embedded as `[[A, -B], [B, A]]`, which is
//! PSD exactly when `H` is and carries each eigenvalue of `H` twice.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::index::{
    basis_monomials, canonicalize, entry_index, enumerate_matrix_basis, enumerate_moment_vector,
    BasisMonomial, MomentIndex, TruncationDegrees,
};
use crate::model::{generate_constraints, HeatModel, InitialData, LinearConstraint, MeasureTag};
use crate::scalar::{Complex, Real};
use crate::table::{MeasureTables, MomentTable};

/// Affine form `Σ coeff·x[var] + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinExpr<T> {
    pub terms: Vec<(usize, T)>,
    pub constant: T,
}

impl<T: Real> LinExpr<T> {
    pub fn zero() -> Self {
        Self {
            terms: Vec::new(),
            constant: T::zero(),
        }
    }

    pub fn var(v: usize) -> Self {
        Self {
            terms: vec![(v, T::one())],
            constant: T::zero(),
        }
    }

    pub fn eval(&self, x: &[T]) -> T {
        self.terms
            .iter()
            .fold(self.constant, |acc, &(v, c)| acc + c * x[v])
    }

    fn add_scaled(&mut self, other: &Self, s: T) {
        self.terms
            .extend(other.terms.iter().map(|&(v, c)| (v, c * s)));
        self.constant += other.constant * s;
    }

    /// Merges repeated variables and drops exact zeros; order becomes by variable.
    pub fn compress(&self) -> Self {
        let mut acc: BTreeMap<usize, T> = BTreeMap::new();
        for &(v, c) in &self.terms {
            *acc.entry(v).or_insert_with(T::zero) += c;
        }
        Self {
            terms: acc.into_iter().filter(|(_, c)| *c != T::zero()).collect(),
            constant: self.constant,
        }
    }
}

/// Complex affine form: real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexExpr<T> {
    pub re: LinExpr<T>,
    pub im: LinExpr<T>,
}

impl<T: Real> ComplexExpr<T> {
    fn zero() -> Self {
        Self {
            re: LinExpr::zero(),
            im: LinExpr::zero(),
        }
    }

    /// `self += c · other` for complex `c`.
    fn add_scaled(&mut self, other: &Self, c: Complex<T>) {
        self.re.add_scaled(&other.re, c.re);
        self.re.add_scaled(&other.im, -c.im);
        self.im.add_scaled(&other.re, c.im);
        self.im.add_scaled(&other.im, c.re);
    }
}

/// Real variable(s) backing one canonical moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub real: usize,
    /// Absent for self-conjugate multisets.
    pub imag: Option<usize>,
}

/// Mapping between canonical moments and real decision variables.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableLayout {
    deg: TruncationDegrees,
    slots: BTreeMap<(MeasureTag, MomentIndex), Slot>,
    num_vars: usize,
}

impl VariableLayout {
    /// Occupation slots for every canonical moment of the moment vector, then
    /// terminal slots for `l = 0`.
    pub fn new(deg: &TruncationDegrees) -> Self {
        let mut slots = BTreeMap::new();
        let mut next = 0usize;
        let mut push = |measure: MeasureTag, idx: MomentIndex| {
            let imag = if idx.is_self_conjugate() {
                None
            } else {
                Some(next + 1)
            };
            let slot = Slot { real: next, imag };
            next += if imag.is_some() { 2 } else { 1 };
            slots.insert((measure, idx), slot);
        };
        let moments = enumerate_moment_vector(deg);
        for idx in &moments {
            let c = canonicalize(idx);
            if !c.conjugated && c.index == *idx {
                push(MeasureTag::Occupation, idx.clone());
            }
        }
        for idx in moments.iter().filter(|i| i.time_degree() == 0) {
            let c = canonicalize(idx);
            if !c.conjugated && c.index == *idx {
                push(MeasureTag::Terminal, idx.clone());
            }
        }
        Self {
            deg: *deg,
            slots,
            num_vars: next,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn degrees(&self) -> &TruncationDegrees {
        &self.deg
    }

    /// Slot of a moment plus whether the lookup is conjugated.
    ///
    /// Terminal lookups at any time degree resolve to the `l = 0` slot.
    pub fn slot(&self, measure: MeasureTag, idx: &MomentIndex) -> Option<(Slot, bool)> {
        let idx = match measure {
            MeasureTag::Terminal => idx.with_time_degree(0),
            MeasureTag::Occupation => idx.clone(),
            MeasureTag::Initial => return None,
        };
        let c = canonicalize(&idx);
        self.slots
            .get(&(measure, c.index))
            .map(|s| (*s, c.conjugated))
    }

    pub fn slots(&self) -> impl Iterator<Item = (&(MeasureTag, MomentIndex), &Slot)> {
        self.slots.iter()
    }

    /// Moment as a complex affine expression in the variables.
    pub fn expr<T: Real>(&self, measure: MeasureTag, idx: &MomentIndex) -> Result<ComplexExpr<T>> {
        let (slot, conjugated) = self.slot(measure, idx).ok_or_else(|| Error::MissingMoment {
            measure,
            index: idx.clone(),
        })?;
        let mut e = ComplexExpr {
            re: LinExpr::var(slot.real),
            im: LinExpr::zero(),
        };
        if let Some(i) = slot.imag {
            let sign = if conjugated { -T::one() } else { T::one() };
            e.im.terms.push((i, sign));
        }
        Ok(e)
    }

    /// Variable vector holding the terminal and occupation moments of `tables`.
    pub fn embed<T: Real>(&self, tables: &MeasureTables<T>) -> Result<Vec<T>> {
        let mut x = vec![T::zero(); self.num_vars];
        for ((measure, idx), slot) in &self.slots {
            let v = tables.lookup(*measure, idx)?;
            x[slot.real] = v.re;
            if let Some(i) = slot.imag {
                x[i] = v.im;
            }
        }
        Ok(x)
    }

    /// Terminal and occupation tables read back from a variable vector.
    ///
    /// Terminal moments are replicated over every time degree `≤ d_t`.
    pub fn extract<T: Real>(&self, x: &[T]) -> Result<(MomentTable<T>, MomentTable<T>)> {
        if x.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                what: "solution vector length",
                expected: self.num_vars,
                found: x.len(),
            });
        }
        let mut occupation = MomentTable::new();
        let mut terminal = MomentTable::new();
        for ((measure, idx), slot) in &self.slots {
            let im = slot.imag.map_or(T::zero(), |i| x[i]);
            let v = Complex::new(x[slot.real], im);
            match measure {
                MeasureTag::Occupation => occupation.insert(idx, v),
                MeasureTag::Terminal => {
                    for l in 0..=self.deg.time {
                        terminal.insert(&idx.with_time_degree(l), v);
                    }
                }
                MeasureTag::Initial => unreachable!("initial moments have no slots"),
            }
        }
        Ok((occupation, terminal))
    }
}

/// Which moment matrix a PSD block represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Moment,
    Localizing,
}

/// Real symmetric block `S(x) = Σ_v x_v F_v + F_const` stored by upper-triangle entries.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdBlock<T> {
    pub label: String,
    pub dim: usize,
    /// `(row, col, var, coeff)` with `row ≤ col`; `var = None` is the constant part.
    pub entries: Vec<(usize, usize, Option<usize>, T)>,
}

impl<T: Real> PsdBlock<T> {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        Self {
            label: label.into(),
            dim,
            entries: Vec::new(),
        }
    }

    /// Adds an affine expression to the symmetric pair `(i, j)`/`(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, e: &LinExpr<T>) {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        for &(v, coeff) in &e.terms {
            self.entries.push((r, c, Some(v), coeff));
        }
        if e.constant != T::zero() {
            self.entries.push((r, c, None, e.constant));
        }
    }

    /// Merges duplicates and sorts by `(var, row, col)`.
    pub fn compress(&mut self) {
        let mut acc: BTreeMap<(Option<usize>, usize, usize), T> = BTreeMap::new();
        for &(r, c, v, coeff) in &self.entries {
            *acc.entry((v, r, c)).or_insert_with(T::zero) += coeff;
        }
        self.entries = acc
            .into_iter()
            .filter(|(_, c)| *c != T::zero())
            .map(|((v, r, c), coeff)| (r, c, v, coeff))
            .collect();
    }

    pub fn evaluate(&self, x: &[T]) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v, coeff) in &self.entries {
            let val = v.map_or(coeff, |v| coeff * x[v]);
            m[(r, c)] += val;
            if r != c {
                m[(c, r)] += val;
            }
        }
        m
    }
}

/// Sparse row `Σ coeff·x[var] = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow<T> {
    pub coeffs: Vec<(usize, T)>,
    pub rhs: T,
}

impl<T: Real> SparseRow<T> {
    pub fn residual(&self, x: &[T]) -> T {
        let lhs = self
            .coeffs
            .iter()
            .fold(T::zero(), |acc, &(v, c)| acc + c * x[v]);
        (lhs - self.rhs).abs()
    }
}

/// `min cᵀx` subject to affine equalities and PSD blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem<T> {
    pub num_vars: usize,
    pub blocks: Vec<PsdBlock<T>>,
    pub equalities: Vec<SparseRow<T>>,
    /// Sparse objective coefficients, sorted by variable.
    pub objective: Vec<(usize, T)>,
}

impl<T: Real> ConicProblem<T> {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            blocks: Vec::new(),
            equalities: Vec::new(),
            objective: Vec::new(),
        }
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        self.objective
            .iter()
            .fold(T::zero(), |acc, &(v, c)| acc + c * x[v])
    }

    pub fn max_equality_residual(&self, x: &[T]) -> T {
        self.equalities
            .iter()
            .fold(T::zero(), |acc, r| acc.max(r.residual(x)))
    }

    /// Smallest eigenvalue over all blocks (`+∞` without blocks).
    pub fn min_block_eigenvalue(&self, x: &[T]) -> T {
        self.blocks
            .iter()
            .map(|b| min_eigenvalue(b.evaluate(x)))
            .fold(T::max_value().unwrap_or_else(|| T::lit(f64::MAX)), |a, b| a.min(b))
    }

    /// Checks that every index is within bounds.
    pub fn validate(&self) -> Result<()> {
        let bad_var = |v: usize| v >= self.num_vars;
        for row in &self.equalities {
            if let Some(&(v, _)) = row.coeffs.iter().find(|(v, _)| bad_var(*v)) {
                return Err(Error::DimensionMismatch {
                    what: "equality variable index",
                    expected: self.num_vars,
                    found: v,
                });
            }
        }
        if let Some(&(v, _)) = self.objective.iter().find(|(v, _)| bad_var(*v)) {
            return Err(Error::DimensionMismatch {
                what: "objective variable index",
                expected: self.num_vars,
                found: v,
            });
        }
        for b in &self.blocks {
            for &(r, c, v, _) in &b.entries {
                if r > c || c >= b.dim {
                    return Err(Error::DimensionMismatch {
                        what: "block entry position",
                        expected: b.dim,
                        found: c.max(r),
                    });
                }
                if let Some(v) = v.filter(|v| bad_var(*v)) {
                    return Err(Error::DimensionMismatch {
                        what: "block variable index",
                        expected: self.num_vars,
                        found: v,
                    });
                }
            }
        }
        Ok(())
    }
}

pub fn min_eigenvalue<T: Real>(m: DMatrix<T>) -> T {
    if m.nrows() == 0 {
        return T::zero();
    }
    SymmetricEigen::new(m).eigenvalues.min()
}

/// `[[A, -B], [B, A]]` for `H = A + iB`.
pub fn hermitian_embedding<T: Real>(h: &DMatrix<Complex<T>>) -> DMatrix<T> {
    let m = h.nrows();
    DMatrix::from_fn(2 * m, 2 * m, |i, j| {
        let z = h[(i % m, j % m)];
        match (i < m, j < m) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Metadata for one block of the relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec {
    pub measure: MeasureTag,
    pub kind: BlockKind,
    pub basis: Vec<BasisMonomial>,
}

/// Assembled relaxation together with the data needed to interpret its solution.
#[derive(Debug, Clone)]
pub struct Relaxation<T: Real> {
    pub model: HeatModel<T>,
    pub degrees: TruncationDegrees,
    pub layout: VariableLayout,
    pub problem: ConicProblem<T>,
    pub block_specs: Vec<BlockSpec>,
    pub constraints: Vec<LinearConstraint<T>>,
    pub initial: MomentTable<T>,
}

pub fn build_layout(deg: &TruncationDegrees) -> VariableLayout {
    VariableLayout::new(deg)
}

/// Hermitian block of complex expressions, entries `(r, c)` for `r ≤ c`.
fn hermitian_block<T: Real>(
    basis: &[BasisMonomial],
    entry: impl Fn(&MomentIndex) -> Result<ComplexExpr<T>>,
    label: String,
) -> Result<PsdBlock<T>> {
    let m = basis.len();
    let mut block = PsdBlock::new(label, 2 * m);
    for r in 0..m {
        for c in r..m {
            let idx = entry_index(&basis[r], &basis[c]);
            let z = entry(&idx)?;
            let a = z.re.compress();
            block.add(r, c, &a);
            block.add(m + r, m + c, &a);
            if r != c {
                let b = z.im.compress();
                let mut neg_b = b.clone();
                for t in &mut neg_b.terms {
                    t.1 = -t.1;
                }
                neg_b.constant = -neg_b.constant;
                block.add(r, m + c, &neg_b);
                block.add(c, m + r, &b);
            }
        }
    }
    block.compress();
    Ok(block)
}

/// Builds moment/localizing blocks, the moment equations and the trace objective.
pub fn build_problem<T: Real>(
    model: &HeatModel<T>,
    deg: &TruncationDegrees,
    u0: &InitialData<T>,
) -> Result<Relaxation<T>> {
    deg.ensure_solvable()?;
    let layout = VariableLayout::new(deg);
    let mut problem = ConicProblem::new(layout.num_vars());
    let mut block_specs = Vec::new();

    let occ_basis = enumerate_matrix_basis(deg);
    let loc_basis = basis_monomials(deg.time / 2 - 1, deg.algebraic / 2, deg.harmonic);
    let term_basis = basis_monomials(0, deg.algebraic / 2, deg.harmonic);

    let occ = |idx: &MomentIndex| layout.expr::<T>(MeasureTag::Occupation, idx);
    problem.blocks.push(hermitian_block(
        &occ_basis,
        occ,
        "occupation moment".into(),
    )?);
    block_specs.push(BlockSpec {
        measure: MeasureTag::Occupation,
        kind: BlockKind::Moment,
        basis: occ_basis.clone(),
    });

    let localizing = |idx: &MomentIndex| -> Result<ComplexExpr<T>> {
        let l = idx.time_degree();
        let mut e = ComplexExpr::zero();
        let one = Complex::new(T::one(), T::zero());
        e.add_scaled(&occ(&idx.with_time_degree(l + 1))?, one);
        e.add_scaled(&occ(&idx.with_time_degree(l + 2))?, -one);
        Ok(e)
    };
    problem.blocks.push(hermitian_block(
        &loc_basis,
        localizing,
        "occupation localizing".into(),
    )?);
    block_specs.push(BlockSpec {
        measure: MeasureTag::Occupation,
        kind: BlockKind::Localizing,
        basis: loc_basis,
    });

    let term = |idx: &MomentIndex| layout.expr::<T>(MeasureTag::Terminal, idx);
    problem.blocks.push(hermitian_block(
        &term_basis,
        term,
        "terminal moment".into(),
    )?);
    block_specs.push(BlockSpec {
        measure: MeasureTag::Terminal,
        kind: BlockKind::Moment,
        basis: term_basis.clone(),
    });

    let initial = u0.table(deg);
    let constraints = generate_constraints(model, deg)?;
    for c in &constraints {
        let canon = canonicalize(&c.test_index);
        if canon.conjugated || canon.index != c.test_index {
            continue;
        }
        let mut lhs = ComplexExpr::zero();
        let mut rhs = c.rhs;
        for t in &c.terms {
            if t.measure == MeasureTag::Initial {
                let y0 = initial.get(&t.index).ok_or_else(|| Error::MissingMoment {
                    measure: MeasureTag::Initial,
                    index: t.index.clone(),
                })?;
                rhs -= t.coeff * y0;
            } else {
                lhs.add_scaled(&layout.expr(t.measure, &t.index)?, t.coeff);
            }
        }
        let scale = c
            .terms
            .iter()
            .fold(T::one(), |a, t| a.max(crate::scalar::modulus(t.coeff)));
        for (part, value) in [(lhs.re.compress(), rhs.re), (lhs.im.compress(), rhs.im)] {
            if part.terms.is_empty() && value.abs() <= T::lit(1e-14) * scale {
                continue;
            }
            problem.equalities.push(SparseRow {
                coeffs: part.terms,
                rhs: value - part.constant,
            });
        }
    }

    // Hermitian traces: diagonal entries are real, so sum the real parts once.
    let mut objective: BTreeMap<usize, T> = BTreeMap::new();
    for (measure, basis) in [(MeasureTag::Occupation, &occ_basis), (MeasureTag::Terminal, &term_basis)] {
        for b in basis {
            let e = layout.expr::<T>(measure, &entry_index(b, b))?;
            for &(v, c) in &e.re.terms {
                *objective.entry(v).or_insert_with(T::zero) += c;
            }
        }
    }
    problem.objective = objective.into_iter().collect();
    problem.validate()?;

    Ok(Relaxation {
        model: *model,
        degrees: *deg,
        layout,
        problem,
        block_specs,
        constraints,
        initial,
    })
}

impl<T: Real> Relaxation<T> {
    /// Pseudo-moment tables from a solution vector, with the initial data attached.
    pub fn extract_pseudomoments(&self, x: &[T]) -> Result<MeasureTables<T>> {
        let (occupation, terminal) = self.layout.extract(x)?;
        Ok(MeasureTables {
            initial: self.initial.clone(),
            terminal,
            occupation,
        })
    }

    /// Hermitian matrix of block `b` at the given tables.
    pub fn hermitian_block(&self, b: usize, tables: &MeasureTables<T>) -> Result<DMatrix<Complex<T>>> {
        let spec = &self.block_specs[b];
        let m = spec.basis.len();
        let mut h = DMatrix::from_element(m, m, Complex::default());
        for r in 0..m {
            for c in 0..m {
                let idx = entry_index(&spec.basis[r], &spec.basis[c]);
                let table = tables.table(spec.measure);
                let get = |i: &MomentIndex| {
                    table.get(i).ok_or_else(|| Error::MissingMoment {
                        measure: spec.measure,
                        index: i.clone(),
                    })
                };
                h[(r, c)] = match spec.kind {
                    BlockKind::Moment => get(&idx)?,
                    BlockKind::Localizing => {
                        let l = idx.time_degree();
                        get(&idx.with_time_degree(l + 1))? - get(&idx.with_time_degree(l + 2))?
                    }
                };
            }
        }
        Ok(h)
    }
}

/// Free-function form of [`Relaxation::extract_pseudomoments`].
pub fn extract_pseudomoments<T: Real>(relaxation: &Relaxation<T>, x: &[T]) -> Result<MeasureTables<T>> {
    relaxation.extract_pseudomoments(x)
}
