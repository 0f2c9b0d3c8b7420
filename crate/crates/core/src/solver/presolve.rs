//! Exact reductions applied before the iterative solve.
//!
//! * a row with one free variable fixes it;
//! * a homogeneous row over sign-definite variables of one orientation fixes
//!   them all to zero (a variable is sign-definite when it alone forms a
//!   block diagonal entry);
//! * a block diagonal entry that is identically zero zeroes its row and
//!   column, which is then deleted from the block.
//!
//! Every reduction holds on the whole feasible set, so the reduced problem
//! has the same solutions.

use std::collections::{BTreeMap, BTreeSet};

use crate::relaxation::{ConicProblem, PsdBlock, SparseRow};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct Presolved<T> {
    pub reduced: ConicProblem<T>,
    /// Value of every original variable that was fixed.
    pub fixed: Vec<Option<T>>,
    /// Original index of each reduced variable.
    pub kept: Vec<usize>,
    /// Some reduction contradicted the constraints.
    pub infeasible: bool,
}

impl<T: Real> Presolved<T> {
    /// Original-space point from a reduced solution.
    pub fn expand(&self, x_reduced: &[T]) -> Vec<T> {
        let mut x: Vec<T> = self.fixed.iter().map(|v| v.unwrap_or_else(T::zero)).collect();
        for (k, &orig) in self.kept.iter().enumerate() {
            x[orig] = x_reduced[k];
        }
        x
    }

    pub fn num_fixed(&self) -> usize {
        self.fixed.iter().filter(|v| v.is_some()).count()
    }
}

/// Affine expression split into free terms and a constant.
struct Affine<T> {
    terms: Vec<(usize, T)>,
    constant: T,
}

fn reduce<T: Real>(coeffs: impl Iterator<Item = (Option<usize>, T)>, fixed: &[Option<T>]) -> Affine<T> {
    let mut acc: BTreeMap<usize, T> = BTreeMap::new();
    let mut constant = T::zero();
    for (v, c) in coeffs {
        match v {
            None => constant += c,
            Some(v) => match fixed[v] {
                Some(val) => constant += c * val,
                None => *acc.entry(v).or_insert_with(T::zero) += c,
            },
        }
    }
    Affine {
        terms: acc.into_iter().filter(|(_, c)| *c != T::zero()).collect(),
        constant,
    }
}

struct Block<T> {
    label: String,
    /// Original row indices still present.
    alive: Vec<usize>,
    entries: BTreeMap<(usize, usize), Vec<(Option<usize>, T)>>,
}

impl<T: Real> Block<T> {
    fn from(b: &PsdBlock<T>) -> Self {
        let mut entries: BTreeMap<(usize, usize), Vec<(Option<usize>, T)>> = BTreeMap::new();
        for &(r, c, v, coeff) in &b.entries {
            entries.entry((r, c)).or_default().push((v, coeff));
        }
        Self {
            label: b.label.clone(),
            alive: (0..b.dim).collect(),
            entries,
        }
    }

    fn entry(&self, i: usize, j: usize) -> &[(Option<usize>, T)] {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.entries.get(&key).map_or(&[], |v| v.as_slice())
    }
}

pub fn presolve<T: Real>(problem: &ConicProblem<T>) -> Presolved<T> {
    let n = problem.num_vars;
    let mut fixed: Vec<Option<T>> = vec![None; n];
    let mut rows: Vec<SparseRow<T>> = problem.equalities.clone();
    let mut blocks: Vec<Block<T>> = problem.blocks.iter().map(Block::from).collect();
    let mut infeasible = false;

    loop {
        let mut changed = false;
        let mut sign: BTreeMap<usize, bool> = BTreeMap::new();
        let mut new_rows = Vec::new();

        for blk in &mut blocks {
            let mut dead = BTreeSet::new();
            for &i in &blk.alive {
                let d = reduce(blk.entry(i, i).iter().copied(), &fixed);
                if d.terms.is_empty() {
                    if d.constant < T::zero() {
                        infeasible = true;
                    } else if d.constant == T::zero() {
                        dead.insert(i);
                    }
                } else if d.terms.len() == 1 && d.constant == T::zero() {
                    sign.insert(d.terms[0].0, d.terms[0].1 > T::zero());
                }
            }
            for &i in &dead {
                for &j in &blk.alive {
                    if j == i {
                        continue;
                    }
                    let e = reduce(blk.entry(i, j).iter().copied(), &fixed);
                    match e.terms.len() {
                        0 if e.constant != T::zero() => infeasible = true,
                        0 => {}
                        1 if e.constant == T::zero() => {
                            if fixed[e.terms[0].0].is_none() {
                                fixed[e.terms[0].0] = Some(T::zero());
                            }
                        }
                        _ => new_rows.push(SparseRow {
                            coeffs: e.terms,
                            rhs: -e.constant,
                        }),
                    }
                }
            }
            if !dead.is_empty() {
                blk.alive.retain(|i| !dead.contains(i));
                changed = true;
            }
        }
        rows.extend(new_rows);

        let mut kept_rows = Vec::with_capacity(rows.len());
        for row in rows.drain(..) {
            let a = reduce(row.coeffs.iter().map(|&(v, c)| (Some(v), c)), &fixed);
            let rhs = row.rhs - a.constant;
            match a.terms.len() {
                0 => {
                    if rhs.abs() > T::lit(1e3) * T::default_epsilon() * (T::one() + row.rhs.abs()) {
                        infeasible = true;
                    }
                    changed = true;
                }
                1 => {
                    let (v, c) = a.terms[0];
                    fixed[v] = Some(rhs / c);
                    changed = true;
                }
                _ => {
                    let oriented: Option<Vec<bool>> = a
                        .terms
                        .iter()
                        .map(|&(v, c)| sign.get(&v).map(|&pos| pos == (c > T::zero())))
                        .collect();
                    let one_way = oriented
                        .as_ref()
                        .is_some_and(|o| o.iter().all(|&p| p) || o.iter().all(|&p| !p));
                    if rhs == T::zero() && one_way {
                        for &(v, _) in &a.terms {
                            fixed[v] = Some(T::zero());
                        }
                        changed = true;
                    } else {
                        kept_rows.push(SparseRow {
                            coeffs: a.terms,
                            rhs,
                        });
                    }
                }
            }
        }
        rows = kept_rows;
        if !changed || infeasible {
            break;
        }
    }

    let kept: Vec<usize> = (0..n).filter(|&v| fixed[v].is_none()).collect();
    let index: BTreeMap<usize, usize> = kept.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut reduced = ConicProblem::new(kept.len());
    reduced.objective = problem
        .objective
        .iter()
        .filter_map(|&(v, c)| index.get(&v).map(|&k| (k, c)))
        .collect();
    for row in rows {
        let a = reduce(row.coeffs.iter().map(|&(v, c)| (Some(v), c)), &fixed);
        if a.terms.is_empty() {
            continue;
        }
        reduced.equalities.push(SparseRow {
            coeffs: a.terms.iter().map(|&(v, c)| (index[&v], c)).collect(),
            rhs: row.rhs - a.constant,
        });
    }
    for blk in &blocks {
        if blk.alive.is_empty() {
            continue;
        }
        let pos: BTreeMap<usize, usize> = blk.alive.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut out = PsdBlock::new(blk.label.clone(), blk.alive.len());
        for (&(r, c), terms) in &blk.entries {
            let (Some(&pr), Some(&pc)) = (pos.get(&r), pos.get(&c)) else {
                continue;
            };
            let a = reduce(terms.iter().copied(), &fixed);
            for (v, coeff) in a.terms {
                out.entries.push((pr, pc, Some(index[&v]), coeff));
            }
            if a.constant != T::zero() {
                out.entries.push((pr, pc, None, a.constant));
            }
        }
        out.compress();
        reduced.blocks.push(out);
    }
    Presolved {
        reduced,
        fixed,
        kept,
        infeasible,
    }
}
