//! SDPA sparse format (`.dat-s`) export and solution import.
//!
//! Problems are written in the SDPA primal convention
//! `min cᵀx  s.t.  Σ xᵢ Fᵢ − F₀ ⪰ 0`, so `F₀` holds the negated constant part
//! of each block. Equalities `aᵀx = r` become pairs `aᵀx − r ≥ 0`,
//! `r − aᵀx ≥ 0` on one trailing diagonal (LP) block.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::relaxation::{ConicProblem, PsdBlock, SparseRow};
use crate::scalar::Real;

/// Parsed contents of a `.dat-s` file.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpaFile {
    pub num_vars: usize,
    /// Positive sizes are dense symmetric blocks, negative ones diagonal.
    pub block_struct: Vec<i64>,
    pub c: Vec<f64>,
    /// `(matrix, block, i, j, value)`, all 1-based except `matrix` (0 is `F₀`).
    pub entries: Vec<(usize, usize, usize, usize, f64)>,
}

fn fmt<T: Real>(v: T) -> String {
    format!("{:.16e}", v.to_f64_lossy())
}

pub fn write_sdpa<T: Real, W: Write>(problem: &ConicProblem<T>, mut w: W, comment: &str) -> Result<()> {
    problem.validate()?;
    let comment = comment.replace(['\n', '\r'], " ");
    writeln!(w, "\"{comment}")?;
    writeln!(w, "{}", problem.num_vars)?;
    let lp = !problem.equalities.is_empty();
    writeln!(w, "{}", problem.blocks.len() + usize::from(lp))?;
    let mut sizes: Vec<String> = problem.blocks.iter().map(|b| b.dim.to_string()).collect();
    if lp {
        sizes.push(format!("-{}", 2 * problem.equalities.len()));
    }
    writeln!(w, "{}", sizes.join(" "))?;
    let mut c = vec![T::zero(); problem.num_vars];
    for &(v, coeff) in &problem.objective {
        c[v] += coeff;
    }
    writeln!(w, "{}", c.into_iter().map(fmt).collect::<Vec<_>>().join(" "))?;

    for (bi, blk) in problem.blocks.iter().enumerate() {
        let mut merged: BTreeMap<(usize, usize, usize), T> = BTreeMap::new();
        for &(r, c, v, coeff) in &blk.entries {
            let (mat, val) = match v {
                Some(v) => (v + 1, coeff),
                None => (0, -coeff),
            };
            *merged.entry((mat, r, c)).or_insert_with(T::zero) += val;
        }
        for ((mat, r, c), val) in merged {
            if val != T::zero() {
                writeln!(w, "{mat} {} {} {} {}", bi + 1, r + 1, c + 1, fmt(val))?;
            }
        }
    }
    if lp {
        let blk = problem.blocks.len() + 1;
        for (k, row) in problem.equalities.iter().enumerate() {
            let (pos, neg) = (2 * k + 1, 2 * k + 2);
            if row.rhs != T::zero() {
                writeln!(w, "0 {blk} {pos} {pos} {}", fmt(row.rhs))?;
                writeln!(w, "0 {blk} {neg} {neg} {}", fmt(-row.rhs))?;
            }
            for &(v, a) in &row.coeffs {
                writeln!(w, "{} {blk} {pos} {pos} {}", v + 1, fmt(a))?;
                writeln!(w, "{} {blk} {neg} {neg} {}", v + 1, fmt(-a))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Lines with their 1-based numbers, comments dropped and separators blanked.
fn data_lines<R: Read>(r: R) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('"') || t.starts_with('*') {
            continue;
        }
        out.push((i + 1, t.replace(['{', '}', '(', ')', ','], " ")));
    }
    Ok(out)
}

pub fn read_sdpa<R: Read>(r: R) -> Result<SdpaFile> {
    let lines = data_lines(r)?;
    let mut it = lines.iter();
    let mut next = |what: &str| {
        it.next().ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("unexpected end of file before {what}"),
        })
    };
    let perr = |line: usize, msg: String| Error::Parse { line, msg };
    let first_int = |(line, s): &(usize, String), what: &str| -> Result<i64> {
        s.split_whitespace()
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| perr(*line, format!("expected {what}")))
    };
    let m_line = next("mDim")?;
    let num_vars = usize::try_from(first_int(m_line, "mDim")?).map_err(|_| perr(m_line.0, "negative mDim".into()))?;
    let nb_line = next("nBlock")?;
    let nblock = first_int(nb_line, "nBlock")? as usize;
    let (bl, bs) = next("block structure")?;
    let block_struct: Vec<i64> = bs
        .split_whitespace()
        .take(nblock)
        .map(|t| t.parse().map_err(|_| perr(*bl, format!("bad block size {t:?}"))))
        .collect::<Result<_>>()?;
    if block_struct.len() != nblock || block_struct.contains(&0) {
        return Err(perr(*bl, format!("expected {nblock} nonzero block sizes")));
    }
    let mut c = Vec::with_capacity(num_vars);
    let mut c_line = 0;
    while c.len() < num_vars {
        let (l, s) = next("objective vector")?;
        c_line = *l;
        for t in s.split_whitespace() {
            c.push(t.parse().map_err(|_| perr(*l, format!("bad objective entry {t:?}")))?);
        }
    }
    if c.len() != num_vars {
        return Err(perr(c_line, format!("objective has {} entries, expected {num_vars}", c.len())));
    }
    let mut entries = Vec::new();
    for (l, s) in it {
        let toks: Vec<&str> = s.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(perr(*l, format!("expected 5 fields, found {}", toks.len())));
        }
        let int = |t: &str| t.parse::<usize>().map_err(|_| perr(*l, format!("bad integer {t:?}")));
        let (mat, blk, i, j) = (int(toks[0])?, int(toks[1])?, int(toks[2])?, int(toks[3])?);
        let val: f64 = toks[4].parse().map_err(|_| perr(*l, format!("bad value {:?}", toks[4])))?;
        if mat > num_vars || blk == 0 || blk > nblock {
            return Err(perr(*l, format!("entry refers to matrix {mat} block {blk}")));
        }
        let size = block_struct[blk - 1].unsigned_abs() as usize;
        if i == 0 || j == 0 || i > size || j > size || (block_struct[blk - 1] < 0 && i != j) {
            return Err(perr(*l, format!("position ({i}, {j}) outside block {blk}")));
        }
        entries.push((mat, blk, i.min(j), i.max(j), val));
    }
    Ok(SdpaFile {
        num_vars,
        block_struct,
        c,
        entries,
    })
}

impl SdpaFile {
    /// Rebuilds a [`ConicProblem`].
    ///
    /// Diagonal blocks whose entries come in negated pairs are read back as
    /// equalities; any other diagonal entry becomes a `1 × 1` PSD block.
    pub fn to_problem<T: Real>(&self) -> ConicProblem<T> {
        let mut p = ConicProblem::new(self.num_vars);
        p.objective = self
            .c
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, T::lit(v)))
            .collect();
        let push = |blk: &mut PsdBlock<T>, r: usize, c: usize, mat: usize, val: f64| {
            let (v, coeff) = if mat == 0 { (None, -val) } else { (Some(mat - 1), val) };
            blk.entries.push((r, c, v, T::lit(coeff)));
        };
        for (bi, &size) in self.block_struct.iter().enumerate() {
            let in_block = || self.entries.iter().filter(move |e| e.1 == bi + 1);
            if size > 0 {
                let mut blk = PsdBlock::new(format!("block{}", bi + 1), size as usize);
                for &(mat, _, i, j, val) in in_block() {
                    push(&mut blk, i - 1, j - 1, mat, val);
                }
                blk.compress();
                p.blocks.push(blk);
                continue;
            }
            let n = size.unsigned_abs() as usize;
            let mut diag: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
            for &(mat, _, i, _, val) in in_block() {
                *diag[i - 1].entry(mat).or_default() += val;
            }
            let mut k = 0;
            while k < n {
                let paired = k + 1 < n
                    && !diag[k].is_empty()
                    && diag[k].len() == diag[k + 1].len()
                    && diag[k]
                        .iter()
                        .all(|(m, v)| diag[k + 1].get(m).is_some_and(|w| *w == -v));
                if paired {
                    let rhs = diag[k].get(&0).copied().unwrap_or(0.0);
                    let coeffs = diag[k]
                        .iter()
                        .filter(|(m, _)| **m != 0)
                        .map(|(m, v)| (m - 1, T::lit(*v)))
                        .collect();
                    p.equalities.push(SparseRow {
                        coeffs,
                        rhs: T::lit(rhs),
                    });
                    k += 2;
                } else {
                    let mut blk = PsdBlock::new(format!("block{}.{}", bi + 1, k + 1), 1);
                    for (&mat, &val) in &diag[k] {
                        push(&mut blk, 0, 0, mat, val);
                    }
                    blk.compress();
                    p.blocks.push(blk);
                    k += 1;
                }
            }
        }
        p
    }
}

/// Reads one value per line (blank lines and `#` comments skipped).
pub fn import_solution<T: Real, R: Read>(r: R, num_vars: usize) -> Result<Vec<T>> {
    let mut x = Vec::with_capacity(num_vars);
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| Error::Parse {
            line: i + 1,
            msg: format!("expected a number, found {t:?}"),
        })?;
        x.push(T::lit(v));
    }
    if x.len() != num_vars {
        return Err(Error::DimensionMismatch {
            what: "imported solution length",
            expected: num_vars,
            found: x.len(),
        });
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ConicProblem<f64> {
        let mut p = ConicProblem::new(3);
        let mut blk = PsdBlock::new("X", 2);
        blk.entries = vec![
            (0, 0, None, 1.0),
            (0, 0, Some(0), 1.0),
            (0, 1, Some(1), 0.5),
            (1, 1, Some(2), 1.0),
        ];
        blk.compress();
        p.blocks.push(blk);
        p.equalities.push(SparseRow {
            coeffs: vec![(0, 1.0), (2, -2.0)],
            rhs: 0.25,
        });
        p.objective = vec![(0, 1.0), (2, 1.0)];
        p
    }

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        write_sdpa(&sample(), &mut buf, "demo").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "\"demo");
        assert_eq!(lines[1], "3");
        assert_eq!(lines[2], "2");
        assert_eq!(lines[3], "2 -2");
        assert!(lines[5].starts_with("0 1 1 1 -1.0"), "{}", lines[5]);
    }

    #[test]
    fn round_trip() {
        let p = sample();
        let mut buf = Vec::new();
        write_sdpa(&p, &mut buf, "rt").unwrap();
        let back: ConicProblem<f64> = read_sdpa(buf.as_slice()).unwrap().to_problem();
        assert_eq!(back.num_vars, p.num_vars);
        assert_eq!(back.objective, p.objective);
        assert_eq!(back.equalities, p.equalities);
        assert_eq!(back.blocks[0].entries, p.blocks[0].entries);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "\"c\n1\n1\n2\n1.0\n1 1 3 1 2.0\n";
        match read_sdpa(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn import_checks_length() {
        let x: Vec<f64> = import_solution("1.0\n\n# c\n2.5\n".as_bytes(), 2).unwrap();
        assert_eq!(x, vec![1.0, 2.5]);
        let err = import_solution::<f64, _>("1\n2\n3\n".as_bytes(), 2).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, found: 3, .. }));
    }
}
