//! Positive semidefinite cone in scaled half-vectorized (svec) form.
//!
//! `svec` lists the upper triangle row by row with off-diagonals scaled by
//! `√2`, so the Euclidean inner product of svec vectors equals the trace
//! inner product of the matrices.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::scalar::Real;

pub fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of `(i, j)`, `i ≤ j`, in the svec of an `n × n` matrix.
pub fn svec_pos(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * n - i * (i + 1) / 2 + j
}

/// Recovers `n` from an svec length.
pub fn svec_order(len: usize) -> Option<usize> {
    let n = ((((8 * len + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    (svec_len(n) == len).then_some(n)
}

pub fn svec<T: Real>(m: &DMatrix<T>) -> Vec<T> {
    let n = m.nrows();
    let s2 = T::lit(2.0).sqrt();
    let mut out = Vec::with_capacity(svec_len(n));
    for i in 0..n {
        for j in i..n {
            let v = (m[(i, j)] + m[(j, i)]) * T::lit(0.5);
            out.push(if i == j { v } else { v * s2 });
        }
    }
    out
}

pub fn smat<T: Real>(v: &[T], n: usize) -> DMatrix<T> {
    let inv_s2 = T::one() / T::lit(2.0).sqrt();
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            if i == j {
                m[(i, i)] = v[k];
            } else {
                let x = v[k] * inv_s2;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
            k += 1;
        }
    }
    m
}

/// Nearest PSD matrix in Frobenius norm: negative eigenvalues clamped to zero.
pub fn project_psd<T: Real>(m: DMatrix<T>) -> DMatrix<T> {
    let n = m.nrows();
    if n == 0 {
        return m;
    }
    let sym = (&m + m.transpose()) * T::lit(0.5);
    let eig = SymmetricEigen::new(sym);
    if eig.eigenvalues.iter().all(|&l| l >= T::zero()) {
        return eig.recompose();
    }
    let mut out = DMatrix::zeros(n, n);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > T::zero() {
            let v = eig.eigenvectors.column(k);
            out += v * v.transpose() * l;
        }
    }
    out
}

/// Projects an svec vector in place; returns the smallest eigenvalue before projection.
pub fn project_svec<T: Real>(v: &mut [T], n: usize) -> T {
    let m = smat(v, n);
    let sym = (&m + m.transpose()) * T::lit(0.5);
    let eig = SymmetricEigen::new(sym);
    let min = eig.eigenvalues.min();
    if min >= T::zero() {
        return min;
    }
    let mut out = DMatrix::<T>::zeros(n, n);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > T::zero() {
            let col = eig.eigenvectors.column(k);
            out += col * col.transpose() * l;
        }
    }
    v.copy_from_slice(&svec(&out));
    min
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn svec_preserves_inner_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_symmetric(&mut rng, 4);
        let b = random_symmetric(&mut rng, 4);
        let tr = (&a * &b).trace();
        let dot: f64 = svec(&a).iter().zip(svec(&b)).map(|(x, y)| x * y).sum();
        assert!((tr - dot).abs() < 1e-14);
        assert!((smat(&svec(&a), 4) - &a).amax() < 1e-15);
    }

    #[test]
    fn svec_positions() {
        let n = 4;
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                assert_eq!(svec_pos(n, i, j), k);
                k += 1;
            }
        }
        assert_eq!(svec_order(10), Some(4));
        assert_eq!(svec_order(11), None);
    }

    #[test]
    fn projection_is_idempotent_and_nearest() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x = random_symmetric(&mut rng, 5);
            let p = project_psd(x.clone());
            let pp = project_psd(p.clone());
            assert!((&p - &pp).amax() < 1e-12);
            assert!(SymmetricEigen::new(p.clone()).eigenvalues.min() > -1e-12);
            let dist = (&x - &p).norm();
            for _ in 0..20 {
                let g = DMatrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
                let y = &g * g.transpose();
                assert!(dist <= (&x - &y).norm() + 1e-12);
            }
        }
    }

    #[test]
    fn svec_projection_matches_matrix_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_symmetric(&mut rng, 6);
        let mut v = svec(&x);
        let min = project_svec(&mut v, 6);
        assert!(min < 0.0);
        assert!((smat(&v, 6) - project_psd(x)).amax() < 1e-12);
    }
}
