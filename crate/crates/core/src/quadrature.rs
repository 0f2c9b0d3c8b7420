//! Gauss–Legendre and composite Simpson quadrature.

use crate::scalar::Real;

/// Gauss–Legendre rule mapped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Nodes are roots of `P_n`, found by Newton iteration from Chebyshev-like guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let half = T::lit(0.5);
        let pi = T::pi();
        let nf = T::from_usize_lossy(n);
        for i in 0..n.div_ceil(2) {
            let mut x = (pi * (T::from_usize_lossy(i + 1) - T::lit(0.25)) / (nf + half)).cos();
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= T::default_epsilon() * T::lit(4.0) {
                    let (_, d) = legendre(n, x);
                    dp = d;
                    break;
                }
            }
            let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
            // map [-1,1] -> [0,1]
            nodes[i] = half * (T::one() - x);
            nodes[n - 1 - i] = half * (T::one() + x);
            weights[i] = half * w;
            weights[n - 1 - i] = half * w;
        }
        Self { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(T) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::from_usize_lossy(k);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::from_usize_lossy(n);
    let dp = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, dp)
}

/// Composite Simpson weights for `intervals` equal steps of width `h`.
///
/// An odd interval count closes with Simpson's 3/8 rule on the last three.
pub fn simpson_weights<T: Real>(intervals: usize, h: T) -> Vec<T> {
    assert!(intervals >= 2, "Simpson needs at least two intervals");
    let mut w = vec![T::zero(); intervals + 1];
    let (simpson_end, tail) = if intervals.is_multiple_of(2) {
        (intervals, false)
    } else {
        (intervals - 3, true)
    };
    let third = h / T::lit(3.0);
    let mut i = 0;
    while i + 2 <= simpson_end {
        w[i] += third;
        w[i + 1] += T::lit(4.0) * third;
        w[i + 2] += third;
        i += 2;
    }
    if tail {
        let e = T::lit(3.0) * h / T::lit(8.0);
        let s = simpson_end;
        w[s] += e;
        w[s + 1] += T::lit(3.0) * e;
        w[s + 2] += T::lit(3.0) * e;
        w[s + 3] += e;
    }
    w
}
