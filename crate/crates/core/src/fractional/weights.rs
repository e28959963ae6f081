use crate::mittag_leffler::MlKernel;
use nalgebra::{DMatrix, DVector};

/// Exact product-integration weights for `int_0^{t_i} k(t_i - s) v(s) ds` with
/// `v` piecewise linear on a uniform grid.
///
/// `out_i = diag v_i + sum_{j=1}^{i-1} lag[i-j] v_j + first[i] v_0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductWeights {
    pub diag: f64,
    pub lag: Vec<f64>,
    pub first: Vec<f64>,
}

impl ProductWeights {
    pub fn new(kernel: &MlKernel, h: f64, n: usize) -> Self {
        let f1: Vec<f64> = (0..n).map(|k| kernel.f1(k as f64 * h)).collect();
        let f2: Vec<f64> = (0..n).map(|k| kernel.f2(k as f64 * h)).collect();
        Self::from_antiderivatives(&f1, &f2, h)
    }

    /// Builds the weights from `F1(k h)` and `F2(k h)`, `k = 0..n`.
    pub fn from_antiderivatives(f1: &[f64], f2: &[f64], h: f64) -> Self {
        let n = f1.len();
        let diag = if n > 1 { f2[1] / h } else { 0.0 };
        let mut lag = vec![0.0; n];
        let mut first = vec![0.0; n];
        for k in 1..n {
            if k + 1 < n {
                lag[k] = (f2[k + 1] - 2.0 * f2[k] + f2[k - 1]) / h;
            }
            first[k] = f1[k] - (f2[k] - f2[k - 1]) / h;
        }
        ProductWeights { diag, lag, first }
    }

    pub fn len(&self) -> usize {
        self.lag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lag.is_empty()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        assert!(n <= self.lag.len(), "weights built for {} nodes, got {n}", self.lag.len());
        let mut out = vec![0.0; n];
        for i in 1..n {
            let mut s = self.diag * v[i] + self.first[i] * v[0];
            for j in 1..i {
                s += self.lag[i - j] * v[j];
            }
            out[i] = s;
        }
        out
    }

    /// Dense lower-triangular matrix of [`apply`](Self::apply) on `n` nodes.
    pub fn matrix(&self, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| {
            if i == 0 || j > i {
                0.0
            } else if j == i {
                self.diag
            } else if j == 0 {
                self.first[i]
            } else {
                self.lag[i - j]
            }
        })
    }

    /// Inverts [`apply`](Self::apply) on nodes `1..n`, closing node 0 by
    /// polynomial extrapolation from the next (up to four) nodes.
    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        let mut w = vec![0.0; n];
        if n < 2 {
            return w;
        }
        let closure = extrapolation_coefficients(n);
        let m = closure.len();
        let mut a = DMatrix::zeros(m, m);
        let mut rhs = DVector::zeros(m);
        for i in 1..=m {
            for j in 1..=i {
                a[(i - 1, j - 1)] += if j == i { self.diag } else { self.lag[i - j] };
            }
            for (j, cj) in closure.iter().enumerate() {
                a[(i - 1, j)] += self.first[i] * cj;
            }
            rhs[i - 1] = v[i];
        }
        let head = a.lu().solve(&rhs).expect("product weights have a nonzero diagonal");
        for j in 0..m {
            w[j + 1] = head[j];
        }
        w[0] = closure.iter().enumerate().map(|(j, c)| c * w[j + 1]).sum();
        for i in m + 1..n {
            let mut s = v[i] - self.first[i] * w[0];
            for j in 1..i {
                s -= self.lag[i - j] * w[j];
            }
            w[i] = s / self.diag;
        }
        w
    }
}

/// Coefficients `c_j` with `w_0 = sum_j c_j w_{j+1}`: polynomial extrapolation
/// of degree up to three, limited by how many nodes exist.
pub(crate) fn extrapolation_coefficients(n: usize) -> &'static [f64] {
    match n {
        0..=2 => &[1.0],
        3 => &[2.0, -1.0],
        4 => &[3.0, -3.0, 1.0],
        _ => &[4.0, -6.0, 4.0, -1.0],
    }
}
