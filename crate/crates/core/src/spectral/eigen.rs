use super::operator::Tridiagonal;
use crate::error::{FracError, Result};
use crate::io::fmt_f64;
use nalgebra::{DMatrix, SymmetricEigen};
use std::io::Write;

/// Relative gap below which eigenvalues are treated as one multiple eigenvalue.
pub const GROUPING_TOL: f64 = 1e-8;

/// A distinct eigenvalue `rho` and the indices of the modes spanning its eigenspace.
#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    pub rho: f64,
    pub indices: Vec<usize>,
}

/// Eigenpairs of a discrete operator, orthonormal in `(u, v)_h = h sum u_i v_i`.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub h: f64,
    pub lambdas: Vec<f64>,
    pub modes: Vec<Vec<f64>>,
    pub groups: Vec<Group>,
    matrix: DMatrix<f64>,
}

impl EigenDecomposition {
    /// Decomposes a symmetric tridiagonal operator and keeps the lowest `n_modes` pairs.
    pub fn new(a: &Tridiagonal, h: f64, n_modes: usize) -> Result<Self> {
        if !a.is_symmetric() {
            return Err(FracError::Invalid("spectral decomposition needs a symmetric operator".into()));
        }
        Self::from_symmetric_matrix(a.to_dense(), h, n_modes)
    }

    pub fn from_symmetric_matrix(matrix: DMatrix<f64>, h: f64, n_modes: usize) -> Result<Self> {
        let n = matrix.nrows();
        if n_modes == 0 || n_modes > n {
            return Err(FracError::Invalid(format!("n_modes must lie in 1..={n}, got {n_modes}")));
        }
        let eig = SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, 10_000)
            .ok_or_else(|| FracError::Singular("symmetric eigensolver did not converge".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let scale = 1.0 / h.sqrt();
        let mut lambdas = Vec::with_capacity(n_modes);
        let mut modes = Vec::with_capacity(n_modes);
        for &k in order.iter().take(n_modes) {
            let col = eig.eigenvectors.column(k);
            let peak = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            // sign convention: first non-negligible entry positive
            let anchor = col.iter().find(|v| v.abs() > 1e-8 * peak).copied().unwrap_or(1.0);
            let sign = if anchor < 0.0 { -scale } else { scale };
            lambdas.push(eig.eigenvalues[k]);
            modes.push(col.iter().map(|v| v * sign).collect());
        }
        let lam_max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let groups = group(&lambdas, GROUPING_TOL * lam_max);
        Ok(EigenDecomposition {
            h,
            lambdas,
            modes,
            groups,
            matrix,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.lambdas.len()
    }

    pub fn n_interior(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.h * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// Applies the operator the decomposition was built from.
    pub fn apply_operator(&self, f: &[f64]) -> Vec<f64> {
        (&self.matrix * nalgebra::DVector::from_column_slice(f)).iter().copied().collect()
    }

    /// `(f, phi_n)_h` for every retained mode.
    pub fn project(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f.len())?;
        Ok(self.modes.iter().map(|m| self.inner(f, m)).collect())
    }

    /// `sum_n c_n phi_n`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.n_modes() {
            return Err(FracError::DimensionMismatch {
                expected: self.n_modes(),
                got: coeffs.len(),
            });
        }
        let mut out = vec![0.0; self.n_interior()];
        for (c, m) in coeffs.iter().zip(&self.modes) {
            for (o, v) in out.iter_mut().zip(m) {
                *o += c * v;
            }
        }
        Ok(out)
    }

    /// `||f||^2 - sum_n (f, phi_n)^2`: the energy outside the retained modes.
    pub fn parseval_tail(&self, f: &[f64]) -> Result<f64> {
        let c = self.project(f)?;
        let tail = self.inner(f, f) - c.iter().map(|x| x * x).sum::<f64>();
        Ok(tail.max(0.0))
    }

    /// `sum_n lambda_n^theta (f, phi_n) phi_n`.
    pub fn apply_fractional_power(&self, theta: f64, f: &[f64]) -> Result<Vec<f64>> {
        if theta != 0.0 && self.lambdas[0] <= 0.0 {
            return Err(FracError::Domain("fractional powers need a positive spectrum".into()));
        }
        let c: Vec<f64> = self
            .project(f)?
            .iter()
            .zip(&self.lambdas)
            .map(|(c, l)| if theta == 0.0 { *c } else { c * l.powf(theta) })
            .collect();
        self.synthesize(&c)
    }

    /// `sum_n (f, phi_n) / lambda_n phi_n`.
    pub fn apply_inverse(&self, f: &[f64]) -> Result<Vec<f64>> {
        let lam_max = self.lambdas[self.n_modes() - 1].abs();
        if self.lambdas[0] <= 1e-12 * lam_max {
            return Err(FracError::Singular(format!(
                "smallest eigenvalue {:e} is not positive",
                self.lambdas[0]
            )));
        }
        let c: Vec<f64> = self.project(f)?.iter().zip(&self.lambdas).map(|(c, l)| c / l).collect();
        self.synthesize(&c)
    }

    /// Orthogonal projection onto the eigenspace of `groups[g]`.
    pub fn apply_projector(&self, g: usize, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f.len())?;
        let mut out = vec![0.0; self.n_interior()];
        for &k in &self.groups[g].indices {
            let c = self.inner(f, &self.modes[k]);
            for (o, v) in out.iter_mut().zip(&self.modes[k]) {
                *o += c * v;
            }
        }
        Ok(out)
    }

    /// `max_n ||A phi_n - lambda_n phi_n|| / lambda_n` in the discrete norm.
    pub fn max_relative_residual(&self) -> f64 {
        self.modes
            .iter()
            .zip(&self.lambdas)
            .map(|(m, l)| {
                let am = self.apply_operator(m);
                let r: Vec<f64> = am.iter().zip(m).map(|(a, v)| a - l * v).collect();
                self.norm(&r) / l.abs().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }

    /// `max_{m,n} |(phi_m, phi_n)_h - delta_mn|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n_modes() {
            for j in 0..=i {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.inner(&self.modes[i], &self.modes[j]) - want).abs());
            }
        }
        worst
    }

    /// CSV with header `n,lambda`, modes numbered from 1.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["n", "lambda"])?;
        for (k, l) in self.lambdas.iter().enumerate() {
            out.write_record([(k + 1).to_string(), fmt_f64(*l)])?;
        }
        out.flush()?;
        Ok(())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_interior() {
            return Err(FracError::DimensionMismatch {
                expected: self.n_interior(),
                got: len,
            });
        }
        Ok(())
    }
}

fn group(lambdas: &[f64], tol: f64) -> Vec<Group> {
    let mut groups: Vec<Group> = Vec::new();
    for (k, &l) in lambdas.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (l - lambdas[*g.indices.last().unwrap()]).abs() <= tol => g.indices.push(k),
            _ => groups.push(Group { rho: l, indices: vec![k] }),
        }
    }
    for g in &mut groups {
        g.rho = g.indices.iter().map(|&k| lambdas[k]).sum::<f64>() / g.indices.len() as f64;
    }
    groups
}
