//! Tridiagonal kernels shared by the eigen-solver and the implicit scheme.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix: `diag[i]` and `off[i] = A[i][i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTri {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTri {
    pub fn zeros(n: usize) -> Self {
        Self {
            diag: vec![0.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.off[i] * x[i + 1];
            }
            y[i] = v;
        }
        y
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Number of eigenvalues of the pencil `(K, B)` strictly below `sigma`
/// (Sylvester inertia of `K − σB`, `B` positive definite).
pub fn sturm_count(k: &SymTri, b: &SymTri, sigma: f64) -> usize {
    let n = k.len();
    let scale = k.diag.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * scale;
    let mut count = 0;
    let mut q = 0.0;
    for i in 0..n {
        let t = k.diag[i] - sigma * b.diag[i];
        q = if i == 0 {
            t
        } else {
            let e = k.off[i - 1] - sigma * b.off[i - 1];
            let prev = if q == 0.0 { -tiny } else { q };
            t - e * e / prev
        };
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Solve a general tridiagonal system with partial pivoting.
/// `lower[i] = A[i+1][i]`, `upper[i] = A[i][i+1]`.
/// Zero pivots are replaced by `ε·‖A‖`, which is what inverse iteration needs.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 || lower.len() + 1 != n || upper.len() + 1 != n || rhs.len() != n {
        return Err(Error::InvalidArgument("tridiagonal dimensions disagree".into()));
    }
    let norm = diag
        .iter()
        .chain(lower)
        .chain(upper)
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    let tiny = (f64::EPSILON * norm).max(f64::MIN_POSITIVE);
    let guard = |v: f64| if v.abs() < tiny { if v < 0.0 { -tiny } else { tiny } } else { v };

    let mut d = diag.to_vec();
    let mut du = upper.to_vec();
    let mut dl = lower.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut b = rhs.to_vec();
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            let piv = guard(d[i]);
            d[i] = piv;
            let fact = dl[i] / piv;
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
            if i + 2 < n {
                du2[i] = 0.0;
            }
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = temp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
        dl[i] = 0.0;
    }
    d[n - 1] = guard(d[n - 1]);
    b[n - 1] /= d[n - 1];
    if n >= 2 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("tridiagonal solve produced non-finite values".into()));
    }
    Ok(b)
}

/// `(K − σB)⁻¹ rhs` for symmetric tridiagonal `K`, `B`.
pub fn solve_shifted(k: &SymTri, b: &SymTri, sigma: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let diag: Vec<f64> = k.diag.iter().zip(&b.diag).map(|(x, y)| x - sigma * y).collect();
    let off: Vec<f64> = k.off.iter().zip(&b.off).map(|(x, y)| x - sigma * y).collect();
    solve_tridiagonal(&off, &diag, &off, rhs)
}
