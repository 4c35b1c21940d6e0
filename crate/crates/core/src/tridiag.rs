//! Tridiagonal and cyclic tridiagonal linear systems.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Relative residual above which a solve is reported as failed.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Row `i` reads `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1]`. In a cyclic
/// system `corner.0` is the entry at row 0, column n-1 and `corner.1` the entry
/// at row n-1, column 0; `sub[0]` and `sup[n-1]` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub corner: (f64, f64),
}

impl TridiagonalSystem {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn is_cyclic(&self) -> bool {
        self.corner != (0.0, 0.0)
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), found: v.len() });
        }
        Ok(())
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.sub[i] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y[0] += self.corner.0 * x[n - 1];
        y[n - 1] += self.corner.1 * x[0];
        Ok(y)
    }

    /// Entry `(i, j)` of the dense matrix.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let n = self.len();
        let mut v = 0.0;
        if i == j {
            v += self.diag[i];
        }
        if j + 1 == i {
            v += self.sub[i];
        }
        if i + 1 == j {
            v += self.sup[i];
        }
        if i == 0 && j == n - 1 {
            v += self.corner.0;
        }
        if i == n - 1 && j == 0 {
            v += self.corner.1;
        }
        v
    }

    pub fn factor(&self) -> Result<Factored> {
        Factored::new(self)
    }

    /// Solves `A x = rhs` and verifies the residual.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.check(rhs)?;
        let x = self.factor()?.solve(rhs);
        self.verify(&x, rhs)?;
        Ok(x)
    }

    /// Fails when `|A x - rhs|_inf > RESIDUAL_TOLERANCE * |rhs|_inf` or when
    /// `x` is not finite.
    pub fn verify(&self, x: &[f64], rhs: &[f64]) -> Result<()> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear solve"));
        }
        let ax = self.apply(x)?;
        let scale = crate::grid::max_abs(rhs);
        let res = ax.iter().zip(rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if res > RESIDUAL_TOLERANCE * scale {
            return Err(Error::SolverFailure { residual: if scale > 0.0 { res / scale } else { res } });
        }
        Ok(())
    }
}

/// A factorization that can be reused for many right-hand sides.
#[derive(Debug, Clone)]
pub struct Factored {
    /// Thomas sweep: modified super-diagonal and reciprocal pivots.
    cp: Vec<f64>,
    inv_pivot: Vec<f64>,
    sub: Vec<f64>,
    /// Sherman-Morrison data for the cyclic case.
    cyclic: Option<Cyclic>,
}

#[derive(Debug, Clone)]
struct Cyclic {
    gamma: f64,
    beta: f64,
    z: Vec<f64>,
    denom: f64,
}

impl Factored {
    fn new(sys: &TridiagonalSystem) -> Result<Self> {
        let n = sys.len();
        if n < 3 {
            return Err(Error::InvalidParameter("tridiagonal system needs 3 rows"));
        }
        let mut diag = sys.diag.clone();
        let mut sub = sys.sub.clone();
        sub[0] = 0.0;
        let cyc = sys.is_cyclic();
        let (beta, alpha) = sys.corner;
        let gamma = -diag[0];
        if cyc {
            diag[0] -= gamma;
            diag[n - 1] -= alpha * beta / gamma;
        }
        let mut cp = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        let mut prev_cp = 0.0;
        for i in 0..n {
            let piv = diag[i] - sub[i] * prev_cp;
            if piv == 0.0 || !piv.is_finite() {
                return Err(Error::SolverFailure { residual: f64::INFINITY });
            }
            inv_pivot[i] = 1.0 / piv;
            cp[i] = if i + 1 < n { sys.sup[i] * inv_pivot[i] } else { 0.0 };
            prev_cp = cp[i];
        }
        let mut f = Factored { cp, inv_pivot, sub, cyclic: None };
        if cyc {
            let mut u = vec![0.0; n];
            u[0] = gamma;
            u[n - 1] = alpha;
            let z = f.thomas(&u);
            let denom = 1.0 + z[0] + beta * z[n - 1] / gamma;
            f.cyclic = Some(Cyclic { gamma, beta, z, denom });
        }
        Ok(f)
    }

    fn thomas(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut x = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            prev = (rhs[i] - self.sub[i] * prev) * self.inv_pivot[i];
            x[i] = prev;
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.cp[i] * x[i + 1];
        }
        x
    }

    /// Solves without a residual check.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = self.thomas(rhs);
        if let Some(c) = &self.cyclic {
            let n = x.len();
            let fact = (x[0] + c.beta * x[n - 1] / c.gamma) / c.denom;
            for (xi, zi) in x.iter_mut().zip(&c.z) {
                *xi -= fact * zi;
            }
        }
        x
    }

    /// Pivots of the (non-cyclic part of the) elimination; all positive for
    /// a symmetric positive-definite system.
    pub fn pivots(&self) -> Vec<f64> {
        self.inv_pivot.iter().map(|p| 1.0 / p).collect()
    }
}
