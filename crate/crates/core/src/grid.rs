//! Uniform cell-centered mesh with finite-difference calculus and quadrature.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Boundary treatment of a [`Grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Mode {
    /// Indices wrap modulo `n`.
    Periodic,
    /// A finite window onto the real line with a constant far field.
    Line,
}

/// A uniform mesh of `n` cells. Samples live at `x_left + (i + 1/2) dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid {
    n: usize,
    dx: f64,
    x_left: f64,
    mode: Mode,
}

const C1: f64 = 8.0 / 12.0;
const C2: f64 = 1.0 / 12.0;

impl Grid {
    pub fn new(n: usize, dx: f64, x_left: f64, mode: Mode) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidParameter("grid needs at least 8 cells"));
        }
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::InvalidParameter("grid spacing must be positive"));
        }
        if !x_left.is_finite() {
            return Err(Error::InvalidParameter("x_left must be finite"));
        }
        Ok(Grid { n, dx, x_left, mode })
    }

    /// `n` cells covering `[x_left, x_left + length)`.
    pub fn with_length(n: usize, length: f64, x_left: f64, mode: Mode) -> Result<Self> {
        Self::new(n, length / n as f64, x_left, mode)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.dx
    }

    pub fn x_right(&self) -> f64 {
        self.x_left + self.length()
    }

    /// Cell center of cell `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.x_left + (i as f64 + 0.5) * self.dx
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Samples `f` at every cell center.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n).map(|i| f(self.x(i))).collect()
    }

    pub fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, found: f.len() });
        }
        Ok(())
    }

    /// Fourth-order first derivative. Periodic grids wrap; line grids use
    /// one-sided fourth-order stencils on the two outermost cells.
    pub fn derivative(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check(f)?;
        let n = self.n;
        let mut d = vec![0.0; n];
        match self.mode {
            Mode::Periodic => {
                self.central_into(f, &mut d, |j| f[wrap(j, n)]);
            }
            Mode::Line => {
                self.central_into(f, &mut d, |_| 0.0);
                let s = 1.0 / (12.0 * self.dx);
                d[0] = s * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]);
                d[1] = s * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]);
                let m = n - 1;
                d[m] = -s
                    * (-25.0 * f[m] + 48.0 * f[m - 1] - 36.0 * f[m - 2] + 16.0 * f[m - 3]
                        - 3.0 * f[m - 4]);
                d[m - 1] = -s
                    * (-3.0 * f[m] - 10.0 * f[m - 1] + 18.0 * f[m - 2] - 6.0 * f[m - 3]
                        + f[m - 4]);
            }
        }
        Ok(d)
    }

    /// Fourth-order central derivative that treats everything outside a line
    /// grid as the constant `far`. Identical to [`Grid::derivative`] on
    /// periodic grids.
    ///
    /// This is the stencil the dynamics uses: the one-sided closures are not
    /// stable under long explicit integration, while a constant far field is
    /// exactly what the line-mode contract promises.
    pub fn derivative_far(&self, f: &[f64], far: f64) -> Result<Vec<f64>> {
        match self.mode {
            Mode::Periodic => self.derivative(f),
            Mode::Line => {
                self.check(f)?;
                let mut d = vec![0.0; self.n];
                self.central_into(f, &mut d, |_| far);
                Ok(d)
            }
        }
    }

    /// Central stencil for all cells; `ghost(j)` supplies samples with
    /// `j < 0` or `j >= n`.
    fn central_into(&self, f: &[f64], d: &mut [f64], ghost: impl Fn(isize) -> f64) {
        let n = self.n;
        let at = |j: isize| -> f64 {
            if j >= 0 && (j as usize) < n {
                f[j as usize]
            } else {
                ghost(j)
            }
        };
        let s = 1.0 / self.dx;
        for i in 0..n {
            let j = i as isize;
            if i >= 2 && i + 2 < n {
                d[i] = s * (C1 * (f[i + 1] - f[i - 1]) - C2 * (f[i + 2] - f[i - 2]));
            } else {
                d[i] = s * (C1 * (at(j + 1) - at(j - 1)) - C2 * (at(j + 2) - at(j - 2)));
            }
        }
    }

    /// Midpoint rule `sum f_i dx`.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        self.check(f)?;
        Ok(f.iter().sum::<f64>() * self.dx)
    }

    /// Running trapezoid sum from the left edge: `F_0 = f_0 dx / 2`,
    /// `F_i = F_{i-1} + (f_{i-1} + f_i) dx / 2`. Line mode only.
    pub fn cumulative_integral(&self, f: &[f64]) -> Result<Vec<f64>> {
        if self.mode != Mode::Line {
            return Err(Error::WrongMode { op: "cumulative_integral" });
        }
        self.check(f)?;
        let h = 0.5 * self.dx;
        let mut out = Vec::with_capacity(self.n);
        let mut acc = f[0] * h;
        out.push(acc);
        for w in f.windows(2) {
            acc += (w[0] + w[1]) * h;
            out.push(acc);
        }
        Ok(out)
    }

    /// Cubic Lagrange interpolation of `f` at `x`. Periodic grids wrap `x`;
    /// line grids clamp the stencil to the domain and return `None` outside
    /// the span of cell centers.
    pub fn interpolate(&self, f: &[f64], x: f64) -> Option<f64> {
        let n = self.n;
        let s = (x - self.x_left) / self.dx - 0.5;
        if !s.is_finite() {
            return None;
        }
        let (base, frac) = match self.mode {
            Mode::Periodic => {
                let fl = libm::floor(s);
                (fl as isize - 1, s - fl)
            }
            Mode::Line => {
                if s < 0.0 || s > (n - 1) as f64 {
                    return None;
                }
                let fl = libm::floor(s) as isize;
                let b = (fl - 1).clamp(0, n as isize - 4);
                (b, s - b as f64 - 1.0)
            }
        };
        // Nodes at offsets -1, 0, 1, 2 relative to base + 1; `frac` is the
        // position measured from node 0.
        let t = frac;
        let w = [
            -t * (t - 1.0) * (t - 2.0) / 6.0,
            (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0,
            (t + 1.0) * t * (t - 1.0) / 6.0,
        ];
        let mut acc = 0.0;
        for (k, wk) in w.iter().enumerate() {
            let j = base + k as isize;
            let idx = match self.mode {
                Mode::Periodic => wrap(j, n),
                Mode::Line => j as usize,
            };
            acc += wk * f[idx];
        }
        Some(acc)
    }

    /// Wraps a coordinate into `[x_left, x_right)` on periodic grids.
    pub fn wrap_x(&self, x: f64) -> f64 {
        match self.mode {
            Mode::Periodic => {
                let l = self.length();
                let r = libm::fmod(x - self.x_left, l);
                let r = if r < 0.0 { r + l } else { r };
                self.x_left + r
            }
            Mode::Line => x,
        }
    }
}

pub(crate) fn wrap(j: isize, n: usize) -> usize {
    j.rem_euclid(n as isize) as usize
}

/// Maximum of `|f_i|`.
pub fn max_abs(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, v| if v.abs() > m { v.abs() } else { m })
}

pub fn max(f: &[f64]) -> f64 {
    f.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn min(f: &[f64]) -> f64 {
    f.iter().copied().fold(f64::INFINITY, f64::min)
}
