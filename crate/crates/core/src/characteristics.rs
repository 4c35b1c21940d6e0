//! Characteristics traced through stored runs, the Riccati-type equations
//! along them, and the square integrals of `P` and `Q` along a crossing pair.

use alloc::vec::Vec;

use crate::dynamics::SimHistory;
use crate::elliptic;
use crate::grid::{Grid, Mode};
use crate::kinematics::{self, FlowState};
use crate::regularization::{self, RegFields};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Branch {
    /// Speed `eta = u + sqrt(3 gamma) h^{-1/2}`; carries the `Q` equation.
    Plus,
    /// Speed `lambda = u - sqrt(3 gamma) h^{-1/2}`; carries the `P` equation.
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sample {
    pub t: f64,
    /// Position, not wrapped on periodic grids.
    pub x: f64,
    pub p: f64,
    pub q: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CharPath {
    pub branch: Branch,
    pub x0: f64,
    pub samples: Vec<Sample>,
    /// The path left a line grid before the end of the history.
    pub exited: bool,
}

impl CharPath {
    /// The invariant the path carries: `Q` on plus paths, `P` on minus paths.
    pub fn carried(&self) -> Vec<f64> {
        self.samples
            .iter()
            .map(|s| match self.branch {
                Branch::Plus => s.q,
                Branch::Minus => s.p,
            })
            .collect()
    }
}

/// Per-snapshot fields needed for tracing and for the Riccati right-hand
/// sides.
#[derive(Debug, Clone)]
struct Frame {
    t: f64,
    lam: Vec<f64>,
    eta: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    rhs_p: Vec<f64>,
    rhs_q: Vec<f64>,
}

/// Precomputed snapshot fields of one history; trace as many paths as
/// needed against it.
#[derive(Debug, Clone)]
pub struct Tracer {
    grid: Grid,
    frames: Vec<Frame>,
}

fn frame(s: &FlowState, hist: &SimHistory) -> Result<Frame> {
    let (g, p) = (&hist.grid, &hist.params);
    let (lam, eta) = kinematics::char_speeds(s, p)?;
    let (hx, ux) = kinematics::gradients(s, p, g)?;
    let (pp, qq) = kinematics::pq_from_gradients(&s.h, &hx, &ux, p);
    let r = elliptic::script_r(s, p, g)?;
    let reg = if p.epsilon > 0.0 { regularization::reg_fields(s, p, g)? } else { RegFields::zeros(g.n()) };
    let (m, nn) = regularization::compute_mn(&s.h, &r, &reg.v1, &reg.v2);
    let n = g.n();
    let mut rhs_p = Vec::with_capacity(n);
    let mut rhs_q = Vec::with_capacity(n);
    for i in 0..n {
        let e = 1.0 / (8.0 * s.h[i]);
        let (a, b) = (pp[i], qq[i]);
        let damp = reg.a_x[i] / (2.0 * s.h[i]);
        rhs_p.push(-e * a * a + e * reg.chi_p[i] + e * b * b - damp * a + m[i]);
        rhs_q.push(-e * b * b + e * reg.chi_q[i] + e * a * a - damp * b + nn[i]);
    }
    Ok(Frame { t: s.t, lam, eta, p: pp, q: qq, rhs_p, rhs_q })
}

impl Tracer {
    pub fn new(history: &SimHistory) -> Result<Self> {
        if history.snapshots.len() < 2 {
            return Err(Error::OutOfRange("tracing needs at least two snapshots"));
        }
        let frames = history.snapshots.iter().map(|s| frame(s, history)).collect::<Result<_>>()?;
        Ok(Tracer { grid: history.grid, frames })
    }

    fn speed(&self, k: usize, branch: Branch) -> &[f64] {
        match branch {
            Branch::Plus => &self.frames[k].eta,
            Branch::Minus => &self.frames[k].lam,
        }
    }

    fn at(&self, f: &[f64], x: f64) -> Option<f64> {
        self.grid.interpolate(f, x)
    }

    /// Midpoint-rule integration of `dx/dt = speed(t, x)` with speeds linear
    /// in time between snapshots and cubic in space.
    pub fn trace(&self, x0: f64, branch: Branch) -> Result<CharPath> {
        let inside = |x: f64| self.grid.mode() == Mode::Periodic || self.at(&self.frames[0].p, x).is_some();
        if !inside(x0) {
            return Err(Error::OutOfRange("launch point outside the grid"));
        }
        let mut samples = Vec::with_capacity(self.frames.len());
        let mut exited = false;
        let mut x = x0;
        for k in 0..self.frames.len() {
            let f = &self.frames[k];
            let (Some(p), Some(q), Some(v)) =
                (self.at(&f.p, x), self.at(&f.q, x), self.at(self.speed(k, branch), x))
            else {
                exited = true;
                break;
            };
            samples.push(Sample { t: f.t, x, p, q, speed: v });
            if k + 1 == self.frames.len() {
                break;
            }
            let dt = self.frames[k + 1].t - f.t;
            let mid = |xx: f64| -> Option<f64> {
                let a = self.at(self.speed(k, branch), xx)?;
                let b = self.at(self.speed(k + 1, branch), xx)?;
                Some(0.5 * (a + b))
            };
            let xm = x + 0.5 * dt * v;
            match mid(xm) {
                Some(vm) => x += dt * vm,
                None => {
                    exited = true;
                    break;
                }
            }
        }
        Ok(CharPath { branch, x0, samples, exited })
    }

    /// Material derivative of the carried invariant minus the right-hand side
    /// of its Riccati-type equation, at every sample of `path`.
    pub fn riccati_residual(&self, path: &CharPath) -> Result<RiccatiResidual> {
        let s = &path.samples;
        if s.len() < 3 {
            return Err(Error::OutOfRange("path needs at least three samples"));
        }
        let v = path.carried();
        let mut out = Vec::with_capacity(s.len());
        for k in 0..s.len() {
            let (a, b, c) = if k == 0 {
                (0, 1, 2)
            } else if k == s.len() - 1 {
                (k - 2, k - 1, k)
            } else {
                (k - 1, k, k + 1)
            };
            let (ta, tb, tc, t) = (s[a].t, s[b].t, s[c].t, s[k].t);
            let wa = ((t - tb) + (t - tc)) / ((ta - tb) * (ta - tc));
            let wb = ((t - ta) + (t - tc)) / ((tb - ta) * (tb - tc));
            let wc = ((t - ta) + (t - tb)) / ((tc - ta) * (tc - tb));
            let d = wa * v[a] + wb * v[b] + wc * v[c];
            let f = &self.frames[k];
            let field = match path.branch {
                Branch::Plus => &f.rhs_q,
                Branch::Minus => &f.rhs_p,
            };
            let r = self.at(field, s[k].x).ok_or(Error::OutOfRange("path left the grid"))?;
            out.push(d - r);
        }
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let undersampled = v.windows(2).any(|w| (w[1] - w[0]).abs() > 0.25 * scale);
        Ok(RiccatiResidual { residuals: out, undersampled })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RiccatiResidual {
    pub residuals: Vec<f64>,
    /// The carried value jumps by more than a quarter of its range between
    /// consecutive samples.
    pub undersampled: bool,
}

impl RiccatiResidual {
    pub fn max_abs(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

pub fn trace(history: &SimHistory, x0: f64, branch: Branch) -> Result<CharPath> {
    Tracer::new(history)?.trace(x0, branch)
}

pub fn riccati_residual(history: &SimHistory, path: &CharPath) -> Result<RiccatiResidual> {
    Tracer::new(history)?.riccati_residual(path)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SquareIntegral {
    pub value: f64,
    /// Integration window actually used.
    pub from: f64,
    pub to: f64,
    /// Whether the paths met; when false the window is the common time span.
    pub met: bool,
}

/// `int_tau^t P^2 ds` along `path_p` plus `int_tau^t Q^2 ds` along `path_q`,
/// where `t` is the first time the paths meet. `path_p` is the plus path
/// launched left of the minus path `path_q`.
pub fn pq_square_integral(path_p: &CharPath, path_q: &CharPath, tau: f64) -> SquareIntegral {
    let a = &path_p.samples;
    let b = &path_q.samples;
    let common = a.len().min(b.len());
    let mut t_end = if common > 0 { a[common - 1].t } else { tau };
    let mut met = false;
    for k in 0..common {
        if a[k].x >= b[k].x {
            met = true;
            t_end = if k == 0 {
                a[0].t
            } else {
                let d0 = b[k - 1].x - a[k - 1].x;
                let d1 = b[k].x - a[k].x;
                a[k - 1].t + (a[k].t - a[k - 1].t) * d0 / (d0 - d1)
            };
            break;
        }
    }
    let integral = |s: &[Sample], val: fn(&Sample) -> f64| -> f64 {
        let mut acc = 0.0;
        for w in s.windows(2) {
            let lo = w[0].t.max(tau);
            let hi = w[1].t.min(t_end);
            if hi <= lo {
                continue;
            }
            let span = w[1].t - w[0].t;
            let at = |t: f64| {
                let th = (t - w[0].t) / span;
                let v = val(&w[0]) * (1.0 - th) + val(&w[1]) * th;
                v * v
            };
            acc += 0.5 * (at(lo) + at(hi)) * (hi - lo);
        }
        acc
    };
    let value = integral(a, |s| s.p) + integral(b, |s| s.q);
    SquareIntegral { value, from: tau, to: t_end, met }
}
