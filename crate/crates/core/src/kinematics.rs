//! Pointwise quantities: Riemann invariants, characteristic speeds, gradient
//! invariants `P`, `Q`, the capillary term, the potential `F(h)`, energy
//! density and flux, and the a-priori bounds.
//!
//! Spatial gradients come from [`gradients`], which uses the far-field
//! stencil of [`Grid::derivative_far`] (reference depth for `h`, rest for
//! `u`). On periodic grids this is the ordinary fourth-order derivative.

use alloc::vec::Vec;

use crate::grid::Grid;
use crate::{Error, Result};

/// Physical and regularization constants.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Params {
    pub g: f64,
    pub gamma: f64,
    pub hbar: f64,
    /// Cut-off scale; zero selects the unregularized system.
    pub epsilon: f64,
}

impl Params {
    pub fn new(g: f64, gamma: f64, hbar: f64, epsilon: f64) -> Result<Self> {
        let p = Params { g, gamma, hbar, epsilon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0 && self.g.is_finite()) {
            return Err(Error::InvalidParameter("g must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter("gamma must be positive"));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::InvalidParameter("hbar must be positive"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter("epsilon must be nonnegative"));
        }
        Ok(())
    }

    /// Energy threshold `sqrt(g gamma) hbar^2` below which the depth and
    /// velocity bounds hold.
    pub fn e_max(&self) -> f64 {
        libm::sqrt(self.g * self.gamma) * self.hbar * self.hbar
    }

    /// `sqrt(3 gamma)`, the constant in front of every `h^{-1/2}` term.
    pub fn s3g(&self) -> f64 {
        libm::sqrt(3.0 * self.gamma)
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Params { epsilon, ..self }
    }
}

/// Depth and velocity at one instant.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlowState {
    pub h: Vec<f64>,
    pub u: Vec<f64>,
    pub t: f64,
}

impl FlowState {
    pub fn new(h: Vec<f64>, u: Vec<f64>, t: f64) -> Self {
        FlowState { h, u, t }
    }

    /// The still-water state.
    pub fn flat(grid: &Grid, p: &Params) -> Self {
        let n = grid.n();
        FlowState { h: alloc::vec![p.hbar; n], u: alloc::vec![0.0; n], t: 0.0 }
    }

    pub fn check(&self, grid: &Grid) -> Result<()> {
        grid.check(&self.h)?;
        grid.check(&self.u)?;
        check_positive(&self.h)?;
        if self.u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("velocity"));
        }
        Ok(())
    }
}

/// Closed-form depth and velocity bounds for a given energy.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bounds {
    pub h_min: f64,
    pub h_max: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub e0: f64,
}

pub fn check_positive(h: &[f64]) -> Result<()> {
    for (index, &value) in h.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositiveDepth { index, value });
        }
    }
    Ok(())
}

/// `R = u + 2 sqrt(3 gamma) h^{-1/2}`, `S = u - 2 sqrt(3 gamma) h^{-1/2}`.
pub fn riemann_invariants(s: &FlowState, p: &Params) -> Result<(Vec<f64>, Vec<f64>)> {
    check_positive(&s.h)?;
    let c = 2.0 * p.s3g();
    let r = s.h.iter().zip(&s.u).map(|(h, u)| u + c / libm::sqrt(*h)).collect();
    let q = s.h.iter().zip(&s.u).map(|(h, u)| u - c / libm::sqrt(*h)).collect();
    Ok((r, q))
}

/// `lambda = u - sqrt(3 gamma) h^{-1/2}`, `eta = u + sqrt(3 gamma) h^{-1/2}`.
pub fn char_speeds(s: &FlowState, p: &Params) -> Result<(Vec<f64>, Vec<f64>)> {
    check_positive(&s.h)?;
    let c = p.s3g();
    let lam = s.h.iter().zip(&s.u).map(|(h, u)| u - c / libm::sqrt(*h)).collect();
    let eta = s.h.iter().zip(&s.u).map(|(h, u)| u + c / libm::sqrt(*h)).collect();
    Ok((lam, eta))
}

/// `(h_x, u_x)` with the far-field stencil.
pub fn gradients(s: &FlowState, p: &Params, grid: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((grid.derivative_far(&s.h, p.hbar)?, grid.derivative_far(&s.u, 0.0)?))
}

/// `P = h u_x - sqrt(3 gamma) h^{-1/2} h_x`, `Q = h u_x + sqrt(3 gamma) h^{-1/2} h_x`.
pub fn pq_from_gradients(h: &[f64], hx: &[f64], ux: &[f64], p: &Params) -> (Vec<f64>, Vec<f64>) {
    let c = p.s3g();
    let n = h.len();
    let mut pp = Vec::with_capacity(n);
    let mut qq = Vec::with_capacity(n);
    for i in 0..n {
        let a = h[i] * ux[i];
        let b = c * hx[i] / libm::sqrt(h[i]);
        pp.push(a - b);
        qq.push(a + b);
    }
    (pp, qq)
}

pub fn pq_fields(s: &FlowState, p: &Params, grid: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
    check_positive(&s.h)?;
    let (hx, ux) = gradients(s, p, grid)?;
    Ok(pq_from_gradients(&s.h, &hx, &ux, p))
}

/// Inverse map: `u_x = (P+Q)/(2h)`, `h_x = h^{1/2}(Q-P)/(2 sqrt(3 gamma))`.
pub fn gradients_from_pq(h: &[f64], pp: &[f64], qq: &[f64], p: &Params) -> (Vec<f64>, Vec<f64>) {
    let c = p.s3g();
    let ux = (0..h.len()).map(|i| (pp[i] + qq[i]) / (2.0 * h[i])).collect();
    let hx = (0..h.len()).map(|i| libm::sqrt(h[i]) * (qq[i] - pp[i]) / (2.0 * c)).collect();
    (ux, hx)
}

/// `(2/3) h^3 u_x^2 - (3/2) gamma h_x^2` from precomputed gradients.
pub fn curly_c_from(h: &[f64], hx: &[f64], ux: &[f64], p: &Params) -> Vec<f64> {
    (0..h.len())
        .map(|i| {
            let h3 = h[i] * h[i] * h[i];
            2.0 / 3.0 * h3 * ux[i] * ux[i] - 1.5 * p.gamma * hx[i] * hx[i]
        })
        .collect()
}

pub fn curly_c(s: &FlowState, p: &Params, grid: &Grid) -> Result<Vec<f64>> {
    let (hx, ux) = gradients(s, p, grid)?;
    Ok(curly_c_from(&s.h, &hx, &ux, p))
}

/// `F(h) = g h^2/2 - g hbar^2/2 - 3 gamma ln(h/hbar)`.
pub fn f_of_h(s: &FlowState, p: &Params) -> Result<Vec<f64>> {
    check_positive(&s.h)?;
    Ok(s.h.iter().map(|&h| f_scalar(h, p)).collect())
}

pub(crate) fn f_scalar(h: f64, p: &Params) -> f64 {
    0.5 * p.g * (h * h - p.hbar * p.hbar) - 3.0 * p.gamma * libm::log(h / p.hbar)
}

/// `h u^2/2 + g (h-hbar)^2/2 + h^3 u_x^2/6 + gamma h_x^2/2` from gradients.
pub fn energy_density_from(h: &[f64], u: &[f64], hx: &[f64], ux: &[f64], p: &Params) -> Vec<f64> {
    (0..h.len())
        .map(|i| {
            let eta = h[i] - p.hbar;
            0.5 * h[i] * u[i] * u[i]
                + 0.5 * p.g * eta * eta
                + h[i] * h[i] * h[i] * ux[i] * ux[i] / 6.0
                + 0.5 * p.gamma * hx[i] * hx[i]
        })
        .collect()
}

pub fn energy_density(s: &FlowState, p: &Params, grid: &Grid) -> Result<Vec<f64>> {
    let (hx, ux) = gradients(s, p, grid)?;
    Ok(energy_density_from(&s.h, &s.u, &hx, &ux, p))
}

/// The same density written with the gradient invariants:
/// `h u^2/2 + g (h-hbar)^2/2 + h (P^2+Q^2)/12`.
pub fn energy_density_pq(h: &[f64], u: &[f64], pp: &[f64], qq: &[f64], p: &Params) -> Vec<f64> {
    (0..h.len())
        .map(|i| {
            let eta = h[i] - p.hbar;
            0.5 * h[i] * u[i] * u[i]
                + 0.5 * p.g * eta * eta
                + h[i] * (pp[i] * pp[i] + qq[i] * qq[i]) / 12.0
        })
        .collect()
}

pub fn total_energy(s: &FlowState, p: &Params, grid: &Grid) -> Result<f64> {
    grid.integrate(&energy_density(s, p, grid)?)
}

pub fn mass(s: &FlowState, p: &Params, grid: &Grid) -> Result<f64> {
    grid.check(&s.h)?;
    Ok(s.h.iter().map(|h| h - p.hbar).sum::<f64>() * grid.dx())
}

/// Energy flux `u E + u (R + g h^2/2 - g hbar^2/2) + gamma h h_x u_x` where
/// `script_r` is the nonlocal pressure-like field.
pub fn energy_flux(s: &FlowState, p: &Params, grid: &Grid, script_r: &[f64]) -> Result<Vec<f64>> {
    grid.check(script_r)?;
    let (hx, ux) = gradients(s, p, grid)?;
    let e = energy_density_from(&s.h, &s.u, &hx, &ux, p);
    Ok((0..grid.n())
        .map(|i| {
            let (h, u) = (s.h[i], s.u[i]);
            u * e[i]
                + u * (script_r[i] + 0.5 * p.g * (h * h - p.hbar * p.hbar))
                + p.gamma * h * hx[i] * ux[i]
        })
        .collect())
}

/// Depth and velocity bounds implied by an energy `e0 < e_max`.
pub fn a_priori_bounds(e0: f64, p: &Params) -> Result<Bounds> {
    if !(e0 >= 0.0) {
        return Err(Error::InvalidParameter("energy must be nonnegative"));
    }
    if e0 >= p.e_max() {
        return Err(Error::ThresholdExceeded { energy: e0, threshold: p.e_max() });
    }
    let dh = libm::sqrt(e0) / libm::sqrt(libm::sqrt(p.g * p.gamma));
    let h_min = p.hbar - dh;
    let u_max = libm::sqrt(libm::sqrt(3.0)) * libm::sqrt(e0) / h_min;
    Ok(Bounds { h_min, h_max: p.hbar + dh, u_min: -u_max, u_max, e0 })
}
