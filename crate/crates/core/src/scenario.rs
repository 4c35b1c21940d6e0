//! Initial data: flat water, Gaussian bumps, linear modes, steep simple-wave
//! plateaus, and user-supplied profiles, optionally mollified.

use alloc::vec;
use alloc::vec::Vec;

use crate::diagnostics::dispersion_omega;
use crate::grid::{Grid, Mode};
use crate::kinematics::{FlowState, Params};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum Kind {
    Flat,
    /// `h = hbar + a exp(-(x - x0)^2 / w^2)`, `u = 0`.
    Gaussian { amplitude: f64, width: f64, center: f64 },
    /// Right-moving linear mode `h = hbar + a sin(k x)`,
    /// `u = a (omega(k) / k) / hbar sin(k x)`.
    Sine { amplitude: f64, wavenumber: f64 },
    /// Plateau of height `a` and length `plateau` with `tanh` ramps of width
    /// `w`. With `sign = +1` the invariant `S` is constant (a wave carried by
    /// `P`, travelling left); with `sign = -1` the invariant `R` is constant
    /// (carried by `Q`, travelling right).
    Steep { amplitude: f64, width: f64, center: f64, plateau: f64, sign: f64 },
    /// Profiles given sample by sample.
    Custom { h: Vec<f64>, u: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scenario {
    pub kind: Kind,
    pub params: Params,
    pub grid: Grid,
    /// Standard deviation of the Gaussian mollifier; zero disables it.
    pub mollifier: f64,
}

impl Scenario {
    /// Rejects contradictory combinations of kind, grid mode and `epsilon`.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.mollifier >= 0.0) {
            return Err(Error::InvalidParameter("mollifier width must be nonnegative"));
        }
        let line = self.grid.mode() == Mode::Line;
        if self.params.epsilon > 0.0 && !line {
            return Err(Error::InvalidParameter("regularized runs need a line grid"));
        }
        match &self.kind {
            Kind::Sine { wavenumber, .. } => {
                if line {
                    return Err(Error::InvalidParameter("sine data needs a periodic grid"));
                }
                let m = wavenumber * self.grid.length() / core::f64::consts::TAU;
                if !(*wavenumber > 0.0) || (m - libm::round(m)).abs() > 1e-9 {
                    return Err(Error::InvalidParameter(
                        "wavenumber must be a positive multiple of 2 pi / length",
                    ));
                }
            }
            Kind::Steep { width, sign, plateau, .. } => {
                if !line {
                    return Err(Error::InvalidParameter("steep data needs a line grid"));
                }
                if !(*width > 0.0) || !(*plateau >= 0.0) || (sign.abs() - 1.0).abs() > 0.0 {
                    return Err(Error::InvalidParameter("steep data needs width > 0, plateau >= 0, sign = +-1"));
                }
            }
            Kind::Gaussian { width, .. } => {
                if !(*width > 0.0) {
                    return Err(Error::InvalidParameter("gaussian width must be positive"));
                }
            }
            Kind::Custom { h, u } => {
                self.grid.check(h)?;
                self.grid.check(u)?;
            }
            Kind::Flat => {}
        }
        Ok(())
    }
}

/// Initial state of a scenario, mollified when requested.
pub fn build_initial(sc: &Scenario) -> Result<FlowState> {
    sc.validate()?;
    let (g, p) = (&sc.grid, &sc.params);
    let hbar = p.hbar;
    let (h, u) = match &sc.kind {
        Kind::Flat => (vec![hbar; g.n()], vec![0.0; g.n()]),
        Kind::Gaussian { amplitude, width, center } => (
            g.sample(|x| {
                let z = (x - center) / width;
                hbar + amplitude * libm::exp(-z * z)
            }),
            vec![0.0; g.n()],
        ),
        Kind::Sine { amplitude, wavenumber } => {
            let k = *wavenumber;
            let c = dispersion_omega(k, p) / k;
            (
                g.sample(|x| hbar + amplitude * libm::sin(k * x)),
                g.sample(|x| amplitude * c / hbar * libm::sin(k * x)),
            )
        }
        Kind::Steep { amplitude, width, center, plateau, sign } => {
            let h = g.sample(|x| {
                let l = (x - center + 0.5 * plateau) / width;
                let r = (x - center - 0.5 * plateau) / width;
                hbar + 0.5 * amplitude * (libm::tanh(l) - libm::tanh(r))
            });
            let c = 2.0 * p.s3g();
            let u = h.iter().map(|&v| sign * c * (1.0 / libm::sqrt(v) - 1.0 / libm::sqrt(hbar))).collect();
            (h, u)
        }
        Kind::Custom { h, u } => (h.clone(), u.clone()),
    };
    let (h, u) = if sc.mollifier > 0.0 {
        let eta: Vec<f64> = h.iter().map(|v| v - hbar).collect();
        let eta = mollify(&eta, g, sc.mollifier);
        (eta.iter().map(|v| v + hbar).collect(), mollify(&u, g, sc.mollifier))
    } else {
        (h, u)
    };
    let s = FlowState::new(h, u, 0.0);
    s.check(g)?;
    Ok(s)
}

/// Discrete convolution with a normalized Gaussian of standard deviation
/// `sigma`, truncated at six standard deviations. Zero is assumed outside a
/// line grid.
pub fn mollify(f: &[f64], grid: &Grid, sigma: f64) -> Vec<f64> {
    let n = f.len();
    let reach = libm::ceil(6.0 * sigma / grid.dx()) as isize;
    let weights: Vec<f64> = (-reach..=reach)
        .map(|j| {
            let z = j as f64 * grid.dx() / sigma;
            libm::exp(-0.5 * z * z)
        })
        .collect();
    let total: f64 = weights.iter().sum();
    (0..n as isize)
        .map(|i| {
            let mut acc = 0.0;
            for (w, j) in weights.iter().zip(-reach..=reach) {
                let k = i + j;
                let v = match grid.mode() {
                    Mode::Periodic => f[crate::grid::wrap(k, n)],
                    Mode::Line if k >= 0 && (k as usize) < n => f[k as usize],
                    Mode::Line => 0.0,
                };
                acc += w * v;
            }
            acc / total
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{riemann_invariants, total_energy};
    use approx::assert_abs_diff_eq;

    fn line() -> Grid {
        Grid::with_length(1024, 60.0, -30.0, Mode::Line).unwrap()
    }

    fn params(eps: f64) -> Params {
        Params::new(9.81, 9.81, 1.0, eps).unwrap()
    }

    #[test]
    fn flat_is_exact() {
        let sc = Scenario { kind: Kind::Flat, params: params(0.0), grid: line(), mollifier: 0.3 };
        let s = build_initial(&sc).unwrap();
        assert!(s.h.iter().all(|&h| h == 1.0) && s.u.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn gaussian_energy_below_threshold() {
        let grid = Grid::with_length(1024, 40.0, 0.0, Mode::Periodic).unwrap();
        let p = params(0.0);
        let kind = Kind::Gaussian { amplitude: 0.05, width: 1.0, center: 20.0 };
        let s = build_initial(&Scenario { kind, params: p, grid, mollifier: 0.0 }).unwrap();
        let e0 = total_energy(&s, &p, &grid).unwrap();
        assert!(e0 > 0.0 && e0 < p.e_max());
    }

    #[test]
    fn steep_data_keeps_one_invariant_constant() {
        for (sign, which) in [(1.0, 1), (-1.0, 0)] {
            let kind = Kind::Steep { amplitude: 0.2, width: 0.5, center: 0.0, plateau: 3.0, sign };
            let sc = Scenario { kind, params: params(0.0), grid: line(), mollifier: 0.0 };
            let s = build_initial(&sc).unwrap();
            let (r, q) = riemann_invariants(&s, &sc.params).unwrap();
            let f = if which == 1 { q } else { r };
            for v in &f {
                assert_abs_diff_eq!(*v, f[0], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn mode_contradictions_are_rejected() {
        let periodic = Grid::with_length(64, 10.0, 0.0, Mode::Periodic).unwrap();
        let steep = Kind::Steep { amplitude: 0.2, width: 0.5, center: 0.0, plateau: 3.0, sign: 1.0 };
        assert!(build_initial(&Scenario { kind: steep, params: params(0.0), grid: periodic, mollifier: 0.0 }).is_err());
        let sine = Kind::Sine { amplitude: 1e-4, wavenumber: core::f64::consts::TAU / 10.0 };
        assert!(build_initial(&Scenario { kind: sine.clone(), params: params(0.0), grid: line(), mollifier: 0.0 }).is_err());
        assert!(build_initial(&Scenario { kind: sine, params: params(0.0), grid: periodic, mollifier: 0.0 }).is_ok());
        let off = Kind::Sine { amplitude: 1e-4, wavenumber: 1.0 };
        assert!(build_initial(&Scenario { kind: off, params: params(0.0), grid: periodic, mollifier: 0.0 }).is_err());
        assert!(build_initial(&Scenario { kind: Kind::Flat, params: params(0.1), grid: periodic, mollifier: 0.0 }).is_err());
    }

    #[test]
    fn mollified_energy_tends_to_unmollified() {
        let p = params(0.0);
        let grid = Grid::with_length(4096, 60.0, -30.0, Mode::Line).unwrap();
        let kind = Kind::Steep { amplitude: 0.2, width: 0.1, center: 0.0, plateau: 3.0, sign: 1.0 };
        let energy = |m: f64| {
            let s = build_initial(&Scenario { kind: kind.clone(), params: p, grid, mollifier: m }).unwrap();
            total_energy(&s, &p, &grid).unwrap()
        };
        let e0 = energy(0.0);
        let es = [energy(0.2), energy(0.1), energy(0.05)];
        assert!(es[0] < es[1] && es[1] < es[2] && es[2] < e0);
        assert!((e0 - es[0]) > (e0 - es[1]) && (e0 - es[1]) > (e0 - es[2]));
    }

    #[test]
    fn mollifier_preserves_mass_and_constants() {
        let g = Grid::with_length(256, 20.0, 0.0, Mode::Periodic).unwrap();
        let f = g.sample(|x| libm::sin(x) + 2.0);
        let m = mollify(&f, &g, 0.4);
        let a: f64 = f.iter().sum();
        let b: f64 = m.iter().sum();
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        assert!(mollify(&vec![1.5; 256], &g, 0.4).iter().all(|v| (v - 1.5).abs() < 1e-14));
    }
}
