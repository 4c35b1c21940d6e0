//! Reports over stored runs: energy budget, a-priori bounds, one-sided
//! gradient bounds, blow-up monitor, space-time norms and linear dispersion.

use alloc::string::String;
use alloc::vec::Vec;

use crate::dynamics::{SeriesRow, SimHistory};
use crate::grid::Grid;
use crate::kinematics::{self, a_priori_bounds, FlowState, Params};
use crate::{Error, Result};

/// A named pass/fail verdict with the measured value and its limit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check { name: String::from(name), passed: value <= limit, value, limit }
    }
}

/// Energy series and budget of one run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyReport {
    /// `(t, mass, energy)` after every accepted step.
    pub series: Vec<(f64, f64, f64)>,
    /// Time integral of `(1/48) int (P chi(P) + Q chi(Q)) dx`; never positive.
    pub dissipation_integral: f64,
    /// `E(T) - E(0) - dissipation_integral`.
    pub budget_residual: f64,
    /// Largest single-step energy increase.
    pub max_step_increase: f64,
    pub checks: Vec<Check>,
}

impl EnergyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Relative energy drift allowed for unregularized runs.
pub const CONSERVATION_TOLERANCE: f64 = 1e-6;
/// Per-step energy increase allowed for regularized runs, relative to `E(0)`.
pub const MONOTONICITY_SLACK: f64 = 1e-8;
/// Budget closure tolerance relative to `|E(T) - E(0)|`.
pub const BUDGET_TOLERANCE: f64 = 1e-2;

pub fn energy_budget(history: &SimHistory) -> EnergyReport {
    let s = &history.series;
    let e0 = s[0].energy;
    let last = s[s.len() - 1];
    let de = last.energy - e0;
    let dissipation = last.produced;
    let residual = de - dissipation;
    let max_inc = s
        .windows(2)
        .map(|w| w[1].energy - w[0].energy)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let mut checks = Vec::new();
    if history.params.epsilon == 0.0 {
        let rel = if e0 > 0.0 { de.abs() / e0 } else { de.abs() };
        checks.push(Check::at_most("energy-conservation", rel, CONSERVATION_TOLERANCE));
    } else {
        checks.push(Check::at_most("energy-monotone", max_inc, MONOTONICITY_SLACK * e0));
        checks.push(Check::at_most(
            "budget-closure",
            residual.abs(),
            (BUDGET_TOLERANCE * de.abs()).max(MONOTONICITY_SLACK * e0),
        ));
    }
    checks.push(Check::at_most("dissipation-sign", dissipation, 0.0));
    EnergyReport {
        series: s.iter().map(|r| (r.t, r.mass, r.energy)).collect(),
        dissipation_integral: dissipation,
        budget_residual: residual,
        max_step_increase: max_inc,
        checks,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Status {
    Pass,
    Fail,
    /// The energy is at or above the threshold, so no bound applies.
    Skipped,
}

/// Worst margins of a run against the depth and velocity bounds.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundsReport {
    pub status: Status,
    pub bounds: Option<kinematics::Bounds>,
    pub min_h: f64,
    pub max_h: f64,
    pub max_abs_u: f64,
    /// Positive margins mean the bound holds with room to spare.
    pub margin_h_min: f64,
    pub margin_h_max: f64,
    pub margin_u: f64,
}

pub fn bounds_check(history: &SimHistory) -> BoundsReport {
    let p = &history.params;
    let s = &history.series;
    let min_h = s.iter().map(|r| r.min_h).fold(f64::INFINITY, f64::min);
    let max_h = s.iter().map(|r| r.max_h).fold(f64::NEG_INFINITY, f64::max);
    let max_u = s.iter().map(|r| r.max_abs_u).fold(0.0, f64::max);
    match a_priori_bounds(history.initial_energy(), p) {
        Err(_) => BoundsReport {
            status: Status::Skipped,
            bounds: None,
            min_h,
            max_h,
            max_abs_u: max_u,
            margin_h_min: f64::NAN,
            margin_h_max: f64::NAN,
            margin_u: f64::NAN,
        },
        Ok(b) => {
            let tol_h = 1e-4 * p.hbar;
            let tol_u = 1e-4 * b.u_max + 1e-8;
            let ok = min_h >= b.h_min - tol_h && max_h <= b.h_max + tol_h && max_u <= b.u_max + tol_u;
            BoundsReport {
                status: if ok { Status::Pass } else { Status::Fail },
                bounds: Some(b),
                min_h,
                max_h,
                max_abs_u: max_u,
                margin_h_min: min_h - b.h_min,
                margin_h_max: b.h_max - max_h,
                margin_u: b.u_max - max_u,
            }
        }
    }
}

/// One-sided bound `max(sup P, sup Q) <= C (1 + 1/t)` monitored on the
/// gradient invariants themselves.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OleinikReport {
    /// Which quantity is bounded.
    pub form: String,
    /// `(t, sup P, sup Q)` for `t > 0`.
    pub series: Vec<(f64, f64, f64)>,
    /// Smallest `C` that covers the series.
    pub fitted_c: f64,
    /// Samples above `C (1 + 1/t)` for the supplied `C`.
    pub violations: usize,
    pub c: Option<f64>,
}

pub fn oleinik_report(history: &SimHistory, c: Option<f64>) -> OleinikReport {
    let series: Vec<(f64, f64, f64)> = history
        .series
        .iter()
        .filter(|r| r.t > 0.0)
        .map(|r| (r.t, r.sup_p, r.sup_q))
        .collect();
    let ratio = |&(t, p, q): &(f64, f64, f64)| p.max(q) / (1.0 + 1.0 / t);
    let fitted_c = series.iter().map(ratio).fold(0.0, f64::max);
    let violations = match c {
        Some(c) => series.iter().filter(|s| ratio(s) > c).count(),
        None => 0,
    };
    OleinikReport { form: String::from("P,Q"), series, fitted_c, violations, c }
}

/// Thresholds of the paired blow-up criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlowupThresholds {
    pub ux: f64,
    pub hx: f64,
    /// Depth floor as a fraction of the a-priori minimum depth.
    pub h_fraction: f64,
}

impl Default for BlowupThresholds {
    fn default() -> Self {
        BlowupThresholds { ux: 1e3, hx: 1e3, h_fraction: 0.1 }
    }
}

/// Fires only on a pair: a large `|u_x|` together with either a large `|h_x|`
/// (`"gradient-pair"`) or a depth below `h_floor` (`"depth-collapse"`).
pub fn blowup_monitor(row: &SeriesRow, th: &BlowupThresholds, h_floor: f64) -> Option<&'static str> {
    if row.max_abs_ux <= th.ux {
        return None;
    }
    if row.max_abs_hx > th.hx {
        Some("gradient-pair")
    } else if row.min_h < h_floor {
        Some("depth-collapse")
    } else {
        None
    }
}

/// [`blowup_monitor`] evaluated directly on a state. The depth floor uses
/// the state's own energy when it is below the threshold, else `hbar`.
pub fn blowup_monitor_state(
    s: &FlowState,
    p: &Params,
    grid: &Grid,
    th: &BlowupThresholds,
) -> Result<Option<&'static str>> {
    let model = crate::dynamics::Model::new(p.with_epsilon(0.0), *grid)?;
    let row = model.series_row(s, 0.0)?;
    let floor = match a_priori_bounds(row.energy, p) {
        Ok(b) => th.h_fraction * b.h_min,
        Err(_) => th.h_fraction * p.hbar,
    };
    Ok(blowup_monitor(&row, th, floor))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlowupReport {
    /// `(t, min u_x, max |h_x|, min h)`.
    pub series: Vec<(f64, f64, f64, f64)>,
    /// `(t*, criterion code)` when the run was stopped by the monitor.
    pub triggered: Option<(f64, String)>,
}

pub fn blowup_report(history: &SimHistory) -> BlowupReport {
    let triggered = match &history.abort {
        Some(a) if matches!(a.reason, crate::dynamics::AbortReason::Blowup(_)) => {
            Some((a.t, String::from(a.code())))
        }
        _ => None,
    };
    BlowupReport {
        series: history.series.iter().map(|r| (r.t, r.min_ux, r.max_abs_hx, r.min_h)).collect(),
        triggered,
    }
}

/// Space-time window `[t1, t2] x [a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpaceTimeBox {
    pub t1: f64,
    pub t2: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoxNorm {
    pub value: f64,
    /// Snapshot times inside the window.
    pub samples: usize,
    /// Fewer than 16 samples: the time quadrature is unreliable.
    pub undersampled: bool,
}

/// Finite-difference time derivative at snapshot `k`, second order on
/// nonuniform spacing, one-sided at the ends of the history.
fn time_derivative(snaps: &[FlowState], k: usize, pick: impl Fn(&FlowState) -> &[f64]) -> Vec<f64> {
    let m = snaps.len();
    let (a, b, c) = if k == 0 {
        (0, 1, 2)
    } else if k == m - 1 {
        (m - 3, m - 2, m - 1)
    } else {
        (k - 1, k, k + 1)
    };
    let (ta, tb, tc) = (snaps[a].t, snaps[b].t, snaps[c].t);
    let t = snaps[k].t;
    // Derivative of the quadratic through the three points, evaluated at t.
    let wa = ((t - tb) + (t - tc)) / ((ta - tb) * (ta - tc));
    let wb = ((t - ta) + (t - tc)) / ((tb - ta) * (tb - tc));
    let wc = ((t - ta) + (t - tb)) / ((tc - ta) * (tc - tb));
    let (fa, fb, fc) = (pick(&snaps[a]), pick(&snaps[b]), pick(&snaps[c]));
    (0..fa.len()).map(|i| wa * fa[i] + wb * fb[i] + wc * fc[i]).collect()
}

/// `int_box (|h_t|^{2+a} + |h_x|^{2+a} + |u_t|^{2+a} + |u_x|^{2+a})` with
/// trapezoid quadrature over the snapshots in `[t1, t2]` and midpoint
/// quadrature over cells in `[a, b]`.
pub fn lp_box_norm(history: &SimHistory, alpha: f64, bx: &SpaceTimeBox) -> Result<BoxNorm> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter("alpha must lie in [0, 1)"));
    }
    let snaps = &history.snapshots;
    let grid = &history.grid;
    let p = &history.params;
    if snaps.len() < 3 {
        return Err(Error::OutOfRange("need at least three snapshots"));
    }
    let tiny = 1e-9 * (1.0 + bx.t2.abs());
    if !(bx.t1 < bx.t2 && bx.a < bx.b)
        || bx.t1 < snaps[0].t - tiny
        || bx.t2 > snaps[snaps.len() - 1].t + tiny
        || bx.a < grid.x_left()
        || bx.b > grid.x_right()
    {
        return Err(Error::OutOfRange("box outside the recorded history"));
    }
    let cells: Vec<usize> = (0..grid.n()).filter(|&i| grid.x(i) >= bx.a && grid.x(i) <= bx.b).collect();
    let ks: Vec<usize> =
        (0..snaps.len()).filter(|&k| snaps[k].t >= bx.t1 - tiny && snaps[k].t <= bx.t2 + tiny).collect();
    if ks.len() < 2 {
        return Err(Error::OutOfRange("fewer than two snapshots in the box"));
    }
    let pw = 2.0 + alpha;
    let pow = |v: f64| libm::pow(v.abs(), pw);
    let mut slices = Vec::with_capacity(ks.len());
    for &k in &ks {
        let ht = time_derivative(snaps, k, |s| &s.h);
        let ut = time_derivative(snaps, k, |s| &s.u);
        let (hx, ux) = kinematics::gradients(&snaps[k], p, grid)?;
        let v: f64 = cells.iter().map(|&i| pow(ht[i]) + pow(hx[i]) + pow(ut[i]) + pow(ux[i])).sum();
        slices.push((snaps[k].t, v * grid.dx()));
    }
    let value = slices.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum();
    Ok(BoxNorm { value, samples: ks.len(), undersampled: ks.len() < 16 })
}

/// Linear dispersion relation `omega^2 = g hbar k^2 (1 + gamma k^2 / g) / (1 + hbar^2 k^2 / 3)`.
pub fn dispersion_omega(k: f64, p: &Params) -> f64 {
    let k2 = k * k;
    libm::sqrt(p.g * p.hbar * k2 * (1.0 + p.gamma * k2 / p.g) / (1.0 + p.hbar * p.hbar * k2 / 3.0))
}

/// Bond number `g hbar^2 / gamma`.
pub fn bond_number(p: &Params) -> f64 {
    p.g * p.hbar * p.hbar / p.gamma
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseSpeed {
    /// `None` when the mode is not present in the data.
    pub speed: Option<f64>,
    /// The mode amplitude grew more than tenfold.
    pub nonlinear: bool,
}

/// Phase speed of the wavenumber-`k` Fourier mode of `h - hbar`, from its
/// unwrapped phase drift across all snapshots.
pub fn measure_phase_speed(history: &SimHistory, k: f64) -> PhaseSpeed {
    let grid = &history.grid;
    let hbar = history.params.hbar;
    let coeff = |s: &FlowState| -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (i, h) in s.h.iter().enumerate() {
            let x = grid.x(i);
            re += (h - hbar) * libm::cos(k * x);
            im -= (h - hbar) * libm::sin(k * x);
        }
        (re, im)
    };
    let snaps = &history.snapshots;
    let c: Vec<(f64, f64)> = snaps.iter().map(coeff).collect();
    let amp = |z: &(f64, f64)| libm::hypot(z.0, z.1);
    let a0 = amp(&c[0]);
    let undefined = PhaseSpeed { speed: None, nonlinear: false };
    if snaps.len() < 2 || !(a0 > 1e-12 * grid.n() as f64 * hbar) {
        return undefined;
    }
    let nonlinear = c.iter().any(|z| amp(z) > 10.0 * a0);
    let mut total = 0.0;
    let tau = core::f64::consts::TAU;
    for w in c.windows(2) {
        let d = libm::atan2(w[1].1, w[1].0) - libm::atan2(w[0].1, w[0].0);
        total += d - tau * libm::round(d / tau);
    }
    let dt = snaps[snaps.len() - 1].t - snaps[0].t;
    PhaseSpeed { speed: Some(-total / (k * dt)), nonlinear }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn row(t: f64) -> SeriesRow {
        SeriesRow {
            t,
            mass: 0.0,
            energy: 1.0,
            min_h: 1.0,
            max_h: 1.0,
            max_abs_u: 0.0,
            min_ux: 0.0,
            max_abs_ux: 0.0,
            max_abs_hx: 0.0,
            sup_p: 0.0,
            sup_q: 0.0,
            inf_p: 0.0,
            inf_q: 0.0,
            produced: 0.0,
        }
    }

    #[test]
    fn dispersion_by_hand() {
        let p = Params::new(9.81, 1.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(dispersion_omega(2.0, &p), 4.8656, epsilon = 1e-4);
        assert_relative_eq!(dispersion_omega(1e-6, &p) / 1e-6, libm::sqrt(9.81), epsilon = 1e-9);
        let b3 = Params::new(9.81, 9.81 / 3.0, 1.0, 0.0).unwrap();
        for k in [0.3, 1.0, 2.0, 4.0, 17.0] {
            assert_relative_eq!(dispersion_omega(k, &b3) / k, libm::sqrt(9.81), epsilon = 1e-12);
        }
    }

    #[test]
    fn bond_number_cases() {
        assert_relative_eq!(bond_number(&Params::new(9.81, 3.27, 1.0, 0.0).unwrap()), 3.0);
        assert_relative_eq!(bond_number(&Params::new(9.81, 9.81, 1.0, 0.0).unwrap()), 1.0);
        let a = bond_number(&Params::new(2.0, 0.5, 1.3, 0.0).unwrap());
        let b = bond_number(&Params::new(6.0, 1.5, 1.3, 0.0).unwrap());
        assert_relative_eq!(a, b);
    }

    #[test]
    fn monitor_needs_a_pair() {
        let th = BlowupThresholds::default();
        let mut r = row(1.0);
        r.max_abs_ux = 2e3;
        assert_eq!(blowup_monitor(&r, &th, 0.09), None);
        r.max_abs_hx = 2e3;
        assert_eq!(blowup_monitor(&r, &th, 0.09), Some("gradient-pair"));
        r.max_abs_hx = 0.0;
        r.min_h = 0.05;
        assert_eq!(blowup_monitor(&r, &th, 0.09), Some("depth-collapse"));
        r.max_abs_ux = 10.0;
        assert_eq!(blowup_monitor(&r, &th, 0.09), None);
    }
}
