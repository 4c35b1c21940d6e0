//! Semi-discrete right-hand sides and RK4 time stepping.

use alloc::string::String;
use alloc::vec::Vec;

use crate::diagnostics::{blowup_monitor, BlowupThresholds};
use crate::elliptic::{Helmholtz, SturmLiouville};
use crate::grid::{self, Grid, Mode};
use crate::kinematics::{self, check_positive, FlowState, Params};
use crate::regularization::{self, RegFields};
use crate::{Error, Result};

/// Time-step policy.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepControl {
    pub cfl: f64,
    pub dt_max: f64,
    pub t_end: f64,
    /// Store a snapshot every this many accepted steps (0 disables).
    pub output_every: usize,
    /// Additionally land on and store multiples of this interval.
    pub snapshot_dt: Option<f64>,
}

impl StepControl {
    pub fn new(cfl: f64, dt_max: f64, t_end: f64) -> Result<Self> {
        let c = StepControl { cfl, dt_max, t_end, output_every: 0, snapshot_dt: None };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidParameter("cfl must lie in (0, 1]"));
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::InvalidParameter("dt_max must be positive"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter("t_end must be finite and nonnegative"));
        }
        if let Some(d) = self.snapshot_dt {
            if !(d > 0.0) {
                return Err(Error::InvalidParameter("snapshot_dt must be positive"));
            }
        }
        Ok(())
    }
}

/// Intermediate fields from one right-hand-side evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Hooks {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Regularization sources, present only while the cut-off is active.
    pub reg: Option<RegFields>,
    /// `(1/48) int (P chi(P) + Q chi(Q)) dx`, the rate of energy change.
    pub production: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhsEval {
    pub dh_dt: Vec<f64>,
    pub du_dt: Vec<f64>,
    pub hooks: Hooks,
}

/// Grid, parameters and state-independent operators of one simulation.
#[derive(Debug, Clone)]
pub struct Model {
    grid: Grid,
    params: Params,
    helm: Helmholtz,
}

impl Model {
    pub fn new(params: Params, grid: Grid) -> Result<Self> {
        params.validate()?;
        if params.epsilon > 0.0 && grid.mode() != Mode::Line {
            return Err(Error::InvalidParameter("regularized runs need a line grid"));
        }
        Ok(Model { grid, params, helm: Helmholtz::new(&params, &grid)? })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Time derivatives of `(h, u)`.
    pub fn rhs(&self, s: &FlowState) -> Result<RhsEval> {
        let (g, p) = (&self.grid, &self.params);
        s.check(g)?;
        let n = g.n();
        let (hx, ux) = kinematics::gradients(s, p, g)?;
        let c = kinematics::curly_c_from(&s.h, &hx, &ux, p);
        let cf: Vec<f64> = c.iter().zip(&s.h).map(|(c, &h)| c + kinematics::f_scalar(h, p)).collect();
        let op = SturmLiouville::new(&s.h, g, p.hbar)?;
        let w = op.inv_dx(&cf)?;
        let hu: Vec<f64> = s.h.iter().zip(&s.u).map(|(a, b)| a * b).collect();
        let mut dh = g.derivative_far(&hu, 0.0)?;
        for v in dh.iter_mut() {
            *v = -*v;
        }
        let mut du: Vec<f64> = (0..n)
            .map(|i| -s.u[i] * ux[i] - 3.0 * p.gamma * hx[i] / (s.h[i] * s.h[i]) - w[i])
            .collect();
        let (pp, qq) = kinematics::pq_from_gradients(&s.h, &hx, &ux, p);
        let reg = regularization::sources(s, &pp, &qq, &ux, p, g, &self.helm, &op)?;
        let mut production = 0.0;
        if let Some(r) = &reg {
            for i in 0..n {
                dh[i] += r.a_x[i];
                du[i] += r.b[i];
            }
            production =
                g.integrate(&regularization::production_density(&pp, &qq, &r.chi_p, &r.chi_q))?;
        }
        if dh.iter().chain(&du).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("right-hand side"));
        }
        Ok(RhsEval { dh_dt: dh, du_dt: du, hooks: Hooks { p: pp, q: qq, reg, production } })
    }

    /// `min(dt_max, cfl dx / s_max)` with
    /// `s_max = max(|u| + max(sqrt(3 gamma / h), sqrt(g h)))`.
    pub fn cfl_dt(&self, s: &FlowState, c: &StepControl) -> Result<f64> {
        check_positive(&s.h)?;
        let p = &self.params;
        let smax = s
            .h
            .iter()
            .zip(&s.u)
            .map(|(&h, &u)| u.abs() + libm::sqrt(3.0 * p.gamma / h).max(libm::sqrt(p.g * h)))
            .fold(0.0, f64::max);
        Ok(c.dt_max.min(c.cfl * self.grid.dx() / smax))
    }

    fn try_step(&self, s: &FlowState, dt: f64) -> Result<(FlowState, f64)> {
        let n = self.grid.n();
        let stage = |base: &FlowState, k: &RhsEval, a: f64| -> FlowState {
            FlowState {
                h: (0..n).map(|i| base.h[i] + a * k.dh_dt[i]).collect(),
                u: (0..n).map(|i| base.u[i] + a * k.du_dt[i]).collect(),
                t: base.t + a,
            }
        };
        let k1 = self.rhs(s)?;
        let k2 = self.rhs(&stage(s, &k1, 0.5 * dt))?;
        let k3 = self.rhs(&stage(s, &k2, 0.5 * dt))?;
        let k4 = self.rhs(&stage(s, &k3, dt))?;
        let w = dt / 6.0;
        let comb = |a: &[f64], b: &[f64], c: &[f64], d: &[f64], base: &[f64]| -> Vec<f64> {
            (0..n).map(|i| base[i] + w * (a[i] + 2.0 * (b[i] + c[i]) + d[i])).collect()
        };
        let h = comb(&k1.dh_dt, &k2.dh_dt, &k3.dh_dt, &k4.dh_dt, &s.h);
        let u = comb(&k1.du_dt, &k2.du_dt, &k3.du_dt, &k4.du_dt, &s.u);
        check_positive(&h)?;
        let produced = w
            * (k1.hooks.production
                + 2.0 * (k2.hooks.production + k3.hooks.production)
                + k4.hooks.production);
        Ok((FlowState { h, u, t: s.t + dt }, produced))
    }

    /// One RK4 step. A step that loses positivity is retried once at `dt/2`.
    /// Returns the new state, the step actually taken, and the integrated
    /// energy production over it.
    pub fn rk4_step(&self, s: &FlowState, dt: f64) -> Result<(FlowState, f64, f64)> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter("dt must be positive"));
        }
        match self.try_step(s, dt) {
            Ok((next, prod)) => Ok((next, dt, prod)),
            Err(Error::NonPositiveDepth { .. }) | Err(Error::NonFinite(_)) => {
                match self.try_step(s, 0.5 * dt) {
                    Ok((next, prod)) => Ok((next, 0.5 * dt, prod)),
                    Err(Error::NonPositiveDepth { .. }) | Err(Error::NonFinite(_)) => {
                        Err(Error::DepthCollapse { t: s.t })
                    }
                    Err(e) => Err(e),
                }
            }
            Err(e) => Err(e),
        }
    }

    /// Largest far-field deviation `max(|h - hbar|, |u|)` over the four
    /// outermost cells on each side. Zero on periodic grids.
    pub fn boundary_deviation(&self, s: &FlowState) -> f64 {
        if self.grid.mode() == Mode::Periodic {
            return 0.0;
        }
        let n = self.grid.n();
        (0..4)
            .chain(n - 4..n)
            .map(|i| (s.h[i] - self.params.hbar).abs().max(s.u[i].abs()))
            .fold(0.0, f64::max)
    }

    /// One row of the per-step series.
    pub fn series_row(&self, s: &FlowState, produced: f64) -> Result<SeriesRow> {
        let (g, p) = (&self.grid, &self.params);
        let (hx, ux) = kinematics::gradients(s, p, g)?;
        let (pp, qq) = kinematics::pq_from_gradients(&s.h, &hx, &ux, p);
        let e = kinematics::energy_density_from(&s.h, &s.u, &hx, &ux, p);
        Ok(SeriesRow {
            t: s.t,
            mass: kinematics::mass(s, p, g)?,
            energy: g.integrate(&e)?,
            min_h: grid::min(&s.h),
            max_h: grid::max(&s.h),
            max_abs_u: grid::max_abs(&s.u),
            min_ux: grid::min(&ux),
            max_abs_ux: grid::max_abs(&ux),
            max_abs_hx: grid::max_abs(&hx),
            sup_p: grid::max(&pp),
            sup_q: grid::max(&qq),
            inf_p: grid::min(&pp),
            inf_q: grid::min(&qq),
            produced,
        })
    }

    /// Integrates from `s0` until `c.t_end` or a monitor fires.
    pub fn simulate(&self, s0: &FlowState, c: &StepControl, m: &Monitors) -> Result<SimHistory> {
        c.validate()?;
        s0.check(&self.grid)?;
        let mut hist = SimHistory {
            grid: self.grid,
            params: self.params,
            snapshots: alloc::vec![s0.clone()],
            series: alloc::vec![self.series_row(s0, 0.0)?],
            abort: None,
            steps: 0,
            halvings: 0,
        };
        let h_floor = match kinematics::a_priori_bounds(hist.series[0].energy, &self.params) {
            Ok(b) => m.blowup.h_fraction * b.h_min,
            Err(_) => m.blowup.h_fraction * self.params.hbar,
        };
        let mut s = s0.clone();
        let mut cumulative = 0.0;
        let mut since_out = 0usize;
        let tiny = 1e-12 * c.t_end.max(1.0);
        while s.t < c.t_end - tiny {
            let mut dt = self.cfl_dt(&s, c)?;
            let mut landing = false;
            if let Some(sd) = c.snapshot_dt {
                let next = (libm::floor((s.t + tiny) / sd) + 1.0) * sd;
                if s.t + dt >= next - tiny {
                    dt = next - s.t;
                    landing = true;
                }
            }
            if s.t + dt >= c.t_end - tiny {
                dt = c.t_end - s.t;
                landing = true;
            }
            let (next, taken, produced) = match self.rk4_step(&s, dt) {
                Ok(v) => v,
                Err(e) => {
                    hist.abort = Some(Abort::from_error(s.t, e));
                    break;
                }
            };
            if taken < dt {
                hist.halvings += 1;
                landing = false;
            }
            s = next;
            hist.steps += 1;
            since_out += 1;
            cumulative += produced;
            let row = match self.series_row(&s, cumulative) {
                Ok(r) => r,
                Err(e) => {
                    hist.abort = Some(Abort::from_error(s.t, e));
                    break;
                }
            };
            hist.series.push(row);
            let dev = self.boundary_deviation(&s);
            if dev > m.boundary_tolerance * self.params.hbar {
                hist.snapshots.push(s.clone());
                hist.abort = Some(Abort {
                    t: s.t,
                    reason: AbortReason::BoundaryContamination { deviation: dev },
                });
                break;
            }
            if let Some(code) = blowup_monitor(&row, &m.blowup, h_floor) {
                hist.snapshots.push(s.clone());
                hist.abort = Some(Abort { t: s.t, reason: AbortReason::Blowup(String::from(code)) });
                break;
            }
            let periodic_out = c.output_every > 0 && since_out >= c.output_every;
            if landing || periodic_out {
                hist.snapshots.push(s.clone());
                since_out = 0;
            }
        }
        if hist.abort.is_none() && hist.snapshots.last().map(|x| x.t) != Some(s.t) {
            hist.snapshots.push(s);
        }
        Ok(hist)
    }
}

/// Runtime checks applied after every accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Monitors {
    pub blowup: BlowupThresholds,
    /// Far-field deviation allowed in the outer cells, relative to `hbar`.
    pub boundary_tolerance: f64,
}

impl Default for Monitors {
    fn default() -> Self {
        Monitors { blowup: BlowupThresholds::default(), boundary_tolerance: 1e-6 }
    }
}

/// Scalars recorded after every accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeriesRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub min_h: f64,
    pub max_h: f64,
    pub max_abs_u: f64,
    pub min_ux: f64,
    pub max_abs_ux: f64,
    pub max_abs_hx: f64,
    pub sup_p: f64,
    pub sup_q: f64,
    pub inf_p: f64,
    pub inf_q: f64,
    /// Time integral of the energy production up to `t`.
    pub produced: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum AbortReason {
    /// Blow-up monitor fired with the given criterion code.
    Blowup(String),
    DepthCollapse,
    BoundaryContamination { deviation: f64 },
    /// Any other numerical failure, rendered as text.
    Numerical(String),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Abort {
    pub t: f64,
    pub reason: AbortReason,
}

impl Abort {
    fn from_error(t: f64, e: Error) -> Self {
        let reason = match e {
            Error::DepthCollapse { .. } => AbortReason::DepthCollapse,
            Error::BoundaryContamination { deviation, .. } => {
                AbortReason::BoundaryContamination { deviation }
            }
            other => AbortReason::Numerical(alloc::format!("{other}")),
        };
        Abort { t, reason }
    }

    pub fn code(&self) -> &str {
        match &self.reason {
            AbortReason::Blowup(c) => c,
            AbortReason::DepthCollapse => "depth-collapse",
            AbortReason::BoundaryContamination { .. } => "boundary-contamination",
            AbortReason::Numerical(_) => "numerical-failure",
        }
    }
}

/// Snapshots and per-step series of one run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimHistory {
    pub grid: Grid,
    pub params: Params,
    pub snapshots: Vec<FlowState>,
    pub series: Vec<SeriesRow>,
    pub abort: Option<Abort>,
    pub steps: usize,
    pub halvings: usize,
}

impl SimHistory {
    pub fn final_state(&self) -> &FlowState {
        self.snapshots.last().expect("history always holds the initial state")
    }

    pub fn initial_energy(&self) -> f64 {
        self.series[0].energy
    }
}

pub fn rhs(s: &FlowState, p: &Params, g: &Grid) -> Result<RhsEval> {
    Model::new(*p, *g)?.rhs(s)
}

pub fn cfl_dt(s: &FlowState, p: &Params, g: &Grid, c: &StepControl) -> Result<f64> {
    Model::new(*p, *g)?.cfl_dt(s, c)
}

pub fn rk4_step(s: &FlowState, dt: f64, p: &Params, g: &Grid) -> Result<FlowState> {
    Ok(Model::new(*p, *g)?.rk4_step(s, dt)?.0)
}

pub fn simulate(s0: &FlowState, p: &Params, g: &Grid, c: &StepControl) -> Result<SimHistory> {
    Model::new(*p, *g)?.simulate(s0, c, &Monitors::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::max_abs;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    fn periodic(n: usize, l: f64) -> Grid {
        Grid::with_length(n, l, 0.0, Mode::Periodic).unwrap()
    }

    #[test]
    fn flat_state_is_a_fixed_point() {
        for (mode, eps) in [(Mode::Periodic, 0.0), (Mode::Line, 0.3)] {
            let g = Grid::with_length(64, 10.0, -5.0, mode).unwrap();
            let p = Params::new(9.81, 2.0, 1.0, eps).unwrap();
            let s = FlowState::flat(&g, &p);
            let r = rhs(&s, &p, &g).unwrap();
            assert!(max_abs(&r.dh_dt) == 0.0 && max_abs(&r.du_dt) == 0.0);
            let next = rk4_step(&s, 0.01, &p, &g).unwrap();
            assert_eq!(next.h, s.h);
            assert_eq!(next.u, s.u);
            assert_eq!(next.t, 0.01);
        }
    }

    #[test]
    fn linearized_acceleration_matches_symbol() {
        let (l, m) = (20.0, 3.0);
        let k = 2.0 * PI * m / l;
        let g = periodic(256, l);
        let p = Params::new(9.81, 1.3, 1.0, 0.0).unwrap();
        let a = 1e-6;
        let s = FlowState::new(g.sample(|x| 1.0 + a * libm::sin(k * x)), alloc::vec![0.0; 256], 0.0);
        let r = rhs(&s, &p, &g).unwrap();
        let factor = (1.0 + p.gamma * k * k / p.g) / (1.0 + k * k / 3.0);
        for i in 0..256 {
            let expected = -p.g * a * k * libm::cos(k * g.x(i)) * factor;
            assert!((r.du_dt[i] - expected).abs() <= 0.01 * p.g * a * k * factor);
        }
    }

    #[test]
    fn idle_cutoff_gives_identical_rhs() {
        let g = Grid::with_length(256, 40.0, -20.0, Mode::Line).unwrap();
        let p0 = Params::new(9.81, 1.0, 1.0, 0.0).unwrap();
        let s = FlowState::new(g.sample(|x| 1.0 + 0.05 * libm::exp(-x * x)), alloc::vec![0.0; 256], 0.0);
        let a = rhs(&s, &p0, &g).unwrap();
        let b = rhs(&s, &p0.with_epsilon(0.01), &g).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cfl_by_hand() {
        let g = Grid::new(64, 0.1, 0.0, Mode::Periodic).unwrap();
        let p = Params::new(9.81, 9.81, 1.0, 0.0).unwrap();
        let s = FlowState::flat(&g, &p);
        let c = StepControl::new(0.5, 1.0, 1.0).unwrap();
        assert_relative_eq!(cfl_dt(&s, &p, &g, &c).unwrap(), 0.5 * 0.1 / libm::sqrt(29.43), epsilon = 1e-15);
        assert_relative_eq!(cfl_dt(&s, &p, &g, &c).unwrap(), 0.009217, epsilon = 1e-4);
        let capped = StepControl::new(0.5, 1e-3, 1.0).unwrap();
        assert_eq!(cfl_dt(&s, &p, &g, &capped).unwrap(), 1e-3);
        let fine = Grid::new(128, 0.05, 0.0, Mode::Periodic).unwrap();
        let sf = FlowState::flat(&fine, &p);
        assert_relative_eq!(
            cfl_dt(&sf, &p, &fine, &c).unwrap() * 2.0,
            cfl_dt(&s, &p, &g, &c).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn one_step_conserves_mass() {
        let g = periodic(256, 40.0);
        let p = Params::new(9.81, 9.81, 1.0, 0.0).unwrap();
        let s = FlowState::new(
            g.sample(|x| 1.0 + 0.05 * libm::exp(-(x - 20.0) * (x - 20.0))),
            g.sample(|x| 0.02 * libm::sin(2.0 * PI * x / 40.0)),
            0.0,
        );
        let next = rk4_step(&s, 0.005, &p, &g).unwrap();
        let m0: f64 = s.h.iter().sum();
        let m1: f64 = next.h.iter().sum();
        assert!((m1 - m0).abs() <= 1e-13 * m0);
    }

    #[test]
    fn simulate_trivial_histories() {
        let g = periodic(32, 10.0);
        let p = Params::new(9.81, 1.0, 1.0, 0.0).unwrap();
        let s = FlowState::flat(&g, &p);
        let h = simulate(&s, &p, &g, &StepControl::new(0.5, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!(h.snapshots.len(), 1);
        let mut c = StepControl::new(0.5, 1.0, 1.0).unwrap();
        c.output_every = 5;
        let h = simulate(&s, &p, &g, &c).unwrap();
        assert!(h.abort.is_none());
        assert!((h.final_state().t - 1.0).abs() < 1e-12);
        assert!(h.series.iter().all(|r| r.energy == 0.0));
        assert!(h.snapshots.iter().all(|x| x.h == s.h && x.u == s.u));
    }

    #[test]
    fn snapshot_interval_is_hit_exactly() {
        let g = periodic(64, 10.0);
        let p = Params::new(9.81, 1.0, 1.0, 0.0).unwrap();
        let s = FlowState::new(g.sample(|x| 1.0 + 0.01 * libm::sin(2.0 * PI * x / 10.0)), alloc::vec![0.0; 64], 0.0);
        let mut c = StepControl::new(0.5, 1.0, 0.5).unwrap();
        c.snapshot_dt = Some(0.1);
        let h = simulate(&s, &p, &g, &c).unwrap();
        let times: Vec<f64> = h.snapshots.iter().map(|x| x.t).collect();
        assert_eq!(times.len(), 6);
        for (k, t) in times.iter().enumerate() {
            assert!((t - 0.1 * k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_regularized_model_is_rejected() {
        let g = periodic(32, 10.0);
        let p = Params::new(9.81, 1.0, 1.0, 0.1).unwrap();
        assert!(Model::new(p, g).is_err());
    }
}
