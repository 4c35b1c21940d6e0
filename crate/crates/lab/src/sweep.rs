//! Runs of one configuration over a decreasing list of cut-off parameters,
//! one thread per run, and the comparison table between neighbours.

use std::path::Path;
use std::thread;
use std::time::Instant;

use serde::Serialize;
use sgn_core::diagnostics::{oleinik_report, SpaceTimeBox, Status};
use sgn_core::dynamics::SimHistory;
use sgn_core::{FlowState, Mode};

use crate::config::ScenarioConfig;
use crate::error::{LabError, LabResult};
use crate::io;
use crate::run::{self, RunArtifact, RunOutcome, Verdict, VERSION};

/// Margin on the Oleinik constant fitted to the coarsest run before it is
/// applied to all runs.
pub const COMMON_C_MARGIN: f64 = 1.2;
/// Largest admissible max/min ratio of the box norms.
pub const BOX_RATIO_LIMIT: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub eps_coarse: f64,
    pub eps_fine: f64,
    /// `None` when either run aborted or their snapshot times differ.
    pub l2_h: Option<f64>,
    pub l2_u: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub name: String,
    pub version: String,
    pub wall_time_s: f64,
    pub epsilons: Vec<f64>,
    pub region: SpaceTimeBox,
    pub table: Vec<ConvergenceRow>,
    pub common_c: Option<f64>,
    pub box_ratio: Option<f64>,
    pub initial_energies: Vec<f64>,
    pub verdicts: Vec<Verdict>,
}

impl SweepSummary {
    pub fn passed(&self) -> bool {
        !self.verdicts.iter().any(Verdict::failed)
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub runs: Vec<RunOutcome>,
    pub summary: SweepSummary,
}

impl SweepOutcome {
    pub fn artifacts(&self) -> impl Iterator<Item = &RunArtifact> {
        self.runs.iter().map(|r| &r.artifact)
    }
}

/// Checks the sweep preconditions and returns the box.
pub fn validate(cfg: &ScenarioConfig, epsilons: &[f64]) -> LabResult<SpaceTimeBox> {
    if epsilons.is_empty() {
        return Err(LabError::Config(String::from("empty epsilon list")));
    }
    if epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(LabError::Config(String::from("epsilons must be positive")));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LabError::Config(String::from("epsilons must be strictly decreasing")));
    }
    if cfg.grid.mode != Mode::Line {
        return Err(LabError::Config(String::from("a sweep needs a line grid")));
    }
    let bx = cfg
        .checks
        .box_region
        .ok_or_else(|| LabError::Config(String::from("a sweep needs [checks] box = t1, t2, a, b")))?;
    if cfg.scenarios()?.len() != 1 {
        return Err(LabError::Config(String::from("a sweep needs exactly one scenario")));
    }
    if cfg.step.snapshot_dt.is_none() {
        return Err(LabError::Config(String::from("a sweep needs [step] snapshot_dt")));
    }
    Ok(bx)
}

fn in_box(s: &FlowState, bx: &SpaceTimeBox) -> bool {
    let tol = 1e-9 * (1.0 + bx.t2.abs());
    s.t >= bx.t1 - tol && s.t <= bx.t2 + tol
}

/// `L^2` norm of `f(a) - f(b)` over the space-time box, trapezoid in time and
/// midpoint in space. `None` if the snapshot times inside the box differ.
pub fn box_l2_difference(
    a: &SimHistory,
    b: &SimHistory,
    bx: &SpaceTimeBox,
    f: impl Fn(&FlowState) -> &[f64],
) -> Option<f64> {
    let grid = &a.grid;
    let sa: Vec<&FlowState> = a.snapshots.iter().filter(|s| in_box(s, bx)).collect();
    let sb: Vec<&FlowState> = b.snapshots.iter().filter(|s| in_box(s, bx)).collect();
    if sa.len() < 2 || sa.len() != sb.len() || sa.iter().zip(&sb).any(|(x, y)| (x.t - y.t).abs() > 1e-9) {
        return None;
    }
    let cells: Vec<usize> = (0..grid.n()).filter(|&i| grid.x(i) >= bx.a && grid.x(i) <= bx.b).collect();
    let slice = |x: &FlowState, y: &FlowState| {
        let (fx, fy) = (f(x), f(y));
        cells.iter().map(|&i| (fx[i] - fy[i]).powi(2)).sum::<f64>() * grid.dx()
    };
    let vals: Vec<f64> = sa.iter().zip(&sb).map(|(x, y)| slice(x, y)).collect();
    let total: f64 = (1..vals.len()).map(|k| 0.5 * (vals[k] + vals[k - 1]) * (sa[k].t - sa[k - 1].t)).sum();
    Some(total.sqrt())
}

pub fn epsilon_sweep(cfg: &ScenarioConfig, epsilons: &[f64]) -> LabResult<SweepOutcome> {
    let bx = validate(cfg, epsilons)?;
    let start = Instant::now();
    let configs: Vec<ScenarioConfig> = epsilons
        .iter()
        .map(|&e| cfg.with_epsilon(e, cfg.shape.tie_mollifier.then_some(e)))
        .collect();
    let runs: Vec<LabResult<RunOutcome>> = thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || run::execute(c))).collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let runs = runs.into_iter().collect::<LabResult<Vec<_>>>()?;
    let hist: Vec<&SimHistory> = runs.iter().map(|r| &r.histories[0]).collect();

    let mut verdicts = Vec::new();
    let mut table = Vec::new();
    for (k, w) in hist.windows(2).enumerate() {
        let ok = w[0].abort.is_none() && w[1].abort.is_none();
        let d = |f: fn(&FlowState) -> &[f64]| if ok { box_l2_difference(w[0], w[1], &bx, f) } else { None };
        table.push(ConvergenceRow {
            eps_coarse: epsilons[k],
            eps_fine: epsilons[k + 1],
            l2_h: d(|s| &s.h),
            l2_u: d(|s| &s.u),
        });
    }
    for (e, h) in epsilons.iter().zip(&hist) {
        let t = h.abort.as_ref().map(|a| a.t);
        let mut v = Verdict::plain(&format!("run-completed eps={e}"), t.is_none());
        v.value = t;
        verdicts.push(v);
    }
    if table.len() >= 2 {
        for (name, pick) in [("h", 0), ("u", 1)] {
            let col: Vec<Option<f64>> = table.iter().map(|r| if pick == 0 { r.l2_h } else { r.l2_u }).collect();
            let ok = col.iter().all(Option::is_some) && col.windows(2).all(|w| w[1] < w[0]);
            let mut v = Verdict::plain(&format!("cauchy-{name}"), ok);
            v.value = col.last().copied().flatten();
            v.limit = col.first().copied().flatten();
            verdicts.push(v);
        }
    }

    let fitted: Vec<f64> = hist.iter().map(|h| oleinik_report(h, None).fitted_c).collect();
    let common_c = fitted.first().filter(|c| c.is_finite()).map(|c| COMMON_C_MARGIN * c);
    if let Some(c) = common_c {
        let violations: usize = hist.iter().map(|h| oleinik_report(h, Some(c)).violations).sum();
        let worst = fitted.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut v = Verdict::plain("oleinik-common-c", violations == 0);
        v.value = Some(worst);
        v.limit = Some(c);
        verdicts.push(v);
    } else {
        verdicts.push(Verdict::plain("oleinik-common-c", false));
    }

    let norms: Vec<Option<f64>> =
        runs.iter().map(|r| r.artifact.cases[0].box_norm.map(|b| b.value)).collect();
    let box_ratio = if norms.iter().all(|v| v.is_some_and(|x| x > 0.0)) {
        let vs: Vec<f64> = norms.iter().flatten().copied().collect();
        let hi = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = vs.iter().copied().fold(f64::INFINITY, f64::min);
        Some(hi / lo)
    } else {
        None
    };
    let mut v = Verdict::plain("box-norm-ratio", box_ratio.is_some_and(|r| r <= BOX_RATIO_LIMIT));
    v.value = box_ratio;
    v.limit = Some(BOX_RATIO_LIMIT);
    verdicts.push(v);

    let initial_energies: Vec<f64> = runs.iter().map(|r| r.artifact.cases[0].e0).collect();
    if cfg.shape.tie_mollifier && initial_energies.len() >= 2 {
        let ok = initial_energies.windows(2).all(|w| w[1] > w[0]);
        verdicts.push(Verdict::plain("initial-energy-increasing", ok));
    }

    let summary = SweepSummary {
        name: cfg.name.clone(),
        version: String::from(VERSION),
        wall_time_s: start.elapsed().as_secs_f64(),
        epsilons: epsilons.to_vec(),
        region: bx,
        table,
        common_c,
        box_ratio,
        initial_energies,
        verdicts,
    };
    Ok(SweepOutcome { runs, summary })
}

/// `eps_<epsilon>/` per run, `convergence.csv` and `sweep.json`.
pub fn write_sweep(dir: &Path, out: &SweepOutcome) -> LabResult<()> {
    for (e, r) in out.summary.epsilons.iter().zip(&out.runs) {
        run::write_run(&dir.join(format!("eps_{e}")), r)?;
    }
    let rows: Vec<Vec<Option<f64>>> = out
        .summary
        .table
        .iter()
        .map(|r| vec![Some(r.eps_coarse), Some(r.eps_fine), r.l2_h, r.l2_u])
        .collect();
    io::write_table(&dir.join("convergence.csv"), &["eps_coarse", "eps_fine", "l2_h", "l2_u"], &rows)?;
    io::write_json(&dir.join("sweep.json"), &out.summary)
}

/// Whether every run-level verdict of every run is a pass or a skip.
pub fn runs_passed(out: &SweepOutcome) -> bool {
    out.artifacts().all(|a| a.verdicts().all(|v| v.status != Status::Fail))
}
