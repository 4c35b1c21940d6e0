//! One configured run: simulate every case, evaluate the enabled reports and
//! write the artifacts.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sgn_core::diagnostics::{
    self, BlowupReport, BoundsReport, BoxNorm, EnergyReport, OleinikReport, Status,
};
use sgn_core::dynamics::{Abort, AbortReason, Model, SimHistory};
use sgn_core::kinematics::total_energy;
use sgn_core::scenario::{build_initial, Kind, Scenario};

use crate::config::ScenarioConfig;
use crate::error::LabResult;
use crate::io;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub status: Status,
    pub value: Option<f64>,
    pub limit: Option<f64>,
}

impl Verdict {
    pub fn new(name: &str, passed: bool, value: Option<f64>, limit: Option<f64>) -> Self {
        let status = if passed { Status::Pass } else { Status::Fail };
        Verdict { name: name.to_string(), status, value, limit }
    }

    pub fn plain(name: &str, passed: bool) -> Self {
        Self::new(name, passed, None, None)
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }

    /// `PASS name value=... limit=...`, the line printed by the CLI.
    pub fn line(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        let mut s = format!("{tag} {}", self.name);
        if let Some(v) = self.value {
            s.push_str(&format!(" value={v:.6e}"));
        }
        if let Some(l) = self.limit {
            s.push_str(&format!(" limit={l:.6e}"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCheck {
    pub wavenumber: f64,
    pub expected: f64,
    pub measured: Option<f64>,
    pub relative_error: Option<f64>,
    pub nonlinear: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub label: String,
    pub e0: f64,
    pub e_max: f64,
    /// Whether the a-priori depth and velocity bounds apply.
    pub below_threshold: bool,
    pub steps: usize,
    pub halvings: usize,
    pub t_final: f64,
    pub abort: Option<Abort>,
    pub snapshot_times: Vec<f64>,
    pub energy: Option<EnergyReport>,
    pub bounds: Option<BoundsReport>,
    pub oleinik: Option<OleinikReport>,
    pub blowup: BlowupReport,
    pub phase: Option<PhaseCheck>,
    pub box_norm: Option<BoxNorm>,
    pub verdicts: Vec<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunArtifact {
    pub name: String,
    pub version: String,
    pub wall_time_s: f64,
    pub config: ScenarioConfig,
    pub cases: Vec<CaseReport>,
}

impl RunArtifact {
    pub fn verdicts(&self) -> impl Iterator<Item = &Verdict> {
        self.cases.iter().flat_map(|c| c.verdicts.iter())
    }

    pub fn passed(&self) -> bool {
        !self.verdicts().any(Verdict::failed)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub artifact: RunArtifact,
    pub histories: Vec<SimHistory>,
}

fn label(sc: &Scenario) -> String {
    match &sc.kind {
        Kind::Sine { wavenumber, .. } => format!("k_{wavenumber}"),
        Kind::Flat => String::from("flat"),
        Kind::Gaussian { .. } => String::from("gaussian"),
        Kind::Steep { .. } => String::from("steep"),
        Kind::Custom { .. } => String::from("custom"),
    }
}

/// Simulates one case and evaluates the checks enabled in `cfg`.
pub fn run_case(cfg: &ScenarioConfig, sc: &Scenario) -> LabResult<(CaseReport, SimHistory)> {
    let s0 = build_initial(sc)?;
    let e0 = total_energy(&s0, &sc.params, &sc.grid)?;
    let model = Model::new(sc.params, sc.grid)?;
    let hist = model.simulate(&s0, &cfg.step, &cfg.monitors())?;
    let c = &cfg.checks;
    let mut verdicts = Vec::new();

    let blowup = diagnostics::blowup_report(&hist);
    if c.expect_blowup {
        let t = match &hist.abort {
            Some(Abort { t, reason: AbortReason::Blowup(_) }) => Some(*t),
            _ => None,
        };
        verdicts.push(Verdict::new("blowup-expected", t.is_some(), t, Some(cfg.step.t_end)));
    } else {
        let t = hist.abort.as_ref().map(|a| a.t);
        verdicts.push(Verdict::new("run-completed", t.is_none(), t, None));
    }

    let energy = (c.energy && !c.expect_blowup).then(|| diagnostics::energy_budget(&hist));
    if let Some(e) = &energy {
        for ch in &e.checks {
            verdicts.push(Verdict::new(&ch.name, ch.passed, Some(ch.value), Some(ch.limit)));
        }
    }

    let bounds = c.bounds.then(|| diagnostics::bounds_check(&hist));
    if let Some(b) = &bounds {
        let mut v = Verdict::new("a-priori-bounds", b.status == Status::Pass, None, None);
        v.status = b.status;
        if b.status != Status::Skipped {
            v.value = Some(b.margin_h_min.min(b.margin_h_max).min(b.margin_u));
            v.limit = Some(0.0);
        }
        verdicts.push(v);
    }

    let oleinik = c.oleinik.then(|| diagnostics::oleinik_report(&hist, c.oleinik_c));
    if let Some(o) = &oleinik {
        let ok = o.fitted_c.is_finite() && o.violations == 0;
        verdicts.push(Verdict::new("oleinik", ok, Some(o.fitted_c), o.c));
    }

    let phase = match sc.kind {
        Kind::Sine { wavenumber: k, .. } => {
            let expected = diagnostics::dispersion_omega(k, &sc.params) / k;
            let m = diagnostics::measure_phase_speed(&hist, k);
            let rel = m.speed.map(|v| (v - expected).abs() / expected);
            let ok = rel.is_some_and(|r| r <= c.dispersion_tolerance);
            verdicts.push(Verdict::new(&format!("phase-speed k={k}"), ok, rel, Some(c.dispersion_tolerance)));
            Some(PhaseCheck { wavenumber: k, expected, measured: m.speed, relative_error: rel, nonlinear: m.nonlinear })
        }
        _ => None,
    };

    let box_norm = c.box_region.and_then(|b| diagnostics::lp_box_norm(&hist, c.box_alpha, &b).ok());

    let e_max = sc.params.e_max();
    let report = CaseReport {
        label: label(sc),
        e0,
        e_max,
        below_threshold: e0 < e_max,
        steps: hist.steps,
        halvings: hist.halvings,
        t_final: hist.series.last().map_or(0.0, |r| r.t),
        abort: hist.abort.clone(),
        snapshot_times: hist.snapshots.iter().map(|s| s.t).collect(),
        energy,
        bounds,
        oleinik,
        blowup,
        phase,
        box_norm,
        verdicts,
    };
    Ok((report, hist))
}

pub fn execute(cfg: &ScenarioConfig) -> LabResult<RunOutcome> {
    let start = Instant::now();
    let mut cases = Vec::new();
    let mut histories = Vec::new();
    for sc in cfg.scenarios()? {
        let (r, h) = run_case(cfg, &sc)?;
        cases.push(r);
        histories.push(h);
    }
    let artifact = RunArtifact {
        name: cfg.name.clone(),
        version: String::from(VERSION),
        wall_time_s: start.elapsed().as_secs_f64(),
        config: cfg.clone(),
        cases,
    };
    Ok(RunOutcome { artifact, histories })
}

/// `summary.json` and `config.cfg` in `dir`; per case `series.csv` and
/// `snapshots/snap_NNNNN.csv` (in a subdirectory named after the case when
/// there are several).
pub fn write_run(dir: &Path, out: &RunOutcome) -> LabResult<()> {
    io::write_json(&dir.join("summary.json"), &out.artifact)?;
    io::write_text(&dir.join("config.cfg"), &out.artifact.config.to_ini())?;
    let several = out.histories.len() > 1;
    for (case, hist) in out.artifact.cases.iter().zip(&out.histories) {
        let d = if several { dir.join(&case.label) } else { dir.to_path_buf() };
        io::write_series(&d.join("series.csv"), &hist.series)?;
        if out.artifact.config.checks.write_snapshots {
            for (k, s) in hist.snapshots.iter().enumerate() {
                let p = d.join("snapshots").join(format!("snap_{k:05}.csv"));
                io::write_snapshot(&p, s, &hist.params, &hist.grid)?;
            }
        }
    }
    Ok(())
}
