//! INI-style run configuration: one section per concern, `key = value`
//! lines, and `section.key=value` overrides from the command line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ini::Ini;
use serde::{Deserialize, Serialize};
use sgn_core::diagnostics::{BlowupThresholds, SpaceTimeBox};
use sgn_core::dynamics::{Monitors, StepControl};
use sgn_core::scenario::{Kind, Scenario};
use sgn_core::{Grid, Mode, Params};

use crate::error::{LabError, LabResult};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Flat,
    Gaussian,
    Sine,
    Steep,
    Custom,
}

impl ShapeKind {
    fn parse(s: &str) -> LabResult<Self> {
        Ok(match s {
            "flat" => ShapeKind::Flat,
            "gaussian" => ShapeKind::Gaussian,
            "sine" => ShapeKind::Sine,
            "steep" => ShapeKind::Steep,
            "custom" | "custom-from-file" => ShapeKind::Custom,
            other => return Err(LabError::Config(format!("unknown scenario kind `{other}`"))),
        })
    }

    fn name(self) -> &'static str {
        match self {
            ShapeKind::Flat => "flat",
            ShapeKind::Gaussian => "gaussian",
            ShapeKind::Sine => "sine",
            ShapeKind::Steep => "steep",
            ShapeKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub length: f64,
    pub x_left: f64,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    /// Sine runs are repeated once per wavenumber.
    pub wavenumbers: Vec<f64>,
    pub plateau: f64,
    pub sign: f64,
    /// CSV with columns `h,u` (an optional leading `x` column is ignored).
    pub file: Option<PathBuf>,
    pub mollifier_epsilon: f64,
    /// Sweeps set `mollifier_epsilon = epsilon` for every member.
    pub tie_mollifier: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checks {
    pub energy: bool,
    pub bounds: bool,
    pub oleinik: bool,
    /// Constant the Oleinik series must stay under; fitted only when absent.
    pub oleinik_c: Option<f64>,
    pub expect_blowup: bool,
    pub blowup_ux: f64,
    pub blowup_hx: f64,
    pub blowup_h_fraction: f64,
    pub boundary_tolerance: f64,
    /// Relative tolerance of measured phase speeds; sine runs only.
    pub dispersion_tolerance: f64,
    pub box_alpha: f64,
    pub box_region: Option<SpaceTimeBox>,
    pub write_snapshots: bool,
}

impl Default for Checks {
    fn default() -> Self {
        let th = BlowupThresholds::default();
        let m = Monitors::default();
        Checks {
            energy: true,
            bounds: true,
            oleinik: false,
            oleinik_c: None,
            expect_blowup: false,
            blowup_ux: th.ux,
            blowup_hx: th.hx,
            blowup_h_fraction: th.h_fraction,
            boundary_tolerance: m.boundary_tolerance,
            dispersion_tolerance: 0.01,
            box_alpha: 0.5,
            box_region: None,
            write_snapshots: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub params: Params,
    pub grid: GridSpec,
    pub shape: ShapeSpec,
    pub step: StepControl,
    pub checks: Checks,
}

fn parse_f64(section: &str, key: &str, v: &str) -> LabResult<f64> {
    v.trim().parse().map_err(|_| LabError::Config(format!("[{section}] {key}: `{v}` is not a number")))
}

fn parse_bool(section: &str, key: &str, v: &str) -> LabResult<bool> {
    match v.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(LabError::Config(format!("[{section}] {key}: `{v}` is not a boolean"))),
    }
}

fn parse_list(section: &str, key: &str, v: &str) -> LabResult<Vec<f64>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_f64(section, key, s)).collect()
}

/// Typed view of one INI section that remembers which keys were read, so
/// unknown keys can be reported.
struct Section<'a> {
    name: &'static str,
    props: Option<&'a ini::Properties>,
    seen: Vec<&'static str>,
}

impl<'a> Section<'a> {
    fn new(ini: &'a Ini, name: &'static str) -> Self {
        Section { name, props: ini.section(Some(name)), seen: Vec::new() }
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a str> {
        self.seen.push(key);
        self.props.and_then(|p| p.get(key))
    }

    fn f64_or(&mut self, key: &'static str, default: f64) -> LabResult<f64> {
        let name = self.name;
        self.raw(key).map_or(Ok(default), |v| parse_f64(name, key, v))
    }

    fn f64_opt(&mut self, key: &'static str) -> LabResult<Option<f64>> {
        let name = self.name;
        self.raw(key).map(|v| parse_f64(name, key, v)).transpose()
    }

    fn f64_req(&mut self, key: &'static str) -> LabResult<f64> {
        let name = self.name;
        match self.raw(key) {
            Some(v) => parse_f64(name, key, v),
            None => Err(LabError::Config(format!("[{name}] {key} is required"))),
        }
    }

    fn bool_or(&mut self, key: &'static str, default: bool) -> LabResult<bool> {
        let name = self.name;
        self.raw(key).map_or(Ok(default), |v| parse_bool(name, key, v))
    }

    fn finish(self) -> LabResult<()> {
        if let Some(p) = self.props {
            for (k, _) in p.iter() {
                if !self.seen.contains(&k) {
                    return Err(LabError::Config(format!("[{}] unknown key `{k}`", self.name)));
                }
            }
        }
        Ok(())
    }
}

const SECTIONS: [&str; 6] = ["run", "params", "grid", "scenario", "step", "checks"];

impl ScenarioConfig {
    /// Reads a config file; relative `file` paths resolve against its
    /// directory.
    pub fn load(path: &Path, overrides: &[String]) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Io(path.to_path_buf(), e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, overrides, &base)
    }

    pub fn parse(text: &str, overrides: &[String], base: &Path) -> LabResult<Self> {
        let mut ini = Ini::load_from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        for o in overrides {
            let (key, value) =
                o.split_once('=').ok_or_else(|| LabError::Config(format!("override `{o}` is not KEY=VAL")))?;
            let (section, key) = key
                .trim()
                .split_once('.')
                .ok_or_else(|| LabError::Config(format!("override key `{key}` is not section.key")))?;
            ini.with_section(Some(section)).set(key, value.trim());
        }
        for (s, _) in ini.iter() {
            match s {
                Some(s) if SECTIONS.contains(&s) => {}
                None => {}
                Some(s) => return Err(LabError::Config(format!("unknown section [{s}]"))),
            }
        }
        if ini.general_section().iter().next().is_some() {
            return Err(LabError::Config(String::from("keys outside a section")));
        }

        let mut run = Section::new(&ini, "run");
        let name = run.raw("name").unwrap_or("run").to_string();
        run.finish()?;

        let mut s = Section::new(&ini, "params");
        let params = Params {
            g: s.f64_or("g", 9.81)?,
            gamma: s.f64_or("gamma", 9.81)?,
            hbar: s.f64_or("hbar", 1.0)?,
            epsilon: s.f64_or("epsilon", 0.0)?,
        };
        s.finish()?;
        params.validate().map_err(|e| LabError::Config(format!("[params] {e}")))?;

        let mut s = Section::new(&ini, "grid");
        let n = s.f64_req("n")?;
        if !(n >= 8.0 && n.fract() == 0.0) {
            return Err(LabError::Config(String::from("[grid] n must be an integer >= 8")));
        }
        let length = s.f64_req("length")?;
        let mode = match s.raw("mode").unwrap_or("periodic") {
            "periodic" => Mode::Periodic,
            "line" => Mode::Line,
            other => return Err(LabError::Config(format!("[grid] unknown mode `{other}`"))),
        };
        let x_left = s.f64_or("x_left", if mode == Mode::Line { -0.5 * length } else { 0.0 })?;
        s.finish()?;
        let grid = GridSpec { n: n as usize, length, x_left, mode };

        let mut s = Section::new(&ini, "scenario");
        let kind = ShapeKind::parse(s.raw("kind").unwrap_or("flat"))?;
        let wavenumbers = match s.raw("wavenumber") {
            Some(v) => parse_list("scenario", "wavenumber", v)?,
            None => Vec::new(),
        };
        let file = s.raw("file").map(|f| {
            let p = PathBuf::from(f.trim());
            if p.is_relative() {
                base.join(p)
            } else {
                p
            }
        });
        let shape = ShapeSpec {
            kind,
            amplitude: s.f64_or("amplitude", 0.0)?,
            width: s.f64_or("width", 1.0)?,
            center: s.f64_or("center", 0.0)?,
            wavenumbers,
            plateau: s.f64_or("plateau", 0.0)?,
            sign: s.f64_or("sign", 1.0)?,
            file,
            mollifier_epsilon: s.f64_or("mollifier_epsilon", 0.0)?,
            tie_mollifier: s.bool_or("tie_mollifier", true)?,
        };
        s.finish()?;
        if kind == ShapeKind::Sine && shape.wavenumbers.is_empty() {
            return Err(LabError::Config(String::from("[scenario] sine needs wavenumber")));
        }
        if kind == ShapeKind::Custom && shape.file.is_none() {
            return Err(LabError::Config(String::from("[scenario] custom needs file")));
        }

        let mut s = Section::new(&ini, "step");
        let step = StepControl {
            cfl: s.f64_or("cfl", 0.3)?,
            dt_max: s.f64_or("dt_max", 1.0)?,
            t_end: s.f64_req("t_end")?,
            output_every: s.f64_or("output_every", 0.0)? as usize,
            snapshot_dt: s.f64_opt("snapshot_dt")?,
        };
        s.finish()?;
        step.validate().map_err(|e| LabError::Config(format!("[step] {e}")))?;

        let d = Checks::default();
        let mut s = Section::new(&ini, "checks");
        let box_region = match s.raw("box") {
            Some(v) => {
                let b = parse_list("checks", "box", v)?;
                if b.len() != 4 {
                    return Err(LabError::Config(String::from("[checks] box is t1, t2, a, b")));
                }
                Some(SpaceTimeBox { t1: b[0], t2: b[1], a: b[2], b: b[3] })
            }
            None => None,
        };
        let checks = Checks {
            energy: s.bool_or("energy", d.energy)?,
            bounds: s.bool_or("bounds", d.bounds)?,
            oleinik: s.bool_or("oleinik", d.oleinik)?,
            oleinik_c: s.f64_opt("oleinik_c")?,
            expect_blowup: s.bool_or("expect_blowup", d.expect_blowup)?,
            blowup_ux: s.f64_or("blowup_ux", d.blowup_ux)?,
            blowup_hx: s.f64_or("blowup_hx", d.blowup_hx)?,
            blowup_h_fraction: s.f64_or("blowup_h_fraction", d.blowup_h_fraction)?,
            boundary_tolerance: s.f64_or("boundary_tolerance", d.boundary_tolerance)?,
            dispersion_tolerance: s.f64_or("dispersion_tolerance", d.dispersion_tolerance)?,
            box_alpha: s.f64_or("box_alpha", d.box_alpha)?,
            box_region,
            write_snapshots: s.bool_or("write_snapshots", d.write_snapshots)?,
        };
        s.finish()?;

        let cfg = ScenarioConfig { name, params, grid, shape, step, checks };
        cfg.grid()?;
        for sc in cfg.scenarios_unloaded()? {
            sc.validate().map_err(|e| LabError::Config(format!("[scenario] {e}")))?;
        }
        Ok(cfg)
    }

    pub fn grid(&self) -> LabResult<Grid> {
        let g = &self.grid;
        Grid::with_length(g.n, g.length, g.x_left, g.mode).map_err(|e| LabError::Config(format!("[grid] {e}")))
    }

    pub fn monitors(&self) -> Monitors {
        let c = &self.checks;
        Monitors {
            blowup: BlowupThresholds { ux: c.blowup_ux, hx: c.blowup_hx, h_fraction: c.blowup_h_fraction },
            boundary_tolerance: c.boundary_tolerance,
        }
    }

    /// Validation-only scenarios: custom profiles are replaced by flat
    /// placeholders so no file is read.
    fn scenarios_unloaded(&self) -> LabResult<Vec<Scenario>> {
        let grid = self.grid()?;
        let flat = Kind::Custom { h: vec![self.params.hbar; grid.n()], u: vec![0.0; grid.n()] };
        self.kinds(|| Ok(flat.clone())).map(|ks| self.wrap(ks, grid))
    }

    /// One scenario per wavenumber for sine data, otherwise exactly one.
    pub fn scenarios(&self) -> LabResult<Vec<Scenario>> {
        let grid = self.grid()?;
        let load = || {
            let path = self.shape.file.as_ref().expect("checked at parse time");
            let (h, u) = io::read_profile(path, grid.n())?;
            Ok(Kind::Custom { h, u })
        };
        self.kinds(load).map(|ks| self.wrap(ks, grid))
    }

    fn wrap(&self, kinds: Vec<Kind>, grid: Grid) -> Vec<Scenario> {
        kinds
            .into_iter()
            .map(|kind| Scenario { kind, params: self.params, grid, mollifier: self.shape.mollifier_epsilon })
            .collect()
    }

    fn kinds(&self, custom: impl Fn() -> LabResult<Kind>) -> LabResult<Vec<Kind>> {
        let s = &self.shape;
        Ok(match s.kind {
            ShapeKind::Flat => vec![Kind::Flat],
            ShapeKind::Gaussian => {
                vec![Kind::Gaussian { amplitude: s.amplitude, width: s.width, center: s.center }]
            }
            ShapeKind::Sine => s
                .wavenumbers
                .iter()
                .map(|&k| Kind::Sine { amplitude: s.amplitude, wavenumber: k })
                .collect(),
            ShapeKind::Steep => vec![Kind::Steep {
                amplitude: s.amplitude,
                width: s.width,
                center: s.center,
                plateau: s.plateau,
                sign: s.sign,
            }],
            ShapeKind::Custom => vec![custom()?],
        })
    }

    /// Same configuration with another `epsilon`.
    pub fn with_epsilon(&self, eps: f64, mollifier: Option<f64>) -> Self {
        let mut c = self.clone();
        c.params = c.params.with_epsilon(eps);
        if let Some(m) = mollifier {
            c.shape.mollifier_epsilon = m;
        }
        c
    }

    /// Renders the configuration back to INI text that parses to an equal
    /// value.
    pub fn to_ini(&self) -> String {
        let mut o = String::new();
        let num = |v: f64| format!("{v:?}");
        let _ = writeln!(o, "[run]\nname = {}\n", self.name);
        let p = &self.params;
        let _ = writeln!(
            o,
            "[params]\ng = {}\ngamma = {}\nhbar = {}\nepsilon = {}\n",
            num(p.g),
            num(p.gamma),
            num(p.hbar),
            num(p.epsilon)
        );
        let g = &self.grid;
        let mode = if g.mode == Mode::Line { "line" } else { "periodic" };
        let _ = writeln!(
            o,
            "[grid]\nn = {}\nlength = {}\nx_left = {}\nmode = {mode}\n",
            g.n,
            num(g.length),
            num(g.x_left)
        );
        let s = &self.shape;
        let _ = writeln!(o, "[scenario]\nkind = {}", s.kind.name());
        let _ = writeln!(
            o,
            "amplitude = {}\nwidth = {}\ncenter = {}\nplateau = {}\nsign = {}\nmollifier_epsilon = {}\ntie_mollifier = {}",
            num(s.amplitude),
            num(s.width),
            num(s.center),
            num(s.plateau),
            num(s.sign),
            num(s.mollifier_epsilon),
            s.tie_mollifier
        );
        if !s.wavenumbers.is_empty() {
            let ks: Vec<String> = s.wavenumbers.iter().map(|&k| num(k)).collect();
            let _ = writeln!(o, "wavenumber = {}", ks.join(", "));
        }
        if let Some(f) = &s.file {
            let _ = writeln!(o, "file = {}", f.display());
        }
        let st = &self.step;
        let _ = writeln!(
            o,
            "\n[step]\ncfl = {}\ndt_max = {}\nt_end = {}\noutput_every = {}",
            num(st.cfl),
            num(st.dt_max),
            num(st.t_end),
            st.output_every
        );
        if let Some(d) = st.snapshot_dt {
            let _ = writeln!(o, "snapshot_dt = {}", num(d));
        }
        let c = &self.checks;
        let _ = writeln!(
            o,
            "\n[checks]\nenergy = {}\nbounds = {}\noleinik = {}\nexpect_blowup = {}\nblowup_ux = {}\nblowup_hx = {}\nblowup_h_fraction = {}\nboundary_tolerance = {}\ndispersion_tolerance = {}\nbox_alpha = {}\nwrite_snapshots = {}",
            c.energy,
            c.bounds,
            c.oleinik,
            c.expect_blowup,
            num(c.blowup_ux),
            num(c.blowup_hx),
            num(c.blowup_h_fraction),
            num(c.boundary_tolerance),
            num(c.dispersion_tolerance),
            num(c.box_alpha),
            c.write_snapshots
        );
        if let Some(v) = c.oleinik_c {
            let _ = writeln!(o, "oleinik_c = {}", num(v));
        }
        if let Some(b) = &c.box_region {
            let _ = writeln!(o, "box = {}, {}, {}, {}", num(b.t1), num(b.t2), num(b.a), num(b.b));
        }
        o
    }
}
