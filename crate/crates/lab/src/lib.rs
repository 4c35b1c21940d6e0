//! Configuration files, artifact writers, the run and sweep drivers and the
//! command line front end for `sgn-core`.
//!
//! Configurations are INI files with the sections `[run]`, `[params]`,
//! `[grid]`, `[scenario]`, `[step]` and `[checks]`; see `configs/` in the
//! repository for one of each scenario kind.
//!
//! Artifacts of a run in directory `DIR`:
//!
//! * `DIR/config.cfg`: the effective configuration, parseable by `run`.
//! * `DIR/summary.json`: a [`run::RunArtifact`]. Top-level keys are `name`,
//!   `version`, `wall_time_s`, `config` and `cases`; each case carries `label`,
//!   `e0`, `e_max`, `below_threshold`, `steps`, `halvings`, `t_final`, `abort`,
//!   `snapshot_times`, `energy`, `bounds`, `oleinik`, `blowup`, `phase`,
//!   `box_norm` and `verdicts`.
//! * `series.csv` with columns `t, mass, energy, min_h, min_ux, max_abs_hx,
//!   sup_P, sup_Q`, and `snapshots/snap_NNNNN.csv` with columns `x, h, u, P,
//!   Q`. Runs with several cases put these in one subdirectory per case.
//!
//! A sweep writes one such directory per cut-off, `eps_<epsilon>/`, plus
//! `convergence.csv` (`eps_coarse, eps_fine, l2_h, l2_u`) and `sweep.json`.
//! Numbers are written with 17 significant digits.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod run;
pub mod sweep;

pub use config::ScenarioConfig;
pub use error::{LabError, LabResult};
