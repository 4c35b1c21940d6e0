//! Argument parsing and the three subcommands.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::ScenarioConfig;
use crate::error::LabResult;
use crate::{run, sweep};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "SGN_LAB_OUT";
pub const OUT_DEFAULT: &str = "sgn-out";

#[derive(Debug, Parser)]
#[command(name = "sgn-lab", version, about = "Serre-Green-Naghdi simulations with surface tension")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one configuration and evaluate its checks.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// `section.key=value`, repeatable.
        #[arg(long = "override", value_name = "KEY=VAL")]
        overrides: Vec<String>,
    },
    /// Repeat a configuration for each cut-off and compare neighbours.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Strictly decreasing, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        epsilons: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "override", value_name = "KEY=VAL")]
        overrides: Vec<String>,
    },
    /// Validate a configuration without simulating.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VAL")]
        overrides: Vec<String>,
    },
}

fn out_dir(out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(OUT_DEFAULT))
}

fn print_verdicts<'a>(label: &str, vs: impl Iterator<Item = &'a run::Verdict>) {
    for v in vs {
        if label.is_empty() {
            println!("{}", v.line());
        } else {
            println!("{} [{label}]", v.line());
        }
    }
}

fn report_run(out: &run::RunOutcome) {
    let several = out.artifact.cases.len() > 1;
    for c in &out.artifact.cases {
        if let Some(a) = &c.abort {
            println!("abort [{}] t={:.6e} {}", c.label, a.t, a.code());
        }
        print_verdicts(if several { &c.label } else { "" }, c.verdicts.iter());
    }
}

/// Runs a subcommand and returns the process exit code: 0 if every enabled
/// check passed, 1 if one failed or the run could not be carried out, 2 for
/// usage and configuration errors.
pub fn execute(cmd: Command) -> LabResult<i32> {
    match cmd {
        Command::Run { config, out, overrides } => {
            let cfg = ScenarioConfig::load(&config, &overrides)?;
            let res = run::execute(&cfg)?;
            let dir = out_dir(out);
            run::write_run(&dir, &res)?;
            report_run(&res);
            Ok(if res.artifact.passed() { 0 } else { 1 })
        }
        Command::Sweep { config, epsilons, out, overrides } => {
            let cfg = ScenarioConfig::load(&config, &overrides)?;
            let res = sweep::epsilon_sweep(&cfg, &epsilons)?;
            let dir = out_dir(out);
            sweep::write_sweep(&dir, &res)?;
            for (e, r) in epsilons.iter().zip(&res.runs) {
                for c in &r.artifact.cases {
                    if let Some(a) = &c.abort {
                        println!("abort [eps={e}] t={:.6e} {}", a.t, a.code());
                    }
                }
            }
            for row in &res.summary.table {
                let f = |v: Option<f64>| v.map_or_else(|| String::from("missing"), |x| format!("{x:.6e}"));
                println!("l2 eps={}->{} h={} u={}", row.eps_coarse, row.eps_fine, f(row.l2_h), f(row.l2_u));
            }
            print_verdicts("", res.summary.verdicts.iter());
            Ok(if res.summary.passed() { 0 } else { 1 })
        }
        Command::Check { config, overrides } => {
            let cfg = ScenarioConfig::load(&config, &overrides)?;
            let cases = cfg.scenarios()?;
            for sc in &cases {
                sgn_core::scenario::build_initial(sc)?;
            }
            println!("ok {} ({} case{})", cfg.name, cases.len(), if cases.len() == 1 { "" } else { "s" });
            Ok(0)
        }
    }
}

/// Parses `args` (including the program name) and runs the command. Errors
/// are printed to stderr.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
