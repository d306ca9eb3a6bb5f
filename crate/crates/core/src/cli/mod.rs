//! Command-line driver: argument parsing, configuration, report output.

pub mod checks;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::catalog;
use crate::convexity::write_hull_csv;
use checks::{execute, Artifacts};
use config::{CheckSet, ConfigError, FileConfig, RunConfig};
use report::Report;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "gcconvex",
    version,
    about = "Numerical checks for Hamiltonian actions on twisted generalized complex manifolds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the catalog examples.
    List,
    /// Fiber axioms and integrability of the structure field.
    CheckStructure(RunArgs),
    /// Moment map conditions, invariance, effectiveness and fixed sets.
    CheckHamiltonian(RunArgs),
    /// Critical sets, Hessian signatures and structural identities.
    Morse(RunArgs),
    /// Convex hull of the moment image, deficiency and fixed images.
    Convexity(RunArgs),
    /// Connectedness of interior levels of the moment map.
    Levels(RunArgs),
    /// Every check.
    All(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Catalog example name.
    pub example: Option<String>,
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Finite-difference step.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub tol_residual: Option<f64>,
    /// Relative fixed-point threshold.
    #[arg(long)]
    pub tol_fixed: Option<f64>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl RunArgs {
    fn as_file_config(&self) -> FileConfig {
        FileConfig {
            example: self.example.clone(),
            resolution: self.resolution,
            step: self.step,
            tol_residual: self.tol_residual,
            tol_fixed: self.tol_fixed,
            jobs: self.jobs,
            seed: self.seed,
            out: self.out.clone(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Library(#[from] crate::Error),
    #[error("cannot write {path}: {reason}")]
    Output { path: String, reason: String },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// Parses argv (program name first) without running anything.
pub fn parse_args<I, T>(argv: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(argv)
}

/// The subcommand's check set and arguments, or `None` for `list`.
pub fn split_command(cmd: &Command) -> Option<(CheckSet, &RunArgs)> {
    match cmd {
        Command::List => None,
        Command::CheckStructure(a) => Some((CheckSet::CheckStructure, a)),
        Command::CheckHamiltonian(a) => Some((CheckSet::CheckHamiltonian, a)),
        Command::Morse(a) => Some((CheckSet::Morse, a)),
        Command::Convexity(a) => Some((CheckSet::Convexity, a)),
        Command::Levels(a) => Some((CheckSet::Levels, a)),
        Command::All(a) => Some((CheckSet::All, a)),
    }
}

/// Merges the config file (if any) under the flags and validates the result.
pub fn resolve_config(checks: CheckSet, args: &RunArgs) -> Result<RunConfig, ConfigError> {
    let file = match &args.config {
        Some(path) => FileConfig::read(path)?,
        None => FileConfig::default(),
    };
    RunConfig::resolve(checks, args.as_file_config().or(file))
}

fn write_file(
    path: &Path,
    write: impl FnOnce(&mut fs::File) -> io::Result<()>,
) -> Result<(), CliError> {
    let wrap = |e: io::Error| CliError::Output {
        path: path.display().to_string(),
        reason: e.to_string(),
    };
    let mut f = fs::File::create(path).map_err(wrap)?;
    write(&mut f).map_err(wrap)
}

fn csv_io(e: csv::Error) -> io::Error {
    io::Error::other(e.to_string())
}

fn write_outputs(dir: &Path, report: &Report, artifacts: &Artifacts) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Output {
        path: dir.display().to_string(),
        reason: e.to_string(),
    })?;
    write_file(&dir.join("report.json"), |f| {
        io::Write::write_all(f, (report.to_json() + "\n").as_bytes())
    })?;
    if let Some(cloud) = &artifacts.cloud {
        write_file(&dir.join("moment_cloud.csv"), |f| {
            cloud.write_csv(f).map_err(csv_io)
        })?;
    }
    if let Some(hull) = &artifacts.hull {
        write_file(&dir.join("hull.csv"), |f| {
            write_hull_csv(hull, f).map_err(csv_io)
        })?;
    }
    if !report.critical.is_empty() {
        write_file(&dir.join("critical.csv"), |f| {
            let mut w = csv::Writer::from_writer(f);
            let m = report.example.rank;
            let mut header: Vec<String> = [
                "direction",
                "sample",
                "component",
                "chart",
                "index",
                "coindex",
                "nullity",
            ]
            .map(String::from)
            .to_vec();
            header.extend((0..m).map(|k| format!("mu{k}")));
            w.write_record(&header).map_err(csv_io)?;
            for r in &artifacts.critical {
                let mut row: Vec<String> = [
                    r.direction,
                    r.sample,
                    r.component,
                    r.chart,
                    r.index,
                    r.coindex,
                    r.nullity,
                ]
                .iter()
                .map(usize::to_string)
                .collect();
                row.extend(r.moment.iter().map(|v| format!("{v:.12e}")));
                w.write_record(&row).map_err(csv_io)?;
            }
            w.flush()
        })?;
    }
    if !report.levels.is_empty() {
        write_file(&dir.join("levels.csv"), |f| {
            let mut w = csv::Writer::from_writer(f);
            let m = report.example.rank;
            let mut header: Vec<String> = vec!["level".into()];
            header.extend((0..m).map(|k| format!("a{k}")));
            header.extend(["eps", "band", "components"].map(String::from));
            w.write_record(&header).map_err(csv_io)?;
            for (i, l) in report.levels.iter().enumerate() {
                let mut row = vec![i.to_string()];
                row.extend(l.level.iter().map(|v| format!("{:.12e}", v.0)));
                row.push(format!("{:.12e}", l.eps.0));
                row.push(l.band.to_string());
                row.push(l.components.to_string());
                w.write_record(&row).map_err(csv_io)?;
            }
            w.flush()
        })?;
    }
    Ok(())
}

/// Loads the example, runs the checks on a pool of `cfg.jobs` threads and
/// writes the outputs.
pub fn run_config(cfg: &RunConfig) -> Result<Report, CliError> {
    let ex = catalog::load_with_resolution(&cfg.example, cfg.resolution)?;
    if cfg.checks.needs_action() {
        ex.hamiltonian()?;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cfg.jobs {
        builder = builder.num_threads(jobs);
    }
    let pool = builder.build().map_err(|e| CliError::Pool(e.to_string()))?;
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let (report, artifacts) = pool.install(|| execute(cfg, &ex, timestamp));
    write_outputs(&cfg.out, &report, &artifacts)?;
    Ok(report)
}

fn print_list() {
    for e in catalog::list() {
        println!("{:<24} {}  [{}]", e.name, e.description, e.instantiates);
    }
}

fn print_summary(report: &Report, out: &Path) {
    for c in &report.checks {
        let worst = c
            .worst_sample
            .map_or(String::new(), |w| format!(" worst sample {w}"));
        println!(
            "{} {}/{}: max {:.3e} tol {:.3e}{}{}",
            if c.pass { "PASS" } else { "FAIL" },
            c.module,
            c.check,
            c.max_residual.0,
            c.tol.0,
            worst,
            if c.note.is_empty() {
                String::new()
            } else {
                format!(" ({})", c.note)
            }
        );
    }
    println!("report written to {}", out.join("report.json").display());
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match parse_args(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return code;
        }
    };
    let Some((checks, args)) = split_command(&cli.command) else {
        print_list();
        return EXIT_PASS;
    };
    let cfg = match resolve_config(checks, args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match run_config(&cfg) {
        Ok(report) => {
            print_summary(&report, &cfg.out);
            if report.pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_subcommands_and_flags() {
        let cli = parse_args([
            "gcconvex",
            "all",
            "sphere_rotation",
            "--resolution",
            "32",
            "--jobs",
            "2",
        ])
        .unwrap();
        let (set, args) = split_command(&cli.command).unwrap();
        assert_eq!(set, CheckSet::All);
        assert_eq!(args.example.as_deref(), Some("sphere_rotation"));
        assert_eq!(args.resolution, Some(32));
        assert!(split_command(&parse_args(["gcconvex", "list"]).unwrap().command).is_none());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["gcconvex", "frobnicate"]), EXIT_USAGE);
        assert_eq!(
            run(["gcconvex", "all", "sphere_rotation", "--bogus"]),
            EXIT_USAGE
        );
        assert_eq!(run(["gcconvex", "all", "no_such_example"]), EXIT_USAGE);
        assert_eq!(
            run(["gcconvex", "all", "sphere_rotation", "--resolution", "4"]),
            EXIT_USAGE
        );
        assert_eq!(
            run(["gcconvex", "morse", "nonintegrable_control"]),
            EXIT_USAGE
        );
        assert_eq!(run(["gcconvex", "list"]), EXIT_PASS);
    }
}
