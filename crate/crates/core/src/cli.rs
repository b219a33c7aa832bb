//! Command-line driver.

use std::path::{Path, PathBuf};

use clap::Parser;

use crate::config::{RunConfig, Task};
use crate::dispersion::{self, Solver, NONEXISTENCE_GLOBAL_NEGATIVE};
use crate::error::Error;
use crate::oracle::Fixture;
use crate::profile::MaterialProfile;
use crate::report::{self, Estimate, PlotFrame, Report, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_NONEXISTENCE: i32 = 3;

pub const REPORT_FILE: &str = "report.json";
pub const CSV_FILE: &str = "modes.csv";
pub const PLOT_FILE: &str = "dispersion.svg";

/// Surface shear-wave dispersion for depth-graded half-spaces.
#[derive(Debug, Clone, Parser)]
#[command(name = "shwave", version)]
pub struct Args {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Write an SVG plot of the dispersion branches.
    #[arg(long)]
    pub plot: bool,
    /// Worker threads (defaults to the config value, then to all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory (overrides the config).
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Directory of oracle fixtures to compare against.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
}

struct Outcome {
    report: Report,
    code: i32,
}

fn write_report(dir: &Path, report: &Report) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(REPORT_FILE), report.to_json())
}

/// Runs the configured task, writes the outputs and returns the exit code.
pub fn run(args: &Args) -> i32 {
    let cfg = RunConfig::load(&args.config);
    let base = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let out_dir = args
        .output_dir
        .clone()
        .or_else(|| cfg.as_ref().ok().and_then(|c| c.output.dir.as_ref().map(|d| base.join(d))))
        .unwrap_or_else(|| PathBuf::from("."));

    let outcome = match cfg {
        Err(e) => {
            let mut r = Report::new(None);
            r.status = Status::InvalidInput;
            r.error = Some(e.to_string());
            Outcome { report: r, code: EXIT_INVALID }
        }
        Ok(cfg) => {
            let workers = args.workers.or(cfg.workers);
            match workers {
                Some(0) => {
                    let mut r = Report::new(Some(cfg));
                    r.status = Status::InvalidInput;
                    r.error = Some("workers must be positive".into());
                    Outcome { report: r, code: EXIT_INVALID }
                }
                _ => {
                    let mut builder = rayon::ThreadPoolBuilder::new();
                    if let Some(n) = workers {
                        builder = builder.num_threads(n);
                    }
                    match builder.build() {
                        Ok(pool) => pool.install(|| execute(cfg, &base, args, &out_dir)),
                        Err(e) => {
                            let mut r = Report::new(Some(cfg));
                            r.status = Status::SolverError;
                            r.error = Some(e.to_string());
                            Outcome { report: r, code: EXIT_SOLVER }
                        }
                    }
                }
            }
        }
    };

    if let Some(e) = &outcome.report.error {
        eprintln!("error: {e}");
    }
    if let Err(e) = write_report(&out_dir, &outcome.report) {
        eprintln!("error: cannot write report to {}: {e}", out_dir.display());
        return if outcome.code == EXIT_OK { EXIT_SOLVER } else { outcome.code };
    }
    outcome.code
}

fn fail(mut report: Report, e: &Error) -> Outcome {
    let invalid = matches!(
        e,
        Error::InvalidProfile(_) | Error::InvalidParam { .. } | Error::Config(_) | Error::NegativeDepth(_)
    );
    report.status = if invalid { Status::InvalidInput } else { Status::SolverError };
    report.error = Some(e.to_string());
    Outcome { report, code: if invalid { EXIT_INVALID } else { EXIT_SOLVER } }
}

fn execute(cfg: RunConfig, base: &Path, args: &Args, out_dir: &Path) -> Outcome {
    let mut report = Report::new(Some(cfg.clone()));
    let profile = match MaterialProfile::from_spec_in(&cfg.profile, base) {
        Ok(p) => p,
        Err(e) => return fail(report, &e),
    };
    let solver = match Solver::new(&profile, cfg.solver) {
        Ok(s) => s,
        Err(e) => return fail(report, &e),
    };
    report.classification = Some(solver.class().clone());
    let ks = cfg.wavenumbers();
    let mut code = EXIT_OK;

    match cfg.task {
        Task::Classify => {
            report.assumptions = Some(profile.check_assumptions());
            if solver.class().global_negative {
                report.verdict = Some(NONEXISTENCE_GLOBAL_NEGATIVE.into());
            }
        }
        Task::Modes => {
            if solver.class().global_negative {
                report.status = Status::Nonexistence;
                report.verdict = Some(NONEXISTENCE_GLOBAL_NEGATIVE.into());
                code = EXIT_NONEXISTENCE;
            }
            for &k in &ks {
                match solver.find_modes(k * k) {
                    Ok(s) => report.modes.push(s),
                    Err(e) => return fail(report, &e),
                }
            }
        }
        Task::Branches => match solver.trace_branches(&ks) {
            Ok(t) => {
                if solver.class().global_negative {
                    report.verdict = Some(NONEXISTENCE_GLOBAL_NEGATIVE.into());
                }
                if !t.failures.is_empty() {
                    report.status = Status::SolverError;
                    report.error = Some(format!("{} wavenumber(s) failed", t.failures.len()));
                    code = EXIT_SOLVER;
                }
                report.branches = Some(t);
            }
            Err(e) => return fail(report, &e),
        },
        Task::Estimate => {
            for &k in &ks {
                let e = dispersion::estimate_mode_count(&profile, k * k);
                report.estimates.push(Estimate { k, big_k: k * k, estimate: e.is_finite().then_some(e) });
            }
        }
        Task::Oscillation => {
            let o = dispersion::oscillation_test(&profile, cfg.y_max);
            report.verdict = Some(format!("{:?}", o.verdict).to_lowercase());
            report.oscillation = Some(o);
        }
    }

    if let Some(dir) = &args.fixtures {
        match Fixture::load_dir(dir) {
            Ok(f) => report.compare_fixtures(&f),
            Err(e) => return fail(report, &e),
        }
    }

    if matches!(cfg.task, Task::Modes | Task::Branches) {
        if let Err(e) = std::fs::create_dir_all(out_dir) {
            return fail(report, &Error::Config(format!("{}: {e}", out_dir.display())));
        }
        if let Err(e) = report::write_csv(&out_dir.join(CSV_FILE), &report.all_modes()) {
            return fail(report, &e);
        }
        if args.plot || cfg.output.plot {
            let branches = report.branches.as_ref().map(|t| t.branches.clone()).unwrap_or_default();
            let class = solver.class();
            let frame = PlotFrame {
                k_min: ks.first().copied().unwrap_or(0.0),
                k_max: ks.last().copied().unwrap_or(1.0),
                lower_slope: class.min_mu_over_rho.sqrt(),
                cutoff_slope: class.mu_over_rho_inf.sqrt(),
            };
            if let Err(e) = std::fs::write(out_dir.join(PLOT_FILE), report::render_svg(&branches, &frame)) {
                return fail(report, &Error::Config(format!("{}: {e}", out_dir.display())));
            }
        }
    }
    Outcome { report, code }
}
