//! Command-line surface: figure data emission, the full verification battery,
//! and the recurrence/exchange schedule.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error.

mod config;

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use modeswap::analytic::Scenario;
use modeswap::oracle::{verify_scenario, NegativeControl, Tolerances, VerificationReport};
use serde::Serialize;

use config::{BetaMode, ConfigError, GridConfig, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "modeswap",
    version,
    about = "Two-mode rotating-wave-coupling dynamics: figure data and closed-form verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one figure's curves as CSV (columns: tau first, 15 significant digits)
    Figure {
        #[arg(value_enum)]
        id: FigureId,
        /// JSON scenario configuration; figure defaults apply when absent
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV path (default: the figure name plus .csv)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the number of grid points
        #[arg(long)]
        grid_points: Option<usize>,
        /// Override the truncation tail tolerance
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Run every closed-form-vs-oracle check and write a JSON report
    Verify {
        /// JSON scenario configuration; the default battery covers
        /// |alpha|^2 in {1, 5} and Phi in {0, pi/2, pi}, balanced beta
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output report path (default: verify_report.json)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        grid_points: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Corrupt one closed form on purpose; the run must then fail
        #[arg(long)]
        negative_control: bool,
    },
    /// Write the recurrence/exchange schedule as JSON
    Schedule {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output path (default: schedule.json)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of recurrence/exchange entries
        #[arg(long, default_value_t = 4)]
        terms: u32,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FigureId {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
}

impl FigureId {
    fn name(self) -> &'static str {
        match self {
            FigureId::Fig1 => "fig1",
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
        }
    }

    /// Configuration used when no file is supplied.
    fn canonical_config(self) -> ScenarioConfig {
        let base = ScenarioConfig::default();
        match self {
            FigureId::Fig1 => base,
            FigureId::Fig2 => ScenarioConfig {
                alpha_mag: 5.0f64.sqrt(),
                ..base
            },
            FigureId::Fig3 | FigureId::Fig4 => ScenarioConfig {
                alpha_mag: 5.0f64.sqrt(),
                grid: GridConfig {
                    tau_min: 0.0,
                    tau_max: 5.0 * PI,
                    points: 2561,
                },
                ..base
            },
        }
    }

    /// Cat phases of the figure's curves and the observable plotted.
    fn curves(self) -> (&'static [(f64, &'static str)], Observable) {
        const THREE: &[(f64, &str)] = &[
            (0.0, "entropy_phi_0"),
            (PI / 2.0, "entropy_phi_pi_2"),
            (PI, "entropy_phi_pi"),
        ];
        const EXCHANGE: &[(f64, &str)] = &[(0.0, "exchange_phi_0"), (PI, "exchange_phi_pi")];
        const YURKE: &[(f64, &str)] = &[(PI / 2.0, "exchange_phi_pi_2")];
        match self {
            FigureId::Fig1 | FigureId::Fig2 => (THREE, Observable::Entropy),
            FigureId::Fig3 => (EXCHANGE, Observable::Exchange),
            FigureId::Fig4 => (YURKE, Observable::Exchange),
        }
    }
}

#[derive(Clone, Copy)]
enum Observable {
    Entropy,
    Exchange,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, ConfigError> {
    match cli.command {
        Command::Figure {
            id,
            config,
            out,
            grid_points,
            epsilon,
        } => {
            let cfg = load_or(config.as_deref(), || id.canonical_config())?;
            let cfg = apply_overrides(cfg, grid_points, epsilon)?;
            cfg.require_resonant()?;
            let out = out.unwrap_or_else(|| PathBuf::from(format!("{}.csv", id.name())));
            run_figure(id, &cfg, &out)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            config,
            out,
            grid_points,
            epsilon,
            negative_control,
        } => {
            let out = out.unwrap_or_else(|| PathBuf::from("verify_report.json"));
            let control = if negative_control {
                NegativeControl::FlipEntropySign
            } else {
                NegativeControl::None
            };
            let configs = match config {
                Some(path) => vec![ScenarioConfig::load(&path)?],
                None => default_battery(),
            };
            let configs = configs
                .into_iter()
                .map(|c| apply_overrides(c, grid_points, epsilon))
                .collect::<Result<Vec<_>, _>>()?;
            run_verify(&configs, control, &out)
        }
        Command::Schedule { config, out, terms } => {
            let cfg = load_or(config.as_deref(), ScenarioConfig::default)?;
            let out = out.unwrap_or_else(|| PathBuf::from("schedule.json"));
            let scenario = scenario_with_warning(&cfg)?;
            let schedule = scenario.schedule(terms);
            write_file(&out, &to_json(&schedule)?)?;
            println!(
                "wrote {} ({} recurrences, {} exchanges)",
                out.display(),
                schedule.recurrences.len(),
                schedule.exchanges.len()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_or(
    path: Option<&Path>,
    fallback: impl FnOnce() -> ScenarioConfig,
) -> Result<ScenarioConfig, ConfigError> {
    match path {
        Some(p) => ScenarioConfig::load(p),
        None => Ok(fallback()),
    }
}

fn apply_overrides(
    mut cfg: ScenarioConfig,
    grid_points: Option<usize>,
    epsilon: Option<f64>,
) -> Result<ScenarioConfig, ConfigError> {
    if let Some(points) = grid_points {
        cfg.grid.points = points;
    }
    if let Some(eps) = epsilon {
        cfg.epsilon_trunc = eps;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn scenario_with_warning(cfg: &ScenarioConfig) -> Result<Scenario, ConfigError> {
    let s = cfg.scenario()?;
    if !s.coupling.rwc_valid() {
        eprintln!(
            "warning: rotating-wave description is marginal (lambda or detuning not small \
             against the mode frequencies)"
        );
    }
    Ok(s)
}

fn run_figure(id: FigureId, cfg: &ScenarioConfig, out: &Path) -> Result<(), ConfigError> {
    let taus = cfg.taus();
    let (curves, observable) = id.curves();

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(curves.len());
    for &(big_phi, _) in curves {
        let scenario = scenario_with_warning(&cfg.with_big_phi(big_phi))?;
        let column = taus
            .iter()
            .map(|&tau| match observable {
                Observable::Entropy => scenario.linear_entropy(tau),
                Observable::Exchange => scenario.exchange_functional(tau),
            })
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| ConfigError(format!("{}: {e}", id.name())))?;
        columns.push(column);
    }

    let mut csv = String::new();
    csv.push_str("tau");
    for &(_, name) in curves {
        csv.push(',');
        csv.push_str(name);
    }
    csv.push('\n');
    for (i, &tau) in taus.iter().enumerate() {
        write!(csv, "{tau:.14e}").expect("string write");
        for column in &columns {
            write!(csv, ",{:.14e}", column[i]).expect("string write");
        }
        csv.push('\n');
    }
    write_file(out, &csv)
}

/// The default verification battery: both cat intensities against every
/// special phase, balanced partner mode.
fn default_battery() -> Vec<ScenarioConfig> {
    let mut out = Vec::new();
    for alpha_sq in [1.0f64, 5.0] {
        for big_phi in [0.0, PI / 2.0, PI] {
            out.push(ScenarioConfig {
                alpha_mag: alpha_sq.sqrt(),
                big_phi,
                beta_mode: BetaMode::Balanced,
                ..ScenarioConfig::default()
            });
        }
    }
    out
}

#[derive(Serialize)]
struct VerifyOutput {
    passed: bool,
    negative_control: NegativeControl,
    grid_points: usize,
    epsilon_trunc: f64,
    reports: Vec<VerificationReport>,
    summary: String,
}

fn run_verify(
    configs: &[ScenarioConfig],
    control: NegativeControl,
    out: &Path,
) -> Result<ExitCode, ConfigError> {
    let tolerances = Tolerances::default();
    let mut reports = Vec::new();
    for cfg in configs {
        cfg.require_resonant()?;
        let scenario = scenario_with_warning(cfg)?;
        let report = verify_scenario(
            &scenario,
            &cfg.taus(),
            cfg.epsilon_trunc,
            &tolerances,
            control,
        )
        .map_err(|e| ConfigError(format!("verify: {e}")))?;
        reports.push(report);
    }

    let passed = reports.iter().all(|r| r.passed());
    let mut summary = String::new();
    for report in &reports {
        summary.push_str(&report.summary());
    }
    let total: usize = reports.iter().map(|r| r.checks.len()).sum();
    let failed: usize = reports
        .iter()
        .flat_map(|r| &r.checks)
        .filter(|c| !c.passed)
        .count();
    writeln!(
        summary,
        "{} checks across {} scenarios: {}",
        total,
        reports.len(),
        if passed {
            "all passed".to_string()
        } else {
            format!("{failed} FAILED")
        }
    )
    .expect("string write");

    let output = VerifyOutput {
        passed,
        negative_control: control,
        grid_points: configs.first().map(|c| c.grid.points).unwrap_or(0),
        epsilon_trunc: configs.first().map(|c| c.epsilon_trunc).unwrap_or(0.0),
        reports,
        summary: summary.clone(),
    };
    write_file(out, &to_json(&output)?)?;
    print!("{summary}");
    println!("report: {}", out.display());

    Ok(if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn to_json<T: Serialize>(value: &T) -> Result<String, ConfigError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| ConfigError(format!("serialization: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn write_file(path: &Path, contents: &str) -> Result<(), ConfigError> {
    std::fs::write(path, contents)
        .map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display())))
}
