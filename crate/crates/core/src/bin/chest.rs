use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, ValueEnum};

use chest::harness::{
    emit_csv, emit_ecdf_csv, emit_plot, run_ecdf, run_nmse_sweep, run_pilot_sweep, run_se_sweep,
    validate, ExperimentKind, ExperimentPlan, PlotMetric,
};
use chest::propagation::PathSet;
use chest::scenario::{Config, ValidatedConfig};

/// Largest array and grid accepted without `--full-scale`.
const DESK_MAX_RX: usize = 16;
const DESK_MAX_SUBCARRIERS: usize = 256;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Experiment {
    NmseSweep,
    SeSweep,
    Ecdf,
    PilotSweep,
    Validate,
}

impl From<Experiment> for ExperimentKind {
    fn from(e: Experiment) -> Self {
        match e {
            Experiment::NmseSweep => ExperimentKind::NmseSweep,
            Experiment::SeSweep => ExperimentKind::SeSweep,
            Experiment::Ecdf => ExperimentKind::Ecdf,
            Experiment::PilotSweep => ExperimentKind::PilotSweep,
            Experiment::Validate => ExperimentKind::Validate,
        }
    }
}

/// Monte Carlo channel-estimation experiments.
#[derive(Debug, Parser)]
#[command(name = "chest", version)]
struct Cli {
    experiment: Experiment,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (required except for `validate`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `system.n_trials`.
    #[arg(long)]
    trials: Option<usize>,
    /// Overrides `system.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Path set CSV used instead of the synthetic environment.
    #[arg(long)]
    paths: Option<PathBuf>,
    /// Allow N_rx > 16 or N > 256.
    #[arg(long)]
    full_scale: bool,
}

enum Failure {
    Validation,
    Runtime(anyhow::Error),
}

impl From<chest::Error> for Failure {
    fn from(e: chest::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn load(cli: &Cli) -> anyhow::Result<ValidatedConfig> {
    let mut cfg = Config::from_file(&cli.config)?;
    if let Some(t) = cli.trials {
        cfg.system.n_trials = t;
    }
    if let Some(s) = cli.seed {
        cfg.system.seed = s;
    }
    let cfg = cfg.validate()?;
    let sys = &cfg.system;
    if !cli.full_scale && (sys.n_rx > DESK_MAX_RX || sys.n_subcarriers > DESK_MAX_SUBCARRIERS) {
        bail!(
            "N_rx = {} and N = {} exceed desk scale (N_rx <= {DESK_MAX_RX}, N <= {DESK_MAX_SUBCARRIERS}); pass --full-scale",
            sys.n_rx,
            sys.n_subcarriers
        );
    }
    Ok(cfg)
}

fn write_records(
    out: &Path,
    name: &str,
    records: &[chest::metrics::MetricsRecord],
    plots: &[(PlotMetric, &str)],
) -> anyhow::Result<()> {
    let csv = out.join(format!("{name}.csv"));
    emit_csv(records, &csv)?;
    println!("wrote {} ({} rows)", csv.display(), records.len());
    for (metric, suffix) in plots {
        let svg = out.join(format!("{name}{suffix}.svg"));
        emit_plot(records, *metric, &svg)?;
        println!("wrote {}", svg.display());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    let kind = ExperimentKind::from(cli.experiment);
    if kind == ExperimentKind::Validate {
        return if validate::run_and_report(&cfg)? {
            Ok(())
        } else {
            Err(Failure::Validation)
        };
    }
    let out = cli
        .out
        .clone()
        .context("--out is required for this experiment")?;
    let mut plan = ExperimentPlan::new(kind, cfg).with_out_dir(&out);
    if let Some(p) = &cli.paths {
        plan = plan.with_paths(PathSet::read_csv(p)?);
    }
    plan.check()?;
    match kind {
        ExperimentKind::NmseSweep => {
            let recs = run_nmse_sweep(&plan)?;
            write_records(&out, "nmse_sweep", &recs, &[(PlotMetric::NmseDb, "")])?;
        }
        ExperimentKind::SeSweep => {
            let recs = run_se_sweep(&plan)?;
            write_records(
                &out,
                "se_sweep",
                &recs,
                &[(PlotMetric::SpectralEfficiency, "")],
            )?;
        }
        ExperimentKind::PilotSweep => {
            let recs = run_pilot_sweep(&plan)?;
            write_records(
                &out,
                "pilot_sweep",
                &recs,
                &[
                    (PlotMetric::SeVsPilots, "_se"),
                    (PlotMetric::NmseVsPilots, "_nmse"),
                ],
            )?;
        }
        ExperimentKind::Ecdf => {
            let tables = run_ecdf(&plan)?;
            let path = out.join("ecdf.csv");
            emit_ecdf_csv(&tables, &path)?;
            println!("wrote {} ({} tables)", path.display(), tables.len());
        }
        ExperimentKind::Validate => unreachable!("handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => {
            eprintln!("chest: validation failed");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("chest: {e:#}");
            ExitCode::from(2)
        }
    }
}
