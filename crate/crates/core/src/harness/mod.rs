//! Experiment orchestration: Monte Carlo sweeps, CSV/SVG emission and the
//! invariant suite behind `chest validate`.

mod output;
mod simulate;
pub mod validate;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::channel::{average_channel_gain, channel_covariance, ChannelCovariance};
use crate::estimators::Method;
use crate::priors::{dt_subspace, make_projectors, ProjectorPair, SubspacePrior};
use crate::propagation::{
    dt_truncate, frequency_response, generate_paths, steering_matrix, ArrayGeometry, PathSet, Pulse,
};
use crate::rng::{stream, Purpose};
use crate::scenario::{noise_variance_for_snr, pilot_indices, ValidatedConfig};
use crate::{CMatrix, Error, Result};

pub use output::{
    emit_csv, emit_ecdf_csv, emit_plot, format_float, render_csv, PlotMetric, CSV_HEADER,
};
pub use simulate::{
    measured_floor, nmse_with_error, run_bml_batch_sweep, run_ecdf, run_nmse_sweep,
    run_pilot_sweep, run_se_sweep, BatchPoint, EcdfTable, NmseEstimate,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    NmseSweep,
    SeSweep,
    Ecdf,
    PilotSweep,
    Validate,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::NmseSweep => "nmse-sweep",
            ExperimentKind::SeSweep => "se-sweep",
            ExperimentKind::Ecdf => "ecdf",
            ExperimentKind::PilotSweep => "pilot-sweep",
            ExperimentKind::Validate => "validate",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            ExperimentKind::NmseSweep,
            ExperimentKind::SeSweep,
            ExperimentKind::Ecdf,
            ExperimentKind::PilotSweep,
            ExperimentKind::Validate,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment '{s}'")))
    }
}

/// SNR points of the ECDF experiment.
pub const ECDF_SNR_DB: [f64; 2] = [-10.0, 5.0];
/// SNR points of the pilot sweep.
pub const PILOT_SWEEP_SNR_DB: [f64; 3] = [-15.0, 0.0, 15.0];

/// What to run, on which configuration, and where to write it.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub kind: ExperimentKind,
    pub config: ValidatedConfig,
    pub methods: Vec<Method>,
    pub snr_db: Vec<f64>,
    /// Pilot counts for the pilot sweep; ignored elsewhere.
    pub pilot_counts: Vec<usize>,
    pub out_dir: Option<PathBuf>,
    /// External environment; a synthetic one is drawn from the seed if absent.
    pub paths: Option<PathSet>,
}

impl ExperimentPlan {
    /// Plan with the default methods and SNR points of `kind`.
    pub fn new(kind: ExperimentKind, config: ValidatedConfig) -> Self {
        let (methods, snr_db) = match kind {
            ExperimentKind::NmseSweep => {
                (Method::ESTIMATORS.to_vec(), config.system.snr_grid.clone())
            }
            ExperimentKind::SeSweep => (Method::ALL.to_vec(), config.system.snr_grid.clone()),
            ExperimentKind::Ecdf => (Method::ALL.to_vec(), ECDF_SNR_DB.to_vec()),
            ExperimentKind::PilotSweep => {
                (vec![Method::Ls, Method::Emdt], PILOT_SWEEP_SNR_DB.to_vec())
            }
            ExperimentKind::Validate => (Vec::new(), Vec::new()),
        };
        let pilot_counts = divisors(config.system.n_subcarriers);
        Self {
            kind,
            config,
            methods,
            snr_db,
            pilot_counts,
            out_dir: None,
            paths: None,
        }
    }

    pub fn with_methods(mut self, methods: &[Method]) -> Self {
        self.methods = methods.to_vec();
        self
    }

    pub fn with_snr(mut self, snr_db: &[f64]) -> Self {
        self.snr_db = snr_db.to_vec();
        self
    }

    pub fn with_pilot_counts(mut self, counts: &[usize]) -> Self {
        self.pilot_counts = counts.to_vec();
        self
    }

    pub fn with_out_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.out_dir = Some(dir.into());
        self
    }

    pub fn with_paths(mut self, paths: PathSet) -> Self {
        self.paths = Some(paths);
        self
    }

    pub fn trials(&self) -> usize {
        self.config.system.n_trials
    }

    pub fn environment(&self) -> Result<Environment> {
        match &self.paths {
            Some(p) => Environment::from_paths(&self.config, p.clone()),
            None => Environment::build(&self.config),
        }
    }

    /// Kind-specific checks on top of the already-validated configuration.
    pub fn check(&self) -> Result<()> {
        if self.kind == ExperimentKind::Validate {
            return Ok(());
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{}: empty method list",
                self.kind
            )));
        }
        if self.snr_db.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{}: no SNR points",
                self.kind
            )));
        }
        if let Some(bad) = self.snr_db.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "{}: non-finite SNR point {bad}",
                self.kind
            )));
        }
        if self.kind == ExperimentKind::PilotSweep {
            if self.pilot_counts.is_empty() {
                return Err(Error::InvalidArgument(
                    "pilot-sweep: no pilot counts".into(),
                ));
            }
            let n = self.config.system.n_subcarriers;
            if let Some(&bad) = self
                .pilot_counts
                .iter()
                .find(|&&p| p == 0 || !n.is_multiple_of(p))
            {
                return Err(Error::config(
                    "system.n_pilots",
                    format!("pilot-sweep count {bad} does not divide N = {n}"),
                ));
            }
        }
        Ok(())
    }
}

/// Ascending divisors of `n`.
pub fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|&d| n.is_multiple_of(d)).collect()
}

/// Everything that stays fixed across trials for one configuration.
#[derive(Debug, Clone)]
pub struct Environment {
    pub config: ValidatedConfig,
    pub paths: PathSet,
    pub twin_paths: PathSet,
    pub geometry: ArrayGeometry,
    pub pulse: Pulse,
    pub pilot_indices: Vec<usize>,
    /// `A`, `N_rx × L`.
    pub steering: CMatrix,
    /// `K`, `N × L`.
    pub response_full: CMatrix,
    /// `K^p`, `N_p × L`.
    pub response_pilot: CMatrix,
    pub covariance: ChannelCovariance,
    /// `β = Tr{R^p}/(N_rx·N_p)`.
    pub beta: f64,
    pub twin_prior: SubspacePrior,
    pub twin_projectors: ProjectorPair,
}

impl Environment {
    /// Synthetic environment drawn from the configuration's seed.
    pub fn build(config: &ValidatedConfig) -> Result<Self> {
        let mut rng = stream(config.system.seed, 0, 0, Purpose::Environment);
        let paths = generate_paths(&config.scenario, &mut rng);
        Self::from_paths(config, paths)
    }

    /// Environment from an externally supplied path set.
    pub fn from_paths(config: &ValidatedConfig, paths: PathSet) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidArgument("environment has no paths".into()));
        }
        let n = config.system.n_subcarriers;
        let twin_paths = dt_truncate(&paths, config.scenario.n_dt_paths.min(paths.len()))?;
        let geometry = ArrayGeometry::from_config(config);
        let pulse = Pulse::from_config(config);
        let pilot_indices = pilot_indices(n, config.system.n_pilots)?;
        let steering = steering_matrix(&paths, &geometry);
        let response_full = frequency_response(&paths, n, &pulse, None);
        let response_pilot = CMatrix::from_fn(pilot_indices.len(), paths.len(), |r, l| {
            response_full[(pilot_indices[r], l)]
        });
        let covariance = channel_covariance(&paths, &geometry, &pulse, n, &pilot_indices)?;
        let beta = average_channel_gain(&covariance);
        let twin_prior = dt_subspace(
            &twin_paths,
            &geometry,
            &pulse,
            n,
            &pilot_indices,
            config.estimator.svd_rank_tolerance,
        )?;
        let twin_projectors = make_projectors(&twin_prior)?;
        Ok(Self {
            config: config.clone(),
            paths,
            twin_paths,
            geometry,
            pulse,
            pilot_indices,
            steering,
            response_full,
            response_pilot,
            covariance,
            beta,
            twin_prior,
            twin_projectors,
        })
    }

    /// Same paths with a different pilot count.
    pub fn with_pilots(&self, n_pilots: usize) -> Result<Self> {
        Self::from_paths(&self.config.with_pilots(n_pilots)?, self.paths.clone())
    }

    pub fn noise_variance(&self, snr_db: f64) -> Result<f64> {
        noise_variance_for_snr(snr_db, self.config.system.symbol_power, self.beta)
    }

    /// Batch-ML ranks after resolving `"auto"`.
    pub fn bml_ranks(&self) -> (usize, usize) {
        let est = &self.config.estimator;
        let l_dt = self.twin_paths.len();
        (
            est.bml_rank_spatial.resolve(l_dt, self.config.system.n_rx),
            est.bml_rank_temporal
                .resolve(l_dt, self.pilot_indices.len()),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Config;

    fn desk() -> ValidatedConfig {
        let mut cfg = Config::desk();
        cfg.system.n_trials = 20;
        cfg.validate().unwrap()
    }

    #[test]
    fn kind_round_trip() {
        for k in ["nmse-sweep", "se-sweep", "ecdf", "pilot-sweep", "validate"] {
            assert_eq!(k.parse::<ExperimentKind>().unwrap().as_str(), k);
        }
        assert!("sweep".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn plan_checks() {
        let cfg = desk();
        assert!(ExperimentPlan::new(ExperimentKind::NmseSweep, cfg.clone())
            .check()
            .is_ok());
        assert!(ExperimentPlan::new(ExperimentKind::Ecdf, cfg.clone())
            .with_snr(&[])
            .check()
            .is_err());
        assert!(ExperimentPlan::new(ExperimentKind::SeSweep, cfg.clone())
            .with_methods(&[])
            .check()
            .is_err());
        let bad =
            ExperimentPlan::new(ExperimentKind::PilotSweep, cfg.clone()).with_pilot_counts(&[3]);
        assert!(matches!(bad.check(), Err(Error::InvalidConfig { .. })));
        let p = ExperimentPlan::new(ExperimentKind::PilotSweep, cfg);
        assert_eq!(p.pilot_counts, vec![1, 2, 4, 8, 16, 32, 64]);
    }

    #[test]
    fn environment_is_seeded() {
        let cfg = desk();
        let a = Environment::build(&cfg).unwrap();
        let b = Environment::build(&cfg).unwrap();
        assert_eq!(a.paths, b.paths);
        assert_eq!(a.twin_projectors, b.twin_projectors);
        assert_eq!(a.bml_ranks(), (5, 5));
        assert!((a.twin_projectors.rank_spatial() - 5.0).abs() < 1e-9);
        let pilot_direct = frequency_response(&a.paths, 64, &a.pulse, Some(&a.pilot_indices));
        assert!(crate::linalg::max_abs_diff(&pilot_direct, &a.response_pilot) < 1e-12);
        let c = a.with_pilots(8).unwrap();
        assert_eq!(c.paths, a.paths);
        assert_eq!(c.pilot_indices.len(), 8);
    }
}
