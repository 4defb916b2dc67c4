//! Configuration, validation, pilot patterns and SNR mapping.
//!
//! A configuration file is a JSON object with three optional sections,
//! `system`, `scenario` and `estimator`. Missing fields take the defaults
//! below (the 28 GHz, 64-subcarrier, 64-antenna setup); unknown fields are
//! rejected.

use std::f64::consts::FRAC_PI_4;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64, SPEED_OF_LIGHT};

/// Physical-layer parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Subcarriers per OFDM symbol.
    pub n_subcarriers: usize,
    /// Cyclic prefix length in samples; `None` means `N/8`.
    pub cp_length: Option<usize>,
    pub n_rx: usize,
    /// Evenly spaced pilot subcarriers per symbol.
    pub n_pilots: usize,
    /// Hz.
    pub subcarrier_spacing: f64,
    /// Hz.
    pub carrier_freq: f64,
    /// Transmit symbol power `σ²_x`.
    pub symbol_power: f64,
    /// SNR points in dB.
    pub snr_grid: Vec<f64>,
    pub n_trials: usize,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n_subcarriers: 64,
            cp_length: None,
            n_rx: 64,
            n_pilots: 32,
            subcarrier_spacing: 480e3,
            carrier_freq: 28e9,
            symbol_power: 1.0,
            snr_grid: vec![
                -20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0,
            ],
            n_trials: 500,
            seed: 1,
        }
    }
}

/// Synthetic propagation environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Total paths `L` in the true environment.
    pub n_paths: usize,
    /// Paths known to the digital twin, `L̄ ≤ L`.
    pub n_dt_paths: usize,
    /// Largest path delay, seconds. Must stay inside the cyclic prefix.
    pub delay_spread: f64,
    /// Exponential power-delay-profile rate: `α²_l ∝ exp(-pdp_decay·τ_l/delay_spread)`.
    pub pdp_decay: f64,
    /// Azimuth interval `[lo, hi]`, radians.
    pub azimuth_range: [f64; 2],
    /// Elevation interval `[lo, hi]`, radians.
    pub elevation_range: [f64; 2],
    /// Element spacing as a fraction of the wavelength.
    pub array_spacing: f64,
    /// Raised-cosine rolloff in `[0, 1)`.
    pub pulse_rolloff: f64,
    /// Pulse samples kept on each side of the `[0, N)` window.
    pub pulse_span: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_paths: 25,
            n_dt_paths: 5,
            delay_spread: 200e-9,
            pdp_decay: 25.0,
            azimuth_range: [0.0, std::f64::consts::PI],
            elevation_range: [-std::f64::consts::PI / 12.0, std::f64::consts::PI / 12.0],
            array_spacing: 0.5,
            pulse_rolloff: 0.25,
            pulse_span: 16,
        }
    }
}

/// Rank choice for the batch-ML subspaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RankSpec {
    Fixed(usize),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl RankSpec {
    pub const AUTO: RankSpec = RankSpec::Auto(AutoTag::Auto);

    /// Concrete rank: `auto` follows the twin's path count, clipped to `dim`.
    pub fn resolve(self, n_dt_paths: usize, dim: usize) -> usize {
        match self {
            RankSpec::Fixed(r) => r,
            RankSpec::Auto(_) => n_dt_paths.min(dim),
        }
    }
}

/// Estimator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Denoiser delay cutoff, seconds.
    pub tau_max: f64,
    /// LS snapshots per batch-ML covariance estimate (`N_TB`).
    pub n_batch: usize,
    pub bml_rank_spatial: RankSpec,
    pub bml_rank_temporal: RankSpec,
    /// Trials served by one batch-ML subspace estimate.
    pub bml_block_trials: usize,
    /// Relative singular-value threshold for the twin prior rank.
    pub svd_rank_tolerance: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            tau_max: 0.5e-6,
            n_batch: 64,
            bml_rank_spatial: RankSpec::AUTO,
            bml_rank_temporal: RankSpec::AUTO,
            bml_block_trials: 10,
            svd_rank_tolerance: 1e-8,
        }
    }
}

/// Raw configuration file contents.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub system: SystemConfig,
    pub scenario: ScenarioConfig,
    pub estimator: EstimatorConfig,
}

impl Config {
    /// Reduced array size used for quick runs: 16 antennas, 500 trials.
    pub fn desk() -> Self {
        let mut cfg = Config::default();
        cfg.system.n_rx = 16;
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(self) -> Result<ValidatedConfig> {
        validate_config(self.system, self.scenario, self.estimator)
    }
}

/// A configuration that passed validation, with derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    pub system: SystemConfig,
    pub scenario: ScenarioConfig,
    pub estimator: EstimatorConfig,
    /// `N_CP` after defaulting.
    pub cp_length: usize,
    /// `B = N·Δf`, Hz.
    pub bandwidth: f64,
    /// `T_s = 1/B`, seconds.
    pub sample_interval: f64,
    /// `T = (N + N_CP)·T_s`, seconds.
    pub symbol_duration: f64,
    /// `λ = c/f_c`, meters.
    pub wavelength: f64,
}

impl ValidatedConfig {
    pub fn config(&self) -> Config {
        Config {
            system: self.system.clone(),
            scenario: self.scenario.clone(),
            estimator: self.estimator.clone(),
        }
    }

    /// Same configuration with a different pilot count, re-validated.
    pub fn with_pilots(&self, n_pilots: usize) -> Result<ValidatedConfig> {
        let mut cfg = self.config();
        cfg.system.n_pilots = n_pilots;
        cfg.validate()
    }

    pub fn pilot_spacing(&self) -> usize {
        self.system.n_subcarriers / self.system.n_pilots
    }
}

fn positive_finite(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(
            field,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

fn interval(field: &'static str, r: [f64; 2]) -> Result<()> {
    if r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] {
        Ok(())
    } else {
        Err(Error::config(
            field,
            format!("need finite lo <= hi, got {r:?}"),
        ))
    }
}

/// Checks every invariant and fills in derived quantities.
pub fn validate_config(
    sys: SystemConfig,
    scen: ScenarioConfig,
    est: EstimatorConfig,
) -> Result<ValidatedConfig> {
    let n = sys.n_subcarriers;
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::config(
            "system.n_subcarriers",
            format!("must be a power of two >= 2, got {n}"),
        ));
    }
    if sys.n_pilots == 0 || sys.n_pilots > n {
        return Err(Error::config(
            "system.n_pilots",
            format!("must lie in 1..={n}, got {}", sys.n_pilots),
        ));
    }
    if !n.is_multiple_of(sys.n_pilots) {
        return Err(Error::config(
            "system.n_pilots",
            format!("N = {n} is not divisible by N_p = {}", sys.n_pilots),
        ));
    }
    if sys.n_rx == 0 {
        return Err(Error::config("system.n_rx", "must be >= 1"));
    }
    positive_finite("system.symbol_power", sys.symbol_power)?;
    positive_finite("system.subcarrier_spacing", sys.subcarrier_spacing)?;
    positive_finite("system.carrier_freq", sys.carrier_freq)?;
    if sys.n_trials == 0 {
        return Err(Error::config("system.n_trials", "must be >= 1"));
    }
    if let Some(bad) = sys.snr_grid.iter().find(|s| !s.is_finite()) {
        return Err(Error::config(
            "system.snr_grid",
            format!("non-finite entry {bad}"),
        ));
    }
    let cp_length = sys.cp_length.unwrap_or(n / 8);

    if scen.n_paths == 0 {
        return Err(Error::config("scenario.n_paths", "must be >= 1"));
    }
    if scen.n_dt_paths == 0 || scen.n_dt_paths > scen.n_paths {
        return Err(Error::config(
            "scenario.n_dt_paths",
            format!(
                "need 1 <= L̄ <= L = {}, got {}",
                scen.n_paths, scen.n_dt_paths
            ),
        ));
    }
    let bandwidth = n as f64 * sys.subcarrier_spacing;
    let sample_interval = 1.0 / bandwidth;
    let cp_duration = cp_length as f64 * sample_interval;
    if !(scen.delay_spread >= 0.0 && scen.delay_spread < cp_duration) {
        return Err(Error::config(
            "scenario.delay_spread",
            format!(
                "must satisfy 0 <= delay_spread < N_CP·T_s = {cp_duration:.6e} s, got {:.6e} s",
                scen.delay_spread
            ),
        ));
    }
    if !(scen.pdp_decay.is_finite() && scen.pdp_decay >= 0.0) {
        return Err(Error::config(
            "scenario.pdp_decay",
            "must be finite and >= 0",
        ));
    }
    interval("scenario.azimuth_range", scen.azimuth_range)?;
    interval("scenario.elevation_range", scen.elevation_range)?;
    positive_finite("scenario.array_spacing", scen.array_spacing)?;
    if !(0.0..1.0).contains(&scen.pulse_rolloff) {
        return Err(Error::config(
            "scenario.pulse_rolloff",
            format!("must lie in [0, 1), got {}", scen.pulse_rolloff),
        ));
    }

    positive_finite("estimator.tau_max", est.tau_max)?;
    if est.n_batch == 0 {
        return Err(Error::config("estimator.n_batch", "N_TB must be >= 1"));
    }
    if est.bml_block_trials == 0 {
        return Err(Error::config("estimator.bml_block_trials", "must be >= 1"));
    }
    if let RankSpec::Fixed(r) = est.bml_rank_spatial {
        if r == 0 || r > sys.n_rx {
            return Err(Error::config(
                "estimator.bml_rank_spatial",
                format!("must lie in 1..={}, got {r}", sys.n_rx),
            ));
        }
    }
    if let RankSpec::Fixed(r) = est.bml_rank_temporal {
        if r == 0 || r > sys.n_pilots {
            return Err(Error::config(
                "estimator.bml_rank_temporal",
                format!("must lie in 1..={}, got {r}", sys.n_pilots),
            ));
        }
    }
    if !(est.svd_rank_tolerance > 0.0 && est.svd_rank_tolerance < 1.0) {
        return Err(Error::config(
            "estimator.svd_rank_tolerance",
            "must lie in (0, 1)",
        ));
    }

    Ok(ValidatedConfig {
        symbol_duration: (n + cp_length) as f64 * sample_interval,
        wavelength: SPEED_OF_LIGHT / sys.carrier_freq,
        cp_length,
        bandwidth,
        sample_interval,
        system: sys,
        scenario: scen,
        estimator: est,
    })
}

/// Pilot subcarriers and the symbols transmitted on them.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotPattern {
    pub indices: Vec<usize>,
    pub symbols: Vec<C64>,
}

impl PilotPattern {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// All pilots equal to `sqrt(σ²_x)`.
    pub fn constant(n: usize, n_pilots: usize, symbol_power: f64) -> Result<Self> {
        let indices = pilot_indices(n, n_pilots)?;
        let symbols = vec![C64::new(symbol_power.sqrt(), 0.0); n_pilots];
        Ok(Self { indices, symbols })
    }
}

/// `{0, N/N_p, 2N/N_p, …}`.
pub fn pilot_indices(n: usize, n_pilots: usize) -> Result<Vec<usize>> {
    if n_pilots == 0 || n_pilots > n || !n.is_multiple_of(n_pilots) {
        return Err(Error::InvalidArgument(format!(
            "N_p = {n_pilots} must divide N = {n}"
        )));
    }
    let step = n / n_pilots;
    Ok((0..n_pilots).map(|i| i * step).collect())
}

/// Evenly spaced pilots carrying random 4-phase symbols of power `σ²_x`.
pub fn build_pilot_pattern<R: Rng + ?Sized>(
    n: usize,
    n_pilots: usize,
    symbol_power: f64,
    rng: &mut R,
) -> Result<PilotPattern> {
    let indices = pilot_indices(n, n_pilots)?;
    let amp = symbol_power.sqrt();
    let symbols = (0..n_pilots)
        .map(|_| {
            let q = rng.random_range(0..4u32) as f64;
            C64::from_polar(amp, FRAC_PI_4 + q * std::f64::consts::FRAC_PI_2)
        })
        .collect();
    Ok(PilotPattern { indices, symbols })
}

/// `σ²_w = σ²_x·β / 10^(snr_db/10)`.
pub fn noise_variance_for_snr(snr_db: f64, symbol_power: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "average channel gain must be positive, got {beta}"
        )));
    }
    Ok(symbol_power * beta / db_to_linear(snr_db))
}

/// Inverse of [`noise_variance_for_snr`]: `SNR = σ²_x·β/σ²_w` in dB.
pub fn snr_db(symbol_power: f64, beta: f64, noise_variance: f64) -> f64 {
    linear_to_db(symbol_power * beta / noise_variance)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
