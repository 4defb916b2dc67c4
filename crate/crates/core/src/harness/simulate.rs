use rayon::prelude::*;

use super::{Environment, ExperimentKind, ExperimentPlan};
use crate::channel::{assemble_channel, draw_fading, simulate_uplink};
use crate::estimators::{
    denoise_estimate, interpolate_full, ls_estimate, project_estimate, ChannelEstimate, Method,
};
use crate::metrics::{
    analytic_nmse, ecdf, post_combining_snr, Ecdf, MetricsRecord, NmseAccumulator,
};
use crate::priors::{bml_subspace, ProjectorPair};
use crate::rng::{stream, Purpose};
use crate::scenario::{build_pilot_pattern, PilotPattern};
use crate::{CMatrix, Error, Result};

/// Where spectral efficiency is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SeGrid {
    Off,
    /// Interpolated estimate against the full-grid channel.
    Full,
    /// Pilot-grid estimate against the channel on pilot subcarriers.
    Pilot,
}

#[derive(Debug, Clone, Copy)]
struct Wants {
    se: SeGrid,
    snr_samples: bool,
}

const NMSE_ONLY: Wants = Wants {
    se: SeGrid::Off,
    snr_samples: false,
};

#[derive(Debug, Clone, Default)]
struct PointStats {
    nmse: NmseAccumulator,
    se_sum: f64,
    trials: usize,
    snr_samples: Vec<f64>,
}

impl PointStats {
    fn merge(&mut self, other: PointStats) {
        self.nmse = self.nmse.merge(other.nmse);
        self.se_sum += other.se_sum;
        self.trials += other.trials;
        self.snr_samples.extend(other.snr_samples);
    }
}

/// Results indexed `[method][noise level]`.
struct Grid {
    n_noise: usize,
    points: Vec<PointStats>,
}

impl Grid {
    fn get(&self, method: usize, noise: usize) -> &PointStats {
        &self.points[method * self.n_noise + noise]
    }
}

/// Per-(block, noise level) batch-ML projectors.
fn bml_projectors(
    env: &Environment,
    noise: &[f64],
    trials: usize,
    n_batch: usize,
) -> Result<Vec<Vec<ProjectorPair>>> {
    let cfg = &env.config;
    let sys = &cfg.system;
    let block = cfg.estimator.bml_block_trials.max(1);
    let n_blocks = trials.div_ceil(block);
    let (rs, rt) = env.bml_ranks();
    let pattern =
        PilotPattern::constant(sys.n_subcarriers, env.pilot_indices.len(), sys.symbol_power)?;
    (0..n_blocks as u64)
        .into_par_iter()
        .map(|b| {
            let snapshots = (0..n_batch as u64)
                .map(|j| {
                    let fading = draw_fading(
                        &env.paths.amplitude,
                        &mut stream(sys.seed, b, j, Purpose::BmlFading),
                    );
                    Ok(assemble_channel(&env.steering, &fading, &env.response_pilot)?.h)
                })
                .collect::<Result<Vec<CMatrix>>>()?;
            noise
                .iter()
                .map(|&w| {
                    let batch = snapshots
                        .iter()
                        .zip(0u64..)
                        .map(|(h, j)| {
                            let rx = simulate_uplink(
                                h,
                                &pattern,
                                w,
                                &mut stream(sys.seed, b, j, Purpose::BmlNoise),
                            )?;
                            Ok(ls_estimate(&rx)?.h_hat)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    bml_subspace(&batch, rs, rt)
                })
                .collect()
        })
        .collect()
}

fn estimate(
    env: &Environment,
    method: Method,
    ls: &ChannelEstimate,
    truth: &CMatrix,
    bml: Option<&ProjectorPair>,
) -> Result<ChannelEstimate> {
    let est = &env.config.estimator;
    match method {
        Method::Ideal => Ok(ChannelEstimate::pilot(truth.clone(), Method::Ideal)),
        Method::Ls => Ok(ls.clone()),
        Method::Denoise => denoise_estimate(ls, est.tau_max, env.config.sample_interval),
        Method::Emdt => project_estimate(ls, &env.twin_projectors, Method::Emdt),
        Method::Bml => {
            let proj =
                bml.ok_or_else(|| Error::InvalidArgument("batch-ML projectors missing".into()))?;
            project_estimate(ls, proj, Method::Bml)
        }
    }
}

/// One trial: fresh pilots, fading and noise; the same draws are reused at
/// every noise level (noise is scaled, not redrawn).
fn run_trial(
    env: &Environment,
    methods: &[Method],
    noise: &[f64],
    trial: u64,
    bml: Option<&[ProjectorPair]>,
    wants: Wants,
) -> Result<Vec<PointStats>> {
    let sys = &env.config.system;
    let n = sys.n_subcarriers;
    let n_p = env.pilot_indices.len();
    let pilots = build_pilot_pattern(
        n,
        n_p,
        sys.symbol_power,
        &mut stream(sys.seed, trial, 0, Purpose::Pilots),
    )?;
    let fading = draw_fading(
        &env.paths.amplitude,
        &mut stream(sys.seed, trial, 0, Purpose::Fading),
    );
    let hp = assemble_channel(&env.steering, &fading, &env.response_pilot)?.h;
    let h_full = match wants.se {
        SeGrid::Full => Some(assemble_channel(&env.steering, &fading, &env.response_full)?.h),
        _ => None,
    };
    let mut out = vec![PointStats::default(); methods.len() * noise.len()];
    for (s, &w) in noise.iter().enumerate() {
        let rx = simulate_uplink(
            &hp,
            &pilots,
            w,
            &mut stream(sys.seed, trial, 0, Purpose::Noise),
        )?;
        let ls = ls_estimate(&rx)?;
        for (mi, &m) in methods.iter().enumerate() {
            let est = estimate(env, m, &ls, &hp, bml.map(|b| &b[s]))?;
            let st = &mut out[mi * noise.len() + s];
            st.nmse.add(&est.h_hat, &hp);
            st.trials = 1;
            let snr = match (wants.se, &h_full) {
                (SeGrid::Off, _) => continue,
                (SeGrid::Full, Some(full)) => {
                    let hat = if m == Method::Ideal {
                        full.clone()
                    } else {
                        interpolate_full(&est, &pilots, n)?.h_hat
                    };
                    post_combining_snr(&hat, full, sys.symbol_power, w)?
                }
                _ => post_combining_snr(&est.h_hat, &hp, sys.symbol_power, w)?,
            };
            st.se_sum += snr.iter().map(|x| (1.0 + x).log2()).sum::<f64>() / snr.len() as f64;
            if wants.snr_samples {
                st.snr_samples = snr;
            }
        }
    }
    Ok(out)
}

/// Per-trial statistics, in trial order.
fn trial_results(
    env: &Environment,
    methods: &[Method],
    noise: &[f64],
    trials: usize,
    n_batch: usize,
    wants: Wants,
) -> Result<Vec<Vec<PointStats>>> {
    let bml = if methods.contains(&Method::Bml) {
        Some(bml_projectors(env, noise, trials, n_batch)?)
    } else {
        None
    };
    let block = env.config.estimator.bml_block_trials.max(1);
    (0..trials)
        .into_par_iter()
        .map(|t| {
            run_trial(
                env,
                methods,
                noise,
                t as u64,
                bml.as_ref().map(|b| b[t / block].as_slice()),
                wants,
            )
        })
        .collect()
}

/// Sequential reduction in trial order keeps sums bit-identical for any
/// thread count.
fn monte_carlo(
    env: &Environment,
    methods: &[Method],
    noise: &[f64],
    trials: usize,
    wants: Wants,
) -> Result<Grid> {
    let per_trial = trial_results(
        env,
        methods,
        noise,
        trials,
        env.config.estimator.n_batch,
        wants,
    )?;
    let mut points = vec![PointStats::default(); methods.len() * noise.len()];
    for trial in per_trial {
        for (acc, st) in points.iter_mut().zip(trial) {
            acc.merge(st);
        }
    }
    Ok(Grid {
        n_noise: noise.len(),
        points,
    })
}

fn noise_levels(env: &Environment, snr_db: &[f64]) -> Result<Vec<f64>> {
    snr_db.iter().map(|&s| env.noise_variance(s)).collect()
}

fn finite(value: f64, metric: &'static str, method: Method, snr_db: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite {
            metric,
            method: method.to_string(),
            snr_db,
        })
    }
}

fn expect_kind(plan: &ExperimentPlan, kind: ExperimentKind) -> Result<()> {
    if plan.kind != kind {
        return Err(Error::InvalidArgument(format!(
            "plan is for {}, not {kind}",
            plan.kind
        )));
    }
    plan.check()
}

/// NMSE versus SNR on the pilot grid; EM-DT records carry the analytic
/// breakdown.
pub fn run_nmse_sweep(plan: &ExperimentPlan) -> Result<Vec<MetricsRecord>> {
    expect_kind(plan, ExperimentKind::NmseSweep)?;
    let env = plan.environment()?;
    let noise = noise_levels(&env, &plan.snr_db)?;
    let grid = monte_carlo(&env, &plan.methods, &noise, plan.trials(), NMSE_ONLY)?;
    let sys = &env.config.system;
    let mut records = Vec::new();
    for (mi, &m) in plan.methods.iter().enumerate() {
        for (s, (&snr, &w)) in plan.snr_db.iter().zip(&noise).enumerate() {
            let st = grid.get(mi, s);
            let nmse = finite(st.nmse.nmse()?, "nmse_emp", m, snr)?;
            let analytic = if m == Method::Emdt {
                let b = analytic_nmse(
                    &env.twin_projectors,
                    &env.covariance,
                    snr,
                    sys.symbol_power,
                    w,
                )?;
                finite(b.total, "nmse_analytic", m, snr)?;
                Some(b)
            } else {
                None
            };
            records.push(MetricsRecord {
                method: m,
                snr_db: snr,
                n_pilots: env.pilot_indices.len(),
                nmse_empirical: Some(nmse),
                nmse_analytic: analytic,
                spectral_efficiency: None,
                trials: st.trials,
            });
        }
    }
    Ok(records)
}

/// Empirical NMSE with the noise switched off, over the same trials as a
/// sweep with the same configuration.
pub fn measured_floor(env: &Environment, method: Method, trials: usize) -> Result<f64> {
    let grid = monte_carlo(env, &[method], &[0.0], trials, NMSE_ONLY)?;
    grid.get(0, 0).nmse.nmse()
}

/// Genie-aided spectral efficiency on the interpolated full grid.
pub fn run_se_sweep(plan: &ExperimentPlan) -> Result<Vec<MetricsRecord>> {
    expect_kind(plan, ExperimentKind::SeSweep)?;
    let env = plan.environment()?;
    let noise = noise_levels(&env, &plan.snr_db)?;
    let wants = Wants {
        se: SeGrid::Full,
        snr_samples: false,
    };
    let grid = monte_carlo(&env, &plan.methods, &noise, plan.trials(), wants)?;
    let mut records = Vec::new();
    for (mi, &m) in plan.methods.iter().enumerate() {
        for (s, &snr) in plan.snr_db.iter().enumerate() {
            let st = grid.get(mi, s);
            records.push(MetricsRecord {
                method: m,
                snr_db: snr,
                n_pilots: env.pilot_indices.len(),
                nmse_empirical: Some(finite(st.nmse.nmse()?, "nmse_emp", m, snr)?),
                nmse_analytic: None,
                spectral_efficiency: Some(finite(st.se_sum / st.trials as f64, "se", m, snr)?),
                trials: st.trials,
            });
        }
    }
    Ok(records)
}

/// ECDF of the per-subcarrier post-combining SNR (linear scale).
#[derive(Debug, Clone)]
pub struct EcdfTable {
    pub method: Method,
    pub snr_db: f64,
    pub ecdf: Ecdf,
}

pub fn run_ecdf(plan: &ExperimentPlan) -> Result<Vec<EcdfTable>> {
    expect_kind(plan, ExperimentKind::Ecdf)?;
    let env = plan.environment()?;
    let noise = noise_levels(&env, &plan.snr_db)?;
    let wants = Wants {
        se: SeGrid::Full,
        snr_samples: true,
    };
    let grid = monte_carlo(&env, &plan.methods, &noise, plan.trials(), wants)?;
    let mut tables = Vec::new();
    for (mi, &m) in plan.methods.iter().enumerate() {
        for (s, &snr) in plan.snr_db.iter().enumerate() {
            let samples = &grid.get(mi, s).snr_samples;
            if let Some(&bad) = samples.iter().find(|x| !x.is_finite()) {
                finite(bad, "post_combining_snr", m, snr)?;
            }
            tables.push(EcdfTable {
                method: m,
                snr_db: snr,
                ecdf: ecdf(samples)?,
            });
        }
    }
    Ok(tables)
}

/// NMSE and overhead-adjusted SE against the pilot count.
///
/// SE is evaluated on the pilot subcarriers with the pilot-grid estimate and
/// scaled by `1 − N_p/N`.
pub fn run_pilot_sweep(plan: &ExperimentPlan) -> Result<Vec<MetricsRecord>> {
    expect_kind(plan, ExperimentKind::PilotSweep)?;
    let base = plan.environment()?;
    let n = plan.config.system.n_subcarriers;
    let wants = Wants {
        se: SeGrid::Pilot,
        snr_samples: false,
    };
    let mut records = Vec::new();
    for &n_p in &plan.pilot_counts {
        let env = base.with_pilots(n_p)?;
        let noise = noise_levels(&env, &plan.snr_db)?;
        let grid = monte_carlo(&env, &plan.methods, &noise, plan.trials(), wants)?;
        let overhead = 1.0 - n_p as f64 / n as f64;
        for (mi, &m) in plan.methods.iter().enumerate() {
            for (s, &snr) in plan.snr_db.iter().enumerate() {
                let st = grid.get(mi, s);
                records.push(MetricsRecord {
                    method: m,
                    snr_db: snr,
                    n_pilots: n_p,
                    nmse_empirical: Some(finite(st.nmse.nmse()?, "nmse_emp", m, snr)?),
                    nmse_analytic: None,
                    spectral_efficiency: Some(finite(
                        overhead * st.se_sum / st.trials as f64,
                        "se",
                        m,
                        snr,
                    )?),
                    trials: st.trials,
                });
            }
        }
    }
    Ok(records)
}

/// Empirical NMSE with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmseEstimate {
    pub nmse: f64,
    /// Delta-method standard error of the ratio estimator.
    pub std_error: f64,
    /// Independent units behind the error: trials, or trial blocks for
    /// batch-ML (trials in a block share projectors).
    pub units: usize,
}

/// Batch-ML NMSE for one snapshot count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchPoint {
    pub n_batch: usize,
    pub estimate: NmseEstimate,
}

fn ratio_estimate(units: &[NmseAccumulator]) -> Result<NmseEstimate> {
    let total = units
        .iter()
        .fold(NmseAccumulator::default(), |a, &b| a.merge(b));
    let ratio = total.nmse()?;
    let k = units.len() as f64;
    let var = if units.len() > 1 {
        units
            .iter()
            .map(|u| (u.error - ratio * u.energy).powi(2))
            .sum::<f64>()
            / (k - 1.0)
    } else {
        f64::INFINITY
    };
    Ok(NmseEstimate {
        nmse: ratio,
        std_error: (var / k).sqrt() / (total.energy / k),
        units: units.len(),
    })
}

/// NMSE of one method at one SNR, with a standard error. `n_batch` only
/// matters for batch-ML.
pub fn nmse_with_error(
    env: &Environment,
    method: Method,
    snr_db: f64,
    trials: usize,
    n_batch: usize,
) -> Result<NmseEstimate> {
    if n_batch == 0 {
        return Err(Error::config("estimator.n_batch", "must be >= 1"));
    }
    let noise = [env.noise_variance(snr_db)?];
    let per_trial = trial_results(env, &[method], &noise, trials, n_batch, NMSE_ONLY)?;
    let block = if method == Method::Bml {
        env.config.estimator.bml_block_trials.max(1)
    } else {
        1
    };
    let mut units: Vec<NmseAccumulator> = Vec::new();
    for (t, st) in per_trial.into_iter().enumerate() {
        if t % block == 0 {
            units.push(NmseAccumulator::default());
        }
        let last = units.last_mut().expect("unit pushed above");
        *last = last.merge(st[0].nmse);
    }
    let est = ratio_estimate(&units)?;
    finite(est.nmse, "nmse_emp", method, snr_db)?;
    Ok(est)
}

/// Batch-ML NMSE against `N_TB` at one SNR.
pub fn run_bml_batch_sweep(
    env: &Environment,
    trials: usize,
    snr_db: f64,
    batch_sizes: &[usize],
) -> Result<Vec<BatchPoint>> {
    batch_sizes
        .iter()
        .map(|&n_batch| {
            Ok(BatchPoint {
                n_batch,
                estimate: nmse_with_error(env, Method::Bml, snr_db, trials, n_batch)?,
            })
        })
        .collect()
}
