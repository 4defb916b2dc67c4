//! Invariant suite run by `chest validate`.

use std::time::Instant;

use super::{render_csv, run_nmse_sweep, Environment, ExperimentKind, ExperimentPlan};
use crate::channel::{assemble_channel, draw_fading, ChannelCovariance};
use crate::estimators::{denoise_estimate, ChannelEstimate, Method};
use crate::linalg::{max_abs_diff, norm_sq, vec_cols};
use crate::propagation::{direction_vector, pulse_column, steering_vector, PathSet};
use crate::rng::{complex_gaussian, stream, Purpose};
use crate::scenario::ValidatedConfig;
use crate::{CMatrix, Result, C64};

/// Outcome of one invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }
}

const SEED: u64 = 0x5eed;

fn random_matrix(rows: usize, cols: usize, symbol: u64) -> CMatrix {
    let mut rng = stream(SEED, 0, symbol, Purpose::Validation);
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(&mut rng, 1.0))
}

fn small_paths() -> PathSet {
    PathSet::new(
        vec![0.1, -0.2, 0.05],
        vec![0.4, 1.3, 2.2],
        vec![0.0, 35e-9, 120e-9],
        vec![0.8, 0.5, (1.0f64 - 0.64 - 0.25).sqrt()],
    )
    .expect("valid path set")
}

fn projector_checks(env: &Environment) -> Vec<CheckResult> {
    let p = &env.twin_projectors;
    let mut dev = 0.0f64;
    for m in [&p.spatial, &p.temporal] {
        dev = dev
            .max(max_abs_diff(&(m * m), m))
            .max(max_abs_diff(&m.adjoint(), m));
    }
    let x = random_matrix(p.n_rx(), p.n_pilots(), 1);
    let lhs = vec_cols(&(&p.spatial * &x * &p.temporal));
    let rhs = p.kron_q() * vec_cols(&x);
    let kron_err = (lhs - rhs).camax();
    let rank_product = p.rank_spatial() * p.rank_temporal();
    let q = p.kron_q();
    let tr_qqh = crate::linalg::trace(&(&q * q.adjoint())).re;
    vec![
        CheckResult::new(
            "projector idempotent and Hermitian",
            dev < 1e-10,
            format!("max deviation {dev:.2e}"),
        ),
        CheckResult::new(
            "vec/Kronecker identity",
            kron_err < 1e-10,
            format!("max error {kron_err:.2e}"),
        ),
        CheckResult::new(
            "Tr{QQᴴ} = r_S·r_T",
            (tr_qqh - rank_product).abs() < 1e-8 * rank_product.max(1.0),
            format!("Tr{{QQᴴ}} = {tr_qqh:.10}, r_S·r_T = {rank_product:.10}"),
        ),
    ]
}

/// `H[i,k] = Σ_l a_i(l)·c_l·K[k,l]` by explicit loops on a 4×8×3 instance.
fn assemble_check(cfg: &ValidatedConfig) -> CheckResult {
    let paths = small_paths();
    let geom = crate::propagation::ArrayGeometry::ula_x(4, 0.5, cfg.wavelength);
    let pulse = crate::propagation::Pulse {
        sample_interval: cfg.sample_interval,
        rolloff: cfg.scenario.pulse_rolloff,
        span: cfg.scenario.pulse_span,
    };
    let n = 8;
    let a = crate::propagation::steering_matrix(&paths, &geom);
    let k = crate::propagation::frequency_response(&paths, n, &pulse, None);
    let fading = draw_fading(
        &paths.amplitude,
        &mut stream(SEED, 0, 2, Purpose::Validation),
    );
    let h = match assemble_channel(&a, &fading, &k) {
        Ok(h) => h.h,
        Err(e) => return CheckResult::new("assemble_channel brute force", false, e.to_string()),
    };
    let mut err = 0.0f64;
    for i in 0..4 {
        for kk in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for l in 0..3 {
                let v = direction_vector(paths.elevation[l], paths.azimuth[l]);
                let ai = steering_vector(v, &geom)[i];
                let g = pulse_column(n, paths.delay[l], &pulse);
                let mut kl = C64::new(0.0, 0.0);
                for (nu, gv) in g.iter().enumerate() {
                    kl += C64::from_polar(
                        *gv,
                        -2.0 * std::f64::consts::PI * (kk * nu) as f64 / n as f64,
                    );
                }
                acc += ai * fading.c[l] * kl;
            }
            err = err.max((acc - h[(i, kk)]).norm());
        }
    }
    CheckResult::new(
        "assemble_channel brute force (4x8x3)",
        err < 1e-10,
        format!("max error {err:.2e}"),
    )
}

fn covariance_check(cfg: &ValidatedConfig) -> CheckResult {
    let paths = small_paths();
    let geom = crate::propagation::ArrayGeometry::ula_x(4, 0.5, cfg.wavelength);
    let pulse = crate::propagation::Pulse::from_config(cfg);
    let pilots = [0, 2, 4, 6];
    let a = crate::propagation::steering_matrix(&paths, &geom);
    let kp = crate::propagation::frequency_response(&paths, 8, &pulse, Some(&pilots));
    let cov = match ChannelCovariance::from_responses(&a, &kp, &paths.powers()) {
        Ok(c) => c.to_dense(),
        Err(e) => return CheckResult::new("covariance Monte Carlo", false, e.to_string()),
    };
    let draws = 100_000;
    let mut rng = stream(SEED, 0, 3, Purpose::Validation);
    let mut sample = CMatrix::zeros(cov.nrows(), cov.ncols());
    for _ in 0..draws {
        let c = draw_fading(&paths.amplitude, &mut rng);
        let h = assemble_channel(&a, &c, &kp).expect("conformable").h;
        let v = vec_cols(&h);
        sample += &v * v.adjoint();
    }
    sample /= C64::new(draws as f64, 0.0);
    let rel = (sample - &cov).norm() / cov.norm();
    CheckResult::new(
        "covariance Monte Carlo within 2%",
        rel < 0.02,
        format!("relative Frobenius error {rel:.4}"),
    )
}

fn fading_check() -> CheckResult {
    let amps = [0.9, 0.3, 0.1];
    let draws = 200_000;
    let mut rng = stream(SEED, 0, 4, Purpose::Validation);
    let mut power = [0.0; 3];
    let mut pseudo = [C64::new(0.0, 0.0); 3];
    let mut mean = [C64::new(0.0, 0.0); 3];
    for _ in 0..draws {
        let f = draw_fading(&amps, &mut rng);
        for l in 0..3 {
            power[l] += f.c[l].norm_sqr();
            pseudo[l] += f.c[l] * f.c[l];
            mean[l] += f.c[l];
        }
    }
    let mut worst = 0.0f64;
    for l in 0..3 {
        let p = amps[l] * amps[l];
        let d = draws as f64;
        worst = worst
            .max((power[l] / d - p).abs() / p)
            .max((pseudo[l] / d).norm() / p)
            .max((mean[l] / d).norm() / amps[l]);
    }
    CheckResult::new(
        "fading moments (E|c|² = α², E c² = 0, E c = 0)",
        worst < 0.02,
        format!("max relative deviation {worst:.4}"),
    )
}

fn denoiser_check(cfg: &ValidatedConfig) -> CheckResult {
    let n_p = cfg.system.n_pilots;
    let x = random_matrix(cfg.system.n_rx, n_p, 5);
    let est = ChannelEstimate::pilot(x.clone(), Method::Ls);
    let run = |e: &ChannelEstimate| denoise_estimate(e, cfg.estimator.tau_max, cfg.sample_interval);
    let (once, twice) = match run(&est).and_then(|o| run(&o).map(|t| (o, t))) {
        Ok(v) => v,
        Err(e) => return CheckResult::new("denoiser projection", false, e.to_string()),
    };
    let idem = max_abs_diff(&once.h_hat, &twice.h_hat);
    let y = random_matrix(cfg.system.n_rx, n_p, 6);
    let py = run(&ChannelEstimate::pilot(y.clone(), Method::Ls))
        .expect("same shape")
        .h_hat;
    // orthogonal projection: <P x, y> = <x, P y>
    let sym = (once.h_hat.dotc(&y) - x.dotc(&py)).norm() / (norm_sq(&x) * norm_sq(&y)).sqrt();
    let shrink = norm_sq(&once.h_hat) <= norm_sq(&x) * (1.0 + 1e-12);
    CheckResult::new(
        "denoiser is an orthogonal projection",
        idem < 1e-10 && sym < 1e-10 && shrink,
        format!(
            "idempotency {idem:.2e}, self-adjointness {sym:.2e}, energy non-increasing {shrink}"
        ),
    )
}

fn determinism_check(cfg: &ValidatedConfig) -> CheckResult {
    let mut small = cfg.config();
    small.system.n_trials = small.system.n_trials.min(20);
    let plan = match small.validate() {
        Ok(c) => ExperimentPlan::new(ExperimentKind::NmseSweep, c).with_snr(&[-10.0, 10.0]),
        Err(e) => return CheckResult::new("CSV determinism", false, e.to_string()),
    };
    let render = |threads: usize| -> Result<String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
        render_csv(&pool.install(|| run_nmse_sweep(&plan))?)
    };
    match (render(1), render(4)) {
        (Ok(a), Ok(b)) => CheckResult::new(
            "CSV determinism (1 vs 4 threads)",
            a == b,
            format!("{} bytes, identical: {}", a.len(), a == b),
        ),
        (Err(e), _) | (_, Err(e)) => CheckResult::new("CSV determinism", false, e.to_string()),
    }
}

/// Runs every invariant against `cfg`'s environment.
pub fn run_validation(cfg: &ValidatedConfig) -> Result<Vec<CheckResult>> {
    let env = Environment::build(cfg)?;
    let mut out = projector_checks(&env);
    out.push(assemble_check(cfg));
    out.push(covariance_check(cfg));
    out.push(fading_check());
    out.push(denoiser_check(cfg));
    out.push(determinism_check(cfg));
    Ok(out)
}

/// Runs the suite and prints one line per check; returns whether all passed.
pub fn run_and_report(cfg: &ValidatedConfig) -> Result<bool> {
    let start = Instant::now();
    let results = run_validation(cfg)?;
    for r in &results {
        println!(
            "{} {}: {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
    }
    let ok = results.iter().all(|r| r.passed);
    println!(
        "{}/{} checks passed in {:.1} s",
        results.iter().filter(|r| r.passed).count(),
        results.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(ok)
}
