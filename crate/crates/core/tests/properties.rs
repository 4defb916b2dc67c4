//! Monte Carlo properties of the sweeps on the desk configuration.

use chest::estimators::Method;
use chest::harness::{
    nmse_with_error, run_nmse_sweep, run_se_sweep, Environment, ExperimentKind, ExperimentPlan,
};
use chest::scenario::{Config, ValidatedConfig};

fn desk(trials: usize) -> ValidatedConfig {
    let mut cfg = Config::desk();
    cfg.system.n_trials = trials;
    cfg.validate().unwrap()
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[test]
fn emdt_empirical_matches_analytic() {
    let plan = ExperimentPlan::new(ExperimentKind::NmseSweep, desk(500))
        .with_methods(&[Method::Emdt])
        .with_snr(&[-20.0, -10.0, 0.0, 10.0, 20.0]);
    for r in run_nmse_sweep(&plan).unwrap() {
        let dev = db(r.nmse_empirical.unwrap()) - db(r.nmse_analytic.unwrap().total);
        assert!(dev.abs() <= 0.5, "{} dB: deviation {dev:.3} dB", r.snr_db);
    }
}

#[test]
fn doubling_trials_stays_within_three_standard_errors() {
    let env = Environment::build(&desk(200)).unwrap();
    for method in Method::ESTIMATORS {
        for snr in [-10.0, 10.0] {
            let half = nmse_with_error(&env, method, snr, 200, 64).unwrap();
            let full = nmse_with_error(&env, method, snr, 400, 64).unwrap();
            let diff = (full.nmse - half.nmse).abs();
            assert!(
                diff < 3.0 * half.std_error,
                "{method} at {snr} dB: {:.5} vs {:.5}, se {:.5}",
                half.nmse,
                full.nmse,
                half.std_error
            );
        }
    }
}

#[test]
fn ideal_csi_bounds_every_estimator_and_se_grows_with_snr() {
    let snrs = [-20.0, -10.0, 0.0, 10.0, 20.0];
    let plan = ExperimentPlan::new(ExperimentKind::SeSweep, desk(100)).with_snr(&snrs);
    let recs = run_se_sweep(&plan).unwrap();
    let se = |m: Method, s: f64| {
        recs.iter()
            .find(|r| r.method == m && r.snr_db == s)
            .and_then(|r| r.spectral_efficiency)
            .unwrap()
    };
    for m in Method::ALL {
        for w in snrs.windows(2) {
            assert!(
                se(m, w[1]) >= se(m, w[0]),
                "{m}: SE drops from {} to {} dB",
                w[0],
                w[1]
            );
        }
        for &s in &snrs {
            assert!(
                se(m, s) <= se(Method::Ideal, s) + 1e-2,
                "{m} above ideal at {s} dB"
            );
        }
    }
}

#[test]
fn emdt_floor_is_lowest_at_high_snr() {
    let cfg = desk(500);
    let top = *cfg
        .system
        .snr_grid
        .iter()
        .max_by(|a, b| a.total_cmp(b))
        .unwrap();
    let plan = ExperimentPlan::new(ExperimentKind::NmseSweep, cfg)
        .with_methods(&[Method::Denoise, Method::Bml, Method::Emdt])
        .with_snr(&[top]);
    let recs = run_nmse_sweep(&plan).unwrap();
    let nm = |m: Method| {
        recs.iter()
            .find(|r| r.method == m)
            .unwrap()
            .nmse_empirical
            .unwrap()
    };
    assert!(nm(Method::Emdt) < nm(Method::Denoise));
    assert!(nm(Method::Emdt) < nm(Method::Bml));
}

#[test]
fn emdt_nmse_does_not_grow_with_pilot_count() {
    let mut cfg = Config::desk();
    cfg.system.n_subcarriers = 256;
    cfg.system.n_pilots = 128;
    cfg.system.n_trials = 200;
    let base = Environment::build(&cfg.validate().unwrap()).unwrap();
    let counts = [1, 2, 4, 8, 16, 32, 64, 128, 256];
    for snr in [-15.0, 0.0] {
        let est: Vec<_> = counts
            .iter()
            .map(|&n_p| {
                nmse_with_error(&base.with_pilots(n_p).unwrap(), Method::Emdt, snr, 200, 64)
                    .unwrap()
            })
            .collect();
        for (i, w) in est.windows(2).enumerate() {
            let sigma = (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
            assert!(
                w[1].nmse <= w[0].nmse + 3.0 * sigma,
                "{snr} dB: N_p {} -> {}: {:.5} -> {:.5}",
                counts[i],
                counts[i + 1],
                w[0].nmse,
                w[1].nmse
            );
        }
    }
}
