//! Batch-ML NMSE against the number of warm-up snapshots `N_TB`, next to
//! the twin projection at the same SNR.
//!
//! ```text
//! cargo run --release --example bml_batch -- [snr_db]
//! ```

use chest::estimators::Method;
use chest::harness::{
    measured_floor, run_bml_batch_sweep, run_nmse_sweep, Environment, ExperimentKind,
    ExperimentPlan,
};
use chest::scenario::Config;

fn main() -> anyhow::Result<()> {
    let snr: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(30.0);
    let cfg = Config::desk().validate()?;
    let env = Environment::build(&cfg)?;
    let trials = cfg.system.n_trials;

    let plan = ExperimentPlan::new(ExperimentKind::NmseSweep, cfg.clone())
        .with_methods(&[Method::Emdt])
        .with_snr(&[snr]);
    let emdt = run_nmse_sweep(&plan)?[0].nmse_empirical.unwrap();
    println!(
        "EM-DT at {snr} dB: {:.2} dB (noiseless floor {:.2} dB)",
        10.0 * emdt.log10(),
        10.0 * measured_floor(&env, Method::Emdt, trials)?.log10()
    );

    println!("{:>6} {:>10} {:>10}", "N_TB", "BML dB", "± 1σ dB");
    for p in run_bml_batch_sweep(&env, trials, snr, &[2, 4, 8, 16, 32, 64, 128, 256])? {
        let e = p.estimate;
        let db = 10.0 * e.nmse.log10();
        let hi = 10.0 * (e.nmse + e.std_error).log10();
        println!("{:>6} {:>10.2} {:>10.3}", p.n_batch, db, hi - db);
    }
    Ok(())
}
