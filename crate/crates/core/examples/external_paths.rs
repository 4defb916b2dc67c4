//! Runs the NMSE sweep on a path set read from CSV, for environments
//! exported from a ray tracer.
//!
//! ```text
//! cargo run --release --example external_paths -- paths.csv
//! ```
//!
//! Without an argument a synthetic path set is written to a temporary file
//! and read back.

use std::path::PathBuf;

use chest::estimators::Method;
use chest::harness::{run_nmse_sweep, ExperimentKind, ExperimentPlan};
use chest::propagation::{generate_paths, PathSet};
use chest::rng::{stream, Purpose};
use chest::scenario::Config;

fn main() -> anyhow::Result<()> {
    let mut cfg = Config::desk();
    cfg.system.n_trials = 200;
    cfg.system.snr_grid = vec![-10.0, 0.0, 10.0, 20.0, 30.0];
    let cfg = cfg.validate()?;

    let path = match std::env::args().nth(1) {
        Some(p) => PathBuf::from(p),
        None => {
            let p = std::env::temp_dir().join("chest_paths.csv");
            generate_paths(&cfg.scenario, &mut stream(42, 0, 0, Purpose::Environment))
                .write_csv(&p)?;
            p
        }
    };
    let paths = PathSet::read_csv(&path)?;
    println!(
        "{} paths from {}, total power {:.4}",
        paths.len(),
        path.display(),
        paths.total_power()
    );

    let plan = ExperimentPlan::new(ExperimentKind::NmseSweep, cfg)
        .with_methods(&[Method::Ls, Method::Emdt])
        .with_paths(paths);
    let records = run_nmse_sweep(&plan)?;
    println!(
        "{:>8} {:>8} {:>8} {:>10}",
        "SNR dB", "ls", "emdt", "emdt floor"
    );
    for &snr in &plan.snr_db {
        let at = |m: Method| {
            records
                .iter()
                .find(|r| r.method == m && r.snr_db == snr)
                .unwrap()
        };
        let db = |x: f64| 10.0 * x.log10();
        println!(
            "{snr:>8.1} {:>8.2} {:>8.2} {:>10.2}",
            db(at(Method::Ls).nmse_empirical.unwrap()),
            db(at(Method::Emdt).nmse_empirical.unwrap()),
            db(at(Method::Emdt).nmse_analytic.unwrap().subspace_floor)
        );
    }
    Ok(())
}
