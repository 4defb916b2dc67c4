//! NMSE against SNR for LS, denoising, batch-ML and twin projection.
//!
//! ```text
//! cargo run --release --example nmse_sweep -- [config.json] [out_dir]
//! ```

use std::path::PathBuf;

use chest::estimators::Method;
use chest::harness::{
    emit_csv, emit_plot, run_nmse_sweep, ExperimentKind, ExperimentPlan, PlotMetric,
};
use chest::scenario::Config;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(path) => Config::from_file(path.as_ref())?,
        None => Config::desk(),
    };
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out".into()));
    let plan = ExperimentPlan::new(ExperimentKind::NmseSweep, cfg.validate()?);
    let records = run_nmse_sweep(&plan)?;

    println!(
        "{:>8} {:>9} {:>9} {:>9} {:>9} {:>11}",
        "SNR dB", "ls", "denoise", "bml", "emdt", "emdt theory"
    );
    for &snr in &plan.snr_db {
        let at = |m: Method| {
            records
                .iter()
                .find(|r| r.method == m && r.snr_db == snr)
                .unwrap()
        };
        let db = |x: f64| 10.0 * x.log10();
        let theory = at(Method::Emdt).nmse_analytic.unwrap().total;
        print!("{snr:>8.1}");
        for m in Method::ESTIMATORS {
            print!(" {:>9.2}", db(at(m).nmse_empirical.unwrap()));
        }
        println!(" {:>11.2}", db(theory));
    }
    emit_csv(&records, &out.join("nmse_sweep.csv"))?;
    emit_plot(&records, PlotMetric::NmseDb, &out.join("nmse_sweep.svg"))?;
    println!("wrote {}", out.display());
    Ok(())
}
