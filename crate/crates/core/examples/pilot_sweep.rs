//! Pilot-count sweep: NMSE and overhead-adjusted SE for LS and twin
//! projection on a 256-subcarrier grid.
//!
//! ```text
//! cargo run --release --example pilot_sweep -- [config.json] [out_dir]
//! ```

use std::path::PathBuf;

use chest::estimators::Method;
use chest::harness::{
    emit_csv, emit_plot, run_pilot_sweep, ExperimentKind, ExperimentPlan, PlotMetric,
};
use chest::scenario::Config;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(path) => Config::from_file(path.as_ref())?,
        None => {
            let mut c = Config::desk();
            c.system.n_subcarriers = 256;
            c.system.n_pilots = 128;
            c.system.n_trials = 200;
            c
        }
    };
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out".into()));
    let plan = ExperimentPlan::new(ExperimentKind::PilotSweep, cfg.validate()?);
    let records = run_pilot_sweep(&plan)?;

    for &snr in &plan.snr_db {
        println!("SNR {snr} dB");
        println!(
            "{:>6} {:>10} {:>10} {:>8} {:>8}",
            "N_p", "ls NMSE", "emdt NMSE", "ls SE", "emdt SE"
        );
        for &n_p in &plan.pilot_counts {
            let at = |m: Method| {
                records
                    .iter()
                    .find(|r| r.method == m && r.snr_db == snr && r.n_pilots == n_p)
                    .unwrap()
            };
            let db = |m| 10.0 * at(m).nmse_empirical.unwrap().log10();
            println!(
                "{n_p:>6} {:>10.2} {:>10.2} {:>8.3} {:>8.3}",
                db(Method::Ls),
                db(Method::Emdt),
                at(Method::Ls).spectral_efficiency.unwrap(),
                at(Method::Emdt).spectral_efficiency.unwrap()
            );
        }
    }
    emit_csv(&records, &out.join("pilot_sweep.csv"))?;
    emit_plot(
        &records,
        PlotMetric::SeVsPilots,
        &out.join("pilot_sweep_se.svg"),
    )?;
    emit_plot(
        &records,
        PlotMetric::NmseVsPilots,
        &out.join("pilot_sweep_nmse.svg"),
    )?;
    println!("wrote {}", out.display());
    Ok(())
}
