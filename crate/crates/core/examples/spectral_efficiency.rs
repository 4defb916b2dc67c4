//! Genie-aided MRC spectral efficiency against SNR, with the ideal-CSI
//! reference.
//!
//! ```text
//! cargo run --release --example spectral_efficiency -- [config.json] [out_dir]
//! ```

use std::path::PathBuf;

use chest::estimators::Method;
use chest::harness::{
    emit_csv, emit_plot, run_se_sweep, ExperimentKind, ExperimentPlan, PlotMetric,
};
use chest::scenario::Config;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(path) => Config::from_file(path.as_ref())?,
        None => Config::desk(),
    };
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out".into()));
    let plan = ExperimentPlan::new(ExperimentKind::SeSweep, cfg.validate()?);
    let records = run_se_sweep(&plan)?;

    print!("{:>8}", "SNR dB");
    for m in Method::ALL {
        print!(" {:>8}", m.as_str());
    }
    println!();
    for &snr in &plan.snr_db {
        print!("{snr:>8.1}");
        for m in Method::ALL {
            let r = records
                .iter()
                .find(|r| r.method == m && r.snr_db == snr)
                .unwrap();
            print!(" {:>8.3}", r.spectral_efficiency.unwrap());
        }
        println!();
    }
    emit_csv(&records, &out.join("se_sweep.csv"))?;
    emit_plot(
        &records,
        PlotMetric::SpectralEfficiency,
        &out.join("se_sweep.svg"),
    )?;
    println!("wrote {}", out.display());
    Ok(())
}
