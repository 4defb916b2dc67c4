//! Distribution of the post-combining SNR at −10 dB and 5 dB.
//!
//! ```text
//! cargo run --release --example ecdf -- [config.json] [out_dir]
//! ```

use std::path::PathBuf;

use chest::harness::{emit_ecdf_csv, run_ecdf, ExperimentKind, ExperimentPlan};
use chest::scenario::Config;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(path) => Config::from_file(path.as_ref())?,
        None => Config::desk(),
    };
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out".into()));
    let plan = ExperimentPlan::new(ExperimentKind::Ecdf, cfg.validate()?);
    let tables = run_ecdf(&plan)?;

    println!("post-combining SNR quantiles [dB]");
    println!(
        "{:>8} {:>8} {:>8} {:>8} {:>8}",
        "method", "SNR dB", "10%", "50%", "90%"
    );
    for t in &tables {
        let q = |p: f64| 10.0 * t.ecdf.quantile(p).log10();
        println!(
            "{:>8} {:>8.1} {:>8.2} {:>8.2} {:>8.2}",
            t.method.as_str(),
            t.snr_db,
            q(0.1),
            q(0.5),
            q(0.9)
        );
    }
    emit_ecdf_csv(&tables, &out.join("ecdf.csv"))?;
    println!("wrote {}", out.join("ecdf.csv").display());
    Ok(())
}
