//! One channel snapshot end to end: environment, twin prior, LS estimate and
//! its projection onto the twin's subspaces.
//!
//! ```text
//! cargo run --release --example twin_projection
//! ```

use chest::channel::{assemble_channel, draw_fading, simulate_uplink};
use chest::estimators::{ls_estimate, project_estimate, Method};
use chest::harness::Environment;
use chest::linalg::{norm_sq, singular_values};
use chest::metrics::analytic_nmse;
use chest::rng::{stream, Purpose};
use chest::scenario::{build_pilot_pattern, Config};

fn main() -> anyhow::Result<()> {
    let cfg = Config::desk().validate()?;
    let env = Environment::build(&cfg)?;
    let sys = &cfg.system;

    println!(
        "{} paths, twin keeps the {} strongest:",
        env.paths.len(),
        env.twin_paths.len()
    );
    for l in 0..env.twin_paths.len() {
        println!(
            "  tau {:6.1} ns  phi {:5.2} rad  alpha² {:.3}",
            env.twin_paths.delay[l] * 1e9,
            env.twin_paths.azimuth[l],
            env.twin_paths.amplitude[l].powi(2)
        );
    }
    println!(
        "prior ranks: spatial {}, temporal {}",
        env.twin_prior.rank_spatial(),
        env.twin_prior.rank_temporal()
    );
    let sv = singular_values(&env.response_pilot);
    println!(
        "leading singular values of K^p: {:.3?}",
        &sv[..6.min(sv.len())]
    );

    let snr_db = 0.0;
    let w = env.noise_variance(snr_db)?;
    let pilots = build_pilot_pattern(
        sys.n_subcarriers,
        sys.n_pilots,
        sys.symbol_power,
        &mut stream(sys.seed, 0, 0, Purpose::Pilots),
    )?;
    let fading = draw_fading(
        &env.paths.amplitude,
        &mut stream(sys.seed, 0, 0, Purpose::Fading),
    );
    let h = assemble_channel(&env.steering, &fading, &env.response_pilot)?.h;
    let rx = simulate_uplink(&h, &pilots, w, &mut stream(sys.seed, 0, 0, Purpose::Noise))?;
    let ls = ls_estimate(&rx)?;
    let emdt = project_estimate(&ls, &env.twin_projectors, Method::Emdt)?;

    let err = |e: &chest::CMatrix| 10.0 * (norm_sq(&(e - &h)) / norm_sq(&h)).log10();
    let theory = analytic_nmse(
        &env.twin_projectors,
        &env.covariance,
        snr_db,
        sys.symbol_power,
        w,
    )?;
    println!("at {snr_db} dB SNR, this snapshot:");
    println!("  LS    error {:6.2} dB", err(&ls.h_hat));
    println!("  EM-DT error {:6.2} dB", err(&emdt.h_hat));
    println!(
        "  EM-DT expected {:6.2} dB (floor {:6.2} dB, noise {:6.2} dB)",
        10.0 * theory.total.log10(),
        10.0 * theory.subspace_floor.log10(),
        10.0 * theory.noise_term.log10()
    );
    Ok(())
}
