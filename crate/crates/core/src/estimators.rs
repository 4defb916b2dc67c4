//! Channel estimators: per-pilot least squares, subspace projection (twin
//! prior or batch-ML), delay-domain denoising and linear interpolation to
//! the full subcarrier grid.

use std::fmt;

use rustfft::FftPlanner;

use crate::channel::RxBlock;
use crate::priors::ProjectorPair;
use crate::scenario::PilotPattern;
use crate::{CMatrix, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Perfect channel knowledge (reference curve only).
    Ideal,
    Ls,
    Denoise,
    Bml,
    Emdt,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Ideal,
        Method::Ls,
        Method::Denoise,
        Method::Bml,
        Method::Emdt,
    ];
    pub const ESTIMATORS: [Method; 4] = [Method::Ls, Method::Denoise, Method::Bml, Method::Emdt];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ideal => "ideal",
            Method::Ls => "ls",
            Method::Denoise => "denoise",
            Method::Bml => "bml",
            Method::Emdt => "emdt",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grid {
    /// `N_rx × N_p`.
    Pilot,
    /// `N_rx × N`.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub h_hat: CMatrix,
    pub grid: Grid,
    pub method: Method,
}

impl ChannelEstimate {
    pub fn pilot(h_hat: CMatrix, method: Method) -> Self {
        Self {
            h_hat,
            grid: Grid::Pilot,
            method,
        }
    }

    fn require_pilot_grid(&self, op: &'static str) -> Result<()> {
        if self.grid == Grid::Pilot {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "{op} expects a pilot-grid estimate"
            )))
        }
    }
}

/// `Ĥ^p = Y^p·diag(x^p)⁻¹`.
pub fn ls_estimate(rx: &RxBlock) -> Result<ChannelEstimate> {
    if rx.y.ncols() != rx.pilots.len() {
        return Err(Error::dims("ls_estimate", rx.pilots.len(), rx.y.ncols()));
    }
    let mut h = rx.y.clone();
    for (mut col, &x) in h.column_iter_mut().zip(&rx.pilots.symbols) {
        if x.norm_sqr() == 0.0 {
            return Err(Error::InvalidArgument("zero pilot symbol".into()));
        }
        col *= x.inv();
    }
    Ok(ChannelEstimate::pilot(h, Method::Ls))
}

/// `Π_S·Ĥ^p_LS·Π_T`, tagged with `method` (twin or batch-ML projectors).
pub fn project_estimate(
    ls: &ChannelEstimate,
    proj: &ProjectorPair,
    method: Method,
) -> Result<ChannelEstimate> {
    ls.require_pilot_grid("project_estimate")?;
    Ok(ChannelEstimate::pilot(proj.apply(&ls.h_hat)?, method))
}

/// Pilot-grid taps kept by the denoiser.
///
/// The `N_p`-point inverse DFT over pilots spaced `N/N_p` subcarriers apart
/// yields taps spaced `T_s` apart (aliased modulo `N_p·T_s`); taps with
/// delay above `tau_max` are dropped.
pub fn retained_taps(tau_max: f64, sample_interval: f64, n_pilots: usize) -> usize {
    let last = (tau_max / sample_interval).floor();
    if last + 1.0 >= n_pilots as f64 {
        n_pilots
    } else {
        last as usize + 1
    }
}

/// Zeroes delay-domain taps beyond `tau_max`, row by row.
pub fn denoise_estimate(
    ls: &ChannelEstimate,
    tau_max: f64,
    sample_interval: f64,
) -> Result<ChannelEstimate> {
    ls.require_pilot_grid("denoise_estimate")?;
    if !(tau_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau_max must be > 0, got {tau_max}"
        )));
    }
    let n_p = ls.h_hat.ncols();
    let keep = retained_taps(tau_max, sample_interval, n_p);
    if keep == n_p {
        return Ok(ChannelEstimate::pilot(ls.h_hat.clone(), Method::Denoise));
    }
    let mut planner = FftPlanner::<f64>::new();
    let inverse = planner.plan_fft_inverse(n_p);
    let forward = planner.plan_fft_forward(n_p);
    let scale = 1.0 / n_p as f64;
    let mut out = ls.h_hat.clone();
    let mut buf = vec![C64::new(0.0, 0.0); n_p];
    for r in 0..out.nrows() {
        for (k, b) in buf.iter_mut().enumerate() {
            *b = out[(r, k)];
        }
        inverse.process(&mut buf);
        for b in buf.iter_mut().skip(keep) {
            *b = C64::new(0.0, 0.0);
        }
        forward.process(&mut buf);
        for (k, b) in buf.iter().enumerate() {
            out[(r, k)] = b * scale;
        }
    }
    Ok(ChannelEstimate::pilot(out, Method::Denoise))
}

/// Linear interpolation between adjacent pilots, constant hold past the
/// last pilot (and before the first, if it is not subcarrier 0).
pub fn interpolate_full(
    est: &ChannelEstimate,
    pilots: &PilotPattern,
    n: usize,
) -> Result<ChannelEstimate> {
    est.require_pilot_grid("interpolate_full")?;
    let idx = &pilots.indices;
    if est.h_hat.ncols() != idx.len() || idx.is_empty() {
        return Err(Error::dims(
            "interpolate_full",
            idx.len(),
            est.h_hat.ncols(),
        ));
    }
    let h = &est.h_hat;
    let mut out = CMatrix::zeros(h.nrows(), n);
    let mut seg = 0;
    for k in 0..n {
        while seg + 1 < idx.len() && idx[seg + 1] <= k {
            seg += 1;
        }
        if k <= idx[0] {
            out.set_column(k, &h.column(0));
        } else if seg + 1 == idx.len() {
            out.set_column(k, &h.column(seg));
        } else {
            let (k0, k1) = (idx[seg], idx[seg + 1]);
            let w = (k - k0) as f64 / (k1 - k0) as f64;
            let col = h.column(seg) * C64::new(1.0 - w, 0.0) + h.column(seg + 1) * C64::new(w, 0.0);
            out.set_column(k, &col);
        }
    }
    Ok(ChannelEstimate {
        h_hat: out,
        grid: Grid::Full,
        method: est.method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{assemble_channel, draw_fading, simulate_uplink};
    use crate::linalg::{kron, max_abs_diff, norm_sq, vec_cols};
    use crate::priors::{dt_subspace, make_projectors};
    use crate::propagation::{
        frequency_response, generate_paths, steering_matrix, ArrayGeometry, PathSet, Pulse,
    };
    use crate::rng::{complex_gaussian, stream, Purpose};
    use crate::scenario::{build_pilot_pattern, pilot_indices, ScenarioConfig};
    use crate::CVector;
    use proptest::prelude::*;

    const TS: f64 = 1.0 / 30.72e6;

    fn noise(rows: usize, cols: usize, var: f64, seed: u64) -> CMatrix {
        let mut rng = stream(seed, rows as u64, cols as u64, Purpose::Noise);
        CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(&mut rng, var))
    }

    fn setup(
        seed: u64,
        n_rx: usize,
        n_p: usize,
        n_dt: usize,
    ) -> (PathSet, CMatrix, CMatrix, ProjectorPair) {
        let scen = ScenarioConfig {
            n_dt_paths: n_dt,
            ..ScenarioConfig::default()
        };
        let paths = generate_paths(&scen, &mut stream(seed, 0, 0, Purpose::Environment));
        let geom = ArrayGeometry::ula_x(n_rx, 0.5, 0.0107);
        let pulse = Pulse {
            sample_interval: TS,
            rolloff: 0.25,
            span: 16,
        };
        let pilots = pilot_indices(64, n_p).unwrap();
        let a = steering_matrix(&paths, &geom);
        let kp = frequency_response(&paths, 64, &pulse, Some(&pilots));
        let dt = crate::propagation::dt_truncate(&paths, n_dt).unwrap();
        let proj =
            make_projectors(&dt_subspace(&dt, &geom, &pulse, 64, &pilots, 1e-8).unwrap()).unwrap();
        (paths, a, kp, proj)
    }

    #[test]
    fn ls_noiseless_and_identity_pilots() {
        let hp = noise(4, 8, 1.0, 1);
        let pilots =
            build_pilot_pattern(16, 8, 2.0, &mut stream(1, 0, 0, Purpose::Pilots)).unwrap();
        let rx = simulate_uplink(&hp, &pilots, 0.0, &mut stream(1, 0, 0, Purpose::Noise)).unwrap();
        assert!(max_abs_diff(&ls_estimate(&rx).unwrap().h_hat, &hp) < 1e-14);
        let ones = PilotPattern::constant(16, 8, 1.0).unwrap();
        let rx = simulate_uplink(&hp, &ones, 0.5, &mut stream(2, 0, 0, Purpose::Noise)).unwrap();
        assert_eq!(ls_estimate(&rx).unwrap().h_hat, rx.y);
        let mut zero = ones.clone();
        zero.symbols[3] = C64::new(0.0, 0.0);
        assert!(ls_estimate(&RxBlock {
            y: rx.y.clone(),
            pilots: zero
        })
        .is_err());
    }

    #[test]
    fn ls_white_error_law() {
        // NMSE over pilots is σ²_w/(σ²_x·β); with a white unit-power
        // "channel" β = 1 so the law reads 1/SNR.
        let ones = PilotPattern::constant(64, 32, 1.0).unwrap();
        for snr_db in [-10.0, 0.0, 10.0] {
            let w = crate::scenario::noise_variance_for_snr(snr_db, 1.0, 1.0).unwrap();
            let (mut err, mut en) = (0.0, 0.0);
            for t in 0..200 {
                let hp = noise(16, 32, 1.0, 100 + t);
                let rx =
                    simulate_uplink(&hp, &ones, w, &mut stream(t, 0, 0, Purpose::Noise)).unwrap();
                err += norm_sq(&(ls_estimate(&rx).unwrap().h_hat - &hp));
                en += norm_sq(&hp);
            }
            let nmse_db = 10.0 * (err / en).log10();
            assert!((nmse_db + snr_db).abs() < 0.3, "{snr_db}: {nmse_db}");
        }
    }

    #[test]
    fn projection_examples() {
        let (paths, a, kp, _) = setup(3, 8, 16, 25);
        let geom = ArrayGeometry::ula_x(8, 0.5, 0.0107);
        let pulse = Pulse {
            sample_interval: TS,
            rolloff: 0.25,
            span: 16,
        };
        let full = make_projectors(
            &dt_subspace(
                &paths,
                &geom,
                &pulse,
                64,
                &pilot_indices(64, 16).unwrap(),
                1e-8,
            )
            .unwrap(),
        )
        .unwrap();
        let f = draw_fading(&paths.amplitude, &mut stream(3, 1, 0, Purpose::Fading));
        let hp = assemble_channel(&a, &f, &kp).unwrap().h;
        let est = project_estimate(
            &ChannelEstimate::pilot(hp.clone(), Method::Ls),
            &full,
            Method::Emdt,
        )
        .unwrap();
        assert!(max_abs_diff(&est.h_hat, &hp) < 1e-8);
        let id = ProjectorPair::identity(8, 16);
        let same = project_estimate(
            &ChannelEstimate::pilot(hp.clone(), Method::Ls),
            &id,
            Method::Emdt,
        )
        .unwrap();
        assert_eq!(same.h_hat, hp);
    }

    #[test]
    fn projection_of_noise_keeps_rank_fraction() {
        let five = PathSet::new(
            vec![0.05, -0.1, 0.0, 0.2, -0.15],
            vec![0.3, 0.9, 1.4, 2.0, 2.6],
            vec![0.0, 40e-9, 90e-9, 130e-9, 190e-9],
            vec![0.7, 0.5, 0.35, 0.3, 0.2],
        )
        .unwrap();
        let geom = ArrayGeometry::ula_x(64, 0.5, 0.0107);
        let pulse = Pulse {
            sample_interval: TS,
            rolloff: 0.25,
            span: 16,
        };
        let proj = make_projectors(
            &dt_subspace(
                &five,
                &geom,
                &pulse,
                64,
                &pilot_indices(64, 32).unwrap(),
                1e-8,
            )
            .unwrap(),
        )
        .unwrap();
        let (mut out, mut inp) = (0.0, 0.0);
        for t in 0..400 {
            let w = noise(64, 32, 1.0, 1000 + t);
            out += norm_sq(&proj.apply(&w).unwrap());
            inp += norm_sq(&w);
        }
        let expected = 25.0 / 2048.0;
        // out is a sum of 400·25 unit exponentials
        assert!(
            ((out / inp) / expected - 1.0).abs() < 3.0 / (400.0f64 * 25.0).sqrt(),
            "{}",
            out / inp
        );
    }

    #[test]
    fn denoise_examples() {
        let h = noise(4, 32, 1.0, 7);
        let est = ChannelEstimate::pilot(h.clone(), Method::Ls);
        // 32 taps of T_s cover 32·T_s; any cutoff at or past the last tap is a no-op
        assert_eq!(retained_taps(31.0 * TS, TS, 32), 32);
        assert_eq!(denoise_estimate(&est, 40.0 * TS, TS).unwrap().h_hat, h);
        assert_eq!(retained_taps(0.5e-6, TS, 32), 16);
        assert!(denoise_estimate(&est, 0.0, TS).is_err());

        // integer-sample delays inside the window survive untouched
        let paths = PathSet::new(
            vec![0.0; 3],
            vec![0.4, 1.2, 2.0],
            vec![0.0, 3.0 * TS, 9.0 * TS],
            vec![0.8, 0.5, 0.3],
        )
        .unwrap();
        let geom = ArrayGeometry::ula_x(4, 0.5, 0.0107);
        let pulse = Pulse {
            sample_interval: TS,
            rolloff: 0.0,
            span: 16,
        };
        let pilots = pilot_indices(64, 32).unwrap();
        let a = steering_matrix(&paths, &geom);
        let kp = frequency_response(&paths, 64, &pulse, Some(&pilots));
        let f = draw_fading(&paths.amplitude, &mut stream(8, 0, 0, Purpose::Fading));
        let hp = assemble_channel(&a, &f, &kp).unwrap().h;
        let out =
            denoise_estimate(&ChannelEstimate::pilot(hp.clone(), Method::Ls), 0.5e-6, TS).unwrap();
        assert!(max_abs_diff(&out.h_hat, &hp) < 1e-8);
    }

    #[test]
    fn denoise_noise_energy_fraction() {
        let (mut out, mut inp) = (0.0, 0.0);
        for t in 0..200 {
            let w = noise(16, 32, 1.0, 3000 + t);
            let d = denoise_estimate(&ChannelEstimate::pilot(w.clone(), Method::Ls), 0.5e-6, TS)
                .unwrap();
            out += norm_sq(&d.h_hat);
            inp += norm_sq(&w);
        }
        let expected = 16.0 / 32.0;
        assert!(
            ((out / inp) / expected - 1.0).abs() < 3.0 / (200.0f64 * 16.0 * 16.0).sqrt(),
            "{}",
            out / inp
        );
    }

    #[test]
    fn interpolation_examples() {
        let pilots = PilotPattern::constant(16, 4, 1.0).unwrap();
        let c = C64::new(0.3, -1.2);
        let flat = ChannelEstimate::pilot(CMatrix::from_element(2, 4, c), Method::Ls);
        let full = interpolate_full(&flat, &pilots, 16).unwrap();
        assert_eq!(full.grid, Grid::Full);
        assert!(full.h_hat.iter().all(|z| (z - c).norm() < 1e-15));

        let affine = |k: usize| C64::new(1.0 + 0.5 * k as f64, -0.25 * k as f64);
        let h = CMatrix::from_fn(1, 4, |_, j| affine(pilots.indices[j]));
        let full = interpolate_full(&ChannelEstimate::pilot(h, Method::Ls), &pilots, 16).unwrap();
        for k in 0..=12 {
            assert!((full.h_hat[(0, k)] - affine(k)).norm() < 1e-12);
        }
        for k in 13..16 {
            assert_eq!(full.h_hat[(0, k)], affine(12));
        }

        let all = PilotPattern::constant(8, 8, 1.0).unwrap();
        let h = noise(3, 8, 1.0, 9);
        assert_eq!(
            interpolate_full(&ChannelEstimate::pilot(h.clone(), Method::Ls), &all, 8)
                .unwrap()
                .h_hat,
            h
        );

        let one = PilotPattern::constant(8, 1, 1.0).unwrap();
        let h = noise(3, 1, 1.0, 10);
        let out =
            interpolate_full(&ChannelEstimate::pilot(h.clone(), Method::Ls), &one, 8).unwrap();
        for k in 0..8 {
            assert_eq!(out.h_hat.column(k), h.column(0));
        }
        assert!(interpolate_full(&full, &pilots, 16).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn projection_error_matches_kronecker_form(seed in any::<u64>(), n_dt in 1usize..6) {
            let (paths, a, kp, proj) = setup(seed, 4, 8, n_dt);
            let f = draw_fading(&paths.amplitude, &mut stream(seed, 1, 0, Purpose::Fading));
            let hp = assemble_channel(&a, &f, &kp).unwrap().h;
            let pilots = build_pilot_pattern(64, 8, 1.0, &mut stream(seed, 0, 0, Purpose::Pilots)).unwrap();
            let rx = simulate_uplink(&hp, &pilots, 0.3, &mut stream(seed, 1, 0, Purpose::Noise)).unwrap();
            let ls = ls_estimate(&rx).unwrap();
            let est = project_estimate(&ls, &proj, Method::Emdt).unwrap();
            let lhs = vec_cols(&(&hp - &est.h_hat));
            // Δh = h − Q·h − Q·vec{W·diag(x)⁻¹}
            let q = proj.kron_q();
            let x_inv = CMatrix::from_diagonal(&CVector::from_iterator(8, pilots.symbols.iter().map(|x| x.inv())));
            let w = &rx.y - &hp * CMatrix::from_diagonal(&CVector::from_vec(pilots.symbols.clone()));
            let h = vec_cols(&hp);
            let rhs = &h - &q * &h - &q * vec_cols(&(w * x_inv));
            prop_assert!((lhs - rhs).norm() < 1e-10);
            // idempotent
            let twice = project_estimate(&est, &proj, Method::Emdt).unwrap();
            prop_assert!(max_abs_diff(&twice.h_hat, &est.h_hat) < 1e-10);
            let _ = kron(&CMatrix::identity(1, 1), &CMatrix::identity(1, 1));
        }

        #[test]
        fn denoiser_is_orthogonal_projection(seed in any::<u64>(), taps in 1usize..40) {
            let tau = taps as f64 * TS * 0.999;
            let h = noise(3, 32, 1.0, seed);
            let once = denoise_estimate(&ChannelEstimate::pilot(h.clone(), Method::Ls), tau, TS).unwrap();
            let twice = denoise_estimate(&ChannelEstimate::pilot(once.h_hat.clone(), Method::Ls), tau, TS).unwrap();
            prop_assert!(max_abs_diff(&once.h_hat, &twice.h_hat) < 1e-10);
            prop_assert!(norm_sq(&once.h_hat) <= norm_sq(&h) * (1.0 + 1e-12));
            // residual orthogonal to output
            let resid = &h - &once.h_hat;
            let inner: C64 = resid.iter().zip(once.h_hat.iter()).map(|(r, o)| r.conj() * o).sum();
            prop_assert!(inner.norm() < 1e-9 * norm_sq(&h));
        }

        #[test]
        fn estimators_are_linear(seed in any::<u64>()) {
            let (_, _, _, proj) = setup(seed, 4, 8, 3);
            let pilots = build_pilot_pattern(64, 8, 1.0, &mut stream(seed, 0, 0, Purpose::Pilots)).unwrap();
            let y1 = noise(4, 8, 1.0, seed ^ 11);
            let y2 = noise(4, 8, 1.0, seed ^ 12);
            let run = |y: &CMatrix| {
                let ls = ls_estimate(&RxBlock { y: y.clone(), pilots: pilots.clone() }).unwrap();
                [
                    ls.h_hat.clone(),
                    project_estimate(&ls, &proj, Method::Emdt).unwrap().h_hat,
                    denoise_estimate(&ls, 0.1e-6, TS).unwrap().h_hat,
                    interpolate_full(&ls, &pilots, 64).unwrap().h_hat,
                ]
            };
            let sum = run(&(&y1 + &y2));
            let (a, b) = (run(&y1), run(&y2));
            for i in 0..4 {
                prop_assert!(max_abs_diff(&sum[i], &(&a[i] + &b[i])) < 1e-10);
            }
        }
    }
}
