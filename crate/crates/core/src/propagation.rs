//! Synthetic multipath environment and the array/frequency responses of
//! its paths.
//!
//! The environment generator stands in for a ray tracer: it draws `L`
//! paths with uniform angles, uniform delays and an exponential
//! power-delay profile. [`dt_truncate`] keeps the strongest `L̄` of them,
//! which is what the digital twin is assumed to know exactly.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::scenario::{ScenarioConfig, ValidatedConfig};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Per-path geometry: elevation `θ_l`, azimuth `φ_l`, delay `τ_l` and mean
/// amplitude `α_l`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathSet {
    pub elevation: Vec<f64>,
    pub azimuth: Vec<f64>,
    pub delay: Vec<f64>,
    pub amplitude: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PathRow {
    theta_rad: f64,
    phi_rad: f64,
    tau_s: f64,
    alpha: f64,
}

impl PathSet {
    pub fn new(
        elevation: Vec<f64>,
        azimuth: Vec<f64>,
        delay: Vec<f64>,
        amplitude: Vec<f64>,
    ) -> Result<Self> {
        let n = elevation.len();
        if azimuth.len() != n || delay.len() != n || amplitude.len() != n {
            return Err(Error::dims(
                "PathSet",
                n,
                format!("{}/{}/{}", azimuth.len(), delay.len(), amplitude.len()),
            ));
        }
        if let Some(a) = amplitude.iter().find(|a| !(**a >= 0.0) || !a.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "path amplitude must be finite and >= 0, got {a}"
            )));
        }
        if let Some(t) = delay.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "path delay must be finite and >= 0, got {t}"
            )));
        }
        Ok(Self {
            elevation,
            azimuth,
            delay,
            amplitude,
        })
    }

    /// A single path.
    pub fn single(elevation: f64, azimuth: f64, delay: f64, amplitude: f64) -> Self {
        Self {
            elevation: vec![elevation],
            azimuth: vec![azimuth],
            delay: vec![delay],
            amplitude: vec![amplitude],
        }
    }

    pub fn len(&self) -> usize {
        self.delay.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delay.is_empty()
    }

    /// `Σ_l α²_l`.
    pub fn total_power(&self) -> f64 {
        self.amplitude.iter().map(|a| a * a).sum()
    }

    pub fn powers(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a * a).collect()
    }

    pub fn select(&self, idx: &[usize]) -> PathSet {
        PathSet {
            elevation: idx.iter().map(|&i| self.elevation[i]).collect(),
            azimuth: idx.iter().map(|&i| self.azimuth[i]).collect(),
            delay: idx.iter().map(|&i| self.delay[i]).collect(),
            amplitude: idx.iter().map(|&i| self.amplitude[i]).collect(),
        }
    }

    /// Reads `theta_rad,phi_rad,tau_s,alpha` rows.
    pub fn read_csv(path: &Path) -> Result<PathSet> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
        let mut set = PathSet::default();
        for row in rdr.deserialize() {
            let row: PathRow = row.map_err(csv_err)?;
            set.elevation.push(row.theta_rad);
            set.azimuth.push(row.phi_rad);
            set.delay.push(row.tau_s);
            set.amplitude.push(row.alpha);
        }
        PathSet::new(set.elevation, set.azimuth, set.delay, set.amplitude)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut wtr = csv::Writer::from_path(path).map_err(csv_err)?;
        for l in 0..self.len() {
            wtr.serialize(PathRow {
                theta_rad: self.elevation[l],
                phi_rad: self.azimuth[l],
                tau_s: self.delay[l],
                alpha: self.amplitude[l],
            })
            .map_err(csv_err)?;
        }
        wtr.flush().map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Element positions (meters) and carrier wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub positions: Vec<[f64; 3]>,
    pub wavelength: f64,
}

impl ArrayGeometry {
    /// Uniform linear array along x with the first element at the origin.
    pub fn ula_x(n_rx: usize, spacing_wavelengths: f64, wavelength: f64) -> Self {
        let d = spacing_wavelengths * wavelength;
        Self {
            positions: (0..n_rx).map(|i| [i as f64 * d, 0.0, 0.0]).collect(),
            wavelength,
        }
    }

    pub fn from_config(cfg: &ValidatedConfig) -> Self {
        Self::ula_x(cfg.system.n_rx, cfg.scenario.array_spacing, cfg.wavelength)
    }

    pub fn n_elements(&self) -> usize {
        self.positions.len()
    }
}

/// Draws `L` paths. Deterministic for a given stream state.
pub fn generate_paths<R: Rng + ?Sized>(scen: &ScenarioConfig, rng: &mut R) -> PathSet {
    let l = scen.n_paths;
    let uniform = |rng: &mut R, [lo, hi]: [f64; 2]| {
        if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            lo
        }
    };
    let mut set = PathSet::default();
    for _ in 0..l {
        set.delay.push(uniform(rng, [0.0, scen.delay_spread]));
        set.azimuth.push(uniform(rng, scen.azimuth_range));
        set.elevation.push(uniform(rng, scen.elevation_range));
    }
    let powers: Vec<f64> = set
        .delay
        .iter()
        .map(|&t| {
            if scen.delay_spread > 0.0 {
                (-scen.pdp_decay * t / scen.delay_spread).exp()
            } else {
                1.0
            }
        })
        .collect();
    let total: f64 = powers.iter().sum();
    set.amplitude = powers.iter().map(|p| (p / total).sqrt()).collect();
    set
}

/// The `L̄` strongest paths, strongest first.
///
/// Ties in amplitude go to the smaller delay, then to the lower index.
/// Amplitudes are kept as they are: the twin sees a subset of the true
/// environment, not a renormalised one.
pub fn dt_truncate(paths: &PathSet, n_keep: usize) -> Result<PathSet> {
    if n_keep > paths.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot keep {n_keep} of {} paths",
            paths.len()
        )));
    }
    Ok(paths.select(&strongest_indices(paths, n_keep)))
}

/// Indices of the `n_keep` strongest paths, in rank order.
pub fn strongest_indices(paths: &PathSet, n_keep: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..paths.len()).collect();
    order.sort_by(|&a, &b| {
        paths.amplitude[b]
            .total_cmp(&paths.amplitude[a])
            .then(paths.delay[a].total_cmp(&paths.delay[b]))
            .then(a.cmp(&b))
    });
    order.truncate(n_keep);
    order
}

/// `[cosφ·cosθ, sinφ·cosθ, sinθ]`.
pub fn direction_vector(elevation: f64, azimuth: f64) -> [f64; 3] {
    let (st, ct) = elevation.sin_cos();
    let (sp, cp) = azimuth.sin_cos();
    [cp * ct, sp * ct, st]
}

/// Array response: entry `i` is `exp(j·2π/λ·u_iᵀv)`.
pub fn steering_vector(v: [f64; 3], geom: &ArrayGeometry) -> CVector {
    let k = 2.0 * PI / geom.wavelength;
    CVector::from_iterator(
        geom.n_elements(),
        geom.positions.iter().map(|u| {
            let phase = k * (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]);
            C64::from_polar(1.0, phase)
        }),
    )
}

/// `A = [a(θ_1, φ_1), …, a(θ_L, φ_L)]`.
pub fn steering_matrix(paths: &PathSet, geom: &ArrayGeometry) -> CMatrix {
    let cols: Vec<CVector> = (0..paths.len())
        .map(|l| steering_vector(direction_vector(paths.elevation[l], paths.azimuth[l]), geom))
        .collect();
    if cols.is_empty() {
        return CMatrix::zeros(geom.n_elements(), 0);
    }
    CMatrix::from_columns(&cols)
}

/// Transmit/receive pulse cascade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    /// `T_s`, seconds.
    pub sample_interval: f64,
    pub rolloff: f64,
    /// Samples kept on each side of the `[0, N)` window.
    pub span: usize,
}

impl Pulse {
    pub fn from_config(cfg: &ValidatedConfig) -> Self {
        Self {
            sample_interval: cfg.sample_interval,
            rolloff: cfg.scenario.pulse_rolloff,
            span: cfg.scenario.pulse_span,
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Raised-cosine impulse response `g(t)` with `t` in samples.
pub fn raised_cosine(t: f64, rolloff: f64) -> f64 {
    if rolloff == 0.0 {
        return sinc(t);
    }
    let edge = 1.0 / (2.0 * rolloff);
    if ((t.abs() - edge) / edge).abs() < 1e-9 {
        // removable singularity at |t| = 1/(2·rolloff)
        return PI / 4.0 * sinc(edge);
    }
    let bt = 2.0 * rolloff * t;
    sinc(t) * (PI * rolloff * t).cos() / (1.0 - bt * bt)
}

/// `g(ν − τ/T_s)`.
pub fn pulse_response(nu: f64, delay_norm: f64, rolloff: f64) -> f64 {
    raised_cosine(nu - delay_norm, rolloff)
}

/// Sampled pulse of one path folded onto `[0, N)`.
///
/// Samples `ν ∈ [-span, N + span)` are evaluated and wrapped modulo `N`:
/// with a cyclic prefix longer than the delay spread, the linear
/// convolution of each OFDM symbol is seen as a circular one.
pub fn pulse_column(n: usize, delay: f64, pulse: &Pulse) -> Vec<f64> {
    let d = delay / pulse.sample_interval;
    let span = pulse.span as i64;
    let mut col = vec![0.0; n];
    for nu in -span..(n as i64 + span) {
        col[nu.rem_euclid(n as i64) as usize] += pulse_response(nu as f64, d, pulse.rolloff);
    }
    col
}

/// `K = F·G` with `F[k, ν] = exp(-j2πkν/N)`, optionally restricted to the
/// pilot rows (`K^p`).
pub fn frequency_response(
    paths: &PathSet,
    n: usize,
    pulse: &Pulse,
    pilot_indices: Option<&[usize]>,
) -> CMatrix {
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let rows: Vec<usize> = match pilot_indices {
        Some(idx) => idx.to_vec(),
        None => (0..n).collect(),
    };
    let mut k = CMatrix::zeros(rows.len(), paths.len());
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for l in 0..paths.len() {
        for (b, g) in buf.iter_mut().zip(pulse_column(n, paths.delay[l], pulse)) {
            *b = C64::new(g, 0.0);
        }
        fft.process(&mut buf);
        for (r, &kk) in rows.iter().enumerate() {
            k[(r, l)] = buf[kk];
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::numerical_rank;
    use crate::rng::{stream, Purpose};
    use proptest::prelude::*;

    fn flat_scenario(l: usize) -> ScenarioConfig {
        ScenarioConfig {
            n_paths: l,
            n_dt_paths: 1,
            pdp_decay: 0.0,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn flat_profile_gives_equal_powers() {
        let p = generate_paths(
            &flat_scenario(4),
            &mut stream(3, 0, 0, Purpose::Environment),
        );
        for a in &p.amplitude {
            assert!((a * a - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn generator_is_deterministic_and_normalised() {
        let scen = ScenarioConfig::default();
        let a = generate_paths(&scen, &mut stream(11, 0, 0, Purpose::Environment));
        let b = generate_paths(&scen, &mut stream(11, 0, 0, Purpose::Environment));
        assert_eq!(a, b);
        assert_eq!(a.len(), 25);
        assert!((a.total_power() - 1.0).abs() < 1e-12);
        for l in 0..a.len() {
            assert!(a.delay[l] >= 0.0 && a.delay[l] <= scen.delay_spread);
            assert!(a.azimuth[l] >= scen.azimuth_range[0] && a.azimuth[l] <= scen.azimuth_range[1]);
            assert!(
                a.elevation[l] >= scen.elevation_range[0]
                    && a.elevation[l] <= scen.elevation_range[1]
            );
        }
    }

    #[test]
    fn truncation_examples() {
        let p = PathSet::new(
            vec![0.0; 3],
            vec![0.1, 0.2, 0.3],
            vec![3e-9, 2e-9, 1e-9],
            vec![0.8, 0.5, 0.33],
        )
        .unwrap();
        assert_eq!(dt_truncate(&p, 3).unwrap().len(), 3);
        let kept = dt_truncate(&p, 2).unwrap();
        assert_eq!(kept.amplitude, vec![0.8, 0.5]);
        assert_eq!(kept.azimuth, vec![0.1, 0.2]);

        let tie = PathSet::new(
            vec![0.0; 2],
            vec![0.1, 0.2],
            vec![5e-9, 1e-9],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert_eq!(dt_truncate(&tie, 1).unwrap().azimuth, vec![0.2]);
        assert!(dt_truncate(&tie, 3).is_err());

        let same = PathSet::new(
            vec![0.0; 2],
            vec![0.1, 0.2],
            vec![1e-9, 1e-9],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert_eq!(dt_truncate(&same, 1).unwrap().azimuth, vec![0.1]);
    }

    #[test]
    fn identity_truncation_keeps_set() {
        let p = generate_paths(
            &ScenarioConfig::default(),
            &mut stream(2, 0, 0, Purpose::Environment),
        );
        let t = dt_truncate(&p, p.len()).unwrap();
        let mut a: Vec<_> = p.delay.clone();
        let mut b: Vec<_> = t.delay.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
    }

    #[test]
    fn direction_vector_axes() {
        let close = |a: [f64; 3], b: [f64; 3]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15);
        assert!(close(direction_vector(0.0, 0.0), [1.0, 0.0, 0.0]));
        assert!(close(direction_vector(PI / 2.0, 0.3), [0.0, 0.0, 1.0]));
        assert!(close(direction_vector(PI / 2.0, 2.1), [0.0, 0.0, 1.0]));
        assert!(close(direction_vector(0.0, PI / 2.0), [0.0, 1.0, 0.0]));
    }

    #[test]
    fn steering_vector_examples() {
        let geom = ArrayGeometry::ula_x(4, 0.5, 0.01);
        let a = steering_vector([1.0, 0.0, 0.0], &geom);
        let expected = [1.0, -1.0, 1.0, -1.0];
        for (z, e) in a.iter().zip(expected) {
            assert!((z - C64::new(e, 0.0)).norm() < 1e-12);
        }
        let broadside = steering_vector([0.0, 1.0, 0.0], &geom);
        assert!(broadside
            .iter()
            .all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn steering_matrix_ranks() {
        let geom = ArrayGeometry::ula_x(64, 0.5, 0.01);
        let one = PathSet::single(0.1, 0.7, 0.0, 1.0);
        let a = steering_matrix(&one, &geom);
        assert_eq!(a.ncols(), 1);
        assert_eq!(
            a.column(0).into_owned(),
            steering_vector(direction_vector(0.1, 0.7), &geom)
        );

        let dup = PathSet::new(
            vec![0.1, 0.1],
            vec![0.7, 0.7],
            vec![0.0, 1e-8],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert_eq!(numerical_rank(&steering_matrix(&dup, &geom), 1e-8), 1);

        let az = vec![0.3, 0.9, 1.4, 2.0, 2.6];
        let five = PathSet::new(vec![0.0; 5], az, vec![0.0; 5], vec![1.0; 5]).unwrap();
        assert_eq!(numerical_rank(&steering_matrix(&five, &geom), 1e-8), 5);
    }

    #[test]
    fn pulse_examples() {
        for r in [0.0, 0.25, 0.5, 0.9] {
            assert_eq!(pulse_response(0.0, 0.0, r), 1.0);
        }
        for k in [-3.0, -1.0, 1.0, 2.0, 7.0] {
            assert!(pulse_response(k, 0.0, 0.0).abs() < 1e-15);
        }
        assert!((pulse_response(0.5, 0.0, 0.0) - 2.0 / PI).abs() < 1e-15);
        // removable singularity: continuity at t = 1/(2·rolloff)
        let at = raised_cosine(2.0, 0.25);
        let near = raised_cosine(2.0 + 1e-6, 0.25);
        assert!((at - near).abs() < 1e-5, "{at} vs {near}");
    }

    #[test]
    fn sinc_energy_is_one_for_fractional_delay() {
        for d in [0.0, 0.25, 0.5, 0.9] {
            let w = 1_000_000i64;
            let e: f64 = (-w..w)
                .map(|nu| pulse_response(nu as f64, d, 0.0).powi(2))
                .sum();
            assert!((e - 1.0).abs() < 1e-6, "d = {d}: {e}");
        }
    }

    fn pulse0(ts: f64) -> Pulse {
        Pulse {
            sample_interval: ts,
            rolloff: 0.0,
            span: 16,
        }
    }

    #[test]
    fn frequency_response_zero_delay_is_all_ones() {
        let ts = 1.0 / 30.72e6;
        let p = PathSet::single(0.0, 0.0, 0.0, 1.0);
        assert_eq!(pulse_column(64, 0.0, &pulse0(ts))[0], 1.0);
        let k = frequency_response(&p, 64, &pulse0(ts), None);
        assert!(k.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn frequency_response_shift_theorem() {
        let ts = 1.0 / 30.72e6;
        let n = 64;
        for d in [1usize, 3, 7] {
            let p = PathSet::single(0.0, 0.0, d as f64 * ts, 1.0);
            let k = frequency_response(&p, n, &pulse0(ts), None);
            for kk in 0..n {
                let expected = C64::from_polar(1.0, -2.0 * PI * (kk * d) as f64 / n as f64);
                assert!((k[(kk, 0)] - expected).norm() < 1e-9, "d={d} k={kk}");
            }
        }
    }

    #[test]
    fn pilot_restriction() {
        let ts = 1.0 / 30.72e6;
        let p = generate_paths(
            &ScenarioConfig::default(),
            &mut stream(5, 0, 0, Purpose::Environment),
        );
        let pulse = Pulse {
            sample_interval: ts,
            rolloff: 0.25,
            span: 16,
        };
        let full = frequency_response(&p, 64, &pulse, None);
        let all: Vec<usize> = (0..64).collect();
        assert_eq!(frequency_response(&p, 64, &pulse, Some(&all)), full);
        let even: Vec<usize> = (0..32).map(|i| 2 * i).collect();
        let kp = frequency_response(&p, 64, &pulse, Some(&even));
        for (r, &row) in even.iter().enumerate() {
            assert_eq!(kp.row(r), full.row(row));
        }
    }

    #[test]
    fn csv_round_trip() {
        let p = generate_paths(
            &ScenarioConfig::default(),
            &mut stream(8, 0, 0, Purpose::Environment),
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("paths.csv");
        p.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("theta_rad,phi_rad,tau_s,alpha\n"));
        assert_eq!(PathSet::read_csv(&path).unwrap(), p);
    }

    proptest! {
        #[test]
        fn subspace_ranks_bounded(seed in any::<u64>(), n_paths in 1usize..12, n_rx in 1usize..10) {
            let scen = ScenarioConfig { n_paths, n_dt_paths: 1, ..ScenarioConfig::default() };
            let p = generate_paths(&scen, &mut stream(seed, 0, 0, Purpose::Environment));
            let geom = ArrayGeometry::ula_x(n_rx, 0.5, 0.01);
            let a = steering_matrix(&p, &geom);
            prop_assert!(numerical_rank(&a, 1e-8) <= n_rx.min(n_paths));
            let pilots: Vec<usize> = (0..8).map(|i| 8 * i).collect();
            let kp = frequency_response(&p, 64, &Pulse { sample_interval: 1.0 / 30.72e6, rolloff: 0.25, span: 16 }, Some(&pilots));
            prop_assert!(numerical_rank(&kp, 1e-8) <= 8.min(n_paths));
        }

        #[test]
        fn truncation_is_sub_multiset(seed in any::<u64>(), keep in 1usize..25) {
            let p = generate_paths(&ScenarioConfig::default(), &mut stream(seed, 0, 0, Purpose::Environment));
            let t = dt_truncate(&p, keep).unwrap();
            prop_assert_eq!(t.len(), keep);
            for l in 0..t.len() {
                let found = (0..p.len()).any(|i| p.delay[i] == t.delay[l] && p.azimuth[i] == t.azimuth[l]
                    && p.elevation[i] == t.elevation[l] && p.amplitude[i] == t.amplitude[l]);
                prop_assert!(found);
            }
            let weakest_kept = t.amplitude.iter().cloned().fold(f64::INFINITY, f64::min);
            let dropped = p.amplitude.iter().filter(|a| **a > weakest_kept).count();
            prop_assert!(dropped <= keep);
        }
    }
}
