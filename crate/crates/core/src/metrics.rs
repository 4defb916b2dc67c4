//! Error and throughput metrics.
//!
//! NMSE is measured on the pilot grid. The analytic NMSE of a projection
//! estimator splits into a subspace floor (channel energy outside the
//! projector's range) and a noise term (noise energy inside it).

use crate::channel::ChannelCovariance;
use crate::estimators::Method;
use crate::linalg::{norm_sq, unvec};
use crate::priors::ProjectorPair;
use crate::scenario::db_to_linear;
use crate::{CMatrix, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmseBreakdown {
    pub total: f64,
    /// Normalised energy outside `range(Q)`.
    pub subspace_floor: f64,
    pub noise_term: f64,
}

/// One point of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub method: Method,
    pub snr_db: f64,
    pub n_pilots: usize,
    pub nmse_empirical: Option<f64>,
    pub nmse_analytic: Option<NmseBreakdown>,
    /// bit/s/Hz.
    pub spectral_efficiency: Option<f64>,
    pub trials: usize,
}

/// Running `Σ‖Ĥ − H‖²_F` and `Σ‖H‖²_F`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NmseAccumulator {
    pub error: f64,
    pub energy: f64,
}

impl NmseAccumulator {
    pub fn add(&mut self, estimate: &CMatrix, truth: &CMatrix) {
        self.error += norm_sq(&(estimate - truth));
        self.energy += norm_sq(truth);
    }

    pub fn merge(mut self, other: NmseAccumulator) -> Self {
        self.error += other.error;
        self.energy += other.energy;
        self
    }

    pub fn nmse(&self) -> Result<f64> {
        if !(self.energy > 0.0) {
            return Err(Error::InvalidArgument(
                "total channel energy is zero".into(),
            ));
        }
        Ok(self.error / self.energy)
    }
}

/// `Σ‖Ĥ − H‖²_F / Σ‖H‖²_F` over `(estimate, truth)` pairs.
pub fn empirical_nmse<'a, I>(pairs: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a CMatrix, &'a CMatrix)>,
{
    let mut acc = NmseAccumulator::default();
    let mut count = 0;
    for (est, truth) in pairs {
        if est.shape() != truth.shape() {
            return Err(Error::dims(
                "empirical_nmse",
                format!("{:?}", truth.shape()),
                format!("{:?}", est.shape()),
            ));
        }
        acc.add(est, truth);
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidArgument(
            "empirical NMSE of an empty ensemble".into(),
        ));
    }
    acc.nmse()
}

/// Relative tolerance on the agreement of the two noise-term forms.
pub const NOISE_TERM_AGREEMENT: f64 = 1e-9;

/// Analytic NMSE of `Π_S·Ĥ_LS·Π_T` for a channel with covariance `R^p`.
///
/// The noise term is evaluated twice, as `σ²_w·Tr{QQᴴ}/(σ²_x·Tr{R^p})` and
/// as `r̄_S·r̄_T/(N_rx·N_p·SNR)`; the call fails if they disagree, which
/// happens when `σ²_w` does not correspond to `snr_db`.
pub fn analytic_nmse(
    proj: &ProjectorPair,
    cov: &ChannelCovariance,
    snr_db: f64,
    symbol_power: f64,
    noise_variance: f64,
) -> Result<NmseBreakdown> {
    let (n_rx, n_p) = (proj.n_rx(), proj.n_pilots());
    if cov.n_rx != n_rx || cov.n_pilots != n_p {
        return Err(Error::dims(
            "analytic_nmse",
            format!("{n_rx}x{n_p}"),
            format!("{}x{}", cov.n_rx, cov.n_pilots),
        ));
    }
    let tr_r = cov.trace();
    if !(tr_r > 0.0) {
        return Err(Error::InvalidArgument("covariance has zero trace".into()));
    }
    let subspace_floor = subspace_floor(proj, cov) / tr_r;
    let trace_form = noise_variance * proj.trace_q_qh() / (symbol_power * tr_r);
    let simplified = proj.trace_q() / ((n_rx * n_p) as f64 * db_to_linear(snr_db));
    let scale = trace_form.abs().max(simplified.abs());
    if (trace_form - simplified).abs() > NOISE_TERM_AGREEMENT * scale {
        return Err(Error::InvalidArgument(format!(
            "noise-term forms disagree: trace form {trace_form:.12e}, simplified {simplified:.12e}"
        )));
    }
    Ok(NmseBreakdown {
        total: subspace_floor + trace_form,
        subspace_floor,
        noise_term: trace_form,
    })
}

/// `Tr{Q⊥·R^p·Q⊥ᴴ} = Σ_l α²_l·‖φ_l − Q·φ_l‖²`, using
/// `Q·vec{X} = vec{Π_S·X·Π_T}`.
fn subspace_floor(proj: &ProjectorPair, cov: &ChannelCovariance) -> f64 {
    cov.factor
        .column_iter()
        .zip(&cov.powers)
        .map(|(phi, &p)| {
            let x = unvec(&phi.into_owned(), cov.n_rx, cov.n_pilots);
            let qx = &proj.spatial * &x * &proj.temporal;
            p * norm_sq(&(x - qx))
        })
        .sum()
}

/// Same floor through dense `Q` and `R^p`; for cross-checks on small sizes.
pub fn subspace_floor_dense(q: &CMatrix, r: &CMatrix) -> f64 {
    let q_perp = CMatrix::identity(q.nrows(), q.ncols()) - q;
    let m = &q_perp * r * q_perp.adjoint();
    crate::linalg::trace(&m).re / crate::linalg::trace(r).re
}

/// Per-subcarrier SNR at the decision variable.
///
/// Combiner `s_k = ĥ_kᴴ/‖ĥ_k‖` built from the estimate; the output SNR is
/// evaluated with the true channel: `σ²_x·|s_k·h_k|²/σ²_w`. A zero
/// estimate column gives zero SNR.
pub fn post_combining_snr(
    estimate: &CMatrix,
    truth: &CMatrix,
    symbol_power: f64,
    noise_variance: f64,
) -> Result<Vec<f64>> {
    if estimate.shape() != truth.shape() {
        return Err(Error::dims(
            "post_combining_snr",
            format!("{:?}", truth.shape()),
            format!("{:?}", estimate.shape()),
        ));
    }
    Ok(estimate
        .column_iter()
        .zip(truth.column_iter())
        .map(|(e, h)| {
            let en = e.norm_squared();
            if en == 0.0 {
                return 0.0;
            }
            symbol_power * e.dotc(&h).norm_sqr() / (en * noise_variance)
        })
        .collect())
}

/// Genie-aided spectral efficiency `(1/N)·Σ_k log₂(1 + SNR_k)`.
pub fn genie_spectral_efficiency(
    estimate: &CMatrix,
    truth: &CMatrix,
    symbol_power: f64,
    noise_variance: f64,
) -> Result<f64> {
    let snr = post_combining_snr(estimate, truth, symbol_power, noise_variance)?;
    Ok(snr.iter().map(|s| (1.0 + s).log2()).sum::<f64>() / snr.len().max(1) as f64)
}

/// Right-continuous empirical CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    /// Distinct sample values, ascending.
    pub thresholds: Vec<f64>,
    /// `P(X ≤ thresholds[i])`.
    pub fractions: Vec<f64>,
    sorted: Vec<f64>,
}

impl Ecdf {
    /// Fraction of samples `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }

    /// Smallest sample `s` with `eval(s) ≥ p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
        self.sorted[rank - 1]
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

pub fn ecdf(samples: &[f64]) -> Result<Ecdf> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("ECDF of an empty sample".into()));
    }
    if samples.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("ECDF sample contains NaN".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut thresholds = Vec::new();
    let mut fractions = Vec::new();
    for (i, &s) in sorted.iter().enumerate() {
        if i + 1 < sorted.len() && sorted[i + 1] == s {
            continue;
        }
        thresholds.push(s);
        fractions.push((i + 1) as f64 / n);
    }
    Ok(Ecdf {
        thresholds,
        fractions,
        sorted,
    })
}
