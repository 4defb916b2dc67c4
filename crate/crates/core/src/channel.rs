//! Fast fading, channel assembly, exact channel covariance and the noisy
//! pilot observation model `Y^p = H^p·diag(x^p) + W^p`.

use rand::Rng;

use crate::linalg::{kron_vec, trace};
use crate::propagation::{frequency_response, steering_matrix, ArrayGeometry, PathSet, Pulse};
use crate::rng::complex_gaussian;
use crate::scenario::PilotPattern;
use crate::{CMatrix, CVector, Error, Result, C64};

/// Per-symbol complex path gains `c_l[m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingVector {
    pub c: CVector,
}

/// `c_l = α_l·(g₁ + j·g₂)/√2`, independent across paths.
pub fn draw_fading<R: Rng + ?Sized>(amplitudes: &[f64], rng: &mut R) -> FadingVector {
    FadingVector {
        c: CVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|&a| complex_gaussian(rng, 1.0) * a),
        ),
    }
}

/// Space-frequency channel `H[m]`, `N_rx × N` or `N_rx × N_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: CMatrix,
    pub symbol_index: u64,
}

impl ChannelRealization {
    /// Columns at the given subcarriers.
    pub fn restrict(&self, indices: &[usize]) -> ChannelRealization {
        ChannelRealization {
            h: self.h.select_columns(indices),
            symbol_index: self.symbol_index,
        }
    }
}

/// `H = A·diag(c)·Kᵀ`.
pub fn assemble_channel(
    a: &CMatrix,
    fading: &FadingVector,
    k: &CMatrix,
) -> Result<ChannelRealization> {
    let l = fading.c.len();
    if a.ncols() != l || k.ncols() != l {
        return Err(Error::dims(
            "assemble_channel",
            format!("{l} paths"),
            format!("A has {} columns, K has {}", a.ncols(), k.ncols()),
        ));
    }
    let mut ac = a.clone();
    for (mut col, &c) in ac.column_iter_mut().zip(fading.c.iter()) {
        col *= c;
    }
    Ok(ChannelRealization {
        h: ac * k.transpose(),
        symbol_index: 0,
    })
}

/// Covariance of `h^p = vec{H^p}` in factored form `Φ·diag(α²)·Φᴴ`, with
/// column `l` of `Φ` equal to `k^p_l ⊗ a_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCovariance {
    pub factor: CMatrix,
    pub powers: Vec<f64>,
    pub n_rx: usize,
    pub n_pilots: usize,
}

impl ChannelCovariance {
    /// Builds the factor from steering (`N_rx × L`) and pilot-row frequency
    /// responses (`N_p × L`).
    pub fn from_responses(a: &CMatrix, kp: &CMatrix, powers: &[f64]) -> Result<Self> {
        let l = powers.len();
        if a.ncols() != l || kp.ncols() != l {
            return Err(Error::dims(
                "channel_covariance",
                format!("{l} paths"),
                format!("A has {} columns, K^p has {}", a.ncols(), kp.ncols()),
            ));
        }
        let cols: Vec<CVector> = (0..l)
            .map(|i| kron_vec(&kp.column(i).into_owned(), &a.column(i).into_owned()))
            .collect();
        let factor = if cols.is_empty() {
            CMatrix::zeros(a.nrows() * kp.nrows(), 0)
        } else {
            CMatrix::from_columns(&cols)
        };
        Ok(Self {
            factor,
            powers: powers.to_vec(),
            n_rx: a.nrows(),
            n_pilots: kp.nrows(),
        })
    }

    /// `N_rx·N_p`.
    pub fn dim(&self) -> usize {
        self.n_rx * self.n_pilots
    }

    /// `Tr{R^p} = Σ_l α²_l·‖φ_l‖²`.
    pub fn trace(&self) -> f64 {
        self.factor
            .column_iter()
            .zip(&self.powers)
            .map(|(col, p)| p * col.norm_squared())
            .sum()
    }

    /// Dense `(N_rx·N_p)²` matrix. Quadratic in memory; meant for small
    /// cases and cross-checks.
    pub fn to_dense(&self) -> CMatrix {
        let mut weighted = self.factor.clone();
        for (mut col, &p) in weighted.column_iter_mut().zip(&self.powers) {
            col *= C64::new(p, 0.0);
        }
        weighted * self.factor.adjoint()
    }
}

/// Exact `R^p` for the given environment and pilot rows.
pub fn channel_covariance(
    paths: &PathSet,
    geom: &ArrayGeometry,
    pulse: &Pulse,
    n_subcarriers: usize,
    pilot_indices: &[usize],
) -> Result<ChannelCovariance> {
    let a = steering_matrix(paths, geom);
    let kp = frequency_response(paths, n_subcarriers, pulse, Some(pilot_indices));
    ChannelCovariance::from_responses(&a, &kp, &paths.powers())
}

/// `β = Tr{R^p}/(N_p·N_rx)`.
pub fn average_channel_gain(cov: &ChannelCovariance) -> f64 {
    cov.trace() / cov.dim() as f64
}

/// Same as [`average_channel_gain`] for a dense covariance.
pub fn average_channel_gain_dense(r: &CMatrix) -> f64 {
    trace(r).re / r.nrows() as f64
}

/// Received pilot observations.
#[derive(Debug, Clone, PartialEq)]
pub struct RxBlock {
    pub y: CMatrix,
    pub pilots: PilotPattern,
}

/// `Y^p = H^p·diag(x^p) + W^p` with `W^p` i.i.d. `CN(0, σ²_w)`.
pub fn simulate_uplink<R: Rng + ?Sized>(
    hp: &CMatrix,
    pilots: &PilotPattern,
    noise_variance: f64,
    rng: &mut R,
) -> Result<RxBlock> {
    if hp.ncols() != pilots.len() {
        return Err(Error::dims("simulate_uplink", pilots.len(), hp.ncols()));
    }
    if !(noise_variance >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be >= 0, got {noise_variance}"
        )));
    }
    let mut y = hp.clone();
    for (mut col, &x) in y.column_iter_mut().zip(&pilots.symbols) {
        col *= x;
    }
    if noise_variance > 0.0 {
        // column-major fill keeps the draw order independent of N_rx layout changes
        for z in y.iter_mut() {
            *z += complex_gaussian(rng, noise_variance);
        }
    }
    Ok(RxBlock {
        y,
        pilots: pilots.clone(),
    })
}
