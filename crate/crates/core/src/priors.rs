//! Subspace bases and projectors.
//!
//! The twin prior takes the `L̄` known paths, builds `Ā` (array responses)
//! and `K̄^p` (pilot-row frequency responses) and keeps their dominant left
//! singular vectors. The batch-ML baseline instead estimates both bases
//! from sample covariances of `N_TB` noisy LS snapshots.
//!
//! Projectors act on an `N_rx × N_p` channel as `Π_S·H·Π_T`, so the
//! temporal projector is built from the conjugated basis:
//! `Π_T = Ū_T*·Ū_Tᵀ`.

use crate::linalg::{hermitian_eigen, orthonormal_basis, orthonormality_deviation, trace};
use crate::propagation::{frequency_response, steering_matrix, ArrayGeometry, PathSet, Pulse};
use crate::{CMatrix, Error, Result};

/// Orthonormal spatial (`N_rx × r̄_S`) and temporal (`N_p × r̄_T`) bases.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspacePrior {
    pub basis_spatial: CMatrix,
    pub basis_temporal: CMatrix,
}

impl SubspacePrior {
    /// Bases for the column spans of `Ā` and `K̄^p`.
    pub fn from_responses(a: &CMatrix, kp: &CMatrix, rel_tol: f64) -> Self {
        Self {
            basis_spatial: orthonormal_basis(a, rel_tol),
            basis_temporal: orthonormal_basis(kp, rel_tol),
        }
    }

    pub fn rank_spatial(&self) -> usize {
        self.basis_spatial.ncols()
    }

    pub fn rank_temporal(&self) -> usize {
        self.basis_temporal.ncols()
    }
}

/// The twin's prior from its truncated path set.
pub fn dt_subspace(
    paths_dt: &PathSet,
    geom: &ArrayGeometry,
    pulse: &Pulse,
    n_subcarriers: usize,
    pilot_indices: &[usize],
    rel_tol: f64,
) -> Result<SubspacePrior> {
    if paths_dt.is_empty() {
        return Err(Error::InvalidArgument("twin path set is empty".into()));
    }
    let a = steering_matrix(paths_dt, geom);
    let kp = frequency_response(paths_dt, n_subcarriers, pulse, Some(pilot_indices));
    Ok(SubspacePrior::from_responses(&a, &kp, rel_tol))
}

/// Spatial (`N_rx × N_rx`) and temporal (`N_p × N_p`) projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorPair {
    pub spatial: CMatrix,
    pub temporal: CMatrix,
}

const ORTHONORMAL_TOL: f64 = 1e-8;

/// `Π_S = Ū_S·Ū_Sᴴ`, `Π_T = Ū_T*·Ū_Tᵀ`.
pub fn make_projectors(prior: &SubspacePrior) -> Result<ProjectorPair> {
    for basis in [&prior.basis_spatial, &prior.basis_temporal] {
        let deviation = orthonormality_deviation(basis);
        if deviation > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
    }
    let us = &prior.basis_spatial;
    let ut = &prior.basis_temporal;
    Ok(ProjectorPair {
        spatial: us * us.adjoint(),
        temporal: ut.conjugate() * ut.transpose(),
    })
}

impl ProjectorPair {
    /// Identity projectors (the LS limit).
    pub fn identity(n_rx: usize, n_pilots: usize) -> Self {
        Self {
            spatial: CMatrix::identity(n_rx, n_rx),
            temporal: CMatrix::identity(n_pilots, n_pilots),
        }
    }

    /// `Π_S·H·Π_T`.
    pub fn apply(&self, h: &CMatrix) -> Result<CMatrix> {
        if h.nrows() != self.spatial.nrows() || h.ncols() != self.temporal.nrows() {
            return Err(Error::dims(
                "projection",
                format!("{}x{}", self.spatial.nrows(), self.temporal.nrows()),
                format!("{}x{}", h.nrows(), h.ncols()),
            ));
        }
        Ok(&self.spatial * h * &self.temporal)
    }

    pub fn n_rx(&self) -> usize {
        self.spatial.nrows()
    }

    pub fn n_pilots(&self) -> usize {
        self.temporal.nrows()
    }

    /// `r̄_S = Tr{Π_S}`.
    pub fn rank_spatial(&self) -> f64 {
        trace(&self.spatial).re
    }

    pub fn rank_temporal(&self) -> f64 {
        trace(&self.temporal).re
    }

    /// Dense `Q = Π_Tᵀ ⊗ Π_S`, `(N_rx·N_p)²` entries.
    pub fn kron_q(&self) -> CMatrix {
        crate::linalg::kron(&self.temporal.transpose(), &self.spatial)
    }

    /// `Tr{Q} = Tr{Π_T}·Tr{Π_S}` without forming `Q`.
    pub fn trace_q(&self) -> f64 {
        (trace(&self.temporal) * trace(&self.spatial)).re
    }

    /// `Tr{Q·Qᴴ} = ‖Π_T‖²_F·‖Π_S‖²_F` without forming `Q`.
    pub fn trace_q_qh(&self) -> f64 {
        self.temporal.norm_squared() * self.spatial.norm_squared()
    }
}

/// Batch-ML projectors from `N_TB` pilot-grid LS snapshots.
///
/// `R̂_S = (1/N_TB)·Σ Ĥ·Ĥᴴ` and `R̂_T = (1/N_TB)·Σ Ĥᵀ·Ĥ*`; the bases are
/// their top `r_S` and `r_T` eigenvectors.
pub fn bml_subspace(
    ls_batch: &[CMatrix],
    rank_spatial: usize,
    rank_temporal: usize,
) -> Result<ProjectorPair> {
    make_projectors(&bml_prior(ls_batch, rank_spatial, rank_temporal)?)
}

/// Bases behind [`bml_subspace`].
pub fn bml_prior(
    ls_batch: &[CMatrix],
    rank_spatial: usize,
    rank_temporal: usize,
) -> Result<SubspacePrior> {
    let first = ls_batch
        .first()
        .ok_or_else(|| Error::InvalidArgument("batch-ML needs at least one snapshot".into()))?;
    let (n_rx, n_p) = first.shape();
    if rank_spatial > n_rx || rank_temporal > n_p {
        return Err(Error::InvalidArgument(format!(
            "requested ranks ({rank_spatial}, {rank_temporal}) exceed snapshot dimensions ({n_rx}, {n_p})"
        )));
    }
    let mut rs = CMatrix::zeros(n_rx, n_rx);
    let mut rt = CMatrix::zeros(n_p, n_p);
    for h in ls_batch {
        if h.shape() != (n_rx, n_p) {
            return Err(Error::dims(
                "bml_subspace",
                format!("{n_rx}x{n_p}"),
                format!("{}x{}", h.nrows(), h.ncols()),
            ));
        }
        rs += h * h.adjoint();
        rt += h.transpose() * h.conjugate();
    }
    let scale = crate::C64::new(1.0 / ls_batch.len() as f64, 0.0);
    rs *= scale;
    rt *= scale;
    let (_, vs) = hermitian_eigen(&rs);
    let (_, vt) = hermitian_eigen(&rt);
    Ok(SubspacePrior {
        basis_spatial: vs.columns(0, rank_spatial).into_owned(),
        basis_temporal: vt.columns(0, rank_temporal).into_owned(),
    })
}
