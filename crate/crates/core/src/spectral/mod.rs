//! Spectral analysis of the generation channel.
//!
//! Operators are vectorized by stacking columns, which is nalgebra's storage order, so
//! a channel with Kraus operators `E_k` has the superoperator `sum_k conj(E_k) ⊗ E_k`.
//! The leading eigenvalue of a trace-preserving channel is 1; its eigenvector,
//! normalized to unit trace, is the fixed point `Lambda`, and the largest magnitude
//! strictly inside the unit circle sets the asymptotic convergence rate.

mod arnoldi;
mod schur;

use serde::{Deserialize, Serialize};

pub use arnoldi::{krylov_schur, ArnoldiOptions};

use crate::channels::{generation_channel, Channel, MutationMode, Variant};
use crate::engine::qga_fidelity;
use crate::error::{QgaError, Result};
use crate::hamiltonian::ProblemHamiltonian;
use crate::layout::PopulationLayout;
use crate::linalg::{hermitize, trace_norm, CMatrix, CVector, C64};
use crate::state::PopulationState;

use schur::{eigen_order, schur, triangular_eigenvector};

/// Largest superoperator dimension that may be built densely by default.
pub const DEFAULT_DENSE_CAP: usize = 4096;
/// Eigenvalues this close to the unit circle count as fixed-point eigenvalues.
pub const UNIT_CIRCLE_TOL: f64 = 1e-8;
/// Number of eigenvalues analysed by default.
pub const DEFAULT_TOP_K: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: C64,
    /// Unit-norm eigenvector.
    pub vector: CVector,
    /// `||A x - lambda x||`.
    pub residual: f64,
}

/// Column-stacked `vec(m)`.
pub fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &CVector, dim: usize) -> Result<CMatrix> {
    if v.len() != dim * dim {
        return Err(QgaError::Range(format!("vector of length {} is not a {dim}x{dim} operator", v.len())));
    }
    Ok(CMatrix::from_column_slice(dim, dim, v.as_slice()))
}

/// `vec(T(unvec(v)))`.
pub fn vectorize_apply(channel: &Channel, v: &CVector) -> Result<CVector> {
    let dim = channel.layout().dim();
    let m = unvectorize(v, dim)?;
    Ok(vectorize(&channel.apply_owned(m)))
}

/// Dense matrix of any linear map on `dim x dim` operators.
pub fn dense_superoperator_of<F>(dim: usize, map: F) -> CMatrix
where
    F: Fn(CMatrix) -> CMatrix,
{
    let n = dim * dim;
    let mut out = CMatrix::zeros(n, n);
    for col in 0..n {
        let mut e = CMatrix::zeros(dim, dim);
        e.as_mut_slice()[col] = C64::new(1.0, 0.0);
        out.set_column(col, &vectorize(&map(e)));
    }
    out
}

/// Dense superoperator with the default size cap.
pub fn dense_superoperator(channel: &Channel) -> Result<CMatrix> {
    dense_superoperator_capped(channel, DEFAULT_DENSE_CAP)
}

pub fn dense_superoperator_capped(channel: &Channel, cap: usize) -> Result<CMatrix> {
    let dim = channel.layout().dim();
    if dim * dim > cap {
        return Err(QgaError::Size(format!(
            "superoperator of dimension {} exceeds the dense cap {cap}; use the matrix-free eigensolver",
            dim * dim
        )));
    }
    Ok(dense_superoperator_of(dim, |m| channel.apply_owned(m)))
}

/// All eigenpairs of a dense matrix, in descending magnitude.
pub fn dense_eigenpairs(a: &CMatrix) -> Vec<EigenPair> {
    let (q, t) = schur(a.clone());
    let mut pairs: Vec<EigenPair> = (0..a.nrows())
        .map(|k| {
            let mut x = &q * triangular_eigenvector(&t, k);
            let norm = x.norm();
            x.unscale_mut(norm);
            let value = t[(k, k)];
            let residual = (a * &x - &x * value).norm();
            EigenPair { value, vector: x, residual }
        })
        .collect();
    pairs.sort_by(|a, b| eigen_order(&a.value, &b.value));
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EigenMethod {
    /// Arnoldi, falling back to the dense solver under the size cap.
    #[default]
    Auto,
    Arnoldi,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    pub top_k: usize,
    pub method: EigenMethod,
    pub arnoldi: ArnoldiOptions,
    pub dense_cap: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { top_k: DEFAULT_TOP_K, method: EigenMethod::Auto, arnoldi: ArnoldiOptions::default(), dense_cap: DEFAULT_DENSE_CAP }
    }
}

fn dense_top(channel: &Channel, k: usize, cap: usize) -> Result<Vec<EigenPair>> {
    let mut pairs = dense_eigenpairs(&dense_superoperator_capped(channel, cap)?);
    pairs.truncate(k);
    Ok(pairs)
}

/// The `k` largest-magnitude eigenpairs of the channel's superoperator.
pub fn top_eigenpairs(channel: &Channel, k: usize) -> Result<Vec<EigenPair>> {
    top_eigenpairs_with(channel, &SpectralOptions { top_k: k, ..Default::default() })
}

pub fn top_eigenpairs_with(channel: &Channel, opts: &SpectralOptions) -> Result<Vec<EigenPair>> {
    let k = opts.top_k;
    if k < 2 {
        return Err(QgaError::Range(format!("top_k must be at least 2, got {k}")));
    }
    let dim = channel.layout().dim();
    let n = dim * dim;
    let arnoldi = || {
        krylov_schur(
            |v| vectorize(&channel.apply_owned(CMatrix::from_column_slice(dim, dim, v.as_slice()))),
            n,
            k,
            &opts.arnoldi,
        )
    };
    match opts.method {
        EigenMethod::Dense => dense_top(channel, k, opts.dense_cap),
        EigenMethod::Arnoldi => arnoldi(),
        EigenMethod::Auto => match arnoldi() {
            Err(QgaError::Convergence { .. }) if n <= opts.dense_cap => {
                log::warn!("Arnoldi did not converge; falling back to the dense eigensolver");
                dense_top(channel, k, opts.dense_cap)
            }
            other => other,
        },
    }
}

/// Fixed point and spectral summary of a channel.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    /// `Lambda`, Hermitian with unit trace.
    pub state: PopulationState,
    /// Number of computed eigenvalues with `|lambda| >= 1 - UNIT_CIRCLE_TOL`.
    pub multiplicity: usize,
    /// `||T(Lambda) - Lambda||_1`.
    pub residual: f64,
    /// Largest computed `|lambda|` strictly inside the unit circle.
    pub gamma: f64,
    /// Some unit-circle eigenvalue differs from 1.
    pub oscillating: bool,
    pub eigenvalues: Vec<C64>,
}

impl FixedPoint {
    pub fn degenerate(&self) -> bool {
        self.multiplicity > 1
    }
}

/// Extracts the fixed point from precomputed leading eigenpairs.
pub fn fixed_point_from(channel: &Channel, pairs: &[EigenPair]) -> Result<FixedPoint> {
    let layout = channel.layout();
    let dim = layout.dim();
    let on_circle = |z: &C64| z.norm() >= 1.0 - UNIT_CIRCLE_TOL;
    let multiplicity = pairs.iter().filter(|p| on_circle(&p.value)).count();
    let oscillating = pairs.iter().any(|p| on_circle(&p.value) && (p.value - 1.0).norm() > UNIT_CIRCLE_TOL);

    // Among eigenvalue-1 eigenvectors take the one with the largest trace; all others
    // are traceless for a trace-preserving map.
    let mut best: Option<CMatrix> = None;
    let mut best_trace = 0.0;
    for p in pairs.iter().filter(|p| (p.value - 1.0).norm() <= UNIT_CIRCLE_TOL) {
        let w = unvectorize(&p.vector, dim)?;
        let tr = w.trace().norm();
        if tr > best_trace {
            best_trace = tr;
            best = Some(w);
        }
    }
    let w = best.filter(|_| best_trace > 1e-12).ok_or_else(|| {
        QgaError::Contract("no eigenvector with eigenvalue 1 and nonzero trace among the computed pairs".into())
    })?;
    let tr = w.trace();
    let mut lambda = hermitize(&(w / tr));
    let tr = lambda.trace();
    lambda /= tr;
    let residual = trace_norm(&(channel.apply_owned(lambda.clone()) - &lambda));
    let gamma = pairs
        .iter()
        .map(|p| p.value.norm())
        .find(|&r| r < 1.0 - UNIT_CIRCLE_TOL)
        .unwrap_or_else(|| pairs.last().map_or(0.0, |p| p.value.norm()));
    Ok(FixedPoint {
        state: PopulationState::from_matrix(layout, lambda)?,
        multiplicity,
        residual,
        gamma,
        oscillating,
        eigenvalues: pairs.iter().map(|p| p.value).collect(),
    })
}

pub fn fixed_point(channel: &Channel) -> Result<FixedPoint> {
    fixed_point_from(channel, &top_eigenpairs(channel, DEFAULT_TOP_K)?)
}

/// `(F_inf, gamma)` predicted from the fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub f_inf: f64,
    pub gamma: f64,
    /// The fixed point is not unique, so the prediction depends on the start state.
    pub flagged: bool,
}

pub fn predict(channel: &Channel, h: &ProblemHamiltonian) -> Result<Prediction> {
    let fp = fixed_point(channel)?;
    Ok(Prediction { f_inf: qga_fidelity(&fp.state, h)?, gamma: fp.gamma, flagged: fp.degenerate() || fp.oscillating })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for Eigenvalue {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// Spectral analysis of one (Hamiltonian, variant) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub ham_hash: String,
    pub variant: Variant,
    pub eigenvalues: Vec<Eigenvalue>,
    pub m: usize,
    #[serde(rename = "F_inf")]
    pub f_inf: f64,
    pub gamma: f64,
    pub residual: f64,
    /// More than one eigenvalue on the unit circle.
    pub degenerate: bool,
    /// A unit-circle eigenvalue other than 1.
    pub oscillating: bool,
    /// Mutation was included; the reference analysis runs without it.
    pub with_mutation: bool,
    #[serde(skip)]
    pub fixed_point: Option<CMatrix>,
}

impl SpectralReport {
    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Builds the generation channel of `variant` and analyses it. Sampled mutation is
/// analysed through its ensemble average.
pub fn analyze(layout: PopulationLayout, h: &ProblemHamiltonian, variant: &Variant, opts: &SpectralOptions) -> Result<SpectralReport> {
    let channel = generation_channel(layout, h, variant)?;
    let pairs = top_eigenpairs_with(&channel, opts)?;
    let fp = fixed_point_from(&channel, &pairs)?;
    Ok(SpectralReport {
        ham_hash: h.content_hash(),
        variant: *variant,
        eigenvalues: fp.eigenvalues.iter().map(|&z| z.into()).collect(),
        m: fp.multiplicity,
        f_inf: qga_fidelity(&fp.state, h)?,
        gamma: fp.gamma,
        residual: fp.residual,
        degenerate: fp.degenerate(),
        oscillating: fp.oscillating,
        with_mutation: variant.mutation != MutationMode::Off,
        fixed_point: Some(fp.state.into_matrix()),
    })
}

#[cfg(test)]
mod tests;
