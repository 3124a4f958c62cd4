//! Population density matrices and pure states.

use crate::error::{QgaError, Result};
use crate::layout::PopulationLayout;
use crate::random::{haar_pure_state, RngStream};
use crate::linalg::{
    hermitian_eigenvalues, hermiticity_drift, hermitize, max_abs_diff, outer, reduce_to, tensor,
    unitarity_defect, CMatrix, CVector, Subsystem, C64,
};

/// Trace and Hermiticity tolerance for a valid population state.
pub const STATE_TOL: f64 = 1e-10;
/// Minimum eigenvalue accepted as nonnegative.
pub const POSITIVITY_TOL: f64 = 1e-9;
/// Tolerance on `u u† = I`.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance on Kraus completeness `sum E† E = I`.
pub const COMPLETENESS_TOL: f64 = 1e-9;

/// Normalised state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    vector: CVector,
}

impl PureState {
    pub fn new(vector: CVector) -> Result<Self> {
        let norm = vector.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(QgaError::Contract(format!("state vector has norm {norm}, expected 1")));
        }
        Ok(Self { vector })
    }

    /// Rescales `vector` to unit norm.
    pub fn normalized(vector: CVector) -> Result<Self> {
        let norm = vector.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QgaError::Contract("cannot normalise a zero vector".into()));
        }
        Ok(Self { vector: vector.unscale(norm) })
    }

    /// Computational basis vector `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Self { vector: v }
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    pub fn projector(&self) -> CMatrix {
        outer(&self.vector)
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        Self { vector: self.vector.kronecker(&other.vector) }
    }
}

/// Density matrix of an `n`-register population.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    layout: PopulationLayout,
    matrix: CMatrix,
}

impl PopulationState {
    /// Validated constructor: checks shape, unit trace, Hermiticity and positivity.
    pub fn new(layout: PopulationLayout, matrix: CMatrix) -> Result<Self> {
        let state = Self::from_matrix(layout, matrix)?;
        state.validate()?;
        Ok(state)
    }

    /// Shape-checked constructor without the spectral validation; used for channel
    /// outputs, which are valid by construction.
    pub fn from_matrix(layout: PopulationLayout, matrix: CMatrix) -> Result<Self> {
        let dim = layout.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(QgaError::Range(format!(
                "matrix is {}x{}, layout {layout} needs {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { layout, matrix })
    }

    pub fn pure(layout: PopulationLayout, psi: &PureState) -> Result<Self> {
        Self::from_matrix(layout, psi.projector())
    }

    /// `rho_1 ⊗ ... ⊗ rho_n`, one factor per register.
    pub fn product(layout: PopulationLayout, factors: &[CMatrix]) -> Result<Self> {
        if factors.len() != layout.registers() {
            return Err(QgaError::Range(format!(
                "{} factors given for {} registers",
                factors.len(),
                layout.registers()
            )));
        }
        let matrix = factors[1..].iter().fold(factors[0].clone(), |acc, f| tensor(&acc, f));
        Self::from_matrix(layout, matrix)
    }

    pub fn maximally_mixed(layout: PopulationLayout) -> Self {
        let dim = layout.dim();
        Self { layout, matrix: CMatrix::identity(dim, dim).unscale(dim as f64) }
    }

    /// Random mixture of `rank` Haar pure states with uniformly drawn weights.
    pub fn random_mixed(layout: PopulationLayout, rank: usize, rng: &mut RngStream) -> Self {
        let dim = layout.dim();
        let weights: Vec<f64> = (0..rank.max(1)).map(|_| rng.uniform() + 1e-3).collect();
        let total: f64 = weights.iter().sum();
        let mut m = CMatrix::zeros(dim, dim);
        for w in weights {
            m += haar_pure_state(dim, rng).projector() * C64::new(w / total, 0.0);
        }
        Self { layout, matrix: hermitize(&m) }
    }

    pub fn layout(&self) -> PopulationLayout {
        self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn hermiticity_drift(&self) -> f64 {
        hermiticity_drift(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix)[0]
    }

    pub fn validate(&self) -> Result<()> {
        validate_density(&self.matrix)
    }

    /// Reduced density matrix on `keep` (0-based register indices, output ordered by
    /// ascending register index).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<CMatrix> {
        partial_trace(self.layout, &self.matrix, keep)
    }

    /// `u rho u†` for a population-wide unitary `u`.
    pub fn apply_unitary(&self, u: &CMatrix) -> Result<Self> {
        check_square(u, self.layout.dim())?;
        let defect = unitarity_defect(u);
        if defect > UNITARY_TOL {
            return Err(QgaError::Contract(format!("operator is not unitary (defect {defect:.3e})")));
        }
        Ok(Self { layout: self.layout, matrix: u * &self.matrix * u.adjoint() })
    }

    /// `sum_k E_k rho E_k†`.
    pub fn apply_kraus(&self, kraus: &[CMatrix]) -> Result<Self> {
        check_completeness(kraus, self.layout.dim())?;
        let mut out = CMatrix::zeros(self.layout.dim(), self.layout.dim());
        for e in kraus {
            out += e * &self.matrix * e.adjoint();
        }
        Ok(Self { layout: self.layout, matrix: out })
    }
}

/// Unit trace, Hermitian and positive semidefinite within the crate tolerances.
pub fn validate_density(m: &CMatrix) -> Result<()> {
    let tr = m.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > STATE_TOL {
        return Err(QgaError::Contract(format!("trace {tr} differs from 1")));
    }
    let drift = hermiticity_drift(m);
    if drift > STATE_TOL {
        return Err(QgaError::Contract(format!("not Hermitian (drift {drift:.3e})")));
    }
    let min = hermitian_eigenvalues(m)[0];
    if min < -POSITIVITY_TOL {
        return Err(QgaError::Contract(format!("negative eigenvalue {min:.3e}")));
    }
    Ok(())
}

fn check_square(m: &CMatrix, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(QgaError::Range(format!(
            "operator is {}x{}, expected {dim}x{dim}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Largest entrywise deviation of `sum_k E_k† E_k` from the identity.
pub fn completeness_defect(kraus: &[CMatrix]) -> f64 {
    let dim = kraus.first().map_or(0, |e| e.ncols());
    let mut sum = CMatrix::zeros(dim, dim);
    for e in kraus {
        sum += e.adjoint() * e;
    }
    max_abs_diff(&sum, &CMatrix::identity(dim, dim))
}

fn check_completeness(kraus: &[CMatrix], dim: usize) -> Result<()> {
    if kraus.is_empty() {
        return Err(QgaError::Contract("empty Kraus set".into()));
    }
    for e in kraus {
        check_square(e, dim)?;
    }
    let defect = completeness_defect(kraus);
    if defect > COMPLETENESS_TOL {
        return Err(QgaError::Contract(format!(
            "Kraus operators are not complete (defect {defect:.3e})"
        )));
    }
    Ok(())
}

/// Partial trace of any population operator onto the registers in `keep`.
pub fn partial_trace(layout: PopulationLayout, m: &CMatrix, keep: &[usize]) -> Result<CMatrix> {
    check_square(m, layout.dim())?;
    if keep.is_empty() {
        return Err(QgaError::Range("partial trace must keep at least one register".into()));
    }
    let mut regs = keep.to_vec();
    regs.sort_unstable();
    regs.dedup();
    for &r in &regs {
        layout.check_register(r)?;
    }
    let sub = Subsystem::new(layout.total_qubits(), &layout.qubits_of(&regs));
    Ok(reduce_to(m, &sub))
}

/// `<psi| rho |psi>`.
pub fn fidelity_pure(rho: &CMatrix, psi: &PureState) -> Result<f64> {
    if rho.nrows() != psi.dim() || rho.ncols() != psi.dim() {
        return Err(QgaError::Range(format!(
            "density matrix is {}x{}, state has dimension {}",
            rho.nrows(),
            rho.ncols(),
            psi.dim()
        )));
    }
    let v = psi.vector();
    Ok((v.adjoint() * rho * v)[(0, 0)].re)
}
