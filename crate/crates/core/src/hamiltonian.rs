//! Problem Hamiltonians represented by their sorted eigenbasis.
//!
//! Only the ordinal position of the eigenvalues enters the algorithm, so a
//! Hamiltonian is stored as the unitary `U` whose k-th column is the k-th eigenvector
//! together with ascending eigenvalues (by default `1, 2, ..., 2^c`).

use std::cmp::Ordering;
use std::io::{BufRead, Write};
use std::path::Path;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{QgaError, Result};
use crate::linalg::{unitarity_defect, CMatrix, CVector, C64};
use crate::random::{haar_unitary, RngStream};
use crate::state::{PureState, UNITARY_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemHamiltonian {
    c: usize,
    basis: CMatrix,
    eigenvalues: Vec<f64>,
    seed: Option<u64>,
}

impl ProblemHamiltonian {
    /// Diagonal Hamiltonian with `eps_k = k`, `k = 1..=2^c`.
    pub fn computational(c: usize) -> Self {
        assert!(c >= 1, "a register needs at least one qubit");
        let d = 1usize << c;
        Self {
            c,
            basis: CMatrix::identity(d, d),
            eigenvalues: (1..=d).map(|k| k as f64).collect(),
            seed: None,
        }
    }

    /// `U H_C U†` with `U` Haar-random.
    pub fn random(c: usize, rng: &mut RngStream) -> Self {
        assert!(c >= 1, "a register needs at least one qubit");
        let seed = rng.seed();
        let basis = haar_unitary(1 << c, rng);
        Self { seed: Some(seed), ..Self::from_basis_unchecked(c, basis) }
    }

    /// Hamiltonian with the given eigenbasis (columns of `basis`) and `eps_k = k`.
    pub fn from_basis(c: usize, basis: CMatrix) -> Result<Self> {
        let d = 1usize << c;
        if basis.nrows() != d || basis.ncols() != d {
            return Err(QgaError::Range(format!(
                "basis is {}x{}, expected {d}x{d}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        let defect = unitarity_defect(&basis);
        if defect > UNITARY_TOL {
            return Err(QgaError::Contract(format!("basis is not unitary (defect {defect:.3e})")));
        }
        Ok(Self::from_basis_unchecked(c, basis))
    }

    fn from_basis_unchecked(c: usize, basis: CMatrix) -> Self {
        Self { basis, ..Self::computational(c) }
    }

    /// Replaces the spectrum with another strictly ascending sequence.
    pub fn with_eigenvalues(mut self, eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.len() != self.dim() {
            return Err(QgaError::Range(format!(
                "{} eigenvalues given for dimension {}",
                eigenvalues.len(),
                self.dim()
            )));
        }
        if eigenvalues.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less)) {
            return Err(QgaError::Contract("eigenvalues must be strictly ascending".into()));
        }
        self.eigenvalues = eigenvalues;
        Ok(self)
    }

    pub fn qubits(&self) -> usize {
        self.c
    }

    pub fn dim(&self) -> usize {
        1 << self.c
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn is_computational(&self) -> bool {
        self.basis == CMatrix::identity(self.dim(), self.dim())
    }

    /// `H_P = U diag(eps) U†`.
    pub fn matrix(&self) -> CMatrix {
        let diag = CVector::from_iterator(self.dim(), self.eigenvalues.iter().map(|&e| C64::new(e, 0.0)));
        &self.basis * CMatrix::from_diagonal(&diag) * self.basis.adjoint()
    }

    /// Eigenvector `|u_k>` (0-based `k`).
    pub fn eigenvector(&self, k: usize) -> PureState {
        PureState::normalized(self.basis.column(k).into_owned()).expect("unitary columns are unit vectors")
    }

    /// `|u_1>`, the target of the optimisation.
    pub fn ground_state(&self) -> PureState {
        self.eigenvector(0)
    }

    /// Energy comparison of eigenvector indices (0-based).
    pub fn index_energy_order(&self, k: usize, other: usize) -> Ordering {
        self.eigenvalues[k].total_cmp(&self.eigenvalues[other])
    }

    /// Row-major `U`, interleaved real/imaginary parts, little-endian `f64`.
    pub fn payload(&self) -> Vec<u8> {
        let d = self.dim();
        let mut bytes = Vec::with_capacity(d * d * 16);
        for i in 0..d {
            for j in 0..d {
                let z = self.basis[(i, j)];
                bytes.extend_from_slice(&z.re.to_le_bytes());
                bytes.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        bytes
    }

    /// Hex SHA-256 of [`payload`](Self::payload).
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.payload()))
    }

    /// `.ham` encoding: a JSON header line followed by the base64 payload line.
    pub fn to_ham_string(&self) -> String {
        let payload = self.payload();
        let header = HamHeader { c: self.c, seed: self.seed, hash: hex::encode(Sha256::digest(&payload)) };
        let header = serde_json::to_string(&header).expect("header serialises");
        format!("{header}\n{}\n", base64::engine::general_purpose::STANDARD.encode(payload))
    }

    pub fn from_ham_str(text: &str) -> Result<Self> {
        Self::read_ham(text.as_bytes())
    }

    pub fn read_ham(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines();
        let header_line = lines.next().ok_or_else(|| QgaError::Parse("empty .ham input".into()))??;
        let header: HamHeader = serde_json::from_str(&header_line)
            .map_err(|e| QgaError::Parse(format!("bad .ham header: {e}")))?;
        let payload_line = lines.next().ok_or_else(|| QgaError::Parse("missing .ham payload".into()))??;
        let payload = base64::engine::general_purpose::STANDARD
            .decode(payload_line.trim())
            .map_err(|e| QgaError::Parse(format!("bad .ham payload: {e}")))?;
        if header.c == 0 || header.c > crate::layout::MAX_QUBITS {
            return Err(QgaError::Parse(format!("unsupported register size c = {}", header.c)));
        }
        let d = 1usize << header.c;
        if payload.len() != d * d * 16 {
            return Err(QgaError::Parse(format!(
                "payload has {} bytes, expected {} for c = {}",
                payload.len(),
                d * d * 16,
                header.c
            )));
        }
        let hash = hex::encode(Sha256::digest(&payload));
        if hash != header.hash {
            return Err(QgaError::Parse(format!("content hash mismatch: header {}, payload {hash}", header.hash)));
        }
        let mut basis = CMatrix::zeros(d, d);
        for (idx, chunk) in payload.chunks_exact(16).enumerate() {
            let re = f64::from_le_bytes(chunk[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(chunk[8..].try_into().expect("8 bytes"));
            basis[(idx / d, idx % d)] = C64::new(re, im);
        }
        let h = Self::from_basis(header.c, basis).map_err(|e| QgaError::Parse(e.to_string()))?;
        Ok(Self { seed: header.seed, ..h })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_ham_string().as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_ham(std::io::BufReader::new(f))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct HamHeader {
    c: usize,
    seed: Option<u64>,
    hash: String,
}
