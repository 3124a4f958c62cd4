//! Seeded random streams and Haar sampling.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::linalg::{CMatrix, CVector, C64};
use crate::state::PureState;

/// A reproducible random stream.
///
/// Streams are split by [`derive`](Self::derive), which hashes the parent seed with a
/// tag; the child never depends on how many draws the parent has made, so workers can
/// derive their own streams in any order.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha20Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, rng: ChaCha20Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream identified by `tag`.
    pub fn derive(&self, tag: u64) -> Self {
        Self::new(splitmix64(self.seed ^ splitmix64(tag)))
    }

    /// Child stream identified by a path of tags.
    pub fn derive_path(&self, tags: &[u64]) -> Self {
        tags.iter().fold(self.clone(), |s, &t| s.derive(t))
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Complex Gaussian with `E|z|^2 = 1`.
    pub fn complex_normal(&mut self) -> C64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let re = self.standard_normal();
        let im = self.standard_normal();
        C64::new(re * s, im * s)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Ginibre matrix: i.i.d. complex standard normal entries, drawn row by row.
pub fn ginibre(dim: usize, rng: &mut RngStream) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = rng.complex_normal();
        }
    }
    m
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of `diag(R)`
/// moved into `Q`.
pub fn haar_unitary(dim: usize, rng: &mut RngStream) -> CMatrix {
    assert!(dim >= 1, "Haar unitary needs a positive dimension");
    let qr = ginibre(dim, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-random pure state: a normalised complex Gaussian vector.
pub fn haar_pure_state(dim: usize, rng: &mut RngStream) -> PureState {
    assert!(dim >= 1, "Haar state needs a positive dimension");
    let v = CVector::from_iterator(dim, (0..dim).map(|_| rng.complex_normal()));
    PureState::normalized(v).expect("Gaussian vector is almost surely nonzero")
}
