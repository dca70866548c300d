//! Square and triangular lattice geometries and positional disorder.
//!
//! All lengths are measured in units of the lattice spacing `a`. Ideal
//! lattices lie in the z = 0 plane; disorder displaces sites in all three
//! directions.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeKind {
    Square,
    Triangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    /// Sites per side, L.
    pub side: usize,
}

impl LatticeSpec {
    pub fn square(side: usize) -> Self {
        LatticeSpec { kind: LatticeKind::Square, side }
    }

    pub fn triangular(side: usize) -> Self {
        LatticeSpec { kind: LatticeKind::Triangular, side }
    }

    /// Number of sites: L² for the square, L(L+1)/2 for the triangle.
    pub fn sites(&self) -> usize {
        match self.kind {
            LatticeKind::Square => self.side * self.side,
            LatticeKind::Triangular => self.side * (self.side + 1) / 2,
        }
    }
}

/// A set of atom positions together with the ideal site centers they jitter
/// around. For an ideal lattice the two coincide bit-for-bit.
#[derive(Debug, Clone)]
pub struct Lattice {
    /// Regular geometry this lattice was generated from, if any. Lattices
    /// assembled directly from a point set carry `None`.
    pub spec: Option<LatticeSpec>,
    /// Current atom positions, N×3.
    pub positions: Array2<f64>,
    /// Ideal site centers, N×3.
    pub centers: Array2<f64>,
}

impl Lattice {
    pub fn n(&self) -> usize {
        self.positions.nrows()
    }

    /// True when every position still sits exactly on its center.
    pub fn is_ideal(&self) -> bool {
        self.positions
            .iter()
            .zip(self.centers.iter())
            .all(|(p, c)| p == c)
    }

    /// Wrap an explicit point set (N×3) as an ideal lattice. Used for ad-hoc
    /// geometries such as dimers or rectangular patches.
    pub fn from_positions(positions: Array2<f64>) -> Result<Lattice> {
        if positions.ncols() != 3 || positions.nrows() == 0 {
            return Err(CoreError::InvalidArgument(
                "positions must be a non-empty N×3 array".into(),
            ));
        }
        Ok(Lattice { spec: None, centers: positions.clone(), positions })
    }
}

/// Generate the ideal lattice for `spec`.
///
/// Site ordering is deterministic: row-major `(i, j)` for the square, and for
/// the triangle row-by-row starting from the base edge. Nearest-neighbor
/// separation is exactly 1.
pub fn build_lattice(spec: &LatticeSpec) -> Result<Lattice> {
    if spec.side == 0 {
        return Err(CoreError::InvalidSide);
    }
    let n = spec.sites();
    let mut pos = Array2::<f64>::zeros((n, 3));
    match spec.kind {
        LatticeKind::Square => {
            let l = spec.side;
            for i in 0..l {
                for j in 0..l {
                    let k = i * l + j;
                    pos[[k, 0]] = i as f64;
                    pos[[k, 1]] = j as f64;
                }
            }
        }
        LatticeKind::Triangular => {
            // Row r holds L - r sites at height r·√3/2, shifted by r/2 so all
            // nearest-neighbor bonds have unit length.
            let l = spec.side;
            let h = 3.0_f64.sqrt() / 2.0;
            let mut k = 0;
            for r in 0..l {
                for c in 0..(l - r) {
                    pos[[k, 0]] = 0.5 * r as f64 + c as f64;
                    pos[[k, 1]] = h * r as f64;
                    k += 1;
                }
            }
        }
    }
    Ok(Lattice { spec: Some(*spec), centers: pos.clone(), positions: pos })
}

/// Draw one positional-disorder realization around the lattice centers.
///
/// Each site is displaced by an isotropic 3D Gaussian of standard deviation
/// `sigma` per Cartesian axis. The random stream is a pure function of
/// `(master_seed, realization, site)`: every site uses its own counter-based
/// substream, so the result is independent of evaluation order and thread
/// count. `sigma = 0` returns the ideal positions bit-exactly.
pub fn apply_disorder(
    lattice: &Lattice,
    sigma: f64,
    realization: u64,
    master_seed: u64,
) -> Lattice {
    let mut out = lattice.clone();
    if sigma == 0.0 {
        out.positions = lattice.centers.clone();
        return out;
    }
    for k in 0..lattice.n() {
        let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
        rng.set_stream((realization << 32) | k as u64);
        for ax in 0..3 {
            let g: f64 = StandardNormal.sample(&mut rng);
            out.positions[[k, ax]] = lattice.centers[[k, ax]] + sigma * g;
        }
    }
    out
}
