//! Van-der-Waals coupling matrix and the quadratic spin-wave Hamiltonian.
//!
//! After the Holstein–Primakoff rotation around the dressed ground state the
//! quadratic Hamiltonian is diagonalized by the eigenvectors of the coupling
//! matrix V: collective modes b†_i = Σ_k M_ki a†_k with single-excitation
//! energies ε_i = 2Ω + D_i/2 on top of the vacuum energy E₀.

use ndarray::{Array1, Array2};
use std::ops::Range;

use crate::error::{CoreError, Result};
use crate::lattice::Lattice;
use crate::linalg;

/// Symmetric matrix of pair interactions V_km = (a/|r_k − r_m|)⁶ in units of
/// the nearest-neighbor energy V^nn. The diagonal is zero.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    pub v: Array2<f64>,
}

impl CouplingMatrix {
    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    /// Row sums W_k = Σ_m V_km.
    pub fn row_sums(&self) -> Array1<f64> {
        self.v.sum_axis(ndarray::Axis(1))
    }
}

/// Laser parameters in units of V^nn.
#[derive(Debug, Clone, Copy)]
pub struct ModelParams {
    /// Rabi frequency Ω; the dominant scale (Ω ≫ V^nn).
    pub omega: f64,
    /// Static detuning Δ.
    pub delta: f64,
    /// Amplitude Δ₀ of the oscillating detuning drive.
    pub delta0: f64,
}

impl ModelParams {
    pub fn new(omega: f64, delta: f64, delta0: f64) -> Self {
        ModelParams { omega, delta, delta0 }
    }
}

/// Eigendecomposition of the coupling matrix.
///
/// Eigenvalues ascend; eigenvector columns are orthonormal and sign-gauged so
/// each column sum is non-negative (ties broken by the first sizable
/// component). Quasi-degenerate eigenvalues are grouped into `clusters`,
/// index ranges over adjacent eigenvalues closer than 1e-9·max(1, max|D|).
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub d: Array1<f64>,
    pub m: Array2<f64>,
    pub clusters: Vec<Range<usize>>,
}

impl EigenSystem {
    pub fn n(&self) -> usize {
        self.d.len()
    }

    /// Column sums S_i = Σ_k M_ki; the coupling of mode i to uniform drive.
    pub fn mode_sums(&self) -> Array1<f64> {
        self.m.sum_axis(ndarray::Axis(0))
    }

    /// Index of the cluster containing mode `i`.
    pub fn cluster_of(&self, i: usize) -> usize {
        self.clusters
            .iter()
            .position(|r| r.contains(&i))
            .expect("clusters cover all modes")
    }
}

/// Build V_km = 1/|r_k − r_m|⁶ (positions in units of a).
pub fn coupling_matrix(lattice: &Lattice) -> Result<CouplingMatrix> {
    let n = lattice.n();
    let mut v = Array2::<f64>::zeros((n, n));
    for k in 0..n {
        for m in (k + 1)..n {
            let mut d2 = 0.0;
            for ax in 0..3 {
                let d = lattice.positions[[k, ax]] - lattice.positions[[m, ax]];
                d2 += d * d;
            }
            if d2 == 0.0 {
                return Err(CoreError::CoincidentSites { i: k, j: m, dist: 0.0 });
            }
            let val = 1.0 / (d2 * d2 * d2);
            if !val.is_finite() {
                return Err(CoreError::CoincidentSites { i: k, j: m, dist: d2.sqrt() });
            }
            v[[k, m]] = val;
            v[[m, k]] = val;
        }
    }
    Ok(CouplingMatrix { v })
}

/// Relative tolerance defining degenerate eigenvalue clusters.
pub const CLUSTER_TOL: f64 = 1e-9;

/// Diagonalize the coupling matrix: ascending eigenvalues, gauge-fixed
/// orthonormal eigenvectors, and degeneracy clusters.
pub fn eigensystem(v: &CouplingMatrix) -> Result<EigenSystem> {
    let (d, mut m) = linalg::eigh_ascending(&v.v)?;
    linalg::gauge_columns(&mut m);
    let n = d.len();
    let scale = d.iter().fold(1.0_f64, |a, x| a.max(x.abs()));
    let tol = CLUSTER_TOL * scale;
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..n {
        if d[i] - d[i - 1] > tol {
            clusters.push(start..i);
            start = i;
        }
    }
    clusters.push(start..n);
    Ok(EigenSystem { d, m, clusters })
}

/// Vacuum energy E₀ = −N(Ω − Δ/2) + (1/4)Σ_{k≠m} V_km (ordered-pair sum).
pub fn ground_energy(params: &ModelParams, v: &CouplingMatrix) -> f64 {
    let n = v.n() as f64;
    let pair_sum: f64 = v.v.sum(); // ordered pairs; diagonal is zero
    -n * (params.omega - params.delta / 2.0) + 0.25 * pair_sum
}

/// Energies of the lowest manifolds in the collective-mode picture.
#[derive(Debug, Clone)]
pub struct ManifoldEnergies {
    pub e0: f64,
    /// ε_i = 2Ω + D_i/2.
    pub epsilon: Array1<f64>,
    /// E_{1_i} = E₀ + ε_i.
    pub one_boson: Array1<f64>,
    /// E_{2_ij} = E₀ + ε_i + ε_j (symmetric in i, j).
    pub two_boson: Array2<f64>,
}

/// Compute manifold energies from the eigensystem alone. The pair sum needed
/// for E₀ follows from the spectral identity Σ_{km} V_km = Σ_i D_i S_i².
pub fn manifold_energies(es: &EigenSystem, params: &ModelParams) -> ManifoldEnergies {
    let n = es.n();
    let s = es.mode_sums();
    let pair_sum: f64 = (0..n).map(|i| es.d[i] * s[i] * s[i]).sum();
    let e0 = -(n as f64) * (params.omega - params.delta / 2.0) + 0.25 * pair_sum;
    let epsilon = es.d.mapv(|di| 2.0 * params.omega + di / 2.0);
    let one_boson = epsilon.mapv(|e| e0 + e);
    let mut two_boson = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            two_boson[[i, j]] = e0 + epsilon[i] + epsilon[j];
        }
    }
    ManifoldEnergies { e0, epsilon, one_boson, two_boson }
}

/// States whose per-site boson density can be queried.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BosonState {
    /// |1_i⟩, one quantum in mode i (zero-based).
    One(usize),
    /// |2_jk⟩, one quantum each in modes j and k (j = k means a doubly
    /// occupied mode).
    Two(usize, usize),
}

/// Per-site densities ⟨a†_n a_n⟩ of a one- or two-boson collective state.
pub fn boson_density(es: &EigenSystem, state: BosonState) -> Result<Array1<f64>> {
    let n = es.n();
    let check = |i: usize| -> Result<()> {
        if i >= n {
            Err(CoreError::ModeIndex { index: i, n })
        } else {
            Ok(())
        }
    };
    match state {
        BosonState::One(i) => {
            check(i)?;
            Ok(es.m.column(i).mapv(|x| x * x))
        }
        BosonState::Two(j, k) => {
            check(j)?;
            check(k)?;
            let dj = es.m.column(j).mapv(|x| x * x);
            let dk = es.m.column(k).mapv(|x| x * x);
            Ok(dj + dk)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, LatticeSpec};
    use ndarray::array;

    fn dimer() -> Lattice {
        Lattice::from_positions(array![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap()
    }

    #[test]
    fn unit_distance_gives_unit_coupling() {
        let v = coupling_matrix(&dimer()).unwrap();
        assert_eq!(v.v[[0, 1]], 1.0);
        assert_eq!(v.v[[1, 0]], 1.0);
        assert_eq!(v.v[[0, 0]], 0.0);
    }

    #[test]
    fn square_diagonal_pair() {
        let lat = build_lattice(&LatticeSpec::square(2)).unwrap();
        let v = coupling_matrix(&lat).unwrap();
        // Sites 0=(0,0) and 3=(1,1) sit at distance √2 → (1/√2)⁶ = 1/8.
        assert!((v.v[[0, 3]] - 0.125).abs() < 1e-15);
        // Ideal lattice: largest off-diagonal entry is the nearest neighbor.
        let max = v.v.iter().cloned().fold(0.0_f64, f64::max);
        assert_eq!(max, 1.0);
    }

    #[test]
    fn coincident_sites_rejected() {
        let lat =
            Lattice::from_positions(array![[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(
            coupling_matrix(&lat),
            Err(CoreError::CoincidentSites { .. })
        ));
    }

    #[test]
    fn pair_sum_matches_direct_summation() {
        let lat = build_lattice(&LatticeSpec::square(3)).unwrap();
        let v = coupling_matrix(&lat).unwrap();
        // Independent direct sum over explicit positions.
        let mut direct = 0.0;
        for k in 0..9 {
            for m in 0..9 {
                if m == k {
                    continue;
                }
                let dx = lat.positions[[k, 0]] - lat.positions[[m, 0]];
                let dy = lat.positions[[k, 1]] - lat.positions[[m, 1]];
                direct += (dx * dx + dy * dy).powi(-3);
            }
        }
        assert!((v.v.sum() - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn dimer_eigensystem_analytic() {
        let v = coupling_matrix(&dimer()).unwrap();
        let es = eigensystem(&v).unwrap();
        assert!((es.d[0] + 1.0).abs() < 1e-14);
        assert!((es.d[1] - 1.0).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // Antisymmetric column gauged to start positive, symmetric all positive.
        assert!((es.m[[0, 0]] - r).abs() < 1e-14 && (es.m[[1, 0]] + r).abs() < 1e-14);
        assert!((es.m[[0, 1]] - r).abs() < 1e-14 && (es.m[[1, 1]] - r).abs() < 1e-14);
    }

    #[test]
    fn single_site_eigensystem() {
        let lat = build_lattice(&LatticeSpec::square(1)).unwrap();
        let es = eigensystem(&coupling_matrix(&lat).unwrap()).unwrap();
        assert_eq!(es.d[0], 0.0);
        assert_eq!(es.m[[0, 0]], 1.0);
    }

    #[test]
    fn eigensystem_invariants() {
        for spec in [LatticeSpec::square(3), LatticeSpec::square(7), LatticeSpec::triangular(7)] {
            let v = coupling_matrix(&build_lattice(&spec).unwrap()).unwrap();
            let es = eigensystem(&v).unwrap();
            let n = es.n();
            assert!(crate::linalg::orthonormality_residual(&es.m) < 1e-10);
            let dmax = es.d.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
            // Reconstruction ‖M diag(D) Mᵀ − V‖_max.
            let rec = es.m.dot(&Array2::from_diag(&es.d)).dot(&es.m.t());
            let mut worst = 0.0_f64;
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((rec[[i, j]] - v.v[[i, j]]).abs());
                }
            }
            assert!(worst < 1e-9 * dmax);
            // Zero trace and the Perron gauge of the top column.
            assert!(es.d.sum().abs() < 1e-9 * dmax);
            assert!(es.m.column(n - 1).iter().all(|x| *x >= -1e-12));
            // Clusters tile 0..n in order.
            let mut covered = 0;
            for c in &es.clusters {
                assert_eq!(c.start, covered);
                covered = c.end;
            }
            assert_eq!(covered, n);
        }
    }

    #[test]
    fn ground_energy_examples() {
        let p = ModelParams::new(20.0, 0.0, 1.0);
        let lat1 = build_lattice(&LatticeSpec::square(1)).unwrap();
        let v1 = coupling_matrix(&lat1).unwrap();
        assert_eq!(ground_energy(&p, &v1), -20.0);
        let pd = ModelParams::new(20.0, 0.4, 1.0);
        assert!((ground_energy(&pd, &v1) - (-20.0 + 0.2)).abs() < 1e-14);

        let v2 = coupling_matrix(&dimer()).unwrap();
        assert!((ground_energy(&p, &v2) - (-40.0 + 0.5)).abs() < 1e-14);

        // Pair sum route vs direct summation on the 7×7 lattice.
        let lat7 = build_lattice(&LatticeSpec::square(7)).unwrap();
        let v7 = coupling_matrix(&lat7).unwrap();
        let es7 = eigensystem(&v7).unwrap();
        let me = manifold_energies(&es7, &p);
        assert!((me.e0 - ground_energy(&p, &v7)).abs() < 1e-9);
    }

    #[test]
    fn manifold_energies_dimer() {
        let p = ModelParams::new(20.0, 0.0, 1.0);
        let es = eigensystem(&coupling_matrix(&dimer()).unwrap()).unwrap();
        let me = manifold_energies(&es, &p);
        assert!((me.epsilon[0] - 39.5).abs() < 1e-12);
        assert!((me.epsilon[1] - 40.5).abs() < 1e-12);
        assert!((me.one_boson[0] - (me.e0 + 39.5)).abs() < 1e-12);
        assert!((me.two_boson[[0, 1]] - (me.e0 + 80.0)).abs() < 1e-12);
        // Trace identity Σ ε_i = 2NΩ.
        assert!((me.epsilon.sum() - 80.0).abs() < 1e-12);
    }

    #[test]
    fn boson_densities() {
        let es = eigensystem(&coupling_matrix(&dimer()).unwrap()).unwrap();
        let d = boson_density(&es, BosonState::One(1)).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-14 && (d[1] - 0.5).abs() < 1e-14);
        let d2 = boson_density(&es, BosonState::Two(0, 1)).unwrap();
        assert!((d2.sum() - 2.0).abs() < 1e-12);
        assert!(boson_density(&es, BosonState::One(5)).is_err());
    }

    #[test]
    fn doubly_occupied_density_matches_tensor_expansion() {
        // |2_99⟩ on the 3×3 lattice: expand (b†₉)²|0⟩/√2 in site occupations
        // and evaluate ⟨a†_n a_n⟩ directly.
        let lat = build_lattice(&LatticeSpec::square(3)).unwrap();
        let es = eigensystem(&coupling_matrix(&lat).unwrap()).unwrap();
        let top = es.n() - 1;
        let m = es.m.column(top);
        // Amplitude of |..1_x..1_y..⟩ (x<y) is √2 M_x M_y; of |2_x⟩ is M_x².
        let n = es.n();
        let mut dens = vec![0.0; n];
        for x in 0..n {
            for y in x..n {
                let (amp, occ_x) = if x == y {
                    (m[x] * m[x], 2.0)
                } else {
                    (std::f64::consts::SQRT_2 * m[x] * m[y], 1.0)
                };
                dens[x] += amp * amp * occ_x;
                if y != x {
                    dens[y] += amp * amp;
                }
            }
        }
        let formula = boson_density(&es, BosonState::Two(top, top)).unwrap();
        for x in 0..n {
            assert!((formula[x] - dens[x]).abs() < 1e-12);
        }
        assert!((formula.sum() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_property() {
        // V → cV scales eigenvalues by c and keeps (non-degenerate) columns.
        let pos = array![
            [0.0, 0.0, 0.0],
            [1.0, 0.1, 0.0],
            [2.3, -0.2, 0.0],
            [0.7, 1.4, 0.0]
        ];
        let lat = Lattice::from_positions(pos).unwrap();
        let v = coupling_matrix(&lat).unwrap();
        let es = eigensystem(&v).unwrap();
        let scaled = CouplingMatrix { v: v.v.mapv(|x| 3.0 * x) };
        let es2 = eigensystem(&scaled).unwrap();
        for i in 0..es.n() {
            assert!((es2.d[i] - 3.0 * es.d[i]).abs() < 1e-10);
            for k in 0..es.n() {
                assert!((es2.m[[k, i]] - es.m[[k, i]]).abs() < 1e-8);
            }
        }
    }
}
