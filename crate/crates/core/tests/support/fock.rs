//! Brute-force evaluation of the second-order shifts on the bosonic Fock
//! space truncated at three quanta. The correction Hamiltonian is built as
//! dense site-basis operators, collective states as explicit polynomials of
//! collective raising operators, and the shift as a literal sum over
//! intermediate states — no code shared with the production contractions.

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use rydlat_core::hamiltonian::{coupling_matrix, eigensystem, CouplingMatrix};
use rydlat_core::lattice::Lattice;
use rydlat_core::perturbation::{shift_ground_closed_form, shift_one_boson};

const MAX_QUANTA: u32 = 3;

pub struct FockSpace {
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    n_sites: usize,
}

impl FockSpace {
    pub fn new(n_sites: usize) -> Self {
        let mut states = Vec::new();
        let mut current = vec![0u8; n_sites];
        fn rec(site: usize, budget: u32, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
            if site == current.len() {
                out.push(current.clone());
                return;
            }
            for q in 0..=budget {
                current[site] = q as u8;
                rec(site + 1, budget - q, current, out);
            }
            current[site] = 0;
        }
        rec(0, MAX_QUANTA, &mut current, &mut states);
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Self { states, index, n_sites }
    }

    fn dim(&self) -> usize {
        self.states.len()
    }

    /// Dense annihilation operator for site k.
    fn lowering(&self, k: usize) -> Array2<f64> {
        let d = self.dim();
        let mut m = Array2::<f64>::zeros((d, d));
        for (col, s) in self.states.iter().enumerate() {
            if s[k] == 0 {
                continue;
            }
            let mut t = s.clone();
            t[k] -= 1;
            let row = self.index[&t];
            m[[row, col]] = f64::from(s[k]).sqrt();
        }
        m
    }

    fn quanta(&self, idx: usize) -> u32 {
        self.states[idx].iter().map(|&q| u32::from(q)).sum()
    }
}

/// The boson-number-changing corrections, assembled directly from the
/// coupling matrix.
fn correction_hamiltonian(fs: &FockSpace, v: &CouplingMatrix) -> Array2<f64> {
    let n = fs.n_sites;
    let d = fs.dim();
    let low: Vec<Array2<f64>> = (0..n).map(|k| fs.lowering(k)).collect();
    let raise: Vec<Array2<f64>> = low.iter().map(|a| a.t().to_owned()).collect();
    let w = v.row_sums();

    let mut h = Array2::<f64>::zeros((d, d));
    for k in 0..n {
        // single-boson term, coefficient −W_k/2 on a†_k + a_k
        h.scaled_add(-w[k] / 2.0, &(&raise[k] + &low[k]));
        // cubic term, +W_k/2 on a†_k a†_k a_k + a†_k a_k a_k
        let up = raise[k].dot(&raise[k]).dot(&low[k]);
        let dn = raise[k].dot(&low[k]).dot(&low[k]);
        h.scaled_add(w[k] / 2.0, &(&up + &dn));
    }
    for k in 0..n {
        for m in 0..n {
            if m == k {
                continue;
            }
            let vkm = v.v[[k, m]];
            // pair term, V/4 on a†_k a†_m + a_k a_m
            h.scaled_add(vkm / 4.0, &raise[k].dot(&raise[m]));
            h.scaled_add(vkm / 4.0, &low[k].dot(&low[m]));
            // quartic term, +V/2 on a†_k a†_k a†_m a_k + a†_k a_k a_k a_m
            let up = raise[k].dot(&raise[k]).dot(&raise[m]).dot(&low[k]);
            let dn = raise[k].dot(&low[k]).dot(&low[k]).dot(&low[m]);
            h.scaled_add(vkm / 2.0, &up);
            h.scaled_add(vkm / 2.0, &dn);
        }
    }
    h
}

/// Columns = collective occupation states Π_i (b†_i)^{m_i}|0⟩/√(Π m_i!),
/// in the same order as the site-basis enumeration.
fn collective_basis(fs: &FockSpace, modes: &Array2<f64>) -> Array2<f64> {
    let n = fs.n_sites;
    let d = fs.dim();
    let low: Vec<Array2<f64>> = (0..n).map(|k| fs.lowering(k)).collect();
    let collective_raise: Vec<Array2<f64>> = (0..n)
        .map(|i| {
            let mut b = Array2::<f64>::zeros((d, d));
            for k in 0..n {
                b.scaled_add(modes[[k, i]], &low[k].t().to_owned());
            }
            b
        })
        .collect();

    let mut vac = Array1::<f64>::zeros(d);
    vac[fs.index[&vec![0u8; n]]] = 1.0;

    let mut cols = Array2::<f64>::zeros((d, d));
    for (j, occ) in fs.states.iter().enumerate() {
        let mut state = vac.clone();
        let mut norm2 = 1.0;
        for (i, &q) in occ.iter().enumerate() {
            for rep in 0..q {
                state = collective_raise[i].dot(&state);
                norm2 *= f64::from(rep) + 1.0;
            }
        }
        let state = state.mapv(|x| x / norm2.sqrt());
        cols.column_mut(j).assign(&state);
    }
    cols
}

/// Evaluate the vacuum and every one-boson second-order shift by brute force
/// and assert the production routines agree to 1e-8 relative.
pub fn assert_shifts_match(lat: &Lattice, omega: f64) {
    let v = coupling_matrix(lat).unwrap();
    let es = eigensystem(&v).unwrap();
    let n = es.n();
    let fs = FockSpace::new(n);
    let hp = correction_hamiltonian(&fs, &v);
    let coll = collective_basis(&fs, &es.m);

    // The collective basis must be orthonormal (validates its construction).
    let gram = coll.t().dot(&coll);
    for i in 0..fs.dim() {
        for j in 0..fs.dim() {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!(
                (gram[[i, j]] - expect).abs() < 1e-10,
                "collective basis not orthonormal at ({i},{j})"
            );
        }
    }

    let eps: Vec<f64> = es.d.iter().map(|d| 2.0 * omega + d / 2.0).collect();
    let state_energy = |idx: usize| -> f64 {
        fs.states[idx]
            .iter()
            .enumerate()
            .map(|(i, &q)| f64::from(q) * eps[i])
            .sum()
    };
    let vac_idx = fs.index[&vec![0u8; n]];

    // Ground state: only one- and two-boson intermediates couple.
    let couplings0 = coll.t().dot(&hp.dot(&coll.column(vac_idx)));
    let mut e2_ground = 0.0;
    for s in 0..fs.dim() {
        if s == vac_idx {
            continue;
        }
        let c = couplings0[s];
        match fs.quanta(s) {
            1 | 2 => e2_ground += c * c / (0.0 - state_energy(s)),
            _ => assert!(c.abs() < 1e-10, "vacuum couples to a 3-quanta state: {c}"),
        }
    }
    let prod_ground = shift_ground_closed_form(&es, omega).unwrap();
    assert!(
        (e2_ground - prod_ground).abs() <= 1e-8 * prod_ground.abs(),
        "ground shift: oracle {e2_ground} vs production {prod_ground}"
    );

    // One-boson states, every mode.
    for alpha in 0..n {
        let mut occ = vec![0u8; n];
        occ[alpha] = 1;
        let t_idx = fs.index[&occ];
        let couplings = coll.t().dot(&hp.dot(&coll.column(t_idx)));
        let mut e2 = 0.0;
        for s in 0..fs.dim() {
            if s == t_idx {
                continue;
            }
            let c = couplings[s];
            let q = fs.quanta(s);
            if q == 1 {
                // the corrections change the boson number; no mixing inside
                // the one-boson manifold
                assert!(c.abs() < 1e-10, "in-manifold coupling survives: {c}");
                continue;
            }
            e2 += c * c / (eps[alpha] - state_energy(s));
        }
        let prod = shift_one_boson(&es, omega, alpha).unwrap();
        assert!(
            (e2 - prod).abs() <= 1e-8 * prod.abs().max(1e-12),
            "mode {alpha} at omega {omega}: oracle {e2} vs production {prod}"
        );
    }
}
