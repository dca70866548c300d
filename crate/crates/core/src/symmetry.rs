//! Point-group analysis: site permutations of C4v / C3v, the projector onto
//! the totally symmetric irrep A₁, and classification of collective modes.
//!
//! Only the A₁/non-A₁ split matters here: uniform drives couple exclusively
//! to totally symmetric modes, so the classification carries the selection
//! rules for the absorption intensities.

use ndarray::{Array1, Array2, Axis};

use crate::error::{CoreError, Result};
use crate::hamiltonian::EigenSystem;
use crate::lattice::{Lattice, LatticeKind};
use crate::linalg;

/// Position-matching tolerance when realizing group elements as site
/// permutations.
const MATCH_TOL: f64 = 1e-9;

/// A finite point group realized as permutations of the lattice sites.
#[derive(Debug, Clone)]
pub struct SymmetryGroup {
    /// `perms[g][k]` is the site that element g sends site k to.
    pub perms: Vec<Vec<usize>>,
    pub names: Vec<String>,
}

impl SymmetryGroup {
    pub fn order(&self) -> usize {
        self.perms.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeLabel {
    A1,
    Other,
}

/// Result of classifying an eigensystem against a point group.
#[derive(Debug, Clone)]
pub struct ModeClassification {
    pub labels: Vec<ModeLabel>,
    /// Cluster id of each mode (indexes `EigenSystem::clusters`).
    pub cluster_of: Vec<usize>,
    /// Dimension of the A₁ subspace = trace of the projector.
    pub a1_dimension: usize,
}

fn rotation(angle: f64) -> [[f64; 2]; 2] {
    let (s, c) = angle.sin_cos();
    [[c, -s], [s, c]]
}

/// Reflection about the axis at angle β through the origin.
fn reflection(beta: f64) -> [[f64; 2]; 2] {
    let (s2, c2) = (2.0 * beta).sin_cos();
    [[c2, s2], [s2, -c2]]
}

/// Realize one 2D orthogonal operation about the centroid as a site
/// permutation, failing if any image misses the lattice.
fn permutation_for(lat: &Lattice, op: &[[f64; 2]; 2], name: &str) -> Result<Vec<usize>> {
    let n = lat.n();
    let centroid = lat.centers.mean_axis(Axis(0)).unwrap();
    let mut perm = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for k in 0..n {
        let x = lat.centers[[k, 0]] - centroid[0];
        let y = lat.centers[[k, 1]] - centroid[1];
        let tx = op[0][0] * x + op[0][1] * y + centroid[0];
        let ty = op[1][0] * x + op[1][1] * y + centroid[1];
        let mut found = None;
        for j in 0..n {
            let dx = lat.centers[[j, 0]] - tx;
            let dy = lat.centers[[j, 1]] - ty;
            if dx.abs() < MATCH_TOL && dy.abs() < MATCH_TOL {
                found = Some(j);
                break;
            }
        }
        match found {
            Some(j) if !taken[j] => {
                perm[k] = j;
                taken[j] = true;
            }
            _ => {
                return Err(CoreError::Symmetry(format!(
                    "element {name} does not map site {k} onto the lattice"
                )))
            }
        }
    }
    Ok(perm)
}

fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    // (a ∘ b)(k) = a(b(k))
    b.iter().map(|&k| a[k]).collect()
}

/// Build the point group of an ideal lattice: C4v for squares (8 elements),
/// C3v for triangles (6 elements). Verifies closure, identity, and inverses.
pub fn build_group(lat: &Lattice) -> Result<SymmetryGroup> {
    if !lat.is_ideal() {
        return Err(CoreError::Symmetry(
            "point-group analysis requires an ideal lattice".into(),
        ));
    }
    let kind = lat
        .spec
        .map(|s| s.kind)
        .ok_or_else(|| CoreError::Symmetry("custom point sets carry no point group".into()))?;
    let deg = std::f64::consts::PI / 180.0;
    let (ops, names): (Vec<[[f64; 2]; 2]>, Vec<&str>) = match kind {
        LatticeKind::Square => (
            vec![
                rotation(0.0),
                rotation(90.0 * deg),
                rotation(180.0 * deg),
                rotation(270.0 * deg),
                reflection(0.0),
                reflection(90.0 * deg),
                reflection(45.0 * deg),
                reflection(135.0 * deg),
            ],
            vec!["C4_0", "C4_1", "C4_2", "C4_3", "Fx", "Fy", "Fu", "Fv"],
        ),
        LatticeKind::Triangular => (
            vec![
                rotation(0.0),
                rotation(120.0 * deg),
                rotation(240.0 * deg),
                reflection(30.0 * deg),
                reflection(90.0 * deg),
                reflection(150.0 * deg),
            ],
            vec!["C3_0", "C3_1", "C3_2", "Fa", "Fb", "Fc"],
        ),
    };
    let mut perms = Vec::with_capacity(ops.len());
    for (op, name) in ops.iter().zip(&names) {
        perms.push(permutation_for(lat, op, name)?);
    }
    // Group axioms on the permutation set.
    let contains = |p: &Vec<usize>| perms.iter().any(|q| q == p);
    let identity: Vec<usize> = (0..lat.n()).collect();
    if !contains(&identity) {
        return Err(CoreError::Symmetry("identity missing from group".into()));
    }
    for (i, a) in perms.iter().enumerate() {
        let mut has_inverse = false;
        for b in &perms {
            if !contains(&compose(a, b)) {
                return Err(CoreError::Symmetry(format!(
                    "group not closed under composition (element {})",
                    names[i]
                )));
            }
            if compose(a, b) == identity {
                has_inverse = true;
            }
        }
        if !has_inverse {
            return Err(CoreError::Symmetry(format!("element {} has no inverse", names[i])));
        }
    }
    Ok(SymmetryGroup {
        perms,
        names: names.into_iter().map(String::from).collect(),
    })
}

/// Projector P = (1/|G|) Σ_g R(g) onto the totally symmetric subspace.
pub fn a1_projector(group: &SymmetryGroup, n: usize) -> Array2<f64> {
    let mut p = Array2::<f64>::zeros((n, n));
    let w = 1.0 / group.order() as f64;
    for perm in &group.perms {
        for (k, &j) in perm.iter().enumerate() {
            p[[j, k]] += w;
        }
    }
    p
}

/// Tolerance for deciding that a mode (or a cluster-projector eigenvalue)
/// belongs to A₁.
const CLASSIFY_TOL: f64 = 1e-6;

/// Classify collective modes as A₁ or not, canonicalizing degenerate
/// clusters in place.
///
/// Within each degenerate cluster the raw eigenvectors are an arbitrary
/// orthonormal basis, so the projector restricted to the cluster span is
/// diagonalized and its eigenvectors replace the raw ones (non-A₁ first,
/// A₁ last, re-gauged). Isolated modes are classified by the residual
/// ‖P v − v‖.
pub fn classify_modes(es: &mut EigenSystem, group: &SymmetryGroup) -> Result<ModeClassification> {
    let n = es.n();
    if group.perms.iter().any(|p| p.len() != n) {
        return Err(CoreError::Symmetry(
            "group and eigensystem have different site counts".into(),
        ));
    }
    let p = a1_projector(group, n);
    let trace: f64 = p.diag().sum();
    let a1_dimension = trace.round();
    if (trace - a1_dimension).abs() > 1e-8 {
        return Err(CoreError::Symmetry(format!(
            "projector trace {trace} is not an integer"
        )));
    }
    let a1_dimension = a1_dimension as usize;

    let mut labels = vec![ModeLabel::Other; n];
    let mut cluster_of = vec![0usize; n];
    for (ci, cluster) in es.clusters.iter().enumerate() {
        for i in cluster.clone() {
            cluster_of[i] = ci;
        }
        let len = cluster.len();
        if len == 1 {
            let i = cluster.start;
            let v = es.m.column(i);
            let pv = p.dot(&v);
            let res = (&pv - &v).mapv(|x| x * x).sum().sqrt();
            if res < CLASSIFY_TOL {
                labels[i] = ModeLabel::A1;
            }
            continue;
        }
        // Restrict the projector to the cluster span and diagonalize.
        let y = es.m.slice(ndarray::s![.., cluster.clone()]).to_owned();
        let b = y.t().dot(&p).dot(&y);
        let (w, u) = linalg::eigh_ascending(&b)?;
        for &wi in w.iter() {
            if wi.abs() > CLASSIFY_TOL && (wi - 1.0).abs() > CLASSIFY_TOL {
                return Err(CoreError::Symmetry(format!(
                    "cluster projector eigenvalue {wi} is neither 0 nor 1; \
                     group does not match the lattice"
                )));
            }
        }
        // Ascending order puts the non-A₁ combinations (eigenvalue 0) first
        // and the A₁ ones (eigenvalue 1) last.
        let mut fresh = y.dot(&u);
        linalg::gauge_columns(&mut fresh);
        es.m.slice_mut(ndarray::s![.., cluster.clone()]).assign(&fresh);
        for (off, &wi) in w.iter().enumerate() {
            if (wi - 1.0).abs() <= CLASSIFY_TOL {
                labels[cluster.start + off] = ModeLabel::A1;
            }
        }
    }

    let count = labels.iter().filter(|l| **l == ModeLabel::A1).count();
    if count != a1_dimension {
        return Err(CoreError::Symmetry(format!(
            "classified {count} A1 modes but the projector rank is {a1_dimension}"
        )));
    }
    Ok(ModeClassification { labels, cluster_of, a1_dimension })
}

/// Max-norm of the commutator [P, V]; zero for ideal lattices.
pub fn projector_commutator_residual(p: &Array2<f64>, v: &Array2<f64>) -> f64 {
    let pv = p.dot(v);
    let vp = v.dot(p);
    pv.iter()
        .zip(vp.iter())
        .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()))
}

/// Uniform vector, the canonical A₁ direction.
pub fn uniform_vector(n: usize) -> Array1<f64> {
    Array1::from_elem(n, 1.0 / (n as f64).sqrt())
}
