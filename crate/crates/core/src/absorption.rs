//! Transition intensities of the oscillating-detuning drive and their
//! spectra: sticks, broadened profiles, and disorder averages.
//!
//! Within the rotating-wave approximation the drive couples the vacuum to
//! one-boson states with intensity I₁(i) = (Δ₀²/16)·S_i², S_i = Σ_k M_ki,
//! and a one-boson state |1_i⟩ to two-boson states that contain mode i.

use ndarray::Array1;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::hamiltonian::{self, EigenSystem, ModelParams};
use crate::lattice::{self, LatticeSpec};

/// One spectral line: the transition gap and its squared matrix element.
#[derive(Debug, Clone, Copy)]
pub struct Stick {
    /// Zero-based initial/created mode index (one-boson sticks) or the first
    /// mode of the final pair (two-boson sticks).
    pub mode_i: usize,
    /// Second mode of the final pair for two-boson sticks.
    pub mode_j: Option<usize>,
    /// Transition energy in units of V^nn.
    pub gap: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone)]
pub struct AbsorptionStickSet {
    pub sticks: Vec<Stick>,
}

impl AbsorptionStickSet {
    pub fn total_intensity(&self) -> f64 {
        self.sticks.iter().map(|s| s.intensity).sum()
    }
}

/// Max-normalized spectral curve on a uniform energy grid.
#[derive(Debug, Clone)]
pub struct AbsorptionProfile {
    /// Bin centers.
    pub energy: Array1<f64>,
    pub values: Array1<f64>,
}

/// Ground → one-boson intensities I₁(i) = (Δ₀²/16)·S_i² at gaps ε_i.
pub fn intensity_one(es: &EigenSystem, params: &ModelParams) -> AbsorptionStickSet {
    let me = hamiltonian::manifold_energies(es, params);
    let s = es.mode_sums();
    let pref = params.delta0 * params.delta0 / 16.0;
    let sticks = (0..es.n())
        .map(|i| Stick {
            mode_i: i,
            mode_j: None,
            gap: me.epsilon[i],
            intensity: pref * s[i] * s[i],
        })
        .collect();
    AbsorptionStickSet { sticks }
}

/// One-boson |1_i⟩ → two-boson |2_jk⟩ intensities,
/// [δ_ik I₁(j) + δ_ij I₁(k) + δ_ij δ_ik √(I₁(j)I₁(k))] / (1 + δ_jk),
/// at gaps ε_j + ε_k − ε_i. Nonzero only when the initial mode survives into
/// the pair.
pub fn intensity_two(
    es: &EigenSystem,
    params: &ModelParams,
    initial: usize,
) -> Result<AbsorptionStickSet> {
    let n = es.n();
    if initial >= n {
        return Err(CoreError::ModeIndex { index: initial, n });
    }
    let one = intensity_one(es, params);
    let i1: Vec<f64> = one.sticks.iter().map(|s| s.intensity).collect();
    let me = hamiltonian::manifold_energies(es, params);
    let mut sticks = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for k in j..n {
            let dik = (initial == k) as u8 as f64;
            let dij = (initial == j) as u8 as f64;
            let djk = (j == k) as u8 as f64;
            let num = dik * i1[j] + dij * i1[k] + dij * dik * (i1[j] * i1[k]).sqrt();
            sticks.push(Stick {
                mode_i: j,
                mode_j: Some(k),
                gap: me.epsilon[j] + me.epsilon[k] - me.epsilon[initial],
                intensity: num / (1.0 + djk),
            });
        }
    }
    Ok(AbsorptionStickSet { sticks })
}

fn accumulate_histogram(
    values: &mut Array1<f64>,
    sticks: &AbsorptionStickSet,
    min: f64,
    max: f64,
    bins: usize,
) {
    let step = (max - min) / bins as f64;
    for s in &sticks.sticks {
        if s.gap < min || s.gap > max {
            continue;
        }
        let mut idx = ((s.gap - min) / step) as usize;
        if idx >= bins {
            idx = bins - 1; // right edge is inclusive
        }
        values[idx] += s.intensity;
    }
}

/// Render sticks on a uniform grid: `width = 0` histograms the intensities,
/// `width > 0` sums Gaussian kernels of that width centered on the sticks.
/// The curve is max-normalized when any value is nonzero.
pub fn render_profile(
    sticks: &AbsorptionStickSet,
    grid: (f64, f64, usize),
    width: f64,
) -> Result<AbsorptionProfile> {
    let (min, max, bins) = grid;
    if bins < 2 || !(max > min) {
        return Err(CoreError::InvalidGrid(format!(
            "need at least 2 bins and max > min (got {min}..{max} with {bins})"
        )));
    }
    if width < 0.0 {
        return Err(CoreError::InvalidArgument("kernel width must be >= 0".into()));
    }
    let step = (max - min) / bins as f64;
    let energy = Array1::from_iter((0..bins).map(|b| min + (b as f64 + 0.5) * step));
    let mut values = Array1::<f64>::zeros(bins);
    if width == 0.0 {
        accumulate_histogram(&mut values, sticks, min, max, bins);
    } else {
        let inv = 1.0 / (2.0 * width * width);
        for b in 0..bins {
            let e = energy[b];
            values[b] = sticks
                .sticks
                .iter()
                .map(|s| s.intensity * (-(e - s.gap) * (e - s.gap) * inv).exp())
                .sum();
        }
    }
    let peak = values.iter().cloned().fold(0.0_f64, f64::max);
    if peak > 0.0 {
        values.mapv_inplace(|v| v / peak);
    }
    Ok(AbsorptionProfile { energy, values })
}

/// Positional-disorder ensemble description.
#[derive(Debug, Clone)]
pub struct DisorderConfig {
    /// Standard deviations to sweep, in units of a.
    pub sigmas: Vec<f64>,
    pub realizations: usize,
    pub master_seed: u64,
}

/// Intensity-weighted statistics of the one-boson gap over an ensemble.
#[derive(Debug, Clone, Copy)]
pub struct DisorderSummary {
    pub sigma: f64,
    /// Per-realization intensity-weighted mean gap, averaged over the
    /// ensemble.
    pub mean_gap: f64,
    /// Pooled intensity-weighted standard deviation of the gap.
    pub std_gap: f64,
    pub realizations: usize,
}

/// Disorder-averaged one-boson absorption: for each σ, accumulate the I₁
/// sticks of every realization into a histogram (max-normalized after
/// averaging) and report intensity-weighted gap statistics.
///
/// Realizations are evaluated in parallel but merged in index order, so the
/// result is independent of thread count. A coincident-site realization
/// aborts the whole computation.
pub fn disordered_profile(
    spec: &LatticeSpec,
    params: &ModelParams,
    dis: &DisorderConfig,
    grid: (f64, f64, usize),
) -> Result<Vec<(AbsorptionProfile, DisorderSummary)>> {
    let (min, max, bins) = grid;
    if bins < 2 || !(max > min) {
        return Err(CoreError::InvalidGrid(format!(
            "need at least 2 bins and max > min (got {min}..{max} with {bins})"
        )));
    }
    if dis.realizations == 0 {
        return Err(CoreError::InvalidArgument("need at least one realization".into()));
    }
    let ideal = lattice::build_lattice(spec)?;
    let mut out = Vec::with_capacity(dis.sigmas.len());
    for &sigma in &dis.sigmas {
        // One pass per realization: histogram plus weighted-gap moments.
        let partial: Vec<Result<(Array1<f64>, f64, f64, f64)>> = (0..dis.realizations as u64)
            .into_par_iter()
            .map(|r| {
                let jit = lattice::apply_disorder(&ideal, sigma, r, dis.master_seed);
                let v = hamiltonian::coupling_matrix(&jit)?;
                let es = hamiltonian::eigensystem(&v)?;
                let sticks = intensity_one(&es, params);
                let mut hist = Array1::<f64>::zeros(bins);
                accumulate_histogram(&mut hist, &sticks, min, max, bins);
                let (mut w, mut wx, mut wx2) = (0.0, 0.0, 0.0);
                for s in &sticks.sticks {
                    w += s.intensity;
                    wx += s.intensity * s.gap;
                    wx2 += s.intensity * s.gap * s.gap;
                }
                Ok((hist, w, wx, wx2))
            })
            .collect();
        let mut hist = Array1::<f64>::zeros(bins);
        let (mut wsum, mut wxsum, mut wx2sum, mut mean_acc) = (0.0, 0.0, 0.0, 0.0);
        for item in partial {
            let (h, w, wx, wx2) = item?;
            hist += &h;
            wsum += w;
            wxsum += wx;
            wx2sum += wx2;
            mean_acc += wx / w;
        }
        let peak = hist.iter().cloned().fold(0.0_f64, f64::max);
        if peak > 0.0 {
            hist.mapv_inplace(|v| v / peak);
        }
        let step = (max - min) / bins as f64;
        let energy = Array1::from_iter((0..bins).map(|b| min + (b as f64 + 0.5) * step));
        let mu = wxsum / wsum;
        let var = (wx2sum / wsum - mu * mu).max(0.0);
        out.push((
            AbsorptionProfile { energy, values: hist },
            DisorderSummary {
                sigma,
                mean_gap: mean_acc / dis.realizations as f64,
                std_gap: var.sqrt(),
                realizations: dis.realizations,
            },
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{coupling_matrix, eigensystem};
    use crate::lattice::{apply_disorder, build_lattice, Lattice};
    use ndarray::array;

    fn dimer_es() -> EigenSystem {
        let lat =
            Lattice::from_positions(array![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        eigensystem(&coupling_matrix(&lat).unwrap()).unwrap()
    }

    #[test]
    fn dimer_intensities() {
        let p = ModelParams::new(20.0, 0.0, 1.0);
        let one = intensity_one(&dimer_es(), &p);
        assert!(one.sticks[0].intensity.abs() < 1e-28); // antisymmetric mode
        assert!((one.sticks[1].intensity - 0.125).abs() < 1e-14); // Δ₀²/8
        assert!((one.sticks[1].gap - 40.5).abs() < 1e-12);
    }

    #[test]
    fn sum_rule_ideal_and_disordered() {
        let p = ModelParams::new(20.0, 0.0, 1.0);
        let lat = build_lattice(&LatticeSpec::square(7)).unwrap();
        for sigma in [0.0, 0.05] {
            let jit = apply_disorder(&lat, sigma, 1, 77);
            let es = eigensystem(&coupling_matrix(&jit).unwrap()).unwrap();
            let total = intensity_one(&es, &p).total_intensity();
            let expect = 49.0 / 16.0;
            assert!(
                (total - expect).abs() < 1e-12 * expect,
                "sum rule violated at sigma {sigma}: {total}"
            );
        }
    }

    #[test]
    fn intensity_two_structure() {
        let p = ModelParams::new(20.0, 0.0, 1.0);
        let lat = build_lattice(&LatticeSpec::square(3)).unwrap();
        let es = eigensystem(&coupling_matrix(&lat).unwrap()).unwrap();
        let one = intensity_one(&es, &p);
        let i1: Vec<f64> = one.sticks.iter().map(|s| s.intensity).collect();
        let i = 8usize; // top mode
        let two = intensity_two(&es, &p, i).unwrap();
        for s in &two.sticks {
            let (j, k) = (s.mode_i, s.mode_j.unwrap());
            if j != i && k != i {
                assert_eq!(s.intensity, 0.0);
            } else if j == i && k == i {
                assert!((s.intensity - 1.5 * i1[i]).abs() < 1e-14);
            } else if j == i {
                assert!((s.intensity - i1[k]).abs() < 1e-14);
            } else {
                assert!((s.intensity - i1[j]).abs() < 1e-14);
            }
        }
        assert!(intensity_two(&es, &p, 11).is_err());
    }

    #[test]
    fn nonzero_stick_counts_match() {
        let p = ModelParams::new(20.0, 0.0, 1.0);
        for spec in [LatticeSpec::square(7), LatticeSpec::triangular(7)] {
            let lat = build_lattice(&spec).unwrap();
            let es = eigensystem(&coupling_matrix(&lat).unwrap()).unwrap();
            let thresh = 1e-10 * p.delta0 * p.delta0;
            let one = intensity_one(&es, &p);
            let n1 = one.sticks.iter().filter(|s| s.intensity > thresh).count();
            let top = es.n() - 1;
            let two = intensity_two(&es, &p, top).unwrap();
            let n2 = two.sticks.iter().filter(|s| s.intensity > thresh).count();
            assert_eq!(n1, n2);
            // The top mode carries the largest intensity.
            let argmax = one
                .sticks
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.intensity.partial_cmp(&b.1.intensity).unwrap())
                .unwrap()
                .0;
            assert_eq!(argmax, top);
        }
    }

    #[test]
    fn render_profile_basics() {
        let single = AbsorptionStickSet {
            sticks: vec![Stick { mode_i: 0, mode_j: None, gap: 5.0, intensity: 2.0 }],
        };
        let prof = render_profile(&single, (0.0, 10.0, 11), 0.0).unwrap();
        let nonzero: Vec<usize> =
            (0..11).filter(|&b| prof.values[b] > 0.0).collect();
        assert_eq!(nonzero, vec![5]);
        assert_eq!(prof.values[5], 1.0);

        let twin = AbsorptionStickSet {
            sticks: vec![
                Stick { mode_i: 0, mode_j: None, gap: 2.0, intensity: 3.0 },
                Stick { mode_i: 1, mode_j: None, gap: 8.0, intensity: 3.0 },
            ],
        };
        let prof = render_profile(&twin, (0.0, 10.0, 101), 0.05).unwrap();
        let peak = prof.values.iter().cloned().fold(0.0_f64, f64::max);
        assert_eq!(peak, 1.0);
        let near = |e: f64| {
            (0..101)
                .min_by(|&a, &b| {
                    (prof.energy[a] - e)
                        .abs()
                        .partial_cmp(&(prof.energy[b] - e).abs())
                        .unwrap()
                })
                .unwrap()
        };
        assert!((prof.values[near(2.0)] - 1.0).abs() < 1e-6);
        assert!((prof.values[near(8.0)] - 1.0).abs() < 1e-6);

        assert!(render_profile(&twin, (0.0, 10.0, 1), 0.0).is_err());
        assert!(render_profile(&twin, (3.0, 3.0, 10), 0.0).is_err());
    }

    #[test]
    fn seven_by_seven_profile_has_three_peaks() {
        let p = ModelParams::new(20.0, 0.0, 1.0);
        let lat = build_lattice(&LatticeSpec::square(7)).unwrap();
        let es = eigensystem(&coupling_matrix(&lat).unwrap()).unwrap();
        let sticks = intensity_one(&es, &p);
        let me = crate::hamiltonian::manifold_energies(&es, &p);
        let prof = render_profile(&sticks, (36.0, 44.0, 400), 0.05).unwrap();
        // Visible local maxima of the broadened curve; the third-strongest
        // line reaches ≈ 0.03 of the tallest and the fourth ≈ 0.008, so a
        // 0.02 cut isolates exactly the dominant three.
        let mut peaks = Vec::new();
        for b in 1..399 {
            if prof.values[b] > prof.values[b - 1]
                && prof.values[b] > prof.values[b + 1]
                && prof.values[b] > 0.02
            {
                peaks.push(b);
            }
        }
        assert_eq!(peaks.len(), 3, "expected three dominant lines");
        // The tallest sits at the top-mode gap.
        let top_bin = peaks
            .iter()
            .max_by(|&&a, &&b| prof.values[a].partial_cmp(&prof.values[b]).unwrap())
            .unwrap();
        assert!((prof.energy[*top_bin] - me.epsilon[48]).abs() < 0.05);
    }

    #[test]
    fn disorder_zero_sigma_matches_ideal_histogram() {
        let p = ModelParams::new(20.0, 0.0, 1.0);
        let spec = LatticeSpec::square(3);
        let grid = (38.0, 43.0, 100);
        let dis = DisorderConfig { sigmas: vec![0.0], realizations: 8, master_seed: 9 };
        let out = disordered_profile(&spec, &p, &dis, grid).unwrap();
        let lat = build_lattice(&spec).unwrap();
        let es = eigensystem(&coupling_matrix(&lat).unwrap()).unwrap();
        let ideal = render_profile(&intensity_one(&es, &p), grid, 0.0).unwrap();
        for b in 0..100 {
            assert!((out[0].0.values[b] - ideal.values[b]).abs() < 1e-12);
        }
    }

    #[test]
    fn disorder_is_deterministic() {
        let p = ModelParams::new(20.0, 0.0, 1.0);
        let spec = LatticeSpec::square(3);
        let dis = DisorderConfig { sigmas: vec![0.03], realizations: 16, master_seed: 31 };
        let a = disordered_profile(&spec, &p, &dis, (38.0, 43.0, 64)).unwrap();
        let b = disordered_profile(&spec, &p, &dis, (38.0, 43.0, 64)).unwrap();
        assert_eq!(a[0].1.mean_gap.to_bits(), b[0].1.mean_gap.to_bits());
        assert_eq!(a[0].1.std_gap.to_bits(), b[0].1.std_gap.to_bits());
        for bin in 0..64 {
            assert_eq!(a[0].0.values[bin].to_bits(), b[0].0.values[bin].to_bits());
        }
    }
}
