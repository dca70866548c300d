//! One function per subcommand. Each returns the full set of output files so
//! the caller can write them (plus the manifest) atomically at the end.

use std::fmt;

use ndarray::Array2;
use num_complex::Complex64;

use rydlat_core::absorption::{intensity_one, intensity_two, render_profile, AbsorptionStickSet};
use rydlat_core::error::CoreError;
use rydlat_core::exactdyn::{
    evolve_with_drive, exact_spectrum, prepare_minus, DriveProtocol, SpinHamiltonian,
};
use rydlat_core::hamiltonian::{
    coupling_matrix, eigensystem, manifold_energies, EigenSystem, ModelParams,
};
use rydlat_core::lattice::{build_lattice, Lattice, LatticeSpec};
use rydlat_core::perturbation::{error_table, ShiftKind};
use rydlat_core::photon::{
    angular_distribution, angular_distribution_quadrature, beam_finder, radiative_eigen,
    radiative_matrix, AngularGrid,
};
use rydlat_core::symmetry::{build_group, classify_modes, ModeLabel};
use rydlat_core::DisorderConfig;

use crate::config::Resolved;
use crate::output::{csv, num, Artifacts};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(CoreError),
    Io(std::io::Error),
}

impl From<String> for CliError {
    fn from(msg: String) -> Self {
        CliError::Config(msg)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    /// 2 for anything wrong with the request, 3 for numerics that failed.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Core(e) => match e {
                CoreError::InvalidSide => "invalid-side",
                CoreError::CoincidentSites { .. } => "coincident-sites",
                CoreError::Eigensolver(_) => "eigensolver",
                CoreError::ModeIndex { .. } => "mode-index",
                CoreError::Regime(_) => "regime",
                CoreError::Symmetry(_) => "symmetry",
                CoreError::DefectiveMatrix { .. } => "defective-matrix",
                CoreError::QuadratureNotConverged { .. } => "quadrature-not-converged",
                CoreError::DimensionGuard { .. } => "dimension-guard",
                CoreError::StepSize { .. } => "step-size",
                CoreError::InvalidGrid(_) => "invalid-grid",
                CoreError::InvalidArgument(_) => "invalid-argument",
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

fn lattice_spec(r: &Resolved) -> Result<LatticeSpec, CliError> {
    let side = r.get_usize("side")?;
    match r.get_str("geometry")? {
        "square" => Ok(LatticeSpec::square(side)),
        "triangular" => Ok(LatticeSpec::triangular(side)),
        other => Err(CliError::Config(format!(
            "geometry must be `square` or `triangular`, got `{other}`"
        ))),
    }
}

fn model_params(r: &Resolved) -> Result<ModelParams, CliError> {
    Ok(ModelParams::new(r.get_f64("omega")?, 0.0, r.get_f64("delta0")?))
}

fn solve(lat: &Lattice) -> Result<EigenSystem, CliError> {
    Ok(eigensystem(&coupling_matrix(lat)?)?)
}

/// A 1-based `auto`-able mode key, defaulting to the top mode N.
fn resolve_mode(r: &Resolved, key: &str, n: usize) -> Result<usize, CliError> {
    match r.get_auto_index(key)? {
        None => Ok(n - 1),
        Some(one_based) if one_based <= n => Ok(one_based - 1),
        Some(one_based) => Err(CliError::Core(CoreError::ModeIndex {
            index: one_based - 1,
            n,
        })),
    }
}

fn stick_grid(
    r: &Resolved,
    sticks: &AbsorptionStickSet,
) -> Result<(f64, f64, usize), CliError> {
    let width = r.get_f64("width")?;
    let pad = 1.0 + 3.0 * width.max(0.0);
    let lo = sticks.sticks.iter().map(|s| s.gap).fold(f64::INFINITY, f64::min);
    let hi = sticks.sticks.iter().map(|s| s.gap).fold(f64::NEG_INFINITY, f64::max);
    let emin = r.get_auto_f64("emin")?.unwrap_or(lo - pad);
    let emax = r.get_auto_f64("emax")?.unwrap_or(hi + pad);
    Ok((emin, emax, r.get_usize("bins")?))
}

fn lattice_csv(lat: &Lattice) -> String {
    csv(
        "site,x,y,z",
        (0..lat.n()).map(|k| {
            vec![
                (k + 1).to_string(),
                num(lat.positions[[k, 0]]),
                num(lat.positions[[k, 1]]),
                num(lat.positions[[k, 2]]),
            ]
        }),
    )
}

fn profile_csv(profile: &rydlat_core::AbsorptionProfile) -> String {
    csv(
        "energy,value",
        profile
            .energy
            .iter()
            .zip(profile.values.iter())
            .map(|(e, v)| vec![num(*e), num(*v)]),
    )
}

pub fn run_spectrum(r: &Resolved) -> Result<Artifacts, CliError> {
    let lat = build_lattice(&lattice_spec(r)?)?;
    let es = solve(&lat)?;
    let me = manifold_energies(&es, &model_params(r)?);
    let n = es.n();

    let mut art = Artifacts::default();
    art.push("lattice.csv", lattice_csv(&lat));
    art.push(
        "spectrum.csv",
        csv(
            "i,D,epsilon,E1",
            (0..n).map(|i| {
                vec![
                    (i + 1).to_string(),
                    num(es.d[i]),
                    num(me.epsilon[i]),
                    num(me.one_boson[i]),
                ]
            }),
        ),
    );
    let header = std::iter::once("site".to_string())
        .chain((1..=n).map(|i| format!("M_i{i}")))
        .collect::<Vec<_>>()
        .join(",");
    art.push(
        "eigenvectors.csv",
        csv(
            &header,
            (0..n).map(|k| {
                std::iter::once((k + 1).to_string())
                    .chain((0..n).map(|i| num(es.m[[k, i]])))
                    .collect()
            }),
        ),
    );
    Ok(art)
}

pub fn run_symmetry(r: &Resolved) -> Result<Artifacts, CliError> {
    let lat = build_lattice(&lattice_spec(r)?)?;
    let mut es = solve(&lat)?;
    let group = build_group(&lat)?;
    let cls = classify_modes(&mut es, &group)?;

    let mut art = Artifacts::default();
    art.push(
        "classification.csv",
        csv(
            "i,D,label,clusterId",
            (0..es.n()).map(|i| {
                let label = match cls.labels[i] {
                    ModeLabel::A1 => "A1",
                    ModeLabel::Other => "other",
                };
                vec![
                    (i + 1).to_string(),
                    num(es.d[i]),
                    label.to_string(),
                    (cls.cluster_of[i] + 1).to_string(),
                ]
            }),
        ),
    );
    Ok(art)
}

pub fn run_absorb1(r: &Resolved) -> Result<Artifacts, CliError> {
    let lat = build_lattice(&lattice_spec(r)?)?;
    let es = solve(&lat)?;
    let sticks = intensity_one(&es, &model_params(r)?);
    let grid = stick_grid(r, &sticks)?;
    let profile = render_profile(&sticks, grid, r.get_f64("width")?)?;

    let mut art = Artifacts::default();
    art.push(
        "sticks.csv",
        csv(
            "mode_i,gap,intensity",
            sticks.sticks.iter().map(|s| {
                vec![(s.mode_i + 1).to_string(), num(s.gap), num(s.intensity)]
            }),
        ),
    );
    art.push("profile.csv", profile_csv(&profile));
    Ok(art)
}

pub fn run_absorb2(r: &Resolved) -> Result<Artifacts, CliError> {
    let lat = build_lattice(&lattice_spec(r)?)?;
    let es = solve(&lat)?;
    let initial = resolve_mode(r, "initial", es.n())?;
    let sticks = intensity_two(&es, &model_params(r)?, initial)?;
    let grid = stick_grid(r, &sticks)?;
    let profile = render_profile(&sticks, grid, r.get_f64("width")?)?;

    let mut art = Artifacts::default();
    art.push(
        "sticks.csv",
        csv(
            "mode_i,mode_j,gap,intensity",
            sticks.sticks.iter().map(|s| {
                vec![
                    (s.mode_i + 1).to_string(),
                    (s.mode_j.unwrap() + 1).to_string(),
                    num(s.gap),
                    num(s.intensity),
                ]
            }),
        ),
    );
    art.push("profile.csv", profile_csv(&profile));
    Ok(art)
}

pub fn run_perturb(r: &Resolved) -> Result<Artifacts, CliError> {
    let kind = match r.get_str("kind")? {
        "ground" => ShiftKind::Ground,
        "excited" => ShiftKind::OneBoson,
        other => {
            return Err(CliError::Config(format!(
                "kind must be `ground` or `excited`, got `{other}`"
            )))
        }
    };
    let omegas = r.get_f64_list("omegas")?;
    let sides = r.get_usize_list("sides")?;
    if omegas.is_empty() || sides.is_empty() {
        return Err(CliError::Config("omegas and sides must be non-empty".into()));
    }
    let table = error_table(kind, &sides, &omegas)?;

    let header = std::iter::once("omega".to_string())
        .chain(sides.iter().map(|l| format!("L{l}")))
        .collect::<Vec<_>>()
        .join(",");
    let mut art = Artifacts::default();
    art.push(
        "table.csv",
        csv(
            &header,
            omegas.iter().enumerate().map(|(row, omega)| {
                std::iter::once(format!("{omega}"))
                    .chain((0..sides.len()).map(|col| format!("{}", table[[row, col]])))
                    .collect()
            }),
        ),
    );
    Ok(art)
}

pub fn run_photon(r: &Resolved) -> Result<Artifacts, CliError> {
    let lat = build_lattice(&lattice_spec(r)?)?;
    let es = solve(&lat)?;
    let mode = resolve_mode(r, "mode", es.n())?;
    let ratio = r.get_f64("ratio")?;
    let gamma = 1.0;
    let rd = radiative_eigen(radiative_matrix(&lat, ratio, gamma)?, gamma)?;
    let theta_step = r.get_f64("theta_step")?;
    let phi_step = r.get_f64("phi_step")?;
    let grid = AngularGrid::new(theta_step, phi_step)?;

    let mut art = Artifacts::default();
    let dist = if r.get_bool("quadrature")? {
        let qr = angular_distribution_quadrature(
            &es,
            mode,
            &rd,
            &lat,
            ratio,
            &grid,
            r.get_f64("window")?,
            r.get_usize("samples")?,
        )?;
        art.push(
            "quadrature.txt",
            format!(
                "convergence = {}\nintegral = {}\n",
                num(qr.convergence),
                num(qr.distribution.integral())
            ),
        );
        qr.distribution
    } else {
        angular_distribution(&es, mode, &rd, &lat, ratio, &grid)?
    };

    let n_phi = dist.phi.len();
    art.push(
        "distribution.csv",
        csv(
            "theta_deg,phi_deg,intensity",
            (0..dist.theta.len()).flat_map(|it| {
                let dist = &dist;
                (0..n_phi).map(move |ip| {
                    vec![
                        num(it as f64 * theta_step),
                        num(ip as f64 * phi_step),
                        num(dist.values[[it, ip]]),
                    ]
                })
            }),
        ),
    );
    let beams = beam_finder(&dist, r.get_usize("beams")?);
    art.push(
        "beams.csv",
        csv(
            "rank,theta_deg,phi_deg,value",
            beams.iter().enumerate().map(|(k, b)| {
                vec![
                    (k + 1).to_string(),
                    num(b.theta_deg),
                    num(b.phi_deg),
                    num(b.value),
                ]
            }),
        ),
    );
    Ok(art)
}

pub fn run_disorder(r: &Resolved) -> Result<Artifacts, CliError> {
    let spec = lattice_spec(r)?;
    let params = model_params(r)?;
    let sigmas = r.get_f64_list("sigma")?;
    let dis = DisorderConfig {
        sigmas: sigmas.clone(),
        realizations: r.get_usize("realizations")?,
        master_seed: r.get_u64("seed")?,
    };
    // Default window: the ideal one-boson band, padded asymmetrically since
    // disorder pushes the band up.
    let ideal = build_lattice(&spec)?;
    let es = solve(&ideal)?;
    let me = manifold_energies(&es, &params);
    let lo = me.epsilon.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = me.epsilon.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let emin = r.get_auto_f64("emin")?.unwrap_or(lo - 0.3 * span - 1.0);
    let emax = r.get_auto_f64("emax")?.unwrap_or(hi + 0.3 * span + 3.0);
    let grid = (emin, emax, r.get_usize("bins")?);

    let results = rydlat_core::disordered_profile(&spec, &params, &dis, grid)?;

    let mut art = Artifacts::default();
    art.push(
        "summary.csv",
        csv(
            "sigma,mean_gap,std_gap,realizations",
            results.iter().map(|(_, s)| {
                vec![
                    num(s.sigma),
                    num(s.mean_gap),
                    num(s.std_gap),
                    s.realizations.to_string(),
                ]
            }),
        ),
    );
    for (k, (profile, _)) in results.iter().enumerate() {
        art.push(&format!("profile_{k}.csv"), profile_csv(profile));
    }
    Ok(art)
}

pub fn run_exact(r: &Resolved) -> Result<Artifacts, CliError> {
    let lat = build_lattice(&lattice_spec(r)?)?;
    let v = coupling_matrix(&lat)?;
    let params = model_params(r)?;
    let count = r.get_usize("count")?;
    let target = r.get_usize("target")?;
    if target == 0 || target >= count {
        return Err(CliError::Config(format!(
            "target must name an excited state below count (1..{})",
            count.saturating_sub(1)
        )));
    }
    let spec = exact_spectrum(&v, &params, count)?;
    let h = SpinHamiltonian::new(&v, &params)?;
    let protocol = DriveProtocol {
        delta0: params.delta0,
        omega_drive: spec.energies[target] - spec.energies[0],
        t_final: r.get_f64("t_final")?,
        dt: r.get_f64("dt")?,
    };
    let initial = prepare_minus(lat.n())?;
    let tracked: Array2<f64> = spec.states.clone();
    let rec = evolve_with_drive(&h, &protocol, &initial, &tracked)?;
    debug_assert!(initial.iter().all(|z: &Complex64| z.im == 0.0));

    let mut art = Artifacts::default();
    art.push(
        "energies.csv",
        csv(
            "state,energy",
            spec.energies
                .iter()
                .enumerate()
                .map(|(i, e)| vec![i.to_string(), num(*e)]),
        ),
    );
    let header = std::iter::once("t".to_string())
        .chain((0..count).map(|i| format!("pop_state_{i}")))
        .collect::<Vec<_>>()
        .join(",");
    art.push(
        "populations.csv",
        csv(
            &header,
            (0..rec.times.len()).map(|row| {
                std::iter::once(num(rec.times[row]))
                    .chain((0..count).map(|c| num(rec.populations[[row, c]])))
                    .collect()
            }),
        ),
    );
    Ok(art)
}

pub fn run(r: &Resolved) -> Result<Artifacts, CliError> {
    match r.cmd {
        "spectrum" => run_spectrum(r),
        "symmetry" => run_symmetry(r),
        "absorb1" => run_absorb1(r),
        "absorb2" => run_absorb2(r),
        "perturb" => run_perturb(r),
        "photon" => run_photon(r),
        "disorder" => run_disorder(r),
        "exact" => run_exact(r),
        other => Err(CliError::Config(format!("unknown subcommand {other}"))),
    }
}
