//! `rydlat` — spin-wave spectra, absorption, perturbative validity tables,
//! photon emission patterns, and exact small-system dynamics behind a
//! reproducible config-driven interface.
//!
//! Exit codes: 0 success, 2 configuration/usage errors, 3 numerical
//! failures. Every failure prints exactly one machine-parsable line on
//! stderr: `error code=<n> kind=<slug> msg="..."`.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{ArgAction, Parser, Subcommand};

use commands::CliError;
use config::Resolved;

#[derive(Parser)]
#[command(
    name = "rydlat",
    version,
    about = "Collective excitations of a driven Rydberg lattice gas",
    disable_help_subcommand = true
)]
struct Cli {
    /// Config file: `key = value` lines with optional [subcommand] sections
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Cap the worker thread pool (default: all cores)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Lattice geometry: square | triangular
    #[arg(long, global = true)]
    geometry: Option<String>,
    /// Sites per lattice edge
    #[arg(long, global = true)]
    side: Option<usize>,
    /// Rabi frequency in units of the nearest-neighbour interaction
    #[arg(long, global = true)]
    omega: Option<f64>,
    /// Probe-drive amplitude
    #[arg(long, global = true)]
    delta0: Option<f64>,
    /// Master seed for disorder draws
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Lattice constant over laser wavelength, a/lambda
    #[arg(long, global = true)]
    ratio: Option<f64>,
    /// Comma-separated disorder strengths in units of a
    #[arg(long, global = true)]
    sigma: Option<String>,
    /// Disorder realizations per strength
    #[arg(long, global = true)]
    realizations: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    outdir: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Collective-mode spectrum, eigenvectors, and manifold energies
    Spectrum,
    /// Classify modes by the lattice point group
    Symmetry,
    /// Ground → one-boson absorption sticks and profile
    Absorb1 {
        #[arg(long)]
        emin: Option<f64>,
        #[arg(long)]
        emax: Option<f64>,
        #[arg(long)]
        bins: Option<usize>,
        /// Gaussian broadening of the rendered profile (0 = histogram)
        #[arg(long)]
        width: Option<f64>,
    },
    /// One-boson → two-boson absorption sticks and profile
    Absorb2 {
        /// Initial one-boson mode, 1-based (default: highest)
        #[arg(long)]
        initial: Option<usize>,
        #[arg(long)]
        emin: Option<f64>,
        #[arg(long)]
        emax: Option<f64>,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        width: Option<f64>,
    },
    /// Second-order validity table over drive strengths and lattice sizes
    Perturb {
        /// ground | excited
        #[arg(long)]
        kind: Option<String>,
        /// Comma-separated drive strengths (table rows)
        #[arg(long)]
        omegas: Option<String>,
        /// Comma-separated lattice sides (table columns)
        #[arg(long)]
        sides: Option<String>,
    },
    /// Angular distribution of the photon emitted by one collective mode
    Photon {
        /// Decaying mode, 1-based (default: highest)
        #[arg(long)]
        mode: Option<usize>,
        #[arg(long)]
        theta_step: Option<f64>,
        #[arg(long)]
        phi_step: Option<f64>,
        /// How many dominant maxima to report
        #[arg(long)]
        beams: Option<usize>,
        /// Integrate the emission spectrum numerically instead of using the
        /// closed form
        #[arg(long, action = ArgAction::SetTrue)]
        quadrature: bool,
        /// Full width of the frequency window for --quadrature
        #[arg(long)]
        window: Option<f64>,
        /// Initial resolution of the frequency quadrature
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Disorder-averaged absorption profiles over a sigma sweep
    Disorder {
        #[arg(long)]
        emin: Option<f64>,
        #[arg(long)]
        emax: Option<f64>,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Exact dynamics: spectrum and resonantly driven populations
    Exact {
        /// Number of exact states to resolve and track
        #[arg(long)]
        count: Option<usize>,
        /// Driven state (index into the exact spectrum, ground = 0)
        #[arg(long)]
        target: Option<usize>,
        #[arg(long)]
        t_final: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
    },
}

fn opt_string<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(T::to_string)
}

/// Flag → config-key overlay; only flags the user actually passed appear.
fn flag_overlay(cli: &Cli) -> (&'static str, Vec<(&'static str, Option<String>)>) {
    let mut over: Vec<(&'static str, Option<String>)> = vec![
        ("geometry", cli.geometry.clone()),
        ("side", opt_string(&cli.side)),
        ("omega", opt_string(&cli.omega)),
        ("delta0", opt_string(&cli.delta0)),
        ("seed", opt_string(&cli.seed)),
        ("ratio", opt_string(&cli.ratio)),
        ("sigma", cli.sigma.clone()),
        ("realizations", opt_string(&cli.realizations)),
        ("outdir", cli.outdir.clone()),
    ];
    let name = match &cli.cmd {
        Cmd::Spectrum => "spectrum",
        Cmd::Symmetry => "symmetry",
        Cmd::Absorb1 { emin, emax, bins, width } => {
            over.push(("emin", opt_string(emin)));
            over.push(("emax", opt_string(emax)));
            over.push(("bins", opt_string(bins)));
            over.push(("width", opt_string(width)));
            "absorb1"
        }
        Cmd::Absorb2 { initial, emin, emax, bins, width } => {
            over.push(("initial", opt_string(initial)));
            over.push(("emin", opt_string(emin)));
            over.push(("emax", opt_string(emax)));
            over.push(("bins", opt_string(bins)));
            over.push(("width", opt_string(width)));
            "absorb2"
        }
        Cmd::Perturb { kind, omegas, sides } => {
            over.push(("kind", kind.clone()));
            over.push(("omegas", omegas.clone()));
            over.push(("sides", sides.clone()));
            "perturb"
        }
        Cmd::Photon { mode, theta_step, phi_step, beams, quadrature, window, samples } => {
            over.push(("mode", opt_string(mode)));
            over.push(("theta_step", opt_string(theta_step)));
            over.push(("phi_step", opt_string(phi_step)));
            over.push(("beams", opt_string(beams)));
            over.push(("quadrature", quadrature.then(|| "true".to_string())));
            over.push(("window", opt_string(window)));
            over.push(("samples", opt_string(samples)));
            "photon"
        }
        Cmd::Disorder { emin, emax, bins } => {
            over.push(("emin", opt_string(emin)));
            over.push(("emax", opt_string(emax)));
            over.push(("bins", opt_string(bins)));
            "disorder"
        }
        Cmd::Exact { count, target, t_final, dt } => {
            over.push(("count", opt_string(count)));
            over.push(("target", opt_string(target)));
            over.push(("t_final", opt_string(t_final)));
            over.push(("dt", opt_string(dt)));
            "exact"
        }
    };
    (name, over)
}

fn emit_error(code: i32, kind: &str, msg: &str) {
    let one_line = msg.replace('\n', " ");
    let escaped = one_line.trim().replace('"', "'");
    eprintln!("error code={code} kind={kind} msg=\"{escaped}\"");
}

fn drive(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        if t > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
        }
    }
    let file_text = match &cli.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("config {}: {e}", path.display()))
        })?),
        None => None,
    };
    let (name, overlay) = flag_overlay(&cli);
    let resolved = Resolved::build(name, file_text.as_deref(), &overlay)?;
    let outdir = PathBuf::from(resolved.get_str("outdir")?);
    let mut art = commands::run(&resolved)?;
    art.push("manifest.txt", output::manifest(&resolved));
    art.write_all(&outdir)?;
    Ok(())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            // first line only; the rest is usage boilerplate
            let msg = e.to_string();
            emit_error(2, "usage", msg.lines().next().unwrap_or("bad arguments"));
            std::process::exit(2);
        }
    };
    let code = match drive(cli) {
        Ok(()) => 0,
        Err(e) => {
            emit_error(e.exit_code(), e.kind(), &e.to_string());
            e.exit_code()
        }
    };
    std::process::exit(code);
}
