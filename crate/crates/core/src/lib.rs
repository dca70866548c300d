//! Collective bosonic excitations of a laser-driven Rydberg lattice gas.
//!
//! The library covers the pipeline from lattice geometry to observables:
//!
//! * [`lattice`] — site layouts (square / triangular / custom) and Gaussian
//!   positional disorder;
//! * [`hamiltonian`] — van der Waals couplings, the collective-mode
//!   eigenproblem, and manifold energies of the quadratic boson model;
//! * [`symmetry`] — lattice point groups and classification of modes into
//!   fully symmetric vs. other representations;
//! * [`absorption`] — excitation intensities of one- and two-boson states
//!   and disorder-averaged absorption profiles;
//! * [`perturbation`] — second-order energy corrections bounding the
//!   validity of the quadratic picture;
//! * [`photon`] — radiative decay of a one-boson state and the angular
//!   distribution of the emitted photon;
//! * [`exactdyn`] — exact diagonalization and driven dynamics of the full
//!   spin model on small systems.
//!
//! Energies are in units of the nearest-neighbour interaction; distances in
//! units of the lattice constant. All routines are deterministic, including
//! under `rayon` parallelism (ordered reductions only).

/// Crate version, exposed so downstream tools can record artifact provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod absorption;
pub mod error;
pub mod exactdyn;
pub mod hamiltonian;
pub mod lattice;
pub mod linalg;
pub mod perturbation;
pub mod photon;
pub mod symmetry;

pub use absorption::{
    disordered_profile, intensity_one, intensity_two, render_profile, AbsorptionProfile,
    AbsorptionStickSet, DisorderConfig, DisorderSummary, Stick,
};
pub use error::{CoreError, Result};
pub use exactdyn::{
    evolve_with_drive, exact_spectrum, exact_spectrum_with, prepare_minus, DriveProtocol,
    EvolutionRecord, ExactSpectrum, SpinHamiltonian, MAX_SITES, MAX_SITES_EVOLVE,
};
pub use hamiltonian::{
    boson_density, coupling_matrix, eigensystem, ground_energy, manifold_energies, BosonState,
    CouplingMatrix, EigenSystem, ManifoldEnergies, ModelParams,
};
pub use lattice::{apply_disorder, build_lattice, Lattice, LatticeKind, LatticeSpec};
pub use perturbation::{
    error_table, perturbation_terms, round_sig2, shift_ground_closed_form,
    shift_ground_sum_over_states, shift_one_boson, shift_one_boson_naive, shift_report,
    PerturbationTerms, ShiftKind, ShiftReport,
};
pub use photon::{
    angular_distribution, angular_distribution_quadrature, beam_finder, radiative_eigen,
    radiative_matrix, AngularDistribution, AngularGrid, Beam, QuadratureResult,
    RadiativeDecomposition,
};
pub use symmetry::{
    a1_projector, build_group, classify_modes, ModeClassification, ModeLabel, SymmetryGroup,
};
