//! Electric-field-gradient gate (EGGs) toolbox for trapped polar molecular ions.
//!
//! Microwave voltages applied to trap electrodes in a quadrupole configuration
//! produce an electric-field gradient that couples the internal dipole
//! transition of a molecular ion to the normal modes of the ion chain. This
//! crate models the resulting gate set on a truncated Fock space:
//!
//! - state-dependent motional displacement for state preparation and
//!   quantum-nondemolition readout ([`gates::spam_protocol`]),
//! - Mølmer–Sørensen-type two-qubit entangling gates that remain valid for
//!   thermal motional states ([`gates::u_ms`], [`scenarios::ms_scenario`]),
//! - ultrafast controlled-phase gates built from impulsive spin-dependent
//!   momentum kicks ([`ultrafast`]),
//!
//! together with a time-dependent Schrödinger integrator ([`dynamics`]) used
//! to check the analytic propagators against the full drive Hamiltonian.
//!
//! All core math is generic over the real scalar type via the [`scalar::Real`]
//! trait; concrete `f64` aliases are exported at the crate root.

pub mod config;
pub mod constants;
pub mod dynamics;
pub mod fock;
pub mod gates;
pub mod model;
pub mod scalar;
pub mod scenarios;
pub mod ultrafast;

pub use scalar::{Real, C};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("operator/state Hilbert-space mismatch")]
    SpaceMismatch,
    #[error("mode index {index} out of range ({n_modes} modes)")]
    InvalidMode { index: usize, n_modes: usize },
    #[error("molecule index {index} out of range ({n_molecules} molecules)")]
    InvalidMolecule { index: usize, n_molecules: usize },
    #[error(
        "displacement |alpha|^2 = {alpha_sq:.3} exceeds the truncation guard \
         {guard} * n_max with n_max = {n_max}; need n_max >= {needed_n_max}"
    )]
    TruncationGuard {
        alpha_sq: f64,
        guard: f64,
        n_max: usize,
        needed_n_max: usize,
    },
    #[error("state norm drifted by {drift:.3e} (tolerance {tol:.1e}) during evolution")]
    NormDrift { drift: f64, tol: f64 },
    #[error(
        "population {population:.3e} in the top two Fock levels of mode {mode} \
         exceeds {limit:.1e}; increase the truncation"
    )]
    TruncationBreach {
        mode: usize,
        population: f64,
        limit: f64,
    },
    #[error(
        "detection threshold {threshold:.3} (units of hbar*omega_q) does not separate \
         the deposited-energy distributions: dark mean {dark_mean:.3}, bright mean \
         {bright_mean:.3}"
    )]
    AmbiguousThreshold {
        threshold: f64,
        dark_mean: f64,
        bright_mean: f64,
    },
    #[error(
        "pulse-sequence solver did not converge: best closure residuals \
         ({closure_com:.3e}, {closure_rel:.3e}), phase error {phase_err:.3e}"
    )]
    SolverFailed {
        closure_com: f64,
        closure_rel: f64,
        phase_err: f64,
    },
    #[error("{0}")]
    Unsupported(String),
}

pub type Result<V> = std::result::Result<V, Error>;

// Concrete f64 instantiations.
pub type HilbertSpace = fock::HilbertSpace;
pub type StateVector64 = fock::StateVector<f64>;
pub type MixedEnsemble64 = fock::MixedEnsemble<f64>;
pub type Operator64 = fock::Operator<f64>;
pub type Hamiltonian64 = dynamics::Hamiltonian<f64>;
pub type EvolutionResult64 = dynamics::EvolutionResult<f64>;
pub type ExperimentConfig64 = config::ExperimentConfig<f64>;
pub type PulseSequence64 = ultrafast::PulseSequence<f64>;
