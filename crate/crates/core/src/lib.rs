//! Simulation toolkit for few-level atoms coupled to one or two quantized
//! bosonic modes (cavity fields or the vibrational modes of a trapped ion).
//!
//! The crate is organized around a small set of building blocks:
//!
//! * [`hilbert`]: composite spaces atom ⊗ mode1 ⊗ mode2 with row-major basis
//!   indexing and symmetry-sector partitions,
//! * [`sparse`]: complex sparse operators with deterministic storage,
//! * [`ops`]: ladder/pseudospin/Schwinger operators, Lamb-Dicke operator
//!   functions f̂ₖ(n̂;η), kick operators e^{iη(â+â†)}, mode rotations,
//!   two-mode quadratures,
//! * [`models`]: the Hamiltonian zoo (Jaynes-Cummings through degenerate
//!   two-photon and trapped-ion sideband models) with registered constants
//!   of motion,
//! * [`states`]: state factories (coherent, pair coherent, SU(2) coherent,
//!   squeezed, cats, …) and observables,
//! * [`evolve`]: exact unitary dynamics via per-sector eigendecomposition,
//! * [`lindblad`]: master-equation integration and dark steady states,
//! * [`protocols`]: conditional-measurement state engineering.
//!
//! All Hamiltonians take ħ = 1 and angular frequencies.

pub mod evolve;
pub mod hilbert;
pub mod lindblad;
pub mod models;
pub mod ops;
pub mod protocols;
pub mod sparse;
pub mod special;
pub mod states;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported atom dimension {0} (expected 1, 2 or 3)")]
    AtomDim(usize),
    #[error("basis coordinate {name} = {value} out of range (max {max})")]
    CoordinateOutOfRange {
        name: &'static str,
        value: usize,
        max: usize,
    },
    #[error("operator is not Hermitian: max |O − O†| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    #[error("operands live on different Hilbert spaces")]
    SpaceMismatch,
    #[error("pseudospin operators need a two-level atom, got atom_dim = {0}")]
    NotTwoLevel(usize),
    #[error("model `{model}` is missing parameter `{name}`")]
    MissingParameter {
        model: &'static str,
        name: &'static str,
    },
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("state preparation discards tail norm {tail:.3e} (> {limit:.1e}); raise the cutoffs")]
    InsufficientCutoff { tail: f64, limit: f64 },
    #[error("truncation guard tripped at t = {time}: leaked norm {leaked:.3e} > {guard:.3e}")]
    GuardExceeded { time: f64, leaked: f64, guard: f64 },
    #[error("conditioning on an outcome of zero probability")]
    ImpossibleOutcome,
    #[error("measurement basis is not orthonormal (deviation {deviation:.3e})")]
    BasisNotOrthonormal { deviation: f64 },
    #[error("integrator step size underflow at t = {time} (dt = {dt:.3e})")]
    StepUnderflow { time: f64, dt: f64 },
    #[error("{0}")]
    Protocol(String),
}

pub type Result<T> = std::result::Result<T, Error>;
