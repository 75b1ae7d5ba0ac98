//! Distance-type nonclassical degree of pure states of one and two bosonic modes.
//!
//! The degree of a pure state `|ψ⟩` is its smallest value of `1 − |⟨β|ψ⟩|²` over
//! coherent states `|β⟩` (product coherent states `|α, β⟩` for two modes), which
//! equals `1 − π^modes · max Q` for the Husimi function `Q`. The crate evaluates
//! it by global maximization of `Q` in a truncated Fock basis, together with the
//! von Neumann entanglement entropy, the Mandel factor and phase-space
//! cross-checks (Wigner function and its Gaussian smoothing into `Q`).
//!
//! - [`states`]: Fock-basis state types, named constructors, spec parsing, JSON files.
//! - [`phase_space`]: overlaps, Husimi/Wigner functions, W→Q quadrature, distances.
//! - [`optimize`]: multistart Nelder-Mead maximizer and a brute-force lattice oracle.
//! - [`measures`]: degree, entropy, Mandel factor, closed-form references.

#![forbid(unsafe_code)]

pub mod error;
pub mod measures;
pub mod numfmt;
pub mod optimize;
pub mod phase_space;
pub mod special;
pub mod states;

pub use error::{Error, Result};
pub use measures::{
    closed_form_degree, compose_product_degree, entanglement_entropy, mandel_q, measure, nonclassical_degree,
    nonclassical_degree2, ClosedForm, MeasureReport,
};
pub use optimize::{brute_force_max, maximize, maximize_q, maximize_q2, MaxResult, OptimizerConfig};
pub use phase_space::{
    coherent_overlap, distance_bu, distance_hs, fidelity, husimi_q, husimi_q2, q_from_w, wigner, GridSpec, PhasePoint,
};
pub use states::{
    make_coherent, make_fock, make_phi_family, make_product, make_psi_family, parse_state, Amplitude, BipartiteState,
    Sign, SingleModeState, State,
};
