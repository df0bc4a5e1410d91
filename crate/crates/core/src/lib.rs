//! Sequential sharing of Bell nonlocality.
//!
//! A single Alice shares a bipartite pure state (any local dimensions) with a
//! chain of Bobs, or an Alice and a Bob share a generalized GHZ state with a
//! chain of Charlies. Each observer in the chain measures unsharply, and the
//! post-measurement state is forwarded through the averaged Lüders channel.
//! This crate computes the exact CHSH and Svetlichny values every observer
//! sees, the closed forms they are compared against, and the sharpness
//! schedules that keep as many observers as possible above the local bound.

pub mod cascade;
pub mod error;
pub mod exec;
pub mod matrix;
pub mod measurements;
pub mod states;
pub mod sweep;
pub mod table;
pub mod verify;

pub use cascade::{
    chsh_lower_bound, chsh_expectation, luders_step, run_cascade, run_chsh_cascade,
    run_svetlichny_cascade, svetlichny_closed_form, svetlichny_expectation, CascadeConfig,
    CascadeResult, CascadeStep, Embedding, InitialState,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use matrix::{kron, trace, ComplexMatrix};
pub use measurements::{
    alice_povms_bipartite, bob_povms_bipartite, find_theta_n, find_theta_svetlichny,
    gamma_schedule_chsh, gamma_schedule_svetlichny, tripartite_povms, GridSearch, Observable,
    PovmPair, Scenario, Sharpness, SharpnessSchedule, ThetaSearch,
};
pub use states::{density_bipartite, density_ghz, schmidt_l, GhzState, SchmidtState};
