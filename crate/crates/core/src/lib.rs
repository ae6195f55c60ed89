//! Optimal control for hybrid dynamical systems whose trajectories may
//! slide on a switching surface.
//!
//! The solver combines:
//!
//! - a hybrid automaton simulator that integrates smooth modes with RK4,
//!   locates surface crossings, and tracks sliding motion as an index-2
//!   DAE (`sim`),
//! - adjoint-based gradients with jump conditions at mode transitions
//!   (`adjoint`), cross-checked by forward linearization (`sensitivity`),
//! - an exact-penalty descent loop with a strictly convex direction-finding
//!   QP (`qp`, `optimizer`),
//! - a weak-maximum-principle audit of converged runs (`kkt`).
//!
//! Problems are described by small expression ASTs parsed from JSON
//! configs (`expr`, `config`); the `slidecraft` binary exposes the
//! `simulate`, `solve`, `gradcheck`, and `check-kkt` subcommands.

pub mod adjoint;
pub mod artifacts;
pub mod cli;
pub mod config;
pub mod expr;
pub mod kkt;
pub mod model;
pub mod optimizer;
pub mod qp;
pub mod sensitivity;
pub mod sim;

pub use model::HybridSystemSpec;
