//! Quantum-compiler passes with push-button semantic verification.
//!
//! The crate has three layers that check each other:
//!
//! 1. **Ground truth**: a dense-matrix denotational semantics ([`matrix`]).
//!    Every circuit over at most twelve qubits has a concrete unitary, and
//!    equivalence is decided numerically, up to global phase.
//! 2. **Symbolic engine**: circuits execute over registers of uninterpreted
//!    qubit terms ([`symbolic`]); a catalog of rewrite rules, each certified
//!    against the matrix oracle ([`soundness`]), lets a bounded prover
//!    discharge equivalence goals for *all* inputs, including goals with
//!    unknown sub-circuits.
//! 3. **Pass framework and verifier**: passes are written against three loop
//!    templates with known invariant schemas ([`framework`]); the verifier
//!    ([`verifier`]) expands each pass into branch-level proof obligations,
//!    discharges them through the engine, and produces oracle-confirmed
//!    counterexamples when a pass is wrong.
//!
//! The shipped passes ([`passes`]) cover optimization (CX cancellation,
//! commutation-group cancellation, 1q-run merging), routing (basic and
//! lookahead swap insertion), layout, gate-direction fixing, analysis, and
//! barrier/measure restructuring. A small OpenQASM 2 subset ([`qasm`]) and
//! coupling-map files ([`coupling`]) connect the toolkit to circuits on disk.

pub mod circuit;
pub mod commute;
pub mod coupling;
pub mod framework;
pub mod generators;
pub mod matrix;
pub mod passes;
pub mod qasm;
pub mod soundness;
pub mod symbolic;
pub mod tolerances;
pub mod verifier;

mod error;

pub use circuit::{Circuit, Gate, GateKind, Layout};
pub use error::{Error, Result};
pub use matrix::UnitaryMatrix;
