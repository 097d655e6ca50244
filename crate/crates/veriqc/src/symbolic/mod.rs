//! The symbolic equivalence engine.
//!
//! Circuits execute over registers of uninterpreted terms; certified
//! rewrite rules and per-goal assumptions turn equivalence questions into
//! term rewriting; refutation falls back to the dense matrix oracle.

pub mod prover;
pub mod rules;
pub mod smtlib;
pub mod solver;
pub mod term;

pub use prover::{prove, Assumption, ProofGoal, ProverConfig, Verdict, Witness};
pub use rules::{
    builtin_rule, builtin_rules, instantiate_fragment, mutated_rules, CompiledRule, RewriteRule,
};
pub use term::{circuit_fragment, sym_apply, AngleExpr, FragItem, SymGate, Term, TermKind};
