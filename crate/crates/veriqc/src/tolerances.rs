//! Numeric tolerances and resource budgets, pinned in one place.
//!
//! Every approximate comparison and every bounded search in the crate reads
//! its threshold from here, so the trust story is auditable: a reviewer can
//! see exactly how much float error we accept and why, and tests can assert
//! the ordering relations between the tiers.
//!
//! The tiers, from tightest to loosest:
//!
//! * `1e-12`: construction-time checks on single 2x2/4x4 gate matrices and
//!   identity elision after merging. A handful of products of exactly
//!   representable entries accumulates error near machine epsilon (~2e-16
//!   per operation), so anything above 1e-12 indicates a real defect.
//! * `1e-9`: equivalence of whole circuits and equality of angles. Circuits
//!   under test stay below ~5000 gates on at most twelve qubits; the
//!   accumulated error of that many embedded-gate applications stays orders
//!   of magnitude below 1e-9 while genuine inequivalences (a wrong gate, a
//!   dropped angle) show up at 1e-1 or worse.
//! * `1e-8`: unitarity of accumulated circuit products, slightly looser than
//!   the equivalence tier because the deviation norm squares the error.
//! * `0.1`: the *minimum* deviation a counterexample must exhibit before we
//!   report a pass as broken. Refutations should be unmistakable, not
//!   tolerance-edge noise.

/// Two angles are the same angle below this difference (radians).
pub const ANGLE_TOL: f64 = 1e-9;

/// Default tolerance for circuit equivalence up to global phase.
pub const EQUIV_TOL: f64 = 1e-9;

/// Max entrywise deviation allowed when constructing a single gate matrix.
pub const GATE_UNITARITY_TOL: f64 = 1e-12;

/// Max deviation of `U * U^dagger` from identity for accumulated circuits.
pub const CIRCUIT_UNITARITY_TOL: f64 = 1e-8;

/// A merged single-qubit product this close to identity is dropped outright.
pub const IDENTITY_DROP_TOL: f64 = 1e-12;

/// Minimum matrix deviation for a reported counterexample.
pub const COUNTEREXAMPLE_MIN_DEVIATION: f64 = 0.1;

/// Minimum deviation for the prover to call two concrete circuits
/// inequivalent during refutation search (clear of the 1e-9 equality tier,
/// but far below [`COUNTEREXAMPLE_MIN_DEVIATION`] so shrinking has room).
pub const REFUTATION_MIN_DEVIATION: f64 = 1e-6;

/// Dense matrices are built only for registers up to this many qubits.
/// Thirteen qubits would need a 8192x8192 complex matrix per circuit side
/// (1 GiB apiece); twelve keeps the oracle under a quarter of that.
pub const ORACLE_QUBIT_CAP: usize = 12;

/// Symbolic terms deeper than this abort the proof attempt. Goals produced
/// by the pass verifier stay under a few dozen layers; hitting this bound
/// means a rewrite loop is expanding instead of reducing.
pub const TERM_DEPTH_BOUND: usize = 10_000;

/// Upper bound on rewrite-search states the prover may visit per goal.
pub const PROVER_NODE_BUDGET: usize = 100_000;

/// Wall-clock budget per proof goal, milliseconds.
pub const PROVER_TIME_BUDGET_MS: u64 = 5_000;

/// Angle expressions hash and compare through this quantum (radians);
/// coefficients closer than this to an integer multiple collapse together.
/// It sits an order of magnitude under [`ANGLE_TOL`] so quantization never
/// separates angles the rest of the crate considers equal.
pub const ANGLE_KEY_QUANTUM: f64 = 1e-10;

/// Conditioned branches multiply path-sensitive obligations; beyond this
/// many expanded branches a pass is rejected rather than explored.
pub const BRANCH_EXPANSION_CAP: usize = 64;

/// Fallback iteration fuse for loop templates whose bodies are not known to
/// delete on every step: generous enough for any legitimate pass over the
/// corpus, small enough to fail fast on a genuine livelock.
pub fn default_fuse(gate_count: usize, nodes: usize) -> usize {
    10 * (gate_count + 1) * (nodes + 1) + 1000
}

/// Default seed for every seeded search and generator in the crate.
pub const DEFAULT_SEED: u64 = 42;

/// Lookahead-routing window shape: number of layers and gates per layer.
pub const LOOKAHEAD_DEPTH: usize = 4;
pub const LOOKAHEAD_WIDTH: usize = 4;

/// Samples drawn per parametric rewrite rule when certifying soundness.
pub const RULE_SAMPLES: usize = 100;

#[cfg(test)]
mod tests {
    use super::*;

    /// The tiers must stay strictly ordered or the trust story collapses:
    /// gate construction tighter than circuit equivalence, equivalence
    /// tighter than the refutation floor, refutation floor far below the
    /// reported-counterexample floor.
    #[test]
    fn tolerance_tiers_are_ordered() {
        assert!(GATE_UNITARITY_TOL < CIRCUIT_UNITARITY_TOL);
        assert!(GATE_UNITARITY_TOL < EQUIV_TOL);
        assert!(EQUIV_TOL <= CIRCUIT_UNITARITY_TOL * 10.0);
        assert!(EQUIV_TOL < REFUTATION_MIN_DEVIATION);
        assert!(REFUTATION_MIN_DEVIATION < COUNTEREXAMPLE_MIN_DEVIATION);
        assert!(ANGLE_KEY_QUANTUM < ANGLE_TOL);
        assert!(IDENTITY_DROP_TOL <= GATE_UNITARITY_TOL);
    }

    #[test]
    fn all_tolerances_are_positive() {
        for t in [
            ANGLE_TOL,
            EQUIV_TOL,
            GATE_UNITARITY_TOL,
            CIRCUIT_UNITARITY_TOL,
            IDENTITY_DROP_TOL,
            COUNTEREXAMPLE_MIN_DEVIATION,
            REFUTATION_MIN_DEVIATION,
            ANGLE_KEY_QUANTUM,
        ] {
            assert!(t > 0.0);
        }
    }

    #[test]
    fn fuse_grows_with_input() {
        assert!(default_fuse(100, 16) > default_fuse(10, 16));
        assert!(default_fuse(0, 0) >= 1000);
    }
}
