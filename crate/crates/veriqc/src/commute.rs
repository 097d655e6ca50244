//! Pairwise gate commutation decided by a closed-form table.
//!
//! [`commutes`] covers the restricted set `{cx, x, z, h, t, u1, u2, u3}`
//! on unconditioned gates and answers whether the two gates' order can be
//! exchanged without changing the circuit's unitary. The table is
//! *angle-generic*: a `true` entry holds for every parameter assignment,
//! and a `false` entry means the gates fail to commute for generic angles.
//! Parameter coincidences that happen to commute anyway (a u3 that equals
//! the identity, say) still answer `false`; callers only ever lose an
//! optimization opportunity from that, never soundness.
//!
//! The table is not an axiom: [`commutes_by_matrix`] recomputes the answer
//! from the dense oracle, and the tests drive thousands of random gate
//! pairs through both deciders. One structural fact the tests also pin
//! down: commutation is *not* transitive, not even between gates that all
//! share qubits, so any grouping built on it must check every pair rather
//! than chain neighbor-by-neighbor. Two counterexamples live at the bottom
//! of this file.

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::matrix::circuit_unitary;
use crate::tolerances::ANGLE_TOL;

/// Kinds the table covers.
pub const COMMUTE_KINDS: [GateKind; 8] = [
    GateKind::Cx,
    GateKind::X,
    GateKind::Z,
    GateKind::H,
    GateKind::T,
    GateKind::U1,
    GateKind::U2,
    GateKind::U3,
];

/// Whether the table covers this kind.
pub fn in_commute_set(kind: GateKind) -> bool {
    COMMUTE_KINDS.contains(&kind)
}

/// Diagonal gates (in the computational basis) within the restricted set;
/// any two of these commute on the same qubit, and any of them slides past
/// a CX control.
fn is_diagonal(kind: GateKind) -> bool {
    matches!(kind, GateKind::Z | GateKind::T | GateKind::U1)
}

fn same_params(a: &Gate, b: &Gate) -> bool {
    a.params.len() == b.params.len()
        && a.params
            .iter()
            .zip(&b.params)
            .all(|(x, y)| (x - y).abs() <= ANGLE_TOL)
}

/// Decide commutation of two gates from the restricted set.
///
/// Errors on kinds outside the set and on conditioned gates, whose
/// execution depends on a classical bit the table cannot see.
pub fn commutes(a: &Gate, b: &Gate) -> Result<bool> {
    for g in [a, b] {
        if !in_commute_set(g.kind) {
            return Err(Error::UnsupportedCommutation { kind: g.kind });
        }
        if g.conditioned {
            return Err(Error::ConditionedGate);
        }
    }

    // Disjoint supports always commute.
    if !a.shares_qubit(b) {
        return Ok(true);
    }

    match (a.kind, b.kind) {
        (GateKind::Cx, GateKind::Cx) => {
            let (ac, at) = (a.qubits[0], a.qubits[1]);
            let (bc, bt) = (b.qubits[0], b.qubits[1]);
            // Identical gates commute; sharing only controls or only
            // targets commutes; a control meeting a target does not.
            Ok((ac == bc && at == bt) || (ac == bc && at != bt) || (at == bt && ac != bc))
        }
        (GateKind::Cx, _) => Ok(one_q_vs_cx(b, a)),
        (_, GateKind::Cx) => Ok(one_q_vs_cx(a, b)),
        _ => {
            // Both single-qubit on the same qubit.
            if is_diagonal(a.kind) && is_diagonal(b.kind) {
                return Ok(true);
            }
            // Equal gates commute with themselves regardless of kind.
            Ok(a.kind == b.kind && same_params(a, b))
        }
    }
}

/// Single-qubit `g` against CX `cx` with at least one shared qubit:
/// diagonal gates slide past the control, X slides past the target.
fn one_q_vs_cx(g: &Gate, cx: &Gate) -> bool {
    let q = g.qubits[0];
    if q == cx.qubits[0] {
        is_diagonal(g.kind)
    } else {
        g.kind == GateKind::X
    }
}

/// Reference decision from the dense oracle: embed both orders on the
/// joint register and compare unitaries at `tol`.
pub fn commutes_by_matrix(a: &Gate, b: &Gate, tol: f64) -> Result<bool> {
    let n = a
        .qubits
        .iter()
        .chain(&b.qubits)
        .copied()
        .max()
        .map(|m| m + 1)
        .unwrap_or(1);
    let ab = Circuit::with_gates(n, vec![a.clone(), b.clone()])?;
    let ba = Circuit::with_gates(n, vec![b.clone(), a.clone()])?;
    let uab = circuit_unitary(&ab)?;
    let uba = circuit_unitary(&ba)?;
    Ok(uab.max_abs_diff(&uba)? <= tol)
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_table_gate(rng: &mut ChaCha8Rng, nqreg: usize) -> Gate {
        let angle = |rng: &mut ChaCha8Rng| rng.random_range(-std::f64::consts::TAU..std::f64::consts::TAU);
        let q = rng.random_range(0..nqreg);
        match rng.random_range(0..8) {
            0 => {
                let mut t = rng.random_range(0..nqreg - 1);
                if t >= q {
                    t += 1;
                }
                Gate::cx(q, t)
            }
            1 => Gate::x(q),
            2 => Gate::z(q),
            3 => Gate::h(q),
            4 => Gate::t(q),
            5 => Gate::u1(angle(rng), q),
            6 => Gate::u2(angle(rng), angle(rng), q),
            _ => Gate::u3(angle(rng), angle(rng), angle(rng), q),
        }
    }

    /// The table agrees with the matrix oracle on thousands of random
    /// pairs with generic (continuous random) angles.
    #[test]
    fn table_matches_matrix_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for _ in 0..4000 {
            let n = rng.random_range(2..=4);
            let a = random_table_gate(&mut rng, n);
            let b = random_table_gate(&mut rng, n);
            let table = commutes(&a, &b).unwrap();
            let oracle = commutes_by_matrix(&a, &b, 1e-9).unwrap();
            assert_eq!(table, oracle, "disagreement on {a} vs {b}");
        }
    }

    #[test]
    fn known_pairs() {
        // Diagonal past control, X past target.
        assert!(commutes(&Gate::z(0), &Gate::cx(0, 1)).unwrap());
        assert!(commutes(&Gate::t(0), &Gate::cx(0, 1)).unwrap());
        assert!(commutes(&Gate::u1(0.3, 0), &Gate::cx(0, 1)).unwrap());
        assert!(commutes(&Gate::x(1), &Gate::cx(0, 1)).unwrap());
        // The converses fail.
        assert!(!commutes(&Gate::x(0), &Gate::cx(0, 1)).unwrap());
        assert!(!commutes(&Gate::z(1), &Gate::cx(0, 1)).unwrap());
        assert!(!commutes(&Gate::h(0), &Gate::cx(0, 1)).unwrap());
        // CX pairs.
        assert!(commutes(&Gate::cx(0, 1), &Gate::cx(0, 2)).unwrap());
        assert!(commutes(&Gate::cx(0, 2), &Gate::cx(1, 2)).unwrap());
        assert!(commutes(&Gate::cx(0, 1), &Gate::cx(0, 1)).unwrap());
        assert!(!commutes(&Gate::cx(0, 1), &Gate::cx(1, 2)).unwrap());
        assert!(!commutes(&Gate::cx(0, 1), &Gate::cx(1, 0)).unwrap());
        // Same qubit, diagonal family.
        assert!(commutes(&Gate::z(0), &Gate::t(0)).unwrap());
        assert!(commutes(&Gate::u1(0.1, 0), &Gate::u1(2.2, 0)).unwrap());
        // Same qubit, non-diagonal: only identical gates pass.
        assert!(commutes(&Gate::h(0), &Gate::h(0)).unwrap());
        assert!(!commutes(&Gate::h(0), &Gate::x(0)).unwrap());
        assert!(commutes(&Gate::u2(0.5, 1.5, 0), &Gate::u2(0.5, 1.5, 0)).unwrap());
        assert!(!commutes(&Gate::u2(0.5, 1.5, 0), &Gate::u2(0.6, 1.5, 0)).unwrap());
        // Disjoint.
        assert!(commutes(&Gate::h(0), &Gate::u3(1.0, 2.0, 3.0, 1)).unwrap());
    }

    #[test]
    fn rejects_outside_set_and_conditioned() {
        assert!(matches!(
            commutes(&Gate::s(0), &Gate::h(1)),
            Err(Error::UnsupportedCommutation { kind: GateKind::S })
        ));
        assert!(matches!(
            commutes(&Gate::swap(0, 1), &Gate::h(2)),
            Err(Error::UnsupportedCommutation { kind: GateKind::Swap })
        ));
        assert!(matches!(
            commutes(&Gate::x(0).conditioned(), &Gate::h(1)),
            Err(Error::ConditionedGate)
        ));
    }

    /// Commutation fails transitivity through disjointness: z(0) ~ t(1)
    /// and t(1) ~ x(0), but z(0) and x(0) anticommute.
    #[test]
    fn not_transitive_via_disjoint_links() {
        let z0 = Gate::z(0);
        let t1 = Gate::t(1);
        let x0 = Gate::x(0);
        assert!(commutes(&z0, &t1).unwrap());
        assert!(commutes(&t1, &x0).unwrap());
        assert!(!commutes(&z0, &x0).unwrap());
    }

    /// Transitivity fails even when every pair shares a qubit: cx(0,2) ~
    /// cx(0,1) through the common control, cx(0,1) ~ cx(2,1) through the
    /// common target, but cx(0,2) and cx(2,1) meet control-on-target.
    #[test]
    fn not_transitive_even_when_all_pairs_share() {
        let a = Gate::cx(0, 2);
        let b = Gate::cx(0, 1);
        let c = Gate::cx(2, 1);
        assert!(a.shares_qubit(&c), "every pair here shares a qubit");
        assert!(commutes(&a, &b).unwrap());
        assert!(commutes(&b, &c).unwrap());
        assert!(!commutes(&a, &c).unwrap());
        // The oracle agrees that the endpoints truly conflict.
        assert!(!commutes_by_matrix(&a, &c, 1e-9).unwrap());
    }
}
