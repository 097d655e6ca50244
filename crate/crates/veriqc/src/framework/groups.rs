//! Maximal pairwise-commuting gate groups and the rewrite defined on them.
//!
//! Commutation is not transitive (see the counterexamples in
//! [`crate::commute`]), so group membership is decided against *every*
//! gate already in the group, never just the previous one. Within such a
//! group any reordering preserves the circuit, which licenses two local
//! rewrites:
//!
//! * identical self-inverse gates (x, h, cx) cancel in pairs, keeping one
//!   copy when the count is odd;
//! * diagonal phase gates (z, t, u1) on one qubit fuse into a single u1
//!   whose angle is the sum, dropped entirely when the sum is a multiple
//!   of two pi.
//!
//! Both rewrites are exact equalities of unitaries (z and t *are* u1 of
//! pi and pi/4), not merely up-to-phase, and the tests check them against
//! the dense oracle.

use crate::circuit::{Circuit, Gate, GateKind};
use crate::commute::{commutes, in_commute_set};
use crate::error::Result;
use crate::tolerances::ANGLE_TOL;

/// Split `c` into consecutive runs of gate indices whose members commute
/// pairwise. Gates outside the commutation table's vocabulary and
/// conditioned gates become singleton groups and act as hard barriers.
pub fn commutation_groups(c: &Circuit) -> Result<Vec<Vec<usize>>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    for (i, gate) in c.gates.iter().enumerate() {
        if !in_commute_set(gate.kind) || gate.conditioned {
            if !current.is_empty() {
                groups.push(std::mem::take(&mut current));
            }
            groups.push(vec![i]);
            continue;
        }
        let joins = {
            let mut ok = true;
            for &j in &current {
                if !commutes(&c.gates[j], gate)? {
                    ok = false;
                    break;
                }
            }
            ok
        };
        if joins {
            current.push(i);
        } else {
            groups.push(std::mem::take(&mut current));
            current.push(i);
        }
    }
    if !current.is_empty() {
        groups.push(current);
    }
    Ok(groups)
}

/// Angle a diagonal gate contributes to a fused u1, or `None` when the
/// gate is not in the diagonal phase family.
fn phase_angle(gate: &Gate) -> Option<f64> {
    match gate.kind {
        GateKind::Z => Some(std::f64::consts::PI),
        GateKind::T => Some(std::f64::consts::FRAC_PI_4),
        GateKind::U1 => Some(gate.params[0]),
        _ => None,
    }
}

fn is_self_inverse(kind: GateKind) -> bool {
    matches!(kind, GateKind::X | GateKind::H | GateKind::Cx)
}

/// Angle distance from the nearest multiple of two pi.
fn from_identity(angle: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let r = angle.rem_euclid(tau);
    r.min(tau - r)
}

/// Rewrite one commuting group: pair-cancel identical self-inverse gates,
/// fuse same-qubit phase gates. Survivors keep the position of their first
/// occurrence. Singleton groups pass through untouched, which both leaves
/// conditioned/out-of-vocabulary gates alone and avoids churning a lone z
/// into a u1 for no gain.
pub fn rewrite_group(gates: &[Gate]) -> Vec<Gate> {
    if gates.len() <= 1 {
        return gates.to_vec();
    }
    let mut out: Vec<Gate> = Vec::with_capacity(gates.len());
    let mut emitted_parity: Vec<(GateKind, Vec<usize>)> = Vec::new();
    let mut emitted_phase: Vec<usize> = Vec::new();
    for (i, gate) in gates.iter().enumerate() {
        if is_self_inverse(gate.kind) {
            let key = (gate.kind, gate.qubits.clone());
            if emitted_parity.contains(&key) {
                continue;
            }
            emitted_parity.push(key);
            let copies = gates
                .iter()
                .filter(|g| g.kind == gate.kind && g.qubits == gate.qubits)
                .count();
            if copies % 2 == 1 {
                out.push(gate.clone());
            }
        } else if phase_angle(gate).is_some() {
            let q = gate.qubits[0];
            if emitted_phase.contains(&q) {
                continue;
            }
            emitted_phase.push(q);
            let family: Vec<&Gate> = gates[i..]
                .iter()
                .filter(|g| g.qubits == [q] && phase_angle(g).is_some())
                .collect();
            if family.len() == 1 {
                out.push(gate.clone());
                continue;
            }
            let total: f64 = family.iter().map(|g| phase_angle(g).unwrap()).sum();
            if from_identity(total) > ANGLE_TOL {
                out.push(Gate::u1(wrap_angle(total), q));
            }
        } else {
            out.push(gate.clone());
        }
    }
    out
}

/// Map into (-pi, pi] purely for readable output.
fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut x = a % tau;
    if x <= -std::f64::consts::PI {
        x += tau;
    } else if x > std::f64::consts::PI {
        x -= tau;
    }
    x
}

/// Group the whole circuit and rewrite every group in place.
pub fn cancel_commuting(c: &Circuit) -> Result<Circuit> {
    let mut gates = Vec::with_capacity(c.gates.len());
    for group in commutation_groups(c)? {
        let members: Vec<Gate> = group.iter().map(|&i| c.gates[i].clone()).collect();
        gates.extend(rewrite_group(&members));
    }
    Circuit::with_gates(c.nqreg, gates)
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::circuits_equiv;
    use crate::tolerances::EQUIV_TOL;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// A trace worth pinning: the middle five gates form one commuting
    /// group (the z slides past the cx control, the x past its target),
    /// inside which both z's fuse away and both cx's pair-cancel, leaving
    /// just the x. The flanking cx(1,0)'s sit in their own groups because
    /// z(0) hits their *target*.
    #[test]
    fn grouping_and_rewrite_walkthrough() {
        let c = Circuit::with_gates(
            2,
            vec![
                Gate::cx(1, 0),
                Gate::z(0),
                Gate::x(1),
                Gate::cx(0, 1),
                Gate::z(0),
                Gate::cx(0, 1),
                Gate::cx(1, 0),
            ],
        )
        .unwrap();
        let groups = commutation_groups(&c).unwrap();
        assert_eq!(groups, vec![vec![0], vec![1, 2, 3, 4, 5], vec![6]]);

        let out = cancel_commuting(&c).unwrap();
        let expect =
            Circuit::with_gates(2, vec![Gate::cx(1, 0), Gate::x(1), Gate::cx(1, 0)]).unwrap();
        assert_eq!(out, expect);
        assert!(circuits_equiv(&c, &out, EQUIV_TOL).unwrap());
    }

    /// Groups are built by checking *every* member. The chain cx(0,2),
    /// cx(0,1), cx(2,1) commutes neighbor-to-neighbor but the endpoints
    /// conflict, so it must split.
    #[test]
    fn pairwise_check_splits_nontransitive_chain() {
        let c = Circuit::with_gates(
            3,
            vec![Gate::cx(0, 2), Gate::cx(0, 1), Gate::cx(2, 1)],
        )
        .unwrap();
        let groups = commutation_groups(&c).unwrap();
        assert_eq!(groups, vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn conditioned_and_foreign_gates_are_barriers() {
        let c = Circuit::with_gates(
            2,
            vec![
                Gate::z(0),
                Gate::x(0).conditioned(),
                Gate::z(0),
                Gate::swap(0, 1),
                Gate::t(1),
            ],
        )
        .unwrap();
        let groups = commutation_groups(&c).unwrap();
        assert_eq!(groups, vec![vec![0], vec![1], vec![2], vec![3], vec![4]]);
        // Nothing fuses across the barriers; the circuit survives as-is.
        let out = cancel_commuting(&c).unwrap();
        assert_eq!(out, c);
    }

    #[test]
    fn phase_family_fuses_additively() {
        // z, t, u1(0.5) on one qubit all commute; they become one u1.
        let c = Circuit::with_gates(
            1,
            vec![Gate::z(0), Gate::t(0), Gate::u1(0.5, 0)],
        )
        .unwrap();
        let out = cancel_commuting(&c).unwrap();
        assert_eq!(out.gates.len(), 1);
        assert_eq!(out.gates[0].kind, GateKind::U1);
        assert!(circuits_equiv(&c, &out, EQUIV_TOL).unwrap());

        // t applied eight times is a full turn: everything vanishes.
        let c = Circuit::with_gates(1, vec![Gate::t(0); 8]).unwrap();
        let out = cancel_commuting(&c).unwrap();
        assert!(out.gates.is_empty());
    }

    #[test]
    fn odd_parity_keeps_one_copy() {
        let c = Circuit::with_gates(
            2,
            vec![Gate::cx(0, 1), Gate::cx(0, 1), Gate::cx(0, 1)],
        )
        .unwrap();
        let out = cancel_commuting(&c).unwrap();
        assert_eq!(out.gates, vec![Gate::cx(0, 1)]);
    }

    fn random_vocab_gate(rng: &mut ChaCha8Rng, nqreg: usize) -> Gate {
        let angle = |rng: &mut ChaCha8Rng| {
            rng.random_range(-std::f64::consts::TAU..std::f64::consts::TAU)
        };
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

    /// The rewrite preserves the unitary on random circuits, and every
    /// produced group really is pairwise commuting.
    #[test]
    fn rewrite_preserves_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..300 {
            let n = rng.random_range(2..=4);
            let len = rng.random_range(0..=20);
            let gates: Vec<Gate> = (0..len).map(|_| random_vocab_gate(&mut rng, n)).collect();
            let c = Circuit::with_gates(n, gates).unwrap();
            for group in commutation_groups(&c).unwrap() {
                for (a, &i) in group.iter().enumerate() {
                    for &j in &group[a + 1..] {
                        if group.len() > 1 {
                            assert!(commutes(&c.gates[i], &c.gates[j]).unwrap());
                        }
                    }
                }
            }
            let out = cancel_commuting(&c).unwrap();
            assert!(
                circuits_equiv(&c, &out, EQUIV_TOL).unwrap(),
                "rewrite changed semantics of {c}"
            );
            assert!(out.gates.len() <= c.gates.len(), "rewrite must not grow circuits");
        }
    }
}
