//! Merging adjacent one-qubit gates into a single u-family gate.
//!
//! The merge contract is matrix composition up to global phase:
//! `merge_1q(g1, g2)` denotes `M(g1) * M(g2)`, the first argument's matrix
//! on the left. Since circuits apply left-to-right, the first argument is
//! the *later* gate of a temporal pair; folding a run `r1; r2; ...; rk`
//! therefore accumulates `merge_1q(r_i, acc)`.
//!
//! Recomposition picks the smallest gate that represents the product: a
//! diagonal product becomes `u1`, anything else `u3`, via a ZY-decomposition
//! read directly off the matrix entries.

use crate::circuit::{Gate, GateKind};
use crate::error::{Error, Result};
use crate::matrix::{gate_matrix, phase_aligned_deviation, UnitaryMatrix};

/// Gate kinds `merge_1q` accepts. Y is deliberately absent: the passes
/// that use merging first canonicalize Y away, and keeping the set tight
/// keeps the contract easy to certify.
pub const MERGEABLE_1Q: [GateKind; 9] = [
    GateKind::U1,
    GateKind::U2,
    GateKind::U3,
    GateKind::Rz,
    GateKind::H,
    GateKind::X,
    GateKind::Z,
    GateKind::T,
    GateKind::S,
];

pub fn is_mergeable_1q(kind: GateKind) -> bool {
    MERGEABLE_1Q.contains(&kind)
}

/// Threshold under which an off-diagonal magnitude counts as zero and the
/// product collapses to a phase gate. Far below the equivalence tolerance
/// so that near-diagonal-but-not-diagonal products keep their u3 form.
const DIAGONAL_TOL: f64 = 1e-12;

/// Merge two one-qubit gates on the same qubit into one gate whose matrix
/// is `M(g1) * M(g2)` up to global phase.
///
/// Returns `Ok(None)` when either gate is conditioned: a conditioned gate
/// only fires on one branch, so the pair has no single product matrix and
/// the caller must leave the gates alone.
pub fn merge_1q(g1: &Gate, g2: &Gate) -> Result<Option<Gate>> {
    for g in [g1, g2] {
        if !is_mergeable_1q(g.kind) {
            return Err(Error::NotMergeable1q { kind: g.kind });
        }
    }
    if g1.qubits != g2.qubits {
        return Err(Error::DifferentQubits { a: g1.qubits[0], b: g2.qubits[0] });
    }
    if g1.conditioned || g2.conditioned {
        return Ok(None);
    }
    let q = g1.qubits[0];
    let m1 = gate_matrix(g1)?;
    let m2 = gate_matrix(g2)?;
    let p = m1.matmul(&m2)?;
    let merged = recompose(&p, q);
    debug_assert!(
        {
            let back = gate_matrix(&merged).unwrap();
            phase_aligned_deviation(&back, &p).unwrap() < 1e-9
        },
        "recomposition drifted from the product matrix"
    );
    Ok(Some(merged))
}

/// Express a 2x2 unitary as `u1` or `u3`, discarding global phase.
///
/// With the matrix written as `e^{i a} * u3(theta, phi, lam)`, the entries
/// read `P00 = e^{i a} cos(theta)`, `P10 = e^{i a} e^{i phi} sin(theta)`,
/// `P01 = -e^{i a} e^{i lam} sin(theta)`, which pins every angle once the
/// reference phase `a` is chosen. `theta` lands in `[0, pi/2]`, where both
/// `cos` and `sin` are nonnegative, so magnitudes recover it directly.
fn recompose(p: &UnitaryMatrix, q: usize) -> Gate {
    let (p00, p01, p10, p11) = (p.get(0, 0), p.get(0, 1), p.get(1, 0), p.get(1, 1));
    if p01.norm() < DIAGONAL_TOL && p10.norm() < DIAGONAL_TOL {
        let lam = (p11 * p00.conj()).arg();
        return Gate::u1(lam, q);
    }
    let theta = p10.norm().atan2(p00.norm());
    if p00.norm() >= DIAGONAL_TOL {
        let alpha = p00.arg();
        let phi = p10.arg() - alpha;
        let lam = (-p01).arg() - alpha;
        Gate::u3(theta, normalize_angle(phi), normalize_angle(lam), q)
    } else {
        // cos(theta) ~ 0: the reference phase is invisible in P00, so put
        // it on P10 instead, which forces phi = 0.
        let alpha = p10.arg();
        let lam = (-p01).arg() - alpha;
        Gate::u3(theta, 0.0, normalize_angle(lam), q)
    }
}

/// Map into (-pi, pi] for readable output; any representative modulo 2*pi
/// denotes the same gate.
fn normalize_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut x = a % tau;
    if x <= -std::f64::consts::PI {
        x += tau;
    } else if x > std::f64::consts::PI {
        x -= tau;
    }
    x
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{circuits_equiv, gate_matrix};
    use crate::circuit::Circuit;
    use crate::tolerances::EQUIV_TOL;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn tau_eq(a: f64, b: f64) -> bool {
        let d = (a - b).rem_euclid(std::f64::consts::TAU);
        d < 1e-9 || d > std::f64::consts::TAU - 1e-9
    }

    /// Folding a phase gate into a following u3 lands the angle on the
    /// phi parameter: merge(u1(l1), u3(t, p, l)) = u3(t, l1 + p, l).
    #[test]
    fn u1_into_u3_adds_to_phi() {
        let l1 = 0.3125;
        let (t, p, l) = (0.7, -1.2, 2.1);
        let merged = merge_1q(&Gate::u1(l1, 0), &Gate::u3(t, p, l, 0))
            .unwrap()
            .expect("unconditioned");
        assert_eq!(merged.kind, GateKind::U3);
        assert!((merged.params[0] - t).abs() < 1e-12, "theta {}", merged.params[0]);
        assert!(tau_eq(merged.params[1], l1 + p), "phi {}", merged.params[1]);
        assert!(tau_eq(merged.params[2], l), "lam {}", merged.params[2]);
    }

    #[test]
    fn u3_into_u1_adds_to_lambda() {
        let a = -0.825;
        let (t, p, l) = (1.1, 0.4, -2.6);
        let merged = merge_1q(&Gate::u3(t, p, l, 0), &Gate::u1(a, 0))
            .unwrap()
            .expect("unconditioned");
        assert_eq!(merged.kind, GateKind::U3);
        assert!(tau_eq(merged.params[1], p));
        assert!(tau_eq(merged.params[2], l + a));
    }

    #[test]
    fn diagonal_products_collapse_to_u1() {
        let merged = merge_1q(&Gate::t(0), &Gate::s(0)).unwrap().unwrap();
        assert_eq!(merged.kind, GateKind::U1);
        assert!(tau_eq(merged.params[0], 3.0 * PI / 4.0));

        // H * H is the identity, a u1 of angle zero.
        let merged = merge_1q(&Gate::h(0), &Gate::h(0)).unwrap().unwrap();
        assert_eq!(merged.kind, GateKind::U1);
        assert!(tau_eq(merged.params[0], 0.0));
    }

    /// The theta = pi/2 edge where P00 vanishes: merging phase gates into
    /// an H stays sound.
    #[test]
    fn antidiagonal_edge_case() {
        let merged = merge_1q(&Gate::x(0), &Gate::u1(0.7, 0)).unwrap().unwrap();
        let back = gate_matrix(&merged).unwrap();
        let product = gate_matrix(&Gate::x(0))
            .unwrap()
            .matmul(&gate_matrix(&Gate::u1(0.7, 0)).unwrap())
            .unwrap();
        assert!(crate::matrix::equiv_up_to_phase(&back, &product, 1e-9).unwrap());
    }

    #[test]
    fn conditioned_gates_refuse_to_merge() {
        let g1 = Gate::u1(0.3, 0).conditioned();
        let g2 = Gate::u1(0.4, 0);
        assert!(merge_1q(&g1, &g2).unwrap().is_none());
        assert!(merge_1q(&g2, &g1).unwrap().is_none());
    }

    #[test]
    fn mismatched_inputs_error() {
        assert!(matches!(
            merge_1q(&Gate::u1(0.1, 0), &Gate::u1(0.2, 1)),
            Err(Error::DifferentQubits { .. })
        ));
        assert!(matches!(
            merge_1q(&Gate::cx(0, 1), &Gate::u1(0.2, 0)),
            Err(Error::NotMergeable1q { kind: GateKind::Cx })
        ));
        assert!(matches!(
            merge_1q(&Gate::u1(0.2, 0), &Gate::y(0)),
            Err(Error::NotMergeable1q { kind: GateKind::Y })
        ));
    }

    /// The defining property, across the whole accepted vocabulary: the
    /// merged gate's matrix equals the product matrix up to phase.
    #[test]
    fn merge_matches_matrix_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let random_gate = |rng: &mut ChaCha8Rng| -> Gate {
            let angle = |rng: &mut ChaCha8Rng| (rng.random::<f64>() - 0.5) * 4.0 * PI;
            match rng.random_range(0..9u8) {
                0 => Gate::u1(angle(rng), 0),
                1 => Gate::u2(angle(rng), angle(rng), 0),
                2 => Gate::u3(angle(rng), angle(rng), angle(rng), 0),
                3 => Gate::rz(angle(rng), 0),
                4 => Gate::h(0),
                5 => Gate::x(0),
                6 => Gate::z(0),
                7 => Gate::t(0),
                _ => Gate::s(0),
            }
        };
        for _ in 0..1000 {
            let g1 = random_gate(&mut rng);
            let g2 = random_gate(&mut rng);
            let merged = merge_1q(&g1, &g2).unwrap().expect("unconditioned");
            // As circuits: applying g2 then g1 equals applying the merge.
            let run = Circuit::with_gates(1, vec![g2.clone(), g1.clone()]).unwrap();
            let folded = Circuit::with_gates(1, vec![merged]).unwrap();
            assert!(
                circuits_equiv(&run, &folded, EQUIV_TOL).unwrap(),
                "merge of {g1} and {g2} drifted"
            );
        }
    }

    /// Angle normalization maps onto (-pi, pi] without changing the gate.
    #[test]
    fn angle_normalization_is_gauge_only() {
        for k in -3..=3i32 {
            let a = 1.0 + k as f64 * std::f64::consts::TAU;
            let n = normalize_angle(a);
            assert!(n > -PI && n <= PI + 1e-12);
            assert!(tau_eq(a, n));
        }
    }
}
