//! Placement passes and orientation repair.
//!
//! `trivial_layout` chooses where program qubits start on the device (the
//! identity placement; smarter choices would plug in here), `apply_layout`
//! renames circuit wires through a chosen placement, and `gate_direction`
//! reorients CX gates whose edge only exists the other way around.
//!
//! Relabeling and routing leave behind different permutation claims.
//! Routing permutes outputs only: the registers agree at the start and the
//! reported layout says where each program qubit drifted to. Relabeling
//! conjugates: both the initial and final wire of program qubit `q` move
//! to `layout[q]`, which is the claim the relabel-form oracle and the
//! scatter-form proof goal below check.

use crate::circuit::{Circuit, Gate, GateKind, Layout};
use crate::error::{Error, Result};
use crate::framework::{self, BodySpec, TemplateKind};
use crate::symbolic::{FragItem, ProofGoal};

use super::{
    BranchObligation, BranchSpec, Pass, PassConfig, PassDescriptor, PassKind, PassOutcome,
    TerminationArgument, TopClaim,
};

// ====================================================================
// trivial_layout
// ====================================================================

fn run_trivial_layout(input: &Circuit, cfg: &PassConfig) -> Result<PassOutcome> {
    let map = cfg.coupling_for("trivial_layout")?;
    let layout = map.identity_layout(input.nqreg)?;
    Ok(PassOutcome { circuit: input.clone(), layout: Some(layout), properties: None })
}

pub(super) fn trivial_layout() -> Pass {
    Pass {
        descriptor: PassDescriptor {
            name: "trivial_layout",
            kind: PassKind::Layout,
            template: None,
            body: BodySpec { input: "gates".to_string(), appended: vec![], deleted: vec![] },
            branches: vec![BranchSpec {
                name: "choose_identity_placement",
                effect: "program qubit q is placed on device node q; the circuit itself \
                         is not touched",
                obligation: BranchObligation::Unchanged,
            }],
            top_claim: TopClaim::ReadOnly,
            termination: TerminationArgument::LinearSweep,
            needs_coupling: true,
            produces_layout: true,
            demo_bug: false,
        },
        run: run_trivial_layout,
    }
}

// ====================================================================
// apply_layout
// ====================================================================

fn run_apply_layout(input: &Circuit, cfg: &PassConfig) -> Result<PassOutcome> {
    let chosen = match &cfg.layout {
        Some(l) => l.clone(),
        None => Layout::identity(input.nqreg),
    };
    if chosen.len() != input.nqreg {
        return Err(Error::BadLayout {
            msg: format!(
                "placement covers {} qubits but the register has {}",
                chosen.len(),
                input.nqreg
            ),
        });
    }
    // A placement may scatter a small register across a larger device;
    // widen to the highest node named and complete the permutation.
    let nodes = chosen.as_slice().iter().map(|&p| p + 1).max().unwrap_or(0).max(input.nqreg);
    let full = chosen.extend(nodes)?;
    let wide = input.widened(nodes);
    let out = framework::run_iterate(
        "apply_layout",
        &wide,
        |g| {
            let mut g = g.clone();
            for q in &mut g.qubits {
                *q = full.get(*q);
            }
            if g.kind == GateKind::Barrier {
                g.qubits.sort_unstable();
            }
            Ok(vec![g])
        },
        None,
    )?;
    Ok(PassOutcome { circuit: out, layout: Some(full), properties: None })
}

pub(super) fn apply_layout() -> Pass {
    let relabel_goal = ProofGoal::equiv(
        "apply_layout.relabel_gate",
        2,
        vec![FragItem::gate(&Gate::cx(1, 0))],
        vec![FragItem::gate(&Gate::cx(0, 1))],
    )
    .with_out_perm(vec![1, 0])
    .with_init_scatter();

    Pass {
        descriptor: PassDescriptor {
            name: "apply_layout",
            kind: PassKind::Layout,
            template: Some(TemplateKind::IterateAllGates),
            body: BodySpec {
                input: "gates".to_string(),
                appended: vec!["output".to_string()],
                deleted: vec![],
            },
            branches: vec![BranchSpec {
                name: "relabel_gate",
                effect: "every operand moves through the placement; with inputs scattered \
                         the same way, the renamed gate is the same operation",
                obligation: BranchObligation::Goal(relabel_goal),
            }],
            top_claim: TopClaim::PermutationEquivalence,
            termination: TerminationArgument::LinearSweep,
            needs_coupling: false,
            produces_layout: false,
            demo_bug: false,
        },
        run: run_apply_layout,
    }
}

// ====================================================================
// gate_direction
// ====================================================================

fn run_gate_direction(input: &Circuit, cfg: &PassConfig) -> Result<PassOutcome> {
    let map = cfg.coupling_for("gate_direction")?;
    let out = framework::run_iterate(
        "gate_direction",
        input,
        |g| match g.kind {
            GateKind::Cx => {
                let (c, t) = (g.qubits[0], g.qubits[1]);
                if map.cx_allowed(c, t) {
                    Ok(vec![g.clone()])
                } else if map.cx_allowed(t, c) {
                    let mut flipped = vec![
                        Gate::h(c),
                        Gate::h(t),
                        Gate::cx(t, c),
                        Gate::h(c),
                        Gate::h(t),
                    ];
                    if g.conditioned {
                        // The whole replacement fires on the same classical
                        // bit the original did.
                        flipped = flipped.into_iter().map(Gate::conditioned).collect();
                    }
                    Ok(flipped)
                } else {
                    Err(Error::GateNotOnEdge { a: c, b: t })
                }
            }
            GateKind::Swap => {
                let (a, b) = (g.qubits[0], g.qubits[1]);
                if map.has_edge(a, b) {
                    Ok(vec![g.clone()])
                } else {
                    Err(Error::GateNotOnEdge { a, b })
                }
            }
            _ => Ok(vec![g.clone()]),
        },
        None,
    )?;
    Ok(PassOutcome::plain(out))
}

pub(super) fn gate_direction() -> Pass {
    let flip_goal = ProofGoal::equiv(
        "gate_direction.flip_with_hadamards",
        2,
        vec![FragItem::gate(&Gate::cx(0, 1))],
        vec![
            FragItem::gate(&Gate::h(0)),
            FragItem::gate(&Gate::h(1)),
            FragItem::gate(&Gate::cx(1, 0)),
            FragItem::gate(&Gate::h(0)),
            FragItem::gate(&Gate::h(1)),
        ],
    );

    Pass {
        descriptor: PassDescriptor {
            name: "gate_direction",
            kind: PassKind::Assorted,
            template: Some(TemplateKind::IterateAllGates),
            body: BodySpec {
                input: "gates".to_string(),
                appended: vec!["output".to_string()],
                deleted: vec![],
            },
            branches: vec![
                BranchSpec {
                    name: "keep_oriented",
                    effect: "gate already satisfies the device (or carries no orientation \
                             constraint); emitted as-is",
                    obligation: BranchObligation::Unchanged,
                },
                BranchSpec {
                    name: "flip_with_hadamards",
                    effect: "CX exists only in the opposite orientation; conjugating the \
                             reversed CX with Hadamards restores the original operation",
                    obligation: BranchObligation::Goal(flip_goal),
                },
                BranchSpec {
                    name: "reject_unroutable",
                    effect: "neither orientation exists on the device; the pass aborts \
                             without emitting, so there is no output to account for",
                    obligation: BranchObligation::Unchanged,
                },
            ],
            top_claim: TopClaim::Equivalence,
            termination: TerminationArgument::LinearSweep,
            needs_coupling: true,
            produces_layout: false,
            demo_bug: false,
        },
        run: run_gate_direction,
    }
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{CouplingMap, Edge};
    use crate::matrix::{circuits_equiv, circuits_equiv_relabel_outcome};
    use crate::tolerances::EQUIV_TOL;

    /// A two-node device whose only CX points from 0 to 1.
    fn directed_pair() -> CouplingMap {
        CouplingMap::new(2, vec![Edge { a: 0, b: 1, directed: true }]).unwrap()
    }

    fn ghz3() -> Circuit {
        Circuit::with_gates(3, vec![Gate::h(0), Gate::cx(0, 1), Gate::cx(1, 2)]).unwrap()
    }

    #[test]
    fn trivial_layout_places_identity_and_keeps_the_circuit() {
        let c = ghz3();
        let out =
            run_trivial_layout(&c, &PassConfig::with_coupling(CouplingMap::line(5))).unwrap();
        assert_eq!(out.circuit, c);
        let layout = out.layout.unwrap();
        assert_eq!(layout.len(), 3);
        assert!(layout.is_identity());
    }

    #[test]
    fn trivial_layout_rejects_small_devices() {
        let c = ghz3();
        let err = run_trivial_layout(&c, &PassConfig::with_coupling(CouplingMap::line(2)));
        assert!(matches!(err, Err(Error::RegisterLargerThanDevice { nqreg: 3, nodes: 2 })));
    }

    #[test]
    fn apply_layout_defaults_to_identity() {
        let c = ghz3();
        let out = run_apply_layout(&c, &PassConfig::default()).unwrap();
        assert_eq!(out.circuit, c);
        assert!(out.layout.unwrap().is_identity());
    }

    #[test]
    fn apply_layout_relabels_through_the_placement() {
        let c = ghz3();
        let mut cfg = PassConfig::default();
        cfg.layout = Some(Layout::new(vec![2, 0, 1]).unwrap());
        let out = run_apply_layout(&c, &cfg).unwrap();
        assert_eq!(
            out.circuit.gates,
            vec![Gate::h(2), Gate::cx(2, 0), Gate::cx(0, 1)]
        );
        let layout = out.layout.unwrap();
        let check = circuits_equiv_relabel_outcome(&c, &out.circuit, &layout, EQUIV_TOL).unwrap();
        assert!(check.equivalent, "relabeled circuit deviates by {}", check.deviation);
    }

    #[test]
    fn apply_layout_scatters_onto_a_larger_device() {
        let c = Circuit::with_gates(2, vec![Gate::cx(0, 1)]).unwrap();
        let mut cfg = PassConfig::default();
        cfg.layout = Some(Layout::new(vec![3, 1]).unwrap());
        let out = run_apply_layout(&c, &cfg).unwrap();
        assert_eq!(out.circuit.nqreg, 4);
        assert_eq!(out.circuit.gates, vec![Gate::cx(3, 1)]);
        let layout = out.layout.unwrap();
        assert_eq!(layout.len(), 4, "placement completed to a full permutation");
        let wide = c.widened(4);
        let check = circuits_equiv_relabel_outcome(&wide, &out.circuit, &layout, EQUIV_TOL)
            .unwrap();
        assert!(check.equivalent);
    }

    #[test]
    fn apply_layout_rejects_wrong_sized_placements() {
        let c = ghz3();
        let mut cfg = PassConfig::default();
        cfg.layout = Some(Layout::new(vec![1, 0]).unwrap());
        assert!(matches!(run_apply_layout(&c, &cfg), Err(Error::BadLayout { .. })));
    }

    #[test]
    fn apply_layout_keeps_conditioned_flags_and_sorts_barriers() {
        let mut c = Circuit::new(3);
        c.push(Gate::x(0).conditioned());
        c.push(Gate::barrier(vec![0, 2]));
        let mut cfg = PassConfig::default();
        cfg.layout = Some(Layout::new(vec![2, 1, 0]).unwrap());
        let out = run_apply_layout(&c, &cfg).unwrap();
        assert_eq!(out.circuit.gates[0], Gate::x(2).conditioned());
        assert_eq!(out.circuit.gates[1], Gate::barrier(vec![0, 2]));
    }

    #[test]
    fn gate_direction_keeps_allowed_cx() {
        let c = Circuit::with_gates(2, vec![Gate::cx(0, 1)]).unwrap();
        let out = run_gate_direction(&c, &PassConfig::with_coupling(directed_pair())).unwrap();
        assert_eq!(out.circuit, c);
    }

    #[test]
    fn gate_direction_flips_reversed_cx_with_hadamards() {
        let c = Circuit::with_gates(2, vec![Gate::cx(1, 0)]).unwrap();
        let out = run_gate_direction(&c, &PassConfig::with_coupling(directed_pair())).unwrap();
        assert_eq!(
            out.circuit.gates,
            vec![Gate::h(1), Gate::h(0), Gate::cx(0, 1), Gate::h(1), Gate::h(0)]
        );
        assert!(circuits_equiv(&c, &out.circuit, EQUIV_TOL).unwrap());
    }

    #[test]
    fn gate_direction_flip_preserves_the_condition() {
        let c = Circuit::with_gates(2, vec![Gate::cx(1, 0).conditioned()]).unwrap();
        let out = run_gate_direction(&c, &PassConfig::with_coupling(directed_pair())).unwrap();
        assert_eq!(out.circuit.len(), 5);
        assert!(out.circuit.gates.iter().all(|g| g.conditioned));
        assert!(circuits_equiv(&c, &out.circuit, EQUIV_TOL).unwrap());
    }

    #[test]
    fn gate_direction_rejects_gates_off_the_graph() {
        let map = CouplingMap::line(3);
        let c = Circuit::with_gates(3, vec![Gate::cx(0, 2)]).unwrap();
        let err = run_gate_direction(&c, &PassConfig::with_coupling(map.clone()));
        assert!(matches!(err, Err(Error::GateNotOnEdge { a: 0, b: 2 })));

        let c = Circuit::with_gates(3, vec![Gate::swap(2, 0)]).unwrap();
        let err = run_gate_direction(&c, &PassConfig::with_coupling(map));
        assert!(matches!(err, Err(Error::GateNotOnEdge { a: 2, b: 0 })));
    }

    #[test]
    fn gate_direction_allows_swaps_on_directed_edges() {
        // Swap is symmetric, so a directed edge admits it either way.
        let c = Circuit::with_gates(2, vec![Gate::swap(1, 0)]).unwrap();
        let out = run_gate_direction(&c, &PassConfig::with_coupling(directed_pair())).unwrap();
        assert_eq!(out.circuit, c);
    }
}
