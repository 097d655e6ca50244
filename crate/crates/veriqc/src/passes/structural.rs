//! Structural passes: property analysis and barrier/measure hygiene.
//!
//! None of these touch the unitary gate subsequence. `analysis` computes
//! circuit properties and must leave the circuit byte-identical; the other
//! three edit only barriers and measures, whose placement has no matrix
//! semantics, so their claim is structural rather than unitary.
//!
//! A measure is *final* when no unitary gate follows it on its own wire.
//! Later measures or barriers on that wire do not un-final it: they join
//! the tail of readout-only operations. Both measure passes share that
//! predicate, so inserting a fence and removing final measures agree on
//! which measures they mean.

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::Result;
use crate::framework::{self, Action, BodySpec, TemplateKind, WhileView};
use crate::symbolic::{FragItem, ProofGoal};

use super::{
    BranchObligation, BranchSpec, Pass, PassConfig, PassDescriptor, PassKind, PassOutcome,
    PropertyMap, TerminationArgument, TopClaim,
};

/// Whether some unitary gate in `later` acts on a qubit of `g`.
fn unitary_follows_on_wire(g: &Gate, later: &[Gate]) -> bool {
    later.iter().any(|n| n.kind.is_unitary() && n.shares_qubit(g))
}

// ====================================================================
// analysis
// ====================================================================

fn run_analysis(input: &Circuit, _cfg: &PassConfig) -> Result<PassOutcome> {
    let properties = PropertyMap {
        size: input.len(),
        width: input.nqreg,
        depth: input.depth(),
        count_ops: input.count_ops(),
    };
    Ok(PassOutcome { circuit: input.clone(), layout: None, properties: Some(properties) })
}

pub(super) fn analysis() -> Pass {
    Pass {
        descriptor: PassDescriptor {
            name: "analysis",
            kind: PassKind::Analysis,
            template: None,
            body: BodySpec { input: "gates".to_string(), appended: vec![], deleted: vec![] },
            branches: vec![BranchSpec {
                name: "observe_gate",
                effect: "each gate updates size, depth, and operation counters; nothing \
                         is rewritten",
                obligation: BranchObligation::Unchanged,
            }],
            top_claim: TopClaim::ReadOnly,
            termination: TerminationArgument::LinearSweep,
            needs_coupling: false,
            produces_layout: false,
            demo_bug: false,
        },
        run: run_analysis,
    }
}

// ====================================================================
// remove_final_measure
// ====================================================================

fn run_remove_final_measure(input: &Circuit, _cfg: &PassConfig) -> Result<PassOutcome> {
    let out = framework::run_while(
        "remove_final_measure",
        input,
        framework::default_fuse(input.len()),
        true,
        |view: &WhileView<'_>| {
            let front = &view.remaining[0];
            if front.kind == GateKind::Measure
                && !unitary_follows_on_wire(front, &view.remaining[1..])
            {
                return Ok(Action { delete: vec![0], emit: vec![] });
            }
            Ok(Action { delete: vec![0], emit: vec![front.clone()] })
        },
        None,
    )?;
    Ok(PassOutcome::plain(out))
}

pub(super) fn remove_final_measure() -> Pass {
    Pass {
        descriptor: PassDescriptor {
            name: "remove_final_measure",
            kind: PassKind::Assorted,
            template: Some(TemplateKind::WhileGateRemaining),
            body: BodySpec {
                input: "gates".to_string(),
                appended: vec!["output".to_string()],
                deleted: vec!["gates".to_string()],
            },
            branches: vec![
                BranchSpec {
                    name: "drop_final_measure",
                    effect: "the front measure has no unitary successor on its wire; \
                             deleting it leaves the unitary subsequence untouched",
                    obligation: BranchObligation::Unchanged,
                },
                BranchSpec {
                    name: "emit_other",
                    effect: "front gate is not a final measure; emitted as-is",
                    obligation: BranchObligation::Unchanged,
                },
            ],
            top_claim: TopClaim::StructuralEquivalence,
            termination: TerminationArgument::EveryBranchDeletes,
            needs_coupling: false,
            produces_layout: false,
            demo_bug: false,
        },
        run: run_remove_final_measure,
    }
}

// ====================================================================
// merge_adjacent_barriers
// ====================================================================

/// One worklist sweep: merge each front barrier with the next barrier when
/// everything between acts on wires disjoint from both.
fn merge_sweep(input: &Circuit) -> Result<Circuit> {
    framework::run_while(
        "merge_adjacent_barriers",
        input,
        framework::default_fuse(input.len()),
        true,
        |view: &WhileView<'_>| {
            let front = &view.remaining[0];
            if front.kind == GateKind::Barrier {
                let next_barrier = view.remaining[1..]
                    .iter()
                    .position(|g| g.kind == GateKind::Barrier)
                    .map(|o| o + 1);
                if let Some(j) = next_barrier {
                    let partner = &view.remaining[j];
                    let between_disjoint = view.remaining[1..j]
                        .iter()
                        .all(|g| !g.shares_qubit(front) && !g.shares_qubit(partner));
                    if between_disjoint {
                        let mut union: Vec<usize> =
                            front.qubits.iter().chain(&partner.qubits).copied().collect();
                        union.sort_unstable();
                        union.dedup();
                        return Ok(Action {
                            delete: vec![0, j],
                            emit: vec![Gate::barrier(union)],
                        });
                    }
                }
            }
            Ok(Action { delete: vec![0], emit: vec![front.clone()] })
        },
        None,
    )
}

fn run_merge_adjacent_barriers(input: &Circuit, _cfg: &PassConfig) -> Result<PassOutcome> {
    // A merged barrier lands in the output, out of reach of barriers later
    // in the same sweep, so sweep to a fixpoint. Each changed sweep removes
    // a barrier, which bounds the loop by the barrier count.
    let mut current = input.clone();
    loop {
        let next = merge_sweep(&current)?;
        if next == current {
            return Ok(PassOutcome::plain(next));
        }
        current = next;
    }
}

pub(super) fn merge_adjacent_barriers() -> Pass {
    let merge_goal = ProofGoal::equiv(
        "merge_adjacent_barriers.merge_pair",
        2,
        vec![
            FragItem::gate(&Gate::barrier(vec![0])),
            FragItem::gate(&Gate::barrier(vec![1])),
        ],
        vec![FragItem::gate(&Gate::barrier(vec![0, 1]))],
    );

    Pass {
        descriptor: PassDescriptor {
            name: "merge_adjacent_barriers",
            kind: PassKind::Assorted,
            template: Some(TemplateKind::WhileGateRemaining),
            body: BodySpec {
                input: "gates".to_string(),
                appended: vec!["output".to_string()],
                deleted: vec!["gates".to_string()],
            },
            branches: vec![
                BranchSpec {
                    name: "merge_pair",
                    effect: "the next barrier is separated from the front one only by \
                             gates on disjoint wires; both become one barrier over the \
                             union of their wires",
                    obligation: BranchObligation::Goal(merge_goal),
                },
                BranchSpec {
                    name: "emit_other",
                    effect: "front gate is not a mergeable barrier; emitted as-is",
                    obligation: BranchObligation::Unchanged,
                },
            ],
            top_claim: TopClaim::StructuralEquivalence,
            termination: TerminationArgument::EveryBranchDeletes,
            needs_coupling: false,
            produces_layout: false,
            demo_bug: false,
        },
        run: run_merge_adjacent_barriers,
    }
}

// ====================================================================
// barrier_before_final_measure
// ====================================================================

fn run_barrier_before_final_measure(input: &Circuit, _cfg: &PassConfig) -> Result<PassOutcome> {
    let final_measures: Vec<usize> = input
        .gates
        .iter()
        .enumerate()
        .filter(|(i, g)| {
            g.kind == GateKind::Measure && !unitary_follows_on_wire(g, &input.gates[i + 1..])
        })
        .map(|(i, _)| i)
        .collect();
    let Some(&insert_at) = final_measures.first() else {
        return Ok(PassOutcome::plain(input.clone()));
    };
    let mut fence: Vec<usize> = final_measures
        .iter()
        .flat_map(|&i| input.gates[i].qubits.iter().copied())
        .collect();
    fence.sort_unstable();
    fence.dedup();
    // Idempotence: a fence already guarding exactly these wires stays.
    if insert_at > 0 {
        let prev = &input.gates[insert_at - 1];
        if prev.kind == GateKind::Barrier && prev.qubits == fence {
            return Ok(PassOutcome::plain(input.clone()));
        }
    }
    let mut gates = input.gates.clone();
    gates.insert(insert_at, Gate::barrier(fence));
    Ok(PassOutcome::plain(Circuit::with_gates(input.nqreg, gates)?))
}

pub(super) fn barrier_before_final_measure() -> Pass {
    let fence_goal = ProofGoal::equiv(
        "barrier_before_final_measure.insert_fence",
        2,
        vec![],
        vec![FragItem::gate(&Gate::barrier(vec![0, 1]))],
    );

    Pass {
        descriptor: PassDescriptor {
            name: "barrier_before_final_measure",
            kind: PassKind::Assorted,
            template: None,
            body: BodySpec { input: "gates".to_string(), appended: vec![], deleted: vec![] },
            branches: vec![
                BranchSpec {
                    name: "insert_fence",
                    effect: "one barrier over every finally-measured wire goes in front \
                             of the earliest final measure, pinning readout at the end",
                    obligation: BranchObligation::Goal(fence_goal),
                },
                BranchSpec {
                    name: "already_fenced",
                    effect: "no final measures, or the fence is already in place; the \
                             circuit passes through",
                    obligation: BranchObligation::Unchanged,
                },
            ],
            top_claim: TopClaim::StructuralEquivalence,
            termination: TerminationArgument::LinearSweep,
            needs_coupling: false,
            produces_layout: false,
            demo_bug: false,
        },
        run: run_barrier_before_final_measure,
    }
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;

    fn measured_ghz() -> Circuit {
        Circuit::with_gates(
            3,
            vec![
                Gate::h(0),
                Gate::cx(0, 1),
                Gate::cx(1, 2),
                Gate::barrier(vec![0, 1, 2]),
                Gate::measure(0),
                Gate::measure(1),
                Gate::measure(2),
            ],
        )
        .unwrap()
    }

    #[test]
    fn analysis_reports_standard_properties() {
        let c = measured_ghz();
        let out = run_analysis(&c, &PassConfig::default()).unwrap();
        assert_eq!(out.circuit, c, "analysis must not rewrite");
        let p = out.properties.unwrap();
        assert_eq!(p.size, 7);
        assert_eq!(p.width, 3);
        // h, cx, cx stack to three layers; the barrier costs nothing; the
        // measures land in one shared fourth layer.
        assert_eq!(p.depth, 4);
        assert_eq!(p.count_ops.get("cx"), Some(&2));
        assert_eq!(p.count_ops.get("measure"), Some(&3));
        assert_eq!(p.count_ops.get("barrier"), Some(&1));
    }

    #[test]
    fn analysis_of_empty_circuit_is_all_zeroes() {
        let out = run_analysis(&Circuit::new(2), &PassConfig::default()).unwrap();
        let p = out.properties.unwrap();
        assert_eq!((p.size, p.width, p.depth), (0, 2, 0));
        assert!(p.count_ops.is_empty());
    }

    #[test]
    fn remove_final_measure_drops_only_final_measures() {
        let c = Circuit::with_gates(
            2,
            vec![Gate::measure(0), Gate::h(0), Gate::measure(0), Gate::measure(1)],
        )
        .unwrap();
        let out = run_remove_final_measure(&c, &PassConfig::default()).unwrap();
        // The first measure is mid-circuit (h follows on its wire); the
        // trailing two go.
        assert_eq!(out.circuit.gates, vec![Gate::measure(0), Gate::h(0)]);
    }

    #[test]
    fn remove_final_measure_sees_through_readout_tails() {
        // A measure followed only by more measures and barriers is final.
        let c = Circuit::with_gates(
            2,
            vec![Gate::measure(0), Gate::barrier(vec![0, 1]), Gate::measure(0)],
        )
        .unwrap();
        let out = run_remove_final_measure(&c, &PassConfig::default()).unwrap();
        assert_eq!(out.circuit.gates, vec![Gate::barrier(vec![0, 1])]);
    }

    #[test]
    fn remove_final_measure_strips_ghz_readout() {
        let out = run_remove_final_measure(&measured_ghz(), &PassConfig::default()).unwrap();
        assert_eq!(
            out.circuit.gates,
            vec![Gate::h(0), Gate::cx(0, 1), Gate::cx(1, 2), Gate::barrier(vec![0, 1, 2])]
        );
    }

    #[test]
    fn barriers_merge_across_disjoint_gates() {
        let c = Circuit::with_gates(
            4,
            vec![Gate::barrier(vec![0, 1]), Gate::x(3), Gate::barrier(vec![1, 2])],
        )
        .unwrap();
        let out = run_merge_adjacent_barriers(&c, &PassConfig::default()).unwrap();
        assert_eq!(out.circuit.gates, vec![Gate::barrier(vec![0, 1, 2]), Gate::x(3)]);
    }

    #[test]
    fn barriers_do_not_merge_across_a_fenced_gate() {
        let c = Circuit::with_gates(
            2,
            vec![Gate::barrier(vec![0, 1]), Gate::x(1), Gate::barrier(vec![0, 1])],
        )
        .unwrap();
        let out = run_merge_adjacent_barriers(&c, &PassConfig::default()).unwrap();
        assert_eq!(out.circuit, c);
    }

    #[test]
    fn barrier_merging_cascades_to_a_fixpoint() {
        let c = Circuit::with_gates(
            3,
            vec![Gate::barrier(vec![0]), Gate::barrier(vec![1]), Gate::barrier(vec![2])],
        )
        .unwrap();
        let out = run_merge_adjacent_barriers(&c, &PassConfig::default()).unwrap();
        assert_eq!(out.circuit.gates, vec![Gate::barrier(vec![0, 1, 2])]);
    }

    #[test]
    fn fence_lands_before_the_earliest_final_measure() {
        let c = Circuit::with_gates(
            2,
            vec![Gate::h(0), Gate::measure(0), Gate::x(1), Gate::measure(1)],
        )
        .unwrap();
        let out = run_barrier_before_final_measure(&c, &PassConfig::default()).unwrap();
        assert_eq!(
            out.circuit.gates,
            vec![
                Gate::h(0),
                Gate::barrier(vec![0, 1]),
                Gate::measure(0),
                Gate::x(1),
                Gate::measure(1),
            ]
        );
        // x(1) still precedes its wire's measure, so measure(1) stays final
        // and the fence already covers it: a second run changes nothing.
        let again = run_barrier_before_final_measure(&out.circuit, &PassConfig::default())
            .unwrap();
        assert_eq!(again.circuit, out.circuit);
    }

    #[test]
    fn fence_skips_circuits_without_final_measures() {
        let c = Circuit::with_gates(1, vec![Gate::measure(0), Gate::h(0)]).unwrap();
        let out = run_barrier_before_final_measure(&c, &PassConfig::default()).unwrap();
        assert_eq!(out.circuit, c);
    }

    #[test]
    fn fence_insertion_then_removal_restores_the_unitary_prefix() {
        let c = measured_ghz();
        let fenced = run_barrier_before_final_measure(&c, &PassConfig::default()).unwrap();
        let stripped =
            run_remove_final_measure(&fenced.circuit, &PassConfig::default()).unwrap();
        let unitary: Vec<&Gate> =
            stripped.circuit.gates.iter().filter(|g| g.kind.is_unitary()).collect();
        let original: Vec<&Gate> = c.gates.iter().filter(|g| g.kind.is_unitary()).collect();
        assert_eq!(unitary, original);
    }
}
