//! Optimization passes: peephole CX cancellation, commutation-aware
//! cancellation, and single-qubit run folding.
//!
//! All three shrink circuits without changing the denoted unitary. Their
//! descriptors expose exactly the identities the bodies rely on: CX
//! cancellation leans on one fragment equivalence with a commutation
//! assumption, commutative cancellation on the certified commutation table
//! and a handful of cancellation rules, and run folding on the merge
//! kernel's sampling certificate plus the merge rules the symbolic catalog
//! can state.
//!
//! The `_unfixed` variants preserve two historic bugs on purpose: folding
//! that ignores the conditioned flag, and grouping that only checks
//! commutation against the previous gate as if "commutes with" were
//! transitive. They exist so the verifier has something real to refute.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use crate::circuit::{Circuit, Gate, GateKind};
use crate::commute::{commutes, in_commute_set};
use crate::error::Result;
use crate::framework::{self, merge_1q, rewrite_group, Action, BodySpec, TemplateKind, WhileView};
use crate::symbolic::{AngleExpr, Assumption, FragItem, ProofGoal, SymGate};
use crate::tolerances::IDENTITY_DROP_TOL;

use super::{
    BranchObligation, BranchSpec, KernelCheck, Pass, PassConfig, PassDescriptor, PassKind,
    PassOutcome, TerminationArgument, TopClaim,
};

// ====================================================================
// cx_cancellation
// ====================================================================

/// One worklist step: an unconditioned CX whose next qubit-sharing gate is
/// the identical unconditioned CX deletes both; everything else emits the
/// front gate. Gates in between share no qubit with the pair (that is what
/// "next qubit-sharing gate" means), so they commute with it and the
/// cancellation is sound.
fn cx_cancellation_step(view: &WhileView<'_>) -> Action {
    let front = &view.remaining[0];
    if front.kind == GateKind::Cx && !front.conditioned {
        let partner = view.remaining[1..]
            .iter()
            .position(|g| front.shares_qubit(g))
            .map(|offset| offset + 1);
        if let Some(j) = partner {
            let cand = &view.remaining[j];
            if cand.kind == GateKind::Cx && !cand.conditioned && cand.qubits == front.qubits {
                return Action { delete: vec![0, j], emit: vec![] };
            }
        }
    }
    Action { delete: vec![0], emit: vec![front.clone()] }
}

fn run_cx_cancellation(input: &Circuit, _cfg: &PassConfig) -> Result<PassOutcome> {
    let out = framework::run_while(
        "cx_cancellation",
        input,
        framework::default_fuse(input.len()),
        true,
        |view| Ok(cx_cancellation_step(view)),
        None,
    )?;
    Ok(PassOutcome::plain(out))
}

pub(super) fn cx_cancellation() -> Pass {
    let cx = FragItem::gate(&Gate::cx(0, 1));
    let mid = FragItem::Opaque("Mid".to_string());
    let rest = FragItem::Opaque("Rest".to_string());
    let cancel_goal = ProofGoal::equiv(
        "cx_cancellation.cancel_matched_pair",
        2,
        vec![cx.clone(), mid.clone(), cx.clone(), rest.clone()],
        vec![mid.clone(), rest],
    )
    .with_assumption(Assumption {
        // The branch condition: the partner was the *next* gate sharing a
        // qubit, so everything in between is disjoint from the pair and
        // slides past it.
        name: "between_is_disjoint_from_the_pair".to_string(),
        lhs: vec![cx.clone(), mid.clone()],
        rhs: vec![mid, cx],
    });

    Pass {
        descriptor: PassDescriptor {
            name: "cx_cancellation",
            kind: PassKind::Optimization,
            template: Some(TemplateKind::WhileGateRemaining),
            body: BodySpec {
                input: "gates".to_string(),
                appended: vec!["output".to_string()],
                deleted: vec!["gates".to_string()],
            },
            branches: vec![
                BranchSpec {
                    name: "cancel_matched_pair",
                    effect: "front cx and its next qubit-sharing gate are identical \
                             unconditioned cx gates; both are deleted",
                    obligation: BranchObligation::Goal(cancel_goal),
                },
                BranchSpec {
                    name: "emit_unmatched_cx",
                    effect: "front cx has no cancelling partner; emitted unchanged",
                    obligation: BranchObligation::Unchanged,
                },
                BranchSpec {
                    name: "emit_other",
                    effect: "front gate is not an unconditioned cx; emitted unchanged",
                    obligation: BranchObligation::Unchanged,
                },
            ],
            top_claim: TopClaim::Equivalence,
            termination: TerminationArgument::EveryBranchDeletes,
            needs_coupling: false,
            produces_layout: false,
            demo_bug: false,
        },
        run: run_cx_cancellation,
    }
}

// ====================================================================
// commutative_cancellation
// ====================================================================

/// Group growth test for the fixed pass: a gate joins only when it
/// commutes with *every* current member. Out-of-vocabulary and conditioned
/// gates never join, so they land between groups and act as fences.
fn extends_pairwise(batch: &[Gate], g: &Gate) -> bool {
    if !in_commute_set(g.kind) || g.conditioned {
        return false;
    }
    batch
        .iter()
        .all(|b| commutes(b, g).unwrap_or(false))
}

/// The buggy historic growth test: commutation is only checked against the
/// most recent member, as if the relation were transitive. Three CX gates
/// sharing qubits the right way chain into one "group" containing a
/// non-commuting pair.
fn extends_chained(batch: &[Gate], g: &Gate) -> bool {
    if !in_commute_set(g.kind) || g.conditioned {
        return false;
    }
    batch.last().is_none_or(|b| commutes(b, g).unwrap_or(false))
}

fn run_commutative_cancellation(input: &Circuit, _cfg: &PassConfig) -> Result<PassOutcome> {
    let out = framework::run_collect(
        "commutative_cancellation",
        input,
        extends_pairwise,
        |batch| Ok(rewrite_group(batch)),
        None,
    )?;
    Ok(PassOutcome::plain(out))
}

fn run_commutative_cancellation_unfixed(input: &Circuit, _cfg: &PassConfig) -> Result<PassOutcome> {
    let out = framework::run_collect(
        "commutative_cancellation_unfixed",
        input,
        extends_chained,
        |batch| Ok(rewrite_group(batch)),
        None,
    )?;
    Ok(PassOutcome::plain(out))
}

/// The rewrite identities the group rewriter may apply, stated over a
/// two-wire register so the CX cases fit. Each is discharged by the
/// rewrite prover against the certified rule catalog.
fn cancellation_branches() -> Vec<BranchSpec> {
    let one = |g: Gate| vec![FragItem::gate(&g)];
    let pair = |g: Gate| vec![FragItem::gate(&g), FragItem::gate(&g)];
    let fuse_lhs = vec![
        FragItem::Gate(SymGate::new(GateKind::U1, vec![0], vec![AngleExpr::var("a")])),
        FragItem::Gate(SymGate::new(GateKind::U1, vec![0], vec![AngleExpr::var("b")])),
    ];
    let fuse_rhs = vec![FragItem::Gate(SymGate::new(
        GateKind::U1,
        vec![0],
        vec![AngleExpr::var("a").add(&AngleExpr::var("b"))],
    ))];

    vec![
        BranchSpec {
            name: "fence_or_singleton",
            effect: "out-of-vocabulary, conditioned, or lone gates pass through unchanged",
            obligation: BranchObligation::Unchanged,
        },
        BranchSpec {
            name: "parity_cancel_x",
            effect: "an even count of x on one qubit within a group cancels",
            obligation: BranchObligation::Goal(ProofGoal::equiv(
                "commutative_cancellation.parity_cancel_x",
                2,
                pair(Gate::x(0)),
                vec![],
            )),
        },
        BranchSpec {
            name: "parity_cancel_cx",
            effect: "an even count of cx on one qubit pair within a group cancels",
            obligation: BranchObligation::Goal(ProofGoal::equiv(
                "commutative_cancellation.parity_cancel_cx",
                2,
                pair(Gate::cx(0, 1)),
                vec![],
            )),
        },
        BranchSpec {
            name: "phase_fuse",
            effect: "z, t, and u1 gates on one qubit within a group fuse into one u1",
            obligation: BranchObligation::Goal(ProofGoal::equiv(
                "commutative_cancellation.phase_fuse",
                2,
                fuse_lhs,
                fuse_rhs,
            )),
        },
        BranchSpec {
            name: "phase_canonical_z",
            effect: "z enters the fused phase as u1(pi)",
            obligation: BranchObligation::Goal(ProofGoal::equiv(
                "commutative_cancellation.phase_canonical_z",
                2,
                one(Gate::z(0)),
                one(Gate::u1(PI, 0)),
            )),
        },
        BranchSpec {
            name: "phase_canonical_t",
            effect: "t enters the fused phase as u1(pi/4)",
            obligation: BranchObligation::Goal(ProofGoal::equiv(
                "commutative_cancellation.phase_canonical_t",
                2,
                one(Gate::t(0)),
                one(Gate::u1(FRAC_PI_4, 0)),
            )),
        },
        BranchSpec {
            name: "reorder_within_group",
            effect: "cancelling a non-adjacent pair slides group members past each other, \
                     justified by the commutation table",
            obligation: BranchObligation::Kernel(KernelCheck::CommutationTable),
        },
        BranchSpec {
            name: "group_formation",
            effect: "every formed group is mutually commuting, the premise of all of the above",
            obligation: BranchObligation::Kernel(KernelCheck::GroupingPairwise),
        },
    ]
}

fn commutative_descriptor(name: &'static str, demo_bug: bool) -> PassDescriptor {
    PassDescriptor {
        name,
        kind: PassKind::Optimization,
        template: Some(TemplateKind::CollectRuns),
        body: BodySpec {
            input: "gates".to_string(),
            appended: vec!["output".to_string()],
            deleted: vec![],
        },
        branches: cancellation_branches(),
        top_claim: TopClaim::Equivalence,
        termination: TerminationArgument::LinearSweep,
        needs_coupling: false,
        produces_layout: false,
        demo_bug,
    }
}

pub(super) fn commutative_cancellation() -> Pass {
    Pass {
        descriptor: commutative_descriptor("commutative_cancellation", false),
        run: run_commutative_cancellation,
    }
}

pub(super) fn commutative_cancellation_unfixed() -> Pass {
    Pass {
        descriptor: commutative_descriptor("commutative_cancellation_unfixed", true),
        run: run_commutative_cancellation_unfixed,
    }
}

// ====================================================================
// optimize_1q_gates
// ====================================================================

/// Kinds that form a single-qubit run. Deliberately the parameterized
/// rotation family only: discrete gates like h or s have their own
/// cancellation stories elsewhere, and folding them here would just trade
/// one cheap gate for a general u3.
const RUN_KINDS: [GateKind; 4] = [GateKind::U1, GateKind::U2, GateKind::U3, GateKind::Rz];

fn starts_run(g: &Gate) -> bool {
    RUN_KINDS.contains(&g.kind) && !g.conditioned
}

fn extends_run(batch: &[Gate], g: &Gate) -> bool {
    starts_run(g) && batch.first().is_none_or(|b| b.qubits == g.qubits)
}

/// The buggy variant admits conditioned rotations into runs.
fn extends_run_unguarded(batch: &[Gate], g: &Gate) -> bool {
    RUN_KINDS.contains(&g.kind) && batch.first().is_none_or(|b| b.qubits == g.qubits)
}

/// A u1 this close to zero rotation (mod a full turn) is the identity and
/// is dropped rather than emitted.
fn is_identity_u1(g: &Gate) -> bool {
    if g.kind != GateKind::U1 {
        return false;
    }
    let lam = g.params[0].rem_euclid(TAU);
    lam.min(TAU - lam) <= IDENTITY_DROP_TOL
}

/// Fold a run temporally: the accumulator is the merged unitary of the
/// batch so far, and each later gate merges on as the first (later-in-time)
/// argument. Singleton runs pass through untouched.
fn fold_run(batch: &[Gate]) -> Result<Vec<Gate>> {
    if batch.len() <= 1 {
        return Ok(batch.to_vec());
    }
    let mut acc = batch[0].clone();
    for g in &batch[1..] {
        acc = merge_1q(g, &acc)?
            .expect("run members are unconditioned rotations, which always merge");
    }
    if is_identity_u1(&acc) {
        return Ok(vec![]);
    }
    Ok(vec![acc])
}

/// The buggy fold: strips the conditioned flag before merging, so a
/// classically guarded rotation is silently absorbed into an unguarded
/// one. Wrong whenever the guard's false branch is taken.
fn fold_run_unguarded(batch: &[Gate]) -> Result<Vec<Gate>> {
    if batch.len() <= 1 {
        return Ok(batch.to_vec());
    }
    let strip = |g: &Gate| {
        let mut g = g.clone();
        g.conditioned = false;
        g
    };
    let mut acc = strip(&batch[0]);
    for g in &batch[1..] {
        acc = merge_1q(&strip(g), &acc)?
            .expect("stripped run members always merge");
    }
    if is_identity_u1(&acc) {
        return Ok(vec![]);
    }
    Ok(vec![acc])
}

fn run_optimize_1q(input: &Circuit, _cfg: &PassConfig) -> Result<PassOutcome> {
    let out =
        framework::run_collect("optimize_1q_gates", input, extends_run, fold_run, None)?;
    Ok(PassOutcome::plain(out))
}

fn run_optimize_1q_unfixed(input: &Circuit, _cfg: &PassConfig) -> Result<PassOutcome> {
    let out = framework::run_collect(
        "optimize_1q_gates_unfixed",
        input,
        extends_run_unguarded,
        fold_run_unguarded,
        None,
    )?;
    Ok(PassOutcome::plain(out))
}

/// Merge identities stated over one wire. Where the symbolic catalog can
/// express a merge (u1 against anything, and u1 with itself), the fold is
/// pinned to it; the general case is covered by the merge kernel's
/// sampling certificate.
fn fold_branches() -> Vec<BranchSpec> {
    let u1 = |name: &str| {
        FragItem::Gate(SymGate::new(GateKind::U1, vec![0], vec![AngleExpr::var(name)]))
    };
    let u2 = |p: &str, l: &str| {
        FragItem::Gate(SymGate::new(
            GateKind::U2,
            vec![0],
            vec![AngleExpr::var(p), AngleExpr::var(l)],
        ))
    };
    let u3 = |t: &str, p: &str, l: &str| {
        FragItem::Gate(SymGate::new(
            GateKind::U3,
            vec![0],
            vec![AngleExpr::var(t), AngleExpr::var(p), AngleExpr::var(l)],
        ))
    };
    let u3_sum = |t: &str, p: &str, l: AngleExpr| {
        FragItem::Gate(SymGate::new(
            GateKind::U3,
            vec![0],
            vec![AngleExpr::var(t), AngleExpr::var(p), l],
        ))
    };
    let sum = |a: &str, b: &str| AngleExpr::var(a).add(&AngleExpr::var(b));

    vec![
        BranchSpec {
            name: "pass_through",
            effect: "gates outside the rotation family, conditioned rotations, and \
                     singleton runs are emitted unchanged",
            obligation: BranchObligation::Unchanged,
        },
        BranchSpec {
            name: "fold_u1_u1",
            effect: "consecutive u1 rotations add their angles",
            obligation: BranchObligation::Goal(ProofGoal::equiv(
                "optimize_1q_gates.fold_u1_u1",
                1,
                vec![u1("a"), u1("b")],
                vec![FragItem::Gate(SymGate::new(
                    GateKind::U1,
                    vec![0],
                    vec![sum("a", "b")],
                ))],
            )),
        },
        BranchSpec {
            name: "fold_u1_then_u3",
            effect: "a u1 followed by a u3 lands on the u3's trailing angle",
            obligation: BranchObligation::Goal(ProofGoal::equiv(
                "optimize_1q_gates.fold_u1_then_u3",
                1,
                vec![u1("a"), u3("t", "p", "l")],
                vec![u3_sum("t", "p", sum("l", "a"))],
            )),
        },
        BranchSpec {
            name: "fold_u3_then_u1",
            effect: "a u3 followed by a u1 lands on the u3's leading phase",
            obligation: BranchObligation::Goal({
                let rhs = FragItem::Gate(SymGate::new(
                    GateKind::U3,
                    vec![0],
                    vec![AngleExpr::var("t"), sum("p", "a"), AngleExpr::var("l")],
                ));
                ProofGoal::equiv(
                    "optimize_1q_gates.fold_u3_then_u1",
                    1,
                    vec![u3("t", "p", "l"), u1("a")],
                    vec![rhs],
                )
            }),
        },
        BranchSpec {
            name: "fold_u2_then_u1",
            effect: "a u2 followed by a u1 lands on the u2's leading phase",
            obligation: BranchObligation::Goal({
                let rhs = FragItem::Gate(SymGate::new(
                    GateKind::U2,
                    vec![0],
                    vec![sum("p", "a"), AngleExpr::var("l")],
                ));
                ProofGoal::equiv(
                    "optimize_1q_gates.fold_u2_then_u1",
                    1,
                    vec![u2("p", "l"), u1("a")],
                    vec![rhs],
                )
            }),
        },
        BranchSpec {
            name: "fold_general",
            effect: "any remaining rotation pair merges through the numeric kernel",
            obligation: BranchObligation::Kernel(KernelCheck::MergeUnitary { samples: 1000 }),
        },
    ]
}

fn optimize_1q_descriptor(name: &'static str, demo_bug: bool) -> PassDescriptor {
    PassDescriptor {
        name,
        kind: PassKind::Optimization,
        template: Some(TemplateKind::CollectRuns),
        body: BodySpec {
            input: "gates".to_string(),
            appended: vec!["output".to_string()],
            deleted: vec![],
        },
        branches: fold_branches(),
        top_claim: TopClaim::Equivalence,
        termination: TerminationArgument::LinearSweep,
        needs_coupling: false,
        produces_layout: false,
        demo_bug,
    }
}

pub(super) fn optimize_1q_gates() -> Pass {
    Pass { descriptor: optimize_1q_descriptor("optimize_1q_gates", false), run: run_optimize_1q }
}

pub(super) fn optimize_1q_gates_unfixed() -> Pass {
    Pass {
        descriptor: optimize_1q_descriptor("optimize_1q_gates_unfixed", true),
        run: run_optimize_1q_unfixed,
    }
}

/// Expose the batching predicate a grouping pass actually runs with, so the
/// verifier can audit the groups the pass itself would form rather than
/// reconstruct them from the descriptor. Returns `None` for passes whose
/// batches carry no pairwise semantic claim (the 1q folders batch by wire,
/// where membership alone implies nothing about commutation).
pub(crate) fn grouping_predicate(name: &str) -> Option<fn(&[Gate], &Gate) -> bool> {
    match name {
        "commutative_cancellation" => Some(extends_pairwise),
        "commutative_cancellation_unfixed" => Some(extends_chained),
        _ => None,
    }
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;
    use crate::matrix::circuits_equiv;
    use crate::tolerances::EQUIV_TOL;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn run(pass: &Pass, c: &Circuit) -> Circuit {
        pass.apply(c, &PassConfig::default()).unwrap().circuit
    }

    #[test]
    fn cx_pairs_cancel_through_disjoint_gates() {
        let pass = cx_cancellation();

        // Adjacent identical pair cancels; the trailing h survives.
        let c = Circuit::with_gates(2, vec![Gate::cx(0, 1), Gate::cx(0, 1), Gate::h(0)]).unwrap();
        assert_eq!(run(&pass, &c).gates, vec![Gate::h(0)]);

        // A gate on qubit 0 sits between the pair: it is the next
        // qubit-sharing gate and it is not a cx, so nothing cancels.
        let c = Circuit::with_gates(2, vec![Gate::cx(0, 1), Gate::h(0), Gate::cx(0, 1)]).unwrap();
        assert_eq!(run(&pass, &c).gates.len(), 3);

        // A disjoint gate between the pair does not block cancellation.
        let c = Circuit::with_gates(3, vec![Gate::cx(0, 1), Gate::x(2), Gate::cx(0, 1)]).unwrap();
        assert_eq!(run(&pass, &c).gates, vec![Gate::x(2)]);

        // Reversed orientation is a different unitary and must survive.
        let c = Circuit::with_gates(2, vec![Gate::cx(0, 1), Gate::cx(1, 0)]).unwrap();
        assert_eq!(run(&pass, &c).gates.len(), 2);

        // Conditioned copies never cancel.
        let c = Circuit::with_gates(
            2,
            vec![Gate::cx(0, 1).conditioned(), Gate::cx(0, 1).conditioned()],
        )
        .unwrap();
        assert_eq!(run(&pass, &c).gates.len(), 2);
    }

    #[test]
    fn cx_cancellation_chains_new_pairs() {
        // After the inner pair cancels, the outer gates become adjacent in
        // the worklist and cancel too.
        let pass = cx_cancellation();
        let c = Circuit::with_gates(
            2,
            vec![Gate::cx(0, 1), Gate::cx(0, 1), Gate::cx(0, 1), Gate::cx(0, 1)],
        )
        .unwrap();
        assert!(run(&pass, &c).is_empty());
    }

    #[test]
    fn commutative_cancellation_walkthrough() {
        // The control-sliding example: two z gates fuse across a cx into
        // u1(2pi) and vanish; the cx pair around them cancels.
        let pass = commutative_cancellation();
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
        let out = run(&pass, &c);
        assert!(circuits_equiv(&c, &out, EQUIV_TOL).unwrap());
        assert!(out.len() < c.len(), "expected a shrink, got {out}");
    }

    #[test]
    fn chained_grouping_accepts_the_nontransitive_chain() {
        // cx(0,2) ~ cx(0,1) (shared control) and cx(0,1) ~ cx(2,1) (shared
        // target), but cx(0,2) and cx(2,1) do not commute. Pairwise growth
        // splits the chain; chained growth swallows it whole.
        let chain = Circuit::with_gates(
            3,
            vec![Gate::cx(0, 2), Gate::cx(0, 1), Gate::cx(2, 1)],
        )
        .unwrap();

        let mut batch: Vec<Gate> = Vec::new();
        for g in &chain.gates {
            assert!(extends_chained(&batch, g), "chain growth should accept {g}");
            batch.push(g.clone());
        }
        assert!(
            !extends_pairwise(&batch[..2], &chain.gates[2]),
            "pairwise growth must reject the third gate"
        );
    }

    #[test]
    fn rotation_runs_fold_to_one_gate() {
        let pass = optimize_1q_gates();
        let c = Circuit::with_gates(
            1,
            vec![Gate::u1(0.3, 0), Gate::u3(0.7, 0.2, 0.5, 0), Gate::rz(0.11, 0)],
        )
        .unwrap();
        let out = run(&pass, &c);
        assert_eq!(out.len(), 1);
        assert!(circuits_equiv(&c, &out, EQUIV_TOL).unwrap());
    }

    #[test]
    fn inverse_rotations_vanish() {
        let pass = optimize_1q_gates();
        let c = Circuit::with_gates(1, vec![Gate::u1(0.4, 0), Gate::u1(-0.4, 0)]).unwrap();
        assert!(run(&pass, &c).is_empty());
    }

    #[test]
    fn conditioned_rotation_breaks_the_run() {
        let pass = optimize_1q_gates();
        let guarded = Gate::u3(0.7, 0.2, 0.5, 0).conditioned();
        let c = Circuit::with_gates(
            1,
            vec![Gate::u1(0.3, 0), guarded.clone(), Gate::u1(0.2, 0)],
        )
        .unwrap();
        let out = run(&pass, &c);
        assert_eq!(out.gates[1], guarded, "guarded gate must survive untouched");
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn unguarded_fold_swallows_the_guard() {
        // The demo bug folds across the conditioned flag and emits an
        // unguarded rotation: fine on the guard-taken branch, wrong on the
        // other. The deviation is macroscopic, not tolerance noise.
        let pass = optimize_1q_gates_unfixed();
        let c = Circuit::with_gates(
            1,
            vec![Gate::u1(0.3, 0), Gate::u3(0.7, 0.2, 0.5, 0).conditioned()],
        )
        .unwrap();
        let out = run(&pass, &c);
        assert_eq!(out.len(), 1);
        assert!(!out.gates[0].conditioned);
        assert!(!circuits_equiv(&c, &out, EQUIV_TOL).unwrap());
    }

    #[test]
    fn runs_split_per_qubit() {
        let pass = optimize_1q_gates();
        let c = Circuit::with_gates(
            2,
            vec![
                Gate::u1(0.1, 0),
                Gate::u1(0.2, 1),
                Gate::u1(0.3, 1),
                Gate::u1(0.4, 0),
            ],
        )
        .unwrap();
        let out = run(&pass, &c);
        // Qubit 1's adjacent pair folds; qubit 0's gates are separated by
        // the qubit-1 run and stay separate runs of length one each.
        assert_eq!(out.len(), 3);
        assert!(circuits_equiv(&c, &out, EQUIV_TOL).unwrap());
    }

    #[test]
    fn random_circuits_survive_all_three_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0917);
        let passes =
            [cx_cancellation(), commutative_cancellation(), optimize_1q_gates()];
        for trial in 0..120 {
            let c = crate::generators::random_unitary_circuit(&mut rng, 3, 16);
            for pass in &passes {
                let out = run(pass, &c);
                assert!(
                    circuits_equiv(&c, &out, EQUIV_TOL).unwrap(),
                    "trial {trial}: {} broke {c}",
                    pass.name()
                );
                assert!(out.len() <= c.len(), "{} grew the circuit", pass.name());
            }
        }
    }
}
