//! Loop templates that passes are written against.
//!
//! Every shipped pass is an instance of one of three shapes, and the
//! verifier leans on that: a pass names its template, the template fixes
//! the loop structure and the invariant schema, and only the body is
//! pass-specific. What the verifier must then check shrinks from "whole
//! pass" to "each body branch preserves the invariant", which is the move
//! that makes push-button verification tractable.
//!
//! The templates also enforce totality at runtime. Every loop carries an
//! iteration fuse so a body that stops making progress surfaces as
//! [`Error::FuseTripped`] instead of a hang, and passes whose termination
//! argument is "every branch deletes a gate" can request that the template
//! police exactly that. Checked mode re-validates the instantiated
//! invariant at every iteration boundary against a caller-supplied oracle,
//! which is how template/invariant bugs are caught during pass bring-up.

pub mod groups;
pub mod merge;

pub use groups::{cancel_commuting, commutation_groups, rewrite_group};
pub use merge::{is_mergeable_1q, merge_1q, MERGEABLE_1Q};

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};

// ====================================================================
// Template identities and invariant schemas
// ====================================================================

/// The three loop shapes passes may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TemplateKind {
    /// One sweep over the input; each gate maps to zero or more output
    /// gates, decided locally.
    IterateAllGates,
    /// A worklist loop: each iteration inspects the whole remaining list,
    /// appends to the output, and deletes some remaining gates.
    WhileGateRemaining,
    /// One sweep that batches maximal runs of related gates and rewrites
    /// each finished batch at once.
    CollectRuns,
}

impl TemplateKind {
    pub fn name(self) -> &'static str {
        match self {
            TemplateKind::IterateAllGates => "iterate_all_gates",
            TemplateKind::WhileGateRemaining => "while_gate_remaining",
            TemplateKind::CollectRuns => "collect_runs",
        }
    }
}

/// What a pass body does to named gate lists, as declared by the pass.
/// Invariant inference reads bindings off this shape instead of parsing
/// the body.
#[derive(Debug, Clone)]
pub struct BodySpec {
    /// Name of the input gate list.
    pub input: String,
    /// Lists the body appends to.
    pub appended: Vec<String>,
    /// Lists the body deletes from.
    pub deleted: Vec<String>,
}

/// An invariant schema instantiated with the pass's own list names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferredInvariant {
    pub template: TemplateKind,
    /// The claim checked at every iteration boundary, rendered with the
    /// bound names. `[[ _ ]]` is the circuit denotation.
    pub statement: String,
    /// Which list plays the role of the accumulated output.
    pub output_binding: String,
    /// Which list plays the worklist role; only `WhileGateRemaining`
    /// binds one.
    pub remaining_binding: Option<String>,
}

/// Bind the template's invariant schema against a body's declared effects.
///
/// The output placeholder needs exactly one appended list; the worklist
/// placeholder (while-loops only) needs exactly one deleted list. Zero
/// candidates is an unbound placeholder, several is an ambiguity; both are
/// reported as errors rather than guessed at.
pub fn infer_invariant(template: TemplateKind, spec: &BodySpec) -> Result<InferredInvariant> {
    let output = match spec.appended.as_slice() {
        [one] => one.clone(),
        [] => {
            return Err(Error::UnboundPlaceholder { placeholder: "?output".into() });
        }
        many => {
            return Err(Error::AmbiguousBinding {
                msg: format!(
                    "?output has {} candidates: {}",
                    many.len(),
                    many.join(", ")
                ),
            });
        }
    };
    let remaining = match template {
        TemplateKind::WhileGateRemaining => match spec.deleted.as_slice() {
            [one] => Some(one.clone()),
            [] => {
                return Err(Error::UnboundPlaceholder {
                    placeholder: "?remaining_gates".into(),
                });
            }
            many => {
                return Err(Error::AmbiguousBinding {
                    msg: format!(
                        "?remaining_gates has {} candidates: {}",
                        many.len(),
                        many.join(", ")
                    ),
                });
            }
        },
        _ => None,
    };
    let statement = match template {
        TemplateKind::IterateAllGates => format!(
            "[[ {output} ++ unprocessed({input}) ]] == [[ {input} ]]",
            input = spec.input
        ),
        TemplateKind::WhileGateRemaining => format!(
            "[[ {output} ++ {rem} ]] == [[ {input} ]]",
            rem = remaining.as_deref().unwrap(),
            input = spec.input
        ),
        TemplateKind::CollectRuns => format!(
            "[[ {output} ++ run ++ unprocessed({input}) ]] == [[ {input} ]]",
            input = spec.input
        ),
    };
    Ok(InferredInvariant {
        template,
        statement,
        output_binding: output,
        remaining_binding: remaining,
    })
}

// ====================================================================
// Template execution
// ====================================================================

/// Snapshot of loop state handed to while-loop bodies and to checked-mode
/// invariant validators.
pub struct WhileView<'a> {
    /// Gates emitted so far.
    pub output: &'a [Gate],
    /// Gates not yet consumed.
    pub remaining: &'a [Gate],
    /// Zero-based iteration count.
    pub iteration: usize,
}

/// What one while-loop iteration decided: which remaining gates to delete
/// (indices into the view's `remaining`) and what to append to the output.
pub struct Action {
    pub delete: Vec<usize>,
    pub emit: Vec<Gate>,
}

/// Checked-mode validator: `Ok(true)` means the invariant holds at this
/// boundary. Validators compare against the oracle, so they can fail with
/// ordinary errors too (register too large, say).
pub type InvariantCheck<'a> = dyn Fn(&WhileView<'_>) -> Result<bool> + 'a;

/// Fuse for loops whose termination is not "every iteration deletes".
/// Sized generously: routing inserts at most a device-diameter of swaps
/// per gate, and diameters of supported maps are far below sixteen.
pub fn default_fuse(input_len: usize) -> usize {
    16 * input_len + 64
}

fn check_boundary(
    pass: &str,
    check: Option<&InvariantCheck<'_>>,
    view: &WhileView<'_>,
) -> Result<()> {
    if let Some(check) = check {
        if !check(view)? {
            return Err(Error::InvariantViolated {
                pass: pass.to_string(),
                iteration: view.iteration,
                msg: "declared invariant failed at iteration boundary".into(),
            });
        }
    }
    Ok(())
}

/// Run an `IterateAllGates` body over a circuit: each input gate becomes
/// the gates the body returns, in order.
pub fn run_iterate(
    pass: &str,
    input: &Circuit,
    mut body: impl FnMut(&Gate) -> Result<Vec<Gate>>,
    check: Option<&InvariantCheck<'_>>,
) -> Result<Circuit> {
    let mut output: Vec<Gate> = Vec::with_capacity(input.gates.len());
    for (i, gate) in input.gates.iter().enumerate() {
        output.extend(body(gate)?);
        check_boundary(
            pass,
            check,
            &WhileView { output: &output, remaining: &input.gates[i + 1..], iteration: i },
        )?;
    }
    Circuit::with_gates(input.nqreg, output)
}

/// Run a `WhileGateRemaining` body until the worklist drains.
///
/// `require_progress` is for passes whose termination argument is that
/// every branch deletes at least one gate; the template then enforces it,
/// turning a non-deleting iteration into [`Error::InvariantViolated`].
/// All loops are additionally bounded by `fuse`.
pub fn run_while(
    pass: &str,
    input: &Circuit,
    fuse: usize,
    require_progress: bool,
    mut body: impl FnMut(&WhileView<'_>) -> Result<Action>,
    check: Option<&InvariantCheck<'_>>,
) -> Result<Circuit> {
    let mut remaining: Vec<Gate> = input.gates.clone();
    let mut output: Vec<Gate> = Vec::with_capacity(input.gates.len());
    let mut iteration = 0usize;
    while !remaining.is_empty() {
        if iteration >= fuse {
            return Err(Error::FuseTripped { pass: pass.to_string(), iterations: iteration });
        }
        let action = body(&WhileView { output: &output, remaining: &remaining, iteration })?;
        let mut delete = action.delete;
        delete.sort_unstable();
        for pair in delete.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::InvariantViolated {
                    pass: pass.to_string(),
                    iteration,
                    msg: format!("gate index {} deleted twice", pair[0]),
                });
            }
        }
        if let Some(&worst) = delete.last() {
            if worst >= remaining.len() {
                return Err(Error::GateIndexOutOfRange {
                    index: worst,
                    len: remaining.len(),
                });
            }
        }
        if require_progress && delete.is_empty() {
            return Err(Error::InvariantViolated {
                pass: pass.to_string(),
                iteration,
                msg: "iteration deleted no remaining gate".into(),
            });
        }
        output.extend(action.emit);
        for &idx in delete.iter().rev() {
            remaining.remove(idx);
        }
        check_boundary(
            pass,
            check,
            &WhileView { output: &output, remaining: &remaining, iteration },
        )?;
        iteration += 1;
    }
    Circuit::with_gates(input.nqreg, output)
}

/// Run a `CollectRuns` body: `extends` decides whether a gate joins the
/// current batch (handed the batch so far, empty when deciding whether the
/// gate can *start* one), and `body` rewrites each finished batch. Gates
/// that cannot start a batch pass through unchanged.
pub fn run_collect(
    pass: &str,
    input: &Circuit,
    mut extends: impl FnMut(&[Gate], &Gate) -> bool,
    mut body: impl FnMut(&[Gate]) -> Result<Vec<Gate>>,
    check: Option<&InvariantCheck<'_>>,
) -> Result<Circuit> {
    let mut output: Vec<Gate> = Vec::with_capacity(input.gates.len());
    let mut batch: Vec<Gate> = Vec::new();
    let mut iteration = 0usize;
    let mut flush = |output: &mut Vec<Gate>,
                     batch: &mut Vec<Gate>,
                     rest: &[Gate],
                     iteration: &mut usize|
     -> Result<()> {
        if batch.is_empty() {
            return Ok(());
        }
        let rewritten = body(batch)?;
        output.extend(rewritten);
        batch.clear();
        check_boundary(
            pass,
            check,
            &WhileView { output, remaining: rest, iteration: *iteration },
        )?;
        *iteration += 1;
        Ok(())
    };
    for (i, gate) in input.gates.iter().enumerate() {
        if !batch.is_empty() && extends(&batch, gate) {
            batch.push(gate.clone());
            continue;
        }
        let rest = &input.gates[i..];
        flush(&mut output, &mut batch, rest, &mut iteration)?;
        if extends(&[], gate) {
            batch.push(gate.clone());
        } else {
            output.push(gate.clone());
            check_boundary(
                pass,
                check,
                &WhileView { output: &output, remaining: &input.gates[i + 1..], iteration },
            )?;
            iteration += 1;
        }
    }
    flush(&mut output, &mut batch, &[], &mut iteration)?;
    Circuit::with_gates(input.nqreg, output)
}

/// Replay `run_collect`'s batching decisions without rewriting anything,
/// returning the groups a `CollectRuns` body would have been handed. The
/// verifier audits grouping predicates with this: the groups seen here are
/// exactly the groups the pass itself forms, so any semantic claim checked
/// against them covers the real execution and not an approximation of it.
pub fn collect_groups(
    input: &Circuit,
    mut extends: impl FnMut(&[Gate], &Gate) -> bool,
) -> Vec<Vec<Gate>> {
    let mut groups: Vec<Vec<Gate>> = Vec::new();
    let mut batch: Vec<Gate> = Vec::new();
    for gate in &input.gates {
        if !batch.is_empty() && extends(&batch, gate) {
            batch.push(gate.clone());
            continue;
        }
        if !batch.is_empty() {
            groups.push(std::mem::take(&mut batch));
        }
        if extends(&[], gate) {
            batch.push(gate.clone());
        }
    }
    if !batch.is_empty() {
        groups.push(batch);
    }
    groups
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateKind;
    use crate::matrix::circuits_equiv;
    use crate::tolerances::EQUIV_TOL;

    fn sample_circuit() -> Circuit {
        Circuit::with_gates(
            2,
            vec![
                Gate::h(0),
                Gate::t(0),
                Gate::t(0),
                Gate::cx(0, 1),
                Gate::u1(0.25, 1),
                Gate::x(1),
            ],
        )
        .unwrap()
    }

    /// Oracle-backed invariant for optimization passes: emitted-so-far
    /// followed by not-yet-processed equals the input.
    fn equiv_check(input: &Circuit) -> impl Fn(&WhileView<'_>) -> Result<bool> + '_ {
        move |view: &WhileView<'_>| {
            let mut gates = view.output.to_vec();
            gates.extend_from_slice(view.remaining);
            let recombined = Circuit::with_gates(input.nqreg, gates)?;
            circuits_equiv(input, &recombined, EQUIV_TOL)
        }
    }

    #[test]
    fn iterate_identity_body_roundtrips() {
        let c = sample_circuit();
        let check = equiv_check(&c);
        let out = run_iterate("probe", &c, |g| Ok(vec![g.clone()]), Some(&check)).unwrap();
        assert_eq!(out, c);
    }

    /// Checked mode catches a body that silently drops gates.
    #[test]
    fn iterate_checked_mode_catches_dropped_gates() {
        let c = sample_circuit();
        let check = equiv_check(&c);
        let err = run_iterate(
            "probe",
            &c,
            |g| {
                if g.kind == GateKind::T {
                    Ok(vec![])
                } else {
                    Ok(vec![g.clone()])
                }
            },
            Some(&check),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvariantViolated { iteration: 1, .. }), "{err}");
    }

    #[test]
    fn while_loop_drains_front_to_back() {
        let c = sample_circuit();
        let check = equiv_check(&c);
        let out = run_while(
            "probe",
            &c,
            default_fuse(c.gates.len()),
            true,
            |view| Ok(Action { delete: vec![0], emit: vec![view.remaining[0].clone()] }),
            Some(&check),
        )
        .unwrap();
        assert_eq!(out, c);
    }

    #[test]
    fn while_loop_fuse_trips_on_stalled_body() {
        let c = sample_circuit();
        let err = run_while(
            "stall",
            &c,
            10,
            false,
            |_| Ok(Action { delete: vec![], emit: vec![] }),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::FuseTripped { iterations: 10, .. }), "{err}");
    }

    #[test]
    fn while_loop_progress_requirement_is_enforced() {
        let c = sample_circuit();
        let err = run_while(
            "must-delete",
            &c,
            100,
            true,
            |_| Ok(Action { delete: vec![], emit: vec![] }),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvariantViolated { iteration: 0, .. }), "{err}");
    }

    #[test]
    fn while_loop_rejects_bad_deletions() {
        let c = sample_circuit();
        let err = run_while(
            "oob",
            &c,
            100,
            false,
            |_| Ok(Action { delete: vec![99], emit: vec![] }),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::GateIndexOutOfRange { index: 99, .. }), "{err}");

        let err = run_while(
            "dup",
            &c,
            100,
            false,
            |_| Ok(Action { delete: vec![0, 0], emit: vec![] }),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvariantViolated { .. }), "{err}");
    }

    /// Batch consecutive u1 runs per qubit and fuse them into one gate.
    #[test]
    fn collect_runs_batches_and_rewrites() {
        let c = Circuit::with_gates(
            2,
            vec![
                Gate::u1(0.1, 0),
                Gate::u1(0.2, 0),
                Gate::h(1),
                Gate::u1(0.3, 0),
                Gate::cx(0, 1),
            ],
        )
        .unwrap();
        let check = equiv_check(&c);
        let out = run_collect(
            "fuse-u1",
            &c,
            |batch, g| {
                g.kind == GateKind::U1
                    && !g.conditioned
                    && batch.first().map_or(true, |b| b.qubits == g.qubits)
            },
            |batch| {
                let q = batch[0].qubits[0];
                let total: f64 = batch.iter().map(|g| g.params[0]).sum();
                Ok(vec![Gate::u1(total, q)])
            },
            Some(&check),
        )
        .unwrap();
        // h(1) does not join a u1 batch, so the first run ends before it;
        // the u1 after it starts a new single-element run.
        assert_eq!(out.gates.len(), 4);
        assert_eq!(out.gates[0], Gate::u1(0.30000000000000004, 0));
        assert_eq!(out.gates[1], Gate::h(1));
        assert!(circuits_equiv(&c, &out, EQUIV_TOL).unwrap());
    }

    #[test]
    fn invariant_inference_binds_names() {
        let spec = BodySpec {
            input: "gates".into(),
            appended: vec!["out".into()],
            deleted: vec!["work".into()],
        };
        let inv = infer_invariant(TemplateKind::WhileGateRemaining, &spec).unwrap();
        assert_eq!(inv.output_binding, "out");
        assert_eq!(inv.remaining_binding.as_deref(), Some("work"));
        assert_eq!(inv.statement, "[[ out ++ work ]] == [[ gates ]]");

        let inv = infer_invariant(TemplateKind::IterateAllGates, &spec).unwrap();
        assert_eq!(inv.remaining_binding, None);
        assert!(inv.statement.contains("unprocessed(gates)"));
    }

    #[test]
    fn invariant_inference_rejects_bad_specs() {
        let no_output = BodySpec {
            input: "gates".into(),
            appended: vec![],
            deleted: vec!["work".into()],
        };
        assert!(matches!(
            infer_invariant(TemplateKind::IterateAllGates, &no_output),
            Err(Error::UnboundPlaceholder { placeholder }) if placeholder == "?output"
        ));

        let two_outputs = BodySpec {
            input: "gates".into(),
            appended: vec!["a".into(), "b".into()],
            deleted: vec!["work".into()],
        };
        assert!(matches!(
            infer_invariant(TemplateKind::CollectRuns, &two_outputs),
            Err(Error::AmbiguousBinding { .. })
        ));

        let no_worklist = BodySpec {
            input: "gates".into(),
            appended: vec!["out".into()],
            deleted: vec![],
        };
        assert!(matches!(
            infer_invariant(TemplateKind::WhileGateRemaining, &no_worklist),
            Err(Error::UnboundPlaceholder { placeholder }) if placeholder == "?remaining_gates"
        ));
    }
}
