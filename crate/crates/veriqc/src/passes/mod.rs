//! Compiler passes over flat gate-list circuits.
//!
//! Every pass here couples an executable transformation with a
//! [`PassDescriptor`]: metadata naming the loop template the pass
//! instantiates, the branches its body can take, the claim its output must
//! satisfy, and how its loop terminates. The verifier turns descriptors
//! into proof obligations; the pipeline runner calls the function pointer.
//! Keeping both in one value stops a pass from quietly outgrowing its own
//! verification story.
//!
//! Conventions shared by every pass:
//!
//! * A pass never mutates its input; it builds a fresh circuit.
//! * A pass that moves program qubits across wires reports where they ended
//!   up in its outcome [`Layout`]: entry `q` is the wire finally holding
//!   program qubit `q`.
//! * Conditioned gates are opaque. No pass merges, cancels, or reorders a
//!   gate whose `conditioned` flag is set, because only one classical
//!   branch of its behavior is a unitary the oracle can compare.
//! * Routing output lives on the device register: when a map has more
//!   nodes than the program register, the routed circuit's `nqreg` is the
//!   node count, and comparisons widen the input to match.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Layout};
use crate::coupling::CouplingMap;
use crate::error::{Error, Result};
use crate::framework::{BodySpec, TemplateKind};
use crate::symbolic::ProofGoal;
use crate::tolerances::{DEFAULT_SEED, LOOKAHEAD_DEPTH, LOOKAHEAD_WIDTH};

mod layout;
mod optimize;
mod routing;
mod structural;

pub use routing::{probe_lookahead_cycle, RouteProbe};
pub(crate) use optimize::grouping_predicate;
pub(crate) use routing::has_deterministic_stepper;

// ====================================================================
// Classification
// ====================================================================

/// What a pass is for. The classification fixes the top-level claim a
/// verified pass must discharge: optimization-style passes preserve the
/// denotation exactly, routing preserves it up to the reported wire
/// permutation, analyses must not write at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PassKind {
    /// Chooses where program qubits start on the device.
    Layout,
    /// Inserts swaps so two-qubit gates act on coupled wires.
    Routing,
    /// Rewrites gates into a different gate vocabulary.
    BasisChange,
    /// Shrinks the circuit while preserving its unitary.
    Optimization,
    /// Computes properties; must leave the circuit untouched.
    Analysis,
    /// Expands abstract operations into executable gates.
    Synthesis,
    /// Everything else: direction fixing, barrier and measure hygiene.
    Assorted,
}

/// The obligation the whole pass answers for, before branch subgoals and
/// termination are added on top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopClaim {
    /// Output denotes the same unitary as the input.
    Equivalence,
    /// Output denotes the input up to the outcome's wire permutation.
    /// Routing passes satisfy it in outcome form (permute after running),
    /// layout passes in relabeling form (conjugate the wires).
    PermutationEquivalence,
    /// The circuit must come back byte-identical.
    ReadOnly,
    /// The unitary gate subsequence must come back identical; barrier and
    /// measure placement is the thing being edited, and the oracle cannot
    /// price a measurement, so the comparison is structural.
    StructuralEquivalence,
}

/// How a pass's loop is known to stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationArgument {
    /// Worklist loop in which every branch deletes at least one gate, so
    /// the worklist length is a strictly decreasing measure.
    EveryBranchDeletes,
    /// Single pass over the input; terminates by construction.
    LinearSweep,
    /// The loop may insert without deleting. An iteration fuse bounds it
    /// at runtime, and the verifier hunts for revisited loop states on a
    /// probe corpus instead of accepting the fuse on faith.
    FuseWithCycleSearch,
}

/// How one body branch upholds the loop invariant.
#[derive(Debug, Clone)]
pub enum BranchObligation {
    /// The branch emits its input segment unchanged (possibly relabeled
    /// through the permutation the invariant already carries), so
    /// preservation is definitional.
    Unchanged,
    /// Preservation reduces to a fragment equivalence the rewrite prover
    /// can discharge.
    Goal(ProofGoal),
    /// The branch calls a numeric kernel whose output the symbolic layer
    /// cannot express; correctness is certified by checking the kernel
    /// against the dense oracle.
    Kernel(KernelCheck),
}

/// Numeric kernels a branch may lean on, each with its own certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelCheck {
    /// `merge_1q(g1, g2)` agrees with the matrix product `M(g1) * M(g2)`
    /// up to global phase over this many random angle draws.
    MergeUnitary { samples: usize },
    /// The pairwise commutation table agrees with the matrix oracle on
    /// every supported kind pair and qubit geometry, by enumeration.
    CommutationTable,
    /// Every group the pass forms is mutually commuting under the matrix
    /// oracle, checked over a probe corpus. This is the premise that lets
    /// the group rewriter cancel non-adjacent pairs.
    GroupingPairwise,
}

/// One declared branch of a pass body.
#[derive(Debug, Clone)]
pub struct BranchSpec {
    pub name: &'static str,
    /// One-line account of what the branch does, quoted in reports.
    pub effect: &'static str,
    pub obligation: BranchObligation,
}

/// Verification-facing metadata for one pass.
#[derive(Debug, Clone)]
pub struct PassDescriptor {
    pub name: &'static str,
    pub kind: PassKind,
    /// Loop template the implementation instantiates; `None` for direct
    /// structural edits that are not loops over a worklist.
    pub template: Option<TemplateKind>,
    /// Which lists the body reads, appends to, and deletes from; the
    /// invariant inferencer binds its schema against these names.
    pub body: BodySpec,
    pub branches: Vec<BranchSpec>,
    pub top_claim: TopClaim,
    pub termination: TerminationArgument,
    /// Whether the pass refuses to run without a coupling map.
    pub needs_coupling: bool,
    /// Whether the outcome layout is configuration for later passes (a
    /// chosen placement) rather than a report of wire movement.
    pub produces_layout: bool,
    /// Deliberately broken demonstration variant; excluded from the
    /// default registry.
    pub demo_bug: bool,
}

// ====================================================================
// Running
// ====================================================================

/// Shared knobs for a pass execution.
#[derive(Debug, Clone)]
pub struct PassConfig {
    pub coupling: Option<CouplingMap>,
    /// Placement consumed by `apply_layout`; threaded from a preceding
    /// layout pass by the pipeline runner.
    pub layout: Option<Layout>,
    pub seed: u64,
    pub lookahead_depth: usize,
    pub lookahead_width: usize,
}

impl Default for PassConfig {
    fn default() -> PassConfig {
        PassConfig {
            coupling: None,
            layout: None,
            seed: DEFAULT_SEED,
            lookahead_depth: LOOKAHEAD_DEPTH,
            lookahead_width: LOOKAHEAD_WIDTH,
        }
    }
}

impl PassConfig {
    pub fn with_coupling(map: CouplingMap) -> PassConfig {
        PassConfig { coupling: Some(map), ..PassConfig::default() }
    }

    /// The coupling map, or the error naming the pass that needed it.
    pub fn coupling_for(&self, pass: &str) -> Result<&CouplingMap> {
        self.coupling
            .as_ref()
            .ok_or_else(|| Error::PassNeedsCouplingMap { name: pass.to_string() })
    }
}

/// Properties an analysis computes. `depth` is the longest chain in the
/// qubit-dependency order; barriers synchronize the wires they touch but
/// do not count as a layer of their own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyMap {
    pub size: usize,
    pub width: usize,
    pub depth: usize,
    pub count_ops: BTreeMap<String, usize>,
}

/// What one pass run produced.
#[derive(Debug, Clone)]
pub struct PassOutcome {
    pub circuit: Circuit,
    /// Wire permutation (routing) or chosen placement (layout).
    pub layout: Option<Layout>,
    /// Analysis results; `None` for transforming passes.
    pub properties: Option<PropertyMap>,
}

impl PassOutcome {
    /// Outcome of a pass that only rewrites gates.
    pub fn plain(circuit: Circuit) -> PassOutcome {
        PassOutcome { circuit, layout: None, properties: None }
    }
}

pub type PassFn = fn(&Circuit, &PassConfig) -> Result<PassOutcome>;

/// A runnable pass with its verification metadata.
#[derive(Debug, Clone)]
pub struct Pass {
    pub descriptor: PassDescriptor,
    pub run: PassFn,
}

impl Pass {
    pub fn name(&self) -> &'static str {
        self.descriptor.name
    }

    pub fn apply(&self, input: &Circuit, config: &PassConfig) -> Result<PassOutcome> {
        (self.run)(input, config)
    }
}

// ====================================================================
// Registry
// ====================================================================

/// The shipped passes, in a sensible default ordering for display. The
/// runner imposes no order; pipelines list passes explicitly.
pub fn registry() -> Vec<Pass> {
    vec![
        layout::trivial_layout(),
        layout::apply_layout(),
        routing::basic_swap(),
        routing::lookahead_swap(),
        layout::gate_direction(),
        optimize::cx_cancellation(),
        optimize::commutative_cancellation(),
        optimize::optimize_1q_gates(),
        structural::analysis(),
        structural::remove_final_measure(),
        structural::merge_adjacent_barriers(),
        structural::barrier_before_final_measure(),
    ]
}

/// Deliberately broken variants, for demonstrating that the verifier
/// catches real bugs. Never part of [`registry`].
pub fn demo_registry() -> Vec<Pass> {
    vec![
        optimize::optimize_1q_gates_unfixed(),
        optimize::commutative_cancellation_unfixed(),
        routing::lookahead_swap_unfixed(),
    ]
}

/// Look a pass up by name; demo variants resolve only when asked for.
pub fn find_pass(name: &str, include_demo: bool) -> Result<Pass> {
    let mut all = registry();
    if include_demo {
        all.extend(demo_registry());
    }
    all.into_iter()
        .find(|p| p.name() == name)
        .ok_or_else(|| Error::UnknownPass { name: name.to_string() })
}

/// Resolve a comma-or-slice of pass names into runnable passes, checking
/// coupling-map requirements up front so a pipeline fails before running
/// half of itself.
pub fn build_pipeline(names: &[String], config: &PassConfig, include_demo: bool) -> Result<Vec<Pass>> {
    let mut passes = Vec::with_capacity(names.len());
    for name in names {
        let pass = find_pass(name, include_demo)?;
        if pass.descriptor.needs_coupling && config.coupling.is_none() {
            return Err(Error::PassNeedsCouplingMap { name: name.clone() });
        }
        passes.push(pass);
    }
    Ok(passes)
}

// ====================================================================
// Pipelines
// ====================================================================

/// One executed stage, kept whole so a caller can validate each stage
/// against its own input afterwards.
#[derive(Debug, Clone)]
pub struct StageRecord {
    pub pass: PassDescriptor,
    pub input: Circuit,
    pub outcome: PassOutcome,
    pub millis: f64,
}

/// A full pipeline execution.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub circuit: Circuit,
    /// Last analysis result seen, if any stage was an analysis.
    pub properties: Option<PropertyMap>,
    pub stages: Vec<StageRecord>,
}

/// Run passes in order, threading layouts: a placement produced by a
/// layout-choosing stage becomes the `layout` configuration of later
/// stages.
pub fn run_pipeline(
    passes: &[Pass],
    input: &Circuit,
    config: &PassConfig,
) -> Result<PipelineOutcome> {
    let mut cfg = config.clone();
    let mut current = input.clone();
    let mut properties = None;
    let mut stages = Vec::with_capacity(passes.len());
    for pass in passes {
        let start = std::time::Instant::now();
        let outcome = pass.apply(&current, &cfg)?;
        let millis = start.elapsed().as_secs_f64() * 1e3;
        if pass.descriptor.produces_layout {
            cfg.layout = outcome.layout.clone();
        }
        if let Some(props) = &outcome.properties {
            properties = Some(props.clone());
        }
        stages.push(StageRecord {
            pass: pass.descriptor.clone(),
            input: std::mem::replace(&mut current, outcome.circuit.clone()),
            outcome,
            millis,
        });
    }
    Ok(PipelineOutcome { circuit: current, properties, stages })
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use crate::framework::infer_invariant;

    #[test]
    fn registry_names_are_unique_and_demo_free() {
        let passes = registry();
        assert_eq!(passes.len(), 12);
        let mut names: Vec<&str> = passes.iter().map(|p| p.name()).collect();
        names.sort_unstable();
        let deduped = names.len();
        names.dedup();
        assert_eq!(names.len(), deduped, "duplicate pass name in registry");
        assert!(passes.iter().all(|p| !p.descriptor.demo_bug));
        assert_eq!(demo_registry().len(), 3);
        assert!(demo_registry().iter().all(|p| p.descriptor.demo_bug));
    }

    #[test]
    fn every_templated_descriptor_binds_the_invariant_schema() {
        for pass in registry().iter().chain(demo_registry().iter()) {
            let d = &pass.descriptor;
            if let Some(template) = d.template {
                let inv = infer_invariant(template, &d.body)
                    .unwrap_or_else(|e| panic!("{}: {e}", d.name));
                assert!(
                    inv.statement.contains(&inv.output_binding),
                    "{}: invariant does not mention its output list",
                    d.name
                );
            }
        }
    }

    #[test]
    fn unknown_names_and_missing_maps_fail_up_front() {
        assert!(matches!(
            find_pass("no_such_pass", true),
            Err(Error::UnknownPass { .. })
        ));
        // Demo variants are invisible unless asked for.
        assert!(find_pass("optimize_1q_gates_unfixed", false).is_err());
        assert!(find_pass("optimize_1q_gates_unfixed", true).is_ok());

        let names = vec!["basic_swap".to_string()];
        let err = build_pipeline(&names, &PassConfig::default(), false);
        assert!(matches!(err, Err(Error::PassNeedsCouplingMap { .. })));
        let ok = build_pipeline(&names, &PassConfig::with_coupling(CouplingMap::line(3)), false);
        assert!(ok.is_ok());
    }

    #[test]
    fn pipeline_threads_layout_and_properties() {
        let mut c = Circuit::new(3);
        c.push(Gate::h(0));
        c.push(Gate::cx(0, 1));
        c.push(Gate::cx(1, 2));
        let config = PassConfig::with_coupling(CouplingMap::line(3));
        let names: Vec<String> = ["trivial_layout", "apply_layout", "analysis"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let passes = build_pipeline(&names, &config, false).unwrap();
        let out = run_pipeline(&passes, &c, &config).unwrap();
        assert_eq!(out.stages.len(), 3);
        // Identity placement: apply_layout leaves the circuit alone.
        assert_eq!(out.circuit, c);
        let props = out.properties.expect("analysis ran");
        assert_eq!(props.size, 3);
        assert_eq!(props.width, 3);
        assert_eq!(props.depth, 3);
    }

    #[test]
    fn stage_records_keep_inputs_aligned() {
        let mut c = Circuit::new(2);
        c.push(Gate::cx(0, 1));
        c.push(Gate::cx(0, 1));
        let config = PassConfig::default();
        let passes = vec![find_pass("cx_cancellation", false).unwrap()];
        let out = run_pipeline(&passes, &c, &config).unwrap();
        assert_eq!(out.stages[0].input, c);
        assert_eq!(out.stages[0].outcome.circuit, out.circuit);
        assert!(out.circuit.is_empty());
    }
}
