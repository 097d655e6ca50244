//! One error type for the whole crate.
//!
//! Every fallible operation reports through [`Error`]. The variants are
//! deliberately specific: callers (the CLI, the verifier, tests) branch on
//! them, and the acceptance suite asserts that particular misuses produce
//! particular variants rather than a catch-all string.

use crate::circuit::GateKind;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in parsing, semantics, proving, or passes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Source text violated the accepted OpenQASM 2 grammar.
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    /// Source text is valid OpenQASM 2 but uses a construct outside the
    /// supported subset (second register, gate definitions, control flow).
    #[error("unsupported construct at line {line}: {what}")]
    Unsupported { line: usize, what: String },

    /// A gate referenced a qubit index at or beyond the register size.
    #[error("qubit index {index} out of range for register of size {nqreg}")]
    QubitOutOfRange { index: usize, nqreg: usize },

    /// A gate-list index was at or beyond the circuit length.
    #[error("gate index {index} out of range for circuit with {len} gates")]
    GateIndexOutOfRange { index: usize, len: usize },

    /// A gate was built with the wrong number of angle parameters.
    #[error("{kind:?} takes {expected} parameter(s), got {got}")]
    BadParamCount { kind: GateKind, expected: usize, got: usize },

    /// A gate was built with the wrong number of qubit operands.
    #[error("{kind:?} acts on {expected} qubit(s), got {got}")]
    BadQubitCount { kind: GateKind, expected: usize, got: usize },

    /// The same qubit appeared twice in one gate's operand list.
    #[error("duplicate qubit {qubit} in one gate's operands")]
    DuplicateQubit { qubit: usize },

    /// Two matrices (or circuits) of different register sizes were compared.
    #[error("dimension mismatch: {a} vs {b} qubits")]
    DimensionMismatch { a: usize, b: usize },

    /// The dense oracle refuses registers whose unitaries would not fit.
    #[error("register of {n} qubits exceeds the dense-oracle cap of {cap}")]
    RegisterTooLarge { n: usize, cap: usize },

    /// BARRIER and MEASURE have no unitary; asking for one is an error.
    #[error("{kind:?} has no unitary semantics")]
    NonUnitaryGate { kind: GateKind },

    /// Routing requires every pair of nodes to be connected.
    #[error("coupling map is not connected (node {node} unreachable from node 0)")]
    DisconnectedMap { node: usize },

    /// A coupling-map entry referenced a node outside `0..nodes`.
    #[error("node {node} out of range for coupling map with {nodes} nodes")]
    NodeOutOfRange { node: usize, nodes: usize },

    /// A coupling-map file did not have the accepted JSON shape.
    #[error("malformed coupling map: {msg}")]
    MalformedCouplingMap { msg: String },

    /// The commutation table only covers a fixed gate set.
    #[error("commutation is not defined for {kind:?}")]
    UnsupportedCommutation { kind: GateKind },

    /// Classically conditioned gates cannot be commuted or merged.
    #[error("operation is not defined for conditioned gates")]
    ConditionedGate,

    /// A layout must be injective and in range for its register.
    #[error("invalid layout: {msg}")]
    BadLayout { msg: String },

    /// The circuit register does not fit on the device.
    #[error("register of {nqreg} qubits exceeds device with {nodes} nodes")]
    RegisterLargerThanDevice { nqreg: usize, nodes: usize },

    /// Single-qubit merging requires both gates on the same qubit.
    #[error("gates act on different qubits ({a} vs {b})")]
    DifferentQubits { a: usize, b: usize },

    /// Single-qubit merging was handed a gate it cannot express.
    #[error("{kind:?} is not a mergeable single-qubit gate")]
    NotMergeable1q { kind: GateKind },

    /// Symbolic terms are capped to keep the prover total.
    #[error("term depth bound of {bound} exceeded")]
    TermDepthExceeded { bound: usize },

    /// The prover ran out of its node or time budget mid-construction.
    #[error("proof budget exhausted: {what}")]
    BudgetExhausted { what: String },

    /// A routed circuit placed a two-qubit gate off the coupling map.
    #[error("two-qubit gate on ({a},{b}) is not a coupling edge")]
    GateNotOnEdge { a: usize, b: usize },

    /// An unknown pass name reached the pipeline builder.
    #[error("unknown pass name: {name}")]
    UnknownPass { name: String },

    /// Routing and direction passes need a coupling map to work against.
    #[error("pass {name} requires a coupling map")]
    PassNeedsCouplingMap { name: String },

    /// A loop template exceeded its iteration fuse; this signals a pass bug
    /// (a step that neither deletes nor converges), not bad user input.
    #[error("iteration fuse tripped after {iterations} iterations in {pass}")]
    FuseTripped { pass: String, iterations: usize },

    /// Checked-mode template execution found an invariant violation.
    #[error("template invariant violated in {pass} at iteration {iteration}: {msg}")]
    InvariantViolated { pass: String, iteration: usize, msg: String },

    /// Invariant inference could not pick a unique output binding.
    #[error("ambiguous invariant binding: {msg}")]
    AmbiguousBinding { msg: String },

    /// Obligation generation refuses descriptors whose branch structure
    /// would explode into more proof paths than anyone could audit.
    #[error("pass {name} expands to {paths} proof paths (cap {cap})")]
    BranchExpansionTooLarge { name: String, paths: usize, cap: usize },

    /// Invariant inference had no candidate for a schema placeholder.
    #[error("no binding for invariant placeholder {placeholder}")]
    UnboundPlaceholder { placeholder: String },

    /// No SMT solver could be located or provisioned.
    #[error("no SMT solver available: {msg}")]
    SolverUnavailable { msg: String },

    /// An SMT solver ran but did not produce a usable verdict.
    #[error("SMT solver failed: {msg}")]
    SolverFailed { msg: String },

    /// Underlying I/O failure (file read/write, process spawn).
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure for reports and coupling maps.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
