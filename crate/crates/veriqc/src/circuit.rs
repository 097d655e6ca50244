//! Circuits as flat gate lists over one quantum register.
//!
//! A [`Circuit`] is a register size plus an ordered `Vec<Gate>`; there is no
//! DAG. Temporal order is list order: `gates[0]` acts first. Everything
//! downstream (the matrix semantics, passes, the symbolic engine) builds on
//! this one representation, so its invariants are enforced here once:
//! every gate's qubits are in range, distinct, and match the gate's arity,
//! and parameter counts match the gate kind.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// ====================================================================
// Gate kinds
// ====================================================================

/// The fixed gate vocabulary.
///
/// `Barrier` and `Measure` are the two non-unitary kinds: they carry no
/// matrix, block reordering across themselves, and are otherwise opaque.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    T,
    S,
    Cx,
    Swap,
    Rz,
    U1,
    U2,
    U3,
    Barrier,
    Measure,
}

impl GateKind {
    /// Number of angle parameters this kind carries.
    pub fn param_arity(self) -> usize {
        match self {
            GateKind::U1 | GateKind::Rz => 1,
            GateKind::U2 => 2,
            GateKind::U3 => 3,
            _ => 0,
        }
    }

    /// Number of qubit operands, or `None` for `Barrier`, which may span
    /// any non-empty qubit set.
    pub fn qubit_arity(self) -> Option<usize> {
        match self {
            GateKind::Cx | GateKind::Swap => Some(2),
            GateKind::Barrier => None,
            _ => Some(1),
        }
    }

    /// Whether the kind denotes a unitary (everything except barrier and
    /// measure).
    pub fn is_unitary(self) -> bool {
        !matches!(self, GateKind::Barrier | GateKind::Measure)
    }

    /// Lower-case mnemonic, matching the OpenQASM statement name.
    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::H => "h",
            GateKind::T => "t",
            GateKind::S => "s",
            GateKind::Cx => "cx",
            GateKind::Swap => "swap",
            GateKind::Rz => "rz",
            GateKind::U1 => "u1",
            GateKind::U2 => "u2",
            GateKind::U3 => "u3",
            GateKind::Barrier => "barrier",
            GateKind::Measure => "measure",
        }
    }

    /// All kinds, in declaration order. Used by generators and tests.
    pub fn all() -> &'static [GateKind] {
        &[
            GateKind::X,
            GateKind::Y,
            GateKind::Z,
            GateKind::H,
            GateKind::T,
            GateKind::S,
            GateKind::Cx,
            GateKind::Swap,
            GateKind::Rz,
            GateKind::U1,
            GateKind::U2,
            GateKind::U3,
            GateKind::Barrier,
            GateKind::Measure,
        ]
    }
}

// ====================================================================
// Gates
// ====================================================================

/// One gate application: kind, qubit operands, angle parameters, and a
/// classical-condition flag.
///
/// For `Cx`, `qubits[0]` is the control and `qubits[1]` the target. A gate
/// with `conditioned == true` executes only when an (unmodeled) classical
/// bit is set; passes must treat such gates as unmergeable and uncommutable,
/// and equivalence checks compare both the taken and untaken branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub params: Vec<f64>,
    pub conditioned: bool,
}

impl Gate {
    /// Validating constructor; the one entry point for untrusted input.
    pub fn checked(
        kind: GateKind,
        qubits: Vec<usize>,
        params: Vec<f64>,
        conditioned: bool,
    ) -> Result<Gate> {
        if params.len() != kind.param_arity() {
            return Err(Error::BadParamCount {
                kind,
                expected: kind.param_arity(),
                got: params.len(),
            });
        }
        match kind.qubit_arity() {
            Some(arity) if qubits.len() != arity => {
                return Err(Error::BadQubitCount { kind, expected: arity, got: qubits.len() });
            }
            None if qubits.is_empty() => {
                return Err(Error::BadQubitCount { kind, expected: 1, got: 0 });
            }
            _ => {}
        }
        for (i, &q) in qubits.iter().enumerate() {
            if qubits[..i].contains(&q) {
                return Err(Error::DuplicateQubit { qubit: q });
            }
        }
        Ok(Gate { kind, qubits, params, conditioned })
    }

    fn must(kind: GateKind, qubits: Vec<usize>, params: Vec<f64>) -> Gate {
        Gate::checked(kind, qubits, params, false).expect("static gate constructor")
    }

    pub fn x(q: usize) -> Gate {
        Gate::must(GateKind::X, vec![q], vec![])
    }
    pub fn y(q: usize) -> Gate {
        Gate::must(GateKind::Y, vec![q], vec![])
    }
    pub fn z(q: usize) -> Gate {
        Gate::must(GateKind::Z, vec![q], vec![])
    }
    pub fn h(q: usize) -> Gate {
        Gate::must(GateKind::H, vec![q], vec![])
    }
    pub fn t(q: usize) -> Gate {
        Gate::must(GateKind::T, vec![q], vec![])
    }
    pub fn s(q: usize) -> Gate {
        Gate::must(GateKind::S, vec![q], vec![])
    }
    pub fn cx(control: usize, target: usize) -> Gate {
        Gate::must(GateKind::Cx, vec![control, target], vec![])
    }
    pub fn swap(a: usize, b: usize) -> Gate {
        Gate::must(GateKind::Swap, vec![a, b], vec![])
    }
    pub fn rz(lambda: f64, q: usize) -> Gate {
        Gate::must(GateKind::Rz, vec![q], vec![lambda])
    }
    pub fn u1(lambda: f64, q: usize) -> Gate {
        Gate::must(GateKind::U1, vec![q], vec![lambda])
    }
    pub fn u2(phi: f64, lambda: f64, q: usize) -> Gate {
        Gate::must(GateKind::U2, vec![q], vec![phi, lambda])
    }
    pub fn u3(theta: f64, phi: f64, lambda: f64, q: usize) -> Gate {
        Gate::must(GateKind::U3, vec![q], vec![theta, phi, lambda])
    }
    pub fn barrier(qubits: Vec<usize>) -> Gate {
        Gate::must(GateKind::Barrier, qubits, vec![])
    }
    pub fn measure(q: usize) -> Gate {
        Gate::must(GateKind::Measure, vec![q], vec![])
    }

    /// Same gate, marked classically conditioned.
    pub fn conditioned(mut self) -> Gate {
        self.conditioned = true;
        self
    }

    /// Whether this gate has a unitary matrix (kind unitary; conditioning
    /// does not remove the matrix, it gates *when* the matrix applies).
    pub fn is_unitary_kind(&self) -> bool {
        self.kind.is_unitary()
    }

    /// True when the two gates touch at least one common qubit.
    pub fn shares_qubit(&self, other: &Gate) -> bool {
        self.qubits.iter().any(|q| other.qubits.contains(q))
    }

    /// Structural equality with angle-tolerant parameter comparison.
    pub fn approx_eq(&self, other: &Gate, angle_tol: f64) -> bool {
        self.kind == other.kind
            && self.qubits == other.qubits
            && self.conditioned == other.conditioned
            && self.params.len() == other.params.len()
            && self
                .params
                .iter()
                .zip(&other.params)
                .all(|(a, b)| (a - b).abs() <= angle_tol)
    }
}

impl std::fmt::Display for Gate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.conditioned {
            write!(f, "?")?;
        }
        write!(f, "{}", self.kind.name())?;
        if !self.params.is_empty() {
            write!(f, "(")?;
            for (i, p) in self.params.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{p:.4}")?;
            }
            write!(f, ")")?;
        }
        write!(f, " ")?;
        for (i, q) in self.qubits.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "q{q}")?;
        }
        Ok(())
    }
}

// ====================================================================
// Circuits
// ====================================================================

/// A register size plus an ordered gate list. `gates[0]` acts first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub nqreg: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    /// Empty circuit over `nqreg` qubits.
    pub fn new(nqreg: usize) -> Circuit {
        Circuit { nqreg, gates: Vec::new() }
    }

    /// Build from parts, validating every gate against the register.
    pub fn with_gates(nqreg: usize, gates: Vec<Gate>) -> Result<Circuit> {
        let mut c = Circuit::new(nqreg);
        for g in gates {
            c.try_push(g)?;
        }
        Ok(c)
    }

    /// Append a gate, validating qubit ranges.
    pub fn try_push(&mut self, gate: Gate) -> Result<()> {
        for &q in &gate.qubits {
            if q >= self.nqreg {
                return Err(Error::QubitOutOfRange { index: q, nqreg: self.nqreg });
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Append a gate known to be in range; panics otherwise. For pass and
    /// test code building circuits from already-validated indices.
    pub fn push(&mut self, gate: Gate) {
        self.try_push(gate).expect("gate out of range for register");
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Whether every gate is a unitary kind (no barrier, no measure).
    pub fn is_unitary_only(&self) -> bool {
        self.gates.iter().all(|g| g.is_unitary_kind())
    }

    /// Whether any gate carries the conditioned flag.
    pub fn has_conditioned(&self) -> bool {
        self.gates.iter().any(|g| g.conditioned)
    }

    /// The same gate list on a wider register. Routing onto a device with
    /// more nodes than the program register compares circuits in the
    /// device's dimension, and widening is how the program side gets there:
    /// extra wires are never touched, so they carry identity.
    ///
    /// Widening to fewer qubits than `nqreg` is a programming error.
    pub fn widened(&self, nqreg: usize) -> Circuit {
        assert!(
            nqreg >= self.nqreg,
            "cannot widen {} qubits to {nqreg}",
            self.nqreg
        );
        Circuit { nqreg, gates: self.gates.clone() }
    }

    /// Index of the next gate at or after `start` that shares a qubit with
    /// `gates[start]`, if any. Barrier and measure share through their full
    /// operand sets, so they act as fences for the qubits they list.
    ///
    /// Errors when `start` is out of range.
    pub fn next_gate(&self, start: usize) -> Result<Option<usize>> {
        let first = self
            .gates
            .get(start)
            .ok_or(Error::GateIndexOutOfRange { index: start, len: self.gates.len() })?;
        for (offset, g) in self.gates[start + 1..].iter().enumerate() {
            if first.shares_qubit(g) {
                return Ok(Some(start + 1 + offset));
            }
        }
        Ok(None)
    }

    /// Longest chain in the qubit-dependency order: per-qubit running
    /// maxima, one scan. Barriers synchronize the wires they touch without
    /// occupying a layer of their own; every other gate (measures included)
    /// costs one layer.
    pub fn depth(&self) -> usize {
        let mut per_qubit = vec![0usize; self.nqreg];
        for g in &self.gates {
            let sync = g.qubits.iter().map(|&q| per_qubit[q]).max().unwrap_or(0);
            let level = if g.kind == GateKind::Barrier { sync } else { 1 + sync };
            for &q in &g.qubits {
                per_qubit[q] = level;
            }
        }
        per_qubit.into_iter().max().unwrap_or(0)
    }

    /// Occurrence count per gate name.
    pub fn count_ops(&self) -> std::collections::BTreeMap<String, usize> {
        let mut counts = std::collections::BTreeMap::new();
        for g in &self.gates {
            *counts.entry(g.kind.name().to_string()).or_insert(0) += 1;
        }
        counts
    }
}

impl std::fmt::Display for Circuit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{} qubits:", self.nqreg)?;
        for g in &self.gates {
            write!(f, " {g};")?;
        }
        write!(f, "]")
    }
}

// ====================================================================
// Layouts
// ====================================================================

/// An injective map from program-qubit index to physical-node index.
///
/// `map[q]` is the physical node that holds program qubit `q`. The map must
/// be injective; it is a full permutation when the register fills the
/// device, and [`Layout::extend`] completes it to one when it does not.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    map: Vec<usize>,
}

impl Layout {
    /// Identity layout on `n` qubits.
    pub fn identity(n: usize) -> Layout {
        Layout { map: (0..n).collect() }
    }

    /// Validating constructor: entries must be distinct.
    pub fn new(map: Vec<usize>) -> Result<Layout> {
        let mut seen = std::collections::HashSet::new();
        for &p in &map {
            if !seen.insert(p) {
                return Err(Error::BadLayout { msg: format!("physical node {p} used twice") });
            }
        }
        Ok(Layout { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Physical node of program qubit `q`.
    pub fn get(&self, q: usize) -> usize {
        self.map[q]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    /// Whether every target node is below `nodes`.
    pub fn fits(&self, nodes: usize) -> bool {
        self.map.iter().all(|&p| p < nodes)
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// Exchange the physical nodes of two *positions*: after routing inserts
    /// a swap on nodes `(a, b)`, the program qubits living there trade
    /// places. Positions not currently owned by a program qubit are fine;
    /// the swap then moves at most one tracked qubit.
    pub fn swap_physical(&mut self, a: usize, b: usize) {
        for p in &mut self.map {
            if *p == a {
                *p = b;
            } else if *p == b {
                *p = a;
            }
        }
    }

    /// Program qubit currently on physical node `p`, if any.
    pub fn program_at(&self, p: usize) -> Option<usize> {
        self.map.iter().position(|&x| x == p)
    }

    /// Complete this injection to a full permutation on `n` nodes: mapped
    /// nodes keep their assignment, and the remaining program slots
    /// `len()..n` take the unused nodes in ascending order. Errors if any
    /// entry is out of range for `n`.
    pub fn extend(&self, n: usize) -> Result<Layout> {
        for &p in &self.map {
            if p >= n {
                return Err(Error::BadLayout {
                    msg: format!("node {p} out of range for extension to {n}"),
                });
            }
        }
        let used: std::collections::HashSet<usize> = self.map.iter().copied().collect();
        let mut free = (0..n).filter(|p| !used.contains(p));
        let mut map = self.map.clone();
        while map.len() < n {
            map.push(free.next().expect("free nodes remain by counting"));
        }
        Layout::new(map)
    }

    /// Inverse of a full permutation: `inverse()[p]` is the program qubit
    /// on node `p`. Errors unless the layout is a permutation (len == max+1).
    pub fn inverse(&self) -> Result<Layout> {
        let n = self.map.len();
        let mut inv = vec![usize::MAX; n];
        for (q, &p) in self.map.iter().enumerate() {
            if p >= n {
                return Err(Error::BadLayout {
                    msg: format!("layout is not a permutation: node {p} with {n} slots"),
                });
            }
            inv[p] = q;
        }
        Layout::new(inv)
    }
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_enforce_arity() {
        assert!(Gate::checked(GateKind::Cx, vec![0], vec![], false).is_err());
        assert!(Gate::checked(GateKind::U1, vec![0], vec![], false).is_err());
        assert!(Gate::checked(GateKind::U3, vec![0], vec![0.1, 0.2], false).is_err());
        assert!(Gate::checked(GateKind::X, vec![0], vec![0.5], false).is_err());
        assert!(Gate::checked(GateKind::Barrier, vec![], vec![], false).is_err());
        assert!(Gate::checked(GateKind::Cx, vec![3, 3], vec![], false).is_err());
        assert!(Gate::checked(GateKind::Cx, vec![0, 1], vec![], false).is_ok());
    }

    #[test]
    fn circuit_rejects_out_of_range_qubits() {
        let mut c = Circuit::new(2);
        assert!(c.try_push(Gate::h(1)).is_ok());
        assert!(matches!(
            c.try_push(Gate::h(2)),
            Err(Error::QubitOutOfRange { index: 2, nqreg: 2 })
        ));
    }

    #[test]
    fn next_gate_finds_first_sharing_gate() {
        // h(0); x(1); cx(0,1): the next gate sharing a qubit with h(0)
        // is cx at index 2, skipping the disjoint x(1).
        let c = Circuit::with_gates(2, vec![Gate::h(0), Gate::x(1), Gate::cx(0, 1)]).unwrap();
        assert_eq!(c.next_gate(0).unwrap(), Some(2));
        assert_eq!(c.next_gate(1).unwrap(), Some(2));
        assert_eq!(c.next_gate(2).unwrap(), None);
        assert!(c.next_gate(3).is_err());
    }

    #[test]
    fn next_gate_treats_barrier_as_fence() {
        let c = Circuit::with_gates(
            3,
            vec![Gate::h(0), Gate::barrier(vec![0, 1]), Gate::h(2)],
        )
        .unwrap();
        assert_eq!(c.next_gate(0).unwrap(), Some(1));
        // The barrier itself shares with nothing later here.
        assert_eq!(c.next_gate(1).unwrap(), None);
    }

    #[test]
    fn depth_counts_longest_chain() {
        let mut c = Circuit::new(3);
        assert_eq!(c.depth(), 0);
        c.push(Gate::h(0));
        c.push(Gate::h(1));
        c.push(Gate::cx(0, 1));
        c.push(Gate::x(2));
        assert_eq!(c.depth(), 2);
    }

    #[test]
    fn depth_synchronizes_across_barriers_without_counting_them() {
        let mut c = Circuit::new(2);
        c.push(Gate::h(0));
        c.push(Gate::barrier(vec![0, 1]));
        assert_eq!(c.depth(), 1, "a trailing barrier is not a layer");
        c.push(Gate::x(1));
        // The barrier forces x(1) after h(0) even though the wires differ.
        assert_eq!(c.depth(), 2);
        c.push(Gate::measure(0));
        assert_eq!(c.depth(), 2, "measure stacks on the shorter wire");
    }

    #[test]
    fn layout_rejects_collisions_and_extends() {
        assert!(Layout::new(vec![0, 0]).is_err());
        let l = Layout::new(vec![2, 0]).unwrap();
        let full = l.extend(4).unwrap();
        assert_eq!(full.as_slice(), &[2, 0, 1, 3]);
        let inv = full.inverse().unwrap();
        for q in 0..4 {
            assert_eq!(inv.get(full.get(q)), q);
        }
    }

    #[test]
    fn layout_swap_tracks_positions() {
        let mut l = Layout::identity(3);
        l.swap_physical(0, 2);
        assert_eq!(l.as_slice(), &[2, 1, 0]);
        l.swap_physical(1, 2);
        // Program qubit 0 sat on node 2, which now trades with node 1.
        assert_eq!(l.as_slice(), &[1, 2, 0]);
    }

    #[test]
    fn count_ops_groups_by_name() {
        let c = Circuit::with_gates(2, vec![Gate::h(0), Gate::h(1), Gate::cx(0, 1)]).unwrap();
        let counts = c.count_ops();
        assert_eq!(counts["h"], 2);
        assert_eq!(counts["cx"], 1);
    }
}
