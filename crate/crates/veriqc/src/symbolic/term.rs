//! Uninterpreted qubit terms and symbolic circuit execution.
//!
//! A circuit executes over a register of terms instead of amplitudes: a
//! one-qubit gate wraps one slot, a two-qubit gate replaces *both* slots
//! with applications that reference *both* old terms (entanglement is why
//! neither output slot can mention only one input), and an opaque fragment
//! (an unknown sub-circuit) captures the entire register. Running the same
//! circuit over a register of variables turns a circuit identity into a
//! term identity, which is what the rewrite engine consumes.
//!
//! Representation note: because a two-qubit application references both
//! predecessors, the term *tree* doubles per layer while the term *DAG*
//! grows linearly. Everything here is therefore DAG-aware: nodes carry
//! cached hashes and depths, equality short-circuits through pointers and
//! hashes before walking structure, and traversals memoize on node
//! identity. Forty CX gates on two qubits produce a term whose tree has
//! a trillion nodes; these functions touch about eighty.

use std::collections::HashMap;
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::tolerances::{ANGLE_KEY_QUANTUM, TERM_DEPTH_BOUND};

// ====================================================================
// Angle expressions
// ====================================================================

/// A linear angle expression: `sum(coeff_i * var_i) + constant`.
///
/// Angles in rewrite rules and pass obligations are symbolic (`merge u1(a)
/// into u3(t,p,l)` must hold for every `a`), and the only arithmetic the
/// rules need is addition and negation, so linear forms suffice. Equality
/// and hashing go through a fixed quantum so that float noise below the
/// angle tolerance cannot split two equal expressions into different hash
/// buckets.
#[derive(Debug, Clone)]
pub struct AngleExpr {
    /// Variable name -> coefficient; entries are nonzero after quantization.
    coeffs: std::collections::BTreeMap<String, f64>,
    constant: f64,
}

fn quantize(x: f64) -> i64 {
    (x / ANGLE_KEY_QUANTUM).round() as i64
}

impl AngleExpr {
    pub fn constant(value: f64) -> AngleExpr {
        AngleExpr { coeffs: Default::default(), constant: value }
    }

    pub fn var(name: impl Into<String>) -> AngleExpr {
        let mut coeffs = std::collections::BTreeMap::new();
        coeffs.insert(name.into(), 1.0);
        AngleExpr { coeffs, constant: 0.0 }
    }

    pub fn zero() -> AngleExpr {
        AngleExpr::constant(0.0)
    }

    fn normalized(mut self) -> AngleExpr {
        self.coeffs.retain(|_, c| quantize(*c) != 0);
        self
    }

    pub fn add(&self, other: &AngleExpr) -> AngleExpr {
        let mut coeffs = self.coeffs.clone();
        for (v, c) in &other.coeffs {
            *coeffs.entry(v.clone()).or_insert(0.0) += c;
        }
        AngleExpr { coeffs, constant: self.constant + other.constant }.normalized()
    }

    pub fn neg(&self) -> AngleExpr {
        AngleExpr {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), -c)).collect(),
            constant: -self.constant,
        }
    }

    pub fn sub(&self, other: &AngleExpr) -> AngleExpr {
        self.add(&other.neg())
    }

    /// The constant value, when no variables appear.
    pub fn as_constant(&self) -> Option<f64> {
        self.coeffs.is_empty().then_some(self.constant)
    }

    /// Sole variable name, when the expression is exactly `1.0 * v`.
    pub fn as_plain_var(&self) -> Option<&str> {
        if self.coeffs.len() == 1 && quantize(self.constant) == 0 {
            let (v, c) = self.coeffs.iter().next().unwrap();
            if quantize(c - 1.0) == 0 {
                return Some(v);
            }
        }
        None
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.coeffs.keys().map(|s| s.as_str())
    }

    /// Variable coefficients in name order.
    pub fn coefficients(&self) -> impl Iterator<Item = (&str, f64)> {
        self.coeffs.iter().map(|(v, c)| (v.as_str(), *c))
    }

    /// The constant summand.
    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    /// Evaluate under a full variable assignment.
    pub fn eval(&self, bindings: &HashMap<String, f64>) -> Result<f64> {
        let mut acc = self.constant;
        for (v, c) in &self.coeffs {
            let val = bindings.get(v).ok_or_else(|| Error::BudgetExhausted {
                what: format!("angle variable {v} unbound during evaluation"),
            })?;
            acc += c * val;
        }
        Ok(acc)
    }

    /// Substitute variables by expressions; unbound variables stay.
    pub fn substitute(&self, bindings: &HashMap<String, AngleExpr>) -> AngleExpr {
        let mut acc = AngleExpr::constant(self.constant);
        for (v, c) in &self.coeffs {
            match bindings.get(v) {
                Some(e) => {
                    // acc += c * e
                    let scaled = AngleExpr {
                        coeffs: e.coeffs.iter().map(|(k, x)| (k.clone(), c * x)).collect(),
                        constant: c * e.constant,
                    };
                    acc = acc.add(&scaled);
                }
                None => {
                    acc = acc.add(&AngleExpr {
                        coeffs: [(v.clone(), *c)].into_iter().collect(),
                        constant: 0.0,
                    });
                }
            }
        }
        acc.normalized()
    }

    fn key(&self) -> (Vec<(&str, i64)>, i64) {
        (
            self.coeffs.iter().map(|(v, c)| (v.as_str(), quantize(*c))).collect(),
            quantize(self.constant),
        )
    }
}

impl PartialEq for AngleExpr {
    fn eq(&self, other: &AngleExpr) -> bool {
        self.key() == other.key()
    }
}
impl Eq for AngleExpr {}
impl Hash for AngleExpr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl std::fmt::Display for AngleExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            if first {
                if quantize(c - 1.0) == 0 {
                    write!(f, "{v}")?;
                } else {
                    write!(f, "{c:.4}*{v}")?;
                }
                first = false;
            } else if quantize(c - 1.0) == 0 {
                write!(f, "+{v}")?;
            } else {
                write!(f, "{c:+.4}*{v}")?;
            }
        }
        if first {
            write!(f, "{:.6}", self.constant)?;
        } else if quantize(self.constant) != 0 {
            write!(f, "{:+.6}", self.constant)?;
        }
        Ok(())
    }
}

// ====================================================================
// Gate heads and symbolic gates
// ====================================================================

/// Gate kind plus symbolic parameters: the label on an application node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GateHead {
    pub kind: GateKind,
    pub params: Vec<AngleExpr>,
}

impl GateHead {
    pub fn plain(kind: GateKind) -> GateHead {
        GateHead { kind, params: Vec::new() }
    }
}

/// A gate with symbolic angles, positioned on register slots.
#[derive(Debug, Clone, PartialEq)]
pub struct SymGate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub params: Vec<AngleExpr>,
}

impl SymGate {
    pub fn new(kind: GateKind, qubits: Vec<usize>, params: Vec<AngleExpr>) -> SymGate {
        SymGate { kind, qubits, params }
    }

    pub fn from_gate(g: &Gate) -> SymGate {
        SymGate {
            kind: g.kind,
            qubits: g.qubits.clone(),
            params: g.params.iter().map(|&p| AngleExpr::constant(p)).collect(),
        }
    }

    pub fn head(&self) -> GateHead {
        GateHead { kind: self.kind, params: self.params.clone() }
    }

    /// Concrete gate under an angle assignment.
    pub fn to_gate(&self, bindings: &HashMap<String, f64>) -> Result<Gate> {
        let params = self
            .params
            .iter()
            .map(|p| p.eval(bindings))
            .collect::<Result<Vec<f64>>>()?;
        Gate::checked(self.kind, self.qubits.clone(), params, false)
    }
}

/// One element of a symbolic circuit fragment: a gate or an opaque
/// sub-circuit named by a fragment variable.
#[derive(Debug, Clone, PartialEq)]
pub enum FragItem {
    Gate(SymGate),
    Opaque(String),
}

impl FragItem {
    pub fn gate(g: &Gate) -> FragItem {
        FragItem::Gate(SymGate::from_gate(g))
    }
}

/// A whole concrete circuit as a fragment.
pub fn circuit_fragment(c: &Circuit) -> Vec<FragItem> {
    c.gates.iter().map(FragItem::gate).collect()
}

// ====================================================================
// Terms
// ====================================================================

/// A qubit term: cheap to clone, compared through cached hashes.
#[derive(Debug, Clone)]
pub struct Term(Arc<TermNode>);

#[derive(Debug)]
struct TermNode {
    kind: TermKind,
    hash: u64,
    depth: u32,
}

/// Structure of a term node.
#[derive(Debug, Clone)]
pub enum TermKind {
    /// Base register slot (a concrete goal register).
    Slot(usize),
    /// Pattern variable (rules and assumptions only).
    Var(u32),
    /// Output of a one-qubit gate.
    App1 { head: GateHead, arg: Term },
    /// Output slot (1 or 2) of a two-qubit gate over two input terms.
    App2 { head: GateHead, a: Term, b: Term, slot: u8 },
    /// Output slot of an opaque fragment applied to a whole register.
    Opaque { frag: String, inputs: Arc<Vec<Term>>, slot: usize },
}

fn hash_of(kind: &TermKind) -> u64 {
    let mut h = DefaultHasher::new();
    match kind {
        TermKind::Slot(i) => {
            0u8.hash(&mut h);
            i.hash(&mut h);
        }
        TermKind::Var(v) => {
            1u8.hash(&mut h);
            v.hash(&mut h);
        }
        TermKind::App1 { head, arg } => {
            2u8.hash(&mut h);
            head.hash(&mut h);
            arg.cached_hash().hash(&mut h);
        }
        TermKind::App2 { head, a, b, slot } => {
            3u8.hash(&mut h);
            head.hash(&mut h);
            a.cached_hash().hash(&mut h);
            b.cached_hash().hash(&mut h);
            slot.hash(&mut h);
        }
        TermKind::Opaque { frag, inputs, slot } => {
            4u8.hash(&mut h);
            frag.hash(&mut h);
            for t in inputs.iter() {
                t.cached_hash().hash(&mut h);
            }
            slot.hash(&mut h);
        }
    }
    h.finish()
}

impl Term {
    fn build(kind: TermKind) -> Result<Term> {
        let depth = match &kind {
            TermKind::Slot(_) | TermKind::Var(_) => 0,
            TermKind::App1 { arg, .. } => arg.depth() + 1,
            TermKind::App2 { a, b, .. } => a.depth().max(b.depth()) + 1,
            TermKind::Opaque { inputs, .. } => {
                inputs.iter().map(|t| t.depth()).max().unwrap_or(0) + 1
            }
        };
        if depth as usize > TERM_DEPTH_BOUND {
            return Err(Error::TermDepthExceeded { bound: TERM_DEPTH_BOUND });
        }
        let hash = hash_of(&kind);
        Ok(Term(Arc::new(TermNode { kind, hash, depth })))
    }

    pub fn slot(i: usize) -> Term {
        Term::build(TermKind::Slot(i)).expect("leaf depth 0")
    }

    pub fn var(v: u32) -> Term {
        Term::build(TermKind::Var(v)).expect("leaf depth 0")
    }

    pub fn app1(head: GateHead, arg: Term) -> Result<Term> {
        Term::build(TermKind::App1 { head, arg })
    }

    pub fn app2(head: GateHead, a: Term, b: Term, slot: u8) -> Result<Term> {
        debug_assert!(slot == 1 || slot == 2);
        Term::build(TermKind::App2 { head, a, b, slot })
    }

    pub fn opaque(frag: String, inputs: Arc<Vec<Term>>, slot: usize) -> Result<Term> {
        Term::build(TermKind::Opaque { frag, inputs, slot })
    }

    pub fn kind(&self) -> &TermKind {
        &self.0.kind
    }

    pub fn depth(&self) -> u32 {
        self.0.depth
    }

    pub fn cached_hash(&self) -> u64 {
        self.0.hash
    }

    /// Stable node identity for memo tables.
    pub fn id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn ptr_eq(&self, other: &Term) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Unique nodes of the DAG under `self`, parents after children absent
    /// any guarantee (the order is traversal order; callers only need the
    /// set). Bounded by the real DAG size, never the tree size.
    pub fn collect_nodes(&self, seen: &mut HashMap<usize, Term>) {
        if seen.contains_key(&self.id()) {
            return;
        }
        seen.insert(self.id(), self.clone());
        match self.kind() {
            TermKind::Slot(_) | TermKind::Var(_) => {}
            TermKind::App1 { arg, .. } => arg.collect_nodes(seen),
            TermKind::App2 { a, b, .. } => {
                a.collect_nodes(seen);
                b.collect_nodes(seen);
            }
            TermKind::Opaque { inputs, .. } => {
                for t in inputs.iter() {
                    t.collect_nodes(seen);
                }
            }
        }
    }

    fn collect_ordered(&self, seen: &mut std::collections::HashSet<usize>, out: &mut Vec<Term>) {
        if !seen.insert(self.id()) {
            return;
        }
        out.push(self.clone());
        match self.kind() {
            TermKind::Slot(_) | TermKind::Var(_) => {}
            TermKind::App1 { arg, .. } => arg.collect_ordered(seen, out),
            TermKind::App2 { a, b, .. } => {
                a.collect_ordered(seen, out);
                b.collect_ordered(seen, out);
            }
            TermKind::Opaque { inputs, .. } => {
                for t in inputs.iter() {
                    t.collect_ordered(seen, out);
                }
            }
        }
    }

    fn eq_rec(a: &Term, b: &Term, memo: &mut std::collections::HashSet<(usize, usize)>) -> bool {
        if a.ptr_eq(b) {
            return true;
        }
        if a.0.hash != b.0.hash || a.0.depth != b.0.depth {
            return false;
        }
        let key = (a.id().min(b.id()), a.id().max(b.id()));
        if !memo.insert(key) {
            // Already being (or been) compared equal-or-on-stack; treating
            // in-progress pairs as equal is sound for acyclic terms.
            return true;
        }
        match (a.kind(), b.kind()) {
            (TermKind::Slot(x), TermKind::Slot(y)) => x == y,
            (TermKind::Var(x), TermKind::Var(y)) => x == y,
            (TermKind::App1 { head: h1, arg: a1 }, TermKind::App1 { head: h2, arg: a2 }) => {
                h1 == h2 && Term::eq_rec(a1, a2, memo)
            }
            (
                TermKind::App2 { head: h1, a: a1, b: b1, slot: s1 },
                TermKind::App2 { head: h2, a: a2, b: b2, slot: s2 },
            ) => s1 == s2 && h1 == h2 && Term::eq_rec(a1, a2, memo) && Term::eq_rec(b1, b2, memo),
            (
                TermKind::Opaque { frag: f1, inputs: i1, slot: s1 },
                TermKind::Opaque { frag: f2, inputs: i2, slot: s2 },
            ) => {
                f1 == f2
                    && s1 == s2
                    && i1.len() == i2.len()
                    && i1.iter().zip(i2.iter()).all(|(x, y)| Term::eq_rec(x, y, memo))
            }
            _ => false,
        }
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        Term::eq_rec(self, other, &mut std::collections::HashSet::new())
    }
}
impl Eq for Term {}
impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash.hash(state);
    }
}

impl std::fmt::Display for Term {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // Display is for traces and errors on small terms; deep shared
        // structure is elided rather than expanded exponentially.
        if self.depth() > 24 {
            return write!(f, "<term depth {}>", self.depth());
        }
        match self.kind() {
            TermKind::Slot(i) => write!(f, "q{i}"),
            TermKind::Var(v) => write!(f, "?{v}"),
            TermKind::App1 { head, arg } => {
                write!(f, "{}", head.kind.name())?;
                fmt_params(f, &head.params)?;
                write!(f, "({arg})")
            }
            TermKind::App2 { head, a, b, slot } => {
                write!(f, "{}", head.kind.name())?;
                fmt_params(f, &head.params)?;
                write!(f, "#{slot}({a},{b})")
            }
            TermKind::Opaque { frag, inputs, slot } => {
                write!(f, "{frag}#{slot}(")?;
                for (i, t) in inputs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn fmt_params(f: &mut std::fmt::Formatter<'_>, params: &[AngleExpr]) -> std::fmt::Result {
    if params.is_empty() {
        return Ok(());
    }
    write!(f, "[")?;
    for (i, p) in params.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{p}")?;
    }
    write!(f, "]")
}

// ====================================================================
// Symbolic execution
// ====================================================================

/// Fresh register of slot terms.
pub fn slot_register(n: usize) -> Vec<Term> {
    (0..n).map(Term::slot).collect()
}

/// Fresh register of pattern variables starting at `base`.
pub fn var_register(n: usize, base: u32) -> Vec<Term> {
    (0..n).map(|i| Term::var(base + i as u32)).collect()
}

/// Execute a fragment over a register of terms.
///
/// * A one-qubit gate wraps its slot.
/// * A two-qubit gate replaces both slots with applications over both old
///   terms, tagged with which output each slot carries.
/// * An opaque fragment captures the whole register: every slot becomes an
///   output of the fragment over a shared snapshot of all inputs.
/// * Barriers have no symbolic content; measures have no term semantics at
///   all and error out.
pub fn sym_apply(fragment: &[FragItem], register: &[Term]) -> Result<Vec<Term>> {
    let mut reg: Vec<Term> = register.to_vec();
    for item in fragment {
        match item {
            FragItem::Opaque(name) => {
                let inputs = Arc::new(reg.clone());
                reg = (0..reg.len())
                    .map(|k| Term::opaque(name.clone(), inputs.clone(), k))
                    .collect::<Result<Vec<Term>>>()?;
            }
            FragItem::Gate(g) => match g.kind {
                GateKind::Barrier => {}
                GateKind::Measure => {
                    return Err(Error::NonUnitaryGate { kind: GateKind::Measure });
                }
                _ => {
                    for &q in &g.qubits {
                        if q >= reg.len() {
                            return Err(Error::QubitOutOfRange { index: q, nqreg: reg.len() });
                        }
                    }
                    if g.qubits.len() == 1 {
                        let q = g.qubits[0];
                        reg[q] = Term::app1(g.head(), reg[q].clone())?;
                    } else {
                        let (i, j) = (g.qubits[0], g.qubits[1]);
                        let (a, b) = (reg[i].clone(), reg[j].clone());
                        reg[i] = Term::app2(g.head(), a.clone(), b.clone(), 1)?;
                        reg[j] = Term::app2(g.head(), a, b, 2)?;
                    }
                }
            },
        }
    }
    Ok(reg)
}

/// Replace every occurrence of the node `target` (by identity) inside the
/// register with `replacement`, rebuilding only the spine above it.
pub fn replace_node(register: &[Term], target: &Term, replacement: &Term) -> Result<Vec<Term>> {
    let mut memo: HashMap<usize, Term> = HashMap::new();
    memo.insert(target.id(), replacement.clone());
    register.iter().map(|t| replace_rec(t, &mut memo)).collect()
}

fn replace_rec(t: &Term, memo: &mut HashMap<usize, Term>) -> Result<Term> {
    if let Some(done) = memo.get(&t.id()) {
        return Ok(done.clone());
    }
    let rebuilt = match t.kind() {
        TermKind::Slot(_) | TermKind::Var(_) => t.clone(),
        TermKind::App1 { head, arg } => {
            let new_arg = replace_rec(arg, memo)?;
            if new_arg.ptr_eq(arg) {
                t.clone()
            } else {
                Term::app1(head.clone(), new_arg)?
            }
        }
        TermKind::App2 { head, a, b, slot } => {
            let na = replace_rec(a, memo)?;
            let nb = replace_rec(b, memo)?;
            if na.ptr_eq(a) && nb.ptr_eq(b) {
                t.clone()
            } else {
                Term::app2(head.clone(), na, nb, *slot)?
            }
        }
        TermKind::Opaque { frag, inputs, slot } => {
            let mut changed = false;
            let mut new_inputs = Vec::with_capacity(inputs.len());
            for x in inputs.iter() {
                let nx = replace_rec(x, memo)?;
                changed |= !nx.ptr_eq(x);
                new_inputs.push(nx);
            }
            if changed {
                Term::opaque(frag.clone(), Arc::new(new_inputs), *slot)?
            } else {
                t.clone()
            }
        }
    };
    memo.insert(t.id(), rebuilt.clone());
    Ok(rebuilt)
}

/// DAG node count of a whole register (unique nodes).
pub fn register_nodes(register: &[Term]) -> usize {
    let mut seen = HashMap::new();
    for t in register {
        t.collect_nodes(&mut seen);
    }
    seen.len()
}

/// Unique nodes of a register in deterministic preorder, outermost slots
/// first. Search procedures iterate this so that verdicts and traces do
/// not depend on allocator addresses.
pub fn register_nodes_ordered(register: &[Term]) -> Vec<Term> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for t in register {
        t.collect_ordered(&mut seen, &mut out);
    }
    out
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;

    fn cx() -> GateHead {
        GateHead::plain(GateKind::Cx)
    }

    #[test]
    fn one_qubit_application_wraps_one_slot() {
        let reg = slot_register(2);
        let out = sym_apply(
            &[FragItem::Gate(SymGate::new(GateKind::H, vec![0], vec![]))],
            &reg,
        )
        .unwrap();
        assert_eq!(out[1], reg[1], "untouched slot is unchanged");
        match out[0].kind() {
            TermKind::App1 { head, arg } => {
                assert_eq!(head.kind, GateKind::H);
                assert_eq!(*arg, reg[0]);
            }
            other => panic!("expected App1, got {other:?}"),
        }
    }

    /// Both outputs of a two-qubit gate reference both inputs: the target
    /// slot alone cannot describe a CX output.
    #[test]
    fn two_qubit_application_entangles_slots() {
        let reg = slot_register(2);
        let out = sym_apply(
            &[FragItem::Gate(SymGate::new(GateKind::Cx, vec![0, 1], vec![]))],
            &reg,
        )
        .unwrap();
        for (i, t) in out.iter().enumerate() {
            match t.kind() {
                TermKind::App2 { head, a, b, slot } => {
                    assert_eq!(head.kind, GateKind::Cx);
                    assert_eq!(*slot as usize, i + 1);
                    assert_eq!(*a, reg[0]);
                    assert_eq!(*b, reg[1]);
                }
                other => panic!("expected App2, got {other:?}"),
            }
        }
    }

    #[test]
    fn opaque_covers_whole_register() {
        let reg = slot_register(3);
        let out = sym_apply(&[FragItem::Opaque("C1".into())], &reg).unwrap();
        for (k, t) in out.iter().enumerate() {
            match t.kind() {
                TermKind::Opaque { frag, inputs, slot } => {
                    assert_eq!(frag, "C1");
                    assert_eq!(*slot, k);
                    assert_eq!(inputs.len(), 3);
                }
                other => panic!("expected Opaque, got {other:?}"),
            }
        }
    }

    /// Sequencing composes: applying `f1; f2` equals applying f1 then f2.
    #[test]
    fn sequencing_is_composition() {
        let reg = slot_register(2);
        let f1 = vec![FragItem::Gate(SymGate::new(GateKind::H, vec![0], vec![]))];
        let f2 = vec![FragItem::Gate(SymGate::new(GateKind::Cx, vec![0, 1], vec![]))];
        let both: Vec<FragItem> = f1.iter().cloned().chain(f2.iter().cloned()).collect();
        let stepwise = sym_apply(&f2, &sym_apply(&f1, &reg).unwrap()).unwrap();
        let joint = sym_apply(&both, &reg).unwrap();
        assert_eq!(stepwise, joint);
    }

    #[test]
    fn barrier_is_identity_measure_errors() {
        let reg = slot_register(2);
        let out = sym_apply(
            &[FragItem::Gate(SymGate::new(GateKind::Barrier, vec![0, 1], vec![]))],
            &reg,
        )
        .unwrap();
        assert_eq!(out, reg);
        assert!(sym_apply(
            &[FragItem::Gate(SymGate::new(GateKind::Measure, vec![0], vec![]))],
            &reg,
        )
        .is_err());
    }

    /// Equality and node counting stay linear-ish on registers whose tree
    /// expansion is astronomically large: 64 CX layers on two qubits.
    #[test]
    fn dag_algorithms_survive_deep_sharing() {
        let frag: Vec<FragItem> = (0..64)
            .map(|i| {
                FragItem::Gate(SymGate::new(GateKind::Cx, vec![i % 2, (i + 1) % 2], vec![]))
            })
            .collect();
        let a = sym_apply(&frag, &slot_register(2)).unwrap();
        let b = sym_apply(&frag, &slot_register(2)).unwrap();
        // Structural equality across two independent builds (no shared
        // pointers), then inequality after one extra layer.
        assert_eq!(a, b);
        let extra = sym_apply(
            &[FragItem::Gate(SymGate::new(GateKind::Cx, vec![0, 1], vec![]))],
            &b,
        )
        .unwrap();
        assert_ne!(a, extra);
        assert!(register_nodes(&a) <= 2 + 64 * 2);
    }

    #[test]
    fn replace_node_rewrites_all_occurrences() {
        let reg = slot_register(2);
        let out = sym_apply(
            &[FragItem::Gate(SymGate::new(GateKind::Cx, vec![0, 1], vec![]))],
            &reg,
        )
        .unwrap();
        // Replace the shared input slot q0 with a fresh variable:
        // both App2 outputs must see it.
        let replaced = replace_node(&out, &reg[0], &Term::var(9)).unwrap();
        for t in &replaced {
            match t.kind() {
                TermKind::App2 { a, .. } => {
                    assert!(matches!(a.kind(), TermKind::Var(9)));
                }
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn angle_expr_algebra() {
        let a = AngleExpr::var("a");
        let b = AngleExpr::var("b");
        let sum = a.add(&b).add(&AngleExpr::constant(1.5));
        let mut env = HashMap::new();
        env.insert("a".to_string(), 0.25);
        env.insert("b".to_string(), -1.0);
        assert!((sum.eval(&env).unwrap() - 0.75).abs() < 1e-12);

        // a + b - b == a, exactly, post-quantization.
        assert_eq!(sum.sub(&b).sub(&AngleExpr::constant(1.5)), a);
        assert_eq!(a.as_plain_var(), Some("a"));
        assert_eq!(sum.as_plain_var(), None);
        assert_eq!(AngleExpr::constant(2.0).as_constant(), Some(2.0));

        // Substitution is capture-correct for the linear fragment.
        let mut subs = HashMap::new();
        subs.insert("a".to_string(), b.add(&AngleExpr::constant(0.5)));
        let inst = sum.substitute(&subs);
        let mut env2 = HashMap::new();
        env2.insert("b".to_string(), 2.0);
        assert!((inst.eval(&env2).unwrap() - (2.5 + 2.0 + 1.5)).abs() < 1e-12);
    }

    #[test]
    fn quantized_equality_ignores_noise() {
        let a = AngleExpr::constant(1.0);
        let b = AngleExpr::constant(1.0 + 1e-13);
        assert_eq!(a, b);
        let c = AngleExpr::constant(1.0 + 1e-8);
        assert_ne!(a, c);
    }

    #[test]
    fn depth_bound_is_enforced() {
        let mut head = GateHead::plain(GateKind::H);
        head.params.clear();
        let mut t = Term::slot(0);
        for _ in 0..TERM_DEPTH_BOUND {
            t = Term::app1(head.clone(), t).unwrap();
        }
        assert!(matches!(
            Term::app1(head, t),
            Err(Error::TermDepthExceeded { .. })
        ));
    }

    #[test]
    fn display_is_compact() {
        let reg = slot_register(2);
        let out = sym_apply(
            &[
                FragItem::Gate(SymGate::new(GateKind::Cx, vec![0, 1], vec![])),
                FragItem::Gate(SymGate::new(
                    GateKind::U1,
                    vec![0],
                    vec![AngleExpr::var("a")],
                )),
            ],
            &reg,
        )
        .unwrap();
        let shown = format!("{}", out[0]);
        assert!(shown.contains("u1"));
        assert!(shown.contains("cx#1"));
        let _ = cx();
    }
}
