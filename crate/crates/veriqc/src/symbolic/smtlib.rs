//! SMT-LIB 2 export of proof goals.
//!
//! The term model maps directly onto uninterpreted functions over a qubit
//! sort: each gate kind becomes one function per output slot (angles are
//! `Real` arguments), opaque fragments become one function per register
//! slot, rules and assumptions become universally quantified equations,
//! and the goal is asserted negated. `unsat` from a solver therefore means
//! the goal holds in the exported theory. Equality of qubit terms models
//! circuit equivalence up to global phase, exactly as in the internal
//! prover.
//!
//! Angle literals are printed as the exact decimal expansion of the
//! double-precision value, never a rounded form: real arithmetic in the
//! solver then agrees with the identities the catalog relies on (the
//! pi-family constants relate by powers of two, which binary floats scale
//! exactly).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::circuit::GateKind;
use crate::error::Result;
use crate::symbolic::prover::ProofGoal;
use crate::symbolic::rules::RewriteRule;
use crate::symbolic::term::{sym_apply, var_register, AngleExpr, FragItem, Term, TermKind};

// ====================================================================
// Angle and name rendering
// ====================================================================

/// Exact decimal expansion of a double. Doubles in the angle range have
/// at most ~55 significant fractional digits; printing 60 and trimming
/// zeros reproduces the value exactly.
fn smt_real(x: f64) -> String {
    if x < 0.0 {
        return format!("(- {})", smt_real(-x));
    }
    let mut s = format!("{x:.60}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.push('0');
    }
    s
}

fn angle_name(v: &str) -> String {
    format!("a_{v}")
}

fn smt_angle(e: &AngleExpr) -> String {
    let mut terms: Vec<String> = Vec::new();
    for (v, coeff) in e.coefficients() {
        if (coeff - 1.0).abs() < 1e-12 {
            terms.push(angle_name(v));
        } else {
            terms.push(format!("(* {} {})", smt_real(coeff), angle_name(v)));
        }
    }
    let c = e.constant_part();
    if c != 0.0 || terms.is_empty() {
        terms.push(smt_real(c));
    }
    match terms.len() {
        1 => terms.pop().unwrap(),
        _ => format!("(+ {})", terms.join(" ")),
    }
}

fn kind_fn(kind: GateKind, slot: u8) -> String {
    let base = kind.name();
    match kind.qubit_arity() {
        Some(2) => format!("{base}_{slot}"),
        _ => base.to_string(),
    }
}

fn opaque_fn(name: &str, slot: usize) -> String {
    format!("op_{name}_{slot}")
}

// ====================================================================
// Term rendering
// ====================================================================

/// Inline rendering; fine for rule-sized terms.
fn term_inline(t: &Term) -> String {
    match t.kind() {
        TermKind::Slot(i) => format!("q{i}"),
        TermKind::Var(v) => format!("v{v}"),
        TermKind::App1 { head, arg } => {
            let mut args: Vec<String> = head.params.iter().map(smt_angle).collect();
            args.push(term_inline(arg));
            format!("({} {})", kind_fn(head.kind, 1), args.join(" "))
        }
        TermKind::App2 { head, a, b, slot } => {
            let mut args: Vec<String> = head.params.iter().map(smt_angle).collect();
            args.push(term_inline(a));
            args.push(term_inline(b));
            format!("({} {})", kind_fn(head.kind, *slot), args.join(" "))
        }
        TermKind::Opaque { frag, inputs, slot } => {
            let args: Vec<String> = inputs.iter().map(term_inline).collect();
            format!("({} {})", opaque_fn(frag, *slot), args.join(" "))
        }
    }
}

/// Let-bound rendering for a register: shared nodes are named once, so the
/// exported text stays proportional to the DAG, not the tree.
fn register_lets(registers: &[&[Term]], body: String) -> String {
    let mut order: Vec<Term> = Vec::new();
    let mut seen: std::collections::HashSet<usize> = Default::default();
    fn topo(t: &Term, seen: &mut std::collections::HashSet<usize>, order: &mut Vec<Term>) {
        if !seen.insert(t.id()) {
            return;
        }
        match t.kind() {
            TermKind::Slot(_) | TermKind::Var(_) => return,
            TermKind::App1 { arg, .. } => topo(arg, seen, order),
            TermKind::App2 { a, b, .. } => {
                topo(a, seen, order);
                topo(b, seen, order);
            }
            TermKind::Opaque { inputs, .. } => {
                for x in inputs.iter() {
                    topo(x, seen, order);
                }
            }
        }
        order.push(t.clone());
    }
    for reg in registers {
        for t in reg.iter() {
            topo(t, &mut seen, &mut order);
        }
    }

    let mut names: HashMap<usize, String> = HashMap::new();
    let mut opening = String::new();
    for (k, t) in order.iter().enumerate() {
        let name = format!("n{k}");
        let rendered = match t.kind() {
            TermKind::Slot(_) | TermKind::Var(_) => unreachable!("leaves are not let-bound"),
            TermKind::App1 { head, arg } => {
                let mut args: Vec<String> = head.params.iter().map(smt_angle).collect();
                args.push(leaf_or_name(arg, &names));
                format!("({} {})", kind_fn(head.kind, 1), args.join(" "))
            }
            TermKind::App2 { head, a, b, slot } => {
                let mut args: Vec<String> = head.params.iter().map(smt_angle).collect();
                args.push(leaf_or_name(a, &names));
                args.push(leaf_or_name(b, &names));
                format!("({} {})", kind_fn(head.kind, *slot), args.join(" "))
            }
            TermKind::Opaque { frag, inputs, slot } => {
                let args: Vec<String> =
                    inputs.iter().map(|x| leaf_or_name(x, &names)).collect();
                format!("({} {})", opaque_fn(frag, *slot), args.join(" "))
            }
        };
        let _ = write!(opening, "(let (({name} {rendered})) ");
        names.insert(t.id(), name);
    }
    let closing = ")".repeat(order.len());
    let body = replace_refs(&body, registers, &names);
    format!("{opening}{body}{closing}")
}

fn leaf_or_name(t: &Term, names: &HashMap<usize, String>) -> String {
    match t.kind() {
        TermKind::Slot(i) => format!("q{i}"),
        TermKind::Var(v) => format!("v{v}"),
        _ => names[&t.id()].clone(),
    }
}

/// The body template refers to register slots as `{L.i}` / `{R.i}`.
fn replace_refs(body: &str, registers: &[&[Term]], names: &HashMap<usize, String>) -> String {
    let mut out = body.to_string();
    let tags = ["L", "R"];
    for (r, reg) in registers.iter().enumerate() {
        for (i, t) in reg.iter().enumerate() {
            out = out.replace(&format!("{{{}.{i}}}", tags[r]), &leaf_or_name(t, names));
        }
    }
    out
}

// ====================================================================
// Export
// ====================================================================

/// Gate kinds appearing in a fragment list.
fn frag_kinds(frag: &[FragItem], into: &mut BTreeSet<GateKind>) {
    for item in frag {
        if let FragItem::Gate(g) = item {
            into.insert(g.kind);
        }
    }
}

/// Render one proof goal plus the relevant slice of the rule catalog as a
/// complete SMT-LIB 2 script ending in `(check-sat)`.
pub fn export_smtlib(goal: &ProofGoal, rules: &[RewriteRule]) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "; goal: {}", goal.name);
    let _ = writeln!(out, "; qubit terms form an uninterpreted sort; function equality");
    let _ = writeln!(out, "; models circuit equivalence up to global phase.");
    let _ = writeln!(out, "; unsat  =>  the goal follows from the exported equations.");
    let _ = writeln!(out, "(set-logic UFLRA)");
    let _ = writeln!(out, "(declare-sort Q 0)");

    // Kind closure: start from the goal and assumptions, then add any rule
    // whose left side stays inside the closure, absorbing its right side.
    let mut kinds: BTreeSet<GateKind> = BTreeSet::new();
    frag_kinds(&goal.lhs, &mut kinds);
    frag_kinds(&goal.rhs, &mut kinds);
    for a in &goal.assumptions {
        frag_kinds(&a.lhs, &mut kinds);
        frag_kinds(&a.rhs, &mut kinds);
    }
    let mut selected: Vec<&RewriteRule> = Vec::new();
    let mut changed = true;
    let mut taken: BTreeSet<String> = BTreeSet::new();
    while changed {
        changed = false;
        for r in rules {
            if taken.contains(&r.name) {
                continue;
            }
            let mut lhs_kinds = BTreeSet::new();
            frag_kinds(
                &r.lhs.iter().cloned().map(FragItem::Gate).collect::<Vec<_>>(),
                &mut lhs_kinds,
            );
            if lhs_kinds.is_subset(&kinds) {
                let mut rhs_kinds = BTreeSet::new();
                frag_kinds(
                    &r.rhs.iter().cloned().map(FragItem::Gate).collect::<Vec<_>>(),
                    &mut rhs_kinds,
                );
                kinds.extend(rhs_kinds);
                taken.insert(r.name.clone());
                selected.push(r);
                changed = true;
            }
        }
    }

    // Function declarations, one per output slot.
    for kind in &kinds {
        let reals = "Real ".repeat(kind.param_arity());
        match kind.qubit_arity() {
            Some(1) => {
                let _ = writeln!(out, "(declare-fun {} ({}Q) Q)", kind_fn(*kind, 1), reals);
            }
            Some(2) => {
                for slot in [1u8, 2u8] {
                    let _ = writeln!(
                        out,
                        "(declare-fun {} ({}Q Q) Q)",
                        kind_fn(*kind, slot),
                        reals
                    );
                }
            }
            _ => {}
        }
    }

    // Opaque fragments: one function per register slot.
    let mut opaques: BTreeMap<String, usize> = BTreeMap::new();
    let mut collect_opaques = |frag: &[FragItem]| {
        for item in frag {
            if let FragItem::Opaque(n) = item {
                opaques.insert(n.clone(), goal.nqreg);
            }
        }
    };
    collect_opaques(&goal.lhs);
    collect_opaques(&goal.rhs);
    for a in &goal.assumptions {
        collect_opaques(&a.lhs);
        collect_opaques(&a.rhs);
    }
    for (name, width) in &opaques {
        for slot in 0..*width {
            let qs = vec!["Q"; *width].join(" ");
            let _ = writeln!(out, "(declare-fun {} ({qs}) Q)", opaque_fn(name, slot));
        }
    }

    // Rule equations as universally quantified assertions.
    for r in &selected {
        let compiled = r.compile()?;
        let angle_vars: Vec<String> = r.angle_vars().into_iter().collect();
        for eq in &compiled.equations {
            let mut quant: Vec<String> =
                (0..r.arity).map(|v| format!("(v{v} Q)")).collect();
            quant.extend(angle_vars.iter().map(|a| format!("({} Real)", angle_name(a))));
            let _ = writeln!(
                out,
                "; rule {} (slot {})",
                r.name, eq.slot
            );
            let _ = writeln!(
                out,
                "(assert (forall ({}) (= {} {})))",
                quant.join(" "),
                term_inline(&eq.lhs),
                term_inline(&eq.rhs)
            );
        }
    }

    // Assumptions: quantified over a whole register of qubit variables.
    for a in &goal.assumptions {
        let reg = var_register(goal.nqreg, 0);
        let lhs = sym_apply(&a.lhs, &reg)?;
        let rhs = sym_apply(&a.rhs, &reg)?;
        let mut angle_vars: BTreeSet<String> = BTreeSet::new();
        for item in a.lhs.iter().chain(a.rhs.iter()) {
            if let FragItem::Gate(g) = item {
                for p in &g.params {
                    angle_vars.extend(p.vars().map(str::to_string));
                }
            }
        }
        let mut quant: Vec<String> =
            (0..goal.nqreg).map(|v| format!("(v{v} Q)")).collect();
        quant.extend(angle_vars.iter().map(|x| format!("({} Real)", angle_name(x))));
        for i in 0..goal.nqreg {
            if lhs[i] == rhs[i] {
                continue;
            }
            let _ = writeln!(out, "; assumption {} (slot {i})", a.name);
            let _ = writeln!(
                out,
                "(assert (forall ({}) (= {} {})))",
                quant.join(" "),
                term_inline(&lhs[i]),
                term_inline(&rhs[i])
            );
        }
    }

    // The negated, skolemized goal. Goal-level angle variables become
    // uninterpreted constants (proving the goal for symbolic angles).
    let mut goal_angles: BTreeSet<String> = BTreeSet::new();
    for item in goal.lhs.iter().chain(goal.rhs.iter()) {
        if let FragItem::Gate(g) = item {
            for p in &g.params {
                goal_angles.extend(p.vars().map(str::to_string));
            }
        }
    }
    for a in &goal_angles {
        let _ = writeln!(out, "(declare-const {} Real)", angle_name(a));
    }
    for i in 0..goal.nqreg {
        let _ = writeln!(out, "(declare-const q{i} Q)");
    }

    let base_lhs: Vec<Term> = match (&goal.out_perm, goal.init_scatter) {
        (Some(p), true) => p.iter().map(|&w| Term::slot(w)).collect(),
        _ => (0..goal.nqreg).map(Term::slot).collect(),
    };
    let lhs_reg = sym_apply(&goal.lhs, &base_lhs)?;
    let rhs_raw = sym_apply(&goal.rhs, &(0..goal.nqreg).map(Term::slot).collect::<Vec<_>>())?;
    let rhs_reg: Vec<Term> = match &goal.out_perm {
        Some(p) => (0..goal.nqreg).map(|i| rhs_raw[p[i]].clone()).collect(),
        None => rhs_raw,
    };

    let disjuncts: Vec<String> = (0..goal.nqreg)
        .map(|i| format!("(distinct {{L.{i}}} {{R.{i}}})"))
        .collect();
    let body = if disjuncts.len() == 1 {
        disjuncts.into_iter().next().unwrap()
    } else {
        format!("(or {})", disjuncts.join(" "))
    };
    let asserted = register_lets(&[&lhs_reg, &rhs_reg], body);
    let _ = writeln!(out, "(assert {asserted})");
    let _ = writeln!(out, "(check-sat)");
    Ok(out)
}

// ====================================================================
// Tests
// ====================================================================
