//! The rewrite rule catalog.
//!
//! A rule states that two small gate fragments denote the same unitary up
//! to global phase, possibly modulo an output wire permutation. Rules are
//! written as circuit fragments over rule-local qubits `0..arity`; compiling
//! a rule runs both fragments symbolically over a register of pattern
//! variables, yielding one term equation per output slot. The prover uses
//! compiled equations; the certification layer checks the same fragments
//! against the dense matrix oracle, so a wrong rule is caught before the
//! prover ever trusts it. A small corpus of deliberately broken variants
//! keeps the certifier honest.

use std::collections::BTreeSet;
use std::collections::HashMap;

use crate::circuit::{Gate, GateKind};
use crate::error::Result;
use crate::symbolic::term::{sym_apply, var_register, AngleExpr, FragItem, SymGate, Term};

// ====================================================================
// Rule definition and compilation
// ====================================================================

/// A candidate circuit identity over `arity` rule-local qubits.
#[derive(Debug, Clone)]
pub struct RewriteRule {
    pub name: String,
    pub arity: usize,
    /// Fragment gates in time order (first element applied first).
    pub lhs: Vec<SymGate>,
    pub rhs: Vec<SymGate>,
    /// When present, output slot `i` of the left fragment carries what
    /// output slot `out_perm[i]` of the right fragment carries (wires are
    /// renamed rather than equal position-for-position).
    pub out_perm: Option<Vec<usize>>,
    /// Oriented rules strictly simplify left-to-right and participate in
    /// normalization; unoriented rules (commutations, decompositions) are
    /// search moves only.
    pub oriented: bool,
}

impl RewriteRule {
    /// Angle variable names appearing anywhere in the rule.
    pub fn angle_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for g in self.lhs.iter().chain(self.rhs.iter()) {
            for p in &g.params {
                out.extend(p.vars().map(str::to_string));
            }
        }
        out
    }

    pub fn is_parametric(&self) -> bool {
        !self.angle_vars().is_empty()
    }

    /// Compile to per-slot term equations over variables `0..arity`.
    pub fn compile(&self) -> Result<CompiledRule> {
        let reg = var_register(self.arity, 0);
        let lhs_frag: Vec<FragItem> = self.lhs.iter().cloned().map(FragItem::Gate).collect();
        let rhs_frag: Vec<FragItem> = self.rhs.iter().cloned().map(FragItem::Gate).collect();
        let lhs_reg = sym_apply(&lhs_frag, &reg)?;
        let rhs_reg = sym_apply(&rhs_frag, &reg)?;
        let mut equations = Vec::new();
        for i in 0..self.arity {
            let j = self.out_perm.as_ref().map_or(i, |p| p[i]);
            let (l, r) = (lhs_reg[i].clone(), rhs_reg[j].clone());
            if l == r {
                continue;
            }
            equations.push(RuleEquation { slot: i, lhs: l, rhs: r });
        }
        Ok(CompiledRule { rule: self.clone(), equations })
    }
}

/// One output slot's equation, as proved by the rule certificate.
#[derive(Debug, Clone)]
pub struct RuleEquation {
    pub slot: usize,
    pub lhs: Term,
    pub rhs: Term,
}

/// A rule together with its compiled slot equations.
#[derive(Debug, Clone)]
pub struct CompiledRule {
    pub rule: RewriteRule,
    pub equations: Vec<RuleEquation>,
}

/// Instantiate a rule fragment as concrete gates: rule-local qubit `i`
/// maps to `targets[i]`, angle variables read from `angles`.
pub fn instantiate_fragment(
    frag: &[SymGate],
    targets: &[usize],
    angles: &HashMap<String, f64>,
) -> Result<Vec<Gate>> {
    frag.iter()
        .map(|g| {
            let params = g
                .params
                .iter()
                .map(|p| p.eval(angles))
                .collect::<Result<Vec<f64>>>()?;
            let qubits = g.qubits.iter().map(|&q| targets[q]).collect();
            Gate::checked(g.kind, qubits, params, false)
        })
        .collect()
}

// ====================================================================
// Fragment construction helpers
// ====================================================================

fn g0(kind: GateKind, q: usize) -> SymGate {
    SymGate::new(kind, vec![q], vec![])
}

fn g2(kind: GateKind, a: usize, b: usize) -> SymGate {
    SymGate::new(kind, vec![a, b], vec![])
}

fn u1v(name: &str, q: usize) -> SymGate {
    SymGate::new(GateKind::U1, vec![q], vec![AngleExpr::var(name)])
}

fn u1c(value: f64, q: usize) -> SymGate {
    SymGate::new(GateKind::U1, vec![q], vec![AngleExpr::constant(value)])
}

fn u2v(phi: &str, lam: &str, q: usize) -> SymGate {
    SymGate::new(
        GateKind::U2,
        vec![q],
        vec![AngleExpr::var(phi), AngleExpr::var(lam)],
    )
}

fn u3v(theta: &str, phi: &str, lam: &str, q: usize) -> SymGate {
    SymGate::new(
        GateKind::U3,
        vec![q],
        vec![
            AngleExpr::var(theta),
            AngleExpr::var(phi),
            AngleExpr::var(lam),
        ],
    )
}

fn rule(
    name: &str,
    arity: usize,
    lhs: Vec<SymGate>,
    rhs: Vec<SymGate>,
    oriented: bool,
) -> RewriteRule {
    RewriteRule {
        name: name.to_string(),
        arity,
        lhs,
        rhs,
        out_perm: None,
        oriented,
    }
}

// ====================================================================
// The catalog
// ====================================================================

/// Every rule the engine may use. All of these must pass local and
/// embedded certification before the prover loads them.
pub fn builtin_rules() -> Vec<RewriteRule> {
    use GateKind::*;
    let pi = std::f64::consts::PI;
    let mut rules = Vec::new();

    // Wire projection: a swap is a renaming of its two wires.
    rules.push(RewriteRule {
        name: "swap_projection".into(),
        arity: 2,
        lhs: vec![g2(Swap, 0, 1)],
        rhs: vec![],
        out_perm: Some(vec![1, 0]),
        oriented: true,
    });

    // Involution cancellations.
    rules.push(rule("cx_cancel", 2, vec![g2(Cx, 0, 1), g2(Cx, 0, 1)], vec![], true));
    rules.push(rule("hh_cancel", 1, vec![g0(H, 0), g0(H, 0)], vec![], true));
    rules.push(rule("xx_cancel", 1, vec![g0(X, 0), g0(X, 0)], vec![], true));
    rules.push(rule("zz_cancel", 1, vec![g0(Z, 0), g0(Z, 0)], vec![], true));
    rules.push(rule(
        "swap_cancel",
        2,
        vec![g2(Swap, 0, 1), g2(Swap, 0, 1)],
        vec![],
        true,
    ));

    // Diagonal gates slide through a control; X slides through a target.
    rules.push(rule(
        "z_past_control",
        2,
        vec![g0(Z, 0), g2(Cx, 0, 1)],
        vec![g2(Cx, 0, 1), g0(Z, 0)],
        false,
    ));
    rules.push(rule(
        "u1_past_control",
        2,
        vec![u1v("a", 0), g2(Cx, 0, 1)],
        vec![g2(Cx, 0, 1), u1v("a", 0)],
        false,
    ));
    rules.push(rule(
        "x_past_target",
        2,
        vec![g0(X, 1), g2(Cx, 0, 1)],
        vec![g2(Cx, 0, 1), g0(X, 1)],
        false,
    ));

    // CX pairs sharing exactly a control or exactly a target commute.
    rules.push(rule(
        "cx_commute_shared_control",
        3,
        vec![g2(Cx, 0, 1), g2(Cx, 0, 2)],
        vec![g2(Cx, 0, 2), g2(Cx, 0, 1)],
        false,
    ));
    rules.push(rule(
        "cx_commute_shared_target",
        3,
        vec![g2(Cx, 0, 2), g2(Cx, 1, 2)],
        vec![g2(Cx, 1, 2), g2(Cx, 0, 2)],
        false,
    ));

    // Phase merges. Time order is left to right, so "u3 then u1" composes
    // the u1 matrix on the left, which lands the angle on phi.
    rules.push(rule(
        "u1_u1_merge",
        1,
        vec![u1v("a", 0), u1v("b", 0)],
        vec![SymGate::new(
            U1,
            vec![0],
            vec![AngleExpr::var("a").add(&AngleExpr::var("b"))],
        )],
        true,
    ));
    rules.push(rule(
        "u3_then_u1_merge",
        1,
        vec![u3v("t", "p", "l", 0), u1v("a", 0)],
        vec![SymGate::new(
            U3,
            vec![0],
            vec![
                AngleExpr::var("t"),
                AngleExpr::var("p").add(&AngleExpr::var("a")),
                AngleExpr::var("l"),
            ],
        )],
        true,
    ));
    rules.push(rule(
        "u1_then_u3_merge",
        1,
        vec![u1v("a", 0), u3v("t", "p", "l", 0)],
        vec![SymGate::new(
            U3,
            vec![0],
            vec![
                AngleExpr::var("t"),
                AngleExpr::var("p"),
                AngleExpr::var("l").add(&AngleExpr::var("a")),
            ],
        )],
        true,
    ));
    rules.push(rule(
        "u2_then_u1_merge",
        1,
        vec![u2v("p", "l", 0), u1v("a", 0)],
        vec![SymGate::new(
            U2,
            vec![0],
            vec![
                AngleExpr::var("p").add(&AngleExpr::var("a")),
                AngleExpr::var("l"),
            ],
        )],
        true,
    ));
    rules.push(rule(
        "u1_then_u2_merge",
        1,
        vec![u1v("a", 0), u2v("p", "l", 0)],
        vec![SymGate::new(
            U2,
            vec![0],
            vec![
                AngleExpr::var("p"),
                AngleExpr::var("l").add(&AngleExpr::var("a")),
            ],
        )],
        true,
    ));

    // Structure-changing identities, used as search moves in both
    // directions.
    rules.push(rule(
        "cx_direction_flip",
        2,
        vec![g2(Cx, 0, 1)],
        vec![g0(H, 0), g0(H, 1), g2(Cx, 1, 0), g0(H, 0), g0(H, 1)],
        false,
    ));
    rules.push(rule(
        "swap_decompose",
        2,
        vec![g2(Swap, 0, 1)],
        vec![g2(Cx, 0, 1), g2(Cx, 1, 0), g2(Cx, 0, 1)],
        false,
    ));

    // Phase-family canonicalization into u1. The rz form differs from u1
    // by a global phase only, which the ambient equivalence absorbs.
    rules.push(rule("t_to_u1", 1, vec![g0(T, 0)], vec![u1c(pi / 4.0, 0)], true));
    rules.push(rule("s_to_u1", 1, vec![g0(S, 0)], vec![u1c(pi / 2.0, 0)], true));
    rules.push(rule("z_to_u1", 1, vec![g0(Z, 0)], vec![u1c(pi, 0)], true));
    rules.push(rule(
        "rz_to_u1",
        1,
        vec![SymGate::new(Rz, vec![0], vec![AngleExpr::var("a")])],
        vec![u1v("a", 0)],
        true,
    ));

    // Y differs from Z-then-X by a global phase of i.
    rules.push(rule(
        "y_decompose",
        1,
        vec![g0(Y, 0)],
        vec![g0(Z, 0), g0(X, 0)],
        true,
    ));

    rules
}

/// Deliberately wrong rules. Certification must reject every one of
/// these; none may ever reach the prover.
pub fn mutated_rules() -> Vec<RewriteRule> {
    use GateKind::*;
    vec![
        // Drops one X instead of both.
        rule("xx_to_x", 1, vec![g0(X, 0), g0(X, 0)], vec![g0(X, 0)], true),
        // H*H is identity, not X.
        rule("hh_to_x", 1, vec![g0(H, 0), g0(H, 0)], vec![g0(X, 0)], true),
        // Opposite orientations do not cancel.
        rule(
            "cx_cancel_wrong_qubits",
            2,
            vec![g2(Cx, 0, 1), g2(Cx, 1, 0)],
            vec![],
            true,
        ),
        // Z commutes with the control, not the target.
        rule(
            "z_past_target",
            2,
            vec![g0(Z, 1), g2(Cx, 0, 1)],
            vec![g2(Cx, 0, 1), g0(Z, 1)],
            false,
        ),
        // Sign error in the merged angle; only random angles expose it.
        rule(
            "u1_merge_wrong",
            1,
            vec![u1v("a", 0), u1v("b", 0)],
            vec![SymGate::new(
                U1,
                vec![0],
                vec![AngleExpr::var("a").sub(&AngleExpr::var("b"))],
            )],
            true,
        ),
        // Forgets that the wires come out renamed.
        RewriteRule {
            name: "swap_projection_wrong".into(),
            arity: 2,
            lhs: vec![g2(Swap, 0, 1)],
            rhs: vec![],
            out_perm: None,
            oriented: true,
        },
        // T is a quarter of Z, S is half of it.
        rule("t_to_s", 1, vec![g0(T, 0)], vec![g0(S, 0)], true),
    ]
}

/// Look up a builtin rule by name.
pub fn builtin_rule(name: &str) -> Option<RewriteRule> {
    builtin_rules().into_iter().find(|r| r.name == name)
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::term::TermKind;

    #[test]
    fn catalog_has_unique_names_and_compiles() {
        let rules = builtin_rules();
        assert!(rules.len() >= 20, "catalog unexpectedly small: {}", rules.len());
        let mut names = BTreeSet::new();
        for r in &rules {
            assert!(names.insert(r.name.clone()), "duplicate rule name {}", r.name);
            let compiled = r.compile().unwrap();
            // Every qubit index stays below the declared arity.
            for g in r.lhs.iter().chain(r.rhs.iter()) {
                for &q in &g.qubits {
                    assert!(q < r.arity, "{}: qubit {q} out of arity {}", r.name, r.arity);
                }
            }
            if let Some(p) = &r.out_perm {
                let mut sorted = p.clone();
                sorted.sort_unstable();
                assert_eq!(sorted, (0..r.arity).collect::<Vec<_>>());
            }
            // A rule with no equations at all would be vacuous.
            assert!(
                !compiled.equations.is_empty() || r.lhs == r.rhs,
                "{} compiled to no equations",
                r.name
            );
        }
    }

    #[test]
    fn mutant_names_do_not_collide_with_builtins() {
        let builtin: BTreeSet<String> = builtin_rules().into_iter().map(|r| r.name).collect();
        let mutants = mutated_rules();
        assert!(mutants.len() >= 5);
        for m in &mutants {
            assert!(!builtin.contains(&m.name), "mutant {} shadows a builtin", m.name);
            m.compile().unwrap();
        }
    }

    /// The swap projection equation must read: first output of swap is the
    /// second input wire.
    #[test]
    fn swap_projection_equations() {
        let compiled = builtin_rule("swap_projection").unwrap().compile().unwrap();
        assert_eq!(compiled.equations.len(), 2);
        let eq0 = &compiled.equations[0];
        match eq0.lhs.kind() {
            TermKind::App2 { head, slot, .. } => {
                assert_eq!(head.kind, GateKind::Swap);
                assert_eq!(*slot, 1);
            }
            other => panic!("unexpected lhs {other:?}"),
        }
        match eq0.rhs.kind() {
            TermKind::Var(1) => {}
            other => panic!("expected var 1, got {other:?}"),
        }
    }

    /// Cancellation equations collapse a double application back to the
    /// bare variable of that slot.
    #[test]
    fn cx_cancel_equations() {
        let compiled = builtin_rule("cx_cancel").unwrap().compile().unwrap();
        assert_eq!(compiled.equations.len(), 2);
        for (i, eq) in compiled.equations.iter().enumerate() {
            match eq.rhs.kind() {
                TermKind::Var(v) => assert_eq!(*v as usize, i),
                other => panic!("expected variable, got {other:?}"),
            }
            assert_eq!(eq.lhs.depth(), 2);
        }
    }

    /// Identical slot terms are dropped: the control-commute rule has no
    /// equation for... actually every slot differs syntactically, which
    /// this test pins down so the prover knows it must work for all three.
    #[test]
    fn commute_rules_keep_all_slots() {
        let compiled = builtin_rule("cx_commute_shared_control")
            .unwrap()
            .compile()
            .unwrap();
        assert_eq!(compiled.equations.len(), 3);
    }

    #[test]
    fn instantiation_maps_qubits_and_angles() {
        let r = builtin_rule("u1_u1_merge").unwrap();
        let mut angles = HashMap::new();
        angles.insert("a".to_string(), 0.3);
        angles.insert("b".to_string(), 0.4);
        let lhs = instantiate_fragment(&r.lhs, &[5], &angles).unwrap();
        let rhs = instantiate_fragment(&r.rhs, &[5], &angles).unwrap();
        assert_eq!(lhs.len(), 2);
        assert_eq!(lhs[0].qubits, vec![5]);
        assert!((rhs[0].params[0] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn parametric_detection() {
        assert!(builtin_rule("u1_u1_merge").unwrap().is_parametric());
        assert!(!builtin_rule("cx_cancel").unwrap().is_parametric());
        assert!(!builtin_rule("t_to_u1").unwrap().is_parametric());
    }
}
