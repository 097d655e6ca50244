//! Rule certification against the dense matrix oracle.
//!
//! The prover treats every rewrite rule as ground truth, so nothing here
//! is optional: a single wrong rule would let it "prove" false
//! equivalences. Certification checks each rule two ways:
//!
//! * [`check_rule`]: the fragments themselves, on the rule's own qubits,
//!   over many random angle assignments;
//! * [`check_embedding`]: the fragments spliced into larger registers at
//!   random target wires, between random context circuits, which is the
//!   form the prover actually uses rules in. For renaming rules (those
//!   with an output permutation) this also exercises the relabeling of
//!   everything downstream, where a wrong permutation convention would
//!   hide from the local check.
//!
//! A rule passes only if every sampled instance agrees with the oracle.
//! The deliberately broken variants in the catalog must all fail here;
//! that negative direction is what keeps the certifier itself honest.
//!
//! [`certified_rules`] is the one gate to the prover: it runs the full
//! certification once per process and hands out compiled rules only when
//! every builtin passed.

use std::collections::HashMap;
use std::sync::OnceLock;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circuit::{Circuit, Gate, Layout};
use crate::error::{Error, Result};
use crate::matrix::{circuits_equiv_outcome, circuits_equiv_perm_outcome, EquivOutcome};
use crate::symbolic::{builtin_rules, instantiate_fragment, CompiledRule, RewriteRule};
use crate::tolerances::EQUIV_TOL;

/// Angle assignments sampled per parametric rule. Parameter-free rules
/// need exactly one: their instances are all identical.
pub const RULE_SAMPLES: usize = 100;

/// Random embeddings sampled per rule.
pub const EMBED_TRIALS: usize = 50;

/// Register-size band embeddings are tried on. Big enough that fragments
/// sit strictly inside a larger register with room for multi-qubit
/// context, small enough that the dense oracle stays fast.
const MIN_EMBED_QUBITS: usize = 3;
const MAX_EMBED_QUBITS: usize = 6;

/// Context circuits on each side of the embedded fragment draw up to this
/// many random gates.
const MAX_CONTEXT_GATES: usize = 8;

/// Seed used by [`certified_rules`]; fixed so the gate to the prover is
/// reproducible.
const CERTIFY_SEED: u64 = 0x0ce7_71f7;

// ====================================================================
// Reports
// ====================================================================

/// One concrete instance on which a rule disagreed with the oracle.
#[derive(Debug, Clone, Serialize)]
pub struct SoundnessCounterexample {
    pub nqreg: usize,
    /// Physical wire chosen for each rule-local qubit.
    pub targets: Vec<usize>,
    pub angles: Vec<(String, f64)>,
    /// Context before and after the fragment (empty for local checks).
    pub pre: Vec<Gate>,
    pub post: Vec<Gate>,
    pub deviation: f64,
}

/// Outcome of certifying one rule through one of the two checks.
#[derive(Debug, Clone, Serialize)]
pub struct SoundnessReport {
    pub rule: String,
    pub trials: usize,
    /// Worst oracle deviation over all sampled instances, including any
    /// failing one.
    pub worst_deviation: f64,
    pub counterexample: Option<SoundnessCounterexample>,
}

impl SoundnessReport {
    pub fn is_sound(&self) -> bool {
        self.counterexample.is_none()
    }
}

// ====================================================================
// Shared instance machinery
// ====================================================================

fn random_angles(rule: &RewriteRule, rng: &mut ChaCha8Rng) -> HashMap<String, f64> {
    rule.angle_vars()
        .into_iter()
        .map(|v| (v, rng.random_range(-std::f64::consts::PI..=std::f64::consts::PI)))
        .collect()
}

/// Gates usable as random context around an embedded fragment. All
/// unconditioned and unitary; two-qubit gates only when the register has
/// room.
fn random_context_gate(rng: &mut ChaCha8Rng, nqreg: usize) -> Gate {
    let angle = |rng: &mut ChaCha8Rng| {
        rng.random_range(-std::f64::consts::PI..=std::f64::consts::PI)
    };
    let q = rng.random_range(0..nqreg);
    let two_q_ok = nqreg >= 2;
    match rng.random_range(0..if two_q_ok { 10 } else { 8 }) {
        0 => Gate::h(q),
        1 => Gate::x(q),
        2 => Gate::z(q),
        3 => Gate::t(q),
        4 => Gate::s(q),
        5 => Gate::u1(angle(rng), q),
        6 => Gate::u2(angle(rng), angle(rng), q),
        7 => Gate::u3(angle(rng), angle(rng), angle(rng), q),
        pick => {
            let mut other = rng.random_range(0..nqreg - 1);
            if other >= q {
                other += 1;
            }
            if pick == 8 {
                Gate::cx(q, other)
            } else {
                Gate::swap(q, other)
            }
        }
    }
}

fn random_context(rng: &mut ChaCha8Rng, nqreg: usize) -> Vec<Gate> {
    let len = rng.random_range(0..=MAX_CONTEXT_GATES);
    (0..len).map(|_| random_context_gate(rng, nqreg)).collect()
}

/// Rename gate wires through a register-wide permutation.
fn relabel_gates(gates: &[Gate], perm: &[usize]) -> Vec<Gate> {
    gates
        .iter()
        .map(|g| {
            let mut out = g.clone();
            out.qubits = g.qubits.iter().map(|&q| perm[q]).collect();
            out
        })
        .collect()
}

/// Compare one instantiated instance against the oracle.
///
/// For plain rules both sides must denote the same unitary. For renaming
/// rules with output permutation `pi`, left output wire `targets[i]`
/// carries right output wire `targets[pi(i)]`, so the right-side circuit
/// is compared through the register-wide wire permutation and everything
/// *after* the fragment on the right side must already be relabeled by the
/// caller.
fn instance_outcome(
    rule: &RewriteRule,
    lhs: &Circuit,
    rhs: &Circuit,
    targets: &[usize],
) -> Result<EquivOutcome> {
    match &rule.out_perm {
        None => circuits_equiv_outcome(lhs, rhs, EQUIV_TOL),
        Some(pi) => {
            let mut full: Vec<usize> = (0..lhs.nqreg).collect();
            for (i, &p) in pi.iter().enumerate() {
                full[targets[i]] = targets[p];
            }
            circuits_equiv_perm_outcome(rhs, lhs, &Layout::new(full)?, EQUIV_TOL)
        }
    }
}

fn sample_count(rule: &RewriteRule, requested: usize) -> usize {
    if rule.is_parametric() {
        requested.max(1)
    } else {
        1
    }
}

// ====================================================================
// The two checks
// ====================================================================

/// Certify a rule's fragments on their own register: instantiate both
/// sides on wires `0..arity` under random angles and ask the oracle.
pub fn check_rule(rule: &RewriteRule, samples: usize, seed: u64) -> Result<SoundnessReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51de_ca11);
    let targets: Vec<usize> = (0..rule.arity).collect();
    let draws = sample_count(rule, samples);
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let angles = random_angles(rule, &mut rng);
        let lhs = Circuit::with_gates(
            rule.arity,
            instantiate_fragment(&rule.lhs, &targets, &angles)?,
        )?;
        let rhs = Circuit::with_gates(
            rule.arity,
            instantiate_fragment(&rule.rhs, &targets, &angles)?,
        )?;
        let outcome = instance_outcome(rule, &lhs, &rhs, &targets)?;
        worst = worst.max(outcome.deviation);
        if !outcome.equivalent {
            return Ok(SoundnessReport {
                rule: rule.name.clone(),
                trials: draws,
                worst_deviation: worst,
                counterexample: Some(SoundnessCounterexample {
                    nqreg: rule.arity,
                    targets,
                    angles: angles.into_iter().collect(),
                    pre: Vec::new(),
                    post: Vec::new(),
                    deviation: outcome.deviation,
                }),
            });
        }
    }
    Ok(SoundnessReport {
        rule: rule.name.clone(),
        trials: draws,
        worst_deviation: worst,
        counterexample: None,
    })
}

/// Certify a rule as the prover uses it: spliced into a larger register at
/// random wires, with random circuits before and after.
///
/// For renaming rules the post-context on the right side acts on the
/// renamed wires (a gate reading left wire `targets[i]` reads right wire
/// `targets[pi(i)]`), exactly mirroring how the prover rewrites everything
/// downstream of such a rule.
pub fn check_embedding(rule: &RewriteRule, trials: usize, seed: u64) -> Result<SoundnessReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe3be_dd1d);
    let mut worst = 0.0f64;
    for _ in 0..trials.max(1) {
        let floor = rule.arity.max(MIN_EMBED_QUBITS);
        let nqreg = rng.random_range(floor..=MAX_EMBED_QUBITS);
        let mut wires: Vec<usize> = (0..nqreg).collect();
        wires.shuffle(&mut rng);
        let targets: Vec<usize> = wires[..rule.arity].to_vec();
        let angles = random_angles(rule, &mut rng);
        let pre = random_context(&mut rng, nqreg);
        let post = random_context(&mut rng, nqreg);

        let mut lhs_gates = pre.clone();
        lhs_gates.extend(instantiate_fragment(&rule.lhs, &targets, &angles)?);
        lhs_gates.extend(post.iter().cloned());
        let lhs = Circuit::with_gates(nqreg, lhs_gates)?;

        let mut rhs_gates = pre.clone();
        rhs_gates.extend(instantiate_fragment(&rule.rhs, &targets, &angles)?);
        match &rule.out_perm {
            None => rhs_gates.extend(post.iter().cloned()),
            Some(pi) => {
                let mut full: Vec<usize> = (0..nqreg).collect();
                for (i, &p) in pi.iter().enumerate() {
                    full[targets[i]] = targets[p];
                }
                rhs_gates.extend(relabel_gates(&post, &full));
            }
        }
        let rhs = Circuit::with_gates(nqreg, rhs_gates)?;

        let outcome = instance_outcome(rule, &lhs, &rhs, &targets)?;
        worst = worst.max(outcome.deviation);
        if !outcome.equivalent {
            return Ok(SoundnessReport {
                rule: rule.name.clone(),
                trials: trials.max(1),
                worst_deviation: worst,
                counterexample: Some(SoundnessCounterexample {
                    nqreg,
                    targets,
                    angles: angles.into_iter().collect(),
                    pre,
                    post,
                    deviation: outcome.deviation,
                }),
            });
        }
    }
    Ok(SoundnessReport {
        rule: rule.name.clone(),
        trials: trials.max(1),
        worst_deviation: worst,
        counterexample: None,
    })
}

/// Run both checks on one rule and keep the first failure.
pub fn certify_rule(rule: &RewriteRule, seed: u64) -> Result<SoundnessReport> {
    let local = check_rule(rule, RULE_SAMPLES, seed)?;
    if !local.is_sound() {
        return Ok(local);
    }
    let embedded = check_embedding(rule, EMBED_TRIALS, seed)?;
    Ok(SoundnessReport {
        rule: rule.name.clone(),
        trials: local.trials + embedded.trials,
        worst_deviation: local.worst_deviation.max(embedded.worst_deviation),
        counterexample: embedded.counterexample,
    })
}

// ====================================================================
// The gate to the prover
// ====================================================================

fn certify_all() -> std::result::Result<Vec<CompiledRule>, String> {
    let mut compiled = Vec::new();
    for rule in builtin_rules() {
        let report = certify_rule(&rule, CERTIFY_SEED).map_err(|e| e.to_string())?;
        if let Some(cx) = &report.counterexample {
            return Err(format!(
                "rule {} failed certification (deviation {:.3e} on {} qubits)",
                report.rule, cx.deviation, cx.nqreg
            ));
        }
        compiled.push(rule.compile().map_err(|e| e.to_string())?);
    }
    Ok(compiled)
}

/// The certified catalog, compiled for the prover. Certification runs on
/// first use and is cached for the process; a failure poisons every later
/// call, because a prover with a bad rule must never run.
pub fn certified_rules() -> Result<&'static [CompiledRule]> {
    static CERTIFIED: OnceLock<std::result::Result<Vec<CompiledRule>, String>> = OnceLock::new();
    match CERTIFIED.get_or_init(certify_all) {
        Ok(rules) => Ok(rules.as_slice()),
        Err(msg) => Err(Error::SolverFailed { msg: format!("rule certification failed: {msg}") }),
    }
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::mutated_rules;

    /// The whole shipped catalog certifies, locally and embedded. This is
    /// the test that licenses the prover to trust the rules.
    #[test]
    fn every_builtin_rule_certifies() {
        for rule in builtin_rules() {
            let report = certify_rule(&rule, 7).unwrap();
            assert!(
                report.is_sound(),
                "rule {} failed: {:?}",
                rule.name,
                report.counterexample
            );
            assert!(
                report.worst_deviation < EQUIV_TOL,
                "rule {} deviation {}",
                rule.name,
                report.worst_deviation
            );
        }
    }

    /// Every deliberately broken rule is rejected, and already by the
    /// local check: these mutants are wrong on their own wires.
    #[test]
    fn every_mutant_is_rejected() {
        let mutants = mutated_rules();
        assert_eq!(mutants.len(), 7);
        for rule in &mutants {
            let report = check_rule(rule, RULE_SAMPLES, 7).unwrap();
            assert!(
                !report.is_sound(),
                "mutant {} slipped through the local check",
                rule.name
            );
            let cx = report.counterexample.unwrap();
            assert!(cx.deviation > EQUIV_TOL, "counterexample must carry its deviation");
            // The embedded check rejects them too.
            let report = check_embedding(rule, EMBED_TRIALS, 7).unwrap();
            assert!(
                !report.is_sound(),
                "mutant {} slipped through the embedding check",
                rule.name
            );
        }
    }

    /// The angle-sign mutant is only wrong for generic angles, so the
    /// sampler must actually vary them.
    #[test]
    fn parametric_mutant_needs_angle_sampling() {
        let mutant = mutated_rules()
            .into_iter()
            .find(|r| r.name == "u1_merge_wrong")
            .unwrap();
        let report = check_rule(&mutant, RULE_SAMPLES, 3).unwrap();
        let cx = report.counterexample.expect("sign error must be caught");
        // The witness records the angles that exposed it.
        assert_eq!(cx.angles.len(), 2);
    }

    /// Renaming soundness: the swap-projection mutant that forgets the
    /// output permutation is exactly the renaming bug, caught locally;
    /// the correct rule passes the embedded check, which exercises the
    /// downstream relabeling path.
    #[test]
    fn renaming_convention_is_enforced() {
        let wrong = mutated_rules()
            .into_iter()
            .find(|r| r.name == "swap_projection_wrong")
            .unwrap();
        assert!(!check_rule(&wrong, 1, 5).unwrap().is_sound());

        let right = builtin_rules()
            .into_iter()
            .find(|r| r.name == "swap_projection")
            .unwrap();
        assert!(check_rule(&right, 1, 5).unwrap().is_sound());
        assert!(check_embedding(&right, 40, 5).unwrap().is_sound());
    }

    /// Parameter-free rules take one sample; parametric ones take many.
    #[test]
    fn sampling_effort_follows_parametricity() {
        let fixed = builtin_rules().into_iter().find(|r| r.name == "cx_cancel").unwrap();
        assert_eq!(check_rule(&fixed, RULE_SAMPLES, 1).unwrap().trials, 1);
        let parametric =
            builtin_rules().into_iter().find(|r| r.name == "u1_u1_merge").unwrap();
        assert_eq!(
            check_rule(&parametric, RULE_SAMPLES, 1).unwrap().trials,
            RULE_SAMPLES
        );
    }

    #[test]
    fn certified_rules_load_and_cache() {
        let rules = certified_rules().unwrap();
        assert_eq!(rules.len(), builtin_rules().len());
        // Second call returns the same cached slice.
        let again = certified_rules().unwrap();
        assert_eq!(rules.len(), again.len());
        assert!(std::ptr::eq(rules.as_ptr(), again.as_ptr()));
    }
}
