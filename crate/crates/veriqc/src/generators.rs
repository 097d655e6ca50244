//! Circuit generators: benchmark families and seeded random circuits.
//!
//! Everything here is deterministic given a seed, so differential suites
//! and reports can reproduce failures exactly. The benchmark families are
//! classical reversible circuits whose truth tables are known, which makes
//! them double as oracle fixtures: a GHZ preparation pins the composition
//! order, and the ripple-carry adder is checked gate-for-gate against
//! integer addition in the tests below.

use rand::Rng;

use crate::circuit::{Circuit, Gate, GateKind};
use std::f64::consts::{FRAC_PI_4, TAU};

// ====================================================================
// Fixed families
// ====================================================================

/// GHZ preparation: h on qubit 0, then a CX chain down the register.
pub fn ghz(n: usize) -> Circuit {
    assert!(n >= 1);
    let mut c = Circuit::new(n);
    c.push(Gate::h(0));
    for q in 1..n {
        c.push(Gate::cx(q - 1, q));
    }
    c
}

/// Bell-pair preparation on two qubits.
pub fn bell() -> Circuit {
    ghz(2)
}

/// Cat-state preparation: like [`ghz`] but fanned out from qubit 0, which
/// stresses routing differently (one hub instead of a chain).
pub fn cat(n: usize) -> Circuit {
    assert!(n >= 1);
    let mut c = Circuit::new(n);
    c.push(Gate::h(0));
    for q in 1..n {
        c.push(Gate::cx(0, q));
    }
    c
}

/// T-dagger as a u1 rotation; the decompositions below need it and the
/// gate set has no dedicated kind for it.
fn tdg(q: usize) -> Gate {
    Gate::u1(-FRAC_PI_4, q)
}

/// Standard 15-gate Toffoli decomposition over {h, t, t-dagger, cx}:
/// flips `t` when both `a` and `b` are set.
pub fn toffoli(a: usize, b: usize, t: usize) -> Vec<Gate> {
    vec![
        Gate::h(t),
        Gate::cx(b, t),
        tdg(t),
        Gate::cx(a, t),
        Gate::t(t),
        Gate::cx(b, t),
        tdg(t),
        Gate::cx(a, t),
        Gate::t(b),
        Gate::t(t),
        Gate::cx(a, b),
        Gate::h(t),
        Gate::t(a),
        tdg(b),
        Gate::cx(a, b),
    ]
}

fn maj(c: &mut Circuit, x: usize, y: usize, z: usize) {
    c.push(Gate::cx(z, y));
    c.push(Gate::cx(z, x));
    for g in toffoli(x, y, z) {
        c.push(g);
    }
}

fn uma(c: &mut Circuit, x: usize, y: usize, z: usize) {
    for g in toffoli(x, y, z) {
        c.push(g);
    }
    c.push(Gate::cx(z, x));
    c.push(Gate::cx(x, y));
}

/// Ripple-carry adder on `bits`-bit addends (majority/unmajority style):
/// computes `b <- a + b` with carry-in on qubit 0 and carry-out on the
/// last qubit. Register layout: `cin, a[0..bits], b[0..bits], cout`,
/// so the register size is `2*bits + 2`. Bit 0 is the least significant.
pub fn ripple_adder(bits: usize) -> Circuit {
    assert!(bits >= 1);
    let n = 2 * bits + 2;
    let mut c = Circuit::new(n);
    let a = |i: usize| 1 + i;
    let b = |i: usize| 1 + bits + i;
    let cout = 2 * bits + 1;

    maj(&mut c, 0, b(0), a(0));
    for i in 1..bits {
        maj(&mut c, a(i - 1), b(i), a(i));
    }
    c.push(Gate::cx(a(bits - 1), cout));
    for i in (1..bits).rev() {
        uma(&mut c, a(i - 1), b(i), a(i));
    }
    uma(&mut c, 0, b(0), a(0));
    c
}

/// Deterministic 16-qubit benchmark: repeated 7-bit adder rounds until at
/// least `target_gates` gates. A 7-bit adder fills exactly 16 qubits, so
/// the result exercises a whole device-sized register with real structure
/// (long CX chains and dense single-qubit runs), not noise.
pub fn benchmark_16q(target_gates: usize) -> Circuit {
    let round = ripple_adder(7);
    assert_eq!(round.nqreg, 16);
    let mut c = Circuit::new(16);
    while c.len() < target_gates {
        for g in &round.gates {
            c.push(g.clone());
        }
    }
    c
}

/// Routing instance with a strict lookahead plateau on the 16-node IBM
/// device: four CX gates whose endpoints sit so far apart that no single
/// swap lowers the summed path cost. Greedy lookahead routing with no
/// escape hatch walks in circles on this input.
pub fn ibm16_plateau_instance() -> Circuit {
    Circuit::with_gates(
        16,
        vec![Gate::cx(0, 8), Gate::cx(7, 15), Gate::cx(8, 7), Gate::cx(0, 15)],
    )
    .expect("static instance")
}

// ====================================================================
// Random circuits
// ====================================================================

/// Shape of a random circuit draw.
#[derive(Debug, Clone)]
pub struct RandomSpec {
    pub nqreg: usize,
    pub gates: usize,
    /// Kinds to draw from; defaults to all unitary kinds.
    pub kinds: Vec<GateKind>,
    /// Probability that an eligible gate carries the conditioned flag.
    pub conditioned_prob: f64,
    /// Probability of inserting a barrier instead of a listed kind.
    pub barrier_prob: f64,
}

impl RandomSpec {
    pub fn unitary(nqreg: usize, gates: usize) -> RandomSpec {
        RandomSpec {
            nqreg,
            gates,
            kinds: GateKind::all()
                .iter()
                .copied()
                .filter(|k| k.is_unitary())
                .collect(),
            conditioned_prob: 0.0,
            barrier_prob: 0.0,
        }
    }

    pub fn with_kinds(mut self, kinds: &[GateKind]) -> RandomSpec {
        self.kinds = kinds.to_vec();
        self
    }

    pub fn with_conditioned(mut self, prob: f64) -> RandomSpec {
        self.conditioned_prob = prob;
        self
    }

    pub fn with_barriers(mut self, prob: f64) -> RandomSpec {
        self.barrier_prob = prob;
        self
    }
}

fn random_angle(rng: &mut impl Rng) -> f64 {
    rng.random_range(-TAU..TAU)
}

/// One random gate over `nqreg` qubits from the listed kinds.
pub fn random_gate(rng: &mut impl Rng, nqreg: usize, kinds: &[GateKind]) -> Gate {
    loop {
        let kind = kinds[rng.random_range(0..kinds.len())];
        match kind.qubit_arity() {
            Some(2) if nqreg < 2 => continue,
            Some(2) => {
                let a = rng.random_range(0..nqreg);
                let mut b = rng.random_range(0..nqreg - 1);
                if b >= a {
                    b += 1;
                }
                return Gate::checked(kind, vec![a, b], vec![], false).expect("arity by construction");
            }
            _ => {
                let q = rng.random_range(0..nqreg);
                let params: Vec<f64> =
                    (0..kind.param_arity()).map(|_| random_angle(rng)).collect();
                return Gate::checked(kind, vec![q], params, false).expect("arity by construction");
            }
        }
    }
}

/// Random circuit per `spec`, deterministic in the RNG state.
pub fn random_circuit(rng: &mut impl Rng, spec: &RandomSpec) -> Circuit {
    let mut c = Circuit::new(spec.nqreg);
    for _ in 0..spec.gates {
        if spec.barrier_prob > 0.0 && rng.random::<f64>() < spec.barrier_prob {
            let count = rng.random_range(1..=spec.nqreg.max(1));
            let mut qubits: Vec<usize> = (0..spec.nqreg).collect();
            for i in (1..qubits.len()).rev() {
                qubits.swap(i, rng.random_range(0..=i));
            }
            qubits.truncate(count);
            qubits.sort_unstable();
            c.push(Gate::barrier(qubits));
            continue;
        }
        let mut g = random_gate(rng, spec.nqreg, &spec.kinds);
        if spec.conditioned_prob > 0.0 && rng.random::<f64>() < spec.conditioned_prob {
            g = g.conditioned();
        }
        c.push(g);
    }
    c
}

/// Random measure-free, unconditioned circuit: the workhorse for oracle
/// differential tests.
pub fn random_unitary_circuit(rng: &mut impl Rng, nqreg: usize, gates: usize) -> Circuit {
    random_circuit(rng, &RandomSpec::unitary(nqreg, gates))
}

/// Random routing workload: two-qubit heavy, which is what stresses swap
/// insertion. Roughly 60% CX, the rest single-qubit.
pub fn random_routing_circuit(rng: &mut impl Rng, nqreg: usize, gates: usize) -> Circuit {
    let mut c = Circuit::new(nqreg);
    for _ in 0..gates {
        if nqreg >= 2 && rng.random::<f64>() < 0.6 {
            let a = rng.random_range(0..nqreg);
            let mut b = rng.random_range(0..nqreg - 1);
            if b >= a {
                b += 1;
            }
            c.push(Gate::cx(a, b));
        } else {
            let q = rng.random_range(0..nqreg);
            match rng.random_range(0..3) {
                0 => c.push(Gate::h(q)),
                1 => c.push(Gate::t(q)),
                _ => c.push(Gate::u1(random_angle(rng), q)),
            }
        }
    }
    c
}

// ====================================================================
// Tests
// ====================================================================
