//! Dense matrix semantics: the numeric ground truth.
//!
//! A circuit over `n` qubits denotes a `2^n x 2^n` unitary. Composition is
//! fixed once here and everywhere else follows it:
//!
//! * list order is temporal order, so the denotation of `C1; C2` is
//!   `U(C2) * U(C1)` (the later fragment multiplies on the left, exactly as
//!   it acts later on a state vector);
//! * qubit 0 is the *most significant* bit of a basis index, so on two
//!   qubits the basis order is `|00>, |01>, |10>, |11>` with qubit 0 first.
//!
//! Circuits are compared up to global phase: the phase is read off at the
//! largest-magnitude entry of the reference matrix and divided out before
//! taking the max entrywise deviation. Barriers denote identity (they only
//! constrain reordering); measures have no unitary and make the oracle
//! refuse. Conditioned gates denote a *pair* of unitaries (condition taken
//! and untaken), and [`circuits_equiv`] compares both branches.
//!
//! The accumulator never forms embedded `2^n x 2^n` gate matrices: a gate
//! mixes two (or four) rows of the accumulator directly, costing `O(4^n)`
//! per gate instead of `O(8^n)` per general multiply.

use num_complex::Complex64;

use crate::circuit::{Circuit, Gate, GateKind, Layout};
use crate::error::{Error, Result};
use crate::tolerances::{EQUIV_TOL, GATE_UNITARITY_TOL, ORACLE_QUBIT_CAP};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

// ====================================================================
// The matrix type
// ====================================================================

/// Dense row-major complex matrix over an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl UnitaryMatrix {
    /// Identity on `n` qubits.
    pub fn identity(n: usize) -> UnitaryMatrix {
        let dim = 1usize << n;
        let mut data = vec![Complex64::ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::ONE;
        }
        UnitaryMatrix { n, data }
    }

    /// Build from rows of `(re, im)` pairs; rows must be square in count.
    pub fn from_rows(n: usize, rows: &[Vec<Complex64>]) -> UnitaryMatrix {
        let dim = 1usize << n;
        assert_eq!(rows.len(), dim, "row count must be 2^n");
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            assert_eq!(row.len(), dim, "column count must be 2^n");
            data.extend_from_slice(row);
        }
        UnitaryMatrix { n, data }
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    /// General matrix product `self * rhs`. Quadratic memory, cubic time;
    /// meant for tests and small registers, not the hot path.
    pub fn matmul(&self, rhs: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        if self.n != rhs.n {
            return Err(Error::DimensionMismatch { a: self.n, b: rhs.n });
        }
        let dim = self.dim();
        let mut out = vec![Complex64::ZERO; dim * dim];
        for i in 0..dim {
            for k in 0..dim {
                let a = self.data[i * dim + k];
                if a == Complex64::ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * dim..(k + 1) * dim];
                let out_row = &mut out[i * dim..(i + 1) * dim];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(UnitaryMatrix { n: self.n, data: out })
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> UnitaryMatrix {
        let dim = self.dim();
        let mut data = vec![Complex64::ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                data[c * dim + r] = self.data[r * dim + c].conj();
            }
        }
        UnitaryMatrix { n: self.n, data }
    }

    /// Largest entrywise deviation of `self * self^dagger` from identity.
    pub fn max_unitarity_deviation(&self) -> f64 {
        let gram = self.matmul(&self.dagger()).expect("same dims");
        let dim = self.dim();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in 0..dim {
                let expect = if r == c { Complex64::ONE } else { Complex64::ZERO };
                worst = worst.max((gram.data[r * dim + c] - expect).norm());
            }
        }
        worst
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &UnitaryMatrix) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { a: self.n, b: other.n });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Apply a one-qubit gate matrix `m` (row-major 2x2) on qubit `q`,
    /// multiplying on the left: `self <- embed(m, q) * self`.
    fn apply_1q(&mut self, m: &[Complex64; 4], q: usize) {
        let dim = self.dim();
        let mask = 1usize << (self.n - 1 - q);
        for r0 in 0..dim {
            if r0 & mask != 0 {
                continue;
            }
            let r1 = r0 | mask;
            for col in 0..dim {
                let a = self.data[r0 * dim + col];
                let b = self.data[r1 * dim + col];
                self.data[r0 * dim + col] = m[0] * a + m[1] * b;
                self.data[r1 * dim + col] = m[2] * a + m[3] * b;
            }
        }
    }

    /// Apply a two-qubit gate matrix `m` (row-major 4x4, first operand is
    /// the more significant local bit) on qubits `(a, b)`, on the left.
    fn apply_2q(&mut self, m: &[Complex64; 16], a: usize, b: usize) {
        let dim = self.dim();
        let mask_a = 1usize << (self.n - 1 - a);
        let mask_b = 1usize << (self.n - 1 - b);
        for base in 0..dim {
            if base & mask_a != 0 || base & mask_b != 0 {
                continue;
            }
            let rows = [base, base | mask_b, base | mask_a, base | mask_a | mask_b];
            for col in 0..dim {
                let old = [
                    self.data[rows[0] * dim + col],
                    self.data[rows[1] * dim + col],
                    self.data[rows[2] * dim + col],
                    self.data[rows[3] * dim + col],
                ];
                for (i, &row) in rows.iter().enumerate() {
                    let mut acc = Complex64::ZERO;
                    for (j, &o) in old.iter().enumerate() {
                        acc += m[i * 4 + j] * o;
                    }
                    self.data[row * dim + col] = acc;
                }
            }
        }
    }

    /// Left-multiply by one gate's embedded unitary.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        for &q in &gate.qubits {
            if q >= self.n {
                return Err(Error::QubitOutOfRange { index: q, nqreg: self.n });
            }
        }
        match gate.kind {
            GateKind::Barrier => Ok(()),
            GateKind::Measure => Err(Error::NonUnitaryGate { kind: GateKind::Measure }),
            GateKind::Cx | GateKind::Swap => {
                let m = gate_matrix_2q(gate.kind);
                self.apply_2q(&m, gate.qubits[0], gate.qubits[1]);
                Ok(())
            }
            _ => {
                let m = gate_matrix_1q(gate.kind, &gate.params);
                self.apply_1q(&m, gate.qubits[0]);
                Ok(())
            }
        }
    }

    /// `P * self` where `P` is the permutation matrix of `perm` (see
    /// [`permutation_matrix`]): rows are scattered through the permutation.
    pub fn permute_rows(&self, perm: &Layout) -> Result<UnitaryMatrix> {
        check_perm(perm, self.n)?;
        let dim = self.dim();
        let mut data = vec![Complex64::ZERO; dim * dim];
        for x in 0..dim {
            let y = scatter_index(perm, self.n, x);
            data[y * dim..(y + 1) * dim].copy_from_slice(&self.data[x * dim..(x + 1) * dim]);
        }
        Ok(UnitaryMatrix { n: self.n, data })
    }

    /// `P * self * P^dagger`: the unitary of the same circuit with every
    /// qubit `q` renamed to `perm[q]`. This is the relation a layout pass
    /// establishes (both the initial and final register are relabeled),
    /// whereas routing establishes the one-sided [`Self::permute_rows`]
    /// relation (registers aligned at the start, permuted only at the end).
    pub fn relabel(&self, perm: &Layout) -> Result<UnitaryMatrix> {
        check_perm(perm, self.n)?;
        let dim = self.dim();
        let mut data = vec![Complex64::ZERO; dim * dim];
        for x in 0..dim {
            let y = scatter_index(perm, self.n, x);
            for c in 0..dim {
                let yc = scatter_index(perm, self.n, c);
                data[y * dim + yc] = self.data[x * dim + c];
            }
        }
        Ok(UnitaryMatrix { n: self.n, data })
    }
}

fn check_perm(perm: &Layout, n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::BadLayout {
            msg: format!("permutation over {} qubits applied to {n}-qubit matrix", perm.len()),
        });
    }
    if !perm.fits(n) {
        return Err(Error::BadLayout {
            msg: format!("permutation targets exceed register of {n}"),
        });
    }
    Ok(())
}

/// Basis-index image under a qubit permutation: bit of qubit `q` in `x`
/// lands at qubit `perm[q]` of the result.
fn scatter_index(perm: &Layout, n: usize, x: usize) -> usize {
    let mut y = 0usize;
    for q in 0..n {
        let bit = (x >> (n - 1 - q)) & 1;
        y |= bit << (n - 1 - perm.get(q));
    }
    y
}

/// The permutation matrix `P` with `P |x> = |y>` where the bit of qubit `q`
/// in `x` appears at qubit `perm[q]` in `y`.
pub fn permutation_matrix(perm: &Layout, n: usize) -> Result<UnitaryMatrix> {
    check_perm(perm, n)?;
    let dim = 1usize << n;
    let mut data = vec![Complex64::ZERO; dim * dim];
    for x in 0..dim {
        let y = scatter_index(perm, n, x);
        data[y * dim + x] = Complex64::ONE;
    }
    Ok(UnitaryMatrix { n, data })
}

// ====================================================================
// Gate matrices
// ====================================================================

fn e_i(theta: f64) -> Complex64 {
    Complex64::new(theta.cos(), theta.sin())
}

fn gate_matrix_1q(kind: GateKind, params: &[f64]) -> [Complex64; 4] {
    let zero = Complex64::ZERO;
    let one = Complex64::ONE;
    let i = Complex64::I;
    match kind {
        GateKind::X => [zero, one, one, zero],
        GateKind::Y => [zero, -i, i, zero],
        GateKind::Z => [one, zero, zero, -one],
        GateKind::H => {
            let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
            [h, h, h, -h]
        }
        GateKind::T => [one, zero, zero, e_i(std::f64::consts::FRAC_PI_4)],
        GateKind::S => [one, zero, zero, i],
        GateKind::U1 => [one, zero, zero, e_i(params[0])],
        GateKind::Rz => {
            let l = params[0];
            [e_i(-l / 2.0), zero, zero, e_i(l / 2.0)]
        }
        GateKind::U2 => {
            let (phi, lambda) = (params[0], params[1]);
            let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
            [s, -s * e_i(lambda), s * e_i(phi), s * e_i(lambda + phi)]
        }
        GateKind::U3 => {
            let (theta, phi, lambda) = (params[0], params[1], params[2]);
            let (c, s) = (theta.cos(), theta.sin());
            [
                Complex64::new(c, 0.0),
                -e_i(lambda) * s,
                e_i(phi) * s,
                e_i(lambda + phi) * c,
            ]
        }
        _ => unreachable!("not a one-qubit unitary kind"),
    }
}

fn gate_matrix_2q(kind: GateKind) -> [Complex64; 16] {
    let zero = Complex64::ZERO;
    let one = Complex64::ONE;
    match kind {
        // Basis order |control target>: flips the target when control is 1.
        GateKind::Cx => [
            one, zero, zero, zero, //
            zero, one, zero, zero, //
            zero, zero, zero, one, //
            zero, zero, one, zero,
        ],
        GateKind::Swap => [
            one, zero, zero, zero, //
            zero, zero, one, zero, //
            zero, one, zero, zero, //
            zero, zero, zero, one,
        ],
        _ => unreachable!("not a two-qubit unitary kind"),
    }
}

/// Standalone matrix of one gate on its own operands (2x2 or 4x4, with the
/// first operand as the more significant local bit). Errors for barrier and
/// measure, which have no unitary.
///
/// The result is checked against [`GATE_UNITARITY_TOL`] before returning, so
/// a wrong angle convention or a typo in a basis entry fails loudly here
/// rather than corrupting comparisons downstream.
pub fn gate_matrix(gate: &Gate) -> Result<UnitaryMatrix> {
    let m = match gate.kind {
        GateKind::Barrier | GateKind::Measure => {
            return Err(Error::NonUnitaryGate { kind: gate.kind });
        }
        GateKind::Cx | GateKind::Swap => {
            let m = gate_matrix_2q(gate.kind);
            UnitaryMatrix { n: 2, data: m.to_vec() }
        }
        _ => {
            let m = gate_matrix_1q(gate.kind, &gate.params);
            UnitaryMatrix { n: 1, data: m.to_vec() }
        }
    };
    let dev = m.max_unitarity_deviation();
    debug_assert!(
        dev <= GATE_UNITARITY_TOL,
        "gate matrix for {:?} deviates from unitarity by {dev}",
        gate.kind
    );
    Ok(m)
}

// ====================================================================
// Circuit denotation
// ====================================================================

/// Unitary of a circuit with conditioned gates resolved one way: `taken`
/// applies every conditioned gate, `!taken` skips them all. Barriers are
/// identity; a measure makes this fail with [`Error::NonUnitaryGate`].
pub fn circuit_unitary_branch(c: &Circuit, taken: bool) -> Result<UnitaryMatrix> {
    if c.nqreg > ORACLE_QUBIT_CAP {
        return Err(Error::RegisterTooLarge { n: c.nqreg, cap: ORACLE_QUBIT_CAP });
    }
    let mut acc = UnitaryMatrix::identity(c.nqreg);
    for gate in &c.gates {
        if gate.conditioned && !taken {
            continue;
        }
        acc.apply_gate(gate)?;
    }
    Ok(acc)
}

/// Unitary of a measure-free circuit, treating conditioned gates as taken.
/// Use [`circuits_equiv`] when conditioned gates are present so both
/// branches get compared.
pub fn circuit_unitary(c: &Circuit) -> Result<UnitaryMatrix> {
    circuit_unitary_branch(c, true)
}

// ====================================================================
// Equivalence up to global phase / permutation
// ====================================================================

/// Global phase aligning `a` with `b`, read at `b`'s largest entry, plus
/// the residual deviation `max |a - phase*b|`.
pub fn phase_aligned_deviation(a: &UnitaryMatrix, b: &UnitaryMatrix) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch { a: a.n, b: b.n });
    }
    let mut pivot = 0usize;
    let mut best = 0.0f64;
    for (i, v) in b.data.iter().enumerate() {
        let mag = v.norm();
        if mag > best {
            best = mag;
            pivot = i;
        }
    }
    if best == 0.0 {
        // Degenerate reference (all zeros): fall back to a plain diff.
        return a.max_abs_diff(b);
    }
    let raw = a.data[pivot] / b.data[pivot];
    let phase = if raw.norm() == 0.0 { Complex64::ONE } else { raw / raw.norm() };
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - phase * y).norm())
        .fold(0.0, f64::max))
}

/// Equality of matrices up to one global phase factor.
pub fn equiv_up_to_phase(a: &UnitaryMatrix, b: &UnitaryMatrix, tol: f64) -> Result<bool> {
    Ok(phase_aligned_deviation(a, b)? <= tol)
}

/// Equality up to a final qubit permutation: `P_perm * a` against `b`, up
/// to phase. This is the contract a routing pass leaves behind: `a` is the
/// input circuit's unitary, `b` the routed output's, and `perm` says where
/// each program qubit ended up.
pub fn equiv_up_to_permutation(
    a: &UnitaryMatrix,
    b: &UnitaryMatrix,
    perm: &Layout,
    tol: f64,
) -> Result<bool> {
    let pa = a.permute_rows(perm)?;
    equiv_up_to_phase(&pa, b, tol)
}

/// Equivalence verdict plus the worst branch deviation, for reporting.
#[derive(Debug, Clone, Copy)]
pub struct EquivOutcome {
    pub equivalent: bool,
    pub deviation: f64,
}

fn branch_outcome(
    a: &Circuit,
    b: &Circuit,
    perm: Option<&Layout>,
    relabel: bool,
    tol: f64,
) -> Result<EquivOutcome> {
    if a.nqreg != b.nqreg {
        return Err(Error::DimensionMismatch { a: a.nqreg, b: b.nqreg });
    }
    // Compare both condition branches when any side is conditioned; one
    // branch otherwise. A correct transformation preserves both.
    let branches: &[bool] =
        if a.has_conditioned() || b.has_conditioned() { &[true, false] } else { &[true] };
    let mut worst = 0.0f64;
    for &taken in branches {
        let ua = circuit_unitary_branch(a, taken)?;
        let ub = circuit_unitary_branch(b, taken)?;
        let lhs = match perm {
            Some(p) if relabel => ua.relabel(p)?,
            Some(p) => ua.permute_rows(p)?,
            None => ua,
        };
        worst = worst.max(phase_aligned_deviation(&lhs, &ub)?);
    }
    Ok(EquivOutcome { equivalent: worst <= tol, deviation: worst })
}

/// Circuit equivalence up to global phase, branch-aware for conditioned
/// gates. Both circuits must be measure-free and share a register size.
pub fn circuits_equiv_outcome(a: &Circuit, b: &Circuit, tol: f64) -> Result<EquivOutcome> {
    branch_outcome(a, b, None, false, tol)
}

/// Convenience wrapper discarding the deviation.
pub fn circuits_equiv(a: &Circuit, b: &Circuit, tol: f64) -> Result<bool> {
    Ok(circuits_equiv_outcome(a, b, tol)?.equivalent)
}

/// Routing-style circuit equivalence: `P_perm * [[a]]` against `[[b]]`.
pub fn circuits_equiv_perm_outcome(
    a: &Circuit,
    b: &Circuit,
    perm: &Layout,
    tol: f64,
) -> Result<EquivOutcome> {
    branch_outcome(a, b, Some(perm), false, tol)
}

/// Layout-style circuit equivalence: `b` should be `a` with qubits renamed
/// through `perm`, i.e. `P * [[a]] * P^dagger` against `[[b]]`.
pub fn circuits_equiv_relabel_outcome(
    a: &Circuit,
    b: &Circuit,
    perm: &Layout,
    tol: f64,
) -> Result<EquivOutcome> {
    branch_outcome(a, b, Some(perm), true, tol)
}

/// Default-tolerance equivalence for quick checks.
pub fn circuits_equiv_default(a: &Circuit, b: &Circuit) -> Result<bool> {
    circuits_equiv(a, b, EQUIV_TOL)
}

// ====================================================================
// Tests
// ====================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn assert_close(a: Complex64, b: Complex64) {
        assert!((a - b).norm() < 1e-12, "{a} != {b}");
    }

    #[test]
    fn every_gate_matrix_is_unitary() {
        let gates = vec![
            Gate::x(0),
            Gate::y(0),
            Gate::z(0),
            Gate::h(0),
            Gate::t(0),
            Gate::s(0),
            Gate::cx(0, 1),
            Gate::swap(0, 1),
            Gate::rz(0.7, 0),
            Gate::u1(1.3, 0),
            Gate::u2(0.4, -1.1, 0),
            Gate::u3(2.2, 0.3, -0.8, 0),
        ];
        for g in gates {
            let m = gate_matrix(&g).unwrap();
            assert!(
                m.max_unitarity_deviation() <= GATE_UNITARITY_TOL,
                "{:?} not unitary",
                g.kind
            );
        }
    }

    #[test]
    fn barrier_and_measure_have_no_matrix() {
        assert!(matches!(
            gate_matrix(&Gate::barrier(vec![0])),
            Err(Error::NonUnitaryGate { .. })
        ));
        assert!(matches!(
            gate_matrix(&Gate::measure(0)),
            Err(Error::NonUnitaryGate { .. })
        ));
    }

    /// Qubit 0 is the most significant bit: X on qubit 0 of a 2-qubit
    /// register exchanges |00> with |10>, i.e. indices 0 and 2.
    #[test]
    fn qubit_zero_is_most_significant() {
        let c = Circuit::with_gates(2, vec![Gate::x(0)]).unwrap();
        let u = circuit_unitary(&c).unwrap();
        assert_close(u.get(2, 0), Complex64::ONE);
        assert_close(u.get(0, 2), Complex64::ONE);
        assert_close(u.get(1, 3), Complex64::ONE);
        assert_close(u.get(0, 0), Complex64::ZERO);
    }

    /// CX with control first: |10> -> |11>, |11> -> |10>, others fixed.
    #[test]
    fn cx_truth_table() {
        let c = Circuit::with_gates(2, vec![Gate::cx(0, 1)]).unwrap();
        let u = circuit_unitary(&c).unwrap();
        assert_close(u.get(0, 0), Complex64::ONE);
        assert_close(u.get(1, 1), Complex64::ONE);
        assert_close(u.get(3, 2), Complex64::ONE);
        assert_close(u.get(2, 3), Complex64::ONE);
        assert_close(u.get(2, 2), Complex64::ZERO);
    }

    /// The composition-order fixture: h(0); cx(0,1); cx(1,2) applied to
    /// |000> must give (|000> + |111>)/sqrt(2). Left-multiplication by each
    /// successive gate is what makes this come out; the reversed convention
    /// would entangle nothing.
    #[test]
    fn ghz_state_pins_composition_order() {
        let c = Circuit::with_gates(
            3,
            vec![Gate::h(0), Gate::cx(0, 1), Gate::cx(1, 2)],
        )
        .unwrap();
        let u = circuit_unitary(&c).unwrap();
        // Column 0 is the image of |000>.
        let amp = Complex64::new(FRAC_1_SQRT_2, 0.0);
        assert_close(u.get(0, 0), amp);
        assert_close(u.get(7, 0), amp);
        for row in 1..7 {
            assert_close(u.get(row, 0), Complex64::ZERO);
        }
    }

    /// u2 is exactly u3 at theta = pi/4 in this convention, because
    /// cos(pi/4) = sin(pi/4) = 1/sqrt(2); u1 is exactly u3(0,0,lambda).
    #[test]
    fn u_family_collapses() {
        let phi = 0.83;
        let lambda = -1.27;
        let u2 = gate_matrix(&Gate::u2(phi, lambda, 0)).unwrap();
        let u3 = gate_matrix(&Gate::u3(FRAC_PI_4, phi, lambda, 0)).unwrap();
        assert!(u2.max_abs_diff(&u3).unwrap() < 1e-15);

        let u1 = gate_matrix(&Gate::u1(lambda, 0)).unwrap();
        let u3d = gate_matrix(&Gate::u3(0.0, 0.0, lambda, 0)).unwrap();
        assert!(u1.max_abs_diff(&u3d).unwrap() < 1e-15);
    }

    /// T, S, Z are u1 at pi/4, pi/2, pi exactly; rz differs from u1 by a
    /// global phase only; y matches z-then-x up to phase.
    #[test]
    fn phase_family_identities() {
        for (gate, angle) in [
            (Gate::t(0), FRAC_PI_4),
            (Gate::s(0), FRAC_PI_2),
            (Gate::z(0), PI),
        ] {
            let a = gate_matrix(&gate).unwrap();
            let b = gate_matrix(&Gate::u1(angle, 0)).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
        }

        let rz = gate_matrix(&Gate::rz(0.9, 0)).unwrap();
        let u1 = gate_matrix(&Gate::u1(0.9, 0)).unwrap();
        assert!(equiv_up_to_phase(&rz, &u1, 1e-12).unwrap());
        assert!(rz.max_abs_diff(&u1).unwrap() > 0.1);

        let y = Circuit::with_gates(1, vec![Gate::y(0)]).unwrap();
        let zx = Circuit::with_gates(1, vec![Gate::z(0), Gate::x(0)]).unwrap();
        assert!(circuits_equiv(&y, &zx, 1e-12).unwrap());
    }

    /// Denotation is a homomorphism: splitting a circuit anywhere gives
    /// U(suffix) * U(prefix) = U(whole).
    #[test]
    fn composition_homomorphism() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(1..=4);
            let len = rng.random_range(0..=12);
            let c = crate::generators::random_unitary_circuit(&mut rng, n, len);
            let split = rng.random_range(0..=c.len());
            let pre = Circuit::with_gates(n, c.gates[..split].to_vec()).unwrap();
            let post = Circuit::with_gates(n, c.gates[split..].to_vec()).unwrap();
            let whole = circuit_unitary(&c).unwrap();
            let glued = circuit_unitary(&post)
                .unwrap()
                .matmul(&circuit_unitary(&pre).unwrap())
                .unwrap();
            assert!(whole.max_abs_diff(&glued).unwrap() < 1e-10);
        }
    }

    /// Circuit unitaries stay unitary after thousands of applications.
    #[test]
    fn accumulated_unitarity() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let c = crate::generators::random_unitary_circuit(&mut rng, 4, 500);
        let u = circuit_unitary(&c).unwrap();
        assert!(u.max_unitarity_deviation() < crate::tolerances::CIRCUIT_UNITARITY_TOL);
    }

    /// Swapping two qubits then reading through the matching permutation is
    /// the identity: the defining example for equiv_up_to_permutation.
    #[test]
    fn swap_equals_relabeling() {
        let sw = Circuit::with_gates(2, vec![Gate::swap(0, 1)]).unwrap();
        let id = Circuit::new(2);
        let perm = Layout::new(vec![1, 0]).unwrap();
        let usw = circuit_unitary(&sw).unwrap();
        let uid = circuit_unitary(&id).unwrap();
        assert!(equiv_up_to_permutation(&usw, &uid, &perm, 1e-12).unwrap());
        // And not without the permutation.
        assert!(!equiv_up_to_phase(&usw, &uid, 1e-9).unwrap());
    }

    /// permute_rows composes the way the routing invariant needs: the
    /// image of basis state x under P has x's qubit-q bit at perm[q].
    #[test]
    fn permutation_matrix_scatter() {
        let perm = Layout::new(vec![2, 0, 1]).unwrap();
        let p = permutation_matrix(&perm, 3).unwrap();
        // |100> (x0=1): bit of qubit 0 lands on qubit 2 -> |001>.
        assert_close(p.get(0b001, 0b100), Complex64::ONE);
        assert_close(p.get(0b100, 0b010), Complex64::ONE);
        assert!(p.max_unitarity_deviation() < 1e-12);
    }

    /// relabel: renaming qubits of cx(0,1) through 0->1, 1->0 gives
    /// exactly cx(1,0).
    #[test]
    fn relabel_is_qubit_renaming() {
        let a = circuit_unitary(&Circuit::with_gates(2, vec![Gate::cx(0, 1)]).unwrap()).unwrap();
        let b = circuit_unitary(&Circuit::with_gates(2, vec![Gate::cx(1, 0)]).unwrap()).unwrap();
        let perm = Layout::new(vec![1, 0]).unwrap();
        assert!(a.relabel(&perm).unwrap().max_abs_diff(&b).unwrap() < 1e-12);
    }

    /// Phase equivalence is reflexive, symmetric, and blind to a global
    /// phase we inject by hand.
    #[test]
    fn phase_equivalence_relation() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let c = crate::generators::random_unitary_circuit(&mut rng, 3, 20);
        let u = circuit_unitary(&c).unwrap();
        assert!(equiv_up_to_phase(&u, &u, 1e-12).unwrap());

        let phase = e_i(1.234);
        let mut shifted = u.clone();
        for v in &mut shifted.data {
            *v *= phase;
        }
        assert!(equiv_up_to_phase(&u, &shifted, 1e-12).unwrap());
        assert!(equiv_up_to_phase(&shifted, &u, 1e-12).unwrap());
    }

    /// Conditioned gates are compared on both branches: dropping the flag
    /// from an x gate is not an equivalence even though the taken branch
    /// matches.
    #[test]
    fn conditioned_gates_compare_both_branches() {
        let a = Circuit::with_gates(1, vec![Gate::x(0).conditioned()]).unwrap();
        let b = Circuit::with_gates(1, vec![Gate::x(0)]).unwrap();
        let out = circuits_equiv_outcome(&a, &b, 1e-9).unwrap();
        assert!(!out.equivalent);
        assert!(out.deviation > 0.5);
        assert!(circuits_equiv(&a, &a.clone(), 1e-12).unwrap());
    }

    #[test]
    fn oracle_caps_register_size() {
        let c = Circuit::new(ORACLE_QUBIT_CAP + 1);
        assert!(matches!(circuit_unitary(&c), Err(Error::RegisterTooLarge { .. })));
    }
}
