//! Dense state-vector reference used to check everything else.
//!
//! Gates are applied straight from their definitions. Nothing here calls into
//! the stabilizer or decomposition code, so agreement between the two is
//! meaningful. Basis index bit `n - 1 - q` holds qubit `q`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use thiserror::Error;

use crate::decomp::DecompTerm;
use crate::ir::{validate, Circuit, Gate, Predicate, QueryFn, Register, Unitary};
use crate::stab::{CliffordKind, CliffordOp};

pub const DEFAULT_CAP: usize = 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReferenceError {
    #[error("{n} qubits exceeds the dense cap of {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("basis string has {got} bits, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid circuit: {0}")]
    Invalid(String),
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    pub n: usize,
    pub amps: Vec<Complex64>,
}

impl DenseState {
    pub fn zero_state(n: usize, cap: usize) -> Result<Self, ReferenceError> {
        if n > cap {
            return Err(ReferenceError::CapExceeded { n, cap });
        }
        let mut amps = vec![zero(); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(DenseState { n, amps })
    }

    fn mask(&self, q: usize) -> usize {
        1 << (self.n - 1 - q)
    }

    fn bit(&self, index: usize, q: usize) -> bool {
        index & self.mask(q) != 0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn index_of(bits: &[bool]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn amplitude(&self, bits: &[bool]) -> Result<Complex64, ReferenceError> {
        if bits.len() != self.n {
            return Err(ReferenceError::LengthMismatch { expected: self.n, got: bits.len() });
        }
        Ok(self.amps[Self::index_of(bits)])
    }

    /// Appends `extra` qubits in `|0⟩` after the existing ones.
    pub fn extended(&self, extra: usize, cap: usize) -> Result<DenseState, ReferenceError> {
        let n = self.n + extra;
        if n > cap {
            return Err(ReferenceError::CapExceeded { n, cap });
        }
        let mut amps = vec![zero(); 1 << n];
        for (i, &a) in self.amps.iter().enumerate() {
            amps[i << extra] = a;
        }
        Ok(DenseState { n, amps })
    }

    /// Replaces the `|0…0⟩` factor on `qubits` by `local`, whose qubit `i` maps to `qubits[i]`.
    /// Components where `qubits` are not all zero are discarded.
    pub fn load_local(&mut self, qubits: &[usize], local: &DenseState) {
        let masks: Vec<usize> = qubits.iter().map(|&q| self.mask(q)).collect();
        let all: usize = masks.iter().sum();
        let mut out = vec![zero(); self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            if i & all != 0 || a == zero() {
                continue;
            }
            for (l, &m) in local.amps.iter().enumerate() {
                let j = masks
                    .iter()
                    .enumerate()
                    .filter(|(pos, _)| (l >> (local.n - 1 - pos)) & 1 == 1)
                    .fold(i, |acc, (_, &mask)| acc | mask);
                out[j] += a * m;
            }
        }
        self.amps = out;
    }

    /// Applies the 2×2 matrix `u` to `target` on every basis state where `cond` holds.
    fn controlled_matrix(&mut self, target: usize, u: &Unitary, cond: impl Fn(usize) -> bool) {
        let m = self.mask(target);
        for i in 0..self.amps.len() {
            if i & m == 0 && cond(i) {
                let (a, b) = (self.amps[i], self.amps[i | m]);
                self.amps[i] = u.0[0] * a + u.0[1] * b;
                self.amps[i | m] = u.0[2] * a + u.0[3] * b;
            }
        }
    }

    fn phase_where(&mut self, phase: Complex64, cond: impl Fn(usize) -> bool) {
        for (i, a) in self.amps.iter_mut().enumerate() {
            if cond(i) {
                *a *= phase;
            }
        }
    }

    pub fn apply_clifford(&mut self, op: &CliffordOp) {
        let [a, b] = op.qubits;
        let ma = self.mask(a);
        let r = FRAC_1_SQRT_2;
        let c = |re, im| Complex64::new(re, im);
        match op.kind {
            CliffordKind::H => self.controlled_matrix(a, &Unitary([c(r, 0.0), c(r, 0.0), c(r, 0.0), c(-r, 0.0)]), |_| true),
            CliffordKind::X => self.controlled_matrix(a, &Unitary::x(), |_| true),
            CliffordKind::S => self.phase_where(c(0.0, 1.0), |i| i & ma != 0),
            CliffordKind::Sdg => self.phase_where(c(0.0, -1.0), |i| i & ma != 0),
            CliffordKind::Z => self.phase_where(c(-1.0, 0.0), |i| i & ma != 0),
            CliffordKind::CX => self.controlled_matrix(b, &Unitary::x(), |i| i & ma != 0),
            CliffordKind::CZ => {
                let mb = self.mask(b);
                self.phase_where(c(-1.0, 0.0), |i| i & ma != 0 && i & mb != 0)
            }
        }
    }

    pub fn project(&mut self, qubit: usize, outcome: bool) {
        let m = self.mask(qubit);
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & m != 0) != outcome {
                *a = zero();
            }
        }
    }

    fn value(&self, index: usize, reg: &Register) -> u128 {
        reg.qubits.iter().fold(0u128, |acc, &q| (acc << 1) | self.bit(index, q) as u128)
    }

    fn holds(&self, index: usize, pred: &Predicate) -> bool {
        eval_predicate(pred, &|q| self.bit(index, q))
    }

    /// `|x, y⟩ → |x, y ⊕ g(x)⟩` on basis states where `cond` holds.
    fn xor_query(&mut self, input: &Register, output: &Register, func: &QueryFn, cond: impl Fn(usize) -> bool) {
        let ell = output.width();
        let mut out = vec![zero(); self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            if a == zero() {
                continue;
            }
            let mut j = i;
            if cond(i) {
                let g = query_value(func, self.value(i, input), ell);
                for (pos, &q) in output.qubits.iter().enumerate() {
                    if (g >> (ell - 1 - pos)) & 1 == 1 {
                        j ^= self.mask(q);
                    }
                }
            }
            out[j] += a;
        }
        self.amps = out;
    }

    pub fn apply_gate(&mut self, gate: &Gate) {
        match gate {
            Gate::Clifford(op) => self.apply_clifford(op),
            Gate::Rz { theta, qubit } => {
                let m = self.mask(*qubit);
                self.phase_where(Complex64::from_polar(1.0, *theta), |i| i & m != 0)
            }
            Gate::T(q) => {
                let m = self.mask(*q);
                self.phase_where(Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4), |i| i & m != 0)
            }
            Gate::Mcx { controls, target } => self.mcu(controls, *target, &Unitary::x()),
            Gate::Mcu { controls, target, u } => self.mcu(controls, *target, u),
            Gate::OracleRz { pred, theta } => {
                let hits: Vec<bool> = (0..self.amps.len()).map(|i| self.holds(i, pred)).collect();
                self.phase_where(Complex64::from_polar(1.0, *theta), |i| hits[i])
            }
            Gate::OracleX { pred, target } => self.oracle_u(pred, *target, &Unitary::x()),
            Gate::OracleRx { pred, theta, target } => {
                let h = Unitary::h();
                let rx = h.mul(&Unitary::phase(*theta)).mul(&h);
                self.oracle_u(pred, *target, &rx)
            }
            Gate::OracleU { pred, target, u } => self.oracle_u(pred, *target, u),
            Gate::Query { input, output, func } => self.xor_query(input, output, func, |_| true),
            Gate::CondQuery { pred, input, output, func } => {
                let hits: Vec<bool> = (0..self.amps.len()).map(|i| self.holds(i, pred)).collect();
                self.xor_query(input, output, func, |i| hits[i])
            }
            Gate::Postselect { qubit, outcome } => self.project(*qubit, *outcome),
        }
    }

    fn mcu(&mut self, controls: &[usize], target: usize, u: &Unitary) {
        let cm: usize = controls.iter().map(|&q| self.mask(q)).sum();
        self.controlled_matrix(target, u, |i| i & cm == cm)
    }

    fn oracle_u(&mut self, pred: &Predicate, target: usize, u: &Unitary) {
        // The predicate never reads the target, so evaluate on the target-0 index.
        let hits: Vec<bool> = (0..self.amps.len()).map(|i| self.holds(i, pred)).collect();
        self.controlled_matrix(target, u, |i| hits[i])
    }
}

fn query_value(func: &QueryFn, x: u128, ell: usize) -> u128 {
    let mask = if ell >= 128 { u128::MAX } else { (1u128 << ell) - 1 };
    match func {
        QueryFn::Increment => x.wrapping_add(1) & mask,
        QueryFn::Table(t) => t
            .rows
            .iter()
            .find(|&&r| (r >> ell) as u128 == x)
            .map(|&r| r as u128 & mask)
            .unwrap_or(0),
    }
}

/// Truth value of `pred` with qubit `q` set to `bit(q)`.
pub fn eval_predicate(pred: &Predicate, bit: &dyn Fn(usize) -> bool) -> bool {
    let value = |r: &Register| r.qubits.iter().fold(0u128, |acc, &q| (acc << 1) | bit(q) as u128);
    match pred {
        Predicate::True => true,
        Predicate::False => false,
        Predicate::EqVars(a, b) => value(a) == value(b),
        Predicate::EqConst(a, c) => a.qubits.iter().zip(c).all(|(&q, &v)| bit(q) == v),
        Predicate::Gt(a, b) => value(a) > value(b),
        Predicate::Inc(a, b) => {
            let k = a.width();
            let mask = if k >= 128 { u128::MAX } else { (1u128 << k) - 1 };
            value(a).wrapping_add(1) & mask == value(b)
        }
        Predicate::TruthTable { regs, table } => {
            let row = regs.iter().flat_map(|r| &r.qubits).fold(0u64, |acc, &q| (acc << 1) | bit(q) as u64);
            table.rows.contains(&row)
        }
        Predicate::Not(p) => !eval_predicate(p, bit),
        Predicate::And(ps) => ps.iter().all(|p| eval_predicate(p, bit)),
        Predicate::Or(ps) => ps.iter().any(|p| eval_predicate(p, bit)),
    }
}

/// Final state `C|0^n⟩`, projections left unnormalized.
pub fn dense_run(circuit: &Circuit, cap: usize) -> Result<DenseState, ReferenceError> {
    let diags = validate(circuit);
    if let Some(d) = diags.first() {
        return Err(ReferenceError::Invalid(d.to_string()));
    }
    let mut st = DenseState::zero_state(circuit.num_qubits, cap)?;
    for gate in &circuit.gates {
        st.apply_gate(gate);
    }
    Ok(st)
}

/// `⟨x|C|0^n⟩` with the default cap.
pub fn dense_simulate(circuit: &Circuit, x: &[bool]) -> Result<Complex64, ReferenceError> {
    dense_run(circuit, DEFAULT_CAP)?.amplitude(x)
}

/// `Σ_{x : φ(x)} |x⟩` over the predicate's distinct qubits in order of first appearance.
pub fn dense_effectual(pred: &Predicate) -> Result<DenseState, ReferenceError> {
    let vars = pred.distinct_qubits();
    let n = vars.len();
    if n > DEFAULT_CAP {
        return Err(ReferenceError::CapExceeded { n, cap: DEFAULT_CAP });
    }
    let amps = (0..1usize << n)
        .map(|i| {
            let bit = |q: usize| {
                let pos = vars.iter().position(|&v| v == q).expect("predicate qubit");
                (i >> (n - 1 - pos)) & 1 == 1
            };
            if eval_predicate(pred, &bit) {
                Complex64::new(1.0, 0.0)
            } else {
                zero()
            }
        })
        .collect();
    Ok(DenseState { n, amps })
}

pub fn model_count(pred: &Predicate) -> Result<u128, ReferenceError> {
    Ok(dense_effectual(pred)?.amps.iter().filter(|a| a.re != 0.0).count() as u128)
}

/// `Σ_i w_i · prep_i|0^arity⟩`.
pub fn dense_of_decomp(arity: usize, terms: &[DecompTerm]) -> Result<DenseState, ReferenceError> {
    let mut out = DenseState { n: arity, amps: vec![zero(); 1 << arity] };
    if arity > DEFAULT_CAP {
        return Err(ReferenceError::CapExceeded { n: arity, cap: DEFAULT_CAP });
    }
    for t in terms {
        let mut st = DenseState::zero_state(arity, DEFAULT_CAP)?;
        for op in &t.prep {
            st.apply_clifford(op);
        }
        for (o, a) in out.amps.iter_mut().zip(&st.amps) {
            *o += t.weight * a;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::TruthTable;
    use std::f64::consts::PI;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn bell() {
        let mut c = Circuit::new(2);
        c.clifford(CliffordOp::h(0));
        c.clifford(CliffordOp::cx(0, 1));
        let a = dense_simulate(&c, &[true, true]).unwrap();
        assert!(close(a, Complex64::new(FRAC_1_SQRT_2, 0.0)));
    }

    #[test]
    fn oracle_rz_flips_all_ones_branch() {
        let k = 3;
        let mut c = Circuit::new(k + 1);
        let x = c.add_register(Register::range("x", 0, k - 1));
        let f = c.add_register(Register::range("f", k, k));
        for q in 0..k {
            c.clifford(CliffordOp::h(q));
        }
        c.clifford(CliffordOp::x(k));
        c.push(Gate::OracleRz {
            pred: Predicate::And(vec![Predicate::eq_const(x, 7), Predicate::eq_const(f, 1)]),
            theta: PI,
        });
        let st = dense_run(&c, DEFAULT_CAP).unwrap();
        let amp = 2f64.powf(-1.5);
        assert!(close(st.amps[0b1111], Complex64::new(-amp, 0.0)));
        assert!(close(st.amps[0b0111], Complex64::new(amp, 0.0)));
        assert!(close(st.amps[0b0001], Complex64::new(amp, 0.0)));
    }

    #[test]
    fn query_increment() {
        let mut c = Circuit::new(6);
        let x = c.add_register(Register::range("x", 0, 2));
        let y = c.add_register(Register::range("y", 3, 5));
        for xv in 0..8usize {
            let mut c = c.clone();
            for q in 0..3 {
                if (xv >> (2 - q)) & 1 == 1 {
                    c.clifford(CliffordOp::x(q));
                }
            }
            c.push(Gate::Query { input: x.clone(), output: y.clone(), func: QueryFn::Increment });
            let st = dense_run(&c, DEFAULT_CAP).unwrap();
            let expect = (xv << 3) | ((xv + 1) % 8);
            assert!(close(st.amps[expect], Complex64::new(1.0, 0.0)), "x={xv}");
        }
    }

    #[test]
    fn effectual_atoms() {
        let x = Register::range("x", 0, 0);
        let y = Register::range("y", 1, 1);
        let v = |p: Predicate| dense_effectual(&p).unwrap().amps.iter().map(|a| a.re).collect::<Vec<_>>();
        assert_eq!(v(Predicate::EqVars(x.clone(), y.clone())), vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(v(Predicate::Gt(x.clone(), y.clone())), vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(v(Predicate::False), vec![0.0]);
    }

    #[test]
    fn counts() {
        let x3 = Register::range("x", 0, 2);
        let y3 = Register::range("y", 3, 5);
        assert_eq!(model_count(&Predicate::EqVars(x3.clone(), y3.clone())).unwrap(), 8);
        assert_eq!(model_count(&Predicate::Gt(x3, y3)).unwrap(), 28);
        let x2 = Register::range("x", 0, 1);
        let y2 = Register::range("y", 2, 3);
        assert_eq!(model_count(&Predicate::Inc(x2, y2)).unwrap(), 4);
        let t = Predicate::TruthTable { regs: vec![Register::range("z", 0, 3)], table: TruthTable::new(4, vec![1, 9]) };
        assert_eq!(model_count(&t).unwrap(), 2);
    }

    #[test]
    fn decomp_expansion() {
        let t = [
            DecompTerm { weight: Complex64::new(1.0, 0.0), prep: vec![CliffordOp::h(0)] },
            DecompTerm {
                weight: Complex64::from_polar(1.0, PI / 4.0) - 1.0,
                prep: vec![CliffordOp::x(0)],
            },
        ];
        let magic = dense_of_decomp(1, &t.map(|mut t| {
            t.weight *= if t.prep[0].kind == CliffordKind::X { FRAC_1_SQRT_2 } else { 1.0 };
            t
        }))
        .unwrap();
        assert!(close(magic.amps[0], Complex64::new(FRAC_1_SQRT_2, 0.0)));
        assert!(close(magic.amps[1], Complex64::from_polar(FRAC_1_SQRT_2, PI / 4.0)));
        assert!(dense_of_decomp(3, &[]).unwrap().amps.iter().all(|a| *a == zero()));
    }

    #[test]
    fn cap_enforced() {
        let c = Circuit::new(DEFAULT_CAP + 1);
        assert!(matches!(dense_simulate(&c, &[false; DEFAULT_CAP + 1]), Err(ReferenceError::CapExceeded { .. })));
    }
}
