//! Phase-sensitive stabilizer states.
//!
//! A unit-norm stabilizer state on `n` qubits is stored in affine/quadratic
//! form:
//!
//! ```text
//! |s⟩ = 2^{-r/2} Σ_{y ∈ F_2^r} i^{φ(y)} |A y ⊕ b⟩,
//! φ(y) = Σ_j λ_j y_j + 2 Σ_{j<k} Q_jk y_j y_k  (mod 4)
//! ```
//!
//! where `A` is an `n × r` binary matrix of full column rank. The state held
//! by [`StabilizerState`] is `scale × |s⟩`, so global phase and the factors
//! produced by unnormalized projections are tracked exactly.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StabError {
    #[error("a stabilizer state needs at least one qubit")]
    NoQubits,
    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitOutOfRange { index: usize, num_qubits: usize },
    #[error("gate {0} acts twice on the same qubit")]
    DuplicateQubit(CliffordOp),
    #[error("basis string has {got} bits, state has {expected} qubits")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CliffordKind {
    H,
    S,
    Sdg,
    X,
    Z,
    CX,
    CZ,
}

impl CliffordKind {
    pub fn arity(self) -> usize {
        match self {
            CliffordKind::CX | CliffordKind::CZ => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CliffordKind::H => "h",
            CliffordKind::S => "s",
            CliffordKind::Sdg => "sdg",
            CliffordKind::X => "x",
            CliffordKind::Z => "z",
            CliffordKind::CX => "cx",
            CliffordKind::CZ => "cz",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "h" => CliffordKind::H,
            "s" => CliffordKind::S,
            "sdg" => CliffordKind::Sdg,
            "x" => CliffordKind::X,
            "z" => CliffordKind::Z,
            "cx" => CliffordKind::CX,
            "cz" => CliffordKind::CZ,
            _ => return None,
        })
    }
}

/// A single Clifford gate. For `CX` the first qubit is the control.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CliffordOp {
    pub kind: CliffordKind,
    pub qubits: [usize; 2],
}

impl CliffordOp {
    pub fn one(kind: CliffordKind, q: usize) -> Self {
        debug_assert_eq!(kind.arity(), 1);
        CliffordOp { kind, qubits: [q, q] }
    }

    pub fn two(kind: CliffordKind, a: usize, b: usize) -> Self {
        debug_assert_eq!(kind.arity(), 2);
        CliffordOp { kind, qubits: [a, b] }
    }

    pub fn h(q: usize) -> Self {
        Self::one(CliffordKind::H, q)
    }
    pub fn s(q: usize) -> Self {
        Self::one(CliffordKind::S, q)
    }
    pub fn sdg(q: usize) -> Self {
        Self::one(CliffordKind::Sdg, q)
    }
    pub fn x(q: usize) -> Self {
        Self::one(CliffordKind::X, q)
    }
    pub fn z(q: usize) -> Self {
        Self::one(CliffordKind::Z, q)
    }
    pub fn cx(c: usize, t: usize) -> Self {
        Self::two(CliffordKind::CX, c, t)
    }
    pub fn cz(a: usize, b: usize) -> Self {
        Self::two(CliffordKind::CZ, a, b)
    }

    /// Qubits the gate acts on (one or two).
    pub fn targets(&self) -> &[usize] {
        &self.qubits[..self.kind.arity()]
    }

    /// Same gate with every qubit index passed through `f`.
    pub fn remap(&self, f: impl Fn(usize) -> usize) -> Self {
        CliffordOp { kind: self.kind, qubits: [f(self.qubits[0]), f(self.qubits[1])] }
    }

    pub fn validate(&self, num_qubits: usize) -> Result<(), StabError> {
        for &q in self.targets() {
            if q >= num_qubits {
                return Err(StabError::QubitOutOfRange { index: q, num_qubits });
            }
        }
        if self.kind.arity() == 2 && self.qubits[0] == self.qubits[1] {
            return Err(StabError::DuplicateQubit(*self));
        }
        Ok(())
    }
}

impl fmt::Display for CliffordOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind.arity() {
            1 => write!(f, "{} {}", self.kind.name(), self.qubits[0]),
            _ => write!(f, "{} {} {}", self.kind.name(), self.qubits[0], self.qubits[1]),
        }
    }
}

/// One step of a Clifford+projection fragment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FragmentOp {
    Gate(CliffordOp),
    Project { qubit: usize, outcome: bool },
}

#[inline]
fn get(bits: &[u64], i: usize) -> bool {
    (bits[i >> 6] >> (i & 63)) & 1 == 1
}

#[inline]
fn flip(bits: &mut [u64], i: usize) {
    bits[i >> 6] ^= 1 << (i & 63);
}

#[inline]
fn put(bits: &mut [u64], i: usize, v: bool) {
    if get(bits, i) != v {
        flip(bits, i);
    }
}

fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

fn ones(bits: &[u64]) -> impl Iterator<Item = usize> + '_ {
    bits.iter().enumerate().flat_map(|(w, &word)| {
        let mut word = word;
        std::iter::from_fn(move || {
            if word == 0 {
                None
            } else {
                let t = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(w * 64 + t)
            }
        })
    })
}

const I_POW: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

/// `scale × |s⟩` for a unit-norm stabilizer state `|s⟩`.
///
/// Single-owner and mutated in place; clone to branch.
#[derive(Clone, Debug)]
pub struct StabilizerState {
    n: usize,
    rank: usize,
    vwords: usize,
    // cols[j]: column j of A, a bitset over qubits
    cols: Vec<Vec<u64>>,
    shift: Vec<u64>,
    lin: Vec<u8>,
    // quad[j]: row j of the symmetric form Q, a bitset over variables
    quad: Vec<Vec<u64>>,
    scale: Complex64,
    zero: bool,
}

impl StabilizerState {
    /// `|0^n⟩` with unit scale.
    pub fn new(n: usize) -> Result<Self, StabError> {
        if n == 0 {
            return Err(StabError::NoQubits);
        }
        let qwords = n.div_ceil(64);
        let vwords = n.div_ceil(64);
        Ok(StabilizerState {
            n,
            rank: 0,
            vwords,
            cols: vec![vec![0; qwords]; n],
            shift: vec![0; qwords],
            lin: vec![0; n],
            quad: vec![vec![0; vwords]; n],
            scale: Complex64::new(1.0, 0.0),
            zero: false,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn scale(&self) -> Complex64 {
        self.scale
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// Dimension of the affine support (the state has `2^rank` nonzero amplitudes).
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Multiply the represented vector by `c`.
    pub fn scale_by(&mut self, c: Complex64) {
        if self.zero {
            return;
        }
        if c == Complex64::new(0.0, 0.0) {
            self.make_zero();
        } else {
            self.scale *= c;
        }
    }

    fn make_zero(&mut self) {
        self.zero = true;
        self.scale = Complex64::new(0.0, 0.0);
    }

    fn check_qubit(&self, q: usize) -> Result<(), StabError> {
        if q >= self.n {
            Err(StabError::QubitOutOfRange { index: q, num_qubits: self.n })
        } else {
            Ok(())
        }
    }

    /// Row `q` of `A` as a bitset over variables.
    fn row(&self, q: usize) -> Vec<u64> {
        let mut row = vec![0u64; self.vwords];
        for j in 0..self.rank {
            if get(&self.cols[j], q) {
                flip(&mut row, j);
            }
        }
        row
    }

    fn add_lin(&mut self, j: usize, d: u8) {
        self.lin[j] = (self.lin[j] + d) & 3;
    }

    fn toggle_quad(&mut self, j: usize, k: usize) {
        flip(&mut self.quad[j], k);
        flip(&mut self.quad[k], j);
    }

    /// Multiply the phase by `i^{sign · XOR(y_j : j ∈ set)}`.
    fn phase_xor(&mut self, set: &[u64], sign: u8) {
        let members: Vec<usize> = ones(set).collect();
        for &j in &members {
            self.add_lin(j, sign);
            xor_into(&mut self.quad[j], set);
            flip(&mut self.quad[j], j);
        }
    }

    /// Change of variables `y_j := y_j ⊕ y_k`; in terms of `A` this is
    /// `col_k ^= col_j`.
    fn substitute(&mut self, j: usize, k: usize) {
        debug_assert_ne!(j, k);
        let lj = self.lin[j];
        let qjk = get(&self.quad[j], k);
        self.add_lin(k, lj);
        if lj & 1 == 1 {
            self.toggle_quad(j, k);
        }
        if qjk {
            self.add_lin(k, 2);
        }
        let row_j = self.quad[j].clone();
        for m in ones(&row_j) {
            if m != k && m != j {
                self.toggle_quad(k, m);
            }
        }
        let col_j = self.cols[j].clone();
        xor_into(&mut self.cols[k], &col_j);
    }

    /// Drop variable `k`, whose column, linear and quadratic terms must already be cleared.
    fn remove_var(&mut self, k: usize) {
        let last = self.rank - 1;
        if k != last {
            self.cols.swap(k, last);
            self.lin.swap(k, last);
            self.quad.swap(k, last);
            for row in self.quad.iter_mut().take(self.rank) {
                let v = get(row, last);
                put(row, k, v);
                put(row, last, false);
            }
        }
        self.cols[last].iter_mut().for_each(|w| *w = 0);
        self.quad[last].iter_mut().for_each(|w| *w = 0);
        self.lin[last] = 0;
        self.rank -= 1;
    }

    fn clear_var_phase(&mut self, k: usize) {
        let row = std::mem::replace(&mut self.quad[k], vec![0; self.vwords]);
        for m in ones(&row) {
            flip(&mut self.quad[m], k);
        }
        self.lin[k] = 0;
    }

    /// Fix `y_k = value` and eliminate the variable.
    fn fix_var(&mut self, k: usize, value: bool) {
        if value {
            self.scale *= I_POW[self.lin[k] as usize];
            let row = self.quad[k].clone();
            for m in ones(&row) {
                self.add_lin(m, 2);
            }
            let col = self.cols[k].clone();
            xor_into(&mut self.shift, &col);
        }
        self.clear_var_phase(k);
        self.cols[k].iter_mut().for_each(|w| *w = 0);
        self.remove_var(k);
    }

    /// Column-reduce so that row `q` of `A` is exactly `e_k`; returns `k`.
    fn isolate_in_row(&mut self, q: usize, k: usize) {
        for j in 0..self.rank {
            if j != k && get(&self.cols[j], q) {
                // col_j ^= col_k
                self.substitute(k, j);
            }
        }
    }

    pub fn apply(&mut self, op: &CliffordOp) -> Result<(), StabError> {
        op.validate(self.n)?;
        if self.zero {
            return Ok(());
        }
        let [a, b] = op.qubits;
        match op.kind {
            CliffordKind::X => flip(&mut self.shift, a),
            CliffordKind::Z => {
                if get(&self.shift, a) {
                    self.scale = -self.scale;
                }
                for j in ones(&self.row(a)) {
                    self.add_lin(j, 2);
                }
            }
            CliffordKind::S | CliffordKind::Sdg => {
                let dagger = op.kind == CliffordKind::Sdg;
                let set = self.row(a);
                let bit = get(&self.shift, a);
                // i^{±x_a}, x_a = bit ⊕ XOR(set)
                let sign = match (dagger, bit) {
                    (false, false) | (true, true) => 1,
                    _ => 3,
                };
                if bit {
                    self.scale *= if dagger { I_POW[3] } else { I_POW[1] };
                }
                self.phase_xor(&set, sign);
            }
            CliffordKind::CX => {
                for j in 0..self.rank {
                    if get(&self.cols[j], a) {
                        flip(&mut self.cols[j], b);
                    }
                }
                if get(&self.shift, a) {
                    flip(&mut self.shift, b);
                }
            }
            CliffordKind::CZ => {
                let ra = self.row(a);
                let rb = self.row(b);
                let ba = get(&self.shift, a);
                let bb = get(&self.shift, b);
                if ba && bb {
                    self.scale = -self.scale;
                }
                if ba {
                    for j in ones(&rb) {
                        self.add_lin(j, 2);
                    }
                }
                if bb {
                    for j in ones(&ra) {
                        self.add_lin(j, 2);
                    }
                }
                for j in 0..self.rank {
                    let aj = get(&ra, j);
                    let bj = get(&rb, j);
                    if aj && bj {
                        self.add_lin(j, 2);
                    }
                    if aj {
                        xor_into(&mut self.quad[j], &rb);
                    }
                    if bj {
                        xor_into(&mut self.quad[j], &ra);
                    }
                }
            }
            CliffordKind::H => self.hadamard(a),
        }
        Ok(())
    }

    /// A nonzero combination `u` of columns that vanishes outside row `q`, if any.
    fn dependency_outside_row(&self, q: usize) -> Option<Vec<u64>> {
        let mut pivots: Vec<(usize, Vec<u64>, Vec<u64>)> = Vec::new();
        for j in 0..self.rank {
            let mut col = self.cols[j].clone();
            put(&mut col, q, false);
            let mut combo = vec![0u64; self.vwords];
            flip(&mut combo, j);
            for (p, pcol, pcombo) in &pivots {
                if get(&col, *p) {
                    xor_into(&mut col, pcol);
                    xor_into(&mut combo, pcombo);
                }
            }
            let lead = ones(&col).next();
            match lead {
                None => return Some(combo),
                Some(p) => pivots.push((p, col, combo)),
            }
        }
        None
    }

    fn hadamard(&mut self, q: usize) {
        let old_bit = get(&self.shift, q);
        match self.dependency_outside_row(q) {
            None => {
                // x_q becomes a fresh variable z; the old value enters the phase.
                let alpha = self.row(q);
                for j in 0..self.rank {
                    put(&mut self.cols[j], q, false);
                }
                put(&mut self.shift, q, false);
                let z = self.rank;
                self.rank += 1;
                self.cols[z].iter_mut().for_each(|w| *w = 0);
                put(&mut self.cols[z], q, true);
                self.lin[z] = if old_bit { 2 } else { 0 };
                self.quad[z].iter_mut().for_each(|w| *w = 0);
                for j in ones(&alpha) {
                    self.toggle_quad(z, j);
                }
            }
            Some(u) => {
                let members: Vec<usize> = ones(&u).collect();
                let k = members[0];
                for &j in &members[1..] {
                    // col_k ^= col_j
                    self.substitute(j, k);
                }
                debug_assert!(get(&self.cols[k], q));
                self.isolate_in_row(q, k);
                // Now x_q = old_bit ⊕ y_k and y_k appears nowhere else in A.
                let lk = self.lin[k];
                let mut link = self.quad[k].clone();
                put(&mut link, k, false);
                self.clear_var_phase(k);
                if lk & 1 == 0 {
                    // Sum over y_k forces z = L(y) ⊕ λ_k/2.
                    let half = lk == 2;
                    self.cols[k].iter_mut().for_each(|w| *w = 0);
                    for j in ones(&link) {
                        if j < self.rank {
                            flip(&mut self.cols[j], q);
                        }
                    }
                    put(&mut self.shift, q, half);
                    if old_bit {
                        if half {
                            self.scale = -self.scale;
                        }
                        for j in ones(&link) {
                            self.add_lin(j, 2);
                        }
                    }
                    self.remove_var(k);
                } else {
                    // y_k is reused as the new value z of x_q.
                    put(&mut self.shift, q, false);
                    let (sign, phase) = if lk == 1 {
                        (3u8, Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2))
                    } else {
                        (1u8, Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2))
                    };
                    self.scale *= phase;
                    let mut set = link;
                    flip(&mut set, k);
                    self.phase_xor(&set, sign);
                    if old_bit {
                        self.add_lin(k, 2);
                    }
                }
            }
        }
    }

    /// Apply `|outcome⟩⟨outcome|` on `qubit` without renormalizing.
    pub fn project(&mut self, qubit: usize, outcome: bool) -> Result<(), StabError> {
        self.check_qubit(qubit)?;
        if self.zero {
            return Ok(());
        }
        let bit = get(&self.shift, qubit);
        let alpha = self.row(qubit);
        match ones(&alpha).next() {
            None => {
                if bit != outcome {
                    self.make_zero();
                }
            }
            Some(k) => {
                self.isolate_in_row(qubit, k);
                self.fix_var(k, outcome != bit);
                self.scale *= FRAC_1_SQRT_2;
            }
        }
        Ok(())
    }

    pub fn apply_fragment<'a>(
        &mut self,
        ops: impl IntoIterator<Item = &'a FragmentOp>,
    ) -> Result<(), StabError> {
        for op in ops {
            match op {
                FragmentOp::Gate(g) => self.apply(g)?,
                FragmentOp::Project { qubit, outcome } => self.project(*qubit, *outcome)?,
            }
        }
        Ok(())
    }

    /// `⟨x|state⟩`, with `x[q]` the value of qubit `q`.
    pub fn amplitude(&self, x: &[bool]) -> Result<Complex64, StabError> {
        if x.len() != self.n {
            return Err(StabError::LengthMismatch { expected: self.n, got: x.len() });
        }
        if self.zero {
            return Ok(Complex64::new(0.0, 0.0));
        }
        // Solve A y = x ⊕ b by elimination over the rows of [A | x ⊕ b].
        let r = self.rank;
        let width = r + 1;
        let words = width.div_ceil(64);
        let mut rows: Vec<Vec<u64>> = (0..self.n)
            .map(|q| {
                let mut row = vec![0u64; words];
                for j in 0..r {
                    if get(&self.cols[j], q) {
                        flip(&mut row, j);
                    }
                }
                if x[q] != get(&self.shift, q) {
                    flip(&mut row, r);
                }
                row
            })
            .collect();
        let mut y = vec![0u64; self.vwords];
        let mut pivot_row = 0;
        let mut pivot_of = vec![usize::MAX; r];
        for j in 0..r {
            let Some(p) = (pivot_row..self.n).find(|&i| get(&rows[i], j)) else {
                unreachable!("A has full column rank");
            };
            rows.swap(pivot_row, p);
            let pr = rows[pivot_row].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != pivot_row && get(row, j) {
                    xor_into(row, &pr);
                }
            }
            pivot_of[j] = pivot_row;
            pivot_row += 1;
        }
        if rows[pivot_row..].iter().any(|row| get(row, r)) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        for j in 0..r {
            if get(&rows[pivot_of[j]], r) {
                flip(&mut y, j);
            }
        }
        Ok(self.term_value(&y))
    }

    fn phase_of(&self, y: &[u64]) -> usize {
        let mut phase = 0usize;
        let mut pairs = 0usize;
        for j in ones(y) {
            phase += self.lin[j] as usize;
            pairs += self.quad[j]
                .iter()
                .zip(y)
                .map(|(a, b)| (a & b).count_ones() as usize)
                .sum::<usize>();
        }
        // each pair was counted twice; 2 · (pairs / 2) = pairs
        (phase + pairs) & 3
    }

    fn term_value(&self, y: &[u64]) -> Complex64 {
        let norm = 2f64.powf(-(self.rank as f64) / 2.0);
        self.scale * norm * I_POW[self.phase_of(y)]
    }

    /// All `2^n` amplitudes, index bit `n-1-q` holding qubit `q`.
    ///
    /// Enumerates the affine support directly, independent of [`Self::amplitude`].
    pub fn to_dense(&self) -> Vec<Complex64> {
        assert!(self.n <= 24, "dense expansion limited to 24 qubits");
        let mut out = vec![Complex64::new(0.0, 0.0); 1 << self.n];
        if self.zero {
            return out;
        }
        let index_of = |bits: &[u64]| {
            (0..self.n).fold(0usize, |acc, q| (acc << 1) | get(bits, q) as usize)
        };
        for mask in 0u64..(1u64 << self.rank) {
            let mut y = vec![0u64; self.vwords];
            let mut x = self.shift.clone();
            for j in 0..self.rank {
                if (mask >> j) & 1 == 1 {
                    flip(&mut y, j);
                    xor_into(&mut x, &self.cols[j]);
                }
            }
            out[index_of(&x)] += self.term_value(&y);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2 as R;

    const EPS: f64 = 1e-10;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < EPS
    }

    fn run(n: usize, ops: &[CliffordOp]) -> StabilizerState {
        let mut st = StabilizerState::new(n).unwrap();
        for op in ops {
            st.apply(op).unwrap();
        }
        st
    }

    #[test]
    fn init_state_is_all_zeros() {
        let st = StabilizerState::new(2).unwrap();
        assert!(close(st.amplitude(&[false, false]).unwrap(), c(1.0, 0.0)));
        assert!(close(st.amplitude(&[false, true]).unwrap(), c(0.0, 0.0)));
        assert_eq!(StabilizerState::new(1).unwrap().scale(), c(1.0, 0.0));
        let dense = StabilizerState::new(10).unwrap().to_dense();
        assert_eq!(dense[0], c(1.0, 0.0));
        assert!(dense[1..].iter().all(|a| a.norm() == 0.0));
        assert_eq!(StabilizerState::new(0).unwrap_err(), StabError::NoQubits);
    }

    #[test]
    fn single_qubit_gates() {
        let st = run(1, &[CliffordOp::h(0)]);
        assert!(close(st.amplitude(&[false]).unwrap(), c(R, 0.0)));
        assert!(close(st.amplitude(&[true]).unwrap(), c(R, 0.0)));
        let st = run(1, &[CliffordOp::h(0), CliffordOp::s(0)]);
        assert!(close(st.amplitude(&[true]).unwrap(), c(0.0, R)));
        // H S H |0> = ((1+i)|0> + (1-i)|1>)/2
        let st = run(1, &[CliffordOp::h(0), CliffordOp::s(0), CliffordOp::h(0)]);
        assert!(close(st.amplitude(&[false]).unwrap(), c(0.5, 0.5)));
        assert!(close(st.amplitude(&[true]).unwrap(), c(0.5, -0.5)));
        // X then H: |->
        let st = run(1, &[CliffordOp::x(0), CliffordOp::h(0)]);
        assert!(close(st.amplitude(&[true]).unwrap(), c(-R, 0.0)));
        // H H = I, including phase
        let st = run(1, &[CliffordOp::x(0), CliffordOp::h(0), CliffordOp::h(0)]);
        assert!(close(st.amplitude(&[true]).unwrap(), c(1.0, 0.0)));
        assert_eq!(st.rank(), 0);
    }

    #[test]
    fn epr_pair() {
        let st = run(2, &[CliffordOp::h(0), CliffordOp::cx(0, 1)]);
        assert!(close(st.amplitude(&[false, false]).unwrap(), c(R, 0.0)));
        assert!(close(st.amplitude(&[true, true]).unwrap(), c(R, 0.0)));
        assert!(close(st.amplitude(&[true, false]).unwrap(), c(0.0, 0.0)));
    }

    #[test]
    fn projections_track_scale() {
        let mut st = run(1, &[CliffordOp::h(0)]);
        st.project(0, false).unwrap();
        assert!(close(st.scale(), c(R, 0.0)));
        assert!(close(st.amplitude(&[false]).unwrap(), c(R, 0.0)));

        let mut st = StabilizerState::new(1).unwrap();
        st.project(0, true).unwrap();
        assert!(st.is_zero());
        assert_eq!(st.scale(), c(0.0, 0.0));

        let mut st = run(2, &[CliffordOp::h(0), CliffordOp::cx(0, 1)]);
        st.project(0, false).unwrap();
        assert!(close(st.scale(), c(R, 0.0)));
        assert!(close(st.amplitude(&[false, false]).unwrap(), c(R, 0.0)));
    }

    #[test]
    fn zero_state_absorbs() {
        let mut st = StabilizerState::new(2).unwrap();
        st.project(1, true).unwrap();
        st.apply(&CliffordOp::h(0)).unwrap();
        st.apply(&CliffordOp::cx(0, 1)).unwrap();
        st.project(0, false).unwrap();
        assert!(st.is_zero());
        assert_eq!(st.amplitude(&[false, false]).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn fragments() {
        let mut st = StabilizerState::new(2).unwrap();
        st.apply_fragment(&[]).unwrap();
        assert!(close(st.amplitude(&[false, false]).unwrap(), c(1.0, 0.0)));
        st.apply_fragment(&[
            FragmentOp::Gate(CliffordOp::h(0)),
            FragmentOp::Gate(CliffordOp::cx(0, 1)),
        ])
        .unwrap();
        assert!(close(st.amplitude(&[true, true]).unwrap(), c(R, 0.0)));
        st.apply_fragment(&[
            FragmentOp::Project { qubit: 0, outcome: true },
            FragmentOp::Project { qubit: 1, outcome: false },
        ])
        .unwrap();
        assert!(st.is_zero());
    }

    #[test]
    fn errors() {
        let mut st = StabilizerState::new(2).unwrap();
        assert!(matches!(
            st.apply(&CliffordOp::h(2)),
            Err(StabError::QubitOutOfRange { index: 2, .. })
        ));
        assert!(matches!(st.apply(&CliffordOp::cx(1, 1)), Err(StabError::DuplicateQubit(_))));
        assert!(st.project(5, false).is_err());
        assert!(matches!(st.amplitude(&[false]), Err(StabError::LengthMismatch { .. })));
    }

    // Plain dense gate application, used as the comparison model.
    fn dense_apply(v: &mut [Complex64], n: usize, op: &CliffordOp) {
        let bit = |q: usize| 1usize << (n - 1 - q);
        let [a, b] = op.qubits;
        let (ma, mb) = (bit(a), bit(b));
        match op.kind {
            CliffordKind::H => {
                for i in 0..v.len() {
                    if i & ma == 0 {
                        let (x, y) = (v[i], v[i | ma]);
                        v[i] = (x + y) * R;
                        v[i | ma] = (x - y) * R;
                    }
                }
            }
            CliffordKind::X => {
                for i in 0..v.len() {
                    if i & ma == 0 {
                        v.swap(i, i | ma);
                    }
                }
            }
            CliffordKind::CX => {
                for i in 0..v.len() {
                    if i & ma != 0 && i & mb == 0 {
                        v.swap(i, i | mb);
                    }
                }
            }
            kind => {
                for (i, amp) in v.iter_mut().enumerate() {
                    let f = match kind {
                        CliffordKind::S if i & ma != 0 => c(0.0, 1.0),
                        CliffordKind::Sdg if i & ma != 0 => c(0.0, -1.0),
                        CliffordKind::Z if i & ma != 0 => c(-1.0, 0.0),
                        CliffordKind::CZ if i & ma != 0 && i & mb != 0 => c(-1.0, 0.0),
                        _ => c(1.0, 0.0),
                    };
                    *amp *= f;
                }
            }
        }
    }

    fn dense_project(v: &mut [Complex64], n: usize, q: usize, outcome: bool) {
        let m = 1usize << (n - 1 - q);
        for (i, amp) in v.iter_mut().enumerate() {
            if (i & m != 0) != outcome {
                *amp = c(0.0, 0.0);
            }
        }
    }

    fn arb_step(n: usize) -> impl Strategy<Value = FragmentOp> {
        let gate = (0usize..7, 0..n, 0..n).prop_filter_map("distinct", move |(k, a, b)| {
            let kinds = [
                CliffordKind::H,
                CliffordKind::S,
                CliffordKind::Sdg,
                CliffordKind::X,
                CliffordKind::Z,
                CliffordKind::CX,
                CliffordKind::CZ,
            ];
            let kind = kinds[k];
            if kind.arity() == 2 {
                (a != b).then(|| FragmentOp::Gate(CliffordOp::two(kind, a, b)))
            } else {
                Some(FragmentOp::Gate(CliffordOp::one(kind, a)))
            }
        });
        prop_oneof![
            8 => gate,
            1 => (0..n, any::<bool>()).prop_map(|(qubit, outcome)| FragmentOp::Project { qubit, outcome }),
        ]
    }

    fn arb_fragment() -> impl Strategy<Value = (usize, Vec<FragmentOp>)> {
        (1usize..=6).prop_flat_map(|n| (Just(n), prop::collection::vec(arb_step(n), 0..60)))
    }

    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]

        #[test]
        fn matches_dense_model((n, ops) in arb_fragment()) {
            let mut st = StabilizerState::new(n).unwrap();
            let mut v = vec![c(0.0, 0.0); 1 << n];
            v[0] = c(1.0, 0.0);
            for op in &ops {
                st.apply_fragment(std::iter::once(op)).unwrap();
                match op {
                    FragmentOp::Gate(g) => dense_apply(&mut v, n, g),
                    FragmentOp::Project { qubit, outcome } => dense_project(&mut v, n, *qubit, *outcome),
                }
            }
            let dense = st.to_dense();
            for i in 0..v.len() {
                prop_assert!((dense[i] - v[i]).norm() < EPS, "index {i}: {} vs {}", dense[i], v[i]);
                let x: Vec<bool> = (0..n).map(|q| (i >> (n - 1 - q)) & 1 == 1).collect();
                prop_assert!((st.amplitude(&x).unwrap() - v[i]).norm() < EPS);
            }
        }

        #[test]
        fn gate_then_inverse_restores((n, ops) in arb_fragment(), extra in 0usize..7, q in 0usize..6) {
            let mut st = StabilizerState::new(n).unwrap();
            st.apply_fragment(&ops).unwrap();
            let before = st.to_dense();
            let q = q % n;
            let (g, inv) = match extra {
                0 => (CliffordOp::h(q), CliffordOp::h(q)),
                1 => (CliffordOp::s(q), CliffordOp::sdg(q)),
                2 => (CliffordOp::x(q), CliffordOp::x(q)),
                _ => (CliffordOp::z(q), CliffordOp::z(q)),
            };
            st.apply(&g).unwrap();
            st.apply(&inv).unwrap();
            let after = st.to_dense();
            for (a, b) in before.iter().zip(&after) {
                prop_assert!((a - b).norm() < EPS);
            }
        }
    }

    #[test]
    fn wide_register_crosses_word_boundary() {
        let n = 130;
        let mut st = StabilizerState::new(n).unwrap();
        st.apply(&CliffordOp::h(0)).unwrap();
        for q in 1..n {
            st.apply(&CliffordOp::cx(q - 1, q)).unwrap();
        }
        st.apply(&CliffordOp::s(129)).unwrap();
        let all = vec![true; n];
        assert!(close(st.amplitude(&all).unwrap(), c(0.0, R)));
        st.apply(&CliffordOp::h(64)).unwrap();
        st.project(64, true).unwrap();
        let mut x = vec![true; n];
        x[64] = true;
        // (|0..0> + i|1..1>)/sqrt2 -> H on qubit 64 splits each branch; project keeps x_64 = 1
        assert!(close(st.amplitude(&x).unwrap(), c(0.0, -0.5)));
        assert_eq!(st.rank(), 1);
    }
}
