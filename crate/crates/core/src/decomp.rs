//! Stabilizer decompositions of effectual states and diagonal magic states.
//!
//! An effectual decomposition of a predicate `φ` over `k` qubits is a list of
//! weighted Clifford preparations whose sum is the unnormalized vector
//! `Σ_{x : φ(x)} |x⟩`. A magic decomposition sums to the normalized state
//! `2^{-k/2} Σ_x D_x |x⟩` of a diagonal gate `D`.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use thiserror::Error;

use crate::ir::{Diagnostic, Predicate, TruthTable};
use crate::stab::CliffordOp;

/// Weights at or below this magnitude are dropped.
pub const PRUNE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompError {
    #[error("qubit {0} appears in more than one operand")]
    SharedQubit(usize),
    #[error("malformed predicate: {0}")]
    Malformed(String),
}

/// `weight × prep|0…0⟩`, with `prep` acting on local qubits `0..arity`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecompTerm {
    pub weight: Complex64,
    pub prep: Vec<CliffordOp>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EffectualDecomp {
    /// Global qubit behind each local index.
    pub vars: Vec<usize>,
    pub terms: Vec<DecompTerm>,
    /// Number of satisfying assignments, saturating at `u128::MAX`.
    pub model_count: u128,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MagicDecomp {
    pub arity: usize,
    pub terms: Vec<DecompTerm>,
}

impl EffectualDecomp {
    pub fn arity(&self) -> usize {
        self.vars.len()
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `2^{e/2}`, exact for even `e`.
pub(crate) fn sqrt2_pow(e: i64) -> f64 {
    let half = 2f64.powi(e.div_euclid(2) as i32);
    if e.rem_euclid(2) == 1 {
        half * SQRT_2
    } else {
        half
    }
}

fn pow2(k: usize) -> u128 {
    if k >= 128 {
        u128::MAX
    } else {
        1u128 << k
    }
}

/// Local term list, independent of global qubit labels.
#[derive(Clone, Debug, PartialEq)]
struct Local {
    arity: usize,
    terms: Vec<DecompTerm>,
    count: u128,
}

impl Local {
    fn new(arity: usize, terms: Vec<DecompTerm>, count: u128) -> Self {
        let terms = terms.into_iter().filter(|t| t.weight.norm() > PRUNE_EPS).collect();
        Local { arity, terms, count }
    }

    fn uniform(arity: usize) -> Self {
        let prep = (0..arity).map(CliffordOp::h).collect();
        Local::new(arity, vec![DecompTerm { weight: real(sqrt2_pow(arity as i64)), prep }], pow2(arity))
    }

    fn tensor(&self, other: &Local) -> Local {
        let shift = self.arity;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut prep = a.prep.clone();
                prep.extend(b.prep.iter().map(|op| op.remap(|q| q + shift)));
                terms.push(DecompTerm { weight: a.weight * b.weight, prep });
            }
        }
        Local::new(self.arity + other.arity, terms, self.count.saturating_mul(other.count))
    }

    fn scaled(mut self, s: Complex64) -> Local {
        for t in &mut self.terms {
            t.weight *= s;
        }
        self.terms.retain(|t| t.weight.norm() > PRUNE_EPS);
        self
    }

    fn plus(mut self, other: Local) -> Local {
        debug_assert_eq!(self.arity, other.arity);
        self.terms.extend(other.terms);
        self
    }

    fn negate(&self) -> Local {
        let count = pow2(self.arity).saturating_sub(self.count);
        Local { count, ..Local::uniform(self.arity).plus(self.clone().scaled(real(-1.0))) }
    }

    /// `a ⊗ U + U ⊗ b − a ⊗ b`.
    fn or_pair(a: &Local, b: &Local) -> Local {
        let ua = Local::uniform(a.arity);
        let ub = Local::uniform(b.arity);
        let sum = a.tensor(&ub).plus(ua.tensor(b)).plus(a.tensor(b).scaled(real(-1.0)));
        Local { count: Self::or_model_count(a, b), ..sum }
    }

    /// Arity and model count of `a ∨ b` without building its terms.
    fn or_count(a: &Local, b: &Local) -> Local {
        Local::new(a.arity + b.arity, vec![], Self::or_model_count(a, b))
    }

    fn or_model_count(a: &Local, b: &Local) -> u128 {
        a.count
            .saturating_mul(pow2(b.arity))
            .saturating_add(pow2(a.arity).saturating_mul(b.count))
            .saturating_sub(a.count.saturating_mul(b.count))
    }
}

fn basis_term(bits: &[bool], weight: f64) -> DecompTerm {
    let prep = bits.iter().enumerate().filter(|(_, &b)| b).map(|(q, _)| CliffordOp::x(q)).collect();
    DecompTerm { weight: real(weight), prep }
}

fn eq_vars(k: usize) -> Local {
    let mut prep: Vec<CliffordOp> = (0..k).map(CliffordOp::h).collect();
    prep.extend((0..k).map(|j| CliffordOp::cx(j, k + j)));
    Local::new(2 * k, vec![DecompTerm { weight: real(sqrt2_pow(k as i64)), prep }], pow2(k))
}

/// `x > y`: for each common prefix length ℓ, `x_ℓ = 1`, `y_ℓ = 0`, the rest free.
fn greater(k: usize) -> Local {
    let mut terms = Vec::with_capacity(k);
    for l in 0..k {
        let mut prep: Vec<CliffordOp> = (0..l).map(CliffordOp::h).collect();
        prep.extend((0..l).map(|j| CliffordOp::cx(j, k + j)));
        prep.push(CliffordOp::x(l));
        prep.extend((l + 1..k).map(CliffordOp::h));
        prep.extend((l + 1..k).map(|j| CliffordOp::h(k + j)));
        let e = (2 * k - l - 2) as i64;
        terms.push(DecompTerm { weight: real(sqrt2_pow(e)), prep });
    }
    let n = pow2(k);
    let count = if k >= 64 { u128::MAX } else { n * (n - 1) / 2 };
    Local::new(2 * k, terms, count)
}

/// `y = x + 1 mod 2^k`: `x = p 0 1…1`, `y = p 1 0…0` for each prefix length ℓ,
/// plus the wraparound `x = 1…1`, `y = 0…0`.
fn increment(k: usize) -> Local {
    let mut terms = Vec::with_capacity(k + 1);
    for l in 0..k {
        let mut prep: Vec<CliffordOp> = (0..l).map(CliffordOp::h).collect();
        prep.extend((0..l).map(|j| CliffordOp::cx(j, k + j)));
        prep.push(CliffordOp::x(k + l));
        prep.extend((l + 1..k).map(CliffordOp::x));
        terms.push(DecompTerm { weight: real(sqrt2_pow(l as i64)), prep });
    }
    terms.push(DecompTerm { weight: real(1.0), prep: (0..k).map(CliffordOp::x).collect() });
    Local::new(2 * k, terms, pow2(k))
}

/// One basis term per row, or `U` minus the missing rows when that is shorter.
fn truth_table(table: &TruthTable) -> Local {
    let rows = table.rows.len() as u128;
    let count = rows;
    if table.width < 32 && pow2(table.width) - rows + 1 < rows {
        let missing = (0..1u64 << table.width)
            .filter(|r| !table.contains(*r))
            .map(|r| basis_term(&table.row_bits(r), -1.0))
            .collect();
        let rest = Local::new(table.width, missing, 0);
        return Local { count, ..Local::uniform(table.width).plus(rest) };
    }
    let terms = table.rows.iter().map(|&r| basis_term(&table.row_bits(r), 1.0)).collect();
    Local::new(table.width, terms, count)
}

fn check(pred: &Predicate) -> Result<Vec<usize>, DecompError> {
    if let Some(d) = pred.check().into_iter().next() {
        return Err(malformed(d));
    }
    let qubits = pred.qubits();
    for (i, q) in qubits.iter().enumerate() {
        if qubits[..i].contains(q) {
            return Err(DecompError::SharedQubit(*q));
        }
    }
    Ok(qubits)
}

fn malformed(d: Diagnostic) -> DecompError {
    DecompError::Malformed(d.message)
}

/// Cheap negation used by the De Morgan form of a disjunction.
fn negated(p: &Predicate) -> Predicate {
    match p {
        Predicate::Not(inner) => (**inner).clone(),
        Predicate::EqConst(r, bits) if bits.len() == 1 => Predicate::EqConst(r.clone(), vec![!bits[0]]),
        Predicate::True => Predicate::False,
        Predicate::False => Predicate::True,
        other => Predicate::not(other.clone()),
    }
}

fn build(pred: &Predicate) -> Local {
    match pred {
        Predicate::True => Local::new(0, vec![DecompTerm { weight: real(1.0), prep: vec![] }], 1),
        Predicate::False => Local::new(0, vec![], 0),
        Predicate::EqVars(a, _) => eq_vars(a.width()),
        Predicate::EqConst(_, bits) => Local::new(bits.len(), vec![basis_term(bits, 1.0)], 1),
        Predicate::Gt(a, _) => greater(a.width()),
        Predicate::Inc(a, _) => increment(a.width()),
        Predicate::TruthTable { table, .. } => truth_table(table),
        Predicate::Not(p) => build(p).negate(),
        Predicate::And(ps) => ps.iter().map(build).reduce(|a, b| a.tensor(&b)).expect("checked non-empty"),
        Predicate::Or(ps) => {
            let kids: Vec<Local> = ps.iter().map(build).collect();
            let pairwise_len = kids.iter().skip(1).fold(kids[0].terms.len() as u128, |acc, b| {
                let t = b.terms.len() as u128;
                acc.saturating_add(t).saturating_add(acc.saturating_mul(t))
            });
            // ¬(¬a ∧ ¬b ∧ …)
            let demorgan = ps.iter().map(|p| build(&negated(p))).reduce(|a, b| a.tensor(&b)).unwrap().negate();
            if (demorgan.terms.len() as u128) < pairwise_len {
                let count = kids.iter().skip(1).fold(kids[0].clone(), |acc, b| Local::or_count(&acc, b)).count;
                Local { count, ..demorgan }
            } else {
                kids.iter().skip(1).fold(kids[0].clone(), |acc, b| Local::or_pair(&acc, b))
            }
        }
    }
}

/// Decomposes `Σ_{x : φ(x)} |x⟩` over the predicate's qubits in traversal order.
///
/// Every register occurrence must use qubits no other occurrence uses.
pub fn build_effectual(pred: &Predicate) -> Result<EffectualDecomp, DecompError> {
    let vars = check(pred)?;
    let local = build(pred);
    debug_assert_eq!(local.arity, vars.len());
    Ok(EffectualDecomp { vars, terms: local.terms, model_count: local.count })
}

fn to_local(e: &EffectualDecomp) -> Local {
    Local { arity: e.arity(), terms: e.terms.clone(), count: e.model_count }
}

fn from_local(vars: Vec<usize>, l: Local) -> EffectualDecomp {
    EffectualDecomp { vars, terms: l.terms, model_count: l.count }
}

/// Effectual state of `φ_a ∧ φ_b` for operands over disjoint qubits.
pub fn conjunction(a: &EffectualDecomp, b: &EffectualDecomp) -> EffectualDecomp {
    let vars = a.vars.iter().chain(&b.vars).copied().collect();
    from_local(vars, to_local(a).tensor(&to_local(b)))
}

/// `E(φ_a) ⊗ U + U ⊗ E(φ_b)`: the disjunction without its overlap correction.
///
/// Exact on assignments where `φ_a` and `φ_b` never hold together.
/// `model_count` is the sum of the two padded counts.
pub fn disjoint_or(a: &EffectualDecomp, b: &EffectualDecomp) -> EffectualDecomp {
    let la = to_local(a);
    let lb = to_local(b);
    let sum = la.tensor(&Local::uniform(lb.arity)).plus(Local::uniform(la.arity).tensor(&lb));
    let count = la.count.saturating_mul(pow2(lb.arity)).saturating_add(pow2(la.arity).saturating_mul(lb.count));
    let vars = a.vars.iter().chain(&b.vars).copied().collect();
    from_local(vars, Local { count, ..sum })
}

fn with_flag(e: &EffectualDecomp, flag: bool, factor: Complex64) -> Vec<DecompTerm> {
    let k = e.arity();
    e.terms
        .iter()
        .map(|t| {
            let mut prep = t.prep.clone();
            if flag {
                prep.push(CliffordOp::x(k));
            }
            DecompTerm { weight: t.weight * factor, prep }
        })
        .collect()
}

fn plus_state(arity: usize) -> DecompTerm {
    DecompTerm { weight: real(1.0), prep: (0..arity).map(CliffordOp::h).collect() }
}

fn phase_minus_one(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta) - 1.0
}

fn magic(arity: usize, terms: Vec<DecompTerm>) -> MagicDecomp {
    MagicDecomp { arity, terms: terms.into_iter().filter(|t| t.weight.norm() > PRUNE_EPS).collect() }
}

/// Magic state of the phase gate `e^{iθ[φ(x)]}` on the predicate's `k` qubits.
pub fn build_magic_phase(eff: &EffectualDecomp, theta: f64) -> MagicDecomp {
    let k = eff.arity();
    let factor = phase_minus_one(theta) * sqrt2_pow(-(k as i64));
    let mut terms = vec![plus_state(k)];
    terms.extend(with_flag(eff, false, factor));
    magic(k, terms)
}

/// Magic state of `C_φ Rz(θ)`: arity `k + 1`, target last.
pub fn build_magic_cond_rz(eff: &EffectualDecomp, theta: f64) -> MagicDecomp {
    let k = eff.arity();
    let factor = phase_minus_one(theta) * sqrt2_pow(-(k as i64) - 1);
    let mut terms = vec![plus_state(k + 1)];
    terms.extend(with_flag(eff, true, factor));
    magic(k + 1, terms)
}

/// Magic state of the controlled diagonal `C_φ diag(e^{ip0}, e^{ip1})`, target last.
pub fn build_magic_cond_diag(eff: &EffectualDecomp, p0: f64, p1: f64) -> MagicDecomp {
    let k = eff.arity();
    let scale = sqrt2_pow(-(k as i64) - 1);
    let mut terms = vec![plus_state(k + 1)];
    terms.extend(with_flag(eff, false, phase_minus_one(p0) * scale));
    terms.extend(with_flag(eff, true, phase_minus_one(p1) * scale));
    magic(k + 1, terms)
}
