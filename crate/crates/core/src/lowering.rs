//! Lowering of high-level gates to Clifford+projection gadgets that consume
//! magic states.
//!
//! A diagonal gate `D` on qubits `v_1..v_k` is enacted by preparing its magic
//! state on `k` pool ancillas, applying `CX v_i → m_i` and projecting every
//! `m_i` onto `|0⟩`. The projections scale the state by `2^{-k/2}`, recorded
//! as a compensation exponent rather than renormalized.

use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

use crate::decomp::{
    build_effectual, build_magic_cond_diag, build_magic_cond_rz, build_magic_phase, disjoint_or, DecompError,
    EffectualDecomp, MagicDecomp,
};
use crate::ir::{euler_zxz, validate, Circuit, EulerAngles, Gate, Predicate, QueryFn, Register, Unitary};
use crate::stab::{CliffordKind, CliffordOp};

const ANGLE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LowerError {
    #[error("invalid circuit: {0}")]
    Invalid(String),
    #[error(transparent)]
    Decomp(#[from] DecompError),
    #[error("gadget needs {needed} ancillas, budget is {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("matrix is not unitary")]
    NonUnitary,
    #[error("gate `{0}` is not lowered to a gadget")]
    Unsupported(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GadgetOp {
    Clifford(CliffordOp),
    Project { qubit: usize, outcome: bool },
    /// Prepare one term of slot `j` on its qubits.
    Slot(usize),
}

/// A magic-state decomposition placed on concrete qubits: local qubit `i` of
/// every prep circuit acts on `qubits[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Slot {
    pub qubits: Vec<usize>,
    pub decomp: MagicDecomp,
}

impl Slot {
    pub fn terms(&self) -> usize {
        self.decomp.terms.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gadget {
    pub ops: Vec<GadgetOp>,
    pub slots: Vec<Slot>,
    pub ancilla_count: usize,
    /// The gadget's amplitude must be multiplied by `2^{compensation_exp/2}`.
    pub compensation_exp: u32,
    pub source: Gate,
}

impl Gadget {
    pub fn terms(&self) -> u128 {
        self.slots.iter().fold(1u128, |acc, s| acc.saturating_mul(s.terms() as u128))
    }

    /// Number of Clifford and projection operations.
    pub fn skeleton_size(&self) -> usize {
        self.ops.iter().filter(|op| !matches!(op, GadgetOp::Slot(_))).count()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LowerConfig {
    /// Upper bound on ancillas per gadget; `None` means unbounded.
    pub ancilla_budget: Option<usize>,
}

/// Hands out ancilla indices above the circuit qubits.
#[derive(Clone, Debug)]
pub struct Alloc {
    base: usize,
    next: usize,
    high: usize,
    budget: Option<usize>,
}

impl Alloc {
    pub fn new(base: usize, budget: Option<usize>) -> Self {
        Alloc { base, next: base, high: base, budget }
    }

    pub fn take(&mut self, k: usize) -> Result<Vec<usize>, LowerError> {
        let start = self.next;
        self.next += k;
        if let Some(budget) = self.budget {
            if self.next - self.base > budget {
                return Err(LowerError::BudgetExceeded { needed: self.next - self.base, budget });
            }
        }
        self.high = self.high.max(self.next);
        Ok((start..self.next).collect())
    }

    pub fn mark(&self) -> usize {
        self.next
    }

    /// Returns every ancilla taken since `mark`; they must be back in `|0⟩`.
    pub fn release(&mut self, mark: usize) {
        self.next = mark;
    }

    pub fn used(&self) -> usize {
        self.high - self.base
    }
}

/// Rewrites `pred` so no qubit is read by two register occurrences.
///
/// Returns the copy circuit (also its own inverse) and the rewritten predicate.
/// Repeated qubits are read from fresh ancillas filled by `CX` from the
/// original; running the copy circuit again returns the ancillas to `|0⟩`.
pub fn split_shared_vars(pred: &Predicate, alloc: &mut Alloc) -> Result<(Vec<CliffordOp>, Predicate), LowerError> {
    let mut seen = Vec::new();
    let mut copies = Vec::new();
    let rewritten = split_rec(pred, alloc, &mut seen, &mut copies)?;
    Ok((copies, rewritten))
}

fn split_reg(
    reg: &Register,
    alloc: &mut Alloc,
    seen: &mut Vec<usize>,
    copies: &mut Vec<CliffordOp>,
) -> Result<Register, LowerError> {
    let mut qubits = Vec::with_capacity(reg.width());
    let mut copied = false;
    for &q in &reg.qubits {
        if seen.contains(&q) {
            let c = alloc.take(1)?[0];
            copies.push(CliffordOp::cx(q, c));
            qubits.push(c);
            copied = true;
        } else {
            qubits.push(q);
        }
    }
    seen.extend(&qubits);
    let name = if copied { format!("{}'", reg.name) } else { reg.name.clone() };
    Ok(Register::new(name, qubits))
}

fn split_rec(
    pred: &Predicate,
    alloc: &mut Alloc,
    seen: &mut Vec<usize>,
    copies: &mut Vec<CliffordOp>,
) -> Result<Predicate, LowerError> {
    let mut r = |reg: &Register| split_reg(reg, alloc, seen, copies);
    Ok(match pred {
        Predicate::True => Predicate::True,
        Predicate::False => Predicate::False,
        Predicate::EqVars(a, b) => Predicate::EqVars(r(a)?, r(b)?),
        Predicate::EqConst(a, bits) => Predicate::EqConst(r(a)?, bits.clone()),
        Predicate::Gt(a, b) => Predicate::Gt(r(a)?, r(b)?),
        Predicate::Inc(a, b) => Predicate::Inc(r(a)?, r(b)?),
        Predicate::TruthTable { regs, table } => Predicate::TruthTable {
            regs: regs.iter().map(&mut r).collect::<Result<_, _>>()?,
            table: table.clone(),
        },
        Predicate::Not(p) => Predicate::not(split_rec(p, alloc, seen, copies)?),
        Predicate::And(ps) => Predicate::And(
            ps.iter().map(|p| split_rec(p, alloc, seen, copies)).collect::<Result<_, _>>()?,
        ),
        Predicate::Or(ps) => Predicate::Or(
            ps.iter().map(|p| split_rec(p, alloc, seen, copies)).collect::<Result<_, _>>()?,
        ),
    })
}

fn is_zero_angle(theta: f64) -> bool {
    let t = theta.rem_euclid(2.0 * PI);
    t < ANGLE_EPS || 2.0 * PI - t < ANGLE_EPS
}

/// `Some(m)` when `θ ≡ m·π/2 (mod 2π)`.
fn quarter_turns(theta: f64) -> Option<u8> {
    let q = theta / FRAC_PI_2;
    let r = q.round();
    ((q - r).abs() * FRAC_PI_2 < ANGLE_EPS).then(|| r.rem_euclid(4.0) as u8)
}

fn phase_cliffords(turns: u8, q: usize) -> Vec<CliffordOp> {
    match turns {
        1 => vec![CliffordOp::s(q)],
        2 => vec![CliffordOp::z(q)],
        3 => vec![CliffordOp::sdg(q)],
        _ => vec![],
    }
}

#[derive(Clone, Copy, Debug)]
enum Diagonal {
    /// `e^{iθ}` where the predicate holds.
    Phase(f64),
    /// `diag(1, e^{iθ})` on the target where the predicate holds.
    CondRz(f64),
    /// `diag(e^{ip0}, e^{ip1})` on the target where the predicate holds.
    CondDiag(f64, f64),
}

impl Diagonal {
    fn is_identity(self) -> bool {
        match self {
            Diagonal::Phase(t) | Diagonal::CondRz(t) => is_zero_angle(t),
            Diagonal::CondDiag(a, b) => is_zero_angle(a) && is_zero_angle(b),
        }
    }
}

struct Builder {
    ops: Vec<GadgetOp>,
    slots: Vec<Slot>,
    comp: u32,
    alloc: Alloc,
}

impl Builder {
    fn new(base: usize, config: &LowerConfig) -> Self {
        Builder { ops: Vec::new(), slots: Vec::new(), comp: 0, alloc: Alloc::new(base, config.ancilla_budget) }
    }

    fn clifford(&mut self, op: CliffordOp) {
        self.ops.push(GadgetOp::Clifford(op));
    }

    fn h(&mut self, q: usize) {
        self.clifford(CliffordOp::h(q));
    }

    /// Splits `pred`, builds its effectual state with `build`, and injects `diag`.
    fn inject_with(
        &mut self,
        pred: &Predicate,
        target: Option<usize>,
        diag: Diagonal,
        build: impl FnOnce(&Predicate) -> Result<EffectualDecomp, LowerError>,
    ) -> Result<(), LowerError> {
        if diag.is_identity() {
            return Ok(());
        }
        let mark = self.alloc.mark();
        let (copies, split) = split_shared_vars(pred, &mut self.alloc)?;
        let eff = build(&split)?;
        let magic = match diag {
            Diagonal::Phase(t) => build_magic_phase(&eff, t),
            Diagonal::CondRz(t) => build_magic_cond_rz(&eff, t),
            Diagonal::CondDiag(p0, p1) => build_magic_cond_diag(&eff, p0, p1),
        };
        let mut vars = eff.vars.clone();
        vars.extend(target);
        debug_assert_eq!(vars.len(), magic.arity);
        let anc = self.alloc.take(magic.arity)?;
        for op in &copies {
            self.clifford(*op);
        }
        self.ops.push(GadgetOp::Slot(self.slots.len()));
        self.slots.push(Slot { qubits: anc.clone(), decomp: magic });
        for (&v, &m) in vars.iter().zip(&anc) {
            self.clifford(CliffordOp::cx(v, m));
        }
        for &m in &anc {
            self.ops.push(GadgetOp::Project { qubit: m, outcome: false });
        }
        for op in copies.iter().rev() {
            self.clifford(*op);
        }
        self.comp += anc.len() as u32;
        self.alloc.release(mark);
        Ok(())
    }

    fn inject(&mut self, pred: &Predicate, target: Option<usize>, diag: Diagonal) -> Result<(), LowerError> {
        self.inject_with(pred, target, diag, |p| Ok(build_effectual(p)?))
    }

    /// `C_φ Rx(θ) = H · C_φ Rz(θ) · H` on the target.
    fn oracle_rx(&mut self, pred: &Predicate, theta: f64, target: usize) -> Result<(), LowerError> {
        if Diagonal::CondRz(theta).is_identity() {
            return Ok(());
        }
        self.h(target);
        self.inject(pred, Some(target), Diagonal::CondRz(theta))?;
        self.h(target);
        Ok(())
    }

    fn terms(&self) -> u128 {
        self.slots.iter().fold(1u128, |acc, s| acc.saturating_mul(s.terms() as u128))
    }

    fn finish(self, source: &Gate) -> Gadget {
        Gadget {
            ops: self.ops,
            slots: self.slots,
            ancilla_count: self.alloc.used(),
            compensation_exp: self.comp,
            source: source.clone(),
        }
    }
}

fn single(q: usize) -> Register {
    Register::new(format!("q{q}"), vec![q])
}

fn all_ones(reg: Register) -> Predicate {
    let k = reg.width();
    Predicate::EqConst(reg, vec![true; k])
}

fn controls_pred(controls: &[usize]) -> Predicate {
    all_ones(Register::new("ctl", controls.to_vec()))
}

/// `U = e^{iδ} P(α) H P(β) H P(γ)` applied as three controlled diagonals.
/// The phase `e^{iδ}` rides on the last layer, or on the first when `first_carries_phase`.
fn oracle_u_direct(
    pred: &Predicate,
    target: usize,
    e: &EulerAngles,
    first_carries_phase: bool,
    base: usize,
    config: &LowerConfig,
    source: &Gate,
) -> Result<Gadget, LowerError> {
    let mut b = Builder::new(base, config);
    if first_carries_phase {
        b.inject(pred, Some(target), Diagonal::CondDiag(e.delta, e.delta + e.gamma))?;
        b.oracle_rx(pred, e.beta, target)?;
        b.inject(pred, Some(target), Diagonal::CondRz(e.alpha))?;
    } else {
        b.inject(pred, Some(target), Diagonal::CondRz(e.gamma))?;
        b.oracle_rx(pred, e.beta, target)?;
        b.inject(pred, Some(target), Diagonal::CondDiag(e.delta, e.delta + e.alpha))?;
    }
    Ok(b.finish(source))
}

/// Copies `φ(x)` into one ancilla, applies the rotations controlled on it,
/// then erases it with `H` and a projection onto `|0⟩`.
fn oracle_u_ancilla(
    pred: &Predicate,
    target: usize,
    e: &EulerAngles,
    base: usize,
    config: &LowerConfig,
    source: &Gate,
) -> Result<Gadget, LowerError> {
    let mut b = Builder::new(base, config);
    let a = b.alloc.take(1)?[0];
    b.oracle_rx(pred, PI, a)?;
    let flag = Predicate::EqConst(single(a), vec![true]);
    b.inject(&flag, Some(target), Diagonal::CondRz(e.gamma))?;
    b.oracle_rx(&flag, e.beta, target)?;
    match quarter_turns(e.delta) {
        Some(turns) => {
            for op in phase_cliffords(turns, a) {
                b.clifford(op);
            }
            b.inject(&flag, Some(target), Diagonal::CondRz(e.alpha))?;
        }
        None => b.inject(&flag, Some(target), Diagonal::CondDiag(e.delta, e.delta + e.alpha))?,
    }
    b.h(a);
    b.ops.push(GadgetOp::Project { qubit: a, outcome: false });
    b.comp += 1;
    Ok(b.finish(source))
}

/// Tries both angle sets of `U` on every route and keeps the fewest terms;
/// the ancilla route wins ties.
fn oracle_u(
    pred: &Predicate,
    target: usize,
    u: &Unitary,
    base: usize,
    config: &LowerConfig,
    source: &Gate,
) -> Result<Gadget, LowerError> {
    let e = euler_zxz(u).ok_or(LowerError::NonUnitary)?;
    let mut best: Option<Gadget> = None;
    let mut last_err = None;
    for angles in [e, e.twin()] {
        let candidates = [
            oracle_u_ancilla(pred, target, &angles, base, config, source),
            oracle_u_direct(pred, target, &angles, false, base, config, source),
            oracle_u_direct(pred, target, &angles, true, base, config, source),
        ];
        for g in candidates {
            match g {
                Ok(g) if best.as_ref().is_none_or(|b| g.terms() < b.terms()) => best = Some(g),
                Ok(_) => {}
                Err(err) => last_err = Some(err),
            }
        }
    }
    best.ok_or_else(|| last_err.expect("at least one route was tried"))
}

/// Predicate `y = g(x)` for a query function.
fn graph_predicate(input: &Register, output: &Register, func: &QueryFn) -> Predicate {
    match func {
        QueryFn::Increment => Predicate::Inc(input.clone(), output.clone()),
        QueryFn::Table(t) => Predicate::TruthTable { regs: vec![input.clone(), output.clone()], table: t.clone() },
    }
}

/// `H` on the output, `flag ^= [P(x, y)]`, keep `flag = 1`, reset the flag.
fn query(
    input: &Register,
    output: &Register,
    pred: &Predicate,
    disjoint_branches: bool,
    base: usize,
    config: &LowerConfig,
    source: &Gate,
) -> Result<Gadget, LowerError> {
    let mut b = Builder::new(base, config);
    let flag = b.alloc.take(1)?[0];
    let _ = input;
    for &q in &output.qubits {
        b.h(q);
    }
    b.h(flag);
    if disjoint_branches {
        b.inject_with(pred, Some(flag), Diagonal::CondRz(PI), |p| match p {
            Predicate::Or(kids) if kids.len() == 2 => {
                Ok(disjoint_or(&build_effectual(&kids[0])?, &build_effectual(&kids[1])?))
            }
            other => Ok(build_effectual(other)?),
        })?;
    } else {
        b.inject(pred, Some(flag), Diagonal::CondRz(PI))?;
    }
    b.h(flag);
    b.ops.push(GadgetOp::Project { qubit: flag, outcome: true });
    b.clifford(CliffordOp::x(flag));
    b.comp += output.width() as u32;
    Ok(b.finish(source))
}

/// Gadget for one non-Clifford gate; ancillas are numbered from `base`.
pub fn lower_gate(gate: &Gate, base: usize, config: &LowerConfig) -> Result<Gadget, LowerError> {
    let mut b = Builder::new(base, config);
    match gate {
        Gate::Clifford(_) => return Err(LowerError::Unsupported("clifford")),
        Gate::Postselect { .. } => return Err(LowerError::Unsupported("postselect")),
        Gate::Rz { theta, qubit } => rz(&mut b, *theta, *qubit)?,
        Gate::T(q) => rz(&mut b, PI / 4.0, *q)?,
        Gate::OracleRz { pred, theta } => b.inject(pred, None, Diagonal::Phase(*theta))?,
        Gate::OracleX { pred, target } => b.oracle_rx(pred, PI, *target)?,
        Gate::OracleRx { pred, theta, target } => b.oracle_rx(pred, *theta, *target)?,
        Gate::Mcx { controls, target } => b.oracle_rx(&controls_pred(controls), PI, *target)?,
        Gate::Mcu { controls, target, u } => return oracle_u(&controls_pred(controls), *target, u, base, config, gate),
        Gate::OracleU { pred, target, u } => return oracle_u(pred, *target, u, base, config, gate),
        Gate::Query { input, output, func } => {
            return query(input, output, &graph_predicate(input, output, func), false, base, config, gate)
        }
        Gate::CondQuery { pred, input, output, func } => {
            // y = h(x) with h = g where φ holds and 0 elsewhere; the two branches never hold together.
            let zero = Predicate::EqConst(output.clone(), vec![false; output.width()]);
            let p = Predicate::Or(vec![
                Predicate::And(vec![pred.clone(), graph_predicate(input, output, func)]),
                Predicate::And(vec![Predicate::not(pred.clone()), zero]),
            ]);
            return query(input, output, &p, true, base, config, gate);
        }
    }
    debug_assert!(b.terms() >= 1);
    Ok(b.finish(gate))
}

fn rz(b: &mut Builder, theta: f64, q: usize) -> Result<(), LowerError> {
    match quarter_turns(theta) {
        Some(turns) => {
            for op in phase_cliffords(turns, q) {
                b.clifford(op);
            }
            Ok(())
        }
        None => b.inject(&Predicate::EqConst(single(q), vec![true]), None, Diagonal::Phase(theta)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateReport {
    pub gate_index: usize,
    pub name: &'static str,
    pub terms: u128,
    pub skeleton_size: usize,
    pub ancillas: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GadgetizedCircuit {
    /// Qubits of the source circuit.
    pub num_qubits: usize,
    /// Source qubits plus the shared ancilla pool.
    pub total_qubits: usize,
    pub ops: Vec<GadgetOp>,
    pub slots: Vec<Slot>,
    /// The summed amplitude is multiplied by `2^{compensation_exp/2}`.
    pub compensation_exp: u32,
    /// Product of slot term counts, saturating.
    pub chi: u128,
    pub report: Vec<GateReport>,
}

impl GadgetizedCircuit {
    pub fn compensation(&self) -> f64 {
        crate::decomp::sqrt2_pow(self.compensation_exp as i64)
    }

    pub fn pool_size(&self) -> usize {
        self.total_qubits - self.num_qubits
    }

    /// Largest per-gate skeleton.
    pub fn mu(&self) -> usize {
        self.report.iter().map(|r| r.skeleton_size).max().unwrap_or(0)
    }
}

pub fn gadgetize(circuit: &Circuit, config: &LowerConfig) -> Result<GadgetizedCircuit, LowerError> {
    if let Some(d) = validate(circuit).first() {
        return Err(LowerError::Invalid(d.to_string()));
    }
    let n = circuit.num_qubits;
    let mut out = GadgetizedCircuit {
        num_qubits: n,
        total_qubits: n,
        ops: Vec::new(),
        slots: Vec::new(),
        compensation_exp: 0,
        chi: 1,
        report: Vec::new(),
    };
    for (i, gate) in circuit.gates.iter().enumerate() {
        match gate {
            Gate::Clifford(op) => out.ops.push(GadgetOp::Clifford(*op)),
            Gate::Postselect { qubit, outcome } => {
                out.ops.push(GadgetOp::Project { qubit: *qubit, outcome: *outcome })
            }
            _ => {
                let g = lower_gate(gate, n, config)?;
                let offset = out.slots.len();
                out.report.push(GateReport {
                    gate_index: i,
                    name: gate.name(),
                    terms: g.terms(),
                    skeleton_size: g.skeleton_size(),
                    ancillas: g.ancilla_count,
                });
                out.chi = out.chi.saturating_mul(g.terms());
                out.total_qubits = out.total_qubits.max(n + g.ancilla_count);
                out.compensation_exp += g.compensation_exp;
                out.ops.extend(g.ops.iter().map(|op| match op {
                    GadgetOp::Slot(j) => GadgetOp::Slot(j + offset),
                    other => *other,
                }));
                out.slots.extend(g.slots);
            }
        }
    }
    Ok(out)
}

/// Per-gate term counts and skeleton sizes without keeping the op stream.
#[derive(Clone, Debug, PartialEq)]
pub struct RankReport {
    pub gates: Vec<GateReport>,
    pub chi: u128,
    pub mu: usize,
    pub pool_size: usize,
}

pub fn rank_report(circuit: &Circuit, config: &LowerConfig) -> Result<RankReport, LowerError> {
    let gc = gadgetize(circuit, config)?;
    Ok(RankReport { chi: gc.chi, mu: gc.mu(), pool_size: gc.pool_size(), gates: gc.report })
}

/// Counts `CX` gates and projections in a gadget's op stream.
pub fn count_ops(ops: &[GadgetOp]) -> (usize, usize) {
    let cx = ops
        .iter()
        .filter(|op| matches!(op, GadgetOp::Clifford(c) if c.kind == CliffordKind::CX))
        .count();
    let proj = ops.iter().filter(|op| matches!(op, GadgetOp::Project { .. })).count();
    (cx, proj)
}
