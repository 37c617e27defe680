//! Seeded generators for the benchmark families.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ir::{Circuit, Gate, Predicate, Register, TruthTable, Unitary};
use crate::stab::CliffordOp;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BenchError {
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("{family}: {message}")]
    BadParams { family: Family, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    CvoQram,
    OracleChain,
    GroverAllNeg,
    GroverCnf,
    Comparator,
}

impl Family {
    pub const ALL: [Family; 5] =
        [Family::CvoQram, Family::OracleChain, Family::GroverAllNeg, Family::GroverCnf, Family::Comparator];

    pub fn name(self) -> &'static str {
        match self {
            Family::CvoQram => "cvo-qram",
            Family::OracleChain => "oracle-chain",
            Family::GroverAllNeg => "grover-allneg",
            Family::GroverCnf => "grover-cnf",
            Family::Comparator => "comparator",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| BenchError::UnknownFamily(s.to_string()))
    }
}

/// Size parameters of one instance. Which fields are read depends on the family:
/// cvo-qram uses `n` data qubits and `k` patterns, oracle-chain uses `k` oracles,
/// the Grover families use `n` and `rounds`, the comparator uses `k` bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchmarkSpec {
    pub family: Family,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub rounds: Option<usize>,
    pub seed: u64,
}

impl BenchmarkSpec {
    pub fn new(family: Family) -> Self {
        BenchmarkSpec { family, n: None, k: None, rounds: None, seed: 0 }
    }

    pub fn n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn rounds(mut self, r: usize) -> Self {
        self.rounds = Some(r);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn need(&self, field: Option<usize>, name: &str, min: usize) -> Result<usize, BenchError> {
        match field {
            Some(v) if v >= min => Ok(v),
            Some(v) => Err(self.bad(format!("{name} must be at least {min}, got {v}"))),
            None => Err(self.bad(format!("missing parameter {name}"))),
        }
    }

    fn bad(&self, message: String) -> BenchError {
        BenchError::BadParams { family: self.family, message }
    }
}

/// A generated circuit and the basis string whose probability the benchmark reports.
#[derive(Clone, Debug, PartialEq)]
pub struct Benchmark {
    pub circuit: Circuit,
    pub target: Vec<bool>,
    pub rounds: Option<usize>,
}

pub fn generate(spec: &BenchmarkSpec) -> Result<Benchmark, BenchError> {
    match spec.family {
        Family::CvoQram => {
            let n = spec.need(spec.n, "n", 1)?;
            let k = spec.need(spec.k, "k", 1)?;
            if n > 20 || k as u64 > 1u64 << n {
                return Err(spec.bad(format!("need n <= 20 and k <= 2^n, got n={n}, k={k}")));
            }
            Ok(cvo_qram(n, k, spec.seed))
        }
        Family::OracleChain => Ok(oracle_chain(spec.need(spec.k, "k", 1)?, spec.seed)),
        Family::GroverAllNeg => {
            let n = spec.need(spec.n, "n", 1)?;
            let rounds = spec.rounds.unwrap_or_else(|| optimal_rounds(n, 1));
            Ok(grover_allneg(n, rounds))
        }
        Family::GroverCnf => Ok(grover_cnf(spec.need(spec.n, "n", 1)?, spec.rounds, spec.seed)),
        Family::Comparator => Ok(comparator(spec.need(spec.k, "k", 1)?)),
    }
}

/// `floor(π/4 · sqrt(2^n / solutions))`, at least 1.
pub fn optimal_rounds(n: usize, solutions: u128) -> usize {
    let ratio = 2f64.powi(n as i32) / solutions.max(1) as f64;
    ((PI / 4.0 * ratio.sqrt()).floor() as usize).max(1)
}

fn bits_of(v: u64, width: usize) -> Vec<bool> {
    (0..width).map(|i| (v >> (width - 1 - i)) & 1 == 1).collect()
}

/// Patterns and amplitudes prepared by `cvo-qram(n, k, seed)`, as full basis
/// strings over the flag and data qubits.
pub fn cvo_qram_targets(n: usize, k: usize, seed: u64) -> Vec<(Vec<bool>, Complex64)> {
    cvo_qram_plan(n, k, seed).into_iter().map(|p| (p.target, p.amplitude)).collect()
}

struct QramStep {
    pattern: Vec<bool>,
    u: Unitary,
    target: Vec<bool>,
    amplitude: Complex64,
}

/// A unitary with second column `(a, b)` and no global phase in its
/// `P(α) H P(β) H P(γ)` form. Only the second column acts on the flagged branch,
/// so the first column is free.
fn split_unitary(a: Complex64, b: f64) -> Unitary {
    let beta = 2.0 * b.clamp(0.0, 1.0).acos();
    let gamma = a.arg() + FRAC_PI_2 - beta / 2.0;
    let alpha = -gamma - beta / 2.0;
    Unitary::phase(alpha).mul(&Unitary::h()).mul(&Unitary::phase(beta)).mul(&Unitary::h()).mul(&Unitary::phase(gamma))
}

fn cvo_qram_plan(n: usize, k: usize, seed: u64) -> Vec<QramStep> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let patterns = sample(&mut rng, 1usize << n, k).into_vec();
    let raw: Vec<Complex64> =
        (0..k).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    // Residual amplitude left on flag = 1 before each step.
    let mut residual = 1.0f64;
    let mut steps = Vec::with_capacity(k);
    for (j, (&p, z)) in patterns.iter().zip(&raw).enumerate() {
        let psi = z / norm;
        let last = j + 1 == k;
        let a = if last { psi / psi.norm() } else { psi / residual };
        let b = if last { 0.0 } else { (1.0 - a.norm_sqr()).max(0.0).sqrt() };
        let u = split_unitary(a, b);
        let pattern = bits_of(p as u64, n);
        let mut target = vec![false];
        target.extend(&pattern);
        steps.push(QramStep { pattern, u, target, amplitude: a * residual });
        residual *= b;
    }
    steps
}

/// Flag qubit 0 starts in `|1⟩`; data qubits are `1..=n`. Each pattern copies
/// itself onto the flagged branch, splits off its amplitude with one MCU, and
/// is uncomputed.
fn cvo_qram(n: usize, k: usize, seed: u64) -> Benchmark {
    let mut c = Circuit::new(n + 1);
    c.add_register(Register::new("flag", vec![0]));
    c.add_register(Register::range("d", 1, n));
    c.clifford(CliffordOp::x(0));
    let data: Vec<usize> = (1..=n).collect();
    let plan = cvo_qram_plan(n, k, seed);
    for step in &plan {
        let ones: Vec<usize> = data.iter().zip(&step.pattern).filter(|(_, &b)| b).map(|(&q, _)| q).collect();
        let zeros: Vec<usize> = data.iter().zip(&step.pattern).filter(|(_, &b)| !b).map(|(&q, _)| q).collect();
        for &q in &ones {
            c.clifford(CliffordOp::cx(0, q));
        }
        for &q in &zeros {
            c.clifford(CliffordOp::x(q));
        }
        c.push(Gate::Mcu { controls: data.clone(), target: 0, u: step.u });
        for &q in &zeros {
            c.clifford(CliffordOp::x(q));
        }
        for &q in &ones {
            c.clifford(CliffordOp::cx(0, q));
        }
    }
    let target = plan[0].target.clone();
    Benchmark { circuit: c, target, rounds: None }
}

/// `k` random 5-input oracles; oracle `j > 1` reads the previous target and four fresh qubits.
fn oracle_chain(k: usize, seed: u64) -> Benchmark {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(5 * k + 1);
    let mut inputs = vec![c.add_register(Register::range("x1", 0, 4))];
    let mut next = 5;
    for j in 1..=k {
        for reg in &inputs {
            if reg.name.starts_with('x') {
                for &q in &reg.qubits {
                    c.clifford(CliffordOp::h(q));
                }
            }
        }
        let rows: Vec<u64> = (0..32).filter(|_| rng.gen_bool(0.5)).collect();
        let target = next;
        next += 1;
        let pred = Predicate::TruthTable { regs: inputs.clone(), table: TruthTable::new(5, rows) };
        c.push(Gate::OracleX { pred, target });
        if j < k {
            let t = c.add_register(Register::new(format!("t{j}"), vec![target]));
            let x = c.add_register(Register::range(format!("x{}", j + 1), next, next + 3));
            next += 4;
            inputs = vec![t, x];
        }
    }
    let n = c.num_qubits;
    Benchmark { circuit: c, target: vec![false; n], rounds: None }
}

fn single_qubit_registers(c: &mut Circuit, n: usize) -> Vec<Register> {
    (0..n).map(|q| c.add_register(Register::new(format!("x{q}"), vec![q]))).collect()
}

fn hadamards(c: &mut Circuit, n: usize) {
    for q in 0..n {
        c.clifford(CliffordOp::h(q));
    }
}

fn all_zero(regs: &[Register]) -> Predicate {
    Predicate::And(regs.iter().map(|r| Predicate::EqConst(r.clone(), vec![false])).collect())
}

/// Phase oracle for `phi`, then reflection about the uniform state.
fn grover(c: &mut Circuit, regs: &[Register], phi: &Predicate, rounds: usize) {
    let n = regs.len();
    hadamards(c, n);
    for _ in 0..rounds {
        c.push(Gate::OracleRz { pred: phi.clone(), theta: PI });
        hadamards(c, n);
        c.push(Gate::OracleRz { pred: all_zero(regs), theta: PI });
        hadamards(c, n);
    }
}

fn grover_allneg(n: usize, rounds: usize) -> Benchmark {
    let mut c = Circuit::new(n);
    let regs = single_qubit_registers(&mut c, n);
    let phi = all_zero(&regs);
    grover(&mut c, &regs, &phi, rounds);
    Benchmark { circuit: c, target: vec![false; n], rounds: Some(rounds) }
}

/// Three clauses, each a disjunction of one random-polarity literal per variable.
fn grover_cnf(n: usize, rounds: Option<usize>, seed: u64) -> Benchmark {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::new(n);
    let regs = single_qubit_registers(&mut c, n);
    let mut falsifying = Vec::new();
    let clauses: Vec<Predicate> = (0..3)
        .map(|_| {
            let polarity: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            // The clause fails only where every literal is false.
            let fail: Vec<bool> = polarity.iter().map(|&p| !p).collect();
            if !falsifying.contains(&fail) {
                falsifying.push(fail);
            }
            Predicate::Or(regs.iter().zip(&polarity).map(|(r, &p)| Predicate::EqConst(r.clone(), vec![p])).collect())
        })
        .collect();
    let solutions = if n < 127 { (1u128 << n) - falsifying.len() as u128 } else { u128::MAX };
    let rounds = rounds.unwrap_or_else(|| optimal_rounds(n, solutions));
    grover(&mut c, &regs, &Predicate::And(clauses), rounds);
    Benchmark { circuit: c, target: vec![false; n], rounds: Some(rounds) }
}

fn comparator(k: usize) -> Benchmark {
    let mut c = Circuit::new(2 * k + 1);
    let x = c.add_register(Register::range("x", 0, k - 1));
    let y = c.add_register(Register::range("y", k, 2 * k - 1));
    let t = c.add_register(Register::new("t", vec![2 * k]));
    hadamards(&mut c, 2 * k);
    c.push(Gate::OracleX { pred: Predicate::Gt(x, y), target: t.qubits[0] });
    Benchmark { circuit: c, target: vec![false; 2 * k + 1], rounds: None }
}
