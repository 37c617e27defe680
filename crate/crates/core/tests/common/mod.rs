//! Generators and dense helpers shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use gadgetsim::bench::{BenchmarkSpec, Family};
use gadgetsim::ir::{Gate, Predicate, QueryFn, Register, TruthTable, Unitary};
use gadgetsim::lowering::{lower_gate, Gadget, GadgetOp, LowerConfig};
use gadgetsim::reference::{dense_of_decomp, DenseState};
use gadgetsim::stab::CliffordOp;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CAP: usize = 16;

pub struct Case {
    pub name: &'static str,
    pub n: usize,
    pub gate: Gate,
    /// Qubits that must start in |0⟩ (query outputs).
    pub zeroed: Vec<usize>,
}

fn case(name: &'static str, n: usize, gate: Gate) -> Case {
    Case { name, n, gate, zeroed: vec![] }
}

/// No Euler angle of this unitary, nor its global phase, is a multiple of π/2.
pub fn generic_u() -> Unitary {
    Unitary::phase(0.3)
        .mul(&Unitary::h())
        .mul(&Unitary::phase(1.1))
        .mul(&Unitary::h())
        .mul(&Unitary::phase(0.5))
        .scaled(Complex64::from_polar(1.0, 0.7))
}

pub fn gadget_cases() -> Vec<Case> {
    let x = Register::range("x", 0, 1);
    let y = Register::range("y", 2, 3);
    let x3 = Register::range("x", 0, 2);
    let shared = Predicate::Or(vec![
        Predicate::Gt(x.clone(), y.clone()),
        Predicate::not(Predicate::eq_const(x.clone(), 2)),
    ]);
    let a = Register::range("a", 0, 0);
    let b = Register::range("b", 1, 1);
    let table = TruthTable::new(3, vec![0b001, 0b011, 0b100, 0b111]);
    // y = 3 - x
    let query_table = TruthTable::new(4, vec![0b0011, 0b0110, 0b1001, 0b1100]);
    let mut out = vec![
        case("rz", 2, Gate::Rz { theta: 0.3, qubit: 1 }),
        case("t", 1, Gate::T(0)),
        case("rz-clifford", 1, Gate::Rz { theta: -PI / 2.0, qubit: 0 }),
        case("mcx", 4, Gate::Mcx { controls: vec![0, 2, 1], target: 3 }),
        case("mcx-single", 2, Gate::Mcx { controls: vec![1], target: 0 }),
        case("mcu", 4, Gate::Mcu { controls: vec![0, 1, 2], target: 3, u: generic_u() }),
        case("mcu-hadamard", 3, Gate::Mcu { controls: vec![0, 1], target: 2, u: Unitary::h() }),
        case("oracle-rz-gt", 4, Gate::OracleRz { pred: Predicate::Gt(x.clone(), y.clone()), theta: 1.1 }),
        case("oracle-rz-shared", 4, Gate::OracleRz { pred: shared.clone(), theta: PI }),
        case("oracle-x-inc", 5, Gate::OracleX { pred: Predicate::Inc(x.clone(), y.clone()), target: 4 }),
        case("oracle-x-eq", 5, Gate::OracleX { pred: Predicate::EqVars(x.clone(), y.clone()), target: 4 }),
        case("oracle-rx-shared", 5, Gate::OracleRx { pred: shared.clone(), theta: 0.7, target: 4 }),
        case(
            "oracle-rx-table",
            4,
            Gate::OracleRx {
                pred: Predicate::TruthTable { regs: vec![x3.clone()], table: table.clone() },
                theta: -2.2,
                target: 3,
            },
        ),
        case("oracle-u-gt", 5, Gate::OracleU { pred: Predicate::Gt(x.clone(), y.clone()), target: 4, u: generic_u() }),
        case("oracle-u-shared", 5, Gate::OracleU { pred: shared, target: 4, u: generic_u() }),
        case(
            "oracle-u-not",
            4,
            Gate::OracleU { pred: Predicate::not(Predicate::eq_const(x3.clone(), 5)), target: 3, u: Unitary::x() },
        ),
    ];
    let q = |name, n, gate, zeroed| Case { name, n, gate, zeroed };
    out.push(q("query-inc", 4, Gate::Query { input: x.clone(), output: y.clone(), func: QueryFn::Increment }, vec![2, 3]));
    out.push(q(
        "query-table",
        4,
        Gate::Query { input: x.clone(), output: y.clone(), func: QueryFn::Table(query_table) },
        vec![2, 3],
    ));
    out.push(q(
        "cond-query-inc",
        3,
        Gate::CondQuery {
            pred: Predicate::eq_const(Register::range("z", 2, 2), 1),
            input: a.clone(),
            output: b.clone(),
            func: QueryFn::Increment,
        },
        vec![1],
    ));
    out.push(q(
        "cond-query-self",
        2,
        Gate::CondQuery {
            pred: Predicate::eq_const(a.clone(), 1),
            input: a,
            output: b,
            func: QueryFn::Table(TruthTable::new(2, vec![0b01, 0b10])),
        },
        vec![1],
    ));
    out
}

pub fn expand_gadget(g: &Gadget, input: &DenseState) -> DenseState {
    let mut s = input.extended(g.ancilla_count, CAP).unwrap();
    for op in &g.ops {
        match op {
            GadgetOp::Clifford(c) => s.apply_clifford(c),
            GadgetOp::Project { qubit, outcome } => s.project(*qubit, *outcome),
            GadgetOp::Slot(j) => {
                let slot = &g.slots[*j];
                let magic = dense_of_decomp(slot.decomp.arity, &slot.decomp.terms).unwrap();
                s.load_local(&slot.qubits, &magic);
            }
        }
    }
    let c = 2f64.sqrt().powi(g.compensation_exp as i32);
    for a in &mut s.amps {
        *a *= c;
    }
    s
}

pub fn basis_input(n: usize, zeroed: &[usize], rng: &mut ChaCha8Rng) -> DenseState {
    let mut s = DenseState::zero_state(n, CAP).unwrap();
    for q in 0..n {
        if !zeroed.contains(&q) && rng.gen_bool(0.5) {
            s.apply_clifford(&CliffordOp::x(q));
        }
    }
    s
}

pub fn stabilizer_input(n: usize, zeroed: &[usize], rng: &mut ChaCha8Rng) -> DenseState {
    let free: Vec<usize> = (0..n).filter(|q| !zeroed.contains(q)).collect();
    let mut s = DenseState::zero_state(n, CAP).unwrap();
    for _ in 0..6 * free.len() {
        let a = free[rng.gen_range(0..free.len())];
        let op = match rng.gen_range(0..4) {
            0 => CliffordOp::h(a),
            1 => CliffordOp::s(a),
            2 => CliffordOp::x(a),
            _ if free.len() > 1 => {
                let mut b = a;
                while b == a {
                    b = free[rng.gen_range(0..free.len())];
                }
                CliffordOp::cx(a, b)
            }
            _ => CliffordOp::h(a),
        };
        s.apply_clifford(&op);
    }
    s
}

/// Largest amplitude error of the expanded gadget over 50 basis and 20 stabilizer inputs.
pub fn gadget_error(c: &Case, seed: u64) -> Result<f64, String> {
    let g = lower_gate(&c.gate, c.n, &LowerConfig::default()).map_err(|e| e.to_string())?;
    if c.n + g.ancilla_count > CAP {
        return Err(format!("{}: {} qubits", c.name, c.n + g.ancilla_count));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for i in 0..70 {
        let input = if i < 50 { basis_input(c.n, &c.zeroed, &mut rng) } else { stabilizer_input(c.n, &c.zeroed, &mut rng) };
        let mut want = input.clone();
        want.apply_gate(&c.gate);
        let want = want.extended(g.ancilla_count, CAP).unwrap();
        let got = expand_gadget(&g, &input);
        let err = got.amps.iter().zip(&want.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        worst = worst.max(err);
    }
    Ok(worst)
}

/// Hands out consecutive qubit indices for predicate registers.
pub struct QubitPool {
    next: usize,
    count: usize,
}

impl QubitPool {
    pub fn new() -> Self {
        QubitPool { next: 0, count: 0 }
    }

    pub fn reg(&mut self, k: usize) -> Register {
        let r = Register::range(format!("r{}", self.count), self.next, self.next + k - 1);
        self.next += k;
        self.count += 1;
        r
    }

    pub fn used(&self) -> usize {
        self.next
    }
}

pub fn random_atom(k: usize, kind: usize, pool: &mut QubitPool, rng: &mut ChaCha8Rng) -> Predicate {
    match kind % 5 {
        0 => Predicate::EqVars(pool.reg(k), pool.reg(k)),
        1 => {
            let v = rng.gen_range(0..1u128 << k);
            Predicate::eq_const(pool.reg(k), v)
        }
        2 => Predicate::Gt(pool.reg(k), pool.reg(k)),
        3 => Predicate::Inc(pool.reg(k), pool.reg(k)),
        _ => {
            let rows: Vec<u64> = (0..1u64 << k).filter(|_| rng.gen_bool(0.4)).collect();
            Predicate::TruthTable { regs: vec![pool.reg(k)], table: TruthTable::new(k, rows) }
        }
    }
}

fn random_tree(depth: usize, pool: &mut QubitPool, budget: usize, rng: &mut ChaCha8Rng) -> Predicate {
    let room = budget.saturating_sub(pool.used());
    if room == 0 {
        return if rng.gen_bool(0.5) { Predicate::True } else { Predicate::False };
    }
    if depth == 0 || room < 4 || rng.gen_bool(0.25) {
        let kind = if room < 2 { 1 } else { rng.gen_range(0..5) };
        let max_k = if matches!(kind, 1 | 4) { room.clamp(1, 3) } else { (room / 2).clamp(1, 2) };
        return random_atom(rng.gen_range(1..=max_k), kind, pool, rng);
    }
    match rng.gen_range(0..3) {
        0 => Predicate::not(random_tree(depth - 1, pool, budget, rng)),
        op => {
            let n = rng.gen_range(2..=3);
            let kids = (0..n).map(|_| random_tree(depth - 1, pool, budget, rng)).collect();
            if op == 1 {
                Predicate::And(kids)
            } else {
                Predicate::Or(kids)
            }
        }
    }
}

/// Atoms for every width 1..=6 and `nested` random Not/And/Or trees of depth ≤ 3.
pub fn predicate_corpus(nested: usize, seed: u64) -> Vec<Predicate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for k in 1..=6 {
        for kind in 0..5 {
            out.push(random_atom(k, kind, &mut QubitPool::new(), &mut rng));
        }
    }
    for _ in 0..nested {
        out.push(random_tree(3, &mut QubitPool::new(), 12, &mut rng));
    }
    out
}

fn terms_of(pred: &Predicate) -> Result<usize, String> {
    gadgetsim::decomp::build_effectual(pred).map(|d| d.terms.len()).map_err(|e| e.to_string())
}

/// Checks the term-count bound at every node of `pred`.
pub fn check_term_bounds(pred: &Predicate) -> Result<(), String> {
    let t = terms_of(pred)?;
    let fail = |bound: usize| Err(format!("{} terms, bound {bound}: {pred:?}", t));
    match pred {
        Predicate::EqVars(..) | Predicate::EqConst(..) if t != 1 => fail(1),
        Predicate::Gt(a, _) if t > a.width() => fail(a.width()),
        Predicate::Inc(a, _) if t > a.width() + 1 => fail(a.width() + 1),
        Predicate::Not(p) => {
            check_term_bounds(p)?;
            let b = terms_of(p)? + 1;
            if t > b {
                return fail(b);
            }
            Ok(())
        }
        Predicate::And(ps) => {
            let mut b = 1;
            for p in ps {
                check_term_bounds(p)?;
                b *= terms_of(p)?;
            }
            if t != b {
                return fail(b);
            }
            Ok(())
        }
        Predicate::Or(ps) => {
            let mut b: Option<usize> = None;
            for p in ps {
                check_term_bounds(p)?;
                let tp = terms_of(p)?;
                b = Some(match b {
                    None => tp,
                    Some(acc) => acc + tp + acc * tp,
                });
            }
            let b = b.unwrap_or(0);
            if t > b {
                return fail(b);
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Largest difference between the decomposition and the dense effectual vector.
pub fn decomposition_error(pred: &Predicate) -> Result<f64, String> {
    let d = gadgetsim::decomp::build_effectual(pred).map_err(|e| e.to_string())?;
    let got = dense_of_decomp(d.vars.len(), &d.terms).map_err(|e| e.to_string())?;
    let want = gadgetsim::reference::dense_effectual(pred).map_err(|e| e.to_string())?;
    let count = gadgetsim::reference::model_count(pred).map_err(|e| e.to_string())?;
    if count != d.model_count {
        return Err(format!("model count {} vs {count}", d.model_count));
    }
    Ok(got.amps.iter().zip(&want.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
}

/// Random Clifford gates interleaved with projections.
pub fn random_fragment(n: usize, len: usize, rng: &mut ChaCha8Rng) -> Vec<gadgetsim::stab::FragmentOp> {
    use gadgetsim::stab::FragmentOp;
    (0..len)
        .map(|_| {
            let a = rng.gen_range(0..n);
            let b = if n > 1 { (a + rng.gen_range(1..n)) % n } else { a };
            match rng.gen_range(0..16) {
                0..=2 => FragmentOp::Gate(CliffordOp::h(a)),
                3..=4 => FragmentOp::Gate(CliffordOp::s(a)),
                5 => FragmentOp::Gate(CliffordOp::sdg(a)),
                6 => FragmentOp::Gate(CliffordOp::x(a)),
                7 => FragmentOp::Gate(CliffordOp::z(a)),
                8..=10 if n > 1 => FragmentOp::Gate(CliffordOp::cx(a, b)),
                11..=12 if n > 1 => FragmentOp::Gate(CliffordOp::cz(a, b)),
                13 => FragmentOp::Project { qubit: a, outcome: rng.gen_bool(0.5) },
                _ => FragmentOp::Gate(CliffordOp::h(a)),
            }
        })
        .collect()
}

/// Benchmark specs covering every family at several sizes.
pub fn corpus() -> Vec<BenchmarkSpec> {
    let mut specs = Vec::new();
    for seed in 0..4 {
        specs.push(BenchmarkSpec::new(Family::CvoQram).n(3 + seed as usize).k(1 + seed as usize).seed(seed));
        specs.push(BenchmarkSpec::new(Family::OracleChain).k(1 + seed as usize).seed(seed));
        specs.push(BenchmarkSpec::new(Family::GroverAllNeg).n(2 + seed as usize));
        specs.push(BenchmarkSpec::new(Family::GroverCnf).n(3 + seed as usize).seed(seed));
        specs.push(BenchmarkSpec::new(Family::Comparator).k(1 + seed as usize));
    }
    specs
}
