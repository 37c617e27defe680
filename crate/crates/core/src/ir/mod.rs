//! Circuit IR, predicate language and the `.hqc` text format.
//!
//! Rotation convention: `Rz(θ)` is the phase gate `diag(1, e^{iθ})` and
//! `Rx(θ) = H Rz(θ) H`. This differs from the physics convention
//! `e^{-iθZ/2}` by a global phase and a factor of two in the angle.

mod emit;
mod parse;
mod predicate;
mod unitary;
mod validate;

use std::fmt;

pub use emit::{emit_circuit, emit_predicate};
pub use parse::{parse_angle, parse_circuit, parse_circuit_in, parse_predicate, parse_predicate_in};
pub use predicate::{const_bits, Predicate, TruthTable};
pub use unitary::{euler_zxz, EulerAngles, Unitary};
pub use validate::validate;

use crate::stab::CliffordOp;

/// A named, ordered group of qubits. The first listed qubit is the most
/// significant bit when the register is read as an integer.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Register {
    pub name: String,
    pub qubits: Vec<usize>,
}

impl Register {
    pub fn new(name: impl Into<String>, qubits: Vec<usize>) -> Self {
        Register { name: name.into(), qubits }
    }

    /// Register over `lo..=hi`.
    pub fn range(name: impl Into<String>, lo: usize, hi: usize) -> Self {
        Register::new(name, (lo..=hi).collect())
    }

    pub fn width(&self) -> usize {
        self.qubits.len()
    }
}

/// Classical function computed by a query gate.
#[derive(Clone, Debug, PartialEq)]
pub enum QueryFn {
    /// `y = x + 1 mod 2^k`.
    Increment,
    /// Graph of a total function: each row is `x || g(x)`.
    Table(TruthTable),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    Clifford(CliffordOp),
    /// `|a⟩ → e^{iθa}|a⟩`.
    Rz { theta: f64, qubit: usize },
    T(usize),
    Mcx { controls: Vec<usize>, target: usize },
    Mcu { controls: Vec<usize>, target: usize, u: Unitary },
    /// Phase `e^{iθ}` on every basis state satisfying `pred`.
    OracleRz { pred: Predicate, theta: f64 },
    OracleX { pred: Predicate, target: usize },
    OracleRx { pred: Predicate, theta: f64, target: usize },
    OracleU { pred: Predicate, target: usize, u: Unitary },
    /// `|x, y⟩ → |x, y ⊕ g(x)⟩`.
    Query { input: Register, output: Register, func: QueryFn },
    /// `|x, y⟩ → |x, y ⊕ g(x)⟩` where `pred` holds, identity elsewhere.
    CondQuery { pred: Predicate, input: Register, output: Register, func: QueryFn },
    /// Unnormalized projection onto `outcome`.
    Postselect { qubit: usize, outcome: bool },
}

impl Gate {
    pub fn is_clifford(&self) -> bool {
        matches!(self, Gate::Clifford(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::Clifford(op) => op.kind.name(),
            Gate::Rz { .. } => "rz",
            Gate::T(_) => "t",
            Gate::Mcx { .. } => "mcx",
            Gate::Mcu { .. } => "mcu",
            Gate::OracleRz { .. } => "oracle_rz",
            Gate::OracleX { .. } => "oracle_x",
            Gate::OracleRx { .. } => "oracle_rx",
            Gate::OracleU { .. } => "oracle_u",
            Gate::Query { .. } => "query",
            Gate::CondQuery { .. } => "cond_query",
            Gate::Postselect { .. } => "postselect",
        }
    }

    /// Every qubit the gate touches, in a fixed order, possibly with repeats.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Clifford(op) => op.targets().to_vec(),
            Gate::Rz { qubit, .. } | Gate::T(qubit) | Gate::Postselect { qubit, .. } => vec![*qubit],
            Gate::Mcx { controls, target } | Gate::Mcu { controls, target, .. } => {
                let mut q = controls.clone();
                q.push(*target);
                q
            }
            Gate::OracleRz { pred, .. } => pred.qubits(),
            Gate::OracleX { pred, target } | Gate::OracleRx { pred, target, .. } | Gate::OracleU { pred, target, .. } => {
                let mut q = pred.qubits();
                q.push(*target);
                q
            }
            Gate::Query { input, output, .. } => {
                let mut q = input.qubits.clone();
                q.extend(&output.qubits);
                q
            }
            Gate::CondQuery { pred, input, output, .. } => {
                let mut q = pred.qubits();
                q.extend(&input.qubits);
                q.extend(&output.qubits);
                q
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Circuit {
    pub num_qubits: usize,
    pub registers: Vec<Register>,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit { num_qubits, registers: Vec::new(), gates: Vec::new() }
    }

    pub fn register(&self, name: &str) -> Option<&Register> {
        self.registers.iter().find(|r| r.name == name)
    }

    pub fn add_register(&mut self, reg: Register) -> Register {
        self.registers.push(reg.clone());
        reg
    }

    pub fn push(&mut self, gate: Gate) {
        self.gates.push(gate);
    }

    pub fn clifford(&mut self, op: CliffordOp) {
        self.gates.push(Gate::Clifford(op));
    }

    /// Number of gates that are neither Clifford nor postselection.
    pub fn t_count(&self) -> usize {
        self.gates.iter().filter(|g| !g.is_clifford() && !matches!(g, Gate::Postselect { .. })).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiagCode {
    Lexical,
    UnknownGate,
    WidthMismatch,
    UndefinedRegister,
    DuplicateQubit,
    QubitOutOfRange,
    MissingHeader,
    Arity,
    BadNumber,
    BadPredicate,
    NonUnitary,
    TableFile,
    BadTable,
    RegisterOverlap,
    OperandOverlap,
}

/// Parser or validator finding. `line` and `column` are 1-based; 0 means the
/// finding is not tied to a source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub code: DiagCode,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: DiagCode, message: impl Into<String>) -> Self {
        Diagnostic { line: 0, column: 0, code, message: message.into() }
    }

    pub fn at(mut self, line: usize, column: usize) -> Self {
        self.line = line;
        self.column = column;
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "{}:{}: {:?}: {}", self.line, self.column, self.code, self.message)
        } else {
            write!(f, "{:?}: {}", self.code, self.message)
        }
    }
}

/// Wraps a diagnostic list so it can travel as an error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostics {}
