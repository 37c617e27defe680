use super::{DiagCode, Diagnostic, Register};

/// Sorted, deduplicated list of satisfying rows over `width ≤ 64` bits.
/// Bit `width - 1` of a row is the first bit of the concatenated operands.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TruthTable {
    pub width: usize,
    pub rows: Vec<u64>,
}

impl TruthTable {
    pub fn new(width: usize, mut rows: Vec<u64>) -> Self {
        rows.sort_unstable();
        rows.dedup();
        TruthTable { width, rows }
    }

    pub fn contains(&self, row: u64) -> bool {
        self.rows.binary_search(&row).is_ok()
    }

    pub fn row_bits(&self, row: u64) -> Vec<bool> {
        (0..self.width).map(|i| (row >> (self.width - 1 - i)) & 1 == 1).collect()
    }

    pub(crate) fn check(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.width == 0 || self.width > 64 {
            out.push(Diagnostic::new(
                DiagCode::BadTable,
                format!("truth tables support 1 to 64 bits, got {}", self.width),
            ));
        } else if self.width < 64 {
            if let Some(r) = self.rows.iter().find(|&&r| r >> self.width != 0) {
                out.push(Diagnostic::new(
                    DiagCode::BadTable,
                    format!("row {r} does not fit in {} bits", self.width),
                ));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Predicate {
    True,
    False,
    EqVars(Register, Register),
    /// Constant bits, most significant (first qubit) first.
    EqConst(Register, Vec<bool>),
    /// `A > B` as unsigned integers.
    Gt(Register, Register),
    /// `B = A + 1 mod 2^k`.
    Inc(Register, Register),
    TruthTable { regs: Vec<Register>, table: TruthTable },
    Not(Box<Predicate>),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
}

/// Big-endian bits of `value` in `width` bits, or `None` if it does not fit.
pub fn const_bits(value: u128, width: usize) -> Option<Vec<bool>> {
    if width < 128 && value >> width != 0 {
        return None;
    }
    Some((0..width).map(|i| {
        let shift = width - 1 - i;
        shift < 128 && (value >> shift) & 1 == 1
    }).collect())
}

impl Predicate {
    pub fn eq_const(reg: Register, value: u128) -> Self {
        let bits = const_bits(value, reg.width()).expect("constant must fit the register");
        Predicate::EqConst(reg, bits)
    }

    pub fn not(p: Predicate) -> Self {
        Predicate::Not(Box::new(p))
    }

    /// Register occurrences in traversal order.
    pub fn registers(&self) -> Vec<&Register> {
        let mut out = Vec::new();
        self.collect_registers(&mut out);
        out
    }

    fn collect_registers<'a>(&'a self, out: &mut Vec<&'a Register>) {
        match self {
            Predicate::True | Predicate::False => {}
            Predicate::EqVars(a, b) | Predicate::Gt(a, b) | Predicate::Inc(a, b) => {
                out.push(a);
                out.push(b);
            }
            Predicate::EqConst(a, _) => out.push(a),
            Predicate::TruthTable { regs, .. } => out.extend(regs.iter()),
            Predicate::Not(p) => p.collect_registers(out),
            Predicate::And(ps) | Predicate::Or(ps) => ps.iter().for_each(|p| p.collect_registers(out)),
        }
    }

    /// Qubits of all register occurrences, with repeats.
    pub fn qubits(&self) -> Vec<usize> {
        self.registers().into_iter().flat_map(|r| r.qubits.iter().copied()).collect()
    }

    /// Distinct qubits in order of first appearance.
    pub fn distinct_qubits(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for q in self.qubits() {
            if !out.contains(&q) {
                out.push(q);
            }
        }
        out
    }

    /// Width and shape checks; empty when the predicate is well formed.
    pub fn check(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        self.check_into(&mut out);
        out
    }

    fn check_into(&self, out: &mut Vec<Diagnostic>) {
        let pair = |name: &str, a: &Register, b: &Register, out: &mut Vec<Diagnostic>| {
            if a.width() != b.width() {
                out.push(Diagnostic::new(
                    DiagCode::WidthMismatch,
                    format!("({name} {} {}): widths {} and {} differ", a.name, b.name, a.width(), b.width()),
                ));
            }
            if a.qubits.iter().any(|q| b.qubits.contains(q)) {
                out.push(Diagnostic::new(
                    DiagCode::OperandOverlap,
                    format!("({name} {} {}): operands share qubits", a.name, b.name),
                ));
            }
        };
        for reg in self.registers() {
            if reg.width() == 0 {
                out.push(Diagnostic::new(DiagCode::WidthMismatch, format!("register {} is empty", reg.name)));
            }
        }
        match self {
            Predicate::True | Predicate::False => {}
            Predicate::EqVars(a, b) => pair("eq", a, b, out),
            Predicate::Gt(a, b) => pair("gt", a, b, out),
            Predicate::Inc(a, b) => pair("inc", a, b, out),
            Predicate::EqConst(a, bits) => {
                if bits.len() != a.width() {
                    out.push(Diagnostic::new(
                        DiagCode::WidthMismatch,
                        format!("constant has {} bits, register {} has {}", bits.len(), a.name, a.width()),
                    ));
                }
            }
            Predicate::TruthTable { regs, table } => {
                let total: usize = regs.iter().map(Register::width).sum();
                if regs.is_empty() {
                    out.push(Diagnostic::new(DiagCode::Arity, "table needs at least one register"));
                }
                if total != table.width {
                    out.push(Diagnostic::new(
                        DiagCode::WidthMismatch,
                        format!("table rows have {} bits, registers have {total}", table.width),
                    ));
                }
                out.extend(table.check());
                let mut seen = Vec::new();
                for q in regs.iter().flat_map(|r| &r.qubits) {
                    if seen.contains(q) {
                        out.push(Diagnostic::new(DiagCode::OperandOverlap, "table operands share qubits"));
                        break;
                    }
                    seen.push(*q);
                }
            }
            Predicate::Not(p) => p.check_into(out),
            Predicate::And(ps) | Predicate::Or(ps) => {
                if ps.is_empty() {
                    out.push(Diagnostic::new(DiagCode::Arity, "and/or need at least one operand"));
                }
                for p in ps {
                    p.check_into(out);
                }
            }
        }
    }
}
