use super::{Circuit, DiagCode, Diagnostic, Gate, Predicate, QueryFn, Register, Unitary};

/// All invariant violations of `circuit`; empty when it is valid.
pub fn validate(circuit: &Circuit) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if circuit.num_qubits == 0 {
        out.push(Diagnostic::new(DiagCode::MissingHeader, "circuit needs at least one qubit"));
    }
    out.extend(register_diagnostics(&circuit.registers, circuit.num_qubits));
    for (i, gate) in circuit.gates.iter().enumerate() {
        for mut d in gate_diagnostics(gate, circuit.num_qubits, &circuit.registers) {
            d.message = format!("gate {i} ({}): {}", gate.name(), d.message);
            out.push(d);
        }
    }
    out
}

pub(crate) fn register_diagnostics(registers: &[Register], num_qubits: usize) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (i, reg) in registers.iter().enumerate() {
        if reg.width() == 0 {
            out.push(Diagnostic::new(DiagCode::WidthMismatch, format!("register `{}` is empty", reg.name)));
        }
        if let Some(q) = reg.qubits.iter().find(|&&q| q >= num_qubits) {
            out.push(Diagnostic::new(
                DiagCode::QubitOutOfRange,
                format!("register `{}` uses qubit {q}, circuit has {num_qubits}", reg.name),
            ));
        }
        if has_repeat(&reg.qubits) {
            out.push(Diagnostic::new(DiagCode::DuplicateQubit, format!("register `{}` repeats a qubit", reg.name)));
        }
        for other in &registers[..i] {
            if other.name == reg.name {
                out.push(Diagnostic::new(DiagCode::RegisterOverlap, format!("register `{}` declared twice", reg.name)));
            } else if reg.qubits.iter().any(|q| other.qubits.contains(q)) {
                out.push(Diagnostic::new(
                    DiagCode::RegisterOverlap,
                    format!("registers `{}` and `{}` overlap", other.name, reg.name),
                ));
            }
        }
    }
    out
}

fn has_repeat(qubits: &[usize]) -> bool {
    qubits.iter().enumerate().any(|(i, q)| qubits[..i].contains(q))
}

fn check_range(qubits: &[usize], num_qubits: usize, out: &mut Vec<Diagnostic>) {
    if let Some(q) = qubits.iter().find(|&&q| q >= num_qubits) {
        out.push(Diagnostic::new(
            DiagCode::QubitOutOfRange,
            format!("qubit {q} out of range for {num_qubits} qubits"),
        ));
    }
}

fn check_registers_declared(regs: &[&Register], declared: &[Register], out: &mut Vec<Diagnostic>) {
    for reg in regs {
        if !declared.contains(reg) {
            out.push(Diagnostic::new(DiagCode::UndefinedRegister, format!("register `{}` is not declared", reg.name)));
        }
    }
}

fn check_predicate(pred: &Predicate, num_qubits: usize, declared: &[Register], out: &mut Vec<Diagnostic>) {
    out.extend(pred.check());
    check_range(&pred.qubits(), num_qubits, out);
    check_registers_declared(&pred.registers(), declared, out);
}

fn check_angle(theta: f64, out: &mut Vec<Diagnostic>) {
    if !theta.is_finite() {
        out.push(Diagnostic::new(DiagCode::BadNumber, "angle is not finite"));
    }
}

fn check_unitary(u: &Unitary, out: &mut Vec<Diagnostic>) {
    if !u.0.iter().all(|e| e.re.is_finite() && e.im.is_finite()) || !u.is_unitary() {
        out.push(Diagnostic::new(
            DiagCode::NonUnitary,
            format!("matrix deviates from unitarity by {:e}", u.unitarity_error()),
        ));
    }
}

fn check_target(target: usize, operands: &[usize], out: &mut Vec<Diagnostic>) {
    if operands.contains(&target) {
        out.push(Diagnostic::new(DiagCode::OperandOverlap, format!("target {target} is also a control")));
    }
}

fn check_query(input: &Register, output: &Register, func: &QueryFn, declared: &[Register], out: &mut Vec<Diagnostic>) {
    check_registers_declared(&[input, output], declared, out);
    if input.qubits.iter().any(|q| output.qubits.contains(q)) {
        out.push(Diagnostic::new(DiagCode::OperandOverlap, "query input and output share qubits"));
    }
    match func {
        QueryFn::Increment => {
            if input.width() != output.width() {
                out.push(Diagnostic::new(
                    DiagCode::WidthMismatch,
                    format!("inc maps {} bits to {} bits, output has {}", input.width(), input.width(), output.width()),
                ));
            }
        }
        QueryFn::Table(table) => {
            let k = input.width();
            if table.width != k + output.width() {
                out.push(Diagnostic::new(
                    DiagCode::WidthMismatch,
                    format!("table rows have {} bits, expected {} input + {} output", table.width, k, output.width()),
                ));
                return;
            }
            out.extend(table.check());
            let ell = output.width();
            let mut inputs: Vec<u64> = table.rows.iter().map(|r| r >> ell).collect();
            inputs.dedup();
            if inputs.len() != table.rows.len() || k >= 64 || inputs.len() as u64 != 1u64 << k {
                out.push(Diagnostic::new(
                    DiagCode::BadTable,
                    "query table must list exactly one output for every input",
                ));
            }
        }
    }
}

/// Invariant violations of one gate against a circuit of `num_qubits` qubits.
pub(crate) fn gate_diagnostics(gate: &Gate, num_qubits: usize, declared: &[Register]) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    match gate {
        Gate::Clifford(op) => {
            if let Err(e) = op.validate(num_qubits) {
                let code = match e {
                    crate::stab::StabError::DuplicateQubit(_) => DiagCode::DuplicateQubit,
                    _ => DiagCode::QubitOutOfRange,
                };
                let msg = if code == DiagCode::DuplicateQubit { "duplicate qubit operands".to_string() } else { e.to_string() };
                out.push(Diagnostic::new(code, msg));
            }
        }
        Gate::Rz { theta, qubit } => {
            check_angle(*theta, &mut out);
            check_range(&[*qubit], num_qubits, &mut out);
        }
        Gate::T(q) | Gate::Postselect { qubit: q, .. } => check_range(&[*q], num_qubits, &mut out),
        Gate::Mcx { controls, target } | Gate::Mcu { controls, target, .. } => {
            if controls.is_empty() {
                out.push(Diagnostic::new(DiagCode::Arity, "at least one control is required"));
            }
            if has_repeat(controls) {
                out.push(Diagnostic::new(DiagCode::DuplicateQubit, "duplicate qubit operands"));
            }
            check_target(*target, controls, &mut out);
            check_range(controls, num_qubits, &mut out);
            check_range(&[*target], num_qubits, &mut out);
            if let Gate::Mcu { u, .. } = gate {
                check_unitary(u, &mut out);
            }
        }
        Gate::OracleRz { pred, theta } => {
            check_predicate(pred, num_qubits, declared, &mut out);
            check_angle(*theta, &mut out);
        }
        Gate::OracleX { pred, target } | Gate::OracleRx { pred, target, .. } | Gate::OracleU { pred, target, .. } => {
            check_predicate(pred, num_qubits, declared, &mut out);
            check_range(&[*target], num_qubits, &mut out);
            check_target(*target, &pred.qubits(), &mut out);
            match gate {
                Gate::OracleRx { theta, .. } => check_angle(*theta, &mut out),
                Gate::OracleU { u, .. } => check_unitary(u, &mut out),
                _ => {}
            }
        }
        Gate::Query { input, output, func } => {
            check_range(&gate.qubits(), num_qubits, &mut out);
            check_query(input, output, func, declared, &mut out);
        }
        Gate::CondQuery { pred, input, output, func } => {
            check_predicate(pred, num_qubits, declared, &mut out);
            check_range(&gate.qubits(), num_qubits, &mut out);
            check_query(input, output, func, declared, &mut out);
            if pred.qubits().iter().any(|q| output.qubits.contains(q)) {
                out.push(Diagnostic::new(DiagCode::OperandOverlap, "condition reads the output register"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::TruthTable;
    use crate::stab::CliffordOp;

    #[test]
    fn bell_is_valid() {
        let mut c = Circuit::new(2);
        c.clifford(CliffordOp::h(0));
        c.clifford(CliffordOp::cx(0, 1));
        assert!(validate(&c).is_empty());
    }

    #[test]
    fn mcx_target_in_controls() {
        let mut c = Circuit::new(3);
        c.push(Gate::Mcx { controls: vec![0, 1], target: 1 });
        let d = validate(&c);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagCode::OperandOverlap);
    }

    #[test]
    fn query_output_width() {
        let mut c = Circuit::new(5);
        let x = c.add_register(Register::range("x", 0, 1));
        let y = c.add_register(Register::range("y", 2, 4));
        c.push(Gate::Query { input: x, output: y, func: QueryFn::Increment });
        let d = validate(&c);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagCode::WidthMismatch);
    }

    #[test]
    fn partial_query_table() {
        let mut c = Circuit::new(2);
        let x = c.add_register(Register::range("x", 0, 0));
        let y = c.add_register(Register::range("y", 1, 1));
        c.push(Gate::Query { input: x, output: y, func: QueryFn::Table(TruthTable::new(2, vec![0b01])) });
        assert_eq!(validate(&c)[0].code, DiagCode::BadTable);
    }

    #[test]
    fn undeclared_predicate_register() {
        let mut c = Circuit::new(3);
        c.push(Gate::OracleRz { pred: Predicate::eq_const(Register::range("x", 0, 1), 1), theta: 0.3 });
        assert_eq!(validate(&c)[0].code, DiagCode::UndefinedRegister);
    }
}
