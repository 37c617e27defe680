use std::fmt::Write;

use num_complex::Complex64;

use super::{Circuit, Gate, Predicate, QueryFn, Register, TruthTable, Unitary};

fn angle(theta: f64) -> String {
    format!("{theta:?}")
}

fn complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:?}{sign}{:?}i", z.re, z.im.abs())
}

fn unitary(u: &Unitary) -> String {
    let e = u.0.map(complex);
    format!("u=({},{};{},{})", e[0], e[1], e[2], e[3])
}

fn qubit_list(qubits: &[usize]) -> String {
    let items: Vec<String> = qubits.iter().map(usize::to_string).collect();
    format!("[{}]", items.join(","))
}

fn table_rows(table: &TruthTable) -> String {
    let rows: Vec<String> = table.rows.iter().map(|r| format!("{r:0w$b}", w = table.width)).collect();
    format!("rows:{}", rows.join(","))
}

fn decimal(bits: &[bool]) -> String {
    // Constants wider than 128 bits are not produced by the parser.
    let v = bits.iter().fold(0u128, |acc, &b| (acc << 1) | b as u128);
    v.to_string()
}

pub fn emit_predicate(pred: &Predicate) -> String {
    let mut s = String::new();
    write_predicate(pred, &mut s);
    s
}

fn write_predicate(pred: &Predicate, s: &mut String) {
    match pred {
        Predicate::True => s.push_str("(true)"),
        Predicate::False => s.push_str("(false)"),
        Predicate::EqVars(a, b) => write!(s, "(eq {} {})", a.name, b.name).unwrap(),
        Predicate::EqConst(a, bits) => write!(s, "(eq {} {})", a.name, decimal(bits)).unwrap(),
        Predicate::Gt(a, b) => write!(s, "(gt {} {})", a.name, b.name).unwrap(),
        Predicate::Inc(a, b) => write!(s, "(inc {} {})", a.name, b.name).unwrap(),
        Predicate::TruthTable { regs, table } => {
            s.push_str("(table");
            for r in regs {
                write!(s, " {}", r.name).unwrap();
            }
            write!(s, " {})", table_rows(table)).unwrap();
        }
        Predicate::Not(p) => {
            s.push_str("(not ");
            write_predicate(p, s);
            s.push(')');
        }
        Predicate::And(ps) | Predicate::Or(ps) => {
            s.push_str(if matches!(pred, Predicate::And(_)) { "(and" } else { "(or" });
            for p in ps {
                s.push(' ');
                write_predicate(p, s);
            }
            s.push(')');
        }
    }
}

fn register_decl(reg: &Register) -> String {
    let contiguous = reg.qubits.windows(2).all(|w| w[1] == w[0] + 1);
    if contiguous && !reg.qubits.is_empty() {
        format!("reg {} {}..{}", reg.name, reg.qubits[0], reg.qubits[reg.width() - 1])
    } else {
        format!("reg {} {}", reg.name, qubit_list(&reg.qubits))
    }
}

fn query_fn(func: &QueryFn) -> String {
    match func {
        QueryFn::Increment => "inc".to_string(),
        QueryFn::Table(t) => table_rows(t),
    }
}

/// Text form of `circuit`; tables are always written inline.
pub fn emit_circuit(circuit: &Circuit) -> String {
    let mut s = String::new();
    writeln!(s, "qubits {}", circuit.num_qubits).unwrap();
    for reg in &circuit.registers {
        writeln!(s, "{}", register_decl(reg)).unwrap();
    }
    for gate in &circuit.gates {
        let line = match gate {
            Gate::Clifford(op) => op.to_string(),
            Gate::Rz { theta, qubit } => format!("rz {} {qubit}", angle(*theta)),
            Gate::T(q) => format!("t {q}"),
            Gate::Mcx { controls, target } => format!("mcx {} {target}", qubit_list(controls)),
            Gate::Mcu { controls, target, u } => format!("mcu {} {target} {}", qubit_list(controls), unitary(u)),
            Gate::OracleRz { pred, theta } => format!("oracle_rz {} {}", emit_predicate(pred), angle(*theta)),
            Gate::OracleX { pred, target } => format!("oracle_x {} {target}", emit_predicate(pred)),
            Gate::OracleRx { pred, theta, target } => {
                format!("oracle_rx {} {} {target}", emit_predicate(pred), angle(*theta))
            }
            Gate::OracleU { pred, target, u } => format!("oracle_u {} {target} {}", emit_predicate(pred), unitary(u)),
            Gate::Query { input, output, func } => {
                format!("query {} {} -> {}", query_fn(func), input.name, output.name)
            }
            Gate::CondQuery { pred, input, output, func } => format!(
                "cond_query {} {} {} -> {}",
                emit_predicate(pred),
                query_fn(func),
                input.name,
                output.name
            ),
            Gate::Postselect { qubit, outcome } => format!("postselect {qubit} -> {}", *outcome as u8),
        };
        writeln!(s, "{line}").unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_circuit;
    use crate::stab::CliffordOp;

    fn round_trip(c: &Circuit) {
        let text = emit_circuit(c);
        let back = parse_circuit(&text).unwrap_or_else(|e| panic!("{text}\n{e:?}"));
        assert_eq!(&back, c, "{text}");
    }

    #[test]
    fn bell() {
        let mut c = Circuit::new(2);
        c.clifford(CliffordOp::h(0));
        c.clifford(CliffordOp::cx(0, 1));
        round_trip(&c);
        assert_eq!(emit_circuit(&c), "qubits 2\nh 0\ncx 0 1\n");
    }

    #[test]
    fn nested_oracle_u() {
        let mut c = Circuit::new(9);
        let x = c.add_register(Register::range("x", 0, 2));
        let y = c.add_register(Register::new("y", vec![5, 3, 4]));
        let z = c.add_register(Register::range("z", 6, 7));
        let pred = Predicate::Or(vec![
            Predicate::And(vec![Predicate::Gt(x.clone(), y.clone()), Predicate::not(Predicate::eq_const(x.clone(), 5))]),
            Predicate::TruthTable { regs: vec![z.clone()], table: TruthTable::new(2, vec![1, 2]) },
            Predicate::Inc(y, x),
            Predicate::True,
        ]);
        let u = Unitary([
            Complex64::new(0.6, -0.0),
            Complex64::new(0.0, 0.8),
            Complex64::new(0.0, 0.8),
            Complex64::new(0.6, 1e-17),
        ]);
        c.push(Gate::OracleU { pred, target: 8, u });
        c.push(Gate::Rz { theta: 0.1 + 0.2, qubit: 1 });
        c.push(Gate::Postselect { qubit: 8, outcome: true });
        round_trip(&c);
    }

    #[test]
    fn complex_formatting() {
        assert_eq!(complex(Complex64::new(1.0, -0.0)), "1.0-0.0i");
        assert_eq!(complex(Complex64::new(-0.5, 2.0)), "-0.5+2.0i");
    }
}
