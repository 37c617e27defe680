use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use super::predicate::const_bits;
use super::validate::{gate_diagnostics, register_diagnostics};
use super::{Circuit, DiagCode, Diagnostic, Gate, Predicate, QueryFn, Register, TruthTable, Unitary};
use crate::stab::{CliffordKind, CliffordOp};

type Diags = Vec<Diagnostic>;

/// Parses a circuit; table files are resolved against the working directory.
pub fn parse_circuit(text: &str) -> Result<Circuit, Diags> {
    parse_circuit_in(text, Path::new("."))
}

/// Parses a circuit, resolving `table:FILE` operands relative to `base`.
pub fn parse_circuit_in(text: &str, base: &Path) -> Result<Circuit, Diags> {
    let mut p = Parser { base: base.to_path_buf(), num_qubits: None, registers: Vec::new(), gates: Vec::new(), diags: Vec::new() };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        match split_tokens(content) {
            Ok(tokens) if tokens.is_empty() => {}
            Ok(tokens) => p.statement(line, &tokens),
            Err((col, msg)) => p.diags.push(Diagnostic::new(DiagCode::Lexical, msg).at(line, col)),
        }
    }
    if p.num_qubits.is_none() && p.diags.is_empty() {
        p.diags.push(Diagnostic::new(DiagCode::MissingHeader, "missing `qubits N` header").at(1, 1));
    }
    if p.diags.is_empty() {
        Ok(Circuit { num_qubits: p.num_qubits.unwrap_or(0), registers: p.registers, gates: p.gates })
    } else {
        Err(p.diags)
    }
}

/// Parses a predicate s-expression over `env`; table files relative to the working directory.
pub fn parse_predicate(text: &str, env: &[Register]) -> Result<Predicate, Diags> {
    parse_predicate_in(text, env, Path::new("."))
}

pub fn parse_predicate_in(text: &str, env: &[Register], base: &Path) -> Result<Predicate, Diags> {
    let pred = parse_pred_text(text, env, base).map_err(|(col, d)| vec![d.at(1, col)])?;
    let diags = pred.check();
    if diags.is_empty() {
        Ok(pred)
    } else {
        Err(diags.into_iter().map(|d| d.at(1, 1)).collect())
    }
}

/// Radians as a float literal or a multiple of `pi` such as `pi/4`, `-3pi/2`, `2*pi`.
pub fn parse_angle(s: &str) -> Option<f64> {
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let (neg, rest) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s),
    };
    let idx = rest.find("pi")?;
    let coef = rest[..idx].trim_end_matches('*');
    let coef = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().ok()? };
    let tail = &rest[idx + 2..];
    let den = if tail.is_empty() {
        1.0
    } else {
        tail.strip_prefix('/')?.parse::<f64>().ok()?
    };
    let v = coef * PI / den;
    let v = if neg { -v } else { v };
    v.is_finite().then_some(v)
}

/// `re+imi`, `re-imi`, `re` or `imi`.
pub(crate) fn parse_complex(s: &str) -> Option<Complex64> {
    let s = s.trim();
    if let Some(body) = s.strip_suffix('i') {
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
        match split {
            Some(i) => {
                let re = body[..i].parse::<f64>().ok()?;
                let im_text = &body[i..];
                let im = match im_text {
                    "+" => 1.0,
                    "-" => -1.0,
                    t => t.parse::<f64>().ok()?,
                };
                Some(Complex64::new(re, im))
            }
            None => {
                let im = match body {
                    "" | "+" => 1.0,
                    "-" => -1.0,
                    t => t.parse::<f64>().ok()?,
                };
                Some(Complex64::new(0.0, im))
            }
        }
    } else {
        s.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0))
    }
}

fn parse_unitary(s: &str) -> Option<Unitary> {
    let body = s.strip_prefix("u=(")?.strip_suffix(')')?;
    let rows: Vec<&str> = body.split(';').collect();
    if rows.len() != 2 {
        return None;
    }
    let mut entries = Vec::with_capacity(4);
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != 2 {
            return None;
        }
        for cell in cells {
            entries.push(parse_complex(cell)?);
        }
    }
    Some(Unitary([entries[0], entries[1], entries[2], entries[3]]))
}

#[derive(Debug)]
struct Token {
    text: String,
    col: usize,
}

/// Whitespace-separated words; whitespace inside `(...)` or `[...]` does not split.
fn split_tokens(line: &str) -> Result<Vec<Token>, (usize, String)> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let mut start = 0;
    let mut depth: i32 = 0;
    let mut open_col = 0;
    for (i, ch) in line.chars().enumerate() {
        let col = i + 1;
        if ch.is_whitespace() && depth == 0 {
            if !cur.is_empty() {
                tokens.push(Token { text: std::mem::take(&mut cur), col: start });
            }
            continue;
        }
        if cur.is_empty() {
            start = col;
        }
        match ch {
            '(' | '[' => {
                if depth == 0 {
                    open_col = col;
                }
                depth += 1;
            }
            ')' | ']' => {
                depth -= 1;
                if depth < 0 {
                    return Err((col, format!("unbalanced `{ch}`")));
                }
            }
            _ => {}
        }
        cur.push(ch);
    }
    if depth != 0 {
        return Err((open_col, "unclosed bracket".into()));
    }
    if !cur.is_empty() {
        tokens.push(Token { text: cur, col: start });
    }
    Ok(tokens)
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn read_table_file(base: &Path, file: &str, width: usize) -> Result<TruthTable, Diagnostic> {
    let path = base.join(file);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Diagnostic::new(DiagCode::TableFile, format!("cannot read {}: {e}", path.display())))?;
    let rows: Vec<&str> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .collect();
    table_from_rows(&rows, width)
}

fn table_from_rows(rows: &[&str], width: usize) -> Result<TruthTable, Diagnostic> {
    if width == 0 || width > 64 {
        return Err(Diagnostic::new(DiagCode::BadTable, format!("truth tables support 1 to 64 bits, got {width}")));
    }
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        if row.len() != width || !row.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Diagnostic::new(
                DiagCode::BadTable,
                format!("table row `{row}` is not a {width}-bit binary string"),
            ));
        }
        out.push(u64::from_str_radix(row, 2).expect("checked binary"));
    }
    Ok(TruthTable::new(width, out))
}

/// `rows:0101,1100` inline table, or a file name.
fn table_operand(base: &Path, text: &str, width: usize) -> Result<TruthTable, Diagnostic> {
    match text.strip_prefix("rows:") {
        Some(list) => {
            let rows: Vec<&str> = list.split(',').filter(|r| !r.is_empty()).collect();
            table_from_rows(&rows, width)
        }
        None => read_table_file(base, text, width),
    }
}

#[derive(Debug, PartialEq)]
enum Sexp {
    Atom(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn col(&self) -> usize {
        match self {
            Sexp::Atom(_, c) | Sexp::List(_, c) => *c,
        }
    }
}

fn parse_sexp(text: &str) -> Result<Sexp, (usize, String)> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let skip_ws = |pos: &mut usize| {
        while *pos < chars.len() && chars[*pos].is_whitespace() {
            *pos += 1;
        }
    };
    fn node(chars: &[char], pos: &mut usize, skip: &dyn Fn(&mut usize)) -> Result<Sexp, (usize, String)> {
        skip(pos);
        let start = *pos + 1;
        match chars.get(*pos) {
            None => Err((start, "unexpected end of predicate".into())),
            Some(')') => Err((start, "unexpected `)`".into())),
            Some('(') => {
                *pos += 1;
                let mut items = Vec::new();
                loop {
                    skip(pos);
                    match chars.get(*pos) {
                        None => return Err((start, "unclosed `(`".into())),
                        Some(')') => {
                            *pos += 1;
                            return Ok(Sexp::List(items, start));
                        }
                        _ => items.push(node(chars, pos, skip)?),
                    }
                }
            }
            Some(_) => {
                let mut s = String::new();
                while let Some(&c) = chars.get(*pos) {
                    if c.is_whitespace() || c == '(' || c == ')' {
                        break;
                    }
                    s.push(c);
                    *pos += 1;
                }
                Ok(Sexp::Atom(s, start))
            }
        }
    }
    let tree = node(&chars, &mut pos, &skip_ws)?;
    skip_ws(&mut pos);
    if pos < chars.len() {
        return Err((pos + 1, "trailing text after predicate".into()));
    }
    Ok(tree)
}

fn parse_pred_text(text: &str, env: &[Register], base: &Path) -> Result<Predicate, (usize, Diagnostic)> {
    let tree = parse_sexp(text).map_err(|(c, m)| (c, Diagnostic::new(DiagCode::BadPredicate, m)))?;
    pred_of(&tree, env, base)
}

fn pred_of(tree: &Sexp, env: &[Register], base: &Path) -> Result<Predicate, (usize, Diagnostic)> {
    let bad = |col: usize, code: DiagCode, msg: String| (col, Diagnostic::new(code, msg));
    let Sexp::List(items, col) = tree else {
        return Err(bad(tree.col(), DiagCode::BadPredicate, "expected `(`".into()));
    };
    let col = *col;
    let Some(Sexp::Atom(head, _)) = items.first() else {
        return Err(bad(col, DiagCode::BadPredicate, "expected an operator name".into()));
    };
    let args = &items[1..];
    let reg = |s: &Sexp| -> Result<Register, (usize, Diagnostic)> {
        match s {
            Sexp::Atom(name, c) => env
                .iter()
                .find(|r| &r.name == name)
                .cloned()
                .ok_or_else(|| bad(*c, DiagCode::UndefinedRegister, format!("unknown register `{name}`"))),
            Sexp::List(_, c) => Err(bad(*c, DiagCode::BadPredicate, "expected a register name".into())),
        }
    };
    let arity = |n: usize| -> Result<(), (usize, Diagnostic)> {
        if args.len() == n {
            Ok(())
        } else {
            Err(bad(col, DiagCode::Arity, format!("`{head}` takes {n} operands, got {}", args.len())))
        }
    };
    let width_check = |a: &Register, b: &Register| -> Result<(), (usize, Diagnostic)> {
        if a.width() == b.width() {
            Ok(())
        } else {
            Err(bad(
                col,
                DiagCode::WidthMismatch,
                format!("({head} {} {}): widths {} and {} differ", a.name, b.name, a.width(), b.width()),
            ))
        }
    };
    match head.as_str() {
        "true" => arity(0).map(|_| Predicate::True),
        "false" => arity(0).map(|_| Predicate::False),
        "eq" => {
            arity(2)?;
            let a = reg(&args[0])?;
            match &args[1] {
                Sexp::Atom(t, c) if t.chars().all(|ch| ch.is_ascii_digit()) => {
                    let value: u128 = t
                        .parse()
                        .map_err(|_| bad(*c, DiagCode::BadNumber, format!("constant `{t}` is too large")))?;
                    let bits = const_bits(value, a.width()).ok_or_else(|| {
                        bad(*c, DiagCode::WidthMismatch, format!("constant {value} does not fit {} bits", a.width()))
                    })?;
                    Ok(Predicate::EqConst(a, bits))
                }
                other => {
                    let b = reg(other)?;
                    width_check(&a, &b)?;
                    Ok(Predicate::EqVars(a, b))
                }
            }
        }
        "gt" | "inc" => {
            arity(2)?;
            let a = reg(&args[0])?;
            let b = reg(&args[1])?;
            width_check(&a, &b)?;
            Ok(if head == "gt" { Predicate::Gt(a, b) } else { Predicate::Inc(a, b) })
        }
        "table" => {
            if args.len() < 2 {
                return Err(bad(col, DiagCode::Arity, "`table` needs registers and a row source".into()));
            }
            let regs = args[..args.len() - 1].iter().map(reg).collect::<Result<Vec<_>, _>>()?;
            let width = regs.iter().map(Register::width).sum();
            let src = &args[args.len() - 1];
            let Sexp::Atom(text, c) = src else {
                return Err(bad(src.col(), DiagCode::BadPredicate, "expected a table source".into()));
            };
            let table = table_operand(base, text, width).map_err(|d| (*c, d))?;
            Ok(Predicate::TruthTable { regs, table })
        }
        "not" => {
            arity(1)?;
            Ok(Predicate::not(pred_of(&args[0], env, base)?))
        }
        "and" | "or" => {
            if args.is_empty() {
                return Err(bad(col, DiagCode::Arity, format!("`{head}` needs at least one operand")));
            }
            let kids = args.iter().map(|a| pred_of(a, env, base)).collect::<Result<Vec<_>, _>>()?;
            Ok(if head == "and" { Predicate::And(kids) } else { Predicate::Or(kids) })
        }
        other => Err(bad(col, DiagCode::BadPredicate, format!("unknown predicate operator `{other}`"))),
    }
}

struct Parser {
    base: PathBuf,
    num_qubits: Option<usize>,
    registers: Vec<Register>,
    gates: Vec<Gate>,
    diags: Diags,
}

type Step<T> = Result<T, Diagnostic>;

impl Parser {
    fn statement(&mut self, line: usize, tokens: &[Token]) {
        let head = tokens[0].text.as_str();
        let before = self.diags.len();
        let result = match head {
            "qubits" => self.header(tokens),
            "reg" => self.register(tokens),
            _ => self.gate(tokens).map(|g| {
                if let Some(n) = self.num_qubits {
                    for d in gate_diagnostics(&g, n, &self.registers) {
                        self.diags.push(d.at(line, tokens[0].col));
                    }
                } else if let Gate::Clifford(op) = &g {
                    // still report operand clashes before the header
                    if let Err(e) = op.validate(usize::MAX) {
                        self.diags.push(Diagnostic::new(DiagCode::DuplicateQubit, format!("{e}: duplicate qubit operands")).at(line, tokens[0].col));
                    }
                }
                if self.num_qubits.is_none() {
                    self.diags.push(Diagnostic::new(DiagCode::MissingHeader, "gate before `qubits N` header").at(line, tokens[0].col));
                }
                if self.diags.len() == before {
                    self.gates.push(g);
                }
            }),
        };
        if let Err(mut d) = result {
            d.line = line;
            if d.column == 0 {
                d.column = tokens[0].col;
            }
            self.diags.push(d);
        }
    }

    fn header(&mut self, tokens: &[Token]) -> Step<()> {
        if tokens.len() != 2 {
            return Err(Diagnostic::new(DiagCode::Arity, "expected `qubits N`"));
        }
        if self.num_qubits.is_some() {
            return Err(Diagnostic::new(DiagCode::Lexical, "duplicate `qubits` header"));
        }
        let n = self.number(&tokens[1])?;
        if n == 0 {
            return Err(Diagnostic::new(DiagCode::BadNumber, "circuit needs at least one qubit").at(0, tokens[1].col));
        }
        self.num_qubits = Some(n);
        Ok(())
    }

    fn register(&mut self, tokens: &[Token]) -> Step<()> {
        if tokens.len() != 3 {
            return Err(Diagnostic::new(DiagCode::Arity, "expected `reg NAME lo..hi` or `reg NAME [i,j,...]`"));
        }
        let name = &tokens[1].text;
        if !is_identifier(name) {
            return Err(Diagnostic::new(DiagCode::Lexical, format!("`{name}` is not a valid register name")).at(0, tokens[1].col));
        }
        let qubits = if let Some((lo, hi)) = tokens[2].text.split_once("..") {
            let lo = lo.parse::<usize>().map_err(|_| self.bad_number(&tokens[2]))?;
            let hi = hi.parse::<usize>().map_err(|_| self.bad_number(&tokens[2]))?;
            if hi < lo {
                return Err(Diagnostic::new(DiagCode::BadNumber, "register range is empty").at(0, tokens[2].col));
            }
            (lo..=hi).collect()
        } else if tokens[2].text.starts_with('[') {
            self.qubit_list(&tokens[2])?
        } else {
            vec![self.number(&tokens[2])?]
        };
        let reg = Register::new(name.clone(), qubits);
        let mut all = self.registers.clone();
        all.push(reg.clone());
        let diags = register_diagnostics(&all, self.num_qubits.unwrap_or(usize::MAX));
        if let Some(d) = diags.into_iter().next() {
            return Err(d.at(0, tokens[1].col));
        }
        self.registers.push(reg);
        Ok(())
    }

    fn bad_number(&self, tok: &Token) -> Diagnostic {
        Diagnostic::new(DiagCode::BadNumber, format!("`{}` is not a valid number", tok.text)).at(0, tok.col)
    }

    fn number(&self, tok: &Token) -> Step<usize> {
        tok.text.parse::<usize>().map_err(|_| self.bad_number(tok))
    }

    /// An index, or the name of a one-qubit register.
    fn qubit(&self, tok: &Token) -> Step<usize> {
        if let Ok(q) = tok.text.parse::<usize>() {
            return Ok(q);
        }
        match self.registers.iter().find(|r| r.name == tok.text) {
            Some(r) if r.width() == 1 => Ok(r.qubits[0]),
            Some(r) => Err(Diagnostic::new(
                DiagCode::WidthMismatch,
                format!("register `{}` has {} qubits, expected one", r.name, r.width()),
            )
            .at(0, tok.col)),
            None if is_identifier(&tok.text) => Err(Diagnostic::new(
                DiagCode::UndefinedRegister,
                format!("unknown register `{}`", tok.text),
            )
            .at(0, tok.col)),
            None => Err(self.bad_number(tok)),
        }
    }

    fn qubit_list(&self, tok: &Token) -> Step<Vec<usize>> {
        let body = tok
            .text
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| Diagnostic::new(DiagCode::Lexical, "expected `[i,j,...]`").at(0, tok.col))?;
        body.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| self.qubit(&Token { text: s.to_string(), col: tok.col }))
            .collect()
    }

    fn reg_ref(&self, tok: &Token) -> Step<Register> {
        self.registers
            .iter()
            .find(|r| r.name == tok.text)
            .cloned()
            .ok_or_else(|| Diagnostic::new(DiagCode::UndefinedRegister, format!("unknown register `{}`", tok.text)).at(0, tok.col))
    }

    fn angle(&self, tok: &Token) -> Step<f64> {
        parse_angle(&tok.text)
            .ok_or_else(|| Diagnostic::new(DiagCode::BadNumber, format!("`{}` is not a valid angle", tok.text)).at(0, tok.col))
    }

    fn unitary(&self, tok: &Token) -> Step<Unitary> {
        parse_unitary(&tok.text).ok_or_else(|| {
            Diagnostic::new(DiagCode::Lexical, format!("`{}` is not of the form u=(a,b;c,d)", tok.text)).at(0, tok.col)
        })
    }

    fn predicate(&self, tok: &Token) -> Step<Predicate> {
        let pred = parse_pred_text(&tok.text, &self.registers, &self.base)
            .map_err(|(c, d)| d.at(0, tok.col + c - 1))?;
        match pred.check().into_iter().next() {
            Some(d) => Err(d.at(0, tok.col)),
            None => Ok(pred),
        }
    }

    fn query_fn(&self, tok: &Token, input: &Register, output: &Register) -> Step<QueryFn> {
        if tok.text == "inc" {
            return Ok(QueryFn::Increment);
        }
        let width = input.width() + output.width();
        let src = tok.text.strip_prefix("table:").unwrap_or(&tok.text);
        if !tok.text.starts_with("table:") && !tok.text.starts_with("rows:") {
            return Err(Diagnostic::new(DiagCode::Lexical, format!("unknown query function `{}`", tok.text)).at(0, tok.col));
        }
        table_operand(&self.base, src, width).map(QueryFn::Table).map_err(|d| d.at(0, tok.col))
    }

    fn arrow(&self, tok: &Token) -> Step<()> {
        if tok.text == "->" {
            Ok(())
        } else {
            Err(Diagnostic::new(DiagCode::Lexical, format!("expected `->`, found `{}`", tok.text)).at(0, tok.col))
        }
    }

    fn gate(&self, tokens: &[Token]) -> Step<Gate> {
        let head = tokens[0].text.as_str();
        let args = &tokens[1..];
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(Diagnostic::new(DiagCode::Arity, format!("`{head}` takes {n} operands, got {}", args.len())))
            }
        };
        if let Some(kind) = CliffordKind::from_name(head) {
            arity(kind.arity())?;
            let a = self.qubit(&args[0])?;
            let b = if kind.arity() == 2 { self.qubit(&args[1])? } else { a };
            return Ok(Gate::Clifford(CliffordOp { kind, qubits: [a, b] }));
        }
        match head {
            "t" => {
                arity(1)?;
                Ok(Gate::T(self.qubit(&args[0])?))
            }
            "rz" => {
                arity(2)?;
                Ok(Gate::Rz { theta: self.angle(&args[0])?, qubit: self.qubit(&args[1])? })
            }
            "mcx" => {
                arity(2)?;
                Ok(Gate::Mcx { controls: self.qubit_list(&args[0])?, target: self.qubit(&args[1])? })
            }
            "mcu" => {
                arity(3)?;
                Ok(Gate::Mcu {
                    controls: self.qubit_list(&args[0])?,
                    target: self.qubit(&args[1])?,
                    u: self.unitary(&args[2])?,
                })
            }
            "oracle_rz" => {
                arity(2)?;
                Ok(Gate::OracleRz { pred: self.predicate(&args[0])?, theta: self.angle(&args[1])? })
            }
            "oracle_x" => {
                arity(2)?;
                Ok(Gate::OracleX { pred: self.predicate(&args[0])?, target: self.qubit(&args[1])? })
            }
            "oracle_rx" => {
                arity(3)?;
                Ok(Gate::OracleRx {
                    pred: self.predicate(&args[0])?,
                    theta: self.angle(&args[1])?,
                    target: self.qubit(&args[2])?,
                })
            }
            "oracle_u" => {
                arity(3)?;
                Ok(Gate::OracleU {
                    pred: self.predicate(&args[0])?,
                    target: self.qubit(&args[1])?,
                    u: self.unitary(&args[2])?,
                })
            }
            "query" => {
                arity(4)?;
                let input = self.reg_ref(&args[1])?;
                self.arrow(&args[2])?;
                let output = self.reg_ref(&args[3])?;
                let func = self.query_fn(&args[0], &input, &output)?;
                Ok(Gate::Query { input, output, func })
            }
            "cond_query" => {
                arity(5)?;
                let pred = self.predicate(&args[0])?;
                let input = self.reg_ref(&args[2])?;
                self.arrow(&args[3])?;
                let output = self.reg_ref(&args[4])?;
                let func = self.query_fn(&args[1], &input, &output)?;
                Ok(Gate::CondQuery { pred, input, output, func })
            }
            "postselect" => {
                arity(3)?;
                let qubit = self.qubit(&args[0])?;
                self.arrow(&args[1])?;
                let outcome = match args[2].text.as_str() {
                    "0" => false,
                    "1" => true,
                    _ => return Err(Diagnostic::new(DiagCode::BadNumber, "outcome must be 0 or 1").at(0, args[2].col)),
                };
                Ok(Gate::Postselect { qubit, outcome })
            }
            other => Err(Diagnostic::new(DiagCode::UnknownGate, format!("unknown gate `{other}`"))),
        }
    }
}
