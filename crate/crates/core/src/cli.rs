//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::bench::{generate, BenchmarkSpec, Family};
use crate::decomp::build_effectual;
use crate::engine::{strong_simulate, EngineConfig, SimulationResult};
use crate::ir::{emit_circuit, parse_circuit_in, parse_predicate, Circuit, Register};
use crate::lowering::{gadgetize, GadgetOp, GadgetizedCircuit, LowerConfig};
use crate::reference::{dense_run, DEFAULT_CAP};

pub const CSV_HEADER: &str = "family,n,k,rounds,seed,chi,total_qubits,terms,zero_terms,probability,time_ms";

const EXIT_OK: i32 = 0;
const EXIT_MISMATCH: i32 = 1;
const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "gadgetsim", version, about = "Stabilizer-rank simulation of circuits with oracle gates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the probability of observing a basis string.
    Simulate {
        file: PathBuf,
        #[arg(long = "x")]
        x: String,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the gadgetized circuit, its slots and term count.
    Lower {
        file: PathBuf,
        #[arg(long)]
        ancilla_budget: Option<usize>,
    },
    /// Decompose a predicate's effectual state.
    Decomp {
        predicate: String,
        /// Register widths, e.g. `x=4,y=4`; registers take consecutive qubits.
        #[arg(long)]
        widths: String,
    },
    /// Compare the term-sum amplitude with a dense state vector.
    Verify {
        file: PathBuf,
        #[arg(long = "x")]
        x: String,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Generate and simulate one benchmark instance.
    Bench {
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Append a row to this CSV file instead of printing it.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the generated circuit to this file.
        #[arg(long)]
        emit: Option<PathBuf>,
        /// Only generate; skip simulation.
        #[arg(long)]
        no_sim: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

type CliResult = Result<i32, Failure>;

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> CliResult {
    match command {
        Command::Simulate { file, x, threads } => {
            let circuit = load(&file)?;
            let r = simulate(&circuit, &x, threads)?;
            emit(out, &format!("{}\n", format_probability(r.probability)))
        }
        Command::Lower { file, ancilla_budget } => {
            let circuit = load(&file)?;
            let gc = gadgetize(&circuit, &LowerConfig { ancilla_budget }).map_err(|e| usage(e.to_string()))?;
            emit(out, &lowered_text(&gc))
        }
        Command::Decomp { predicate, widths } => emit(out, &decomp_text(&predicate, &widths)?),
        Command::Verify { file, x, cap, tol, threads } => {
            let circuit = load(&file)?;
            let bits = parse_bits(&x, circuit.num_qubits)?;
            let r = simulate(&circuit, &x, threads)?;
            let dense = dense_run(&circuit, cap).and_then(|s| s.amplitude(&bits)).map_err(|e| usage(e.to_string()))?;
            let diff = (r.amplitude - dense).norm();
            let text = format!(
                "stabilizer {:.12} ({:.12})\ndense      {:.12} ({:.12})\ndifference {diff:e}\n",
                r.probability,
                r.amplitude,
                dense.norm_sqr(),
                dense
            );
            emit(out, &text)?;
            Ok(if diff <= tol { EXIT_OK } else { EXIT_MISMATCH })
        }
        Command::Bench { family, n, k, rounds, seed, csv, emit: emit_path, no_sim, threads } => {
            let family: Family = family.parse().map_err(|e: crate::bench::BenchError| usage(e.to_string()))?;
            let spec = BenchmarkSpec { family, n, k, rounds, seed };
            let b = generate(&spec).map_err(|e| usage(e.to_string()))?;
            if let Some(path) = &emit_path {
                fs::write(path, emit_circuit(&b.circuit)).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            }
            if no_sim {
                return Ok(EXIT_OK);
            }
            let gc = gadgetize(&b.circuit, &LowerConfig::default()).map_err(|e| usage(e.to_string()))?;
            let r = strong_simulate(&gc, &b.target, &engine_config(threads)).map_err(|e| usage(e.to_string()))?;
            let row = csv_row(&spec, b.circuit.num_qubits, b.rounds, &gc, &r);
            match csv {
                Some(path) => append_csv(&path, &row).map(|_| EXIT_OK),
                None => emit(out, &format!("{CSV_HEADER}\n{row}\n")),
            }
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult {
    out.write_all(text.as_bytes()).map_err(|e| usage(e.to_string()))?;
    Ok(EXIT_OK)
}

fn load(path: &Path) -> Result<Circuit, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_circuit_in(&text, base).map_err(|diags| {
        let lines: Vec<String> = diags.iter().map(|d| format!("{}:{d}", path.display())).collect();
        usage(lines.join("\n"))
    })
}

fn parse_bits(s: &str, n: usize) -> Result<Vec<bool>, Failure> {
    let bits: Vec<bool> = s
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(usage(format!("--x must be a bit string, got `{s}`"))),
        })
        .collect::<Result<_, _>>()?;
    if bits.len() != n {
        return Err(usage(format!("--x has {} bits, circuit has {n} qubits", bits.len())));
    }
    Ok(bits)
}

fn engine_config(threads: Option<usize>) -> EngineConfig {
    let workers = threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    EngineConfig { workers, ..EngineConfig::default() }
}

fn simulate(circuit: &Circuit, x: &str, threads: Option<usize>) -> Result<SimulationResult, Failure> {
    let bits = parse_bits(x, circuit.num_qubits)?;
    let gc = gadgetize(circuit, &LowerConfig::default()).map_err(|e| usage(e.to_string()))?;
    strong_simulate(&gc, &bits, &engine_config(threads)).map_err(|e| usage(e.to_string()))
}

/// Fifteen decimals with trailing zeros removed, so `0.5000000000000001` prints as `0.5`.
fn format_probability(p: f64) -> String {
    let s = format!("{p:.15}");
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').map_or_else(|| s.to_string(), |t| format!("{t}.0"))
}

fn lowered_text(gc: &GadgetizedCircuit) -> String {
    let mut s = String::new();
    writeln!(s, "qubits {}", gc.total_qubits).unwrap();
    for op in &gc.ops {
        match op {
            GadgetOp::Clifford(c) => writeln!(s, "{c}").unwrap(),
            GadgetOp::Project { qubit, outcome } => writeln!(s, "project {qubit} -> {}", *outcome as u8).unwrap(),
            GadgetOp::Slot(j) => writeln!(s, "slot {j}").unwrap(),
        }
    }
    for (j, slot) in gc.slots.iter().enumerate() {
        let qubits: Vec<String> = slot.qubits.iter().map(usize::to_string).collect();
        writeln!(s, "# slot {j} on [{}], {} terms", qubits.join(","), slot.terms()).unwrap();
        for t in &slot.decomp.terms {
            writeln!(s, "#   {}", term_line(t.weight, &t.prep)).unwrap();
        }
    }
    for r in &gc.report {
        writeln!(
            s,
            "# gate {} ({}): {} terms, skeleton {}, ancillas {}",
            r.gate_index, r.name, r.terms, r.skeleton_size, r.ancillas
        )
        .unwrap();
    }
    writeln!(s, "compensation 2^{{{}/2}}", gc.compensation_exp).unwrap();
    writeln!(s, "chi {}", gc.chi).unwrap();
    s
}

fn term_line(weight: num_complex::Complex64, prep: &[crate::stab::CliffordOp]) -> String {
    let ops: Vec<String> = prep.iter().map(|op| op.to_string()).collect();
    format!("{:e} {:e} : {}", weight.re, weight.im, ops.join("; "))
}

fn decomp_text(predicate: &str, widths: &str) -> Result<String, Failure> {
    let mut env = Vec::new();
    let mut next = 0;
    for item in widths.split(',').filter(|s| !s.is_empty()) {
        let (name, w) = item.split_once('=').ok_or_else(|| usage(format!("bad width `{item}`, expected NAME=W")))?;
        let w: usize = w.trim().parse().map_err(|_| usage(format!("bad width `{item}`")))?;
        if w == 0 {
            return Err(usage(format!("register {name} has width 0")));
        }
        env.push(Register::range(name.trim(), next, next + w - 1));
        next += w;
    }
    let pred = parse_predicate(predicate, &env).map_err(|diags| {
        usage(diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))
    })?;
    let d = build_effectual(&pred).map_err(|e| usage(e.to_string()))?;
    let mut s = String::new();
    let vars: Vec<String> = d.vars.iter().map(usize::to_string).collect();
    writeln!(s, "# qubits [{}], {} models", vars.join(","), d.model_count).unwrap();
    for t in &d.terms {
        writeln!(s, "{}", term_line(t.weight, &t.prep)).unwrap();
    }
    writeln!(s, "terms {}", d.terms.len()).unwrap();
    Ok(s)
}

fn csv_row(spec: &BenchmarkSpec, qubits: usize, rounds: Option<usize>, gc: &GadgetizedCircuit, r: &SimulationResult) -> String {
    let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{},{:.15},{:.3}",
        spec.family,
        spec.n.unwrap_or(qubits),
        opt(spec.k),
        opt(rounds),
        spec.seed,
        gc.chi,
        gc.total_qubits,
        r.terms_evaluated,
        r.zero_terms,
        r.probability,
        r.wall_time.as_secs_f64() * 1e3
    )
}

fn append_csv(path: &Path, row: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| usage(format!("{}: {e}", path.display()));
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    if fresh {
        writeln!(f, "{CSV_HEADER}").map_err(io)?;
    }
    writeln!(f, "{row}").map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["gadgetsim"];
        argv.extend(args);
        let code = run_cli(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn probability_format() {
        assert_eq!(format_probability(0.5000000000000001), "0.5");
        assert_eq!(format_probability(1.0), "1.0");
        assert_eq!(format_probability(0.9453125), "0.9453125");
    }

    #[test]
    fn decomp_gt() {
        let (code, out, _) = run(&["decomp", "(gt x y)", "--widths", "x=4,y=4"]);
        assert_eq!(code, 0);
        let terms: usize = out.lines().last().unwrap().strip_prefix("terms ").unwrap().parse().unwrap();
        assert!(terms <= 4);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(&["frobnicate"]).0, 2);
        assert_eq!(run(&["decomp", "(gt x y", "--widths", "x=2,y=2"]).0, 2);
        assert_eq!(run(&["simulate", "/nonexistent.hqc", "--x", "0"]).0, 2);
        assert_eq!(run(&["bench", "--family", "nope"]).0, 2);
        assert_eq!(run(&["--help"]).0, 0);
    }

    #[test]
    fn bench_prints_csv() {
        let (code, out, err) = run(&["bench", "--family", "comparator", "--k", "2", "--threads", "1"]);
        assert_eq!(code, 0, "{err}");
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 11);
        assert_eq!(fields[0], "comparator");
        assert_eq!(fields[5], "3");
    }
}
