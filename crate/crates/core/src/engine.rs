//! Strong simulation of a gadgetized circuit by summing over the terms of
//! every magic-state decomposition.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use thiserror::Error;

use crate::ir::Circuit;
use crate::lowering::{gadgetize, GadgetOp, GadgetizedCircuit, LowerConfig, LowerError};
use crate::stab::{StabError, StabilizerState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("target has {got} bits, circuit has {expected} qubits")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{chi} terms exceed the limit of {limit}")]
    TooManyTerms { chi: u128, limit: u128 },
    #[error(transparent)]
    Lower(#[from] LowerError),
    #[error(transparent)]
    Stab(#[from] StabError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub workers: usize,
    pub max_terms: u128,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { workers: 1, max_terms: 1 << 40 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationResult {
    pub probability: f64,
    pub amplitude: Complex64,
    pub chi: u128,
    pub terms_evaluated: u64,
    /// Terms whose state vanished at a projection.
    pub zero_terms: u64,
    pub wall_time: Duration,
}

/// Mixed-radix counter over slot terms; slot 0 is the fastest digit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermIndex {
    radices: Vec<usize>,
    digits: Vec<usize>,
}

impl TermIndex {
    pub fn new(radices: Vec<usize>) -> Self {
        let digits = vec![0; radices.len()];
        TermIndex { radices, digits }
    }

    pub fn at(radices: Vec<usize>, mut index: u64) -> Self {
        let digits = radices
            .iter()
            .map(|&r| {
                let d = (index % r as u64) as usize;
                index /= r as u64;
                d
            })
            .collect();
        TermIndex { radices, digits }
    }

    pub fn digits(&self) -> &[usize] {
        &self.digits
    }

    /// Advances by one; returns `false` after wrapping to all zeros.
    pub fn advance(&mut self) -> bool {
        for (d, &r) in self.digits.iter_mut().zip(&self.radices) {
            *d += 1;
            if *d < r {
                return true;
            }
            *d = 0;
        }
        false
    }

    pub fn total(&self) -> u128 {
        self.radices.iter().fold(1u128, |acc, &r| acc.saturating_mul(r as u128))
    }
}

/// Neumaier compensated sum, one accumulator per component.
#[derive(Clone, Copy, Debug, Default)]
struct KahanSum {
    sum: Complex64,
    comp: Complex64,
}

impl KahanSum {
    fn add_part(sum: &mut f64, comp: &mut f64, x: f64) {
        let t = *sum + x;
        if sum.abs() >= x.abs() {
            *comp += (*sum - t) + x;
        } else {
            *comp += (x - t) + *sum;
        }
        *sum = t;
    }

    fn add(&mut self, z: Complex64) {
        Self::add_part(&mut self.sum.re, &mut self.comp.re, z.re);
        Self::add_part(&mut self.sum.im, &mut self.comp.im, z.im);
    }

    fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

struct Prepared<'a> {
    gc: &'a GadgetizedCircuit,
    /// State after every op preceding the first slot.
    checkpoint: StabilizerState,
    first_slot: usize,
    target: Vec<bool>,
}

impl<'a> Prepared<'a> {
    fn new(gc: &'a GadgetizedCircuit, target: &[bool]) -> Result<Self, EngineError> {
        if target.len() != gc.num_qubits {
            return Err(EngineError::LengthMismatch { expected: gc.num_qubits, got: target.len() });
        }
        let first_slot = gc.ops.iter().position(|op| matches!(op, GadgetOp::Slot(_))).unwrap_or(gc.ops.len());
        let mut checkpoint = StabilizerState::new(gc.total_qubits)?;
        run_ops(&mut checkpoint, gc, &gc.ops[..first_slot], &[])?;
        let mut full = target.to_vec();
        full.resize(gc.total_qubits, false);
        Ok(Prepared { gc, checkpoint, first_slot, target: full })
    }

    /// Unscaled amplitude of one term, or `None` if the state vanished.
    fn term(&self, digits: &[usize]) -> Result<Option<Complex64>, EngineError> {
        let mut state = self.checkpoint.clone();
        if !run_ops(&mut state, self.gc, &self.gc.ops[self.first_slot..], digits)? {
            return Ok(None);
        }
        Ok(Some(state.amplitude(&self.target)?))
    }
}

/// Applies `ops`; returns `false` as soon as the state is zero.
fn run_ops(
    state: &mut StabilizerState,
    gc: &GadgetizedCircuit,
    ops: &[GadgetOp],
    digits: &[usize],
) -> Result<bool, EngineError> {
    for op in ops {
        match op {
            GadgetOp::Clifford(c) => state.apply(c)?,
            GadgetOp::Project { qubit, outcome } => {
                state.project(*qubit, *outcome)?;
                if state.is_zero() {
                    return Ok(false);
                }
            }
            GadgetOp::Slot(j) => {
                let slot = &gc.slots[*j];
                let term = &slot.decomp.terms[digits[*j]];
                for c in &term.prep {
                    state.apply(&c.remap(|q| slot.qubits[q]))?;
                }
                state.scale_by(term.weight);
            }
        }
    }
    Ok(!state.is_zero())
}

/// Amplitude of a single term, including the compensation factor.
pub fn term_amplitude(gc: &GadgetizedCircuit, target: &[bool], digits: &[usize]) -> Result<Complex64, EngineError> {
    let prepared = Prepared::new(gc, target)?;
    let amp = prepared.term(digits)?.unwrap_or_default();
    Ok(amp * gc.compensation())
}

struct Partial {
    sum: KahanSum,
    evaluated: u64,
    zero: u64,
}

fn run_range(prepared: &Prepared<'_>, radices: &[usize], lo: u64, hi: u64) -> Result<Partial, EngineError> {
    let mut partial = Partial { sum: KahanSum::default(), evaluated: 0, zero: 0 };
    if lo >= hi {
        return Ok(partial);
    }
    let mut index = TermIndex::at(radices.to_vec(), lo);
    for _ in lo..hi {
        match prepared.term(index.digits())? {
            Some(a) => partial.sum.add(a),
            None => partial.zero += 1,
        }
        partial.evaluated += 1;
        index.advance();
    }
    Ok(partial)
}

/// `⟨target|C|0⟩` for the source circuit of `gc`; ancillas are read as `0`.
pub fn strong_simulate(
    gc: &GadgetizedCircuit,
    target: &[bool],
    config: &EngineConfig,
) -> Result<SimulationResult, EngineError> {
    let start = Instant::now();
    let limit = config.max_terms.min(u64::MAX as u128);
    if gc.chi > limit {
        return Err(EngineError::TooManyTerms { chi: gc.chi, limit });
    }
    let prepared = Prepared::new(gc, target)?;
    let radices: Vec<usize> = gc.slots.iter().map(|s| s.terms()).collect();
    let total = gc.chi as u64;

    let partials: Vec<Partial> = if prepared.checkpoint.is_zero() || total == 0 {
        vec![Partial { sum: KahanSum::default(), evaluated: 0, zero: 0 }]
    } else {
        let workers = (config.workers.max(1) as u64).min(total);
        let chunk = total.div_ceil(workers);
        let ranges: Vec<(u64, u64)> =
            (0..workers).map(|w| (w * chunk, ((w + 1) * chunk).min(total))).collect();
        if workers == 1 {
            vec![run_range(&prepared, &radices, 0, total)?]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = ranges
                    .iter()
                    .map(|&(lo, hi)| {
                        let (prepared, radices) = (&prepared, &radices);
                        scope.spawn(move || run_range(prepared, radices, lo, hi))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker panicked")).collect::<Result<Vec<_>, _>>()
            })?
        }
    };

    let mut sum = KahanSum::default();
    let (mut evaluated, mut zero) = (0, 0);
    for p in &partials {
        sum.add(p.sum.value());
        evaluated += p.evaluated;
        zero += p.zero;
    }
    let amplitude = sum.value() * gc.compensation();
    Ok(SimulationResult {
        probability: amplitude.norm_sqr(),
        amplitude,
        chi: gc.chi,
        terms_evaluated: evaluated,
        zero_terms: zero,
        wall_time: start.elapsed(),
    })
}

/// Gadgetizes `circuit` and computes `⟨target|C|0⟩`.
pub fn simulate_circuit(
    circuit: &Circuit,
    target: &[bool],
    lower: &LowerConfig,
    config: &EngineConfig,
) -> Result<SimulationResult, EngineError> {
    let gc = gadgetize(circuit, lower)?;
    strong_simulate(&gc, target, config)
}
