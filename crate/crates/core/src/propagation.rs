//! Truncated Heisenberg-picture Pauli propagation.
//!
//! The observable is pushed backwards through the circuit one [`Layer`] at a
//! time. Every live term carries the path weight accumulated so far; before a
//! layer is applied the weight of the term's current Pauli is added and the
//! term is dropped when the total reaches the cutoff `k`. The Pauli produced by
//! the first layer (`P_0`) therefore never contributes. Terms are merged on
//! `(Pauli, weight)` so the cutoff removes exactly the paths with `|γ| >= k`.

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::channels::NormalFormChannel;
use crate::circuit::{snapped_trig, Angle, Circuit, CliffordGate, Gate, Layer};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum, ProductState};

/// Truncation settings. `None` means no cutoff.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TruncationConfig {
    /// Path-weight cutoff: keep paths with `|γ| < k`.
    #[serde(default)]
    pub k: Option<usize>,
    /// Drop terms with `|a| < coeff_cutoff` after each layer.
    #[serde(default)]
    pub coeff_cutoff: f64,
    /// Drop terms with more than this many X/Y sites after each layer.
    #[serde(default)]
    pub xy_cutoff: Option<usize>,
    /// Drop terms of Pauli weight above this after each layer.
    #[serde(default)]
    pub current_weight_cutoff: Option<usize>,
    /// Fail with [`Error::TermLimit`] once the live term count exceeds this.
    #[serde(default)]
    pub max_terms: Option<usize>,
}

impl TruncationConfig {
    /// No truncation at all.
    pub fn exact() -> Self {
        Self::default()
    }

    /// Path-weight cutoff only.
    pub fn with_k(k: usize) -> Self {
        Self {
            k: Some(k),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == Some(0) {
            return Err(Error::OutOfRange("path-weight cutoff k must be positive".into()));
        }
        if self.xy_cutoff == Some(0) {
            return Err(Error::OutOfRange("xy_cutoff must be positive".into()));
        }
        if self.current_weight_cutoff == Some(0) {
            return Err(Error::OutOfRange("current_weight_cutoff must be positive".into()));
        }
        if !(self.coeff_cutoff >= 0.0 && self.coeff_cutoff.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "coeff_cutoff {} must be finite and nonnegative",
                self.coeff_cutoff
            )));
        }
        Ok(())
    }
}

/// Counters collected during propagation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropagationStats {
    pub paths_discarded_by_weight: u64,
    pub paths_discarded_by_coeff: u64,
    pub paths_discarded_by_xy: u64,
    pub paths_discarded_by_current_weight: u64,
    pub peak_term_count: usize,
    /// Live `(Pauli, weight)` entries after the last layer.
    pub surviving_path_count: u64,
}

/// `C_k^dag(O)` and the statistics of the run.
#[derive(Clone, Debug, PartialEq)]
pub struct BackpropResult {
    pub terms: PauliSum,
    pub stats: PropagationStats,
}

/// Heisenberg-picture primitive.
#[derive(Clone, Debug)]
pub(crate) enum Op {
    Noise {
        qubit: usize,
        rows: [[f64; 4]; 4],
        diagonal: bool,
    },
    Clifford(CliffordGate),
    Rotation {
        generator: PauliString,
        cos: f64,
        sin: f64,
    },
}

pub(crate) fn compile_gate(g: &Gate) -> Result<Op> {
    match g {
        Gate::Clifford(c) => Ok(Op::Clifford(c.clone())),
        Gate::Rotation(r) => match r.angle() {
            Angle::Fixed(t) => {
                let (cos, sin) = snapped_trig(t);
                Ok(Op::Rotation {
                    generator: r.generator().clone(),
                    cos,
                    sin,
                })
            }
            Angle::Uniform => Err(Error::InvalidCircuit(
                "circuit has unsampled uniform angles; call sample_circuit first".into(),
            )),
        },
        Gate::RandomClifford(_) => Err(Error::InvalidCircuit(
            "circuit has unsampled random Cliffords; call sample_circuit first".into(),
        )),
    }
}

fn compile_noise(noise: &[NormalFormChannel], out: &mut Vec<Op>) {
    for (q, ch) in noise.iter().enumerate() {
        if ch.is_identity() {
            continue;
        }
        let rows = ch.adjoint_rows();
        let diagonal = (0..4).all(|p| (0..4).all(|j| p == j || rows[p][j] == 0.0));
        out.push(Op::Noise {
            qubit: q,
            rows,
            diagonal,
        });
    }
}

/// Primitives of `V ∘ N ∘ U` in the order their adjoints act on an observable.
pub(crate) fn compile_layer(layer: Option<&Layer>, final_gates: Option<&[Gate]>) -> Result<Vec<Op>> {
    let mut ops = Vec::new();
    if let Some(gates) = final_gates {
        for g in gates {
            ops.push(compile_gate(g)?);
        }
    }
    if let Some(layer) = layer {
        if let Some(noise) = layer.noise() {
            compile_noise(noise, &mut ops);
        }
        for sub in layer.sublayers().iter().rev() {
            for g in sub {
                ops.push(compile_gate(g)?);
            }
        }
    }
    Ok(ops)
}

/// Sorts by Pauli, sums duplicates and removes exact zeros.
fn merge_terms(terms: &mut Vec<(PauliString, f64)>) {
    if terms.len() < 2 {
        terms.retain(|t| t.1 != 0.0);
        return;
    }
    terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<(PauliString, f64)> = Vec::with_capacity(terms.len());
    for (p, c) in terms.drain(..) {
        match out.last_mut() {
            Some(last) if last.0 == p => last.1 += c,
            _ => out.push((p, c)),
        }
    }
    out.retain(|t| t.1 != 0.0);
    *terms = out;
}

fn apply_op(op: &Op, terms: &mut Vec<(PauliString, f64)>) {
    match op {
        Op::Clifford(g) => {
            for t in terms.iter_mut() {
                let (p, s) = g.conjugate(&t.0);
                t.0 = p;
                t.1 *= s;
            }
        }
        Op::Rotation {
            generator,
            cos,
            sin,
        } => {
            let len = terms.len();
            for i in 0..len {
                if terms[i].0.commutes_unchecked(generator) {
                    continue;
                }
                let c = terms[i].1;
                if *sin != 0.0 {
                    // i G P = ± R because G and P anticommute
                    let (r, m) = generator.multiply_unchecked(&terms[i].0);
                    let sign = if m == 1 { -1.0 } else { 1.0 };
                    terms.push((r, sign * sin * c));
                }
                terms[i].1 = c * cos;
            }
            terms.retain(|t| t.1 != 0.0);
        }
        Op::Noise {
            qubit,
            rows,
            diagonal,
        } => {
            let q = *qubit;
            if *diagonal {
                for t in terms.iter_mut() {
                    let p = t.0.get(q).index();
                    t.1 *= rows[p][p];
                }
                terms.retain(|t| t.1 != 0.0);
            } else {
                let len = terms.len();
                for i in 0..len {
                    let p = terms[i].0.get(q).index();
                    if p == 0 {
                        continue;
                    }
                    let c = terms[i].1;
                    for (j, &a) in rows[p].iter().enumerate() {
                        if j != p && a != 0.0 {
                            let mut s = terms[i].0.clone();
                            s.set(q, Pauli::from_index(j));
                            terms.push((s, a * c));
                        }
                    }
                    terms[i].1 = c * rows[p][p];
                }
                terms.retain(|t| t.1 != 0.0);
            }
        }
    }
}

/// Applies every primitive of a layer to one Pauli, merging per Pauli.
pub(crate) fn expand(ops: &[Op], p: PauliString, coeff: f64) -> Vec<(PauliString, f64)> {
    expand_pruned(ops, p, coeff, 0.0, &mut 0)
}

/// [`expand`] that also drops intermediate branches with `|a| < min_abs`
/// after every op, counting them in `dropped`.
fn expand_pruned(
    ops: &[Op],
    p: PauliString,
    coeff: f64,
    min_abs: f64,
    dropped: &mut u64,
) -> Vec<(PauliString, f64)> {
    let mut terms = vec![(p, coeff)];
    for op in ops {
        apply_op(op, &mut terms);
        if terms.len() > 32 {
            merge_terms(&mut terms);
        }
        if min_abs > 0.0 {
            let before = terms.len();
            terms.retain(|t| t.1.abs() >= min_abs);
            *dropped += (before - terms.len()) as u64;
        }
    }
    merge_terms(&mut terms);
    terms
}

const CHUNK: usize = 512;

type Keyed = FxHashMap<(PauliString, u32), f64>;

/// Step-by-step propagation of one observable.
///
/// [`backpropagate`] drives this over a whole circuit; callers with repeated
/// structure (e.g. identical Trotter steps) can apply layers one at a time and
/// read the observable in between.
#[derive(Clone, Debug)]
pub struct Propagator {
    n: usize,
    trunc: TruncationConfig,
    frontier: Vec<(PauliString, u32, f64)>,
    stats: PropagationStats,
}

impl Propagator {
    pub fn new(observable: &PauliSum, trunc: &TruncationConfig) -> Result<Self> {
        trunc.validate()?;
        if observable.is_empty() {
            return Err(Error::EmptyObservable);
        }
        let frontier: Vec<_> = observable
            .sorted_terms()
            .into_iter()
            .map(|(p, c)| (p, 0u32, c))
            .collect();
        let stats = PropagationStats {
            peak_term_count: frontier.len(),
            surviving_path_count: frontier.len() as u64,
            ..Default::default()
        };
        Ok(Self {
            n: observable.num_qubits(),
            trunc: trunc.clone(),
            frontier,
            stats,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn stats(&self) -> &PropagationStats {
        &self.stats
    }

    pub fn term_count(&self) -> usize {
        self.frontier.len()
    }

    /// Applies one layer, closing the current path weight first.
    pub fn apply_layer(&mut self, layer: &Layer) -> Result<()> {
        let ops = compile_layer(Some(layer), None)?;
        self.apply_ops(&ops, true, false)
    }

    /// Like [`apply_layer`](Self::apply_layer) for a layer that is not the
    /// last one: terms the next layer would discard by path weight are
    /// dropped immediately.
    pub fn apply_inner_layer(&mut self, layer: &Layer) -> Result<()> {
        let ops = compile_layer(Some(layer), None)?;
        self.apply_ops(&ops, true, true)
    }

    /// Applies a layer preceded (in the Heisenberg order) by a final
    /// single-qubit layer, as for the last layer of a circuit.
    pub fn apply_last_layer(&mut self, layer: &Layer, final_gates: Option<&[Gate]>) -> Result<()> {
        self.apply_last(layer, final_gates, false)
    }

    fn apply_last(&mut self, layer: &Layer, final_gates: Option<&[Gate]>, lookahead: bool) -> Result<()> {
        let ops = compile_layer(Some(layer), final_gates)?;
        self.apply_ops(&ops, true, lookahead)
    }

    /// Applies gates without touching the path weight.
    pub fn apply_gates(&mut self, gates: &[Gate]) -> Result<()> {
        let ops = compile_layer(None, Some(gates))?;
        self.apply_ops(&ops, false, false)
    }

    /// `Tr[O' ρ]` where `O'` is the observable after applying `layer`, without
    /// storing `O'`. The propagator itself is unchanged.
    pub fn expectation_after(&self, layer: &Layer, state: &ProductState) -> Result<f64> {
        self.check_state(state)?;
        let ops = compile_layer(Some(layer), None)?;
        let k = self.trunc.k;
        let min_abs = self.trunc.coeff_cutoff;
        let process = |chunk: &[(PauliString, u32, f64)]| -> f64 {
            let mut sum = 0.0;
            for (p, w, c) in chunk {
                if k.is_some_and(|k| *w as usize + p.weight() >= k) {
                    continue;
                }
                for (q, a) in expand_pruned(&ops, p.clone(), *c, min_abs, &mut 0) {
                    sum += a * state.pauli_expectation(&q);
                }
            }
            sum
        };
        let parts: Vec<f64> = if self.frontier.len() > CHUNK {
            self.frontier.par_chunks(CHUNK).map(process).collect()
        } else {
            vec![process(&self.frontier)]
        };
        Ok(parts.iter().sum())
    }

    /// With `lookahead`, another closing layer follows, so outputs whose
    /// weight already reaches `k` are dropped before merging.
    pub(crate) fn apply_ops(&mut self, ops: &[Op], close: bool, lookahead: bool) -> Result<()> {
        let k = self.trunc.k;
        let prune = if lookahead { k } else { None };
        let min_abs = self.trunc.coeff_cutoff;
        let process = |chunk: &[(PauliString, u32, f64)]| -> (Keyed, u64, u64) {
            let mut map = Keyed::default();
            let mut dropped = 0u64;
            let mut small = 0u64;
            for (p, w, c) in chunk {
                let w = match (close, k) {
                    (true, Some(k)) => {
                        let nw = *w as usize + p.weight();
                        if nw >= k {
                            dropped += 1;
                            continue;
                        }
                        nw as u32
                    }
                    _ => *w,
                };
                for (q, a) in expand_pruned(ops, p.clone(), *c, min_abs, &mut small) {
                    if prune.is_some_and(|k| w as usize + q.weight() >= k) {
                        dropped += 1;
                        continue;
                    }
                    *map.entry((q, w)).or_insert(0.0) += a;
                }
            }
            (map, dropped, small)
        };
        let frontier = std::mem::take(&mut self.frontier);
        let mut parts: Vec<(Keyed, u64, u64)> = if frontier.len() > CHUNK {
            frontier.par_chunks(CHUNK).map(process).collect()
        } else {
            vec![process(&frontier)]
        };
        drop(frontier);
        let (mut merged, mut dropped, mut small) = parts.remove(0);
        for (map, d, s) in parts {
            dropped += d;
            small += s;
            for (key, a) in map {
                *merged.entry(key).or_insert(0.0) += a;
            }
        }
        self.stats.paths_discarded_by_weight += dropped;
        self.stats.paths_discarded_by_coeff += small;
        let t = &self.trunc;
        let mut next = Vec::with_capacity(merged.len());
        for ((p, w), a) in merged {
            if a == 0.0 {
                continue;
            }
            if a.abs() < t.coeff_cutoff {
                self.stats.paths_discarded_by_coeff += 1;
            } else if t.xy_cutoff.is_some_and(|m| p.xy_count() > m) {
                self.stats.paths_discarded_by_xy += 1;
            } else if t.current_weight_cutoff.is_some_and(|m| p.weight() > m) {
                self.stats.paths_discarded_by_current_weight += 1;
            } else {
                next.push((p, w, a));
            }
        }
        self.stats.peak_term_count = self.stats.peak_term_count.max(next.len());
        self.stats.surviving_path_count = next.len() as u64;
        self.frontier = next;
        if let Some(limit) = t.max_terms {
            if self.frontier.len() > limit {
                return Err(Error::TermLimit(limit));
            }
        }
        Ok(())
    }

    /// The current observable, summed over path weights.
    pub fn observable(&self) -> PauliSum {
        let mut out = PauliSum::new(self.n);
        for (p, _, c) in &self.frontier {
            out.add_unchecked(p.clone(), *c);
        }
        out
    }

    /// `Tr[O ρ]` for the current observable.
    pub fn expectation(&self, state: &ProductState) -> Result<f64> {
        self.check_state(state)?;
        Ok(self
            .frontier
            .iter()
            .map(|(p, _, c)| c * state.pauli_expectation(p))
            .sum())
    }

    fn check_state(&self, state: &ProductState) -> Result<()> {
        if state.num_qubits() != self.n {
            return Err(Error::QubitMismatch {
                expected: self.n,
                actual: state.num_qubits(),
            });
        }
        Ok(())
    }

    pub fn into_result(self) -> BackpropResult {
        BackpropResult {
            terms: self.observable(),
            stats: self.stats,
        }
    }
}

fn check_qubits(c: &Circuit, o: &PauliSum) -> Result<()> {
    if c.num_qubits() != o.num_qubits() {
        return Err(Error::QubitMismatch {
            expected: c.num_qubits(),
            actual: o.num_qubits(),
        });
    }
    Ok(())
}

/// Weight-truncated `C_k^dag(O)`.
///
/// Results do not depend on the number of worker threads.
pub fn backpropagate(c: &Circuit, o: &PauliSum, trunc: &TruncationConfig) -> Result<BackpropResult> {
    check_qubits(c, o)?;
    let mut prop = Propagator::new(o, trunc)?;
    let layers = c.layers();
    match layers.split_last() {
        None => {
            if let Some(fl) = c.final_layer() {
                prop.apply_gates(fl)?;
            }
        }
        Some((last, rest)) => {
            prop.apply_last(last, c.final_layer(), !rest.is_empty())?;
            for (i, layer) in rest.iter().enumerate().rev() {
                if i > 0 {
                    prop.apply_inner_layer(layer)?;
                } else {
                    prop.apply_layer(layer)?;
                }
            }
        }
    }
    Ok(prop.into_result())
}

/// `Tr[C_k^dag(O) ρ]`.
pub fn expectation(r: &BackpropResult, state: &ProductState) -> Result<f64> {
    r.terms.expectation_product_state(state)
}

/// One Pauli path with its boundary Paulis `P_L, ..., P_0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathRecord {
    pub paulis: Vec<PauliString>,
    pub weight: usize,
    pub coeff: f64,
}

fn circuit_ops(c: &Circuit) -> Result<Vec<Vec<Op>>> {
    let layers = c.layers();
    let mut out = Vec::with_capacity(layers.len().max(1));
    match layers.split_last() {
        None => out.push(compile_layer(None, c.final_layer())?),
        Some((last, rest)) => {
            out.push(compile_layer(Some(last), c.final_layer())?);
            for layer in rest.iter().rev() {
                out.push(compile_layer(Some(layer), None)?);
            }
        }
    }
    Ok(out)
}

/// Walks every path with `|γ| < k` without merging across histories.
fn walk_paths(
    c: &Circuit,
    o: &PauliSum,
    k: Option<usize>,
    visit: &mut dyn FnMut(&[PauliString], usize, f64) -> bool,
) -> Result<()> {
    check_qubits(c, o)?;
    if o.is_empty() {
        return Err(Error::EmptyObservable);
    }
    let ops = circuit_ops(c)?;
    let closes = c.depth() > 0;

    struct Walker<'a> {
        ops: &'a [Vec<Op>],
        k: Option<usize>,
        closes: bool,
        history: Vec<PauliString>,
    }

    impl Walker<'_> {
        fn go(
            &mut self,
            depth: usize,
            p: PauliString,
            w: usize,
            coeff: f64,
            visit: &mut dyn FnMut(&[PauliString], usize, f64) -> bool,
        ) -> bool {
            if depth == self.ops.len() {
                self.history.push(p);
                let keep = visit(&self.history, w, coeff);
                self.history.pop();
                return keep;
            }
            let w = if self.closes { w + p.weight() } else { w };
            if self.k.is_some_and(|k| w >= k) {
                return true;
            }
            let branches = expand(&self.ops[depth], p.clone(), coeff);
            if self.closes {
                self.history.push(p);
            }
            let mut keep = true;
            for (q, a) in branches {
                if !self.go(depth + 1, q, w, a, visit) {
                    keep = false;
                    break;
                }
            }
            if self.closes {
                self.history.pop();
            }
            keep
        }
    }

    let mut walker = Walker {
        ops: &ops,
        k,
        closes,
        history: Vec::new(),
    };
    for (p, a) in o.sorted_terms() {
        if !walker.go(0, p, 0, a, visit) {
            break;
        }
    }
    Ok(())
}

/// Number of legal paths with `|γ| < k` (`None`: no cutoff).
pub fn count_legal_paths(c: &Circuit, o: &PauliSum, k: Option<usize>) -> Result<u64> {
    let mut count = 0u64;
    walk_paths(c, o, k, &mut |_, _, _| {
        count += 1;
        true
    })?;
    Ok(count)
}

/// Up to `limit` legal paths with their boundary Paulis, weights and
/// coefficients.
pub fn enumerate_paths(
    c: &Circuit,
    o: &PauliSum,
    k: Option<usize>,
    limit: usize,
) -> Result<Vec<PathRecord>> {
    let mut out = Vec::new();
    walk_paths(c, o, k, &mut |h, w, a| {
        if out.len() >= limit {
            return false;
        }
        out.push(PathRecord {
            paulis: h.to_vec(),
            weight: w,
            coeff: a,
        });
        true
    })?;
    Ok(out)
}

/// Expectations of the full circuit on `ρ` and of its last `j + 1` layers on `σ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DepthGap {
    pub full: f64,
    pub truncated: f64,
    pub gap: f64,
}

pub fn effective_depth_compare(
    c: &Circuit,
    o: &PauliSum,
    rho: &ProductState,
    sigma: &ProductState,
    j: usize,
    trunc: &TruncationConfig,
) -> Result<DepthGap> {
    let short = crate::circuit::truncate_to_last_layers(c, j)?;
    let full = expectation(&backpropagate(c, o, trunc)?, rho)?;
    let truncated = expectation(&backpropagate(&short, o, trunc)?, sigma)?;
    Ok(DepthGap {
        full,
        truncated,
        gap: (full - truncated).abs(),
    })
}
