//! Path-sampling estimates of ensemble second moments.
//!
//! A sample draws `P_L` with probability `a_P² / ‖O‖²`, then walks backwards
//! through every primitive, choosing each output with probability
//! proportional to its mean squared transition amplitude. The product of the
//! per-step normalizations `K(γ)` times the functional `f(γ)` is an unbiased
//! estimate of `E Σ_γ Φ_γ² f(γ)`, and lies in `[0, ‖O‖²]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{sample_circuit, snapped_trig, Angle, Circuit, Gate, Layer};
use crate::error::{Error, Result};
use crate::oracle;
use crate::pauli::{Pauli, PauliString, PauliSum, ProductState};
use crate::propagation::{backpropagate, expectation, TruncationConfig};

/// Quantity averaged over sampled paths.
#[derive(Clone, Debug, PartialEq)]
pub enum Functional {
    /// `f = Tr[P_0 ρ]²`: second moment of the expectation value.
    Variance { state: ProductState },
    /// `f = Tr[P_0 ρ]²` on paths with `|γ| >= k`.
    TruncMse { k: usize, state: ProductState },
    /// `f = 1` on paths with `|γ| >= k`.
    TruncFrobenius { k: usize },
}

impl Functional {
    fn state(&self) -> Option<&ProductState> {
        match self {
            Functional::Variance { state } | Functional::TruncMse { state, .. } => Some(state),
            Functional::TruncFrobenius { .. } => None,
        }
    }
}

/// Mean and standard error of the sample values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub mean: f64,
    pub standard_error: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Sampling step of one primitive.
#[derive(Clone, Debug)]
enum Step {
    /// Uniform-angle rotation about `generator`.
    Uniform(PauliString),
    /// Fixed rotation by an odd multiple of `π/2`: anticommuting inputs map to `iGP`.
    QuarterTurn(PauliString),
    Clifford(crate::circuit::CliffordGate),
    RandomClifford(usize),
    /// Squared adjoint rows of a channel on one qubit.
    Noise { qubit: usize, weights: [[f64; 4]; 4] },
}

fn compile_gate(g: &Gate) -> Result<Option<Step>> {
    Ok(Some(match g {
        Gate::Clifford(c) => Step::Clifford(c.clone()),
        Gate::RandomClifford(q) => Step::RandomClifford(*q),
        Gate::Rotation(r) => match r.angle() {
            Angle::Uniform => Step::Uniform(r.generator().clone()),
            Angle::Fixed(t) => {
                let (c, s) = snapped_trig(t);
                if s == 0.0 {
                    // ±identity up to a global sign that squares away
                    return Ok(None);
                }
                if c != 0.0 {
                    return Err(Error::Unsupported(format!(
                        "fixed non-Clifford rotation angle {t} in a sampled ensemble"
                    )));
                }
                Step::QuarterTurn(r.generator().clone())
            }
        },
    }))
}

fn compile_layer(layer: Option<&Layer>, final_gates: Option<&[Gate]>) -> Result<Vec<Step>> {
    let mut steps = Vec::new();
    for g in final_gates.into_iter().flatten() {
        steps.extend(compile_gate(g)?);
    }
    if let Some(layer) = layer {
        if let Some(noise) = layer.noise() {
            for (q, ch) in noise.iter().enumerate() {
                if ch.is_identity() {
                    continue;
                }
                let rows = ch.adjoint_rows();
                let mut weights = [[0.0; 4]; 4];
                for p in 0..4 {
                    for j in 0..4 {
                        weights[p][j] = rows[p][j] * rows[p][j];
                    }
                }
                steps.push(Step::Noise { qubit: q, weights });
            }
        }
        for sub in layer.sublayers().iter().rev() {
            for g in sub {
                steps.extend(compile_gate(g)?);
            }
        }
    }
    Ok(steps)
}

/// Squared-norm contribution and output distribution of one step.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondMomentStep {
    /// `(output, probability)` pairs.
    pub outputs: Vec<(PauliString, f64)>,
    pub norm: f64,
}

/// Mean second-moment transitions of a uniform-angle rotation.
pub fn second_moment_rotation(generator: &PauliString, input: &PauliString) -> Result<SecondMomentStep> {
    if generator.commutes(input)? {
        return Ok(SecondMomentStep {
            outputs: vec![(input.clone(), 1.0)],
            norm: 1.0,
        });
    }
    let (r, _) = generator.multiply(input)?;
    Ok(SecondMomentStep {
        outputs: vec![(input.clone(), 0.5), (r, 0.5)],
        norm: 1.0,
    })
}

/// Second-moment transitions of a fixed channel on site `qubit`.
pub fn second_moment_noise(
    channel: &crate::channels::NormalFormChannel,
    qubit: usize,
    input: &PauliString,
) -> SecondMomentStep {
    let p = input.get(qubit).index();
    let row = channel.adjoint_rows()[p];
    let norm: f64 = row.iter().map(|a| a * a).sum();
    let mut outputs = Vec::new();
    for (j, a) in row.iter().enumerate() {
        if *a != 0.0 {
            let mut s = input.clone();
            s.set(qubit, Pauli::from_index(j));
            outputs.push((s, a * a / norm));
        }
    }
    SecondMomentStep { outputs, norm }
}

/// Compiled sampler for one circuit template and observable.
struct PathSampler {
    layers: Vec<Vec<Step>>,
    closes: bool,
    terms: Vec<(PauliString, f64)>,
    cumulative: Vec<f64>,
    norm_sq: f64,
}

/// Outcome of one sampled path.
struct PathSample {
    weight: usize,
    k_factor: f64,
    p0: PauliString,
}

impl PathSampler {
    fn new(c: &Circuit, o: &PauliSum) -> Result<Self> {
        if c.num_qubits() != o.num_qubits() {
            return Err(Error::QubitMismatch {
                expected: c.num_qubits(),
                actual: o.num_qubits(),
            });
        }
        if o.is_empty() {
            return Err(Error::EmptyObservable);
        }
        let mut layers = Vec::new();
        match c.layers().split_last() {
            None => layers.push(compile_layer(None, c.final_layer())?),
            Some((last, rest)) => {
                layers.push(compile_layer(Some(last), c.final_layer())?);
                for l in rest.iter().rev() {
                    layers.push(compile_layer(Some(l), None)?);
                }
            }
        }
        let terms = o.sorted_terms();
        let mut acc = 0.0;
        let cumulative = terms
            .iter()
            .map(|(_, a)| {
                acc += a * a;
                acc
            })
            .collect();
        Ok(Self {
            layers,
            closes: c.depth() > 0,
            terms,
            cumulative,
            norm_sq: acc,
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> PathSample {
        let u = rng.random::<f64>() * self.norm_sq;
        let idx = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.terms.len() - 1);
        let mut p = self.terms[idx].0.clone();
        let mut k_factor = self.norm_sq;
        let mut weight = 0usize;
        for steps in &self.layers {
            if self.closes {
                weight += p.weight();
            }
            for step in steps {
                match step {
                    Step::Uniform(g) => {
                        if !p.commutes_unchecked(g) && rng.random::<bool>() {
                            p = g.multiply_unchecked(&p).0;
                        }
                    }
                    Step::QuarterTurn(g) => {
                        if !p.commutes_unchecked(g) {
                            p = g.multiply_unchecked(&p).0;
                        }
                    }
                    Step::Clifford(g) => p = g.conjugate(&p).0,
                    Step::RandomClifford(q) => {
                        if p.get(*q) != Pauli::I {
                            p.set(*q, Pauli::from_index(rng.random_range(1..4)));
                        }
                    }
                    Step::Noise { qubit, weights } => {
                        let site = p.get(*qubit).index();
                        if site == 0 {
                            continue;
                        }
                        let row = &weights[site];
                        let total: f64 = row.iter().sum();
                        k_factor *= total;
                        if total == 0.0 {
                            return PathSample {
                                weight,
                                k_factor: 0.0,
                                p0: p,
                            };
                        }
                        let mut u = rng.random::<f64>() * total;
                        let mut pick = site;
                        for (j, &w) in row.iter().enumerate() {
                            if w == 0.0 {
                                continue;
                            }
                            pick = j;
                            if u < w {
                                break;
                            }
                            u -= w;
                        }
                        p.set(*qubit, Pauli::from_index(pick));
                    }
                }
            }
        }
        PathSample {
            weight,
            k_factor,
            p0: p,
        }
    }
}

fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Streaming mean / sum of squared deviations.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *o;
            return;
        }
        let n = (self.count + o.count) as f64;
        let d = o.mean - self.mean;
        self.mean += d * o.count as f64 / n;
        self.m2 += o.m2 + d * d * self.count as f64 * o.count as f64 / n;
        self.count += o.count;
    }

    fn result(&self, seed: u64) -> EstimateResult {
        let se = if self.count > 1 {
            (self.m2.max(0.0) / (self.count - 1) as f64).sqrt() / (self.count as f64).sqrt()
        } else {
            0.0
        };
        EstimateResult {
            mean: self.mean,
            standard_error: se,
            samples: self.count,
            seed,
        }
    }
}

const CHUNK: u64 = 4096;

/// Sample values for each entry of `ks`; `None` is the untruncated variance.
fn run_profile(
    template: &Circuit,
    o: &PauliSum,
    state: Option<&ProductState>,
    ks: &[Option<usize>],
    samples: u64,
    seed: u64,
) -> Result<Vec<EstimateResult>> {
    if samples == 0 {
        return Err(Error::OutOfRange("need at least one sample".into()));
    }
    if let Some(s) = state {
        if s.num_qubits() != template.num_qubits() {
            return Err(Error::QubitMismatch {
                expected: template.num_qubits(),
                actual: s.num_qubits(),
            });
        }
    }
    let sampler = PathSampler::new(template, o)?;
    let bound = sampler.norm_sq * (1.0 + 1e-9);
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Vec<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut acc = vec![Moments::default(); ks.len()];
            for i in ci * CHUNK..((ci + 1) * CHUNK).min(samples) {
                let mut rng = sample_rng(seed, i);
                let s = sampler.sample(&mut rng);
                let f = match state {
                    Some(st) => {
                        let e = st.pauli_expectation(&s.p0);
                        e * e
                    }
                    None => 1.0,
                };
                let base = s.k_factor * f;
                debug_assert!((0.0..=bound).contains(&base), "sample {base} out of range");
                for (m, k) in acc.iter_mut().zip(ks) {
                    let keep = k.is_none_or(|k| s.weight >= k);
                    m.push(if keep { base } else { 0.0 });
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Moments::default(); ks.len()];
    for part in &parts {
        for (t, m) in total.iter_mut().zip(part) {
            t.merge(m);
        }
    }
    Ok(total.iter().map(|m| m.result(seed)).collect())
}

/// Path-sampling estimate of `f` over the ensemble described by `template`.
///
/// Placeholders in the template are the random elements: uniform angles and
/// uniform single-qubit Cliffords. Fixed rotations must be multiples of `π/2`.
///
/// The estimate is unbiased when distinct paths are decorrelated by the
/// random gates. Two rounds of non-unital noise with only commuting
/// rotations between them (e.g. noise after every HVA sublayer) break this;
/// [`validate_estimator`] detects it on small instances.
pub fn estimate(
    template: &Circuit,
    o: &PauliSum,
    f: &Functional,
    samples: u64,
    seed: u64,
) -> Result<EstimateResult> {
    let k = match f {
        Functional::Variance { .. } => None,
        Functional::TruncMse { k, .. } | Functional::TruncFrobenius { k } => Some(*k),
    };
    Ok(run_profile(template, o, f.state(), &[k], samples, seed)?[0])
}

/// Truncation profile: one estimate per `k`, all from the same samples.
///
/// With a state this is `TruncMse(k)`, otherwise `TruncFrobenius(k)`.
pub fn estimate_profile(
    template: &Circuit,
    o: &PauliSum,
    state: Option<&ProductState>,
    ks: &[usize],
    samples: u64,
    seed: u64,
) -> Result<Vec<EstimateResult>> {
    let ks: Vec<Option<usize>> = ks.iter().map(|&k| Some(k)).collect();
    run_profile(template, o, state, &ks, samples, seed)
}

/// Path-sampling estimate next to a direct average over sampled circuits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Validation {
    pub mc: EstimateResult,
    pub direct: f64,
    pub direct_standard_error: f64,
    pub agree: bool,
}

/// Largest `n` accepted by [`validate_estimator`].
pub const MAX_VALIDATION_QUBITS: usize = 4;

/// Compares [`estimate`] against exact evaluation of `circuits` sampled
/// circuits; they agree when within 4 combined standard errors.
pub fn validate_estimator(
    template: &Circuit,
    o: &PauliSum,
    f: &Functional,
    samples: u64,
    circuits: u64,
    seed: u64,
) -> Result<Validation> {
    let n = template.num_qubits();
    if n > MAX_VALIDATION_QUBITS {
        return Err(Error::TooLarge {
            n,
            max: MAX_VALIDATION_QUBITS,
        });
    }
    if circuits < 2 {
        return Err(Error::OutOfRange("need at least two sampled circuits".into()));
    }
    let mc = estimate(template, o, f, samples, seed)?;
    let circuit_seed = seed ^ 0x9E37_79B9_7F4A_7C15;
    let values: Vec<Result<f64>> = (0..circuits)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(circuit_seed, i);
            let c = sample_circuit(template, rng.random());
            match f {
                Functional::Variance { state } => {
                    let e = oracle::simulate_exact(&c, state, o)?;
                    Ok(e * e)
                }
                Functional::TruncMse { k, state } => {
                    let full = oracle::simulate_exact(&c, state, o)?;
                    let r = backpropagate(&c, o, &TruncationConfig::with_k(*k))?;
                    let d = full - expectation(&r, state)?;
                    Ok(d * d)
                }
                Functional::TruncFrobenius { k } => {
                    let full = oracle::heisenberg_exact(&c, o)?;
                    let r = backpropagate(&c, o, &TruncationConfig::with_k(*k))?;
                    Ok(full.difference(&r.terms)?.frobenius_norm_sq())
                }
            }
        })
        .collect();
    let mut m = Moments::default();
    for v in values {
        m.push(v?);
    }
    let direct = m.result(circuit_seed);
    let tol = 4.0 * (mc.standard_error.powi(2) + direct.standard_error.powi(2)).sqrt();
    Ok(Validation {
        mc,
        direct: direct.mean,
        direct_standard_error: direct.standard_error,
        agree: (mc.mean - direct.mean).abs() <= tol.max(1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::NormalFormChannel;
    use crate::circuit::{CliffordGate, PauliRotation};
    use approx::assert_abs_diff_eq;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn rx(angle: Angle) -> Gate {
        Gate::Rotation(PauliRotation::on(1, &[0], "X", angle).unwrap())
    }

    fn z() -> PauliSum {
        PauliSum::from_labels(&[("Z", 1.0)]).unwrap()
    }

    #[test]
    fn empty_circuit_is_exact() {
        let c = Circuit::empty(2).unwrap();
        let o = PauliSum::from_labels(&[("ZI", 1.0)]).unwrap();
        let f = Functional::Variance {
            state: ProductState::zeros(2),
        };
        let r = estimate(&c, &o, &f, 1000, 3).unwrap();
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.standard_error, 0.0);
        assert_eq!(r.samples, 1000);
    }

    #[test]
    fn uniform_rx_variance_is_half() {
        let c = Circuit::new(1, vec![Layer::from_gates(vec![rx(Angle::Uniform)], None).unwrap()], None)
            .unwrap();
        let f = Functional::Variance {
            state: ProductState::zeros(1),
        };
        let r = estimate(&c, &z(), &f, 200_000, 1).unwrap();
        assert!((r.mean - 0.5).abs() < 4.0 * r.standard_error, "{r:?}");
    }

    #[test]
    fn uniform_rx_with_damping() {
        let g = 0.3;
        let noise = vec![NormalFormChannel::amplitude_damping(g).unwrap()];
        let c = Circuit::new(
            1,
            vec![Layer::from_gates(vec![rx(Angle::Uniform)], Some(noise)).unwrap()],
            None,
        )
        .unwrap();
        let f = Functional::Variance {
            state: ProductState::zeros(1),
        };
        let r = estimate(&c, &z(), &f, 400_000, 2).unwrap();
        let expected = (1.0 - g) * (1.0 - g) / 2.0 + g * g;
        assert!((r.mean - expected).abs() < 4.0 * r.standard_error, "{r:?} vs {expected}");
        let v = validate_estimator(&c, &z(), &f, 100_000, 4000, 9).unwrap();
        assert!(v.agree, "{v:?}");
    }

    #[test]
    fn clifford_depolarizing_is_deterministic() {
        let h = Gate::Clifford(CliffordGate::named("H", &[0]).unwrap());
        let noise = vec![NormalFormChannel::depolarizing(0.2).unwrap()];
        let c = Circuit::new(1, vec![Layer::from_gates(vec![h], Some(noise)).unwrap()], None)
            .unwrap();
        let o = PauliSum::from_labels(&[("X", 1.0)]).unwrap();
        let st = ProductState::new(vec![[0.0, 0.0, 1.0]]).unwrap();
        let r = estimate(&c, &o, &Functional::Variance { state: st.clone() }, 100, 0).unwrap();
        let e = oracle::simulate_exact(&c, &st, &o).unwrap();
        assert_abs_diff_eq!(r.mean, e * e, epsilon = 1e-15);
        assert_eq!(r.standard_error, 0.0);
    }

    #[test]
    fn fixed_generic_angles_are_rejected() {
        let c = Circuit::new(1, vec![Layer::from_gates(vec![rx(Angle::Fixed(0.3))], None).unwrap()], None)
            .unwrap();
        let f = Functional::TruncFrobenius { k: 1 };
        assert!(matches!(estimate(&c, &z(), &f, 10, 0), Err(Error::Unsupported(_))));
        let q = Circuit::new(
            1,
            vec![Layer::from_gates(vec![rx(Angle::Fixed(std::f64::consts::FRAC_PI_2))], None).unwrap()],
            None,
        )
        .unwrap();
        assert!(estimate(&q, &z(), &f, 10, 0).is_ok());
    }

    #[test]
    fn second_moment_steps() {
        let s = second_moment_rotation(&ps("Z"), &ps("Z")).unwrap();
        assert_eq!(s.outputs, vec![(ps("Z"), 1.0)]);
        let s = second_moment_rotation(&ps("Z"), &ps("X")).unwrap();
        assert_eq!(s.outputs, vec![(ps("X"), 0.5), (ps("Y"), 0.5)]);
        assert_eq!(s.norm, 1.0);
        let s = second_moment_rotation(&ps("ZZ"), &ps("XI")).unwrap();
        assert_eq!(s.outputs, vec![(ps("XI"), 0.5), (ps("YZ"), 0.5)]);

        let g = 0.3;
        let ad = NormalFormChannel::amplitude_damping(g).unwrap();
        let s = second_moment_noise(&ad, 0, &ps("Z"));
        let c = (1.0 - g) * (1.0 - g) + g * g;
        assert_abs_diff_eq!(s.norm, c, epsilon = 1e-15);
        assert_eq!(s.outputs.len(), 2);
        assert_abs_diff_eq!(s.outputs[0].1, g * g / c, epsilon = 1e-15);
        assert_eq!(s.outputs[0].0, ps("I"));
        let dp = NormalFormChannel::dephasing(0.1).unwrap();
        let s = second_moment_noise(&dp, 0, &ps("X"));
        assert_eq!(s.outputs, vec![(ps("X"), 1.0)]);
        assert_abs_diff_eq!(s.norm, 0.64, epsilon = 1e-15);
        let s = second_moment_noise(&ad, 0, &ps("I"));
        assert_eq!((s.outputs, s.norm), (vec![(ps("I"), 1.0)], 1.0));
    }

    #[test]
    fn profile_matches_single_estimates() {
        let noise = vec![NormalFormChannel::dephasing(0.1).unwrap(); 2];
        let rot = |sup: &[usize], l: &str| {
            Gate::Rotation(PauliRotation::on(2, sup, l, Angle::Uniform).unwrap())
        };
        let layer = Layer::new(
            vec![vec![rot(&[0], "X"), rot(&[1], "X")], vec![rot(&[0, 1], "ZZ")]],
            Some(noise),
        )
        .unwrap();
        let c = Circuit::new(2, vec![layer; 4], None).unwrap();
        let o = PauliSum::from_labels(&[("ZI", 1.0)]).unwrap();
        let prof = estimate_profile(&c, &o, None, &[2, 4], 5000, 11).unwrap();
        let single = estimate(&c, &o, &Functional::TruncFrobenius { k: 4 }, 5000, 11).unwrap();
        assert_eq!(prof[1], single);
        assert!(prof[0].mean >= prof[1].mean);
    }

    #[test]
    fn moments_merge_matches_direct() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..37].iter().for_each(|&x| a.push(x));
        xs[37..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert_abs_diff_eq!(a.mean, all.mean, epsilon = 1e-14);
        assert_abs_diff_eq!(a.m2, all.m2, epsilon = 1e-12);
    }
}
