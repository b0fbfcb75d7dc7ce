//! Layered circuits with interleaved single-qubit noise.
//!
//! A [`Circuit`] is `V ∘ (N_L ∘ U_L) ∘ ... ∘ (N_1 ∘ U_1)`: each [`Layer`] holds
//! one or more sublayers of gates with disjoint supports (applied in order)
//! followed by optional per-qubit noise, and `V` is an optional noiseless
//! single-qubit layer. Path weight is accounted once per [`Layer`], so a round
//! of two-qubit gates split into colored sublayers still counts as one layer.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channels::NormalFormChannel;
use crate::error::{Error, Result};
use crate::pauli::PauliString;

mod builders;
pub mod clifford;
mod lattice;

pub use builders::{build_hva, build_trotter_tfim, NoisePlacement};
pub use clifford::CliffordGate;
pub use lattice::Lattice;

/// Rotation angle: concrete, or a placeholder drawn uniformly from `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Angle {
    Fixed(f64),
    Uniform,
}

/// `exp(-i θ/2 G)` for a Pauli string `G`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliRotation {
    generator: PauliString,
    angle: Angle,
}

/// `(cos θ, sin θ)` with exact values within `1e-12` of a multiple of `π/2`.
pub fn snapped_trig(theta: f64) -> (f64, f64) {
    let q = theta / FRAC_PI_2;
    let r = q.round();
    if (theta - r * FRAC_PI_2).abs() <= 1e-12 {
        match (r as i64).rem_euclid(4) {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        }
    } else {
        (theta.cos(), theta.sin())
    }
}

impl PauliRotation {
    /// Rotation about a full-width generator; the support is its non-identity sites.
    pub fn new(generator: PauliString, angle: Angle) -> Result<Self> {
        if generator.is_identity() {
            return Err(Error::InvalidCircuit("rotation generator is the identity".into()));
        }
        if let Angle::Fixed(t) = angle {
            if !t.is_finite() {
                return Err(Error::InvalidCircuit(format!("non-finite angle {t}")));
            }
        }
        Ok(Self { generator, angle })
    }

    /// Rotation from a local label such as `"ZZ"` placed on `support`.
    pub fn on(n: usize, support: &[usize], label: &str, angle: Angle) -> Result<Self> {
        let chars: Vec<char> = label.chars().collect();
        if chars.len() != support.len() {
            return Err(Error::InvalidCircuit(format!(
                "generator {label:?} does not match support {support:?}"
            )));
        }
        let mut sites = Vec::with_capacity(support.len());
        for (&q, &ch) in support.iter().zip(&chars) {
            let p = crate::pauli::Pauli::from_char(ch)
                .ok_or_else(|| Error::InvalidPauli(label.to_string()))?;
            sites.push((q, p));
        }
        let mut sorted = support.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != support.len() {
            return Err(Error::InvalidCircuit(format!("repeated qubit in {support:?}")));
        }
        Self::new(PauliString::from_sites(n, &sites)?, angle)
    }

    pub fn generator(&self) -> &PauliString {
        &self.generator
    }

    pub fn angle(&self) -> Angle {
        self.angle
    }

    pub fn support(&self) -> Vec<usize> {
        self.generator.support().collect()
    }

    /// True when the angle is fixed at a multiple of `π/2`.
    pub fn is_clifford(&self) -> bool {
        match self.angle {
            Angle::Fixed(t) => {
                let (c, s) = snapped_trig(t);
                c == 0.0 || s == 0.0
            }
            Angle::Uniform => false,
        }
    }
}

/// A circuit element.
#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    Clifford(CliffordGate),
    Rotation(PauliRotation),
    /// Placeholder for a uniformly random single-qubit Clifford.
    RandomClifford(usize),
}

impl Gate {
    pub fn support(&self) -> Vec<usize> {
        match self {
            Gate::Clifford(g) => g.support().to_vec(),
            Gate::Rotation(r) => r.support(),
            Gate::RandomClifford(q) => vec![*q],
        }
    }

    /// True when the gate still needs [`sample_circuit`].
    pub fn is_placeholder(&self) -> bool {
        matches!(
            self,
            Gate::RandomClifford(_)
                | Gate::Rotation(PauliRotation {
                    angle: Angle::Uniform,
                    ..
                })
        )
    }
}

/// Gates in ordered sublayers followed by optional per-qubit noise.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    sublayers: Vec<Vec<Gate>>,
    noise: Option<Vec<NormalFormChannel>>,
}

fn check_disjoint(gates: &[Gate]) -> Result<()> {
    let mut used = Vec::new();
    for g in gates {
        for q in g.support() {
            if used.contains(&q) {
                return Err(Error::InvalidCircuit(format!(
                    "overlapping gate supports on qubit {q}"
                )));
            }
            used.push(q);
        }
    }
    Ok(())
}

impl Layer {
    /// Layer of sublayers; each sublayer must have pairwise disjoint supports.
    pub fn new(sublayers: Vec<Vec<Gate>>, noise: Option<Vec<NormalFormChannel>>) -> Result<Self> {
        for sub in &sublayers {
            check_disjoint(sub)?;
        }
        Ok(Self { sublayers, noise })
    }

    /// Single sublayer.
    pub fn from_gates(gates: Vec<Gate>, noise: Option<Vec<NormalFormChannel>>) -> Result<Self> {
        Self::new(vec![gates], noise)
    }

    /// Noise-only layer.
    pub fn noise_only(noise: Vec<NormalFormChannel>) -> Self {
        Self {
            sublayers: Vec::new(),
            noise: Some(noise),
        }
    }

    pub fn sublayers(&self) -> &[Vec<Gate>] {
        &self.sublayers
    }

    pub fn noise(&self) -> Option<&[NormalFormChannel]> {
        self.noise.as_deref()
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.sublayers.iter().flatten()
    }

    fn gates_mut(&mut self) -> impl Iterator<Item = &mut Gate> {
        self.sublayers.iter_mut().flatten()
    }
}

/// Noisy layered circuit on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n: usize,
    layers: Vec<Layer>,
    final_layer: Option<Vec<Gate>>,
}

impl Circuit {
    pub fn new(n: usize, layers: Vec<Layer>, final_layer: Option<Vec<Gate>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidCircuit("circuit needs at least one qubit".into()));
        }
        let check_gate = |g: &Gate| -> Result<()> {
            let sup = g.support();
            if let Some(&q) = sup.iter().find(|&&q| q >= n) {
                return Err(Error::InvalidCircuit(format!("qubit {q} out of range for n={n}")));
            }
            if let Gate::Rotation(r) = g {
                if r.generator().num_qubits() != n {
                    return Err(Error::QubitMismatch {
                        expected: n,
                        actual: r.generator().num_qubits(),
                    });
                }
            }
            Ok(())
        };
        for layer in &layers {
            for g in layer.gates() {
                check_gate(g)?;
            }
            if let Some(noise) = &layer.noise {
                if noise.len() != n {
                    return Err(Error::QubitMismatch {
                        expected: n,
                        actual: noise.len(),
                    });
                }
            }
        }
        if let Some(fl) = &final_layer {
            check_disjoint(fl)?;
            for g in fl {
                check_gate(g)?;
                if g.support().len() != 1 {
                    return Err(Error::InvalidCircuit(
                        "final layer may only hold single-qubit gates".into(),
                    ));
                }
            }
        }
        Ok(Self {
            n,
            layers,
            final_layer,
        })
    }

    /// Circuit with no layers.
    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, Vec::new(), None)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Layer count `L`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn final_layer(&self) -> Option<&[Gate]> {
        self.final_layer.as_deref()
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.layers
            .iter()
            .flat_map(|l| l.gates())
            .chain(self.final_layer.iter().flatten())
    }

    /// True when no gate is a placeholder.
    pub fn is_concrete(&self) -> bool {
        !self.gates().any(Gate::is_placeholder)
    }

    /// Same circuit with the layers repeated `times` times.
    pub fn repeated(&self, times: usize) -> Circuit {
        let mut layers = Vec::with_capacity(self.layers.len() * times);
        for _ in 0..times {
            layers.extend(self.layers.iter().cloned());
        }
        Circuit {
            n: self.n,
            layers,
            final_layer: self.final_layer.clone(),
        }
    }
}

/// Replaces every placeholder with an independent draw; reproducible per seed.
pub fn sample_circuit(template: &Circuit, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = template.clone();
    let group = clifford::single_qubit_cliffords();
    let mut draw = |g: &mut Gate| match g {
        Gate::Rotation(r) if r.angle == Angle::Uniform => {
            r.angle = Angle::Fixed(rng.random_range(0.0..TAU));
        }
        Gate::RandomClifford(q) => {
            let e = &group[rng.random_range(0..group.len())];
            *g = Gate::Clifford(e.relocated(&[*q]).expect("single-qubit support"));
        }
        _ => {}
    };
    for layer in &mut out.layers {
        for g in layer.gates_mut() {
            draw(g);
        }
    }
    if let Some(fl) = &mut out.final_layer {
        for g in fl {
            draw(g);
        }
    }
    out
}

/// The final single-qubit layer plus the last `j + 1` layers (all layers when
/// `j + 1 > L`).
pub fn truncate_to_last_layers(c: &Circuit, j: usize) -> Result<Circuit> {
    let l = c.depth();
    if j > l {
        return Err(Error::OutOfRange(format!("j = {j} exceeds depth {l}")));
    }
    let keep = (j + 1).min(l);
    Ok(Circuit {
        n: c.n,
        layers: c.layers[l - keep..].to_vec(),
        final_layer: c.final_layer.clone(),
    })
}

/// Law for rotation angles produced by builders.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AngleLaw {
    Fixed(f64),
    Uniform,
}

/// Optional single-qubit Clifford layer opening every builder block.
#[derive(Clone, Debug, PartialEq)]
pub enum CliffordLaw {
    Absent,
    Fixed(String),
    Uniform,
}

/// Gate distributions used by the builders.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub rotation: AngleLaw,
    pub clifford: CliffordLaw,
    pub seed: u64,
}

impl EnsembleSpec {
    /// Independent uniform angles, no Clifford layer.
    pub fn uniform(seed: u64) -> Self {
        Self {
            rotation: AngleLaw::Uniform,
            clifford: CliffordLaw::Absent,
            seed,
        }
    }

    pub fn fixed(angle: f64) -> Self {
        Self {
            rotation: AngleLaw::Fixed(angle),
            clifford: CliffordLaw::Absent,
            seed: 0,
        }
    }

    pub(crate) fn angle(&self) -> Angle {
        match self.rotation {
            AngleLaw::Fixed(t) => Angle::Fixed(t),
            AngleLaw::Uniform => Angle::Uniform,
        }
    }
}

/// Same channel on every qubit, or one channel per qubit.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseModel {
    None,
    Uniform(NormalFormChannel),
    PerQubit(Vec<NormalFormChannel>),
}

impl NoiseModel {
    /// Per-qubit channel list, or `None` for noiseless layers.
    pub fn channels(&self, n: usize) -> Result<Option<Vec<NormalFormChannel>>> {
        match self {
            NoiseModel::None => Ok(None),
            NoiseModel::Uniform(ch) => Ok(Some(vec![ch.clone(); n])),
            NoiseModel::PerQubit(v) => {
                if v.len() != n {
                    return Err(Error::QubitMismatch {
                        expected: n,
                        actual: v.len(),
                    });
                }
                Ok(Some(v.clone()))
            }
        }
    }
}
