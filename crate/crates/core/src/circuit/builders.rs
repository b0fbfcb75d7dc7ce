use serde::{Deserialize, Serialize};

use super::{
    Angle, Circuit, CliffordGate, CliffordLaw, EnsembleSpec, Gate, Lattice, Layer, NoiseModel,
    PauliRotation,
};
use crate::channels::NormalFormChannel;
use crate::error::Result;

/// Where builders insert the noise rounds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoisePlacement {
    /// One noisy layer per rotation round (RX, RZ, two-qubit round).
    #[default]
    EveryLayer,
    /// One noisy layer per HVA block or Trotter step.
    EveryStep,
}

fn single_round(n: usize, label: &str, angle: Angle) -> Result<Vec<Gate>> {
    (0..n)
        .map(|q| PauliRotation::on(n, &[q], label, angle).map(Gate::Rotation))
        .collect()
}

fn pair_rounds(lattice: &Lattice, label: &str, angle: Angle) -> Result<Vec<Vec<Gate>>> {
    let n = lattice.num_qubits();
    lattice
        .edge_coloring()
        .into_iter()
        .map(|color| {
            color
                .into_iter()
                .map(|(a, b)| PauliRotation::on(n, &[a, b], label, angle).map(Gate::Rotation))
                .collect()
        })
        .collect()
}

fn clifford_round(n: usize, law: &CliffordLaw) -> Result<Option<Vec<Gate>>> {
    match law {
        CliffordLaw::Absent => Ok(None),
        CliffordLaw::Uniform => Ok(Some((0..n).map(Gate::RandomClifford).collect())),
        CliffordLaw::Fixed(name) => Ok(Some(
            (0..n)
                .map(|q| CliffordGate::named(name, &[q]).map(Gate::Clifford))
                .collect::<Result<_>>()?,
        )),
    }
}

fn assemble(
    rounds: Vec<Vec<Vec<Gate>>>,
    noise: &Option<Vec<NormalFormChannel>>,
    placement: NoisePlacement,
) -> Result<Vec<Layer>> {
    let rounds: Vec<_> = rounds.into_iter().filter(|r| !r.is_empty()).collect();
    match placement {
        NoisePlacement::EveryLayer => rounds
            .into_iter()
            .map(|subs| Layer::new(subs, noise.clone()))
            .collect(),
        NoisePlacement::EveryStep => {
            if rounds.is_empty() {
                return Ok(Vec::new());
            }
            let subs = rounds.into_iter().flatten().collect();
            Ok(vec![Layer::new(subs, noise.clone())?])
        }
    }
}

/// Hamiltonian variational ansatz: per block an RX round, an RZ round and an
/// RZZ round over every lattice edge (split into disjoint sublayers).
///
/// A Clifford law other than `Absent` prepends a single-qubit Clifford round
/// to the RX round. Angles follow `ensemble.rotation`; uniform angles are left
/// as placeholders for [`super::sample_circuit`].
pub fn build_hva(
    lattice: &Lattice,
    noise: &NoiseModel,
    ensemble: &EnsembleSpec,
    blocks: usize,
    placement: NoisePlacement,
) -> Result<Circuit> {
    lattice.validate()?;
    let n = lattice.num_qubits();
    let channels = noise.channels(n)?;
    let angle = ensemble.angle();
    let mut layers = Vec::new();
    for _ in 0..blocks {
        let mut first = Vec::new();
        if let Some(c) = clifford_round(n, &ensemble.clifford)? {
            first.push(c);
        }
        first.push(single_round(n, "X", angle)?);
        let rounds = vec![
            first,
            vec![single_round(n, "Z", angle)?],
            pair_rounds(lattice, "ZZ", angle)?,
        ];
        layers.extend(assemble(rounds, &channels, placement)?);
    }
    Circuit::new(n, layers, None)
}

/// Second-order Trotterization of `H = -J Σ X_i X_j - h Σ Z_i`.
///
/// Each step is `RZ(-h dt)`, `RXX(-2 J dt)`, `RZ(-h dt)` with rotations
/// `exp(-i θ/2 G)`, so the half steps are `exp(i h dt/2 Z)` and the bond step is
/// `exp(i J dt XX)`.
pub fn build_trotter_tfim(
    lattice: &Lattice,
    j: f64,
    h: f64,
    dt: f64,
    steps: usize,
    noise: &NoiseModel,
    placement: NoisePlacement,
) -> Result<Circuit> {
    lattice.validate()?;
    let n = lattice.num_qubits();
    let channels = noise.channels(n)?;
    let z_half = Angle::Fixed(-h * dt);
    let xx = Angle::Fixed(-2.0 * j * dt);
    let mut layers = Vec::new();
    for _ in 0..steps {
        let rounds = vec![
            vec![single_round(n, "Z", z_half)?],
            pair_rounds(lattice, "XX", xx)?,
            vec![single_round(n, "Z", z_half)?],
        ];
        layers.extend(assemble(rounds, &channels, placement)?);
    }
    Circuit::new(n, layers, None)
}
