#![allow(dead_code)]

use pauliprop::dense::{self, Matrix};
use pauliprop::{
    Angle, Circuit, CliffordGate, Gate, Layer, NormalFormChannel, Pauli, PauliRotation,
    PauliString, PauliSum, ProductState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_pauli(rng: &mut impl Rng, n: usize, allow_identity: bool) -> PauliString {
    loop {
        let mut p = PauliString::identity(n);
        for q in 0..n {
            p.set(q, Pauli::from_index(rng.random_range(0..4)));
        }
        if allow_identity || !p.is_identity() {
            return p;
        }
    }
}

pub fn random_state(rng: &mut impl Rng, n: usize) -> ProductState {
    let bloch = (0..n)
        .map(|_| loop {
            let v = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            if v.iter().map(|x: &f64| x * x).sum::<f64>() <= 1.0 {
                break v;
            }
        })
        .collect();
    ProductState::new(bloch).unwrap()
}

pub fn random_observable(rng: &mut impl Rng, n: usize, terms: usize) -> PauliSum {
    let mut o = PauliSum::new(n);
    while o.is_empty() {
        for _ in 0..terms {
            o.add_term(random_pauli(rng, n, true), rng.random_range(-1.0..1.0))
                .unwrap();
        }
    }
    o
}

pub fn random_channel(rng: &mut impl Rng) -> NormalFormChannel {
    let r = rng.random_range(0.0..1.0);
    match rng.random_range(0..3) {
        0 => NormalFormChannel::depolarizing(r).unwrap(),
        1 => NormalFormChannel::dephasing(r).unwrap(),
        _ => NormalFormChannel::amplitude_damping(r).unwrap(),
    }
}

/// Random gate on a subset of `free` qubits, removing the ones it uses.
fn random_gate(rng: &mut impl Rng, n: usize, free: &mut Vec<usize>, shape: &CircuitShape) -> Gate {
    let two = free.len() >= 2 && rng.random_bool(0.5);
    let take = |rng: &mut dyn rand::RngCore, free: &mut Vec<usize>| {
        let i = rng.random_range(0..free.len());
        free.swap_remove(i)
    };
    let a = take(rng, free);
    let b = if two { Some(take(rng, free)) } else { None };
    if shape.rotations_only || rng.random_bool(0.5) {
        let sup: Vec<usize> = std::iter::once(a).chain(b).collect();
        let label: String = sup
            .iter()
            .map(|_| ['X', 'Y', 'Z'][rng.random_range(0..3)])
            .collect();
        let angle = Angle::Fixed(rng.random_range(-4.0..4.0));
        return Gate::Rotation(PauliRotation::on(n, &sup, &label, angle).unwrap());
    }
    match b {
        None => {
            let name = shape.one_qubit[rng.random_range(0..shape.one_qubit.len())];
            Gate::Clifford(CliffordGate::named(name, &[a]).unwrap())
        }
        Some(b) => {
            let name = shape.two_qubit[rng.random_range(0..shape.two_qubit.len())];
            Gate::Clifford(CliffordGate::named(name, &[a, b]).unwrap())
        }
    }
}

pub struct CircuitShape {
    pub n: usize,
    pub layers: usize,
    pub final_layer: bool,
    pub rotations_only: bool,
    pub one_qubit: &'static [&'static str],
    pub two_qubit: &'static [&'static str],
}

impl CircuitShape {
    pub fn new(n: usize, layers: usize) -> Self {
        Self {
            n,
            layers,
            final_layer: false,
            rotations_only: false,
            one_qubit: &["H", "S", "Sdg", "X", "SX"],
            two_qubit: &["CNOT", "CZ", "SWAP"],
        }
    }
}

/// Random noisy circuit: each layer has one or two sublayers of disjoint
/// gates and noise from a random family on every qubit.
pub fn random_circuit(rng: &mut impl Rng, shape: &CircuitShape) -> Circuit {
    let n = shape.n;
    let mut layers = Vec::new();
    for _ in 0..shape.layers {
        let mut subs = Vec::new();
        for _ in 0..rng.random_range(1..=2) {
            let mut free: Vec<usize> = (0..n).collect();
            let mut gates = Vec::new();
            while !free.is_empty() && rng.random_bool(0.7) {
                gates.push(random_gate(rng, n, &mut free, shape));
            }
            subs.push(gates);
        }
        let noise = if rng.random_bool(0.85) {
            Some((0..n).map(|_| random_channel(rng)).collect())
        } else {
            None
        };
        layers.push(Layer::new(subs, noise).unwrap());
    }
    let final_layer = shape.final_layer.then(|| {
        let mut gates = Vec::new();
        for q in 0..n {
            if rng.random_bool(0.5) {
                let angle = Angle::Fixed(rng.random_range(-4.0..4.0));
                gates.push(Gate::Rotation(PauliRotation::on(n, &[q], "Y", angle).unwrap()));
            }
        }
        gates
    });
    Circuit::new(n, layers, final_layer).unwrap()
}

/// Dense `2^n x 2^n` matrix of a Pauli string; qubit 0 is the leftmost factor.
pub fn dense_pauli(p: &PauliString) -> Matrix {
    let mut m = Matrix::identity(1);
    for q in 0..p.num_qubits() {
        m = m.kron(&dense::pauli_matrix(p.get(q).index()));
    }
    m
}

pub fn dense_sum(o: &PauliSum) -> Matrix {
    let d = 1usize << o.num_qubits();
    let mut m = Matrix::zeros(d);
    for (p, a) in o.iter() {
        m = m.add(&dense_pauli(p).scale(dense::c(a, 0.0)));
    }
    m
}

pub fn mat_vec(m: &Matrix, v: &[num_complex::Complex64]) -> Vec<num_complex::Complex64> {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| m.at(i, j) * v[j]).sum())
        .collect()
}

pub fn i_pow(m: u8) -> num_complex::Complex64 {
    [
        dense::c(1.0, 0.0),
        dense::c(0.0, 1.0),
        dense::c(-1.0, 0.0),
        dense::c(0.0, -1.0),
    ][(m % 4) as usize]
}
