mod common;

use std::collections::BTreeSet;

use common::*;
use num_complex::Complex64;
use pauliprop::channels::{upsilon, ChannelKind};
use pauliprop::dense::{self, c, Matrix};
use pauliprop::oracle::{evolve_state, heisenberg_exact, simulate_exact};
use pauliprop::propagation::{count_legal_paths, enumerate_paths};
use pauliprop::{
    backpropagate, build_hva, build_trotter_tfim, expectation, sample_circuit, ChannelClass,
    Circuit, CliffordGate, EnsembleSpec, Gate, Lattice, Layer, NoiseModel, NoisePlacement,
    NormalFormChannel, Pauli, PauliString, PauliSum, ProductState, TruncationConfig,
};
use proptest::prelude::*;
use rand::Rng;

fn random_vector(seed: u64, d: usize) -> Vec<Complex64> {
    let mut r = rng(seed);
    (0..d)
        .map(|_| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multiply_matches_dense_and_is_associative(seed in any::<u64>(), n in 1usize..=8) {
        let mut r = rng(seed);
        let (p, q, s) = (random_pauli(&mut r, n, true), random_pauli(&mut r, n, true), random_pauli(&mut r, n, true));
        let v = random_vector(seed ^ 1, 1 << n);
        // P (Q v) = i^m R v
        let (pq, m) = p.multiply(&q).unwrap();
        let lhs = mat_vec(&dense_pauli(&p), &mat_vec(&dense_pauli(&q), &v));
        let rhs: Vec<Complex64> = mat_vec(&dense_pauli(&pq), &v).iter().map(|x| x * i_pow(m)).collect();
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert!((a - b).norm() < 1e-12);
        }
        let (pq_s, m1) = pq.multiply(&s).unwrap();
        let (qs, m2) = q.multiply(&s).unwrap();
        let (p_qs, m3) = p.multiply(&qs).unwrap();
        prop_assert_eq!(&pq_s, &p_qs);
        prop_assert_eq!((m + m1) % 4, (m2 + m3) % 4);
        // P (P Q) recovers Q
        prop_assert_eq!(p.multiply(&pq).unwrap().0, q);
    }

    #[test]
    fn frobenius_matches_dense_trace(seed in any::<u64>(), n in 1usize..=4, terms in 1usize..8) {
        let mut r = rng(seed);
        let o = random_observable(&mut r, n, terms);
        let m = dense_sum(&o);
        let tr = m.matmul(&m).trace().re / (1u64 << n) as f64;
        prop_assert!((tr - o.frobenius_norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn expectation_matches_dense_trace(seed in any::<u64>(), n in 1usize..=4, terms in 1usize..6) {
        let mut r = rng(seed);
        let o = random_observable(&mut r, n, terms);
        let st = random_state(&mut r, n);
        let mut rho = Matrix::identity(1);
        for b in st.bloch() {
            let site = Matrix::identity(2)
                .add(&dense::pauli_matrix(1).scale(c(b[0], 0.0)))
                .add(&dense::pauli_matrix(2).scale(c(b[1], 0.0)))
                .add(&dense::pauli_matrix(3).scale(c(b[2], 0.0)))
                .scale(c(0.5, 0.0));
            rho = rho.kron(&site);
        }
        let dense_val = dense_sum(&o).matmul(&rho).trace().re;
        prop_assert!((dense_val - o.expectation_product_state(&st).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn random_valid_channels_have_upsilon_at_most_one(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ch = random_channel(&mut r);
        let u = upsilon(ch.d(), ch.t());
        prop_assert!(u <= 1.0 + 1e-12);
        let dinf = ch.d().iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let t2: f64 = ch.t().iter().map(|x| x * x).sum();
        if (dinf > 0.0 && dinf < 1.0) || (t2 > 0.0 && t2 < 1.0) {
            prop_assert!(u < 1.0);
        }
    }

    #[test]
    fn oracle_agrees_with_density_matrix_simulation(seed in any::<u64>(), n in 1usize..=3, layers in 0usize..=4) {
        let mut r = rng(seed);
        let shape = CircuitShape { final_layer: true, ..CircuitShape::new(n, layers) };
        let circ = random_circuit(&mut r, &shape);
        let st = random_state(&mut r, n);
        let o = random_observable(&mut r, n, 4);
        let val = density_matrix_expectation(&circ, &st, &o);
        prop_assert!((simulate_exact(&circ, &st, &o).unwrap() - val).abs() < 1e-12);
    }

    #[test]
    fn heisenberg_and_schrodinger_agree(seed in any::<u64>(), n in 1usize..=4, layers in 0usize..=5) {
        let mut r = rng(seed);
        let shape = CircuitShape { final_layer: true, ..CircuitShape::new(n, layers) };
        let circ = random_circuit(&mut r, &shape);
        let st = random_state(&mut r, n);
        let o = random_observable(&mut r, n, 5);
        let h = heisenberg_exact(&circ, &o).unwrap();
        let a = h.expectation_product_state(&st).unwrap();
        let b = simulate_exact(&circ, &st, &o).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        // identity coefficient stays exactly one
        prop_assert!((evolve_state(&circ, &st).unwrap().coeffs()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn propagation_matches_oracle(seed in any::<u64>(), n in 1usize..=4, layers in 0usize..=6) {
        let mut r = rng(seed);
        let shape = CircuitShape { final_layer: r.random_bool(0.3), ..CircuitShape::new(n, layers) };
        let circ = random_circuit(&mut r, &shape);
        let st = random_state(&mut r, n);
        let o = random_observable(&mut r, n, 3);
        let res = backpropagate(&circ, &o, &TruncationConfig::exact()).unwrap();
        let prop_val = expectation(&res, &st).unwrap();
        prop_assert!((prop_val - simulate_exact(&circ, &st, &o).unwrap()).abs() < 1e-10);
        let dense_obs = heisenberg_exact(&circ, &o).unwrap();
        prop_assert!(dense_obs.difference(&res.terms).unwrap().frobenius_norm_sq() < 1e-20);
    }

    #[test]
    fn retained_paths_grow_with_k(seed in any::<u64>(), n in 1usize..=3, layers in 1usize..=4, k in 1usize..8) {
        let mut r = rng(seed);
        let shape = CircuitShape { final_layer: false, ..CircuitShape::new(n, layers) };
        let circ = random_circuit(&mut r, &shape);
        let o = PauliSum::single(random_pauli(&mut r, n, false), 1.0);
        let small = enumerate_paths(&circ, &o, Some(k), usize::MAX).unwrap();
        let large = enumerate_paths(&circ, &o, Some(k + 1), usize::MAX).unwrap();
        prop_assert!(small.len() <= large.len());
        prop_assert_eq!(count_legal_paths(&circ, &o, Some(k)).unwrap(), small.len() as u64);
        let key = |p: &pauliprop::propagation::PathRecord| p.paulis.iter().map(|s| s.to_label()).collect::<Vec<_>>();
        let big: BTreeSet<Vec<String>> = large.iter().map(key).collect();
        for p in &small {
            prop_assert!(big.contains(&key(p)));
            let twin = large.iter().find(|q| key(q) == key(p)).unwrap();
            prop_assert_eq!(twin.coeff, p.coeff);
        }
    }

    #[test]
    fn path_weights_replay(seed in any::<u64>(), n in 1usize..=3, layers in 0usize..=4, k in 1usize..10) {
        let mut r = rng(seed);
        let shape = CircuitShape { final_layer: false, ..CircuitShape::new(n, layers) };
        let circ = random_circuit(&mut r, &shape);
        let o = random_observable(&mut r, n, 2);
        let paths = enumerate_paths(&circ, &o, Some(k), 5000).unwrap();
        for p in &paths {
            prop_assert_eq!(p.paulis.len(), layers + 1);
            let w: usize = p.paulis[..layers].iter().map(PauliString::weight).sum();
            prop_assert_eq!(w, p.weight);
            prop_assert!(p.weight < k || layers == 0);
        }
        // the paths sum to the truncated observable
        if paths.len() < 5000 {
            let mut total = PauliSum::new(n);
            for p in &paths {
                total.add_term(p.paulis[layers].clone(), p.coeff).unwrap();
            }
            let res = backpropagate(&circ, &o, &TruncationConfig::with_k(k)).unwrap();
            prop_assert!(total.difference(&res.terms).unwrap().frobenius_norm_sq() < 1e-20);
        }
    }

    #[test]
    fn unital_clifford_circuits_do_not_branch(seed in any::<u64>(), n in 1usize..=5, layers in 1usize..=6) {
        let mut r = rng(seed);
        let mut ls = Vec::new();
        for _ in 0..layers {
            let mut free: Vec<usize> = (0..n).collect();
            let mut gates = Vec::new();
            while free.len() >= 2 && r.random_bool(0.6) {
                let a = free.swap_remove(r.random_range(0..free.len()));
                let b = free.swap_remove(r.random_range(0..free.len()));
                let name = ["CNOT", "CZ", "SWAP"][r.random_range(0..3)];
                gates.push(Gate::Clifford(CliffordGate::named(name, &[a, b]).unwrap()));
            }
            for q in free {
                let name = ["H", "S", "X", "SXdg"][r.random_range(0..4)];
                gates.push(Gate::Clifford(CliffordGate::named(name, &[q]).unwrap()));
            }
            let p = r.random_range(0.0..0.9);
            let ch = if r.random_bool(0.5) { NormalFormChannel::depolarizing(p) } else { NormalFormChannel::dephasing(p / 2.0) };
            ls.push(Layer::from_gates(gates, Some(vec![ch.unwrap(); n])).unwrap());
        }
        let circ = Circuit::new(n, ls, None).unwrap();
        let o = PauliSum::single(random_pauli(&mut r, n, false), 1.0);
        let res = backpropagate(&circ, &o, &TruncationConfig::exact()).unwrap();
        prop_assert_eq!(res.terms.len(), 1);
        prop_assert_eq!(count_legal_paths(&circ, &o, None).unwrap(), 1);
    }

    #[test]
    fn unital_noise_fixes_maximally_mixed_state(seed in any::<u64>(), n in 1usize..=4, layers in 0usize..=4) {
        let mut r = rng(seed);
        let shape = CircuitShape { final_layer: true, ..CircuitShape::new(n, layers) };
        let circ = random_circuit(&mut r, &shape);
        let unital = circ.layers().iter().all(|l| {
            l.noise().is_none_or(|ns| ns.iter().all(|c| c.classify() != ChannelClass::NonUnital))
        });
        let mixed = ProductState::new(vec![[0.0; 3]; n]).unwrap();
        let v = evolve_state(&circ, &mixed).unwrap();
        let off: f64 = v.coeffs()[1..].iter().map(|x| x.abs()).sum();
        if unital {
            prop_assert!(off < 1e-12);
        }
    }

    #[test]
    fn results_do_not_depend_on_thread_count(seed in 0u64..4) {
        let mut r = rng(seed);
        let lat = Lattice::Chain { n: 12, periodic: false };
        let noise = NoiseModel::Uniform(NormalFormChannel::amplitude_damping(0.05).unwrap());
        let t = build_hva(&lat, &noise, &EnsembleSpec::uniform(0), 4, NoisePlacement::EveryLayer).unwrap();
        let circ = sample_circuit(&t, r.random());
        let o = PauliSum::single(PauliString::single(12, 6, Pauli::Z), 1.0);
        let trunc = TruncationConfig::exact();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
                .install(|| backpropagate(&circ, &o, &trunc).unwrap())
        };
        let a = run(1);
        let b = run(4);
        prop_assert!(a.stats.peak_term_count > 512, "{:?} {}", a.stats, a.terms.len());
        prop_assert_eq!(a.terms.sorted_terms(), b.terms.sorted_terms());
        prop_assert_eq!(a.stats, b.stats);
    }

    #[test]
    fn builders_produce_disjoint_layers(rows in 1usize..5, cols in 1usize..5, periodic in any::<bool>(), blocks in 0usize..3) {
        let lat = Lattice::Square { rows, cols, periodic };
        for c in [
            build_hva(&lat, &NoiseModel::None, &EnsembleSpec::uniform(1), blocks, NoisePlacement::EveryLayer).unwrap(),
            build_trotter_tfim(&lat, 1.0, 0.5, 0.1, blocks, &NoiseModel::None, NoisePlacement::EveryStep).unwrap(),
        ] {
            for l in c.layers() {
                for sub in l.sublayers() {
                    let mut seen = BTreeSet::new();
                    for g in sub {
                        for q in g.support() {
                            prop_assert!(seen.insert(q));
                        }
                    }
                }
            }
        }
    }
}

/// Density-matrix reference with Kraus operators, independent of the PTM code.
fn density_matrix_expectation(circ: &Circuit, st: &ProductState, o: &PauliSum) -> f64 {
    let n = circ.num_qubits();
    let mut rho = Matrix::identity(1);
    for b in st.bloch() {
        let site = Matrix::from_rows(&[
            &[c((1.0 + b[2]) / 2.0, 0.0), c(b[0] / 2.0, -b[1] / 2.0)],
            &[c(b[0] / 2.0, b[1] / 2.0), c((1.0 - b[2]) / 2.0, 0.0)],
        ]);
        rho = rho.kron(&site);
    }
    let embed = |local: &Matrix, support: &[usize]| -> Matrix {
        // place a k-qubit operator on `support` by expanding in Paulis
        let k = support.len();
        let size = 1usize << (2 * k);
        let mut full = Matrix::zeros(1 << n);
        for idx in 0..size {
            let p = dense::local_pauli(idx, k);
            let coeff = p.matmul(local).trace() / (1u64 << k) as f64;
            if coeff.norm() < 1e-15 {
                continue;
            }
            let mut s = PauliString::identity(n);
            for (j, &q) in support.iter().enumerate() {
                s.set(q, Pauli::from_index((idx >> (2 * j)) & 3));
            }
            full = full.add(&dense_pauli(&s).scale(coeff));
        }
        full
    };
    let apply_unitary = |rho: &Matrix, u: &Matrix| u.matmul(rho).matmul(&u.adjoint());
    let gate_unitary = |g: &Gate| -> (Matrix, Vec<usize>) {
        match g {
            Gate::Clifford(cg) => (cg.unitary().clone(), cg.support().to_vec()),
            Gate::Rotation(r) => {
                let sup = r.support();
                let theta = match r.angle() {
                    pauliprop::Angle::Fixed(t) => t,
                    _ => unreachable!(),
                };
                // exp(-iθ/2 G) = cos(θ/2) I - i sin(θ/2) G
                let mut gm = Matrix::identity(1);
                for &q in &sup {
                    gm = gm.kron(&dense::pauli_matrix(r.generator().get(q).index()));
                }
                let u = Matrix::identity(gm.dim())
                    .scale(c((theta / 2.0).cos(), 0.0))
                    .add(&gm.scale(c(0.0, -(theta / 2.0).sin())));
                (u, sup)
            }
            Gate::RandomClifford(_) => unreachable!(),
        }
    };
    let kraus = |ch: &NormalFormChannel| -> Vec<Matrix> {
        let z = c(0.0, 0.0);
        match ch.kind() {
            ChannelKind::AmplitudeDamping(g) => vec![
                Matrix::from_rows(&[&[c(1.0, 0.0), z], &[z, c((1.0 - g).sqrt(), 0.0)]]),
                Matrix::from_rows(&[&[z, c(g.sqrt(), 0.0)], &[z, z]]),
            ],
            ChannelKind::Dephasing(p) => vec![
                Matrix::identity(2).scale(c((1.0 - p).sqrt(), 0.0)),
                dense::pauli_matrix(3).scale(c(p.sqrt(), 0.0)),
            ],
            ChannelKind::Depolarizing(p) => {
                let mut v = vec![Matrix::identity(2).scale(c((1.0 - 0.75 * p).sqrt(), 0.0))];
                for code in 1..4 {
                    v.push(dense::pauli_matrix(code).scale(c((p / 4.0).sqrt(), 0.0)));
                }
                v
            }
            ChannelKind::Custom => unreachable!(),
        }
    };
    for layer in circ.layers() {
        for g in layer.gates() {
            let (u, sup) = gate_unitary(g);
            rho = apply_unitary(&rho, &embed(&u, &sup));
        }
        if let Some(noise) = layer.noise() {
            for (q, ch) in noise.iter().enumerate() {
                let mut next = Matrix::zeros(1 << n);
                for k in kraus(ch) {
                    let kf = embed(&k, &[q]);
                    next = next.add(&kf.matmul(&rho).matmul(&kf.adjoint()));
                }
                rho = next;
            }
        }
    }
    for g in circ.final_layer().into_iter().flatten() {
        let (u, sup) = gate_unitary(g);
        rho = apply_unitary(&rho, &embed(&u, &sup));
    }
    dense_sum(o).matmul(&rho).trace().re
}

#[test]
fn commutes_matches_dense_commutator_exhaustively() {
    for n in 1..=3usize {
        let all: Vec<PauliString> = (0..1usize << (2 * n))
            .map(|idx| {
                let mut p = PauliString::identity(n);
                for q in 0..n {
                    p.set(q, Pauli::from_index((idx >> (2 * q)) & 3));
                }
                p
            })
            .collect();
        let mats: Vec<Matrix> = all.iter().map(dense_pauli).collect();
        for (p, pm) in all.iter().zip(&mats) {
            for (q, qm) in all.iter().zip(&mats) {
                let comm = pm.matmul(qm).max_abs_diff(&qm.matmul(pm)) < 1e-12;
                assert_eq!(p.commutes(q).unwrap(), comm, "{p} {q}");
            }
        }
    }
}

#[test]
fn builder_adjoints_are_kraus_ptm_transposes() {
    let z = c(0.0, 0.0);
    for r in [0.0, 0.13, 0.5, 0.87, 1.0] {
        let cases: Vec<(NormalFormChannel, Vec<Matrix>)> = vec![
            (
                NormalFormChannel::amplitude_damping(r).unwrap(),
                vec![
                    Matrix::from_rows(&[&[c(1.0, 0.0), z], &[z, c((1.0 - r).sqrt(), 0.0)]]),
                    Matrix::from_rows(&[&[z, c(r.sqrt(), 0.0)], &[z, z]]),
                ],
            ),
            (
                NormalFormChannel::dephasing(r).unwrap(),
                vec![
                    Matrix::identity(2).scale(c((1.0 - r).sqrt(), 0.0)),
                    dense::pauli_matrix(3).scale(c(r.sqrt(), 0.0)),
                ],
            ),
            (
                NormalFormChannel::depolarizing(r).unwrap(),
                std::iter::once(Matrix::identity(2).scale(c((1.0 - 0.75 * r).sqrt(), 0.0)))
                    .chain((1..4).map(|k| dense::pauli_matrix(k).scale(c((r / 4.0).sqrt(), 0.0))))
                    .collect(),
            ),
        ];
        for (ch, kraus) in cases {
            let fwd = dense::kraus_ptm(&kraus);
            for (p, pauli) in Pauli::ALL.iter().enumerate() {
                let adj = ch.adjoint_action(*pauli);
                for (q, qp) in Pauli::ALL.iter().enumerate() {
                    let coeff = adj.coeff(&PauliString::single(1, 0, *qp));
                    // adjoint row P, column Q equals forward entry (P, Q)
                    assert!((coeff - fwd[p * 4 + q]).abs() < 1e-12, "{ch:?} {p} {q}");
                }
            }
        }
    }
}

#[test]
fn builders_classify_as_expected() {
    for r in [0.05, 0.3, 0.7] {
        assert_eq!(NormalFormChannel::amplitude_damping(r).unwrap().classify(), ChannelClass::NonUnital);
        assert_eq!(NormalFormChannel::dephasing(r / 2.0).unwrap().classify(), ChannelClass::DephasingLike);
        assert_eq!(NormalFormChannel::depolarizing(r).unwrap().classify(), ChannelClass::DepolarizingLike);
    }
}

#[test]
fn amplitude_damping_worst_case_below_paper_bound() {
    for i in 1..=19 {
        let g = 0.05 * i as f64;
        let ch = NormalFormChannel::amplitude_damping(g).unwrap();
        assert!(ch.chi_sq_worstcase() <= 1.0 - g + g * g + 1e-12);
    }
}

#[test]
fn trotter_step_is_close_to_identity_for_tiny_dt() {
    let lat = Lattice::Chain { n: 2, periodic: false };
    let st = ProductState::new(vec![[0.6, 0.0, 0.8], [0.0, 0.6, 0.8]]).unwrap();
    let o = PauliSum::from_labels(&[("ZI", 1.0), ("XY", 0.5)]).unwrap();
    let identity = simulate_exact(&Circuit::empty(2).unwrap(), &st, &o).unwrap();
    let mut prev = None;
    for dt in [1e-6, 2e-6] {
        let c = build_trotter_tfim(&lat, 3.004438, 1.0, dt, 1, &NoiseModel::None, NoisePlacement::EveryLayer)
            .unwrap();
        let change = (simulate_exact(&c, &st, &o).unwrap() - identity).abs();
        assert!(change < 50.0 * dt && change > 0.0);
        if let Some(p) = prev {
            // linear in dt
            let ratio: f64 = change / p;
            assert!((ratio - 2.0).abs() < 0.01, "{ratio}");
        }
        prev = Some(change);
    }
}

#[test]
fn trotter_step_matches_oracle() {
    let lat = Lattice::Chain { n: 2, periodic: false };
    let circ = build_trotter_tfim(&lat, 3.004438, 1.0, 0.04, 1, &NoiseModel::None, NoisePlacement::EveryLayer)
        .unwrap();
    let o = PauliSum::from_labels(&[("ZI", 1.0)]).unwrap();
    let st = ProductState::zeros(2);
    let a = expectation(&backpropagate(&circ, &o, &TruncationConfig::exact()).unwrap(), &st).unwrap();
    let b = simulate_exact(&circ, &st, &o).unwrap();
    assert!((a - b).abs() < 1e-12);
    // same step built from dense rotations
    let j = 3.004438f64;
    let h = 1.0f64;
    let dt = 0.04f64;
    let xx = dense_pauli(&"XX".parse().unwrap());
    let zi = dense_pauli(&"ZI".parse().unwrap());
    let iz = dense_pauli(&"IZ".parse().unwrap());
    let rz = |m: &Matrix| dense::pauli_rotation(m, -h * dt);
    let u = rz(&zi)
        .matmul(&rz(&iz))
        .matmul(&dense::pauli_rotation(&xx, -2.0 * j * dt))
        .matmul(&rz(&zi))
        .matmul(&rz(&iz));
    let mut psi = vec![c(0.0, 0.0); 4];
    psi[0] = c(1.0, 0.0);
    let out = mat_vec(&u, &psi);
    let zout = mat_vec(&zi, &out);
    let ev: f64 = out.iter().zip(&zout).map(|(a, b)| (a.conj() * b).re).sum();
    assert!((ev - b).abs() < 1e-12);
}

#[test]
fn sampling_and_estimation_are_seed_deterministic() {
    let lat = Lattice::Chain { n: 4, periodic: false };
    let noise = NoiseModel::Uniform(NormalFormChannel::amplitude_damping(0.1).unwrap());
    let t = build_hva(&lat, &noise, &EnsembleSpec::uniform(0), 2, NoisePlacement::EveryLayer).unwrap();
    assert!(sample_circuit(&t, 7) == sample_circuit(&t, 7));
    assert!(sample_circuit(&t, 7) != sample_circuit(&t, 8));
    let o = PauliSum::single(PauliString::single(4, 2, Pauli::Z), 1.0);
    let f = pauliprop::Functional::TruncFrobenius { k: 3 };
    let a = pauliprop::estimate(&t, &o, &f, 5000, 11).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap()
        .install(|| pauliprop::estimate(&t, &o, &f, 5000, 11).unwrap());
    assert_eq!(a, b);
}

#[test]
fn path_sampling_is_biased_without_rotations_between_non_unital_rounds() {
    // RX, damping, RZ, damping, damping: the Z -> I jumps of the last two
    // rounds are separated only by RZ, which commutes with Z
    let lat = Lattice::Chain { n: 1, periodic: false };
    let noise = NoiseModel::Uniform(NormalFormChannel::amplitude_damping(0.15).unwrap());
    let o = PauliSum::from_labels(&[("Z", 1.0)]).unwrap();
    let f = pauliprop::Functional::Variance { state: ProductState::zeros(1) };
    let every_layer = build_hva(&lat, &noise, &EnsembleSpec::uniform(0), 1, NoisePlacement::EveryLayer).unwrap();
    let v = pauliprop::montecarlo::validate_estimator(&every_layer, &o, &f, 200_000, 4000, 1).unwrap();
    assert!(!v.agree, "{v:?}");
    let every_step = build_hva(&lat, &noise, &EnsembleSpec::uniform(0), 1, NoisePlacement::EveryStep).unwrap();
    let v = pauliprop::montecarlo::validate_estimator(&every_step, &o, &f, 200_000, 4000, 1).unwrap();
    assert!(v.agree, "{v:?}");
}
