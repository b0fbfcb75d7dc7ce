//! Exact dense reference simulation in the Pauli basis.
//!
//! A state is stored as `ρ = Σ_P c_P P / 2^n` with `4^n` real coefficients;
//! index `Σ_q code(P_q) 4^q` with `I=0, X=1, Y=2, Z=3`.

use crate::circuit::{Angle, Circuit, Gate};
use crate::dense;
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum, ProductState};

pub const MAX_FORWARD_QUBITS: usize = 12;
pub const MAX_HEISENBERG_QUBITS: usize = 8;

/// `4^n` Pauli coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct DensePauliVector {
    n: usize,
    coeffs: Vec<f64>,
}

fn pauli_index(p: &PauliString) -> usize {
    (0..p.num_qubits()).map(|q| p.get(q).index() << (2 * q)).sum()
}

fn index_pauli(n: usize, idx: usize) -> PauliString {
    let mut p = PauliString::identity(n);
    for q in 0..n {
        p.set(q, Pauli::from_index((idx >> (2 * q)) & 3));
    }
    p
}

impl DensePauliVector {
    fn check(n: usize, max: usize) -> Result<()> {
        if n > max {
            return Err(Error::TooLarge { n, max });
        }
        Ok(())
    }

    /// Product state coefficients `c_P = Π_q r_q(P_q)`.
    pub fn from_state(state: &ProductState) -> Result<Self> {
        let n = state.num_qubits();
        Self::check(n, MAX_FORWARD_QUBITS)?;
        let mut coeffs = vec![1.0];
        for b in state.bloch().iter().rev() {
            let site = [1.0, b[0], b[1], b[2]];
            let mut next = Vec::with_capacity(coeffs.len() * 4);
            for &c in &coeffs {
                for s in site {
                    next.push(c * s);
                }
            }
            coeffs = next;
        }
        Ok(Self { n, coeffs })
    }

    /// Observable coefficients `a_P`.
    pub fn from_observable(o: &PauliSum, max: usize) -> Result<Self> {
        let n = o.num_qubits();
        Self::check(n, max)?;
        let mut coeffs = vec![0.0; 1 << (2 * n)];
        for (p, a) in o.iter() {
            coeffs[pauli_index(p)] += a;
        }
        Ok(Self { n, coeffs })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, p: &PauliString) -> f64 {
        self.coeffs[pauli_index(p)]
    }

    /// `Σ_P a_P c_P`.
    pub fn overlap(&self, o: &PauliSum) -> f64 {
        o.sorted_terms().iter().map(|(p, a)| a * self.coeff(p)).sum()
    }

    pub fn to_pauli_sum(&self) -> PauliSum {
        let mut out = PauliSum::new(self.n);
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c != 0.0 {
                out.add_unchecked(index_pauli(self.n, i), c);
            }
        }
        out
    }

    /// Applies a local map `m` (row-major, `4^k x 4^k`) on `support`; with
    /// `transpose` the adjoint `v'_Q = Σ_P m[P][Q] v_P` is applied instead.
    fn apply_local(&mut self, support: &[usize], m: &[f64], transpose: bool) {
        let k = support.len();
        let size = 1usize << (2 * k);
        let shifts: Vec<usize> = support.iter().map(|&q| 2 * q).collect();
        let mask: usize = shifts.iter().map(|s| 3usize << s).sum();
        let offsets: Vec<usize> = (0..size)
            .map(|l| {
                shifts
                    .iter()
                    .enumerate()
                    .map(|(j, s)| ((l >> (2 * j)) & 3) << s)
                    .sum()
            })
            .collect();
        let mut local = vec![0.0; size];
        for base in 0..self.coeffs.len() {
            if base & mask != 0 {
                continue;
            }
            for (l, off) in offsets.iter().enumerate() {
                local[l] = self.coeffs[base | off];
            }
            for (p, off) in offsets.iter().enumerate() {
                let mut acc = 0.0;
                for (q, &v) in local.iter().enumerate() {
                    let e = if transpose { m[q * size + p] } else { m[p * size + q] };
                    acc += e * v;
                }
                self.coeffs[base | off] = acc;
            }
        }
    }
}

/// Forward PTM of a concrete gate on its support.
fn gate_ptm(g: &Gate) -> Result<(Vec<usize>, Vec<f64>)> {
    match g {
        Gate::Clifford(c) => Ok((c.support().to_vec(), dense::unitary_ptm(c.unitary()))),
        Gate::Rotation(r) => {
            let theta = match r.angle() {
                Angle::Fixed(t) => t,
                Angle::Uniform => {
                    return Err(Error::InvalidCircuit(
                        "circuit has unsampled uniform angles".into(),
                    ))
                }
            };
            let support = r.support();
            let mut gen = dense::Matrix::identity(1);
            for &q in &support {
                gen = gen.kron(&dense::pauli_matrix(r.generator().get(q).index()));
            }
            let u = dense::pauli_rotation(&gen, theta);
            Ok((support, dense::unitary_ptm(&u)))
        }
        Gate::RandomClifford(_) => Err(Error::InvalidCircuit(
            "circuit has unsampled random Cliffords".into(),
        )),
    }
}

/// Forward maps of the circuit in application order.
fn circuit_maps(c: &Circuit) -> Result<Vec<(Vec<usize>, Vec<f64>)>> {
    let mut maps = Vec::new();
    for layer in c.layers() {
        for g in layer.gates() {
            maps.push(gate_ptm(g)?);
        }
        if let Some(noise) = layer.noise() {
            for (q, ch) in noise.iter().enumerate() {
                if ch.is_identity() {
                    continue;
                }
                let m = ch.forward_ptm();
                let flat: Vec<f64> = m.matrix().iter().flatten().copied().collect();
                maps.push((vec![q], flat));
            }
        }
    }
    for g in c.final_layer().into_iter().flatten() {
        maps.push(gate_ptm(g)?);
    }
    Ok(maps)
}

fn check_n(c: &Circuit, n: usize) -> Result<()> {
    if c.num_qubits() != n {
        return Err(Error::QubitMismatch {
            expected: c.num_qubits(),
            actual: n,
        });
    }
    Ok(())
}

/// Final dense state `C(ρ)`.
pub fn evolve_state(c: &Circuit, rho: &ProductState) -> Result<DensePauliVector> {
    check_n(c, rho.num_qubits())?;
    let mut v = DensePauliVector::from_state(rho)?;
    for (support, m) in circuit_maps(c)? {
        v.apply_local(&support, &m, false);
    }
    Ok(v)
}

/// Exact `Tr[O C(ρ)]` for `n <= 12`.
pub fn simulate_exact(c: &Circuit, rho: &ProductState, o: &PauliSum) -> Result<f64> {
    check_n(c, o.num_qubits())?;
    Ok(evolve_state(c, rho)?.overlap(o))
}

/// Exact `C^dag(O)` for `n <= 8`.
pub fn heisenberg_exact(c: &Circuit, o: &PauliSum) -> Result<PauliSum> {
    check_n(c, o.num_qubits())?;
    let mut v = DensePauliVector::from_observable(o, MAX_HEISENBERG_QUBITS)?;
    for (support, m) in circuit_maps(c)?.iter().rev() {
        v.apply_local(support, m, true);
    }
    Ok(v.to_pauli_sum())
}
