//! Clifford gates as signed Pauli permutations.

use std::sync::OnceLock;

use smallvec::SmallVec;

use crate::dense::{self, c, Matrix};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};

/// One- or two-qubit Clifford gate.
///
/// The Heisenberg table maps each local Pauli index `p` (base 4, digit `j` for
/// `support[j]`) to `U^dag P U = ±P'` as `(index of P', negative)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CliffordGate {
    name: String,
    support: SmallVec<[usize; 2]>,
    table: Vec<(u8, bool)>,
    unitary: Matrix,
}

const NAMED: &[&str] = &[
    "I", "H", "S", "Sdg", "X", "Y", "Z", "SX", "SXdg", "CNOT", "CX", "CZ", "SWAP",
];

/// Dense unitary of a named gate. For `CNOT` the first site is the control.
pub fn named_clifford_unitary(name: &str) -> Result<Matrix> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let m = match name {
        "I" => Matrix::identity(2),
        "H" => Matrix::from_real(2, &[h, h, h, -h]),
        "S" => Matrix::from_rows(&[&[one, z], &[z, c(0.0, 1.0)]]),
        "Sdg" => Matrix::from_rows(&[&[one, z], &[z, c(0.0, -1.0)]]),
        "X" => dense::pauli_matrix(1),
        "Y" => dense::pauli_matrix(2),
        "Z" => dense::pauli_matrix(3),
        "SX" => Matrix::from_rows(&[&[c(0.5, 0.5), c(0.5, -0.5)], &[c(0.5, -0.5), c(0.5, 0.5)]]),
        "SXdg" => {
            Matrix::from_rows(&[&[c(0.5, -0.5), c(0.5, 0.5)], &[c(0.5, 0.5), c(0.5, -0.5)]])
        }
        "CNOT" | "CX" => Matrix::from_real(
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, 1.0, 0.0,
            ],
        ),
        "CZ" => Matrix::from_real(
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, -1.0,
            ],
        ),
        "SWAP" => Matrix::from_real(
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0,
            ],
        ),
        _ => {
            if let Some(i) = parse_group_name(name) {
                return Ok(single_qubit_cliffords()[i].unitary.clone());
            }
            return Err(Error::InvalidCircuit(format!("unknown Clifford gate {name:?}")));
        }
    };
    Ok(m)
}

fn parse_group_name(name: &str) -> Option<usize> {
    let idx: usize = name.strip_prefix("C1_")?.parse().ok()?;
    (idx < 24).then_some(idx)
}

/// Signed Pauli images of every local Pauli, or an error when `u` is not
/// Clifford.
fn heisenberg_table(u: &Matrix) -> Result<Vec<(u8, bool)>> {
    let d = u.dim();
    let k = d.trailing_zeros() as usize;
    let size = 1usize << (2 * k);
    let paulis: Vec<Matrix> = (0..size).map(|i| dense::local_pauli(i, k)).collect();
    let ud = u.adjoint();
    let mut table = Vec::with_capacity(size);
    for p in &paulis {
        let img = ud.matmul(p).matmul(u);
        let mut found = None;
        for (q, qm) in paulis.iter().enumerate() {
            let ov = qm.matmul(&img).trace() / d as f64;
            if ov.norm() > 0.5 {
                if (ov.norm() - 1.0).abs() > 1e-9 || ov.im.abs() > 1e-9 {
                    return Err(Error::InvalidCircuit("gate is not Clifford".into()));
                }
                found = Some((q as u8, ov.re < 0.0));
                break;
            }
        }
        table.push(found.ok_or_else(|| Error::InvalidCircuit("gate is not Clifford".into()))?);
    }
    Ok(table)
}

impl CliffordGate {
    /// Named gate on `support`: `H, S, Sdg, X, Y, Z, SX, SXdg, I`, the 24 group
    /// elements `C1_0..C1_23`, or two-qubit `CNOT` (alias `CX`), `CZ`, `SWAP`.
    pub fn named(name: &str, support: &[usize]) -> Result<Self> {
        let u = named_clifford_unitary(name)?;
        Self::from_unitary(name, support, u)
    }

    /// Clifford from a dense unitary; the table is derived by conjugation.
    pub fn from_unitary(name: &str, support: &[usize], u: Matrix) -> Result<Self> {
        let k = support.len();
        if k == 0 || k > 2 || u.dim() != 1 << k {
            return Err(Error::InvalidCircuit(format!(
                "gate {name} has dimension {} but support {:?}",
                u.dim(),
                support
            )));
        }
        if k == 2 && support[0] == support[1] {
            return Err(Error::InvalidCircuit(format!("gate {name} repeats a qubit")));
        }
        if !u.is_unitary(1e-10) {
            return Err(Error::InvalidCircuit(format!("gate {name} is not unitary")));
        }
        let table = heisenberg_table(&u)?;
        Ok(Self {
            name: name.to_string(),
            support: support.iter().copied().collect(),
            table,
            unitary: u,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn unitary(&self) -> &Matrix {
        &self.unitary
    }

    /// Same gate moved to a different support of equal size.
    pub fn relocated(&self, support: &[usize]) -> Result<Self> {
        if support.len() != self.support.len() {
            return Err(Error::InvalidCircuit("support size changed".into()));
        }
        let mut g = self.clone();
        g.support = support.iter().copied().collect();
        Ok(g)
    }

    /// `(image index, negative)` for a local Pauli index.
    #[inline]
    pub fn image(&self, local: usize) -> (usize, bool) {
        let (q, neg) = self.table[local];
        (q as usize, neg)
    }

    /// `U^dag P U` as `(P', sign)`.
    pub fn conjugate(&self, p: &PauliString) -> (PauliString, f64) {
        let mut local = 0usize;
        for (j, &q) in self.support.iter().enumerate() {
            local |= p.get(q).index() << (2 * j);
        }
        let (img, neg) = self.image(local);
        let mut out = p.clone();
        for (j, &q) in self.support.iter().enumerate() {
            out.set(q, Pauli::from_index((img >> (2 * j)) & 3));
        }
        (out, if neg { -1.0 } else { 1.0 })
    }
}

/// The 24 single-qubit Cliffords (modulo phase) on qubit 0, named `C1_i`.
///
/// Generated breadth-first from `H` and `S`, so the order is fixed.
pub fn single_qubit_cliffords() -> &'static [CliffordGate] {
    static GROUP: OnceLock<Vec<CliffordGate>> = OnceLock::new();
    GROUP.get_or_init(|| {
        let gens = [
            named_clifford_unitary("H").expect("H"),
            named_clifford_unitary("S").expect("S"),
        ];
        let mut seen: Vec<Vec<(u8, bool)>> = Vec::new();
        let mut elems: Vec<Matrix> = Vec::new();
        let mut queue = std::collections::VecDeque::from([Matrix::identity(2)]);
        while let Some(u) = queue.pop_front() {
            let table = heisenberg_table(&u).expect("group element is Clifford");
            if seen.contains(&table) {
                continue;
            }
            seen.push(table);
            for g in &gens {
                queue.push_back(g.matmul(&u));
            }
            elems.push(u);
        }
        elems
            .into_iter()
            .enumerate()
            .map(|(i, u)| {
                CliffordGate::from_unitary(&format!("C1_{i}"), &[0], u).expect("valid element")
            })
            .collect()
    })
}

/// Names accepted by [`CliffordGate::named`], excluding the `C1_i` family.
pub fn named_gates() -> &'static [&'static str] {
    NAMED
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn hadamard_swaps_x_and_z() {
        let h = CliffordGate::named("H", &[0]).unwrap();
        assert_eq!(h.conjugate(&ps("X")), (ps("Z"), 1.0));
        assert_eq!(h.conjugate(&ps("Z")), (ps("X"), 1.0));
        assert_eq!(h.conjugate(&ps("Y")), (ps("Y"), -1.0));
    }

    #[test]
    fn phase_gate_heisenberg() {
        // S^dag X S = -Y
        let s = CliffordGate::named("S", &[0]).unwrap();
        assert_eq!(s.conjugate(&ps("X")), (ps("Y"), -1.0));
        assert_eq!(s.conjugate(&ps("Y")), (ps("X"), 1.0));
    }

    #[test]
    fn cnot_control_is_first() {
        let g = CliffordGate::named("CNOT", &[1, 2]).unwrap();
        // X on the control spreads to the target
        assert_eq!(g.conjugate(&ps("IXI")), (ps("IXX"), 1.0));
        // Z on the target spreads to the control
        assert_eq!(g.conjugate(&ps("IIZ")), (ps("IZZ"), 1.0));
        assert_eq!(g.conjugate(&ps("ZIZ")), (ps("ZZZ"), 1.0));
    }

    #[test]
    fn cz_and_swap() {
        let cz = CliffordGate::named("CZ", &[0, 1]).unwrap();
        assert_eq!(cz.conjugate(&ps("XI")), (ps("XZ"), 1.0));
        let sw = CliffordGate::named("SWAP", &[0, 2]).unwrap();
        assert_eq!(sw.conjugate(&ps("XIZ")), (ps("ZIX"), 1.0));
    }

    #[test]
    fn group_has_24_distinct_elements() {
        let g = single_qubit_cliffords();
        assert_eq!(g.len(), 24);
        for (i, e) in g.iter().enumerate() {
            assert_eq!(e.name(), format!("C1_{i}"));
            assert_eq!(e.image(0), (0, false));
        }
        let c5 = CliffordGate::named("C1_5", &[3]).unwrap();
        assert_eq!(c5.support(), &[3]);
        assert!(CliffordGate::named("C1_24", &[0]).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CliffordGate::named("T", &[0]).is_err());
        assert!(CliffordGate::named("CNOT", &[0]).is_err());
        assert!(CliffordGate::named("CNOT", &[1, 1]).is_err());
        let t = Matrix::from_rows(&[
            &[c(1.0, 0.0), c(0.0, 0.0)],
            &[c(0.0, 0.0), c(0.5f64.sqrt(), 0.5f64.sqrt())],
        ]);
        assert!(CliffordGate::from_unitary("T", &[0], t).is_err());
    }

    #[test]
    fn every_named_gate_builds() {
        for name in named_gates() {
            let k = if ["CNOT", "CX", "CZ", "SWAP"].contains(name) { 2 } else { 1 };
            let support: Vec<usize> = (0..k).collect();
            CliffordGate::named(name, &support).unwrap();
        }
    }
}
