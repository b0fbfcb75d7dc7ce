//! Pauli strings, sparse real Pauli sums and product states.
//!
//! A [`PauliString`] stores two bit vectors packed into 64-site words. Site `q`
//! is encoded as `I=(0,0)`, `X=(1,0)`, `Y=(1,1)`, `Z=(0,1)` in `(x, z)`. No phase
//! is stored: callers fold the `i^m` factors returned by [`PauliString::multiply`]
//! into real coefficients.

use std::fmt;
use std::str::FromStr;

use rustc_hash::FxHashMap;
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};

type Words = SmallVec<[u64; 2]>;

/// Single-qubit Pauli label. The discriminant is the base-4 digit used by
/// dense Pauli-basis vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Pauli {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    #[inline]
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    #[inline]
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        Self::ALL[i & 3]
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' | 'i' | '_' => Some(Pauli::I),
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        ['I', 'X', 'Y', 'Z'][self as usize]
    }
}

/// An `n`-qubit Pauli operator without phase.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: usize,
    x: Words,
    z: Words,
}

#[inline]
fn word_count(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        let w = word_count(n);
        Self {
            n,
            x: smallvec![0; w],
            z: smallvec![0; w],
        }
    }

    /// Pauli `p` on qubit `q`, identity elsewhere.
    pub fn single(n: usize, q: usize, p: Pauli) -> Self {
        let mut s = Self::identity(n);
        s.set(q, p);
        s
    }

    /// Builds a string from `(qubit, label)` pairs.
    pub fn from_sites(n: usize, sites: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = Self::identity(n);
        for &(q, p) in sites {
            if q >= n {
                return Err(Error::OutOfRange(format!("qubit {q} for n = {n}")));
            }
            s.set(q, p);
        }
        Ok(s)
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, q: usize) -> Pauli {
        let (w, b) = (q / 64, q % 64);
        Pauli::from_bits((self.x[w] >> b) & 1 == 1, (self.z[w] >> b) & 1 == 1)
    }

    #[inline]
    pub fn set(&mut self, q: usize, p: Pauli) {
        debug_assert!(q < self.n);
        let (w, b) = (q / 64, q % 64);
        let (xb, zb) = p.bits();
        let mask = 1u64 << b;
        self.x[w] = (self.x[w] & !mask) | if xb { mask } else { 0 };
        self.z[w] = (self.z[w] & !mask) | if zb { mask } else { 0 };
    }

    /// Number of non-identity sites.
    #[inline]
    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    /// Number of sites carrying `X` or `Y`.
    #[inline]
    pub fn xy_count(&self) -> usize {
        self.x.iter().map(|x| x.count_ones() as usize).sum()
    }

    #[inline]
    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    /// Indices of non-identity sites in increasing order.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.x
            .iter()
            .zip(&self.z)
            .enumerate()
            .flat_map(|(wi, (x, z))| BitIter(x | z).map(move |b| wi * 64 + b))
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::QubitMismatch {
                expected: self.n,
                actual: other.n,
            });
        }
        Ok(())
    }

    /// Returns `(R, m)` with `self * other = i^m R`.
    pub fn multiply(&self, other: &Self) -> Result<(PauliString, u8)> {
        self.check_same(other)?;
        Ok(self.multiply_unchecked(other))
    }

    pub(crate) fn multiply_unchecked(&self, other: &Self) -> (PauliString, u8) {
        // With P = i^{xz} X^x Z^z per site:
        // PQ = i^{x1 z1 + x2 z2 + 2 z1 x2 - x3 z3} R
        let mut acc: i64 = 0;
        let mut out = self.clone();
        for w in 0..self.x.len() {
            let (x1, z1, x2, z2) = (self.x[w], self.z[w], other.x[w], other.z[w]);
            let (x3, z3) = (x1 ^ x2, z1 ^ z2);
            acc += (x1 & z1).count_ones() as i64;
            acc += (x2 & z2).count_ones() as i64;
            acc += 2 * (z1 & x2).count_ones() as i64;
            acc -= (x3 & z3).count_ones() as i64;
            out.x[w] = x3;
            out.z[w] = z3;
        }
        (out, acc.rem_euclid(4) as u8)
    }

    /// Symplectic test: true iff the two strings commute.
    pub fn commutes(&self, other: &Self) -> Result<bool> {
        self.check_same(other)?;
        Ok(self.commutes_unchecked(other))
    }

    #[inline]
    pub(crate) fn commutes_unchecked(&self, other: &Self) -> bool {
        let mut parity = 0u32;
        for w in 0..self.x.len() {
            parity ^= ((self.x[w] & other.z[w]) ^ (self.z[w] & other.x[w])).count_ones() & 1;
        }
        parity == 0
    }

    pub fn to_label(&self) -> String {
        (0..self.n).map(|q| self.get(q).to_char()).collect()
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = usize;
    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(b)
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses `"XIZ"`; the leftmost character is qubit 0.
    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        if chars.is_empty() {
            return Err(Error::InvalidPauli(s.to_string()));
        }
        let mut p = Self::identity(chars.len());
        for (q, c) in chars.into_iter().enumerate() {
            let label = Pauli::from_char(c).ok_or_else(|| Error::InvalidPauli(s.to_string()))?;
            p.set(q, label);
        }
        Ok(p)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_label())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({})", self.to_label())
    }
}

/// Sparse real linear combination of Pauli strings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: FxHashMap<PauliString, f64>,
}

impl PauliSum {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            terms: FxHashMap::default(),
        }
    }

    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, f64)>,
    {
        let mut s = Self::new(n);
        for (p, c) in terms {
            s.add_term(p, c)?;
        }
        Ok(s)
    }

    /// Parses `[("XIZ", 0.5), ...]`.
    pub fn from_labels(terms: &[(&str, f64)]) -> Result<Self> {
        let first = terms.first().ok_or(Error::EmptyObservable)?;
        let n = first.0.parse::<PauliString>()?.num_qubits();
        let parsed = terms
            .iter()
            .map(|(l, c)| l.parse::<PauliString>().map(|p| (p, *c)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(n, parsed)
    }

    pub fn single(p: PauliString, coeff: f64) -> Self {
        let mut s = Self::new(p.num_qubits());
        s.add_unchecked(p, coeff);
        s
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `coeff * p`, merging with an existing term. Terms that cancel to
    /// exactly zero are removed.
    pub fn add_term(&mut self, p: PauliString, coeff: f64) -> Result<()> {
        if p.num_qubits() != self.n {
            return Err(Error::QubitMismatch {
                expected: self.n,
                actual: p.num_qubits(),
            });
        }
        self.add_unchecked(p, coeff);
        Ok(())
    }

    pub(crate) fn add_unchecked(&mut self, p: PauliString, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        use std::collections::hash_map::Entry;
        match self.terms.entry(p) {
            Entry::Occupied(mut e) => {
                let v = *e.get() + coeff;
                if v == 0.0 {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
        }
    }

    /// Coefficient `a_P`, zero when absent.
    pub fn coeff(&self, p: &PauliString) -> f64 {
        self.terms.get(p).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, f64)> {
        self.terms.iter().map(|(p, c)| (p, *c))
    }

    /// Terms ordered by Pauli label, for stable output.
    pub fn sorted_terms(&self) -> Vec<(PauliString, f64)> {
        let mut v: Vec<_> = self.terms.iter().map(|(p, c)| (p.clone(), *c)).collect();
        v.sort_by_cached_key(|(p, _)| p.to_label());
        v
    }

    /// Normalized Frobenius norm squared, `sum_P a_P^2`.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum()
    }

    /// `Tr[O rho]` for a product state, exact.
    pub fn expectation_product_state(&self, state: &ProductState) -> Result<f64> {
        if state.num_qubits() != self.n {
            return Err(Error::QubitMismatch {
                expected: self.n,
                actual: state.num_qubits(),
            });
        }
        // Sum in label order so the result does not depend on hash layout.
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_unstable_by(|a, b| a.0.cmp(b.0));
        Ok(terms
            .into_iter()
            .map(|(p, c)| c * state.pauli_expectation(p))
            .sum())
    }

    /// `self - other`, useful for truncation-error diagnostics.
    pub fn difference(&self, other: &PauliSum) -> Result<PauliSum> {
        if other.n != self.n {
            return Err(Error::QubitMismatch {
                expected: self.n,
                actual: other.n,
            });
        }
        let mut out = self.clone();
        for (p, c) in other.iter() {
            out.add_unchecked(p.clone(), -c);
        }
        Ok(out)
    }
}

/// Product state given by one Bloch vector per qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductState {
    bloch: Vec<[f64; 3]>,
}

impl ProductState {
    /// `|0...0>`.
    pub fn zeros(n: usize) -> Self {
        Self {
            bloch: vec![[0.0, 0.0, 1.0]; n],
        }
    }

    pub fn new(bloch: Vec<[f64; 3]>) -> Result<Self> {
        for (q, r) in bloch.iter().enumerate() {
            let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            if !norm.is_finite() || norm > 1.0 + 1e-12 {
                return Err(Error::OutOfRange(format!(
                    "Bloch vector of qubit {q} has norm {norm}"
                )));
            }
        }
        Ok(Self { bloch })
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.bloch.len()
    }

    pub fn bloch(&self) -> &[[f64; 3]] {
        &self.bloch
    }

    /// `Tr[P rho]`, the product of the matching Bloch components.
    #[inline]
    pub fn pauli_expectation(&self, p: &PauliString) -> f64 {
        let mut v = 1.0;
        for q in p.support() {
            let r = &self.bloch[q];
            v *= match p.get(q) {
                Pauli::X => r[0],
                Pauli::Y => r[1],
                Pauli::Z => r[2],
                Pauli::I => 1.0,
            };
            if v == 0.0 {
                break;
            }
        }
        v
    }
}
