//! Small dense complex matrices for gates acting on a handful of qubits.
//!
//! Local Pauli indices are base-4 numbers whose digit `j` (least significant
//! first) labels the Pauli on local site `j`; local site 0 is the leftmost
//! tensor factor of the matrix.

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            assert_eq!(r.len(), dim, "matrix must be square");
            data.extend_from_slice(r);
        }
        Self { dim, data }
    }

    pub fn from_real(dim: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), dim * dim);
        Self {
            dim,
            data: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.dim + c] = v;
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Matrix {
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j].conj();
            }
        }
        out
    }

    pub fn kron(&self, other: &Matrix) -> Matrix {
        let (a, b) = (self.dim, other.dim);
        let d = a * b;
        let mut out = Matrix::zeros(d);
        for i in 0..a {
            for j in 0..a {
                let s = self.data[i * a + j];
                if s == ZERO {
                    continue;
                }
                for k in 0..b {
                    for l in 0..b {
                        out.data[(i * b + k) * d + (j * b + l)] = s * other.data[k * b + l];
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim);
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// Largest entrywise distance.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.matmul(&self.adjoint())
            .max_abs_diff(&Matrix::identity(self.dim))
            <= tol
    }
}

/// 2x2 Pauli matrix for digit `code` (0=I, 1=X, 2=Y, 3=Z).
pub fn pauli_matrix(code: usize) -> Matrix {
    match code {
        0 => Matrix::identity(2),
        1 => Matrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]]),
        2 => Matrix::from_rows(&[&[ZERO, -I], &[I, ZERO]]),
        3 => Matrix::from_rows(&[&[ONE, ZERO], &[ZERO, -ONE]]),
        _ => panic!("Pauli digit out of range: {code}"),
    }
}

/// Tensor product Pauli on `k` local sites for base-4 index `idx`.
pub fn local_pauli(idx: usize, k: usize) -> Matrix {
    let mut m = Matrix::identity(1);
    for j in 0..k {
        let digit = (idx >> (2 * j)) & 3;
        m = m.kron(&pauli_matrix(digit));
    }
    m
}

/// Forward Pauli transfer matrix of `rho -> U rho U^dag`, row-major with
/// `ptm[p * 4^k + q] = Tr[P U Q U^dag] / 2^k`.
pub fn unitary_ptm(u: &Matrix) -> Vec<f64> {
    let d = u.dim();
    let k = d.trailing_zeros() as usize;
    assert_eq!(1usize << k, d, "dimension must be a power of two");
    let size = 1usize << (2 * k);
    let paulis: Vec<Matrix> = (0..size).map(|i| local_pauli(i, k)).collect();
    let ud = u.adjoint();
    let mut out = vec![0.0; size * size];
    for q in 0..size {
        let evolved = u.matmul(&paulis[q]).matmul(&ud);
        for p in 0..size {
            out[p * size + q] = paulis[p].matmul(&evolved).trace().re / d as f64;
        }
    }
    out
}

/// Forward PTM of a channel given by Kraus operators.
pub fn kraus_ptm(kraus: &[Matrix]) -> Vec<f64> {
    let d = kraus[0].dim();
    let k = d.trailing_zeros() as usize;
    let size = 1usize << (2 * k);
    let paulis: Vec<Matrix> = (0..size).map(|i| local_pauli(i, k)).collect();
    let mut out = vec![0.0; size * size];
    for q in 0..size {
        let mut evolved = Matrix::zeros(d);
        for kr in kraus {
            evolved = evolved.add(&kr.matmul(&paulis[q]).matmul(&kr.adjoint()));
        }
        for p in 0..size {
            out[p * size + q] = paulis[p].matmul(&evolved).trace().re / d as f64;
        }
    }
    out
}

/// `exp(-i theta/2 G)` for a Pauli matrix `G` (any tensor product of Paulis).
pub fn pauli_rotation(generator: &Matrix, theta: f64) -> Matrix {
    let c = Complex64::new((theta / 2.0).cos(), 0.0);
    let s = Complex64::new(0.0, -(theta / 2.0).sin());
    Matrix::identity(generator.dim())
        .scale(c)
        .add(&generator.scale(s))
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
