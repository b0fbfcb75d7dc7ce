//! Single-qubit noise channels in normal form.
//!
//! A channel is stored as `N = U ∘ N' ∘ V` where `N'` has Pauli transfer
//! amplitudes `<<P|N'|P>> = D_P` and `<<P|N'|I>> = t_P` for `P ∈ {X,Y,Z}`.
//! `V` (applied first) and `U` (applied last) are optional unitary PTMs.
//!
//! Besides construction and validation this module computes the contraction
//! quantities used by the error bounds: `Υ(D, t)`, the mean squared contraction
//! coefficient under 2-designs and approximate scramblers, and the resulting
//! effective depolarizing rate.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::clifford::single_qubit_cliffords;
use crate::dense;
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum};

const TOL: f64 = 1e-12;

/// 4x4 real Pauli transfer matrix in the `(I, X, Y, Z)` basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleQubitPtm {
    m: [[f64; 4]; 4],
}

impl SingleQubitPtm {
    pub const IDENTITY: SingleQubitPtm = SingleQubitPtm {
        m: [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ],
    };

    /// Validates the trace-preservation row and, when `unitary` is set, that
    /// the `XYZ` block is orthogonal.
    pub fn new(m: [[f64; 4]; 4], unitary: bool) -> Result<Self> {
        let row0 = [1.0, 0.0, 0.0, 0.0];
        if m[0].iter().zip(row0).any(|(a, b)| (a - b).abs() > 1e-10) {
            return Err(Error::InvalidChannel(
                "first PTM row must be (1, 0, 0, 0)".into(),
            ));
        }
        let ptm = Self { m };
        if unitary {
            for i in 1..4 {
                for j in 1..4 {
                    let dot: f64 = (1..4).map(|k| m[i][k] * m[j][k]).sum();
                    let e = if i == j { 1.0 } else { 0.0 };
                    if (dot - e).abs() > 1e-9 {
                        return Err(Error::InvalidChannel(
                            "rotation PTM is not orthogonal on the XYZ block".into(),
                        ));
                    }
                }
            }
        }
        Ok(ptm)
    }

    /// PTM of `rho -> U rho U^dag` for a 2x2 unitary.
    pub fn from_unitary(u: &dense::Matrix) -> Result<Self> {
        if u.dim() != 2 || !u.is_unitary(1e-10) {
            return Err(Error::InvalidChannel("expected a 2x2 unitary".into()));
        }
        let v = dense::unitary_ptm(u);
        let mut m = [[0.0; 4]; 4];
        for (p, row) in m.iter_mut().enumerate() {
            for (q, e) in row.iter_mut().enumerate() {
                *e = v[p * 4 + q];
            }
        }
        Self::new(m, true)
    }

    #[inline]
    pub fn entry(&self, p: usize, q: usize) -> f64 {
        self.m[p][q]
    }

    pub fn matrix(&self) -> &[[f64; 4]; 4] {
        &self.m
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &SingleQubitPtm) -> SingleQubitPtm {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = (0..4).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        SingleQubitPtm { m }
    }

    pub fn transpose(&self) -> [[f64; 4]; 4] {
        let mut t = [[0.0; 4]; 4];
        for (i, row) in self.m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                t[j][i] = v;
            }
        }
        t
    }
}

/// Noise families distinguished by the contraction analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelClass {
    Unitary,
    DepolarizingLike,
    DephasingLike,
    NonUnital,
}

/// Named origin of a channel, kept for serialization and reporting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChannelKind {
    AmplitudeDamping(f64),
    Dephasing(f64),
    Depolarizing(f64),
    Custom,
}

/// Single-qubit channel `U ∘ N'(D, t) ∘ V`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormChannel {
    d: [f64; 3],
    t: [f64; 3],
    pre: Option<SingleQubitPtm>,
    post: Option<SingleQubitPtm>,
    kind: ChannelKind,
}

fn check_rate(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::OutOfRange(format!("{name} = {p} not in [0, 1]")));
    }
    Ok(())
}

impl NormalFormChannel {
    /// Validated normal-form channel without rotations.
    pub fn new(d: [f64; 3], t: [f64; 3]) -> Result<Self> {
        for v in d.iter().chain(&t) {
            if !v.is_finite() || v.abs() > 1.0 + TOL {
                return Err(Error::InvalidChannel(format!(
                    "normal-form parameter {v} outside [-1, 1]"
                )));
            }
        }
        let nonneg = d.iter().all(|&v| v >= -TOL);
        let nonpos = d.iter().all(|&v| v <= TOL);
        if !(nonneg || nonpos) {
            return Err(Error::InvalidChannel(
                "entries of D must share one sign".into(),
            ));
        }
        let ups = upsilon(d, t);
        if ups > 1.0 + 1e-10 {
            return Err(Error::InvalidChannel(format!(
                "Upsilon(D, t) = {ups} exceeds 1"
            )));
        }
        let min_eig = choi_min_eigenvalue(d, t);
        if min_eig < -1e-10 {
            return Err(Error::InvalidChannel(format!(
                "not completely positive (Choi eigenvalue {min_eig})"
            )));
        }
        Ok(Self {
            d,
            t,
            pre: None,
            post: None,
            kind: ChannelKind::Custom,
        })
    }

    /// Attaches the unitary conjugations applied before (`pre`) and after
    /// (`post`) the normal-form part.
    pub fn with_rotations(
        mut self,
        pre: Option<SingleQubitPtm>,
        post: Option<SingleQubitPtm>,
    ) -> Result<Self> {
        for r in pre.iter().chain(post.iter()) {
            SingleQubitPtm::new(r.m, true)?;
        }
        self.pre = pre;
        self.post = post;
        self.kind = ChannelKind::Custom;
        Ok(self)
    }

    pub fn depolarizing(p: f64) -> Result<Self> {
        check_rate("p", p)?;
        let mut ch = Self::new([1.0 - p; 3], [0.0; 3])?;
        ch.kind = ChannelKind::Depolarizing(p);
        Ok(ch)
    }

    pub fn dephasing(p: f64) -> Result<Self> {
        check_rate("p", p)?;
        let mut ch = if p <= 0.5 {
            Self::new([1.0 - 2.0 * p, 1.0 - 2.0 * p, 1.0], [0.0; 3])?
        } else {
            // D_X = D_Y < 0: move the sign into a Z conjugation
            let z = SingleQubitPtm::from_unitary(&dense::pauli_matrix(3))?;
            Self::new([2.0 * p - 1.0, 2.0 * p - 1.0, 1.0], [0.0; 3])?
                .with_rotations(None, Some(z))?
        };
        ch.kind = ChannelKind::Dephasing(p);
        Ok(ch)
    }

    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        check_rate("gamma", gamma)?;
        let s = (1.0 - gamma).sqrt();
        let mut ch = Self::new([s, s, 1.0 - gamma], [0.0, 0.0, gamma])?;
        ch.kind = ChannelKind::AmplitudeDamping(gamma);
        Ok(ch)
    }

    pub fn identity() -> Self {
        let mut ch = Self::new([1.0; 3], [0.0; 3]).expect("identity is a channel");
        ch.kind = ChannelKind::Depolarizing(0.0);
        ch
    }

    #[inline]
    pub fn d(&self) -> [f64; 3] {
        self.d
    }

    #[inline]
    pub fn t(&self) -> [f64; 3] {
        self.t
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn pre_rotation(&self) -> Option<&SingleQubitPtm> {
        self.pre.as_ref()
    }

    pub fn post_rotation(&self) -> Option<&SingleQubitPtm> {
        self.post.as_ref()
    }

    pub fn has_rotations(&self) -> bool {
        self.pre.is_some() || self.post.is_some()
    }

    /// True for the identity channel: nothing to apply.
    pub fn is_identity(&self) -> bool {
        !self.has_rotations() && self.d == [1.0; 3] && self.t == [0.0; 3]
    }

    /// PTM of the normal-form part `N'` alone.
    pub fn normal_part_ptm(&self) -> SingleQubitPtm {
        let (d, t) = (self.d, self.t);
        SingleQubitPtm {
            m: [
                [1.0, 0.0, 0.0, 0.0],
                [t[0], d[0], 0.0, 0.0],
                [t[1], 0.0, d[1], 0.0],
                [t[2], 0.0, 0.0, d[2]],
            ],
        }
    }

    /// Forward PTM `<<P|N|Q>>` of the full channel.
    pub fn forward_ptm(&self) -> SingleQubitPtm {
        let mut m = self.normal_part_ptm();
        if let Some(pre) = &self.pre {
            m = m.compose(pre);
        }
        if let Some(post) = &self.post {
            m = post.compose(&m);
        }
        m
    }

    /// Rows of the forward PTM: row `P` lists the coefficients of `N^dag(P)`
    /// on `(I, X, Y, Z)`.
    pub fn adjoint_rows(&self) -> [[f64; 4]; 4] {
        self.forward_ptm().m
    }

    /// `N^dag(P)` as a one-qubit Pauli sum.
    pub fn adjoint_action(&self, p: Pauli) -> PauliSum {
        let row = self.adjoint_rows()[p.index()];
        let mut out = PauliSum::new(1);
        for (q, &c) in row.iter().enumerate() {
            out.add_unchecked(PauliString::single(1, 0, Pauli::from_index(q)), c);
        }
        out
    }

    /// Noise family per the normal-form parameters.
    pub fn classify(&self) -> ChannelClass {
        if self.t.iter().any(|&v| v.abs() > TOL) {
            return ChannelClass::NonUnital;
        }
        let ones = self.d.iter().filter(|v| (v.abs() - 1.0).abs() <= TOL).count();
        match ones {
            3 => ChannelClass::Unitary,
            0 => ChannelClass::DepolarizingLike,
            _ => ChannelClass::DephasingLike,
        }
    }

    /// Worst-case bound `Υ(D, t)` on the squared contraction coefficient.
    pub fn chi_sq_worstcase(&self) -> f64 {
        upsilon(self.d, self.t)
    }

    /// Mean squared contraction coefficient under a gate ensemble.
    pub fn chi_sq_mean(&self, design: Design) -> Result<f64> {
        let d2: f64 = self.d.iter().map(|v| v * v).sum();
        let t2: f64 = self.t.iter().map(|v| v * v).sum();
        match design {
            Design::TwoDesign => Ok((d2 + t2) / 3.0),
            Design::Scrambler(eta) => {
                if !(0.0..1.0).contains(&eta) {
                    return Err(Error::OutOfRange(format!("eta = {eta} not in [0, 1)")));
                }
                if self.classify() != ChannelClass::DephasingLike {
                    return Err(Error::Unsupported(format!(
                        "scrambler contraction is only available for dephasing-like \
                         channels, got {:?}",
                        self.classify()
                    )));
                }
                Ok(eta + (1.0 - eta) * d2 / 3.0)
            }
        }
    }

    /// `p = 1 - χ`, with `χ²` taken from the requested model.
    pub fn effective_depolarizing_rate(&self, model: ContractionModel) -> Result<f64> {
        let chi_sq = match model {
            ContractionModel::WorstCase => self.chi_sq_worstcase(),
            ContractionModel::Mean(design) => self.chi_sq_mean(design)?,
        };
        let p = 1.0 - chi_sq.clamp(0.0, 1.0).sqrt();
        if p == 0.0 {
            log::warn!("effective depolarizing rate is zero: no contraction guarantee");
        }
        Ok(p)
    }
}

/// Single-qubit gate ensemble assumption for mean contraction coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Design {
    TwoDesign,
    /// `η`-approximate scrambler.
    Scrambler(f64),
}

/// Which contraction coefficient feeds the effective depolarizing rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ContractionModel {
    /// `Υ(D, t)`, valid for any locally unbiased ensemble.
    WorstCase,
    Mean(Design),
}

/// `max_{|a|=1} Σ a_Q² D_Q² + (Σ a_Q t_Q)²`: the top eigenvalue of
/// `diag(D²) + t tᵀ`.
pub fn upsilon(d: [f64; 3], t: [f64; 3]) -> f64 {
    let tv = Vector3::new(t[0], t[1], t[2]);
    let m = Matrix3::from_diagonal(&Vector3::new(d[0] * d[0], d[1] * d[1], d[2] * d[2]))
        + tv * tv.transpose();
    SymmetricEigen::new(m).eigenvalues.max()
}

/// Smallest eigenvalue of the Choi matrix of `N'(D, t)`.
///
/// `J = ½ Σ_{P,Q} <<Q|N'|P>> Pᵀ ⊗ Q` is Hermitian; its eigenvalues are read
/// off the real symmetric embedding `[[Re, -Im], [Im, Re]]`.
fn choi_min_eigenvalue(d: [f64; 3], t: [f64; 3]) -> f64 {
    let ptm = [
        [1.0, 0.0, 0.0, 0.0],
        [t[0], d[0], 0.0, 0.0],
        [t[1], 0.0, d[1], 0.0],
        [t[2], 0.0, 0.0, d[2]],
    ];
    let mut choi = dense::Matrix::zeros(4);
    for (q, row) in ptm.iter().enumerate() {
        for (p, &amp) in row.iter().enumerate() {
            if amp == 0.0 {
                continue;
            }
            let mut pt = dense::pauli_matrix(p);
            if p == 2 {
                pt = pt.scale(dense::c(-1.0, 0.0));
            }
            let term = pt.kron(&dense::pauli_matrix(q)).scale(dense::c(amp / 2.0, 0.0));
            choi = choi.add(&term);
        }
    }
    let mut real = nalgebra::DMatrix::<f64>::zeros(8, 8);
    for i in 0..4 {
        for j in 0..4 {
            let v = choi.at(i, j);
            real[(i, j)] = v.re;
            real[(i + 4, j + 4)] = v.re;
            real[(i, j + 4)] = -v.im;
            real[(i + 4, j)] = v.im;
        }
    }
    SymmetricEigen::new(real).eigenvalues.min()
}

/// Single-qubit gate distribution for [`verify_scrambler`].
pub trait GateSampler: Sync {
    fn sample(&self, rng: &mut ChaCha8Rng) -> SingleQubitPtm;
}

impl<F> GateSampler for F
where
    F: Fn(&mut ChaCha8Rng) -> SingleQubitPtm + Sync,
{
    fn sample(&self, rng: &mut ChaCha8Rng) -> SingleQubitPtm {
        self(rng)
    }
}

/// Uniform distribution over the 24 single-qubit Cliffords.
pub struct UniformClifford;

impl GateSampler for UniformClifford {
    fn sample(&self, rng: &mut ChaCha8Rng) -> SingleQubitPtm {
        let group = single_qubit_cliffords();
        let g = &group[rng.random_range(0..group.len())];
        SingleQubitPtm::from_unitary(g.unitary()).expect("Clifford is unitary")
    }
}

/// Independent uniform rotations about each listed axis, applied in order.
pub struct UniformRotations(pub Vec<Pauli>);

impl GateSampler for UniformRotations {
    fn sample(&self, rng: &mut ChaCha8Rng) -> SingleQubitPtm {
        let mut u = dense::Matrix::identity(2);
        for axis in &self.0 {
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let r = dense::pauli_rotation(&dense::pauli_matrix(axis.index()), theta);
            u = r.matmul(&u);
        }
        SingleQubitPtm::from_unitary(&u).expect("rotation is unitary")
    }
}

/// Outcome of the statistical scrambler check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScramblerReport {
    pub eta_estimate: f64,
    pub orthogonality_ok: bool,
    /// Largest `|E[R_PA R_QB]|` over `P != Q`.
    pub max_orthogonality_violation: f64,
}

/// Estimates the scrambling parameters of a single-qubit gate ensemble.
///
/// For `R` the forward PTM of a sampled gate, orthogonality requires
/// `E[R_PA R_QB] = 0` for every `P != Q` and all `A, B`; the slack is
/// `η̂ = (3 max_{P,Q∈{X,Y,Z}} E[R_PQ²] - 1) / 2`.
pub fn verify_scrambler<S: GateSampler + ?Sized>(
    ensemble: &S,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<ScramblerReport> {
    if samples < 1000 {
        return Err(Error::OutOfRange(format!(
            "need at least 1000 samples, got {samples}"
        )));
    }
    const CHUNK: usize = 1024;
    // sums[P][Q][A][B] of R_PA R_QB
    type Moments = Box<[[[[f64; 4]; 4]; 4]; 4]>;
    let chunks: Vec<Moments> = (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|ci| {
            let mut acc: Moments = Box::new([[[[0.0; 4]; 4]; 4]; 4]);
            for s in ci * CHUNK..((ci + 1) * CHUNK).min(samples) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(s as u64);
                let r = ensemble.sample(&mut rng);
                for p in 0..4 {
                    for q in 0..4 {
                        for a in 0..4 {
                            for b in 0..4 {
                                acc[p][q][a][b] += r.entry(p, a) * r.entry(q, b);
                            }
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut total: Moments = Box::new([[[[0.0; 4]; 4]; 4]; 4]);
    for c in &chunks {
        for p in 0..4 {
            for q in 0..4 {
                for a in 0..4 {
                    for b in 0..4 {
                        total[p][q][a][b] += c[p][q][a][b];
                    }
                }
            }
        }
    }
    let m = samples as f64;
    let mut violation: f64 = 0.0;
    let mut max_mix: f64 = 0.0;
    for p in 0..4 {
        for q in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    let e = total[p][q][a][b] / m;
                    if p != q {
                        violation = violation.max(e.abs());
                    } else if p > 0 && a == b && a > 0 {
                        max_mix = max_mix.max(e);
                    }
                }
            }
        }
    }
    Ok(ScramblerReport {
        eta_estimate: (3.0 * max_mix - 1.0) / 2.0,
        orthogonality_ok: violation <= tol,
        max_orthogonality_violation: violation,
    })
}
