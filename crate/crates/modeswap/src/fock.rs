//! Truncated Fock-space linear algebra for one and two bosonic modes:
//! coherent and cat states, tensor products, partial traces, purity and
//! number statistics.
//!
//! All states live in the occupation basis `{0, ..., n_max}`. Construction
//! keeps the exact (untruncated) normalization, so a ket's squared norm is
//! `1 - tail`, where the tail is the Fock mass beyond the truncation. The
//! tail is controlled by [`choose_truncation`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard ceiling on per-mode truncation (`n_max`).
pub const TRUNCATION_CEILING: usize = 256;

/// Default tail-mass tolerance for state construction.
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// One of the two field modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    A,
    B,
}

/// Superposition of two coherent states, `(|alpha> + e^{i Phi}|-alpha>)/N`
/// with `N = sqrt(2 (1 + cos(Phi) e^{-2|alpha|^2}))`.
///
/// `phi = 0` is the even cat, `pi` the odd cat, `pi/2` the Yurke-Stoler state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatSpec {
    pub alpha: Complex64,
    /// Relative phase of the superposition (the capital Phi).
    pub phi: f64,
}

impl CatSpec {
    pub fn new(alpha: Complex64, phi: f64) -> Result<Self> {
        let spec = Self { alpha, phi };
        spec.validate()?;
        Ok(spec)
    }

    /// `N = sqrt(2 (1 + cos(Phi) e^{-2|alpha|^2}))`.
    pub fn normalization(&self) -> f64 {
        let sq = 2.0 * (1.0 + self.phi.cos() * (-2.0 * self.alpha.norm_sqr()).exp());
        sq.max(0.0).sqrt()
    }

    /// Rejects the degenerate odd cat of the vacuum, whose normalization vanishes.
    pub fn validate(&self) -> Result<()> {
        if self.normalization() < 1e-12 {
            return Err(Error::NullState);
        }
        Ok(())
    }
}

/// Single-mode ket in the truncated Fock basis; `amps[n]` is the amplitude
/// of `|n>` for `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "FockKetRepr", try_from = "FockKetRepr")]
pub struct FockKet {
    amps: Vec<Complex64>,
}

impl FockKet {
    pub fn from_amps(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidParameter("empty amplitude vector".into()));
        }
        Ok(Self { amps })
    }

    /// Basis vector `|n>`.
    pub fn fock(n: usize, n_max: usize) -> Result<Self> {
        if n > n_max {
            return Err(Error::DimensionMismatch {
                expected: n_max + 1,
                found: n + 1,
            });
        }
        let mut amps = vec![Complex64::ZERO; n_max + 1];
        amps[n] = Complex64::ONE;
        Ok(Self { amps })
    }

    pub fn vacuum(n_max: usize) -> Self {
        Self::fock(0, n_max).expect("0 <= n_max")
    }

    pub fn n_max(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amp(&self, n: usize) -> Complex64 {
        self.amps.get(n).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Fock mass lost to the truncation, `1 - <psi|psi>`, for states that are
    /// normalized before truncation.
    pub fn tail_deficit(&self) -> f64 {
        (1.0 - self.norm_sqr()).max(0.0)
    }

    /// `<self|other>`, conjugating `self`; the shorter ket is zero-padded.
    pub fn overlap(&self, other: &Self) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(x, y)| x.conj() * y)
            .sum()
    }

    /// Mean and variance of the number operator in the normalized state.
    pub fn number_statistics(&self) -> (f64, f64) {
        let norm = self.norm_sqr();
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (n, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            m1 += n as f64 * p;
            m2 += (n as f64) * (n as f64) * p;
        }
        m1 /= norm;
        m2 /= norm;
        (m1, m2 - m1 * m1)
    }
}

#[derive(Serialize, Deserialize)]
struct FockKetRepr {
    n_max: usize,
    amps: Vec<[f64; 2]>,
}

impl From<FockKet> for FockKetRepr {
    fn from(k: FockKet) -> Self {
        Self {
            n_max: k.n_max(),
            amps: k.amps.iter().map(|a| [a.re, a.im]).collect(),
        }
    }
}

impl TryFrom<FockKetRepr> for FockKet {
    type Error = Error;
    fn try_from(r: FockKetRepr) -> Result<Self> {
        if r.amps.len() != r.n_max + 1 {
            return Err(Error::DimensionMismatch {
                expected: r.n_max + 1,
                found: r.amps.len(),
            });
        }
        FockKet::from_amps(r.amps.iter().map(|p| Complex64::new(p[0], p[1])).collect())
    }
}

/// Coherent state `|alpha>` truncated at `n_max`.
///
/// Amplitudes follow the recurrence `amps[n] = amps[n-1] alpha / sqrt(n)`,
/// which is stable far past the truncation ceiling. The truncation tail is
/// reported by [`FockKet::tail_deficit`].
pub fn coherent_ket(alpha: Complex64, n_max: usize) -> FockKet {
    let mut amps = Vec::with_capacity(n_max + 1);
    amps.push(Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0));
    for n in 1..=n_max {
        let prev = amps[n - 1];
        amps.push(prev * alpha / (n as f64).sqrt());
    }
    FockKet { amps }
}

/// Cat state `(|alpha> + e^{i Phi} |-alpha>)/N` truncated at `n_max`.
///
/// Built in one pass as `amps[n] = c_n (1 + e^{i Phi} (-1)^n)/N` with `c_n`
/// the coherent amplitudes, so parity zeros are exact: the odd cat has no
/// even components and the even cat no odd ones.
pub fn cat_ket(spec: &CatSpec, n_max: usize) -> Result<FockKet> {
    spec.validate()?;
    let norm = spec.normalization();
    let base = coherent_ket(spec.alpha, n_max);
    // even/odd cats get their parity zeros exactly; cis(pi) would leave a
    // one-ulp imaginary residue on the cancelled components
    let (even, odd) = if spec.phi == 0.0 {
        (Complex64::new(2.0, 0.0), Complex64::ZERO)
    } else if spec.phi == std::f64::consts::PI || spec.phi == -std::f64::consts::PI {
        (Complex64::ZERO, Complex64::new(2.0, 0.0))
    } else {
        let phase = Complex64::from_polar(1.0, spec.phi);
        (Complex64::ONE + phase, Complex64::ONE - phase)
    };
    let amps = base
        .amps()
        .iter()
        .enumerate()
        .map(|(n, c)| c * if n % 2 == 0 { even } else { odd } / norm)
        .collect();
    Ok(FockKet { amps })
}

/// Two-mode ket with amplitudes indexed by `(n_a, n_b)`, stored row-major
/// with mode A as the slow index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TwoModeKetRepr", try_from = "TwoModeKetRepr")]
pub struct TwoModeKet {
    dim_a: usize,
    dim_b: usize,
    amps: Vec<Complex64>,
}

impl TwoModeKet {
    pub fn zeros(n_max_a: usize, n_max_b: usize) -> Self {
        Self {
            dim_a: n_max_a + 1,
            dim_b: n_max_b + 1,
            amps: vec![Complex64::ZERO; (n_max_a + 1) * (n_max_b + 1)],
        }
    }

    pub fn n_max_a(&self) -> usize {
        self.dim_a - 1
    }

    pub fn n_max_b(&self) -> usize {
        self.dim_b - 1
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_a, self.dim_b)
    }

    pub fn amp(&self, n_a: usize, n_b: usize) -> Complex64 {
        if n_a < self.dim_a && n_b < self.dim_b {
            self.amps[n_a * self.dim_b + n_b]
        } else {
            Complex64::ZERO
        }
    }

    pub fn amp_mut(&mut self, n_a: usize, n_b: usize) -> &mut Complex64 {
        &mut self.amps[n_a * self.dim_b + n_b]
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn tail_deficit(&self) -> f64 {
        (1.0 - self.norm_sqr()).max(0.0)
    }

    /// `<self|other>`, conjugating `self`; mismatched truncations are
    /// zero-padded.
    pub fn overlap(&self, other: &Self) -> Complex64 {
        let da = self.dim_a.min(other.dim_a);
        let db = self.dim_b.min(other.dim_b);
        let mut acc = Complex64::ZERO;
        for i in 0..da {
            for j in 0..db {
                acc += self.amps[i * self.dim_b + j].conj() * other.amps[i * other.dim_b + j];
            }
        }
        acc
    }

    /// Squared overlap normalized by both squared norms; 1 when the states
    /// coincide up to a phase, insensitive to truncation deficits.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.overlap(other).norm_sqr() / (self.norm_sqr() * other.norm_sqr())
    }

    fn marginal(&self, mode: Mode) -> Vec<f64> {
        let dim = match mode {
            Mode::A => self.dim_a,
            Mode::B => self.dim_b,
        };
        let mut p = vec![0.0; dim];
        for i in 0..self.dim_a {
            for j in 0..self.dim_b {
                let w = self.amps[i * self.dim_b + j].norm_sqr();
                match mode {
                    Mode::A => p[i] += w,
                    Mode::B => p[j] += w,
                }
            }
        }
        p
    }

    /// Mean and variance of the number operator of one mode, in the
    /// normalized state.
    pub fn number_statistics(&self, mode: Mode) -> (f64, f64) {
        let norm = self.norm_sqr();
        let p = self.marginal(mode);
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (n, w) in p.iter().enumerate() {
            m1 += n as f64 * w;
            m2 += (n as f64) * (n as f64) * w;
        }
        m1 /= norm;
        m2 /= norm;
        (m1, m2 - m1 * m1)
    }

    /// Mean and variance of the total number operator `n_A + n_B`.
    pub fn total_number_statistics(&self) -> (f64, f64) {
        let norm = self.norm_sqr();
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for i in 0..self.dim_a {
            for j in 0..self.dim_b {
                let w = self.amps[i * self.dim_b + j].norm_sqr();
                let n = (i + j) as f64;
                m1 += n * w;
                m2 += n * n * w;
            }
        }
        m1 /= norm;
        m2 /= norm;
        (m1, m2 - m1 * m1)
    }

    /// Reduced density matrix of the kept mode. Its trace equals the squared
    /// norm of the input.
    pub fn reduced_density(&self, keep: Mode) -> DensityMatrix {
        let m = DMatrix::from_fn(self.dim_a, self.dim_b, |i, j| self.amps[i * self.dim_b + j]);
        let rho = match keep {
            Mode::A => &m * m.adjoint(),
            Mode::B => (m.adjoint() * &m).transpose(),
        };
        DensityMatrix { m: rho }
    }

    /// Projector `|psi><psi|` as a density matrix over the joint space.
    pub fn projector(&self) -> DensityMatrix {
        let d = self.dim_a * self.dim_b;
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = self.amps[i] * self.amps[j].conj();
            }
        }
        DensityMatrix { m }
    }
}

#[derive(Serialize, Deserialize)]
struct TwoModeKetRepr {
    n_max_a: usize,
    n_max_b: usize,
    amps: Vec<[f64; 2]>,
}

impl From<TwoModeKet> for TwoModeKetRepr {
    fn from(k: TwoModeKet) -> Self {
        Self {
            n_max_a: k.n_max_a(),
            n_max_b: k.n_max_b(),
            amps: k.amps.iter().map(|a| [a.re, a.im]).collect(),
        }
    }
}

impl TryFrom<TwoModeKetRepr> for TwoModeKet {
    type Error = Error;
    fn try_from(r: TwoModeKetRepr) -> Result<Self> {
        let expected = (r.n_max_a + 1) * (r.n_max_b + 1);
        if r.amps.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: r.amps.len(),
            });
        }
        Ok(TwoModeKet {
            dim_a: r.n_max_a + 1,
            dim_b: r.n_max_b + 1,
            amps: r.amps.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
        })
    }
}

/// `|a> (x) |b>`: `amps[(n_a, n_b)] = a[n_a] b[n_b]`.
pub fn tensor_product(a: &FockKet, b: &FockKet) -> TwoModeKet {
    let mut out = TwoModeKet::zeros(a.n_max(), b.n_max());
    for (i, &x) in a.amps().iter().enumerate() {
        for (j, &y) in b.amps().iter().enumerate() {
            *out.amp_mut(i, j) = x * y;
        }
    }
    out
}

/// Hermitian, trace-one (up to truncation) operator stored as a dense
/// complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.m.diagonal().iter().map(|z| z.re).sum()
    }

    /// `Tr rho^2`; for Hermitian input this is the squared Frobenius norm.
    pub fn purity(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `(Tr rho^2, 1 - Tr rho^2)`.
    pub fn purity_and_linear_entropy(&self) -> (f64, f64) {
        let p = self.purity();
        (p, 1.0 - p)
    }

    pub fn linear_entropy(&self) -> f64 {
        1.0 - self.purity()
    }

    /// Largest deviation from Hermiticity, `max |rho_ij - conj(rho_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim() {
            for j in i..self.dim() {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue (eigenvalues are real for Hermitian input).
    pub fn min_eigenvalue(&self) -> f64 {
        let eig = nalgebra::SymmetricEigen::new(self.m.clone());
        eig.eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks the density-matrix invariants: Hermiticity to 1e-12, trace
    /// within `eps_trunc` of one, and positive semidefiniteness to 1e-10.
    pub fn validate(&self, eps_trunc: f64) -> Result<()> {
        if self.hermiticity_defect() > 1e-12 {
            return Err(Error::InvalidParameter("not Hermitian".into()));
        }
        let tr = self.trace();
        if tr < 1.0 - eps_trunc || tr > 1.0 + eps_trunc {
            return Err(Error::InvalidParameter(format!("trace {tr} out of range")));
        }
        if self.min_eigenvalue() < -1e-10 {
            return Err(Error::InvalidParameter("negative eigenvalue".into()));
        }
        Ok(())
    }

    /// Partial trace of a two-mode density matrix with factorized dimension
    /// `dim_a * dim_b`, keeping the requested mode.
    pub fn partial_trace(&self, dim_a: usize, dim_b: usize, keep: Mode) -> Result<DensityMatrix> {
        if dim_a * dim_b != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: dim_a * dim_b,
            });
        }
        let idx = |i: usize, j: usize| i * dim_b + j;
        let m = match keep {
            Mode::A => DMatrix::from_fn(dim_a, dim_a, |i, ip| {
                (0..dim_b).map(|j| self.m[(idx(i, j), idx(ip, j))]).sum()
            }),
            Mode::B => DMatrix::from_fn(dim_b, dim_b, |j, jp| {
                (0..dim_a).map(|i| self.m[(idx(i, j), idx(i, jp))]).sum()
            }),
        };
        Ok(DensityMatrix { m })
    }
}

/// State specs considered by [`choose_truncation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateSpec {
    Coherent(Complex64),
    Cat(CatSpec),
}

impl StateSpec {
    /// Poisson mean of the coherent component(s) and the worst-case factor by
    /// which renormalization can amplify the truncation tail: cat amplitudes
    /// are `c_n (1 +- e^{i Phi})/N`, so the tail grows by at most
    /// `(2 + 2 |cos Phi|)/N^2` relative to the coherent tail.
    fn tail_profile(&self) -> (f64, f64) {
        match self {
            StateSpec::Coherent(a) => (a.norm_sqr(), 1.0),
            StateSpec::Cat(c) => {
                let amplification = (2.0 + 2.0 * c.phi.cos().abs()) / c.normalization().powi(2);
                (c.alpha.norm_sqr(), amplification.max(1.0))
            }
        }
    }
}

/// Smallest `n` with Poisson(`mu`) tail mass beyond `n` below `epsilon`,
/// or an error past the ceiling.
fn poisson_truncation(mu: f64, epsilon: f64, ceiling: usize) -> Result<usize> {
    let mut term = (-mu).exp();
    let mut cum = term;
    let mut n = 0usize;
    while 1.0 - cum > epsilon {
        if n >= ceiling {
            return Err(Error::TruncationTooLarge {
                required: n + 1,
                ceiling,
            });
        }
        n += 1;
        term *= mu / n as f64;
        cum += term;
    }
    Ok(n)
}

/// Smallest `n_max` such that every listed coherent or cat component has
/// Fock tail mass beyond `n_max` below `epsilon`.
pub fn choose_truncation(specs: &[StateSpec], epsilon: f64) -> Result<usize> {
    choose_truncation_with_ceiling(specs, epsilon, TRUNCATION_CEILING)
}

pub fn choose_truncation_with_ceiling(
    specs: &[StateSpec],
    epsilon: f64,
    ceiling: usize,
) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let mut n_max = 0usize;
    for spec in specs {
        let (mu, amplification) = spec.tail_profile();
        n_max = n_max.max(poisson_truncation(mu, epsilon / amplification, ceiling)?);
    }
    Ok(n_max)
}
