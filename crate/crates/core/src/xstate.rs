//! X-type states and the Werner parameterization.
//!
//! Qubit 0 is the most significant bit of a computational-basis index.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NORM_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

/// Mixing weight of `p |ψ⁻⟩⟨ψ⁻| + (1 - p) I/4`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WernerParam(f64);

impl WernerParam {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(Error::domain(format!("Werner parameter {p} outside [0, 1]")));
        }
        Ok(WernerParam(p))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_entangled(self) -> bool {
        self.0 > 1.0 / 3.0
    }

    pub fn violates_chsh(self) -> bool {
        self.0 > crate::CHSH_WERNER_BOUND
    }

    /// Population of `|αβ⟩` in the Werner state: `(1 + p)/4` for α ≠ β,
    /// `(1 - p)/4` otherwise.
    #[inline]
    pub(crate) fn population(self, anti_aligned: bool) -> f64 {
        if anti_aligned {
            (1.0 + self.0) / 4.0
        } else {
            (1.0 - self.0) / 4.0
        }
    }
}

/// Test bit `q` (qubit 0 = most significant) of an `n`-qubit index.
#[inline]
pub(crate) fn bit(index: usize, q: usize, n: usize) -> usize {
    (index >> (n - 1 - q)) & 1
}

/// An `n`-qubit density matrix whose only nonzero entries are the diagonal and
/// the corner pair `⟨0…0|ρ|1…1⟩ = offdiag`, `⟨1…1|ρ|0…0⟩ = conj(offdiag)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XState {
    n: usize,
    diag: Vec<f64>,
    offdiag: Complex64,
}

impl XState {
    /// Build without validation; use [`XState::validate`] for the invariants.
    pub fn from_parts(diag: Vec<f64>, offdiag: Complex64) -> Result<Self> {
        let len = diag.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::domain(format!("diagonal length {len} is not 2^n with n ≥ 1")));
        }
        Ok(XState { n: len.trailing_zeros() as usize, diag, offdiag })
    }

    /// Same as [`XState::from_parts`] but rejects states that fail validation.
    pub fn new(diag: Vec<f64>, offdiag: Complex64) -> Result<Self> {
        let s = Self::from_parts(diag, offdiag)?;
        let report = s.validate();
        if !report.is_valid() {
            return Err(Error::domain(format!("invalid X state: {report:?}")));
        }
        Ok(s)
    }

    /// `(|0…0⟩ + |1…1⟩)/√2` projector.
    pub fn ghz(n: usize) -> Self {
        let mut diag = vec![0.0; 1 << n];
        diag[0] = 0.5;
        diag[(1 << n) - 1] = 0.5;
        XState { n, diag, offdiag: Complex64::new(0.5, 0.0) }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    #[inline]
    pub fn offdiag(&self) -> Complex64 {
        self.offdiag
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    pub fn with_offdiag(&self, c: Complex64) -> Self {
        XState { offdiag: c, ..self.clone() }
    }

    /// Diagnostic report over the X-state invariants.
    pub fn validate(&self) -> XStateReport {
        let last = self.dim() - 1;
        let trace = self.trace();
        let min_diag = self.diag.iter().copied().fold(f64::INFINITY, f64::min);
        let bound = (self.diag[0].max(0.0) * self.diag[last].max(0.0)).sqrt();
        let corner_excess = self.offdiag.norm() - bound;
        XStateReport {
            trace_deviation: (trace - 1.0).abs(),
            min_diag,
            corner_excess,
            normalized: (trace - 1.0).abs() <= NORM_TOL,
            nonnegative: min_diag >= -PSD_TOL,
            positive_corner: corner_excess <= PSD_TOL,
        }
    }

    /// Partial trace over `sites`. Any traced site kills the corner.
    pub fn discard(&self, sites: &[usize]) -> Result<XState> {
        let mut sorted = sites.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != sites.len() {
            return Err(Error::domain("repeated site in discard set"));
        }
        if let Some(&s) = sorted.last() {
            if s >= self.n {
                return Err(Error::domain(format!("site {s} out of range for {} qubits", self.n)));
            }
        }
        if sorted.is_empty() {
            return Ok(self.clone());
        }
        let keep: Vec<usize> = (0..self.n).filter(|q| sorted.binary_search(q).is_err()).collect();
        if keep.is_empty() {
            return Err(Error::domain("cannot trace out every qubit"));
        }
        let k = keep.len();
        let mut diag = vec![0.0; 1 << k];
        for (idx, &d) in self.diag.iter().enumerate() {
            let mut r = 0;
            for &q in &keep {
                r = (r << 1) | bit(idx, q, self.n);
            }
            diag[r] += d;
        }
        Ok(XState { n: k, diag, offdiag: Complex64::new(0.0, 0.0) })
    }

    /// `(q₁, q₂)` of the schematic `q₁|GHZ⟩⟨GHZ| + q₂ I/2^n + (1-q₁-q₂)(|0…0⟩⟨0…0| + |1…1⟩⟨1…1|)/2`
    /// family, read off as derived quantities: `q₁ = 2|c|`, `q₂ = 2^n · min`
    /// of the interior populations. Only meaningful for symmetric states.
    pub fn ghz_mixture_weights(&self) -> (f64, f64) {
        let q1 = 2.0 * self.offdiag.norm();
        let last = self.dim() - 1;
        let interior = self.diag[1..last].iter().copied().fold(f64::INFINITY, f64::min);
        let q2 = if interior.is_finite() { interior * self.dim() as f64 } else { 0.0 };
        (q1, q2)
    }

    pub fn to_dense(&self) -> DenseState {
        xstate_to_dense(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XStateReport {
    pub trace_deviation: f64,
    pub min_diag: f64,
    pub corner_excess: f64,
    pub normalized: bool,
    pub nonnegative: bool,
    pub positive_corner: bool,
}

impl XStateReport {
    pub fn is_valid(&self) -> bool {
        self.normalized && self.nonnegative && self.positive_corner
    }
}

/// Full `2^n × 2^n` complex density matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    n: usize,
    data: Vec<Complex64>,
}

impl DenseState {
    pub fn from_matrix(n: usize, data: Vec<Complex64>) -> Result<Self> {
        let dim = 1usize << n;
        if data.len() != dim * dim {
            return Err(Error::domain(format!("matrix has {} entries, expected {}", data.len(), dim * dim)));
        }
        Ok(DenseState { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        let dim = 1usize << n;
        DenseState { n, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn from_pure(psi: &[Complex64]) -> Result<Self> {
        let dim = psi.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::domain("pure state length must be 2^n"));
        }
        let mut out = Self::zeros(dim.trailing_zeros() as usize);
        for r in 0..dim {
            for c in 0..dim {
                out.data[r * dim + c] = psi[r] * psi[c].conj();
            }
        }
        Ok(out)
    }

    pub fn identity_mixed(n: usize) -> Self {
        let dim = 1usize << n;
        let mut out = Self::zeros(n);
        for i in 0..dim {
            out.data[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        out
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim() + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        let dim = self.dim();
        self.data[r * dim + c] = v;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&mut self, k: f64) {
        for v in &mut self.data {
            *v *= k;
        }
    }

    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in r..dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Largest entrywise deviation from another matrix of the same size.
    pub fn max_abs_diff(&self, other: &DenseState) -> f64 {
        assert_eq!(self.n, other.n, "qubit count mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Diagonal and `(0, 2^n - 1)` corner, i.e. the X-state content.
    pub fn x_part(&self) -> (Vec<f64>, Complex64) {
        let dim = self.dim();
        ((0..dim).map(|i| self.get(i, i).re).collect(), self.get(0, dim - 1))
    }

    /// `Tr[ρ σ_{s₀} ⊗ … ⊗ σ_{s_{n−1}}]` with `s_q ∈ {'I','X','Y','Z'}`.
    pub fn pauli_expectation(&self, paulis: &[Pauli]) -> Result<f64> {
        if paulis.len() != self.n {
            return Err(Error::domain("Pauli string length must match qubit count"));
        }
        let n = self.n;
        let mut flip = 0usize;
        for (q, p) in paulis.iter().enumerate() {
            if matches!(p, Pauli::X | Pauli::Y) {
                flip |= 1 << (n - 1 - q);
            }
        }
        // P|k⟩ = phase(k)|k ⊕ flip⟩, so Tr[ρP] = Σ_k phase(k) ρ(k, k ⊕ flip).
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..self.dim() {
            let mut phase = Complex64::new(1.0, 0.0);
            for (q, p) in paulis.iter().enumerate() {
                let b = bit(k, q, n);
                match p {
                    Pauli::I | Pauli::X => {}
                    Pauli::Y => phase *= if b == 0 { Complex64::i() } else { -Complex64::i() },
                    Pauli::Z => {
                        if b == 1 {
                            phase = -phase
                        }
                    }
                }
            }
            acc += phase * self.get(k, k ^ flip);
        }
        Ok(acc.re)
    }

    /// Sum of magnitudes of entries outside the diagonal and the two corners.
    pub fn non_x_weight(&self) -> f64 {
        let dim = self.dim();
        let mut w = 0.0;
        for r in 0..dim {
            for c in 0..dim {
                let corner = (r == 0 && c == dim - 1) || (r == dim - 1 && c == 0);
                if r != c && !corner {
                    w += self.get(r, c).norm();
                }
            }
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// `p |ψ⁻⟩⟨ψ⁻| + (1 - p) I/4` with `|ψ⁻⟩ = (|01⟩ - |10⟩)/√2`.
pub fn werner_dense(p: WernerParam) -> DenseState {
    let p = p.get();
    let mut out = DenseState::zeros(2);
    let mix = (1.0 - p) / 4.0;
    for i in 0..4 {
        out.set(i, i, Complex64::new(mix, 0.0));
    }
    // singlet block on |01⟩, |10⟩
    out.set(1, 1, Complex64::new(mix + p / 2.0, 0.0));
    out.set(2, 2, Complex64::new(mix + p / 2.0, 0.0));
    out.set(1, 2, Complex64::new(-p / 2.0, 0.0));
    out.set(2, 1, Complex64::new(-p / 2.0, 0.0));
    out
}

pub fn xstate_to_dense(s: &XState) -> DenseState {
    let dim = s.dim();
    let mut out = DenseState::zeros(s.n());
    for (i, &d) in s.diag().iter().enumerate() {
        out.set(i, i, Complex64::new(d, 0.0));
    }
    out.set(0, dim - 1, out.get(0, dim - 1) + s.offdiag());
    out.set(dim - 1, 0, out.get(dim - 1, 0) + s.offdiag().conj());
    out
}
