//! CHSH (Horodecki criterion), MBK and functional Bell evaluations, and the
//! branch-averaged localizable nonlocality built from them.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measurement::Ensemble;
use crate::xstate::{DenseState, Pauli, XState};
use crate::Inequality;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshReport {
    /// Sum of the two largest eigenvalues of `TᵀT`.
    pub m: f64,
    /// `M − 1`; positive iff the state violates CHSH.
    pub bv: f64,
    pub t: [[f64; 3]; 3],
}

impl ChshReport {
    fn from_t(t: [[f64; 3]; 3]) -> Self {
        let mut tt = [[0.0; 3]; 3];
        for (i, row) in tt.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| t[k][i] * t[k][j]).sum();
            }
        }
        let mut ev = symmetric3_eigenvalues(&tt);
        ev.sort_by(|a, b| b.total_cmp(a));
        let m = ev[0] + ev[1];
        ChshReport { m, bv: m - 1.0, t }
    }

    pub fn violating(&self) -> bool {
        self.m > 1.0
    }
}

/// Eigenvalues of a real symmetric 3×3 matrix (trigonometric closed form).
pub fn symmetric3_eigenvalues(a: &[[f64; 3]; 3]) -> [f64; 3] {
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    if p1 == 0.0 {
        return [a[0][0], a[1][1], a[2][2]];
    }
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (a[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det_b / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    [e1, 3.0 * q - e1 - e3, e3]
}

/// Horodecki CHSH report of a two-qubit X state, from its closed-form
/// correlation matrix.
pub fn chsh_report(s: &XState) -> Result<ChshReport> {
    if s.n() != 2 {
        return Err(Error::domain(format!("CHSH needs 2 qubits, got {}", s.n())));
    }
    let d = s.diag();
    let c = s.offdiag();
    let tzz = d[0] - d[1] - d[2] + d[3];
    let t = [[2.0 * c.re, -2.0 * c.im, 0.0], [-2.0 * c.im, -2.0 * c.re, 0.0], [0.0, 0.0, tzz]];
    Ok(ChshReport::from_t(t))
}

/// Horodecki CHSH report of an arbitrary two-qubit density matrix.
pub fn chsh_report_dense(rho: &DenseState) -> Result<ChshReport> {
    if rho.n() != 2 {
        return Err(Error::domain(format!("CHSH needs 2 qubits, got {}", rho.n())));
    }
    let paulis = [Pauli::X, Pauli::Y, Pauli::Z];
    let mut t = [[0.0; 3]; 3];
    for (i, &a) in paulis.iter().enumerate() {
        for (j, &b) in paulis.iter().enumerate() {
            t[i][j] = rho.pauli_expectation(&[a, b])?;
        }
    }
    Ok(ChshReport::from_t(t))
}

/// `β_N = π/(4N − 4)`.
pub fn mbk_beta(n: usize) -> f64 {
    PI / (4.0 * (n as f64) - 4.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MbkReport {
    /// `|Tr[B_N ρ]|`.
    pub value: f64,
    /// Signed `Tr[B_N ρ]`.
    pub raw: f64,
    pub beta: f64,
    pub violating: bool,
}

/// `Tr[B_N ρ]` for `B_N = 2^{(N−1)/2}[e^{iβ_N}|0…0⟩⟨1…1| + h.c.]`, i.e.
/// `2^{(N−1)/2} · 2 Re(e^{iβ_N} c̄)`.
pub fn mbk_value(s: &XState) -> Result<MbkReport> {
    let n = s.n();
    if n < 2 {
        return Err(Error::domain("MBK needs at least 2 qubits"));
    }
    let beta = mbk_beta(n);
    let raw = 2f64.powf((n as f64 - 1.0) / 2.0) * 2.0 * (Complex64::from_polar(1.0, beta) * s.offdiag().conj()).re;
    Ok(MbkReport { value: raw.abs(), raw, beta, violating: raw.abs() > 1.0 })
}

/// Closed-form MBK operator as a dense matrix.
pub fn mbk_closed_form_operator(n: usize) -> Result<DenseState> {
    if n < 2 {
        return Err(Error::domain("MBK needs at least 2 qubits"));
    }
    let dim = 1usize << n;
    let scale = 2f64.powf((n as f64 - 1.0) / 2.0);
    let mut op = DenseState::zeros(n);
    let corner = Complex64::from_polar(scale, mbk_beta(n));
    op.set(0, dim - 1, corner);
    op.set(dim - 1, 0, corner.conj());
    Ok(op)
}

/// A pair of Bloch directions `(a_k, a'_k)` for one party.
pub type SettingPair = ([f64; 3], [f64; 3]);

fn sigma(dir: &[f64; 3]) -> [Complex64; 4] {
    let [x, y, z] = *dir;
    [Complex64::new(z, 0.0), Complex64::new(x, -y), Complex64::new(x, y), Complex64::new(-z, 0.0)]
}

fn kron(a: &[Complex64], da: usize, b: &[Complex64; 4]) -> Vec<Complex64> {
    let d = da * 2;
    let mut out = vec![Complex64::new(0.0, 0.0); d * d];
    for r in 0..da {
        for c in 0..da {
            let v = a[r * da + c];
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..2 {
                for j in 0..2 {
                    out[(2 * r + i) * d + 2 * c + j] = v * b[2 * i + j];
                }
            }
        }
    }
    out
}

/// MBK operator from the two-setting recursion
/// `B_k = ½ B_{k−1} ⊗ (σ_a + σ_a') + ½ B'_{k−1} ⊗ (σ_a − σ_a')`,
/// with `B'_k` the same expression under `a ↔ a'`.
pub fn mbk_recursive_operator(settings: &[SettingPair]) -> Result<DenseState> {
    if settings.len() < 2 {
        return Err(Error::domain("MBK needs at least 2 parties"));
    }
    for (a, ap) in settings {
        for d in [a, ap] {
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::domain(format!("direction {d:?} is not a unit vector")));
            }
        }
    }
    let (a0, a0p) = &settings[0];
    let mut b: Vec<Complex64> = sigma(a0).to_vec();
    let mut bp: Vec<Complex64> = sigma(a0p).to_vec();
    let mut dim = 2;
    for (a, ap) in &settings[1..] {
        let sa = sigma(a);
        let sap = sigma(ap);
        let plus: [Complex64; 4] = std::array::from_fn(|i| (sa[i] + sap[i]) * 0.5);
        let minus: [Complex64; 4] = std::array::from_fn(|i| (sa[i] - sap[i]) * 0.5);
        let minus_rev: [Complex64; 4] = std::array::from_fn(|i| -minus[i]);
        let nb: Vec<Complex64> = kron(&b, dim, &plus).iter().zip(kron(&bp, dim, &minus)).map(|(x, y)| x + y).collect();
        let nbp: Vec<Complex64> =
            kron(&bp, dim, &plus).iter().zip(kron(&b, dim, &minus_rev)).map(|(x, y)| x + y).collect();
        b = nb;
        bp = nbp;
        dim *= 2;
    }
    DenseState::from_matrix(settings.len(), b)
}

/// In-plane direction at azimuth `angle`.
pub fn equatorial_direction(angle: f64) -> [f64; 3] {
    [angle.cos(), angle.sin(), 0.0]
}

/// `(σ_x, σ_y)` at every site.
pub fn mbk_xy_settings(n: usize) -> Vec<SettingPair> {
    vec![([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]); n]
}

/// `(σ_x, σ_y)` settings with the first party's pair rotated in the x–y
/// plane so the recursion reproduces the closed form exactly.
///
/// The plain x/y recursion has corner `2^{(N−1)/2} e^{−i(N−1)π/4}`; rotating
/// one party by `γ` multiplies it by `e^{−iγ}`.
pub fn mbk_closed_form_settings(n: usize) -> Vec<SettingPair> {
    let gamma = -(n as f64 - 1.0) * FRAC_PI_4 - mbk_beta(n);
    let mut s = mbk_xy_settings(n);
    s[0] = (equatorial_direction(gamma), equatorial_direction(gamma + FRAC_PI_2));
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FbReport {
    /// `Σ p_i ‖C_QM‖²_i`.
    pub qm_norm: f64,
    /// LHV bound `H`.
    pub lhv_bound: f64,
    pub violating: bool,
}

/// Amplitude of `C_QM(η) = Tr[ρ G(η₁)…G(η_n)] = A cos(Ση + α)` for an X state.
pub fn fb_amplitude(s: &XState) -> f64 {
    2.0 * s.offdiag().norm()
}

/// `‖C_QM‖² = A² (2π)^n / 2`.
pub fn fb_norm(s: &XState) -> f64 {
    let a = fb_amplitude(s);
    a * a * (2.0 * PI).powi(s.n() as i32) / 2.0
}

/// LHV bound prefactor: `√2` once any party measured locally, `1` otherwise.
pub fn fb_kappa(collaborative: bool) -> f64 {
    if collaborative {
        SQRT_2
    } else {
        1.0
    }
}

/// Functional Bell comparison over an ensemble.
///
/// `H = (Σ p_i A_i) · 4^n · κ` with `κ = √2` when any party measured
/// locally (phase-free relaxation of the per-branch bound) and `κ = 1`
/// otherwise.
pub fn fb_report(ens: &Ensemble) -> Result<FbReport> {
    let n = uniform_n_out(ens)?;
    let mut qm = 0.0;
    let mut amp = 0.0;
    for (p, s) in ens.live() {
        qm += p * fb_norm(s);
        amp += p * fb_amplitude(s);
    }
    let h = amp * 4f64.powi(n as i32) * fb_kappa(ens.measured > 0);
    Ok(FbReport { qm_norm: qm, lhv_bound: h, violating: qm > h })
}

fn uniform_n_out(ens: &Ensemble) -> Result<usize> {
    let n = ens.n_out().ok_or_else(|| Error::domain("ensemble has no live branch"))?;
    if ens.live().any(|(_, s)| s.n() != n) {
        return Err(Error::domain("branches have different qubit counts"));
    }
    Ok(n)
}

/// Localizable nonlocality of an ensemble at fixed local settings:
/// CHSH `Σ p_i BV_i`, MBK `Σ p_i |Tr B ρ_i| − 1`, FB `Σ p_i ‖C_QM‖²_i − H`.
pub fn lnl(ens: &Ensemble, inequality: Inequality) -> Result<f64> {
    let n = uniform_n_out(ens)?;
    match inequality {
        Inequality::Chsh => {
            if n != 2 {
                return Err(Error::domain(format!("CHSH needs a 2-qubit output, got {n}")));
            }
            ens.live().map(|(p, s)| chsh_report(s).map(|r| p * r.bv)).sum()
        }
        Inequality::Mbk => {
            let total: Result<f64> = ens.live().map(|(p, s)| mbk_value(s).map(|r| p * r.value)).sum();
            Ok(total? - 1.0)
        }
        Inequality::Fb => {
            let r = fb_report(ens)?;
            Ok(r.qm_norm - r.lhv_bound)
        }
    }
}
