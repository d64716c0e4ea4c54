//! Brute-force dense simulation of the protocol: Werner pairs, GHZ-basis
//! projections, local projections and Bell evaluations, with no use of the
//! X structure of the states involved.

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;

use crate::bell::{mbk_closed_form_settings, mbk_recursive_operator};
use crate::error::{Error, Result};
use crate::lattice::RoutePlan;
use crate::measurement::{GhzOutcome, LocalSetting, ZERO_BRANCH};
use crate::xstate::{werner_dense, DenseState, Pauli, WernerParam};
use crate::Inequality;

pub const DEFAULT_MAX_QUBITS: usize = 10;
pub const HARD_MAX_QUBITS: usize = 12;
pub const MAX_QUBITS_ENV: &str = "NONLOCAL_NET_MAX_QUBITS";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub max_qubits: usize,
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { max_qubits: DEFAULT_MAX_QUBITS, tolerance: 1e-12 }
    }
}

impl OracleConfig {
    pub fn new(max_qubits: usize) -> Result<Self> {
        if !(2..=HARD_MAX_QUBITS).contains(&max_qubits) {
            return Err(Error::domain(format!("max_qubits must be in 2..={HARD_MAX_QUBITS}, got {max_qubits}")));
        }
        Ok(OracleConfig { max_qubits, ..Default::default() })
    }

    /// Default configuration, with the cap taken from `NONLOCAL_NET_MAX_QUBITS`
    /// when set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(MAX_QUBITS_ENV) {
            Ok(v) => {
                let cap =
                    v.trim().parse().map_err(|_| Error::domain(format!("{MAX_QUBITS_ENV}=`{v}` is not an integer")))?;
                Self::new(cap)
            }
            Err(_) => Ok(Self::default()),
        }
    }

    fn check(&self, needed: usize) -> Result<()> {
        if needed > self.max_qubits {
            return Err(Error::Capacity { needed, cap: self.max_qubits });
        }
        Ok(())
    }
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Kronecker product in the given order (first state = most significant).
pub fn tensor(states: &[DenseState], cfg: &OracleConfig) -> Result<DenseState> {
    let Some((first, rest)) = states.split_first() else {
        return Err(Error::domain("tensor of an empty list"));
    };
    cfg.check(states.iter().map(DenseState::n).sum())?;
    let mut acc = first.clone();
    for b in rest {
        let (da, db) = (acc.dim(), b.dim());
        let d = da * db;
        let mut data = vec![zero(); d * d];
        for r in 0..da {
            for c in 0..da {
                let v = acc.get(r, c);
                if v == zero() {
                    continue;
                }
                for i in 0..db {
                    let row = (r * db + i) * d + c * db;
                    for j in 0..db {
                        data[row + j] = v * b.get(i, j);
                    }
                }
            }
        }
        acc = DenseState::from_matrix(acc.n() + b.n(), data)?;
    }
    Ok(acc)
}

/// Bit masks: full-register offsets for every assignment of `qubits`, and
/// for every index of the complementary register.
fn split_offsets(n: usize, qubits: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut seen = vec![false; n];
    for &q in qubits {
        if q >= n || seen[q] {
            return Err(Error::domain(format!("invalid or repeated qubit {q} for {n} qubits")));
        }
        seen[q] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&q| !seen[q]).collect();
    let expand = |sel: &[usize], idx: usize| -> usize {
        let k = sel.len();
        sel.iter().enumerate().fold(0, |acc, (t, &q)| acc | (((idx >> (k - 1 - t)) & 1) << (n - 1 - q)))
    };
    let sub = (0..1usize << qubits.len()).map(|u| expand(qubits, u)).collect();
    let keep = (0..1usize << rest.len()).map(|r| expand(&rest, r)).collect();
    Ok((sub, keep))
}

/// Contract `qubits` (in the listed order) with the pure state `psi`.
///
/// Returns `Tr[(|ψ⟩⟨ψ| ⊗ I) ρ]` and the renormalized state of the remaining
/// qubits, in their original order.
pub fn project(state: &DenseState, qubits: &[usize], psi: &[Complex64]) -> Result<(f64, DenseState)> {
    if psi.len() != 1 << qubits.len() {
        return Err(Error::domain("projector length does not match qubit count"));
    }
    let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::domain(format!("projector not normalized (|ψ|² = {norm})")));
    }
    if qubits.len() >= state.n() {
        return Err(Error::domain("projection must leave at least one qubit"));
    }
    let (sub, keep) = split_offsets(state.n(), qubits)?;
    let nz: Vec<(usize, Complex64)> =
        sub.iter().zip(psi).filter(|(_, a)| a.norm_sqr() > 0.0).map(|(&o, &a)| (o, a)).collect();
    let d = keep.len();
    let mut out = vec![zero(); d * d];
    for (r, &kr) in keep.iter().enumerate() {
        for (c, &kc) in keep.iter().enumerate() {
            let mut acc = zero();
            for &(ou, au) in &nz {
                let row = kr | ou;
                for &(ov, av) in &nz {
                    acc += au.conj() * state.get(row, kc | ov) * av;
                }
            }
            out[r * d + c] = acc;
        }
    }
    let prob: f64 = (0..d).map(|i| out[i * d + i].re).sum();
    if prob < ZERO_BRANCH {
        return Err(Error::ZeroBranch(prob));
    }
    let mut s = DenseState::from_matrix(state.n() - qubits.len(), out)?;
    s.scale(1.0 / prob);
    Ok((prob, s))
}

pub fn partial_trace(state: &DenseState, qubits: &[usize]) -> Result<DenseState> {
    if qubits.len() >= state.n() {
        return Err(Error::domain("partial trace must leave at least one qubit"));
    }
    let (sub, keep) = split_offsets(state.n(), qubits)?;
    let d = keep.len();
    let mut out = vec![zero(); d * d];
    for (r, &kr) in keep.iter().enumerate() {
        for (c, &kc) in keep.iter().enumerate() {
            out[r * d + c] = sub.iter().map(|&u| state.get(kr | u, kc | u)).sum();
        }
    }
    DenseState::from_matrix(state.n() - qubits.len(), out)
}

/// `X` on every listed qubit.
pub fn apply_x(state: &DenseState, qubits: &[usize]) -> Result<DenseState> {
    let n = state.n();
    let mut mask = 0usize;
    for &q in qubits {
        if q >= n {
            return Err(Error::domain(format!("qubit {q} out of range")));
        }
        mask ^= 1 << (n - 1 - q);
    }
    let dim = state.dim();
    let mut out = DenseState::zeros(n);
    for r in 0..dim {
        for c in 0..dim {
            out.set(r, c, state.get(r ^ mask, c ^ mask));
        }
    }
    Ok(out)
}

fn to_nalgebra(state: &DenseState) -> DMatrix<Complex64> {
    let dim = state.dim();
    DMatrix::from_fn(dim, dim, |r, c| state.get(r, c))
}

/// Smallest eigenvalue of the (Hermitian part of the) state.
pub fn min_eigenvalue(state: &DenseState) -> f64 {
    let m = to_nalgebra(state);
    let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Star network: `n` Werner pairs, inner halves projected onto GHZ outcome
/// `outcome_index`, then the X correction on the outer halves.
pub fn star_state(p: WernerParam, n: usize, outcome_index: usize, cfg: &OracleConfig) -> Result<(f64, DenseState)> {
    let outcome = GhzOutcome::from_index(n, outcome_index)?;
    let pairs = vec![werner_dense(p); n];
    let full = tensor(&pairs, cfg)?;
    let inner: Vec<usize> = (0..n).map(|k| 2 * k).collect();
    let (prob, outer) = project(&full, &inner, &outcome.vector())?;
    Ok((prob, apply_x(&outer, &outcome.flipped_qubits())?))
}

/// `V ρ V†` with `V = |0⟩⟨00| + |1⟩⟨11|` on `(keep, drop)`: the parity
/// check that builds a GHZ projection one qubit at a time. `drop` is
/// removed; the result is not renormalized.
pub fn merge_equal(state: &DenseState, keep: usize, drop: usize) -> Result<DenseState> {
    let n = state.n();
    if keep >= n || drop >= n || keep == drop {
        return Err(Error::domain(format!("bad qubit pair ({keep}, {drop}) for {n} qubits")));
    }
    let (_, rest) = split_offsets(n, &[drop])?;
    let keep_bit = 1usize << (n - 1 - keep);
    let drop_bit = 1usize << (n - 1 - drop);
    let full: Vec<usize> = rest.iter().map(|&r| if r & keep_bit != 0 { r | drop_bit } else { r }).collect();
    let d = full.len();
    let mut out = vec![zero(); d * d];
    for (r, &fr) in full.iter().enumerate() {
        for (c, &fc) in full.iter().enumerate() {
            out[r * d + c] = state.get(fr, fc);
        }
    }
    DenseState::from_matrix(n - 1, out)
}

/// `z`-node chain of coordination `a`, every node projected onto the `+`
/// GHZ outcome. Pairs are added one at a time and folded into a parity
/// qubit for their node, so at most two fresh qubits are live beyond the
/// sites already produced. Sites of odd-indexed nodes get the X frame
/// correction.
///
/// Returns the joint probability of the canonical outcomes and the state of
/// the `z(a−2)+2` surviving sites in node order.
pub fn chain_state(p: WernerParam, z: usize, a: usize, cfg: &OracleConfig) -> Result<(f64, DenseState)> {
    if z == 0 || a < 2 {
        return Err(Error::domain(format!("chain needs z ≥ 1 and a ≥ 2 (got z={z}, a={a})")));
    }
    let w = werner_dense(p);
    let plus = [Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0); 2];
    let mut live: Option<DenseState> = None;
    let mut survivors = 0usize;
    let mut odd_sites = Vec::new();
    let mut prob = 1.0;
    for k in 0..z {
        let outgoing = usize::from(k + 1 < z);
        let fresh = a - usize::from(k > 0);
        // Parity qubit: the incoming link half, or the first fresh inner half.
        let mut parity = if k > 0 { Some(survivors) } else { None };
        for _ in 0..fresh {
            let cur = match live.take() {
                Some(s) => tensor(&[s, w.clone()], cfg)?,
                None => w.clone(),
            };
            let inner = cur.n() - 2;
            live = Some(match parity {
                Some(q) => merge_equal(&cur, q, inner)?,
                None => {
                    parity = Some(inner);
                    cur
                }
            });
        }
        let q = parity.expect("node has at least one pair");
        let (pk, next) = project(live.as_ref().expect("live"), &[q], &plus)?;
        prob *= pk;
        let new_sites = fresh - outgoing;
        if k % 2 == 1 {
            odd_sites.extend(survivors..survivors + new_sites);
        }
        survivors += new_sites;
        live = Some(next);
    }
    let out = live.expect("at least one node");
    debug_assert_eq!(out.n(), survivors);
    Ok((prob, apply_x(&out, &odd_sites)?))
}

/// What the oracle runs.
#[derive(Debug, Clone, PartialEq)]
pub enum Protocol {
    /// Star of `n` pairs, all GHZ outcomes averaged; `sites` measure locally.
    Star { n: usize, sites: Vec<usize> },
    /// A chain-equivalent route (canonical GHZ outcomes).
    Route(RoutePlan),
}

/// Probability-weighted branch states after the local measurements.
pub fn oracle_ensemble(
    protocol: &Protocol,
    p: WernerParam,
    settings: &[LocalSetting],
    cfg: &OracleConfig,
) -> Result<Vec<(f64, DenseState)>> {
    let (sources, sites): (Vec<(f64, DenseState)>, &[usize]) = match protocol {
        Protocol::Star { n, sites } => {
            let all = (0..1usize << n).map(|idx| star_state(p, *n, idx, cfg)).collect::<Result<Vec<_>>>()?;
            (all, sites)
        }
        Protocol::Route(plan) => {
            let (_, s) = chain_state(p, plan.equivalent.z, plan.equivalent.a, cfg)?;
            (vec![(1.0, s)], &plan.local_sites)
        }
    };
    if settings.len() != sites.len() {
        return Err(Error::domain("one setting per measured site required"));
    }
    let m = sites.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| sites[y].cmp(&sites[x]));
    // Branch tree: each measured site splits every live state in two.
    let mut frontier = sources;
    for &l in &order {
        let mut next = Vec::with_capacity(2 * frontier.len());
        for (prob, state) in &frontier {
            for sign in [1i8, -1] {
                match project(state, &[sites[l]], &settings[l].ket(sign)) {
                    Ok((pl, post)) => next.push((prob * pl, post)),
                    Err(Error::ZeroBranch(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        frontier = next;
    }
    Ok(frontier)
}

/// Horodecki `M(ρ)` from Pauli correlations and a general eigen-solver.
pub fn dense_chsh_m(rho: &DenseState) -> Result<f64> {
    if rho.n() != 2 {
        return Err(Error::domain("CHSH needs 2 qubits"));
    }
    let ps = [Pauli::X, Pauli::Y, Pauli::Z];
    let mut t = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            t[(i, j)] = rho.pauli_expectation(&[ps[i], ps[j]])?;
        }
    }
    let mut ev: Vec<f64> = (t.transpose() * t).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev[0] + ev[1])
}

/// `|Tr[B ρ]|` with `B` built by the two-setting recursion.
pub fn dense_mbk(rho: &DenseState) -> Result<f64> {
    let op = mbk_recursive_operator(&mbk_closed_form_settings(rho.n()))?;
    let dim = rho.dim();
    let mut tr = zero();
    for r in 0..dim {
        for c in 0..dim {
            tr += op.get(r, c) * rho.get(c, r);
        }
    }
    Ok(tr.re.abs())
}

/// `‖C_QM‖²` and the amplitude `A` of the correlation function, from the
/// x/y Pauli correlations: `‖C‖² = π^n Σ_{s∈{x,y}^n} T_s²`,
/// `A² = T_{xx…x}² + T_{yx…x}²`.
pub fn dense_fb_parts(rho: &DenseState) -> Result<(f64, f64)> {
    let n = rho.n();
    let mut sum = 0.0;
    for s in 0..1usize << n {
        let ps: Vec<Pauli> = (0..n).map(|q| if (s >> (n - 1 - q)) & 1 == 0 { Pauli::X } else { Pauli::Y }).collect();
        sum += rho.pauli_expectation(&ps)?.powi(2);
    }
    let mut xs = vec![Pauli::X; n];
    let txx = rho.pauli_expectation(&xs)?;
    xs[0] = Pauli::Y;
    let tyx = rho.pauli_expectation(&xs)?;
    Ok((std::f64::consts::PI.powi(n as i32) * sum, (txx * txx + tyx * tyx).sqrt()))
}

fn dense_lnl(branches: &[(f64, DenseState)], measured: usize, inequality: Inequality) -> Result<f64> {
    if branches.is_empty() {
        return Err(Error::domain("no live branch"));
    }
    match inequality {
        Inequality::Chsh => branches.iter().map(|(p, s)| dense_chsh_m(s).map(|m| p * (m - 1.0))).sum(),
        Inequality::Mbk => {
            let v: Result<f64> = branches.iter().map(|(p, s)| dense_mbk(s).map(|b| p * b)).sum();
            Ok(v? - 1.0)
        }
        Inequality::Fb => {
            let n = branches[0].1.n();
            let kappa = if measured > 0 { std::f64::consts::SQRT_2 } else { 1.0 };
            let mut qm = 0.0;
            let mut amp = 0.0;
            for (p, s) in branches {
                let (norm, a) = dense_fb_parts(s)?;
                qm += p * norm;
                amp += p * a;
            }
            Ok(qm - amp * 4f64.powi(n as i32) * kappa)
        }
    }
}

/// Localizable nonlocality of `protocol` at the given local settings,
/// computed densely end to end.
pub fn oracle_lnl(
    protocol: &Protocol,
    p: WernerParam,
    inequality: Inequality,
    settings: &[LocalSetting],
    cfg: &OracleConfig,
) -> Result<f64> {
    let branches = oracle_ensemble(protocol, p, settings, cfg)?;
    dense_lnl(&branches, settings.len(), inequality)
}

/// Same evaluation for parties that leave without measuring (partial trace).
pub fn oracle_discard_lnl(
    n: usize,
    p: WernerParam,
    inequality: Inequality,
    discarded: &[usize],
    cfg: &OracleConfig,
) -> Result<f64> {
    let (_, s) = star_state(p, n, 0, cfg)?;
    let r = partial_trace(&s, discarded)?;
    dense_lnl(&[(1.0, r)], 0, inequality)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{chain_collapse, ghz_collapse, local_measure};
    use crate::xstate::XState;

    fn wp(p: f64) -> WernerParam {
        WernerParam::new(p).unwrap()
    }

    fn cfg() -> OracleConfig {
        OracleConfig::default()
    }

    #[test]
    fn config_bounds() {
        assert!(OracleConfig::new(13).is_err());
        assert!(OracleConfig::new(1).is_err());
        assert_eq!(OracleConfig::new(12).unwrap().max_qubits, 12);
    }

    #[test]
    fn tensor_basics() {
        let i4 = tensor(&[DenseState::identity_mixed(1), DenseState::identity_mixed(1)], &cfg()).unwrap();
        assert!(i4.max_abs_diff(&DenseState::identity_mixed(2)) < 1e-15);
        let w = werner_dense(wp(0.8));
        let t = tensor(&[w.clone(), w.clone(), w.clone()], &cfg()).unwrap();
        assert!((t.trace().re - 1.0).abs() < 1e-12);
        // |000000⟩ population: each pair contributes ⟨00|ρ_W|00⟩ = (1−p)/4
        assert!((t.get(0, 0).re - 0.05f64.powi(3)).abs() < 1e-15);
        assert!(matches!(tensor(&vec![w; 6], &cfg()), Err(Error::Capacity { needed: 12, cap: 10 })));
    }

    #[test]
    fn partial_trace_examples() {
        let ghz3 = XState::ghz(3).to_dense();
        let r = partial_trace(&ghz3, &[2]).unwrap();
        let (d, c) = r.x_part();
        assert_eq!(d, vec![0.5, 0.0, 0.0, 0.5]);
        assert_eq!(c, zero());
        let b = partial_trace(&werner_dense(wp(0.6)), &[1]).unwrap();
        assert!(b.max_abs_diff(&DenseState::identity_mixed(1)) < 1e-15);
    }

    #[test]
    fn perfect_swapping_gives_ghz() {
        let (prob, s) = star_state(wp(1.0), 3, 0, &cfg()).unwrap();
        assert!((prob - 0.125).abs() < 1e-12);
        let (d, c) = s.x_part();
        assert!((d[0] - 0.5).abs() < 1e-12 && (d[7] - 0.5).abs() < 1e-12);
        assert!((c.norm() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn star_matches_xstate_for_all_outcomes() {
        for n in 2..=4 {
            for idx in 0..1usize << n {
                let (pd, d) = star_state(wp(0.9), n, idx, &cfg()).unwrap();
                let (px, x) = ghz_collapse(wp(0.9), n, idx).unwrap();
                assert!((pd - px).abs() < 1e-12);
                assert!(d.max_abs_diff(&x.to_dense()) < 1e-12, "n={n} idx={idx}");
            }
        }
    }

    #[test]
    fn chain_matches_xstate() {
        for (z, a) in [(1, 3), (2, 3), (3, 3), (2, 4), (3, 4)] {
            let (_, d) = chain_state(wp(0.9), z, a, &cfg()).unwrap();
            let x = chain_collapse(wp(0.9), z, a).unwrap();
            assert!(d.max_abs_diff(&x.to_dense()) < 1e-12, "z={z} a={a}");
            assert!(d.hermiticity_error() < 1e-14);
            assert!(min_eigenvalue(&d) > -1e-10);
        }
        let (_, d) = chain_state(wp(0.9), 3, 3, &cfg()).unwrap();
        assert!((d.x_part().1.norm() - 0.9f64.powi(7) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn local_projection_matches() {
        let (_, x) = ghz_collapse(wp(0.8), 3, 0).unwrap();
        let d = x.to_dense();
        let st = LocalSetting::new(0.7, 1.3).unwrap();
        for sign in [1, -1] {
            let (pd, rd) = project(&d, &[1], &st.ket(sign)).unwrap();
            let (px, rx) = local_measure(&x, 1, &st, sign).unwrap();
            assert!((pd - px).abs() < 1e-12);
            assert!(rd.max_abs_diff(&rx.to_dense()) < 1e-12);
        }
    }

    #[test]
    fn project_errors() {
        let d = XState::ghz(2).to_dense();
        let bad = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        assert!(project(&d, &[0], &bad).is_err());
        let ket = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        let s = XState::from_parts(vec![1.0, 0.0, 0.0, 0.0], zero()).unwrap().to_dense();
        assert!(matches!(project(&s, &[0], &ket), Err(Error::ZeroBranch(_))));
        assert!(project(&d, &[0, 1], &[zero(); 4]).is_err());
    }

    #[test]
    fn oracle_lnl_examples() {
        let star = Protocol::Star { n: 3, sites: vec![0] };
        let v = oracle_lnl(&star, wp(0.9), Inequality::Chsh, &[LocalSetting::equatorial(0.0)], &cfg()).unwrap();
        assert!((v - (0.9f64.powi(4) + 0.9f64.powi(6) - 1.0)).abs() < 1e-9);
        let star = Protocol::Star { n: 3, sites: vec![] };
        let v = oracle_lnl(&star, wp(0.95), Inequality::Mbk, &[], &cfg()).unwrap();
        let expect = 2.0 * 0.95f64.powi(3) * (std::f64::consts::PI / 8.0).cos() - 1.0;
        assert!((v - expect).abs() < 1e-9);
    }

    #[test]
    fn staged_chain_matches_single_projection() {
        // z = 1: the staged parity merges against one joint GHZ projection.
        for a in 2..=5 {
            let (ps, s) = chain_state(wp(0.8), 1, a, &cfg()).unwrap();
            let (pj, j) = star_state(wp(0.8), a, 0, &cfg()).unwrap();
            assert!((ps - pj).abs() < 1e-12);
            assert!(s.max_abs_diff(&j) < 1e-12);
        }
        assert!(merge_equal(&DenseState::identity_mixed(2), 0, 0).is_err());
    }

    #[test]
    fn ghz_outcomes_equiprobable() {
        for n in 2..=5 {
            for idx in 0..1usize << n {
                let (prob, _) = star_state(wp(0.7), n, idx, &cfg()).unwrap();
                assert!((prob - 0.5f64.powi(n as i32)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chsh_eigen_routes_agree() {
        let s = XState::new(vec![0.3, 0.1, 0.2, 0.4], Complex64::new(0.15, -0.2)).unwrap();
        let a = crate::bell::chsh_report(&s).unwrap().m;
        assert!((dense_chsh_m(&s.to_dense()).unwrap() - a).abs() < 1e-12);
    }
}
