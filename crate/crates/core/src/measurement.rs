//! GHZ-basis joint measurements and local projective measurements on X states.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::xstate::{bit, WernerParam, XState};

/// Branches with probability below this are reported as zero-measure.
pub const ZERO_BRANCH: f64 = 1e-15;

/// Projective measurement direction on the Bloch sphere: polar angle `theta`,
/// azimuth `phi`. The basis is
/// `|+⟩ = cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`, `|−⟩ = sin(θ/2)|0⟩ − e^{iφ} cos(θ/2)|1⟩`,
/// so `theta = π/2` measures in the equatorial plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalSetting {
    pub theta: f64,
    pub phi: f64,
}

impl LocalSetting {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=FRAC_PI_2 + 1e-12).contains(&theta) {
            return Err(Error::domain(format!("theta {theta} outside [0, π/2]")));
        }
        if !phi.is_finite() {
            return Err(Error::domain("phi must be finite"));
        }
        Ok(LocalSetting { theta: theta.min(FRAC_PI_2), phi: phi.rem_euclid(TAU) })
    }

    pub fn equatorial(phi: f64) -> Self {
        LocalSetting { theta: FRAC_PI_2, phi: phi.rem_euclid(TAU) }
    }

    /// Amplitudes `(⟨0|±⟩, ⟨1|±⟩)` of the outcome ket for `sign = ±1`.
    pub fn ket(&self, sign: i8) -> [Complex64; 2] {
        let (s, c) = (self.theta / 2.0).sin_cos();
        let phase = Complex64::from_polar(1.0, self.phi);
        if sign >= 0 {
            [Complex64::new(c, 0.0), phase * s]
        } else {
            [Complex64::new(s, 0.0), -phase * c]
        }
    }
}

/// One post-selected outcome of a set of local measurements.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeBranch {
    pub outcome_signs: Vec<i8>,
    pub probability: f64,
    /// `None` for a zero-measure branch.
    pub state: Option<XState>,
}

impl OutcomeBranch {
    /// `f_i = 1 − 2^m p_i`.
    pub fn f(&self) -> f64 {
        1.0 - (1u64 << self.outcome_signs.len()) as f64 * self.probability
    }
}

/// The ensemble left after `measured` parties measured locally.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ensemble {
    pub measured: usize,
    pub branches: Vec<OutcomeBranch>,
}

impl Ensemble {
    pub fn single(state: XState) -> Self {
        Ensemble {
            measured: 0,
            branches: vec![OutcomeBranch { outcome_signs: vec![], probability: 1.0, state: Some(state) }],
        }
    }

    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }

    pub fn zero_branches(&self) -> usize {
        self.branches.iter().filter(|b| b.state.is_none()).count()
    }

    /// Live `(probability, state)` pairs.
    pub fn live(&self) -> impl Iterator<Item = (f64, &XState)> {
        self.branches.iter().filter_map(|b| b.state.as_ref().map(|s| (b.probability, s)))
    }

    /// Qubit count of the surviving states, if any branch is live.
    pub fn n_out(&self) -> Option<usize> {
        self.live().next().map(|(_, s)| s.n())
    }
}

/// A GHZ-basis element `(|x⟩ + s|x̄⟩)/√2` with `x₀ = 0`.
///
/// Index layout: bit 0 is the sign (0 → `+`, 1 → `−`), bits `1..N` hold
/// `x₁ … x_{N−1}` (bit 1 is `x_{N−1}`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GhzOutcome {
    pub n: usize,
    pub x: usize,
    pub negative: bool,
}

impl GhzOutcome {
    pub fn from_index(n: usize, index: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("GHZ measurement needs N ≥ 2, got {n}")));
        }
        if index >= 1 << n {
            return Err(Error::domain(format!("outcome index {index} out of range for N = {n}")));
        }
        Ok(GhzOutcome { n, x: index >> 1, negative: index & 1 == 1 })
    }

    /// Amplitudes of the basis vector over `n` qubits.
    pub fn vector(&self) -> Vec<Complex64> {
        let dim = 1usize << self.n;
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        v[self.x] = Complex64::new(h, 0.0);
        v[self.x ^ (dim - 1)] = Complex64::new(if self.negative { -h } else { h }, 0.0);
        v
    }

    /// Qubits `k` with `x_k = 1`: the Pauli-frame X correction on the outer qubits.
    pub fn flipped_qubits(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| bit(self.x, q, self.n) == 1).collect()
    }
}

/// GHZ-basis joint measurement on the inner halves of `N` Werner pairs.
///
/// Returns the outcome probability and the state of the outer qubits after
/// the X correction on qubits with `x_k = 1`. Every outcome has probability
/// `2^{-N}` because each inner qubit is maximally mixed and independent.
pub fn ghz_collapse(p: WernerParam, n: usize, outcome_index: usize) -> Result<(f64, XState)> {
    let outcome = GhzOutcome::from_index(n, outcome_index)?;
    let pv = p.get();
    let up = 1.0 + pv;
    let down = 1.0 - pv;
    let norm = 0.5f64.powi(n as i32 + 1);
    let diag: Vec<f64> = (0..1usize << n)
        .map(|b| {
            let w = b.count_ones() as i32;
            let nw = n as i32 - w;
            norm * (up.powi(w) * down.powi(nw) + up.powi(nw) * down.powi(w))
        })
        .collect();
    let sign = if (n % 2 == 1) ^ outcome.negative { -1.0 } else { 1.0 };
    let corner = Complex64::new(sign * pv.powi(n as i32) / 2.0, 0.0);
    let state = XState::from_parts(diag, corner)?;
    Ok((0.5f64.powi(n as i32), state))
}

/// Number of qubits surviving the node measurements of a `z`-node chain with
/// coordination number `a`.
pub fn chain_survivors(z: usize, a: usize) -> usize {
    z * (a - 2) + 2
}

/// Node owning each surviving site, in survivor order: node 0's free sites,
/// then node 1's, and so on.
pub fn chain_site_nodes(z: usize, a: usize) -> Vec<usize> {
    let mut nodes = Vec::with_capacity(chain_survivors(z, a));
    for k in 0..z {
        let links = usize::from(k > 0) + usize::from(k + 1 < z);
        nodes.extend(std::iter::repeat_n(k, a - links));
    }
    nodes
}

/// Joint GHZ measurements (canonical `+` outcome) at every node of a 1D chain.
///
/// Node `k` holds `a` Werner halves; consecutive nodes share one Werner pair.
/// The returned state lives on the `z(a−2)+2` unmeasured sites, with the
/// Pauli frame fixed by flipping the sites of odd-indexed nodes so that the
/// coherence sits in the `|0…0⟩⟨1…1|` corner. The corner magnitude is
/// `p^{z(a−1)+1}/2`.
pub fn chain_collapse(p: WernerParam, z: usize, a: usize) -> Result<XState> {
    if z == 0 || a < 2 {
        return Err(Error::domain(format!("chain needs z ≥ 1 and a ≥ 2 (got z={z}, a={a})")));
    }
    let n = chain_survivors(z, a);
    if n > 26 {
        return Err(Error::Capacity { needed: n, cap: 26 });
    }
    let site_node = chain_site_nodes(z, a);
    let pairs = (z * (a - 1) + 1) as i32;
    let node_weight = 0.5f64.powi(z as i32);

    // In the corrected frame dangling pairs favor node bit ≠ site bit and
    // links favor equal bits on both ends.
    let link_same = p.population(true);
    let link_diff = p.population(false);
    let dim = 1usize << n;
    let mut diag = vec![0.0; dim];
    let mut local = vec![[0.0f64; 2]; z];
    for (b, slot) in diag.iter_mut().enumerate() {
        for w in local.iter_mut() {
            *w = [1.0, 1.0];
        }
        for (q, &k) in site_node.iter().enumerate() {
            let sb = bit(b, q, n);
            local[k][0] *= p.population(sb != 0);
            local[k][1] *= p.population(sb != 1);
        }
        // transfer over nodes
        let mut acc = local[0];
        for w in &local[1..] {
            acc = [(acc[0] * link_same + acc[1] * link_diff) * w[0], (acc[0] * link_diff + acc[1] * link_same) * w[1]];
        }
        *slot = node_weight * (acc[0] + acc[1]);
    }
    let total: f64 = diag.iter().sum();
    for d in &mut diag {
        *d /= total;
    }
    let sign = if pairs % 2 == 1 { -1.0 } else { 1.0 };
    let corner = node_weight * sign * (p.get() / 2.0).powi(pairs) / total;
    XState::from_parts(diag, Complex64::new(corner, 0.0))
}

/// Project `site` of `s` onto the `sign` outcome of `setting`.
///
/// Returns the outcome probability and the renormalized state of the other
/// `n − 1` qubits. The corner picks up `± e^{iφ} sin θ / 2` before
/// renormalization.
pub fn local_measure(s: &XState, site: usize, setting: &LocalSetting, sign: i8) -> Result<(f64, XState)> {
    let n = s.n();
    if n < 2 {
        return Err(Error::domain("local measurement needs at least 2 qubits"));
    }
    if site >= n {
        return Err(Error::domain(format!("site {site} out of range for {n} qubits")));
    }
    let ket = setting.ket(sign);
    let w0 = ket[0].norm_sqr();
    let w1 = ket[1].norm_sqr();
    let low_bits = n - 1 - site;
    let low_mask = (1usize << low_bits) - 1;
    let mut diag = vec![0.0; 1 << (n - 1)];
    for (r, slot) in diag.iter_mut().enumerate() {
        let hi = (r >> low_bits) << (low_bits + 1);
        let lo = r & low_mask;
        let i0 = hi | lo;
        let i1 = i0 | (1 << low_bits);
        *slot = w0 * s.diag()[i0] + w1 * s.diag()[i1];
    }
    let prob: f64 = diag.iter().sum();
    if prob < ZERO_BRANCH {
        return Err(Error::ZeroBranch(prob));
    }
    for d in &mut diag {
        *d /= prob;
    }
    let corner = ket[0].conj() * s.offdiag() * ket[1] / prob;
    Ok((prob, XState::from_parts(diag, corner)?))
}

/// Enumerate all `2^m` outcome patterns of local measurements on `sites`.
///
/// Branch `i` has `outcome_signs[l]` for `sites[l]`; patterns are ordered
/// with `+` before `−`, the first site varying slowest.
pub fn measure_all(s: &XState, sites: &[usize], settings: &[LocalSetting]) -> Result<Ensemble> {
    if sites.len() != settings.len() {
        return Err(Error::domain("one setting per measured site required"));
    }
    let mut seen = sites.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != sites.len() {
        return Err(Error::domain("measured sites must be distinct"));
    }
    if sites.iter().any(|&q| q >= s.n()) {
        return Err(Error::domain("measured site out of range"));
    }
    if !sites.is_empty() && sites.len() >= s.n() {
        return Err(Error::domain("at least one qubit must remain unmeasured"));
    }
    let m = sites.len();
    // Measure highest index first so lower indices stay valid.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| sites[y].cmp(&sites[x]));

    let mut branches = Vec::with_capacity(1 << m);
    for pattern in 0..1usize << m {
        let signs: Vec<i8> = (0..m).map(|l| if (pattern >> (m - 1 - l)) & 1 == 0 { 1 } else { -1 }).collect();
        let mut prob = 1.0;
        let mut state = Some(s.clone());
        for &l in &order {
            let Some(cur) = state.take() else { break };
            match local_measure(&cur, sites[l], &settings[l], signs[l]) {
                Ok((pl, next)) => {
                    prob *= pl;
                    state = Some(next);
                }
                Err(Error::ZeroBranch(_)) => {
                    prob = 0.0;
                }
                Err(e) => return Err(e),
            }
        }
        if prob < ZERO_BRANCH {
            state = None;
            prob = 0.0;
        }
        branches.push(OutcomeBranch { outcome_signs: signs, probability: prob, state });
    }
    Ok(Ensemble { measured: m, branches })
}

/// Parties leave without measuring: partial trace over `sites`.
pub fn discard(s: &XState, sites: &[usize]) -> Result<XState> {
    s.discard(sites)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    fn wp(p: f64) -> WernerParam {
        WernerParam::new(p).unwrap()
    }

    #[test]
    fn noiseless_star_is_ghz() {
        let (prob, s) = ghz_collapse(wp(1.0), 3, 0).unwrap();
        assert!((prob - 0.125).abs() < 1e-15);
        let mut expect = vec![0.0; 8];
        expect[0] = 0.5;
        expect[7] = 0.5;
        for (a, b) in s.diag().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((s.offdiag().norm() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn star_corner_magnitude() {
        let (_, s) = ghz_collapse(wp(0.9), 3, 0).unwrap();
        assert!((s.offdiag().norm() - 0.3645).abs() < 1e-12);
        assert!(s.validate().is_valid());
    }

    #[test]
    fn ghz_collapse_domain() {
        assert!(ghz_collapse(wp(0.5), 1, 0).is_err());
        assert!(ghz_collapse(wp(0.5), 3, 8).is_err());
        // sign bit flips only the corner
        let (_, plus) = ghz_collapse(wp(0.6), 3, 0).unwrap();
        let (_, minus) = ghz_collapse(wp(0.6), 3, 1).unwrap();
        assert_eq!(plus.diag(), minus.diag());
        assert_eq!(plus.offdiag(), -minus.offdiag());
    }

    #[test]
    fn chain_with_one_node_is_star() {
        for n in 2..7 {
            let (_, star) = ghz_collapse(wp(0.73), n, 0).unwrap();
            let chain = chain_collapse(wp(0.73), 1, n).unwrap();
            for (a, b) in star.diag().iter().zip(chain.diag()) {
                assert!((a - b).abs() < 1e-14);
            }
            assert!((star.offdiag() - chain.offdiag()).norm() < 1e-14);
        }
    }

    #[test]
    fn chain_corner_exponent() {
        let s = chain_collapse(wp(0.9), 3, 3).unwrap();
        assert_eq!(s.n(), 5);
        assert!((s.offdiag().norm() - 0.9f64.powi(7) / 2.0).abs() < 1e-14);
        assert!(s.validate().is_valid());
    }

    #[test]
    fn chain_site_layout() {
        assert_eq!(chain_site_nodes(3, 4), vec![0, 0, 0, 1, 1, 2, 2, 2]);
        assert_eq!(chain_site_nodes(1, 3), vec![0, 0, 0]);
    }

    #[test]
    fn ghz_contraction() {
        let (prob, s) = local_measure(&XState::ghz(3), 0, &LocalSetting::equatorial(0.0), 1).unwrap();
        assert!((prob - 0.5).abs() < 1e-15);
        for (d, e) in s.diag().iter().zip([0.5, 0.0, 0.0, 0.5]) {
            assert!((d - e).abs() < 1e-15);
        }
        assert!((s.offdiag() - Complex64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn z_measurement_kills_coherence() {
        let (_, star) = ghz_collapse(wp(0.8), 3, 0).unwrap();
        let setting = LocalSetting::new(0.0, 1.3).unwrap();
        let (prob, s) = local_measure(&star, 1, &setting, 1).unwrap();
        let expect: f64 = star.diag().iter().enumerate().filter(|(i, _)| bit(*i, 1, 3) == 0).map(|(_, d)| d).sum();
        assert!((prob - expect).abs() < 1e-15);
        assert_eq!(s.offdiag().norm(), 0.0);
    }

    #[test]
    fn zero_branch_flagged() {
        // |00⟩⟨00| measured along z: the `−` outcome has probability 0.
        let s = XState::from_parts(vec![1.0, 0.0, 0.0, 0.0], Complex64::new(0.0, 0.0)).unwrap();
        let setting = LocalSetting::new(0.0, 0.0).unwrap();
        assert!(matches!(local_measure(&s, 0, &setting, -1), Err(Error::ZeroBranch(_))));
        let ens = measure_all(&s, &[0], &[setting]).unwrap();
        assert_eq!(ens.zero_branches(), 1);
        assert!((ens.total_probability() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn measure_nothing() {
        let (_, star) = ghz_collapse(wp(0.8), 4, 0).unwrap();
        let ens = measure_all(&star, &[], &[]).unwrap();
        assert_eq!(ens.branches.len(), 1);
        assert_eq!(ens.branches[0].probability, 1.0);
        assert_eq!(ens.branches[0].state.as_ref().unwrap(), &star);
    }

    #[test]
    fn equatorial_single_site_is_uniform() {
        let (_, star) = ghz_collapse(wp(0.77), 3, 0).unwrap();
        let ens = measure_all(&star, &[2], &[LocalSetting::equatorial(0.4)]).unwrap();
        for b in &ens.branches {
            assert!((b.probability - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn star_off_diagonal_law() {
        let p = 0.85;
        let n = 5;
        let (_, star) = ghz_collapse(wp(p), n, 0).unwrap();
        let settings = [LocalSetting::new(1.1, 0.3).unwrap(), LocalSetting::new(0.7, 2.0).unwrap()];
        let ens = measure_all(&star, &[1, 3], &settings).unwrap();
        let prod_sin = 1.1f64.sin() * 0.7f64.sin();
        let phase = 2.3;
        for b in &ens.branches {
            let st = b.state.as_ref().unwrap();
            let lhs = st.offdiag().norm() * (1.0 - b.f());
            assert!((lhs - p.powi(n as i32) * prod_sin / 2.0).abs() < 1e-13);
            let arg = st.offdiag().arg();
            let rel = (arg - phase).rem_euclid(std::f64::consts::PI);
            assert!(rel < 1e-12 || (std::f64::consts::PI - rel) < 1e-12);
        }
    }

    #[test]
    fn measurement_order_does_not_matter() {
        let (_, star) = ghz_collapse(wp(0.8), 4, 0).unwrap();
        let sa = LocalSetting::new(FRAC_PI_3, 0.5).unwrap();
        let sb = LocalSetting::new(1.2, 4.0).unwrap();
        let ens = measure_all(&star, &[0, 2], &[sa, sb]).unwrap();
        for b in &ens.branches {
            let (s0, s2) = (b.outcome_signs[0], b.outcome_signs[1]);
            let (p1, a) = local_measure(&star, 0, &sa, s0).unwrap();
            let (p2, a) = local_measure(&a, 1, &sb, s2).unwrap();
            let (q1, c) = local_measure(&star, 2, &sb, s2).unwrap();
            let (q2, c) = local_measure(&c, 0, &sa, s0).unwrap();
            let st = b.state.as_ref().unwrap();
            assert!((p1 * p2 - b.probability).abs() < 1e-14);
            assert!((q1 * q2 - b.probability).abs() < 1e-14);
            for ((x, y), z) in a.diag().iter().zip(c.diag()).zip(st.diag()) {
                assert!((x - z).abs() < 1e-13 && (y - z).abs() < 1e-13);
            }
            assert!((a.offdiag() - st.offdiag()).norm() < 1e-13);
            assert!((c.offdiag() - st.offdiag()).norm() < 1e-13);
        }
    }

    #[test]
    fn chain_interior_measurements() {
        let p = 0.9;
        let s = chain_collapse(wp(p), 2, 4).unwrap();
        assert_eq!(s.n(), 6);
        let sites = [1, 2, 3, 4];
        let ens = measure_all(&s, &sites, &[LocalSetting::equatorial(0.0); 4]).unwrap();
        assert_eq!(ens.branches.len(), 16);
        assert!((ens.total_probability() - 1.0).abs() < 1e-13);
        for b in &ens.branches {
            let st = b.state.as_ref().unwrap();
            let expect = p.powi(7) / (2.0 * (1.0 - b.f()));
            assert!((st.offdiag().norm() - expect).abs() < 1e-13);
            assert!(st.validate().is_valid());
        }
    }

    #[test]
    fn branch_probabilities_sum_to_one() {
        for &(n, m) in &[(3usize, 1usize), (4, 2), (5, 3), (6, 2)] {
            for &p in &[0.3, 0.7, 1.0] {
                let (_, star) = ghz_collapse(wp(p), n, 0).unwrap();
                let sites: Vec<usize> = (0..m).collect();
                let settings: Vec<_> =
                    (0..m).map(|l| LocalSetting::new(0.2 + 0.4 * l as f64, 1.0 * l as f64).unwrap()).collect();
                let ens = measure_all(&star, &sites, &settings).unwrap();
                assert!((ens.total_probability() - 1.0).abs() < 1e-12);
                assert!(ens.live().all(|(_, s)| s.validate().is_valid()));
            }
        }
    }

    #[test]
    fn measure_all_rejects_bad_input() {
        let (_, star) = ghz_collapse(wp(0.8), 3, 0).unwrap();
        let e = LocalSetting::equatorial(0.0);
        assert!(measure_all(&star, &[0, 0], &[e, e]).is_err());
        assert!(measure_all(&star, &[5], &[e]).is_err());
        assert!(measure_all(&star, &[0], &[]).is_err());
        assert!(measure_all(&star, &[0, 1, 2], &[e, e, e]).is_err());
        assert!(LocalSetting::new(2.0, 0.0).is_err());
    }
}
