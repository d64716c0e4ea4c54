//! Critical Werner parameters for star and chain networks, and the
//! minimal-resource searches for superadditivity.

use std::f64::consts::{FRAC_2_PI, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::{Inequality, CHSH_WERNER_BOUND};

pub const BISECTION_TOL: f64 = 1e-10;
pub const MAX_COORDINATION: usize = 64;
pub const MAX_NODES: usize = 1_000_000;

/// A chain of `z` GHZ nodes of coordination `a`, with `m` of the surviving
/// sites measured locally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChainSpec {
    pub z: usize,
    pub a: usize,
    pub m: usize,
}

impl ChainSpec {
    pub fn new(z: usize, a: usize, m: usize) -> Result<Self> {
        if z == 0 {
            return Err(Error::domain("chain needs at least one node"));
        }
        if a < 2 {
            return Err(Error::domain(format!("coordination number {a} < 2")));
        }
        let s = ChainSpec { z, a, m };
        if m > s.max_measured() || s.survivors() - m < 2 {
            return Err(Error::domain(format!(
                "m = {m} leaves {} parties (need at least 2)",
                s.survivors() as isize - m as isize
            )));
        }
        Ok(s)
    }

    /// Interior measurements leaving an `a`-party output: `m = (z−1)(a−2)`.
    pub fn a_party(z: usize, a: usize) -> Result<Self> {
        Self::new(z, a, (z.max(1) - 1) * a.saturating_sub(2))
    }

    /// Everything but two terminals measured: `m = z(a−2)`.
    pub fn bipartite(z: usize, a: usize) -> Result<Self> {
        Self::new(z, a, z * a.saturating_sub(2))
    }

    /// Sites that survive the GHZ measurements: `z(a−2)+2`.
    pub fn survivors(&self) -> usize {
        self.z * (self.a - 2) + 2
    }

    pub fn max_measured(&self) -> usize {
        self.z * (self.a - 2)
    }

    /// Final party count `z(a−2)+2−m`.
    pub fn parties(&self) -> usize {
        self.survivors() - self.m
    }

    /// Exponent of `p` in the output coherence: `z(a−1)+1`.
    pub fn coherence_exponent(&self) -> usize {
        self.z * (self.a - 1) + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Network {
    Star,
    Chain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum ThresholdParams {
    Star { n: usize, m: usize },
    Chain(ChainSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub p_cr: f64,
    pub inequality: Inequality,
    pub network: Network,
    pub params: ThresholdParams,
    /// `p_cr < 1/√2`: the output violates although each Werner copy does not.
    pub superadditive: bool,
}

impl ThresholdResult {
    fn star(p_cr: f64, inequality: Inequality, n: usize, m: usize) -> Self {
        ThresholdResult {
            p_cr,
            inequality,
            network: Network::Star,
            params: ThresholdParams::Star { n, m },
            superadditive: p_cr < CHSH_WERNER_BOUND,
        }
    }

    fn chain(p_cr: f64, inequality: Inequality, spec: ChainSpec) -> Self {
        ThresholdResult {
            p_cr,
            inequality,
            network: Network::Chain,
            params: ThresholdParams::Chain(spec),
            superadditive: p_cr < CHSH_WERNER_BOUND,
        }
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`, to width `tol`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::domain(format!("no sign change on [{lo}, {hi}]")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn check_star(n: usize, m: usize) -> Result<()> {
    if n < 2 || m + 2 > n {
        return Err(Error::domain(format!("star needs N − m ≥ 2 (N = {n}, m = {m})")));
    }
    Ok(())
}

/// Root of `p⁴ + p^{2N} = 1`.
pub fn pcr_star_chsh(n: usize) -> Result<ThresholdResult> {
    check_star(n, 0)?;
    let p = bisect(|p| p.powi(4) + p.powi(2 * n as i32) - 1.0, 0.0, 1.0, BISECTION_TOL)?;
    Ok(ThresholdResult::star(p, Inequality::Chsh, n, n - 2))
}

/// `2^{−(N−m−1)/(2N)}`, with the `m` local phases summing to `β_{N−m}`.
pub fn pcr_star_mbk(n: usize, m: usize) -> Result<ThresholdResult> {
    check_star(n, m)?;
    let p = 2f64.powf(-((n - m) as f64 - 1.0) / (2.0 * n as f64));
    Ok(ThresholdResult::star(p, Inequality::Mbk, n, m))
}

/// Discarding instead of measuring: `1/(2^{(N−1)/(2N)} cos(β_N)^{1/N})`.
pub fn pcr_star_mbk_noncollab(n: usize) -> Result<ThresholdResult> {
    check_star(n, 0)?;
    let nf = n as f64;
    let beta = PI / (4.0 * nf - 4.0);
    let p = 1.0 / (2f64.powf((nf - 1.0) / (2.0 * nf)) * beta.cos().powf(1.0 / nf));
    Ok(ThresholdResult::star(p, Inequality::Mbk, n, 0))
}

/// `2^{3/(2N)} (2/π)^{(N−m)/N}`; with no local measurement (`m = 0`) the
/// LHV bound loses its `√2` and the threshold is `2^{1/N} (2/π)`.
pub fn pcr_star_fb(n: usize, m: usize) -> Result<ThresholdResult> {
    check_star(n, m)?;
    let nf = n as f64;
    let p = if m == 0 {
        2f64.powf(1.0 / nf) * FRAC_2_PI
    } else {
        2f64.powf(3.0 / (2.0 * nf)) * FRAC_2_PI.powf((n - m) as f64 / nf)
    };
    Ok(ThresholdResult::star(p, Inequality::Fb, n, m))
}

fn check_chain(spec: &ChainSpec) -> Result<()> {
    if spec.a < 3 {
        return Err(Error::domain(format!("chain thresholds need a ≥ 3, got {}", spec.a)));
    }
    ChainSpec::new(spec.z, spec.a, spec.m).map(|_| ())
}

/// Root of `p⁶ + p^{2(z(a−1)+1)} = 1` for the two-terminal output.
pub fn pcr_chain_chsh(z: usize, a: usize) -> Result<ThresholdResult> {
    let spec = ChainSpec::bipartite(z, a)?;
    check_chain(&spec)?;
    let e = 2 * spec.coherence_exponent() as i32;
    let p = bisect(|p| p.powi(6) + p.powi(e) - 1.0, 0.0, 1.0, BISECTION_TOL)?;
    Ok(ThresholdResult::chain(p, Inequality::Chsh, spec))
}

/// `2^{(1−a)/(2(z(a−1)+1))}` for the `a`-party output.
pub fn pcr_chain_mbk(z: usize, a: usize) -> Result<ThresholdResult> {
    let spec = ChainSpec::a_party(z, a)?;
    check_chain(&spec)?;
    let p = 2f64.powf((1.0 - a as f64) / (2.0 * spec.coherence_exponent() as f64));
    Ok(ThresholdResult::chain(p, Inequality::Mbk, spec))
}

/// `2^{3/(2P)} (2/π)^{(z(a−2)+2−m)/P}` with `P = z(a−1)+1`. With no local
/// measurement at all (`m = 0`) this is [`pcr_chain_fb_unmeasured`].
pub fn pcr_chain_fb(spec: ChainSpec) -> Result<ThresholdResult> {
    check_chain(&spec)?;
    if spec.m == 0 {
        return pcr_chain_fb_unmeasured(spec.z, spec.a);
    }
    let pe = spec.coherence_exponent() as f64;
    let p = 2f64.powf(3.0 / (2.0 * pe)) * FRAC_2_PI.powf(spec.parties() as f64 / pe);
    Ok(ThresholdResult::chain(p, Inequality::Fb, spec))
}

/// All `z(a−2)+2` survivors kept: `2^{1/P} (2/π)^{(z(a−2)+2)/P}`.
pub fn pcr_chain_fb_unmeasured(z: usize, a: usize) -> Result<ThresholdResult> {
    let spec = ChainSpec::new(z, a, 0)?;
    check_chain(&spec)?;
    let pe = spec.coherence_exponent() as f64;
    let p = 2f64.powf(1.0 / pe) * FRAC_2_PI.powf(spec.survivors() as f64 / pe);
    Ok(ThresholdResult::chain(p, Inequality::Fb, spec))
}

/// Smallest coordination number whose unmeasured chain output beats the
/// functional Bell bound below `p = 1/√2`.
pub fn min_coordination_superadditive(z: usize) -> Result<usize> {
    if z == 0 {
        return Err(Error::domain("z must be positive"));
    }
    for a in 3..=MAX_COORDINATION {
        if pcr_chain_fb_unmeasured(z, a)?.superadditive {
            return Ok(a);
        }
    }
    Err(Error::SearchExhausted(format!("no a ≤ {MAX_COORDINATION} for z = {z}")))
}

/// Smallest node count with `pcr_chain_fb(z, a, m) < 1/√2`. Node counts
/// that cannot host `m` measurements and two parties are skipped.
pub fn min_nodes_superadditive(a: usize, m: usize) -> Result<usize> {
    if a < 3 {
        return Err(Error::domain(format!("coordination number {a} < 3")));
    }
    let mut prev = f64::INFINITY;
    let mut rising = 0usize;
    for z in 1..=MAX_NODES {
        let Ok(spec) = ChainSpec::new(z, a, m) else { continue };
        let r = pcr_chain_fb(spec)?;
        if r.superadditive {
            return Ok(z);
        }
        // Fixed m: the threshold decreases towards (2/π)^{(a−2)/(a−1)}; a
        // long run of increases means it never crosses.
        if r.p_cr >= prev {
            rising += 1;
            if rising > 16 {
                break;
            }
        }
        prev = r.p_cr;
    }
    Err(Error::SearchExhausted(format!("no z ≤ {MAX_NODES} for a = {a}, m = {m}")))
}
