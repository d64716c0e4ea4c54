//! Search over local measurement angles for the localizable nonlocality.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, TAU};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bell::{lnl, mbk_beta};
use crate::error::{Error, Result};
use crate::lattice::RoutePlan;
use crate::measurement::{chain_collapse, ghz_collapse, measure_all, LocalSetting};
use crate::thresholds::{bisect, BISECTION_TOL};
use crate::xstate::{WernerParam, XState};
use crate::Inequality;

pub const GRID: usize = 25;
pub const RANDOM_STARTS: usize = 8;
pub const SEED: u64 = 0x6e6f_6e6c_6f63;
pub const MAX_MEASURED: usize = 12;
const MIN_STEP: f64 = 1e-9;

/// Which network the angles are optimized for.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    /// Star of `n` pairs; sites `0..m` measure locally.
    Star {
        n: usize,
        m: usize,
    },
    Route(RoutePlan),
}

impl Target {
    pub(crate) fn base(&self, p: WernerParam) -> Result<(XState, Vec<usize>)> {
        match self {
            Target::Star { n, m } => {
                if m + 2 > *n {
                    return Err(Error::domain(format!("star needs N − m ≥ 2 (N = {n}, m = {m})")));
                }
                Ok((ghz_collapse(p, *n, 0)?.1, (0..*m).collect()))
            }
            Target::Route(plan) => {
                Ok((chain_collapse(p, plan.equivalent.z, plan.equivalent.a)?, plan.local_sites.clone()))
            }
        }
    }

    pub fn measured(&self) -> usize {
        match self {
            Target::Star { m, .. } => *m,
            Target::Route(plan) => plan.local_sites.len(),
        }
    }

    fn parties(&self) -> usize {
        match self {
            Target::Star { n, m } => n - m,
            Target::Route(plan) => plan.equivalent.parties(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleAssignment {
    pub settings: Vec<LocalSetting>,
    pub value: f64,
}

/// Localizable nonlocality of `target` at explicit settings.
pub fn evaluate(target: &Target, p: WernerParam, inequality: Inequality, settings: &[LocalSetting]) -> Result<f64> {
    let (s, sites) = target.base(p)?;
    lnl(&measure_all(&s, &sites, settings)?, inequality)
}

/// Equatorial settings with phases summing to the MBK optimum `β_{N−m}`
/// (all phases zero for CHSH and FB).
pub fn analytic_settings(target: &Target, inequality: Inequality) -> Vec<LocalSetting> {
    let m = target.measured();
    let phi = match inequality {
        Inequality::Mbk if m > 0 => mbk_beta(target.parties()) / m as f64,
        _ => 0.0,
    };
    vec![LocalSetting::equatorial(phi); m]
}

fn to_settings(x: &[f64]) -> Vec<LocalSetting> {
    x.chunks(2).map(|c| LocalSetting { theta: c[0], phi: c[1] }).collect()
}

fn from_settings(s: &[LocalSetting]) -> Vec<f64> {
    s.iter().flat_map(|s| [s.theta, s.phi]).collect()
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Coordinate-wise pattern search from `x`, steps halving down to `MIN_STEP`.
fn refine(f: &dyn Fn(&[f64]) -> f64, mut x: Vec<f64>) -> (Vec<f64>, f64) {
    let mut best = f(&x);
    let mut step = 0.1;
    while step > MIN_STEP {
        let mut improved = false;
        for k in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[k] += dir * step;
                if k % 2 == 0 {
                    y[k] = y[k].clamp(0.0, FRAC_PI_2);
                } else {
                    y[k] = y[k].rem_euclid(TAU);
                }
                let v = f(&y);
                if v > best && !same_value(v, best) {
                    best = v;
                    x = y;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, best)
}

/// Maximize the localizable nonlocality over the local settings.
///
/// A symmetric `25 × 25` grid (every site sharing one setting) seeds the
/// search together with the analytic equatorial point and eight seeded
/// random starts; each start is refined coordinate-wise. Ties go to the
/// lexicographically smallest `(θ, φ)` sequence.
pub fn optimize(target: &Target, p: WernerParam, inequality: Inequality) -> Result<AngleAssignment> {
    let m = target.measured();
    if m > MAX_MEASURED {
        return Err(Error::Capacity { needed: m, cap: MAX_MEASURED });
    }
    let (s, sites) = target.base(p)?;
    let f = |x: &[f64]| -> f64 {
        measure_all(&s, &sites, &to_settings(x)).and_then(|e| lnl(&e, inequality)).unwrap_or(f64::NEG_INFINITY)
    };
    if m == 0 {
        return Ok(AngleAssignment { settings: vec![], value: f(&[]) });
    }

    let mut grid_best: Option<(Vec<f64>, f64)> = None;
    for a in 0..GRID {
        for b in 0..GRID {
            let theta = FRAC_PI_2 * a as f64 / (GRID - 1) as f64;
            let phi = TAU * b as f64 / GRID as f64;
            let x: Vec<f64> = (0..m).flat_map(|_| [theta, phi]).collect();
            let v = f(&x);
            if grid_best.as_ref().is_none_or(|(_, bv)| v > *bv && !same_value(v, *bv)) {
                grid_best = Some((x, v));
            }
        }
    }
    let mut starts =
        vec![grid_best.expect("grid is non-empty").0, from_settings(&analytic_settings(target, inequality))];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let unit = |r: &mut ChaCha8Rng| (r.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    for _ in 0..RANDOM_STARTS {
        starts.push((0..m).flat_map(|_| [FRAC_PI_2 * unit(&mut rng), TAU * unit(&mut rng)]).collect());
    }

    #[cfg(feature = "parallel")]
    let mut results: Vec<(Vec<f64>, f64)> = {
        use rayon::prelude::*;
        starts.into_par_iter().map(|x| refine(&f, x)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let mut results: Vec<(Vec<f64>, f64)> = starts.into_iter().map(|x| refine(&f, x)).collect();

    results.sort_by(|(xa, va), (xb, vb)| if same_value(*va, *vb) { lex(xa, xb) } else { vb.total_cmp(va) });
    let (x, value) = results.swap_remove(0);
    Ok(AngleAssignment { settings: to_settings(&x), value })
}

/// `Σ_i Π sin θ_k / (2^m (1 − f_i))` over the branches of an `N`-star with
/// `m = N − 2` parties measuring at polar angle `theta`.
pub fn unit_sum(n: usize, p: WernerParam, theta: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::domain("needs N ≥ 3"));
    }
    let m = n - 2;
    let setting = LocalSetting::new(theta, 0.0)?;
    let (_, s) = ghz_collapse(p, n, 0)?;
    let sites: Vec<usize> = (0..m).collect();
    let ens = measure_all(&s, &sites, &vec![setting; m])?;
    let scale = (1u64 << m) as f64;
    let numer = theta.sin().powi(m as i32);
    Ok(ens.branches.iter().filter(|b| b.state.is_some()).map(|b| numer / (scale * (1.0 - b.f()))).sum())
}

/// The branch sum equals 1 at `θ = π/2` for every `p` on a grid.
pub fn verify_unit_sum_identity(n: usize) -> bool {
    (1..=10).all(|k| {
        let p = WernerParam::new(k as f64 / 10.0).expect("grid in range");
        unit_sum(n, p, FRAC_PI_2).is_ok_and(|v| (v - 1.0).abs() < 1e-9)
    })
}

/// Threshold found numerically: the `p` where the localizable nonlocality at
/// [`analytic_settings`] changes sign.
pub fn numeric_threshold(target: &Target, inequality: Inequality) -> Result<f64> {
    let settings = analytic_settings(target, inequality);
    let g = |p: f64| -> f64 {
        let wp = WernerParam::new(p.clamp(0.0, 1.0)).expect("clamped");
        evaluate(target, wp, inequality, &settings).unwrap_or(f64::NEG_INFINITY)
    };
    // At p = 0 the functional Bell difference vanishes identically.
    bisect(g, 1e-3, 1.0, BISECTION_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thresholds::{pcr_chain_fb, pcr_star_chsh, pcr_star_fb, pcr_star_mbk};

    fn wp(p: f64) -> WernerParam {
        WernerParam::new(p).unwrap()
    }

    #[test]
    fn star_chsh_optimum() {
        let t = Target::Star { n: 4, m: 2 };
        let r = optimize(&t, wp(0.95), Inequality::Chsh).unwrap();
        for s in &r.settings {
            assert!((s.theta - FRAC_PI_2).abs() < 1e-3);
        }
        assert!((r.value - (0.95f64.powi(4) + 0.95f64.powi(8) - 1.0)).abs() < 1e-6);
    }

    #[test]
    fn star_mbk_phase() {
        let t = Target::Star { n: 4, m: 1 };
        let r = optimize(&t, wp(0.9), Inequality::Mbk).unwrap();
        let phi = r.settings[0].phi.rem_euclid(std::f64::consts::PI);
        assert!((phi - mbk_beta(3)).abs() < 1e-3, "{phi}");
        assert!((r.settings[0].theta - FRAC_PI_2).abs() < 1e-3);
    }

    #[test]
    fn fb_phase_free() {
        let t = Target::Star { n: 5, m: 2 };
        let r = optimize(&t, wp(0.95), Inequality::Fb).unwrap();
        let shifted: Vec<LocalSetting> =
            r.settings.iter().map(|s| LocalSetting { theta: s.theta, phi: (s.phi + 0.7).rem_euclid(TAU) }).collect();
        let v = evaluate(&t, wp(0.95), Inequality::Fb, &shifted).unwrap();
        assert!((v - r.value).abs() < 1e-8 * r.value.abs().max(1.0));
    }

    #[test]
    fn deterministic() {
        let t = Target::Star { n: 4, m: 2 };
        let a = optimize(&t, wp(0.9), Inequality::Mbk).unwrap();
        let b = optimize(&t, wp(0.9), Inequality::Mbk).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn never_below_analytic() {
        for ineq in Inequality::ALL {
            let t = Target::Star { n: 4, m: 2 };
            let r = optimize(&t, wp(0.9), ineq).unwrap();
            let a = evaluate(&t, wp(0.9), ineq, &analytic_settings(&t, ineq)).unwrap();
            assert!(r.value >= a - 1e-12);
        }
    }

    #[test]
    fn unit_sum_identity() {
        for n in 3..=6 {
            assert!(verify_unit_sum_identity(n));
        }
        assert!(unit_sum(4, wp(0.8), std::f64::consts::FRAC_PI_3).unwrap() < 1.0);
        assert!(!verify_unit_sum_identity(2));
    }

    #[test]
    fn numeric_matches_analytic() {
        let t = Target::Star { n: 3, m: 1 };
        let p = numeric_threshold(&t, Inequality::Chsh).unwrap();
        assert!((p - pcr_star_chsh(3).unwrap().p_cr).abs() < 1e-6);
        let t = Target::Star { n: 5, m: 1 };
        assert!((numeric_threshold(&t, Inequality::Mbk).unwrap() - pcr_star_mbk(5, 1).unwrap().p_cr).abs() < 1e-6);
        assert!((numeric_threshold(&t, Inequality::Fb).unwrap() - pcr_star_fb(5, 1).unwrap().p_cr).abs() < 1e-6);
        let plan = crate::lattice::chain_plan_for(2, 3, crate::lattice::RouteTarget::Multipartite).unwrap();
        let want = pcr_chain_fb(plan.equivalent).unwrap().p_cr;
        let got = numeric_threshold(&Target::Route(plan), Inequality::Fb).unwrap();
        assert!((got - want).abs() < 1e-6);
    }

    #[test]
    fn too_many_sites() {
        assert!(matches!(
            optimize(&Target::Star { n: 16, m: 13 }, wp(0.9), Inequality::Mbk),
            Err(Error::Capacity { .. })
        ));
    }
}
