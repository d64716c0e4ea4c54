//! Network layouts: 1D chains, square-lattice routes and triangular-lattice
//! lines, each reduced to a [`ChainSpec`] plus a local measurement plan.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measurement::{chain_collapse, chain_site_nodes, measure_all, Ensemble, LocalSetting};
use crate::thresholds::ChainSpec;
use crate::xstate::WernerParam;

/// Party `q` (1..=4) attached to square-lattice position `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SquareAddress {
    pub i: i64,
    pub j: i64,
    pub q: u8,
}

impl SquareAddress {
    pub fn new(i: i64, j: i64, q: u8) -> Result<Self> {
        if !(1..=4).contains(&q) {
            return Err(Error::domain(format!("q must be in 1..=4, got {q}")));
        }
        Ok(SquareAddress { i, j, q })
    }

    pub fn position(&self) -> Node {
        (self.i, self.j)
    }
}

impl std::str::FromStr for SquareAddress {
    type Err = Error;

    /// Parses `i,j,q`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::domain(format!("expected `i,j,q`, got `{s}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let i = parts[0].parse().map_err(|_| bad())?;
        let j = parts[1].parse().map_err(|_| bad())?;
        let q = parts[2].parse().map_err(|_| bad())?;
        SquareAddress::new(i, j, q)
    }
}

pub type Node = (i64, i64);

/// How a slot `q` maps to the node it attaches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisConvention {
    /// `q=1: (i+1, j)`, `q=2: (i, j+1)`, `q=3: (i−1, j)`, `q=4: (i, j−1)`.
    Compass,
    /// Slots shifted a quarter turn, with `q=4` on the site's own node:
    /// `q=1,2: (i, j+1)`, `q=3: (i−1, j)`, `q=4: (i, j)`.
    #[default]
    Shifted,
}

impl std::str::FromStr for AxisConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "compass" => Ok(AxisConvention::Compass),
            "table" | "shifted" | "table-i" => Ok(AxisConvention::Shifted),
            other => Err(Error::domain(format!("unknown axis convention `{other}`"))),
        }
    }
}

pub fn nearest_node(addr: SquareAddress, convention: AxisConvention) -> Result<Node> {
    let SquareAddress { i, j, q } = SquareAddress::new(addr.i, addr.j, addr.q)?;
    Ok(match (convention, q) {
        (AxisConvention::Compass, 1) => (i + 1, j),
        (AxisConvention::Compass, 2) => (i, j + 1),
        (AxisConvention::Compass, 3) => (i - 1, j),
        (AxisConvention::Compass, _) => (i, j - 1),
        (AxisConvention::Shifted, 1 | 2) => (i, j + 1),
        (AxisConvention::Shifted, 3) => (i - 1, j),
        (AxisConvention::Shifted, _) => (i, j),
    })
}

/// What the route should leave behind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteTarget {
    /// Two terminals; every other surviving site measures locally.
    Bipartite,
    /// An `a`-party output: interior sites measure, `(z−1)(a−2)` of them.
    #[default]
    Multipartite,
}

impl std::str::FromStr for RouteTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bipartite" | "2" => Ok(RouteTarget::Bipartite),
            "multipartite" | "a" => Ok(RouteTarget::Multipartite),
            other => Err(Error::domain(format!("unknown route target `{other}`"))),
        }
    }
}

/// A surviving site: `slot`-th free qubit of GHZ node `node`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RouteSite {
    pub node: usize,
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoutePlan {
    /// Lattice positions of the GHZ measurements, in path order.
    pub ghz_nodes: Vec<Node>,
    /// Surviving sites in qubit order.
    pub sites: Vec<RouteSite>,
    /// Indices into `sites` left unmeasured.
    pub terminals: Vec<usize>,
    /// Indices into `sites` measured locally.
    pub local_sites: Vec<usize>,
    pub equivalent: ChainSpec,
}

impl RoutePlan {
    fn build(ghz_nodes: Vec<Node>, a: usize, terminals: Vec<usize>) -> Result<Self> {
        let z = ghz_nodes.len();
        let owners = chain_site_nodes(z, a);
        let mut sites = Vec::with_capacity(owners.len());
        let mut slot = 0;
        for (q, &k) in owners.iter().enumerate() {
            if q > 0 && owners[q - 1] != k {
                slot = 0;
            }
            sites.push(RouteSite { node: k, slot });
            slot += 1;
        }
        let mut t = terminals;
        t.sort_unstable();
        t.dedup();
        if t.iter().any(|&s| s >= sites.len()) {
            return Err(Error::domain(format!("terminal index out of range (have {} sites)", sites.len())));
        }
        if t.len() < 2 {
            return Err(Error::domain("a plan needs at least two terminals"));
        }
        let local_sites: Vec<usize> = (0..sites.len()).filter(|s| t.binary_search(s).is_err()).collect();
        let equivalent = ChainSpec::new(z, a, local_sites.len())?;
        Ok(RoutePlan { ghz_nodes, sites, terminals: t, local_sites, equivalent })
    }

    /// Branch ensemble after the GHZ measurements (canonical outcome) and
    /// the local measurements, all sharing `setting`.
    pub fn ensemble(&self, p: WernerParam, setting: LocalSetting) -> Result<Ensemble> {
        let s = chain_collapse(p, self.equivalent.z, self.equivalent.a)?;
        measure_all(&s, &self.local_sites, &vec![setting; self.local_sites.len()])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

fn default_terminals(survivors: usize, a: usize, target: RouteTarget) -> Vec<usize> {
    match target {
        RouteTarget::Bipartite => vec![0, survivors - 1],
        RouteTarget::Multipartite => (0..a.min(survivors)).collect(),
    }
}

/// `z`-node chain with explicit terminal sites (indices into the
/// `z(a−2)+2` survivors); every other survivor measures locally.
pub fn chain_plan(z: usize, a: usize, terminals: &[usize]) -> Result<RoutePlan> {
    if z == 0 || a < 3 {
        return Err(Error::domain(format!("chain needs z ≥ 1 and a ≥ 3 (got z={z}, a={a})")));
    }
    let survivors = z * (a - 2) + 2;
    if terminals.len() > survivors {
        return Err(Error::domain(format!("{} terminals but only {survivors} surviving sites", terminals.len())));
    }
    RoutePlan::build((0..z as i64).map(|k| (0, k)).collect(), a, terminals.to_vec())
}

/// Chain plan with the default terminal choice for `target`.
pub fn chain_plan_for(z: usize, a: usize, target: RouteTarget) -> Result<RoutePlan> {
    if z == 0 || a < 3 {
        return Err(Error::domain(format!("chain needs z ≥ 1 and a ≥ 3 (got z={z}, a={a})")));
    }
    chain_plan(z, a, &default_terminals(z * (a - 2) + 2, a, target))
}

fn l_path(from: Node, to: Node, rows_first: bool) -> Vec<Node> {
    let mut path = vec![from];
    let (mut i, mut j) = from;
    let step_i = |i: &mut i64, path: &mut Vec<Node>, j: i64| {
        while *i != to.0 {
            *i += (to.0 - *i).signum();
            path.push((*i, j));
        }
    };
    let step_j = |j: &mut i64, path: &mut Vec<Node>, i: i64| {
        while *j != to.1 {
            *j += (to.1 - *j).signum();
            path.push((i, *j));
        }
    };
    if rows_first {
        step_i(&mut i, &mut path, j);
        step_j(&mut j, &mut path, i);
    } else {
        step_j(&mut j, &mut path, i);
        step_i(&mut i, &mut path, j);
    }
    path
}

/// L-shaped route on the square lattice (`a = 4`) between the nearest
/// nodes of two parties.
///
/// The row-first path is tried before the column-first one. A path may not
/// cross an endpoint's own position unless that position is its nearest
/// node.
pub fn route_square(
    from: SquareAddress,
    to: SquareAddress,
    target: RouteTarget,
    convention: AxisConvention,
) -> Result<RoutePlan> {
    if from == to {
        return Err(Error::Routing("endpoints coincide".into()));
    }
    let n1 = nearest_node(from, convention)?;
    let n2 = nearest_node(to, convention)?;
    if n1 == n2 {
        return Err(Error::Routing(format!("both endpoints attach to node {n1:?}")));
    }
    let blocked: Vec<Node> =
        [(from.position(), n1), (to.position(), n2)].iter().filter(|(own, near)| own != near).map(|p| p.0).collect();
    let mut tried = Vec::new();
    for rows_first in [true, false] {
        let path = l_path(n1, n2, rows_first);
        if let Some(hit) = path.iter().find(|n| blocked.contains(n)) {
            tried.push(format!(
                "{} path crosses endpoint position {hit:?}",
                if rows_first { "row-first" } else { "column-first" }
            ));
            continue;
        }
        let a = 4;
        let survivors = path.len() * (a - 2) + 2;
        return RoutePlan::build(path, a, default_terminals(survivors, a, target));
    }
    Err(Error::Routing(format!("no L-shaped route from {from:?} to {to:?}: {}", tried.join("; "))))
}

/// Straight line of `z` nodes on the triangular lattice (`a = 6`) with `m`
/// local measurements; the first `4z+2−m` survivors are the parties.
pub fn triangular_plan(z: usize, m: usize) -> Result<RoutePlan> {
    let a = 6;
    if z == 0 {
        return Err(Error::domain("z must be positive"));
    }
    let survivors = z * (a - 2) + 2;
    if m + 2 > survivors {
        return Err(Error::domain(format!("m = {m} leaves fewer than two parties")));
    }
    RoutePlan::build((0..z as i64).map(|k| (k, 0)).collect(), a, (0..survivors - m).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thresholds::pcr_chain_fb;

    fn addr(i: i64, j: i64, q: u8) -> SquareAddress {
        SquareAddress::new(i, j, q).unwrap()
    }

    #[test]
    fn nearest_nodes() {
        for c in [AxisConvention::Compass, AxisConvention::Shifted] {
            assert_eq!(nearest_node(addr(5, 5, 3), c).unwrap(), (4, 5));
            assert_eq!(nearest_node(addr(0, 0, 2), c).unwrap(), (0, 1));
        }
        assert_eq!(nearest_node(addr(2, 1, 1), AxisConvention::Shifted).unwrap(), (2, 2));
        assert_eq!(nearest_node(addr(2, 1, 1), AxisConvention::Compass).unwrap(), (3, 1));
        assert!(SquareAddress::new(0, 0, 5).is_err());
        assert!("1,2".parse::<SquareAddress>().is_err());
        assert_eq!("2,1,1".parse::<SquareAddress>().unwrap(), addr(2, 1, 1));
    }

    #[test]
    fn route_table() {
        let rows = [((6, 5, 3), (5, 5), 7, 0.9658), ((3, 3, 2), (3, 4), 4, 0.9427), ((3, 2, 4), (3, 2), 2, 0.8963)];
        for ((i, j, q), near, z, pcr) in rows {
            let plan =
                route_square(addr(2, 1, 1), addr(i, j, q), RouteTarget::Multipartite, AxisConvention::Shifted).unwrap();
            assert_eq!(plan.ghz_nodes[0], (2, 2));
            assert_eq!(*plan.ghz_nodes.last().unwrap(), near);
            assert_eq!(plan.equivalent.z, z);
            assert_eq!(plan.equivalent.a, 4);
            assert_eq!(plan.terminals.len(), 4);
            let p = pcr_chain_fb(plan.equivalent).unwrap().p_cr;
            assert!((p - pcr).abs() < 1e-3);
        }
    }

    #[test]
    fn route_shape() {
        let plan = route_square(addr(2, 1, 1), addr(6, 5, 3), RouteTarget::Bipartite, AxisConvention::Shifted).unwrap();
        let n = &plan.ghz_nodes;
        for w in n.windows(2) {
            assert_eq!((w[0].0 - w[1].0).abs() + (w[0].1 - w[1].1).abs(), 1);
        }
        let mut uniq = n.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), n.len());
        assert_eq!(plan.terminals, vec![0, plan.sites.len() - 1]);
        assert_eq!(plan.local_sites.len(), plan.equivalent.m);
        assert_eq!(plan.equivalent.m, 7 * 2);
        assert!(plan.to_json().contains("ghz_nodes"));
    }

    #[test]
    fn route_reflection() {
        let fwd =
            route_square(addr(2, 1, 1), addr(6, 5, 3), RouteTarget::Multipartite, AxisConvention::Shifted).unwrap();
        let back =
            route_square(addr(6, 5, 3), addr(2, 1, 1), RouteTarget::Multipartite, AxisConvention::Shifted).unwrap();
        assert_eq!(fwd.equivalent, back.equivalent);
    }

    #[test]
    fn route_errors() {
        let a = addr(2, 1, 1);
        assert!(matches!(route_square(a, a, RouteTarget::Bipartite, AxisConvention::Shifted), Err(Error::Routing(_))));
        // both attach to (2,2)
        assert!(matches!(
            route_square(a, addr(2, 1, 2), RouteTarget::Bipartite, AxisConvention::Shifted),
            Err(Error::Routing(_))
        ));
        // each endpoint sits on the other's nearest node
        let r = route_square(addr(0, 0, 1), addr(1, 0, 3), RouteTarget::Bipartite, AxisConvention::Compass);
        assert!(matches!(r, Err(Error::Routing(_))), "{r:?}");
    }

    #[test]
    fn chain_plans() {
        let star = chain_plan(1, 5, &[0, 1]).unwrap();
        assert_eq!(star.equivalent, ChainSpec::new(1, 5, 3).unwrap());
        let fig = chain_plan(5, 4, &[0, 1, 2, 3]).unwrap();
        assert_eq!(fig.local_sites.len(), 8);
        assert!(chain_plan(2, 3, &[0, 1, 2, 3, 4, 5]).is_err());
        assert!(chain_plan(2, 3, &[0]).is_err());
        assert!(chain_plan(2, 3, &[0, 9]).is_err());
        let p = chain_plan_for(3, 3, RouteTarget::Multipartite).unwrap();
        assert_eq!(p.equivalent.parties(), 3);
    }

    #[test]
    fn chain_plan_coherence() {
        let plan = chain_plan(3, 3, &[0, 1, 2, 3, 4]).unwrap();
        let ens = plan.ensemble(WernerParam::new(0.9).unwrap(), LocalSetting::equatorial(0.0)).unwrap();
        let s = ens.live().next().unwrap().1;
        assert!((s.offdiag().norm() - 0.9f64.powi(7) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn triangular() {
        let t = triangular_plan(13, 1).unwrap();
        assert_eq!(t.equivalent.parties(), 53);
        assert!(pcr_chain_fb(t.equivalent).unwrap().superadditive);
        let t = triangular_plan(12, 1).unwrap();
        assert_eq!(t.equivalent.parties(), 49);
        assert!(!pcr_chain_fb(t.equivalent).unwrap().superadditive);
        assert_eq!(triangular_plan(6, 0).unwrap().ghz_nodes.len(), 6);
        assert!(triangular_plan(1, 5).is_err());
    }
}
