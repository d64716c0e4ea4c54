//! Tables behind the `nonlocal-net` command-line tool, with fixed
//! 10-significant-digit formatting for CSV and JSON.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lattice::{chain_plan, nearest_node, route_square, AxisConvention, RoutePlan, RouteTarget, SquareAddress};
use crate::measurement::LocalSetting;
use crate::optimizer::{analytic_settings, evaluate, numeric_threshold, Target};
use crate::oracle::{oracle_lnl, OracleConfig, Protocol};
use crate::thresholds::{
    min_coordination_superadditive, min_nodes_superadditive, pcr_chain_chsh, pcr_chain_fb, pcr_chain_mbk,
    pcr_star_chsh, pcr_star_fb, pcr_star_mbk, pcr_star_mbk_noncollab, ChainSpec, ThresholdResult,
};
use crate::xstate::WernerParam;
use crate::{bell, Inequality};

pub const SIG_DIGITS: usize = 10;
pub const VALIDATION_TOL: f64 = 1e-9;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

/// Process exit status for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Capacity { .. } => EXIT_CAPACITY,
        _ => EXIT_USAGE,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::domain(format!("unknown format `{other}`"))),
        }
    }
}

/// `x` with 10 significant digits (round-half-even on the exact binary
/// value), trailing zeros dropped, scientific notation outside `[1e-5, 1e10)`.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let neg = mant.starts_with('-');
    let digits: String = mant.chars().filter(char::is_ascii_digit).collect();
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if !(-5..10).contains(&exp) {
        let d = digits.trim_end_matches('0');
        out.push_str(&d[..1]);
        if d.len() > 1 {
            out.push('.');
            out.push_str(&d[1..]);
        }
        let _ = write!(out, "e{exp}");
        return out;
    }
    let (int, frac) = if exp >= 0 {
        let k = exp as usize + 1;
        (digits[..k].to_string(), digits[k..].to_string())
    } else {
        ("0".to_string(), "0".repeat((-exp - 1) as usize) + &digits)
    };
    out.push_str(&int);
    let frac = frac.trim_end_matches('0');
    if !frac.is_empty() {
        out.push('.');
        out.push_str(frac);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => fmt_sig(*v),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) if v.is_finite() => fmt_sig(*v),
            Cell::Num(_) | Cell::Empty => "null".into(),
            Cell::Text(s) => serde_json::to_string(s).expect("string serializes"),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    /// Array of row objects.
    pub fn to_json(&self) -> String {
        let mut out = String::from("[\n");
        for (k, r) in self.rows.iter().enumerate() {
            let fields: Vec<String> = self
                .columns
                .iter()
                .zip(r)
                .map(|(c, v)| format!("{}: {}", serde_json::to_string(c).expect("serializes"), v.json()))
                .collect();
            let _ = write!(out, "  {{{}}}", fields.join(", "));
            out.push_str(if k + 1 < self.rows.len() { ",\n" } else { "\n" });
        }
        out.push(']');
        out.push('\n');
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Parses `3`, `3,5,8` or an inclusive range `3..10` (and mixtures).
pub fn parse_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || Error::domain(format!("bad integer list item `{part}`"));
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.parse().map_err(|_| bad())?;
            let b: usize = b.trim_start_matches('=').parse().map_err(|_| bad())?;
            if b < a {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(Error::domain("empty integer list"));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkKind {
    Star,
    Chain,
}

impl std::str::FromStr for NetworkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "star" => Ok(NetworkKind::Star),
            "chain" => Ok(NetworkKind::Chain),
            other => Err(Error::domain(format!("unknown network `{other}`"))),
        }
    }
}

/// Grid for the `threshold` command. Unset lists fall back to the
/// inequality's default.
#[derive(Debug, Clone, Default)]
pub struct ThresholdRequest {
    pub n: Vec<usize>,
    pub z: Vec<usize>,
    pub a: Vec<usize>,
    pub m: Option<Vec<usize>>,
    pub noncollab: bool,
}

const THRESHOLD_COLUMNS: [&str; 10] =
    ["network", "inequality", "n", "z", "a", "m", "parties", "p_cr", "superadditive", "variant"];

fn threshold_row(r: &ThresholdResult, n: Option<usize>, spec: Option<ChainSpec>, m: usize, variant: &str) -> Vec<Cell> {
    let parties = match (n, spec) {
        (Some(n), _) => n - m,
        (_, Some(s)) => s.parties(),
        _ => 0,
    };
    vec![
        if n.is_some() { "star".into() } else { "chain".into() },
        r.inequality.name().into(),
        n.into(),
        spec.map(|s| s.z).into(),
        spec.map(|s| s.a).into(),
        m.into(),
        parties.into(),
        r.p_cr.into(),
        r.superadditive.into(),
        variant.into(),
    ]
}

/// One row per grid point, in the order the lists were given.
pub fn threshold_table(network: NetworkKind, inequality: Inequality, req: &ThresholdRequest) -> Result<Table> {
    let mut t = Table::new(&THRESHOLD_COLUMNS);
    match network {
        NetworkKind::Star => {
            if req.n.is_empty() {
                return Err(Error::domain("star thresholds need --n"));
            }
            for &n in &req.n {
                match inequality {
                    Inequality::Chsh => {
                        let r = pcr_star_chsh(n)?;
                        t.push(threshold_row(&r, Some(n), None, n - 2, "collaborative"));
                    }
                    Inequality::Mbk if req.noncollab => {
                        let r = pcr_star_mbk_noncollab(n)?;
                        t.push(threshold_row(&r, Some(n), None, 0, "noncollaborative"));
                    }
                    Inequality::Mbk | Inequality::Fb => {
                        for &m in req.m.as_deref().unwrap_or(&[0]) {
                            let r =
                                if inequality == Inequality::Mbk { pcr_star_mbk(n, m)? } else { pcr_star_fb(n, m)? };
                            let variant = if m == 0 { "unmeasured" } else { "collaborative" };
                            t.push(threshold_row(&r, Some(n), None, m, variant));
                        }
                    }
                }
            }
        }
        NetworkKind::Chain => {
            if req.z.is_empty() || req.a.is_empty() {
                return Err(Error::domain("chain thresholds need --z and --a"));
            }
            for &z in &req.z {
                for &a in &req.a {
                    match inequality {
                        Inequality::Chsh => {
                            let r = pcr_chain_chsh(z, a)?;
                            let s = ChainSpec::bipartite(z, a)?;
                            t.push(threshold_row(&r, None, Some(s), s.m, "bipartite"));
                        }
                        Inequality::Mbk => {
                            let r = pcr_chain_mbk(z, a)?;
                            let s = ChainSpec::a_party(z, a)?;
                            t.push(threshold_row(&r, None, Some(s), s.m, "a-party"));
                        }
                        Inequality::Fb => {
                            let ms = match &req.m {
                                Some(ms) => ms.clone(),
                                None => vec![ChainSpec::a_party(z, a)?.m],
                            };
                            for m in ms {
                                let s = ChainSpec::new(z, a, m)?;
                                let r = pcr_chain_fb(s)?;
                                let variant = if m == 0 { "unmeasured" } else { "collaborative" };
                                t.push(threshold_row(&r, None, Some(s), m, variant));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(t)
}

pub fn min_coordination_table(zs: &[usize]) -> Result<Table> {
    let mut t = Table::new(&["z", "a_min", "p_cr"]);
    for &z in zs {
        let a = min_coordination_superadditive(z)?;
        let p = crate::thresholds::pcr_chain_fb_unmeasured(z, a)?.p_cr;
        t.push(vec![z.into(), a.into(), p.into()]);
    }
    Ok(t)
}

pub fn min_nodes_table(a_list: &[usize], m_list: &[usize]) -> Result<Table> {
    let mut t = Table::new(&["a", "m", "z_min", "parties", "p_cr"]);
    for &a in a_list {
        for &m in m_list {
            let z = min_nodes_superadditive(a, m)?;
            let s = ChainSpec::new(z, a, m)?;
            t.push(vec![a.into(), m.into(), z.into(), s.parties().into(), pcr_chain_fb(s)?.p_cr.into()]);
        }
    }
    Ok(t)
}

/// Closed-form thresholds for a plan's equivalent chain. CHSH applies to
/// two-party outputs and MBK to the `a`-party output.
pub fn plan_thresholds(plan: &RoutePlan) -> Result<Vec<(Inequality, f64, bool)>> {
    let s = plan.equivalent;
    let mut out = Vec::new();
    if s.parties() == 2 {
        let r = pcr_chain_chsh(s.z, s.a)?;
        out.push((Inequality::Chsh, r.p_cr, r.superadditive));
    }
    if s == ChainSpec::a_party(s.z, s.a)? {
        let r = pcr_chain_mbk(s.z, s.a)?;
        out.push((Inequality::Mbk, r.p_cr, r.superadditive));
    }
    let r = pcr_chain_fb(s)?;
    out.push((Inequality::Fb, r.p_cr, r.superadditive));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteReport {
    pub from: SquareAddress,
    pub to: SquareAddress,
    pub nearest: ((i64, i64), (i64, i64)),
    pub plan: RoutePlan,
    pub thresholds: Table,
}

impl RouteReport {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.thresholds.to_csv(),
            Format::Json => format!(
                "{{\n\"plan\": {},\n\"thresholds\": {}}}\n",
                self.plan.to_json(),
                self.thresholds.to_json().trim_end()
            ),
        }
    }
}

fn node_text(n: (i64, i64)) -> Cell {
    Cell::Text(format!("({},{})", n.0, n.1))
}

pub fn route_report(
    from: SquareAddress,
    to: SquareAddress,
    target: RouteTarget,
    convention: AxisConvention,
) -> Result<RouteReport> {
    let plan = route_square(from, to, target, convention)?;
    let nearest = (nearest_node(from, convention)?, nearest_node(to, convention)?);
    let mut t = Table::new(&[
        "from",
        "to",
        "node_from",
        "node_to",
        "z",
        "a",
        "m",
        "parties",
        "inequality",
        "p_cr",
        "superadditive",
    ]);
    let s = plan.equivalent;
    for (ineq, p, sup) in plan_thresholds(&plan)? {
        t.push(vec![
            Cell::Text(format!("({},{},{})", from.i, from.j, from.q)),
            Cell::Text(format!("({},{},{})", to.i, to.j, to.q)),
            node_text(nearest.0),
            node_text(nearest.1),
            s.z.into(),
            s.a.into(),
            s.m.into(),
            s.parties().into(),
            ineq.name().into(),
            p.into(),
            sup.into(),
        ]);
    }
    Ok(RouteReport { from, to, nearest, plan, thresholds: t })
}

/// Chain plan evaluated at `p`: the localizable nonlocality at the analytic
/// settings, the closed-form threshold where one applies, and the threshold
/// found by bisecting the X-state evaluation.
pub fn chain_table(z: usize, a: usize, terminals: &[usize], p: WernerParam) -> Result<(RoutePlan, Table)> {
    let plan = chain_plan(z, a, terminals)?;
    let closed = plan_thresholds(&plan)?;
    let target = Target::Route(plan.clone());
    let s = plan.equivalent;
    let mut t = Table::new(&["z", "a", "m", "parties", "inequality", "p", "lnl", "p_cr", "p_cr_numeric"]);
    for ineq in Inequality::ALL {
        if ineq == Inequality::Chsh && s.parties() != 2 {
            continue;
        }
        let value = evaluate(&target, p, ineq, &analytic_settings(&target, ineq))?;
        let pcr = closed.iter().find(|c| c.0 == ineq).map(|c| c.1);
        let numeric = numeric_threshold(&target, ineq).ok();
        t.push(vec![
            s.z.into(),
            s.a.into(),
            s.m.into(),
            s.parties().into(),
            ineq.name().into(),
            p.get().into(),
            value.into(),
            pcr.into(),
            numeric.into(),
        ]);
    }
    Ok((plan, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Star,
    Chain,
    All,
}

impl std::str::FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "star" => Ok(Scope::Star),
            "chain" => Ok(Scope::Chain),
            "all" => Ok(Scope::All),
            other => Err(Error::domain(format!("unknown scope `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub instances: usize,
    pub skipped: usize,
    pub max_deviation: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.instances > 0 && self.max_deviation <= VALIDATION_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect()
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["check", "instances", "skipped", "max_deviation", "pass"]);
        for c in &self.checks {
            t.push(vec![
                c.name.as_str().into(),
                c.instances.into(),
                c.skipped.into(),
                c.max_deviation.into(),
                c.passed().into(),
            ]);
        }
        t
    }
}

pub const VALIDATION_PS: [f64; 3] = [0.5, 0.8, 0.95];

fn deviation(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// X-state evaluation with the output coherence optionally scaled, used to
/// check that the suite notices a wrong off-diagonal.
fn xstate_lnl(
    target: &Target,
    p: WernerParam,
    ineq: Inequality,
    settings: &[LocalSetting],
    corrupt: Option<f64>,
) -> Result<f64> {
    let (s, sites) = target.base(p)?;
    let s = match corrupt {
        Some(k) => s.with_offdiag(s.offdiag() * k),
        None => s,
    };
    bell::lnl(&crate::measurement::measure_all(&s, &sites, settings)?, ineq)
}

/// Oracle-equivalence suite: every star with `2N ≤ max_qubits`, `N ≤ 5`,
/// `m ≤ N − 2` and every chain whose dense simulation fits, at
/// `p ∈ {0.5, 0.8, 0.95}`, equatorial settings with the optimal phase.
pub fn validate(scope: Scope, cfg: &OracleConfig, corrupt_offdiag: Option<f64>) -> Result<ValidationReport> {
    let mut checks = Vec::new();
    if matches!(scope, Scope::Star | Scope::All) {
        for ineq in Inequality::ALL {
            let mut c =
                CheckResult { name: format!("star-{}", ineq.name()), instances: 0, skipped: 0, max_deviation: 0.0 };
            for n in 2..=5 {
                for m in 0..=n - 2 {
                    if ineq == Inequality::Chsh && n - m != 2 {
                        continue;
                    }
                    if 2 * n > cfg.max_qubits {
                        c.skipped += VALIDATION_PS.len();
                        continue;
                    }
                    let target = Target::Star { n, m };
                    let settings = analytic_settings(&target, ineq);
                    let proto = Protocol::Star { n, sites: (0..m).collect() };
                    for &p in &VALIDATION_PS {
                        let wp = WernerParam::new(p)?;
                        let x = xstate_lnl(&target, wp, ineq, &settings, corrupt_offdiag)?;
                        let d = oracle_lnl(&proto, wp, ineq, &settings, cfg)?;
                        c.max_deviation = c.max_deviation.max(deviation(x, d));
                        c.instances += 1;
                    }
                }
            }
            checks.push(c);
        }
    }
    if matches!(scope, Scope::Chain | Scope::All) {
        let mut jobs = Vec::new();
        for (k, ineq) in Inequality::ALL.into_iter().enumerate() {
            for z in 1..=4 {
                for a in 3..=6 {
                    let survivors = z * (a - 2) + 2;
                    if survivors > 10 {
                        continue;
                    }
                    let mut term_sets = vec![vec![0, survivors - 1], (0..a.min(survivors)).collect::<Vec<_>>()];
                    term_sets.push((0..survivors).collect());
                    term_sets.dedup();
                    for terms in term_sets {
                        if ineq == Inequality::Chsh && terms.len() != 2 {
                            continue;
                        }
                        let plan = chain_plan(z, a, &terms)?;
                        for &p in &VALIDATION_PS {
                            jobs.push((k, plan.clone(), WernerParam::new(p)?));
                        }
                    }
                }
            }
        }
        // Some(deviation), or None when the oracle is over its cap.
        let run = |(k, plan, wp): &(usize, RoutePlan, WernerParam)| -> Result<Option<f64>> {
            let ineq = Inequality::ALL[*k];
            let target = Target::Route(plan.clone());
            let settings = analytic_settings(&target, ineq);
            let d = match oracle_lnl(&Protocol::Route(plan.clone()), *wp, ineq, &settings, cfg) {
                Ok(v) => v,
                Err(Error::Capacity { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let x = xstate_lnl(&target, *wp, ineq, &settings, corrupt_offdiag)?;
            Ok(Some(deviation(x, d)))
        };
        #[cfg(feature = "parallel")]
        let results: Vec<Result<Option<f64>>> = {
            use rayon::prelude::*;
            jobs.par_iter().map(run).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let results: Vec<Result<Option<f64>>> = jobs.iter().map(run).collect();

        let mut chain: Vec<CheckResult> = Inequality::ALL
            .iter()
            .map(|i| CheckResult { name: format!("chain-{}", i.name()), instances: 0, skipped: 0, max_deviation: 0.0 })
            .collect();
        for ((k, _, _), r) in jobs.iter().zip(results) {
            let c = &mut chain[*k];
            match r? {
                Some(d) => {
                    c.max_deviation = c.max_deviation.max(d);
                    c.instances += 1;
                }
                None => c.skipped += 1,
            }
        }
        checks.extend(chain);
    }
    Ok(ValidationReport { checks })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig4,
    Fig5,
}

impl std::str::FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fig2" => Ok(Figure::Fig2),
            "fig4" => Ok(Figure::Fig4),
            "fig5" => Ok(Figure::Fig5),
            other => Err(Error::domain(format!("unknown figure `{other}` (fig2, fig4, fig5)"))),
        }
    }
}

pub const FIG2_M: [usize; 3] = [0, 1, 2];
pub const FIG2_N: std::ops::RangeInclusive<usize> = 3..=30;
pub const FIG4_Z: usize = 5;
pub const FIG4_A: std::ops::RangeInclusive<usize> = 3..=12;
pub const FIG5_A: usize = 4;
pub const FIG5_Z: std::ops::RangeInclusive<usize> = 1..=20;

/// Threshold curves: star thresholds against `N` (one series per `m`),
/// chain thresholds against `a` at `z = 5`, and against `z` at `a = 4`.
pub fn figure_table(fig: Figure) -> Result<Table> {
    match fig {
        Figure::Fig2 => {
            let mut t = Table::new(&["n", "m", "mbk", "fb"]);
            for m in FIG2_M {
                for n in FIG2_N.filter(|n| n - 2 >= m) {
                    t.push(vec![n.into(), m.into(), pcr_star_mbk(n, m)?.p_cr.into(), pcr_star_fb(n, m)?.p_cr.into()]);
                }
            }
            Ok(t)
        }
        Figure::Fig4 | Figure::Fig5 => {
            let (x, pts): (&str, Vec<(usize, usize)>) = if fig == Figure::Fig4 {
                ("a", FIG4_A.map(|a| (FIG4_Z, a)).collect())
            } else {
                ("z", FIG5_Z.map(|z| (z, FIG5_A)).collect())
            };
            let mut t = Table::new(&[x, "chsh", "mbk", "fb"]);
            for (z, a) in pts {
                let xv = if fig == Figure::Fig4 { a } else { z };
                t.push(vec![
                    xv.into(),
                    pcr_chain_chsh(z, a)?.p_cr.into(),
                    pcr_chain_mbk(z, a)?.p_cr.into(),
                    pcr_chain_fb(ChainSpec::a_party(z, a)?)?.p_cr.into(),
                ]);
            }
            Ok(t)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(0.8693034745123), "0.8693034745");
        assert_eq!(fmt_sig(-12.5), "-12.5");
        assert_eq!(fmt_sig(123456.789012345), "123456.789");
        assert_eq!(fmt_sig(0.000012345678912), "0.00001234567891");
        assert_eq!(fmt_sig(1.5e-9), "1.5e-9");
        assert_eq!(fmt_sig(2.5e12), "2.5e12");
        assert_eq!(fmt_sig(f64::NAN), "nan");
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("3").unwrap(), vec![3]);
        assert_eq!(parse_list("3..5,8").unwrap(), vec![3, 4, 5, 8]);
        assert_eq!(parse_list("1..=2").unwrap(), vec![1, 2]);
        assert!(parse_list("5..3").is_err());
        assert!(parse_list("x").is_err());
        assert!(parse_list("").is_err());
    }

    #[test]
    fn csv_and_json_agree() {
        let t = threshold_table(
            NetworkKind::Star,
            Inequality::Fb,
            &ThresholdRequest { n: vec![6, 7], ..Default::default() },
        )
        .unwrap();
        let csv = t.to_csv();
        let json = t.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let rows = v.as_array().unwrap();
        for (line, row) in csv.lines().skip(1).zip(rows) {
            let p = line.split(',').nth(7).unwrap();
            assert_eq!(p, row["p_cr"].to_string());
        }
        assert!(csv.contains("0.7028852149"));
    }

    #[test]
    fn threshold_grid() {
        let t = threshold_table(
            NetworkKind::Chain,
            Inequality::Fb,
            &ThresholdRequest { z: vec![7], a: vec![4], ..Default::default() },
        )
        .unwrap();
        let Cell::Num(p) = t.rows[0][7] else { panic!() };
        assert!((p - 0.9658).abs() < 1e-3);
        assert!(threshold_table(NetworkKind::Star, Inequality::Chsh, &ThresholdRequest::default()).is_err());
    }

    #[test]
    fn route_report_json_parses() {
        let r = route_report(
            "2,1,1".parse().unwrap(),
            "3,3,2".parse().unwrap(),
            RouteTarget::Multipartite,
            AxisConvention::Shifted,
        )
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.render(Format::Json)).unwrap();
        assert_eq!(v["plan"]["equivalent"]["z"], 4);
        assert!(r.render(Format::Csv).contains("(3,4)"));
    }

    #[test]
    fn validation_catches_corruption() {
        let cfg = OracleConfig::new(8).unwrap();
        let ok = validate(Scope::Star, &cfg, None).unwrap();
        assert!(ok.passed(), "{:?}", ok.table().to_csv());
        let bad = validate(Scope::Star, &cfg, Some(0.9)).unwrap();
        assert!(!bad.passed());
        assert!(bad.failing().contains(&"star-mbk"));
    }

    #[test]
    fn figures() {
        for f in [Figure::Fig2, Figure::Fig4, Figure::Fig5] {
            assert!(!figure_table(f).unwrap().rows.is_empty());
        }
        assert!("fig3".parse::<Figure>().is_err());
    }

    #[test]
    fn chain_rows() {
        let (_, t) = chain_table(2, 3, &[0, 3], WernerParam::new(0.95).unwrap()).unwrap();
        assert_eq!(t.rows.len(), 3);
    }
}
