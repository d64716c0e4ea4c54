//! Browser bindings: threshold curves, a star noise scan and square-lattice
//! routing, each returning JSON text.

use nonlocal_net::cli::{figure_table, route_report, Format};
use nonlocal_net::optimizer::{analytic_settings, evaluate, Target};
use nonlocal_net::thresholds::{pcr_star_chsh, pcr_star_fb, pcr_star_mbk};
use nonlocal_net::xstate::WernerParam;
use nonlocal_net::{Error, Inequality};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js(e: Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Figure dataset (`fig2`, `fig4`, `fig5`) as an array of row objects.
pub fn figure_json(id: &str) -> Result<String, Error> {
    Ok(figure_table(id.parse()?)?.to_json())
}

/// Localizable nonlocality of an `n`-star with `m` measuring parties on a
/// uniform grid of `points` values of `p`, at the analytic settings.
pub fn star_scan_json(n: usize, m: usize, ineq: &str, points: usize) -> Result<String, Error> {
    let ineq: Inequality = ineq.parse()?;
    if points < 2 {
        return Err(Error::Domain("need at least 2 points".into()));
    }
    if ineq == Inequality::Chsh && m + 2 != n {
        return Err(Error::Domain(format!("CHSH needs m = N − 2 = {}", n.saturating_sub(2))));
    }
    let target = Target::Star { n, m };
    let settings = analytic_settings(&target, ineq);
    let p_cr = match ineq {
        Inequality::Chsh => pcr_star_chsh(n)?,
        Inequality::Mbk => pcr_star_mbk(n, m)?,
        Inequality::Fb => pcr_star_fb(n, m)?,
    }
    .p_cr;
    let mut rows = Vec::with_capacity(points);
    for k in 0..points {
        let p = k as f64 / (points - 1) as f64;
        let v = evaluate(&target, WernerParam::new(p)?, ineq, &settings)?;
        rows.push(json!({ "p": p, "lnl": v }));
    }
    Ok(json!({ "n": n, "m": m, "inequality": ineq.name(), "p_cr": p_cr, "points": rows }).to_string())
}

/// Route between two `i,j,q` addresses; plan plus thresholds.
pub fn route_json(from: &str, to: &str, target: &str, convention: &str) -> Result<String, Error> {
    let report = route_report(from.parse()?, to.parse()?, target.parse()?, convention.parse()?)?;
    Ok(report.render(Format::Json))
}

#[wasm_bindgen]
pub fn figure(id: &str) -> Result<String, JsValue> {
    figure_json(id).map_err(js)
}

#[wasm_bindgen]
pub fn star_scan(n: usize, m: usize, ineq: &str, points: usize) -> Result<String, JsValue> {
    star_scan_json(n, m, ineq, points).map_err(js)
}

#[wasm_bindgen]
pub fn route(from: &str, to: &str, target: &str, convention: &str) -> Result<String, JsValue> {
    route_json(from, to, target, convention).map_err(js)
}
