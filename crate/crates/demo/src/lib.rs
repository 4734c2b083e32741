//! Browser bindings. Each export takes plain arguments and returns a JSON
//! string; the `*_json` functions behind them are usable natively.

use metrize::audit::{check_generalized_triangle, check_nu_generalized, check_triangle, min_b_coefficient};
use metrize::chain::{chain_metric, snowflake_exponent};
use metrize::fixed_point::{banach_iterate_coord, geometric_decay_check, CoordMap, DistanceRule, Orbit};
use metrize::gallery::{
    gen_2gen_slow, gen_branciari4, gen_example_387, gen_example_399, gen_random, gen_square_line, RandomKind,
};
use metrize::{ClaimedClass, DistanceSpace, Exponent, Scalar};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Chain metric of the squared grid `{k/n}` with exponent `p`.
pub fn square_line_collapse_json(n: u32, p: &str) -> Result<String, String> {
    if n > 128 {
        return Err(format!("n = {n} is too large for the demo (max 128)"));
    }
    let p: Exponent = p.parse().map_err(err)?;
    let space = gen_square_line(n).map_err(err)?;
    let d = chain_metric(&space, &p).map_err(err)?;
    let (i0, i1) = (0, space.len() - 1);
    let row: Vec<Value> = (0..space.len())
        .map(|j| json!({ "x": space.label(j), "D": space.get(0, j).to_f64(), "d": d.get(0, j).to_f64() }))
        .collect();
    let out = json!({
        "n": n,
        "p": p,
        "d01": d.get(i0, i1),
        "d01_f64": d.get(i0, i1).to_f64(),
        "is_metric": d.is_metric,
        "sandwich": d.sandwich.verdict,
        "notes": d.notes,
        "from_zero": row,
    });
    Ok(out.to_string())
}

fn gallery_space(name: &str, n: u32, seed: u64) -> Result<DistanceSpace, String> {
    match name {
        "square-line" => gen_square_line(n),
        "example-399" => gen_example_399(n),
        "example-387" => gen_example_387(n),
        "branciari4" => Ok(gen_branciari4()),
        "2gen-slow" => gen_2gen_slow(n),
        "random-metric" => gen_random(&RandomKind::Metric, n as usize, seed),
        "random-bmetric" => gen_random(&RandomKind::BMetric(Exponent::ratio(2, 1)), n as usize, seed),
        "random-twogen" => gen_random(&RandomKind::TwoGen, n as usize, seed),
        other => return Err(format!("unknown instance `{other}`")),
    }
    .map_err(err)
}

/// Audits a gallery instance and induces its chain metric with the snowflake exponent.
pub fn gallery_pipeline_json(name: &str, n: u32, seed: u64) -> Result<String, String> {
    if n > 64 {
        return Err(format!("n = {n} is too large for the demo (max 64)"));
    }
    let space = gallery_space(name, n, seed)?;
    let k_min = min_b_coefficient(&space).map_err(err)?.k_min;
    let k = match space.claimed_class() {
        ClaimedClass::BMetric(c) if c.exact_cmp(&k_min).is_ge() => c.clone(),
        _ => k_min.clone(),
    };
    let p = snowflake_exponent(&k).map_err(err)?;
    let d = chain_metric(&space, &p).map_err(err)?;
    let nu = if space.len() <= 24 { Some(check_nu_generalized(&space, 2).map_err(err)?.passed()) } else { None };
    let out = json!({
        "name": name,
        "points": space.len(),
        "claimed_class": space.claimed_class(),
        "audits": {
            "triangle": check_triangle(&space).passed(),
            "iv": check_generalized_triangle(&space, false).passed(),
            "nu2": nu,
            "k_min": k_min,
        },
        "k_used": k,
        "exponent": p,
        "induced": {
            "is_metric": d.is_metric,
            "degenerate_pairs": d.degenerate_pairs.len(),
            "sandwich": d.sandwich.verdict,
            "lower_factor": d.sandwich.lower_factor,
            "notes": d.notes,
        },
        "labels": space.labels(),
        "D": space.rows().iter().map(|r| r.iter().map(Scalar::to_f64).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "d": (0..d.n()).map(|i| (0..d.n()).map(|j| d.get(i, j).to_f64()).collect::<Vec<_>>()).collect::<Vec<_>>(),
    });
    Ok(out.to_string())
}

/// Banach iteration of `x -> λx + c` on `[0,1]` under `|x-y|^q`.
pub fn fixed_point_trace_json(lambda: &str, c: &str, x0: &str, q: u32, tol: &str) -> Result<String, String> {
    let lambda: Scalar = lambda.parse().map_err(err)?;
    let c: Scalar = c.parse().map_err(err)?;
    let x0: Scalar = x0.parse().map_err(err)?;
    let tol: Scalar = tol.parse().map_err(err)?;
    let map = CoordMap::affine(lambda, c, Scalar::zero(), Scalar::one()).map_err(err)?;
    let rule = DistanceRule::pow(Exponent::ratio(q as i64, 1)).map_err(err)?;
    let trace = banach_iterate_coord(&map, &rule, &x0, &tol, 500).map_err(err)?;
    let decay = geometric_decay_check(&trace, &trace.lambda_hat, 1e-12);
    let Orbit::Coord(xs) = &trace.iterates else { unreachable!("coordinate iteration") };
    let out = json!({
        "iterates": xs.iter().map(Scalar::to_f64).collect::<Vec<_>>(),
        "steps": trace.step_dists.iter().map(Scalar::to_f64).collect::<Vec<_>>(),
        "lambda_hat": trace.lambda_hat.to_f64(),
        "stop_reason": trace.stop_reason,
        "decay_pass": decay.pass,
        "notes": trace.notes,
        "assumptions": trace.assumptions,
    });
    Ok(out.to_string())
}

#[wasm_bindgen]
pub fn square_line_collapse(n: u32, p: &str) -> Result<String, JsError> {
    square_line_collapse_json(n, p).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn gallery_pipeline(name: &str, n: u32, seed: u64) -> Result<String, JsError> {
    gallery_pipeline_json(name, n, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fixed_point_trace(lambda: &str, c: &str, x0: &str, q: u32, tol: &str) -> Result<String, JsError> {
    fixed_point_trace_json(lambda, c, x0, q, tol).map_err(|e| JsError::new(&e))
}
