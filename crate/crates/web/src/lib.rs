//! Browser bindings. Each export takes plain text or numbers and returns a
//! JSON string, so the page needs no glue beyond `JSON.parse`.

use permprof::combinat::binomial;
use permprof::montecarlo::{fit_scaling_exponent, run_scaling, McConfig};
use permprof::perm::{perm_of_points, profile, sample_uniform, PlanePoint};
use permprof::rep::build_u;
use permprof::stats::{PairedSample, Statistic};
use permprof::{Permutation, QNum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest `C(n,5)` evaluated in the page; keeps a click under a second.
const MAX_FIVE_SUBSETS: u128 = 2_000_000;
const MAX_SAMPLES: usize = 50_000;

fn stat_value(stat: Statistic, pi: &Permutation) -> Value {
    let n = pi.len();
    if n < stat.k() {
        return Value::Null;
    }
    if stat.k() == 5 && binomial(n, 5).unwrap_or(u128::MAX) > MAX_FIVE_SUBSETS {
        return json!({ "skipped": "n too large for the page" });
    }
    match stat.evaluate(pi) {
        Ok(q) => json!({ "exact": q.to_string(), "approx": q.to_f64() }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

/// Profile, block decomposition and rank statistics of one permutation.
pub fn analyze(pi: &Permutation) -> Result<Value, String> {
    let n = pi.len();
    let k = n.min(3);
    let prof = profile(pi, k).map_err(|e| e.to_string())?;
    let u = build_u(k).map_err(|e| e.to_string())?;
    let dens: Vec<QNum> = prof.densities().into_iter().map(QNum::from).collect();
    let coords = u.coordinates(&dens);
    let mut blocks = vec![0.0f64; k];
    for (c, x) in coords.iter().enumerate() {
        let r = u.block_of_column(c);
        // Normalized squared energy of block r.
        blocks[r] += x.to_f64().powi(2) * (n as f64).powi(r as i32);
    }
    let patterns: Vec<Value> = prof
        .counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let p = Permutation::from_lex_index(k, i).expect("lex index below k!");
            let name: String = p.images().iter().map(|v| v.to_string()).collect();
            json!({ "pattern": name, "count": c, "density": prof.density(i).to_string() })
        })
        .collect();
    let stats: serde_json::Map<String, Value> = Statistic::ALL
        .iter()
        .map(|&s| (s.name().to_string(), stat_value(s, pi)))
        .collect();
    Ok(json!({
        "n": n,
        "perm": pi.images(),
        "k": k,
        "patterns": patterns,
        "block_energy": blocks,
        "statistics": stats,
    }))
}

pub fn analyze_permutation_json(text: &str) -> Result<String, String> {
    let pi: Permutation = text.parse().map_err(|e: permprof::Error| e.to_string())?;
    Ok(analyze(&pi)?.to_string())
}

/// Points as `y,z` lines; a header line is allowed.
pub fn analyze_points_json(text: &str) -> Result<String, String> {
    let sample = PairedSample::from_csv(text.as_bytes(), b',').map_err(|e| e.to_string())?;
    let points: Vec<PlanePoint> = sample
        .rows
        .iter()
        .map(|&(y, z)| PlanePoint::new(y, z))
        .collect();
    let pi = perm_of_points(&points).map_err(|e| e.to_string())?;
    Ok(analyze(&pi)?.to_string())
}

pub fn random_permutation_json(n: usize, seed: u64) -> Result<String, String> {
    let pi = sample_uniform(n, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(|e| e.to_string())?;
    let mut v = analyze(&pi)?;
    v["seed"] = json!(seed);
    Ok(v.to_string())
}

/// Second-moment scaling of the last basis column of block `r` in `U_k`.
pub fn mc_scaling_json(
    k: usize,
    block: usize,
    grid: &str,
    samples: usize,
    seed: u64,
) -> Result<String, String> {
    if samples > MAX_SAMPLES {
        return Err(format!("at most {MAX_SAMPLES} samples in the page"));
    }
    let n_grid: Vec<usize> = grid
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| format!("bad size {t:?}")))
        .collect::<Result<_, _>>()?;
    let u = build_u(k).map_err(|e| e.to_string())?;
    if block >= k {
        return Err(format!("block must be below k = {k}"));
    }
    let c = *u.block(block).last().expect("blocks are non-empty");
    let v: Vec<f64> = u.column(c).iter().map(QNum::to_f64).collect();
    let mut report =
        run_scaling(&McConfig::new(k, v, n_grid, samples, seed)).map_err(|e| e.to_string())?;
    report.target_exponent = Some(-(block as f64));
    let fit = fit_scaling_exponent(&report).map_err(|e| e.to_string());
    Ok(json!({
        "k": k,
        "block": block,
        "column": u.labels()[c].to_string(),
        "seed": seed,
        "points": report.points,
        "target": -(block as f64),
        "fit": fit.as_ref().ok(),
        "fit_error": fit.err(),
    })
    .to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = analyzePermutation)]
pub fn analyze_permutation(text: &str) -> Result<String, JsError> {
    js(analyze_permutation_json(text))
}

#[wasm_bindgen(js_name = analyzePoints)]
pub fn analyze_points(text: &str) -> Result<String, JsError> {
    js(analyze_points_json(text))
}

#[wasm_bindgen(js_name = randomPermutation)]
pub fn random_permutation(n: usize, seed: u64) -> Result<String, JsError> {
    js(random_permutation_json(n, seed))
}

#[wasm_bindgen(js_name = mcScaling)]
pub fn mc_scaling(
    k: usize,
    block: usize,
    grid: &str,
    samples: usize,
    seed: u64,
) -> Result<String, JsError> {
    js(mc_scaling_json(k, block, grid, samples, seed))
}
