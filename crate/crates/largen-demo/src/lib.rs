//! Browser bindings: kernel profiles, an exact free-field sample and the
//! leading graph expansion. Each binding returns JSON or a flat array for the
//! page in `www/`.

use largen::ibp;
use largen::kernels::KernelSet;
use largen::lattice::LatticeSpec;
use largen::oracle::{f_k_oracle, Point};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest grid exponent the page may request.
pub const MAX_DEMO_EXPONENT: u32 = 7;

fn kernels(grid_exponent: u32, mass: f64) -> Result<KernelSet, String> {
    if grid_exponent > MAX_DEMO_EXPONENT {
        return Err(format!("grid exponent {grid_exponent} exceeds {MAX_DEMO_EXPONENT}"));
    }
    Ok(KernelSet::new(LatticeSpec::new(grid_exponent, mass).map_err(|e| e.to_string())?))
}

#[derive(Serialize)]
pub struct KernelProfile {
    pub a_eps: f64,
    pub c1: f64,
    /// Offsets along the first axis, `0..=n/2`.
    pub x: Vec<i64>,
    pub c: Vec<f64>,
    pub two_c_sq: Vec<f64>,
    pub g: Vec<f64>,
}

pub fn kernel_profile_data(grid_exponent: u32, mass: f64) -> Result<KernelProfile, String> {
    let k = kernels(grid_exponent, mass)?;
    let x: Vec<i64> = (0..=(k.spec.side() / 2) as i64).collect();
    Ok(KernelProfile {
        a_eps: k.a_eps,
        c1: k.c1,
        c: x.iter().map(|&i| k.c.at(i, 0)).collect(),
        two_c_sq: x.iter().map(|&i| 2.0 * k.c_sq.at(i, 0)).collect(),
        g: x.iter().map(|&i| k.g.at(i, 0)).collect(),
        x,
    })
}

pub fn free_field_data(grid_exponent: u32, mass: f64, seed: u64) -> Result<Vec<f64>, String> {
    let k = kernels(grid_exponent, mass)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(largen::dynamics::sample_gff(k.spec, &mut rng).values)
}

#[derive(Serialize)]
pub struct TermRow {
    pub power: u32,
    pub coefficient: String,
    pub signature: String,
    pub value: f64,
}

#[derive(Serialize)]
pub struct ExpansionTable {
    pub points: Vec<Point>,
    pub terms: Vec<TermRow>,
    pub total: f64,
    /// Pairing sum of `G` for even `k`.
    pub pairing: Option<f64>,
}

/// Leading closed terms of the `k`-point function at the points
/// `(0,0), (1,0), …`, evaluated on the given lattice.
pub fn expansion_table_data(k: usize, grid_exponent: u32, mass: f64) -> Result<ExpansionTable, String> {
    let ks = kernels(grid_exponent, mass)?;
    let r = ibp::expand(k, 0).map_err(|e| e.to_string())?;
    let points: Vec<Point> = (0..k as i64).map(|i| (i, 0)).collect();
    let mut terms = Vec::new();
    for (&power, list) in &r.closed_terms {
        for t in list {
            let value = ibp::evaluate(t, &ks, &points).map_err(|e| e.to_string())?;
            terms.push(TermRow { power, coefficient: t.coefficient.to_string(), signature: t.signature(), value });
        }
    }
    let total = terms.iter().map(|t| t.value).sum();
    let pairing = (k % 2 == 0).then(|| f_k_oracle(&points, &ks.g));
    Ok(ExpansionTable { points, terms, total, pairing })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string())).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn kernel_profile(grid_exponent: u32, mass: f64) -> Result<String, JsValue> {
    to_json(kernel_profile_data(grid_exponent, mass))
}

#[wasm_bindgen]
pub fn free_field(grid_exponent: u32, mass: f64, seed: u64) -> Result<Vec<f64>, JsValue> {
    free_field_data(grid_exponent, mass, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn expansion_table(k: usize, grid_exponent: u32, mass: f64) -> Result<String, JsValue> {
    to_json(expansion_table_data(k, grid_exponent, mass))
}
