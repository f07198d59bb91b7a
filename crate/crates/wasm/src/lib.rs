//! Browser demo bindings: three interactive operations over the core
//! library, each taking parameters and returning a JSON string for the
//! static page in `www/` to plot. The functions are plain Rust and run
//! natively in tests; `wasm-bindgen` exposes them to JS when built for
//! `wasm32-unknown-unknown`.

use serde_json::json;
use wasm_bindgen::prelude::wasm_bindgen;

use meanaction_core::action::{ActionContext, QuadratureSettings};
use meanaction_core::ech::{n_sequence, w_sequence, SlopeData};
use meanaction_core::map::{AnnulusPoint, TAU};
use meanaction_core::mapspec::MapSpec;
use meanaction_core::orbits::{find_periodic_orbits, SearchConfig};

fn err_json(msg: impl std::fmt::Display) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

/// Flux, Calabi invariant, boundary data, and a sampled action profile
/// f(x, 0) for plotting.
#[wasm_bindgen]
pub fn analyze_map(mapspec_json: &str, offset: i32, samples: usize) -> String {
    let spec = match MapSpec::from_json(mapspec_json) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let map = match spec.to_map() {
        Ok(m) => m,
        Err(e) => return err_json(e),
    };
    let settings = QuadratureSettings {
        line_order: 16,
        area_grid: (192, 32),
        tol: 1e-8,
    };
    let ctx = ActionContext::with_settings(&map, offset as i64, settings);
    let flux = match ctx.flux() {
        Ok(f) => f,
        Err(e) => return err_json(e),
    };
    let calabi = match ctx.calabi() {
        Ok(v) => v,
        Err(e) => return err_json(e),
    };
    let n = samples.clamp(16, 1024);
    let mut xs = Vec::with_capacity(n + 1);
    let mut fs = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let x = -1.0 + 2.0 * i as f64 / n as f64;
        match ctx.action_at(AnnulusPoint { x, y: 0.0 }) {
            Ok(f) => {
                xs.push(x);
                fs.push(f);
            }
            Err(e) => return err_json(e),
        }
    }
    json!({
        "y_plus": map.y_plus,
        "y_minus": map.y_minus,
        "flux": flux,
        "calabi": calabi,
        "f_boundary": { "plus": map.y_plus + offset as f64,
                        "minus": -map.y_minus + flux + offset as f64 },
        "admissible": map.admissible,
        "profile_x": xs,
        "profile_f": fs,
    })
    .to_string()
}

/// Periodic orbits up to `qmax`: scatter points with period, winding,
/// and mean action, plus the Calabi level for comparison.
#[wasm_bindgen]
pub fn search_orbits(mapspec_json: &str, qmax: usize, seeds: usize) -> String {
    let spec = match MapSpec::from_json(mapspec_json) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let map = match spec.to_map() {
        Ok(m) => m,
        Err(e) => return err_json(e),
    };
    let settings = QuadratureSettings {
        line_order: 16,
        area_grid: (128, 16),
        tol: 1e-8,
    };
    let ctx = ActionContext::with_settings(&map, 0, settings);
    let n = seeds.clamp(8, 64);
    let cfg = SearchConfig {
        q_max: qmax.clamp(1, 12),
        seed_grid: (n, n),
        ..SearchConfig::default()
    };
    let orbits = match find_periodic_orbits(&ctx, &cfg) {
        Ok(o) => o,
        Err(e) => return err_json(e),
    };
    let calabi = match ctx.calabi() {
        Ok(v) => v,
        Err(e) => return err_json(e),
    };
    let records: Vec<_> = orbits
        .iter()
        .map(|o| {
            json!({
                "period": o.period,
                "winding": o.winding,
                "mean_action": o.mean_action,
                "family": o.family_suspected,
                "points": o.points.iter().map(|p| [p.x, p.y_mod() / TAU]).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "calabi": calabi,
        "orbit_count": orbits.len(),
        "orbits": records,
    })
    .to_string()
}

/// w(k) against the diagonal and the underlying N-sequence staircase.
#[wasm_bindgen]
pub fn ech_staircase(a: f64, b: f64, p: i32, kmax: usize) -> String {
    let s = match SlopeData::new(a, b, p as i64) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let kmax = kmax.clamp(1, 400) as u64;
    let w = match w_sequence(&s, kmax) {
        Ok(w) => w,
        Err(e) => return err_json(e),
    };
    let seq_len = (*w.last().unwrap() as usize + 2).min(4000);
    let seq = n_sequence(1.0 / a, 1.0 / b, seq_len);
    json!({
        "a": a,
        "b": b,
        "p": p,
        "w": w,
        "n_sequence": seq,
    })
    .to_string()
}
