use num_complex::Complex64;
use renorm_lab::cli_report::tower_table;
use renorm_lab::complex_pullback::{k_cycle_pullback, BranchPolicy, Trust};
use renorm_lab::map_model::AnalyticMap;
use renorm_lab::polylike_bounds::{construct_extension, julia_containment, ExtensionConfig};
use renorm_lab::renormalization::{build_tower, RenormLevel};
use wasm_bindgen::prelude::*;

fn tower_for(c: f64, depth: usize) -> Result<(AnalyticMap, Vec<RenormLevel>), String> {
    let map = AnalyticMap::quadratic(c).map_err(|e| e.to_string())?;
    let levels = build_tower(&map, 0, depth, 64, 8).map_err(|e| e.to_string())?;
    Ok((map, levels))
}

fn flat(points: impl IntoIterator<Item = (f64, f64)>) -> Vec<f64> {
    points.into_iter().flat_map(|(x, y)| [x, y]).collect()
}

pub fn tower_rows(c: f64, depth: usize) -> Result<String, String> {
    let (_, levels) = tower_for(c, depth)?;
    Ok(tower_table(&levels))
}

#[wasm_bindgen]
pub struct Extension {
    u: Vec<f64>,
    v: Vec<f64>,
    julia: Vec<f64>,
    p: Vec<f64>,
    modulus: f64,
    beta: f64,
}

#[wasm_bindgen]
impl Extension {
    /// Inner domain vertices as `x0, y0, x1, y1, ...`.
    #[wasm_bindgen(getter)]
    pub fn u(&self) -> Vec<f64> {
        self.u.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn v(&self) -> Vec<f64> {
        self.v.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn julia(&self) -> Vec<f64> {
        self.julia.clone()
    }
    /// Ends of the renormalization interval.
    #[wasm_bindgen(getter)]
    pub fn p(&self) -> Vec<f64> {
        self.p.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn modulus(&self) -> f64 {
        self.modulus
    }
    #[wasm_bindgen(getter)]
    pub fn beta(&self) -> f64 {
        self.beta
    }
}

pub fn extension_at(c: f64, k: usize) -> Result<Extension, String> {
    let (map, levels) = tower_for(c, k)?;
    if levels.len() < k {
        return Err(format!("tower stops at level {}", levels.len()));
    }
    let cfg = ExtensionConfig { julia_grid: 32, ..Default::default() };
    let ext = construct_extension(&map, &levels, k, &cfg).map_err(|e| e.to_string())?;
    let julia = julia_containment(&map, &levels[k - 1], &ext, cfg.julia_grid, cfg.julia_horizon, 500).map_err(|e| e.to_string())?;
    Ok(Extension {
        u: flat(ext.u.points().iter().map(|z| (z.re, z.im))),
        v: flat(ext.v_boundary.iter().copied()),
        julia: flat(julia.points.iter().copied()),
        p: vec![ext.p.lo(), ext.p.hi()],
        modulus: ext.modulus.lower_bound,
        beta: julia.beta,
    })
}

/// Backward orbit of `x + iy` along the level-`k` cycle, real branch choice, as `x0, y0, ...`.
pub fn pullback_orbit(c: f64, k: usize, x: f64, y: f64) -> Result<Vec<f64>, String> {
    let (map, levels) = tower_for(c, k)?;
    let level = levels.get(k - 1).ok_or_else(|| format!("tower stops at level {}", levels.len()))?;
    let orbit = k_cycle_pullback(&map, level, Complex64::new(x, y), &BranchPolicy::Real, Trust::Unbounded)
        .map_err(|e| e.to_string())?;
    Ok(flat(orbit.points.iter().map(|z| (z.re, z.im))))
}

#[wasm_bindgen]
pub fn tower(c: f64, depth: usize) -> Result<String, JsValue> {
    tower_rows(c, depth).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn extension(c: f64, k: usize) -> Result<Extension, JsValue> {
    extension_at(c, k).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn backward_orbit(c: f64, k: usize, x: f64, y: f64) -> Result<Vec<f64>, JsValue> {
    pullback_orbit(c, k, x, y).map_err(|e| JsValue::from_str(&e))
}
