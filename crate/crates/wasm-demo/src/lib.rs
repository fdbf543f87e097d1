//! Curves for the browser demo. Each function returns `[x0, y0, x1, y1, ...]`.

use skfi_core::cw::cw_curve;
use skfi_core::parisi::one_atom_value;
use skfi_core::variational::skfi_objective;
use skfi_core::{GaussianField, MixtureXi, TemperaturePoint};
use wasm_bindgen::prelude::*;

pub const MAX_POINTS: usize = 2001;

fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("points must be in 2..={MAX_POINTS}"));
    }
    Ok((0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect())
}

fn curve(
    xs: Vec<f64>,
    f: impl Fn(f64) -> skfi_core::Result<f64>,
) -> Result<Vec<f64>, String> {
    let mut out = Vec::with_capacity(2 * xs.len());
    for x in xs {
        out.push(x);
        out.push(f(x).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

/// `mu -> ln 2 + E ln cosh(beta mu + h) - beta mu^2 / 2` on `[-1, 1]`.
pub fn cw_points(beta: f64, h_std: f64, points: usize) -> Result<Vec<f64>, String> {
    let h = GaussianField::centered(h_std).map_err(|e| e.to_string())?;
    curve(grid(-1.0, 1.0, points)?, |mu| cw_curve(mu, beta, h))
}

/// `q -> P(delta_q)` on `[0, 1]`.
pub fn one_atom_points(beta1: f64, beta2: f64, h_std: f64, points: usize) -> Result<Vec<f64>, String> {
    let xi = MixtureXi::new(vec![beta1, beta2]).map_err(|e| e.to_string())?;
    let h = GaussianField::centered(h_std).map_err(|e| e.to_string())?;
    curve(grid(0.0, 1.0, points)?, |q| one_atom_value(&xi, h, q))
}

/// `mu -> ln 2 + SK free energy at field beta mu + h - beta mu^2 / 2` on `[-1, 1]`.
pub fn objective_points(
    beta: f64,
    beta1: f64,
    h_std: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    let temp = TemperaturePoint::new(beta, MixtureXi::sk(beta1)).map_err(|e| e.to_string())?;
    let h = GaussianField::centered(h_std).map_err(|e| e.to_string())?;
    curve(grid(-1.0, 1.0, points)?, |mu| skfi_objective(mu, &temp, h))
}

#[wasm_bindgen(js_name = cwCurve)]
pub fn cw_curve_js(beta: f64, h_std: f64, points: usize) -> Result<Vec<f64>, JsError> {
    cw_points(beta, h_std, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = oneAtomScan)]
pub fn one_atom_scan_js(beta1: f64, beta2: f64, h_std: f64, points: usize) -> Result<Vec<f64>, JsError> {
    one_atom_points(beta1, beta2, h_std, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = objectiveCurve)]
pub fn objective_curve_js(beta: f64, beta1: f64, h_std: f64, points: usize) -> Result<Vec<f64>, JsError> {
    objective_points(beta, beta1, h_std, points).map_err(|e| JsError::new(&e))
}
