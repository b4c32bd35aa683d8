use wasm_bindgen::prelude::*;

fn js(e: crate::DemoError) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = explosionTrajectory)]
pub fn explosion_trajectory(
    alpha: f64,
    lambda: f64,
    omega: f64,
    steps: usize,
    stabilized: bool,
) -> Result<Vec<f64>, JsError> {
    crate::explosion_trajectory(alpha, lambda, omega, steps, stabilized).map_err(js)
}

#[wasm_bindgen(js_name = logGrid)]
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, JsError> {
    crate::log_grid(lo, hi, n).map_err(js)
}

#[wasm_bindgen(js_name = stabilizationCurve)]
pub fn stabilization_curve(alpha: f64, lambda: f64, omegas: &[f64]) -> Result<Vec<f64>, JsError> {
    crate::stabilization_curve(alpha, lambda, omegas).map_err(js)
}

#[wasm_bindgen(js_name = clipSwamping)]
pub fn clip_swamping(large: f64, small: f64, max_norm: f64) -> Result<Vec<f64>, JsError> {
    crate::clip_swamping(large, small, max_norm).map(Vec::from).map_err(js)
}
