//! WebAssembly bindings for the browser demo in `www/`.

pub mod demo;

use wasm_bindgen::prelude::*;

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen(js_name = discriminantCurve)]
pub fn discriminant_curve(potential: &str, n: usize, lo: f64, hi: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    demo::discriminant_curve(potential, n, lo, hi, samples).map_err(js)
}

#[wasm_bindgen]
pub fn spectrum(potential: &str, n: usize, lo: f64, hi: f64) -> Result<Vec<f64>, JsError> {
    demo::spectrum(potential, n, lo, hi).map_err(js)
}

#[wasm_bindgen]
pub struct Trajectory(demo::Trajectory);

#[wasm_bindgen]
impl Trajectory {
    #[wasm_bindgen(constructor)]
    pub fn new(potential: &str, n: usize, dt: f64) -> Result<Trajectory, JsError> {
        demo::Trajectory::new(potential, n, dt).map(Trajectory).map_err(js)
    }

    pub fn advance(&mut self, duration: f64) -> Result<(), JsError> {
        self.0.advance(duration).map_err(js)
    }

    #[wasm_bindgen(getter)]
    pub fn time(&self) -> f64 {
        self.0.time()
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.0.modulus()
    }

    pub fn invariants(&self) -> Result<Vec<f64>, JsError> {
        self.0.invariants().map_err(js)
    }
}
