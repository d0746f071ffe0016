//! Browser demo: exact values, live training and the hindsight sampling
//! check, exported through wasm-bindgen. Results cross the boundary as
//! JSON strings.

pub mod demo;

use wasm_bindgen::prelude::*;

/// Exact optimal values and nominal path for a grid map.
#[wasm_bindgen(js_name = oracleView)]
pub fn oracle_view(map_text: &str, hazard_stop_prob: f64) -> Result<String, JsError> {
    demo::oracle_view(map_text, hazard_stop_prob).map_err(|e| JsError::new(&e))
}

/// Hindsight-sampled next-state laws against their predicted values.
#[wasm_bindgen(js_name = biasRatioBins)]
pub fn bias_ratio_bins(trajectories: u32, seed: u32) -> String {
    demo::bias_ratio_bins(trajectories as usize, seed as u64)
}

#[wasm_bindgen]
pub struct Trainer(demo::Trainer);

#[wasm_bindgen]
impl Trainer {
    #[wasm_bindgen(constructor)]
    pub fn new(
        map_text: &str,
        hazard_stop_prob: f64,
        kind: &str,
        seed: u32,
        batches_per_episode: u32,
    ) -> Result<Trainer, JsError> {
        demo::Trainer::new(map_text, hazard_stop_prob, kind, seed as u64, batches_per_episode as usize)
            .map(Trainer)
            .map_err(|e| JsError::new(&e))
    }

    pub fn step(&mut self, episodes: u32, eval_episodes: u32) -> Result<String, JsError> {
        self.0.step(episodes, eval_episodes as usize).map_err(|e| JsError::new(&e))
    }

    pub fn view(&self) -> String {
        self.0.view()
    }
}
