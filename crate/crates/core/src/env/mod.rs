//! Benchmark environments.

mod grid;
mod red_light;
mod torus;

pub use grid::{
    build_risky_gridworld, default_risky_map, default_safe_map, grid_action, parse_grid_map,
    Cell, GridMap, DEFAULT_HAZARD_STOP_PROB, DEFAULT_RISKY_MAP, DEFAULT_SAFE_MAP, GRID_ACTIONS,
};
pub use red_light::{build_red_light, Light, RedLightConfig, RED_LIGHT_ACTIONS};
pub use torus::{build_torus_freeze, TorusFreezeConfig};
