//! Physical constants shared by the generators and the reference simulators.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

const PHYSICS_TOML: &str = include_str!("../config/physics.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Physics {
    pub version: u32,
    pub thermostat: ThermostatPhysics,
    pub pointcar: PointCarPhysics,
    pub quad: QuadPhysics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermostatPhysics {
    pub initial_temp: f64,
    pub temp_min: f64,
    pub temp_max: f64,
    pub off_change: f64,
    pub heating_change: f64,
    pub on_change: f64,
    pub cooling_change: f64,
    pub heating_fraction: f64,
    pub cooling_fraction: f64,
    pub threshold_bounds: (f64, f64),
    pub warmup: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCarPhysics {
    pub start: (f64, f64),
    pub speed_bounds: (f64, f64),
    pub threshold_bounds: (f64, f64),
    pub road: (f64, f64),
    /// Rectangles `[x_lo, x_hi, y_lo, y_hi]`.
    pub obstacles: Vec<[f64; 4]>,
    pub goal_x: f64,
    pub goal_y: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadPhysics {
    pub mass: f64,
    pub gravity: f64,
    pub inertia: f64,
    pub gain_bounds: (f64, f64),
    pub setpoint_bounds: (f64, f64),
    pub angle_setpoint_bounds: (f64, f64),
    pub threshold_bounds: (f64, f64),
    pub landing_start: (f64, f64),
    pub landing_height: (f64, f64),
    pub landing_speed: f64,
    pub obstacle_start: (f64, f64),
    pub wall_x: (f64, f64),
    pub wall_height: f64,
    pub goal_x: f64,
    pub ceiling: f64,
}

/// The constants shipped with the crate.
pub fn physics() -> &'static Physics {
    static P: OnceLock<Physics> = OnceLock::new();
    P.get_or_init(|| toml::from_str(PHYSICS_TOML).expect("bundled physics config is valid"))
}
