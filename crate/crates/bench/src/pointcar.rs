//! Lane change with a point car that moves either along x or along y.
//!
//! The controller has three modes: drive forward at speed `v0`, move
//! sideways at `v1`, drive forward at `v2`. Each mode switch fires on a
//! condition built from two Boolean unknowns and a threshold: the unknowns
//! pick the state coordinate (x or y) and the direction of the comparison.
//! The car must never enter an obstacle rectangle, must stay on the road, and
//! must end past the goal line in the target lane.

use reas::ir::{Assignment, Bool, Program, ProgramBuilder, Real, YId};
use serde::Serialize;

use crate::MODE_SPACING;

use crate::config::{physics, PointCarPhysics};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCarParams {
    pub steps: usize,
    pub dt: f64,
    pub num_obstacles: usize,
}

impl PointCarParams {
    pub fn new(steps: usize, dt: f64, num_obstacles: usize) -> Self {
        PointCarParams {
            steps,
            dt,
            num_obstacles,
        }
    }
}

/// Real unknowns, in declaration order.
pub const REAL_NAMES: [&str; 5] = ["theta0", "theta1", "v0", "v1", "v2"];
/// Boolean unknowns, in declaration order.
pub const BOOL_NAMES: [&str; 4] = ["use_x0", "upward0", "use_x1", "upward1"];

/// The first `n` obstacle rectangles as `((x_lo, x_hi), (y_lo, y_hi))`.
pub fn obstacles(ph: &PointCarPhysics, n: usize) -> Vec<((f64, f64), (f64, f64))> {
    ph.obstacles
        .iter()
        .take(n)
        .map(|r| ((r[0], r[1]), (r[2], r[3])))
        .collect()
}

/// Switching condition: `use_x` selects the coordinate, `upward` whether the
/// coordinate must be above (`c - theta >= 0`) or below (`theta - c >= 0`)
/// the threshold.
fn switch_exp(b: &mut ProgramBuilder, use_x: YId, upward: YId, x: Real, y: Real, theta: Real) -> Bool {
    let xa = b.sub(x, theta);
    let xb = b.sub(theta, x);
    let ya = b.sub(y, theta);
    let yb = b.sub(theta, y);
    let on_x = b.iteh(upward, xa, xb);
    let on_y = b.iteh(upward, ya, yb);
    let e = b.iteh(use_x, on_x, on_y);
    b.ge0(e)
}

pub fn gen_pointcar_lanechange(params: PointCarParams) -> Program {
    let ph = &physics().pointcar;
    assert!(params.steps >= 1, "at least one step");
    assert!(params.num_obstacles <= ph.obstacles.len(), "too many obstacles");
    let dt = params.dt;
    let mut b = ProgramBuilder::folding();
    let theta0 = b.real_unknown(REAL_NAMES[0], Some(ph.threshold_bounds));
    let theta1 = b.real_unknown(REAL_NAMES[1], Some(ph.threshold_bounds));
    let v: Vec<Real> = REAL_NAMES[2..]
        .iter()
        .map(|n| b.real_unknown(n, Some(ph.speed_bounds)))
        .collect();
    let y: Vec<YId> = BOOL_NAMES.iter().map(|n| b.bool_unknown(n)).collect();

    let dtc = b.constant(dt);
    let step_x0 = b.mul(v[0], dtc);
    let step_y1 = b.mul(v[1], dtc);
    let step_x2 = b.mul(v[2], dtc);
    let zero = b.constant(0.0);
    let m: Vec<Real> = (0..3).map(|k| b.constant(k as f64 * MODE_SPACING)).collect();
    let half = b.constant(0.5 * MODE_SPACING);
    let three_half = b.constant(1.5 * MODE_SPACING);
    let road_lo = b.constant(ph.road.0);
    let road_hi = b.constant(ph.road.1);
    let rects: Vec<[Real; 4]> = obstacles(ph, params.num_obstacles)
        .into_iter()
        .map(|((x0, x1), (y0, y1))| [b.constant(x0), b.constant(x1), b.constant(y0), b.constant(y1)])
        .collect();

    let mut px = b.constant(ph.start.0);
    let mut py = b.constant(ph.start.1);
    let mut mode = b.constant(0.0);
    for step in 0..=params.steps {
        for r in &rects {
            let a = b.ge(px, r[0]);
            let c = b.le(px, r[1]);
            let d = b.ge(py, r[2]);
            let e = b.le(py, r[3]);
            let in_x = b.and(a, c);
            let in_y = b.and(d, e);
            let hit = b.and(in_x, in_y);
            let clear = b.not(hit);
            b.assert(clear);
        }
        let above = b.ge(py, road_lo);
        let below = b.le(py, road_hi);
        b.assert(above);
        b.assert(below);
        if step == params.steps {
            break;
        }
        let in0 = b.le(mode, half);
        let in1 = b.le(mode, three_half);
        let dx_rest = b.ite(in1, zero, step_x2);
        let dx = b.ite(in0, step_x0, dx_rest);
        let dy_rest = b.ite(in1, step_y1, zero);
        let dy = b.ite(in0, zero, dy_rest);
        let c0 = switch_exp(&mut b, y[0], y[1], px, py, theta0);
        let c1 = switch_exp(&mut b, y[2], y[3], px, py, theta1);
        let next0 = b.ite(c0, m[1], m[0]);
        let next1 = b.ite(c1, m[2], m[1]);
        let next_rest = b.ite(in1, next1, m[2]);
        let next_mode = b.ite(in0, next0, next_rest);
        px = b.add(px, dx);
        py = b.add(py, dy);
        mode = next_mode;
    }
    let gx = b.constant(ph.goal_x);
    let gy0 = b.constant(ph.goal_y.0);
    let gy1 = b.constant(ph.goal_y.1);
    let past = b.ge(px, gx);
    let lane_lo = b.ge(py, gy0);
    let lane_hi = b.le(py, gy1);
    let lane = b.and(lane_lo, lane_hi);
    let goal = b.and(past, lane);
    b.assert(goal);
    b.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CarRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub mode: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarSim {
    pub rows: Vec<CarRow>,
    pub collision_free: bool,
    pub on_road: bool,
    pub reached_goal: bool,
}

impl CarSim {
    pub fn ok(&self) -> bool {
        self.collision_free && self.on_road && self.reached_goal
    }
}

/// Controller parameters in plain form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarController {
    pub theta: [f64; 2],
    pub speed: [f64; 3],
    pub use_x: [bool; 2],
    pub upward: [bool; 2],
}

impl CarController {
    pub fn from_assignment(a: &Assignment) -> Self {
        CarController {
            theta: [a.reals[0], a.reals[1]],
            speed: [a.reals[2], a.reals[3], a.reals[4]],
            use_x: [a.bools[0], a.bools[2]],
            upward: [a.bools[1], a.bools[3]],
        }
    }

    fn fires(&self, k: usize, x: f64, y: f64) -> bool {
        let c = if self.use_x[k] { x } else { y };
        if self.upward[k] {
            c - self.theta[k] >= 0.0
        } else {
            self.theta[k] - c >= 0.0
        }
    }
}

/// Forward simulation with an independent rectangle collision check.
pub fn simulate_pointcar(params: PointCarParams, ctl: &CarController) -> CarSim {
    let ph = &physics().pointcar;
    let rects = obstacles(ph, params.num_obstacles);
    let (mut x, mut y) = ph.start;
    let mut mode = 0u8;
    let mut rows = Vec::new();
    let mut collision_free = true;
    let mut on_road = true;
    for step in 0..=params.steps {
        rows.push(CarRow {
            t: step as f64 * params.dt,
            x,
            y,
            mode,
        });
        for &((x0, x1), (y0, y1)) in &rects {
            if x0 <= x && x <= x1 && y0 <= y && y <= y1 {
                collision_free = false;
            }
        }
        if y < ph.road.0 || y > ph.road.1 {
            on_road = false;
        }
        if step == params.steps {
            break;
        }
        let (dx, dy) = match mode {
            0 => (ctl.speed[0] * params.dt, 0.0),
            1 => (0.0, ctl.speed[1] * params.dt),
            _ => (ctl.speed[2] * params.dt, 0.0),
        };
        let next = match mode {
            0 if ctl.fires(0, x, y) => 1,
            1 if ctl.fires(1, x, y) => 2,
            m => m,
        };
        x += dx;
        y += dy;
        mode = next;
    }
    let reached_goal = x >= ph.goal_x && y >= ph.goal_y.0 && y <= ph.goal_y.1;
    CarSim {
        rows,
        collision_free,
        on_road,
        reached_goal,
    }
}
