//! Planar quadcopter with a three-mode switched PD controller.
//!
//! In mode `k` the thrust is `(y - ysp_k) * ky_k + vy * kvy_k + hover` and the
//! attitude bias is `(a - asp_k) * ka_k + w * kw_k`, where `a` is the tilt
//! angle and `w` its rate. Mode switches use the same two-unknown switching
//! conditions as the point car, over the x and y coordinates.

use reas::ir::{Assignment, Bool, Program, ProgramBuilder, Real, YId};
use serde::Serialize;

use crate::MODE_SPACING;

use crate::config::{physics, QuadPhysics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadTask {
    /// Fly over a wall and reach the far side.
    Obstacle,
    /// Descend and touch down slowly.
    Landing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadParams {
    pub steps: usize,
    pub dt: f64,
    pub task: QuadTask,
    pub gravity: f64,
    /// Initial (x, y).
    pub start: (f64, f64),
}

impl QuadParams {
    pub fn new(steps: usize, dt: f64, task: QuadTask) -> Self {
        let ph = &physics().quad;
        QuadParams {
            steps,
            dt,
            task,
            gravity: ph.gravity,
            start: match task {
                QuadTask::Obstacle => ph.obstacle_start,
                QuadTask::Landing => ph.landing_start,
            },
        }
    }
}

/// Per-mode unknowns, in declaration order within each mode.
pub const MODE_PARAMS: [&str; 6] = ["ysp", "ky", "kvy", "asp", "ka", "kw"];
pub const NUM_MODES: usize = 3;

/// Number of real unknowns: PD parameters per mode plus two thresholds.
pub const NUM_REALS: usize = NUM_MODES * MODE_PARAMS.len() + 2;
pub const NUM_BOOLS: usize = 4;

fn bounds(ph: &QuadPhysics, name: &str) -> (f64, f64) {
    match name {
        "ysp" => ph.setpoint_bounds,
        "asp" => ph.angle_setpoint_bounds,
        _ => ph.gain_bounds,
    }
}

#[derive(Clone, Copy)]
struct State {
    x: Real,
    vx: Real,
    y: Real,
    vy: Real,
    a: Real,
    w: Real,
}

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

pub fn gen_quad1d(params: QuadParams) -> Program {
    assert!(params.steps >= 1, "at least one step");
    let ph = &physics().quad;
    let mut b = ProgramBuilder::folding();
    let mut gains: Vec<[Real; 6]> = Vec::new();
    for k in 0..NUM_MODES {
        let mut g = [Real(reas::ir::NodeId(0)); 6];
        for (i, name) in MODE_PARAMS.iter().enumerate() {
            g[i] = b.real_unknown(&format!("{name}{k}"), Some(bounds(ph, name)));
        }
        gains.push(g);
    }
    let theta0 = b.real_unknown("theta0", Some(ph.threshold_bounds));
    let theta1 = b.real_unknown("theta1", Some(ph.threshold_bounds));
    let holes: Vec<YId> = ["use_x0", "upward0", "use_x1", "upward1"]
        .iter()
        .map(|n| b.bool_unknown(n))
        .collect();

    let dt = b.constant(params.dt);
    let hover = b.constant(ph.mass * params.gravity);
    let inv_mass = b.constant(1.0 / ph.mass);
    let gdt = b.constant(params.gravity * params.dt);
    let inv_inertia = b.constant(1.0 / ph.inertia);
    let half = b.constant(0.5 * MODE_SPACING);
    let three_half = b.constant(1.5 * MODE_SPACING);
    let m: Vec<Real> = (0..3).map(|k| b.constant(k as f64 * MODE_SPACING)).collect();
    let ground = b.constant(0.0);
    let ceiling = b.constant(ph.ceiling);
    let zero = b.constant(0.0);

    let mut s = State {
        x: b.constant(params.start.0),
        vx: zero,
        y: b.constant(params.start.1),
        vy: zero,
        a: zero,
        w: zero,
    };
    let mut mode = b.constant(0.0);
    for step in 0..=params.steps {
        let up = b.ge(s.y, ground);
        b.assert(up);
        let down = b.le(s.y, ceiling);
        b.assert(down);
        if params.task == QuadTask::Obstacle {
            let wx0 = b.constant(ph.wall_x.0);
            let wx1 = b.constant(ph.wall_x.1);
            let wh = b.constant(ph.wall_height);
            let a = b.ge(s.x, wx0);
            let c = b.le(s.x, wx1);
            let low = b.le(s.y, wh);
            let over = b.and(a, c);
            let hit = b.and(over, low);
            let clear = b.not(hit);
            b.assert(clear);
        }
        if step == params.steps {
            break;
        }
        let mut thrust = Vec::new();
        let mut bias = Vec::new();
        for g in &gains {
            let ey = b.sub(s.y, g[0]);
            let p = b.mul(ey, g[1]);
            let d = b.mul(s.vy, g[2]);
            let pd = b.add(p, d);
            thrust.push(b.add(pd, hover));
            let ea = b.sub(s.a, g[3]);
            let pa = b.mul(ea, g[4]);
            let da = b.mul(s.w, g[5]);
            bias.push(b.add(pa, da));
        }
        let in0 = b.le(mode, half);
        let in1 = b.le(mode, three_half);
        let f_rest = b.ite(in1, thrust[1], thrust[2]);
        let f = b.ite(in0, thrust[0], f_rest);
        let t_rest = b.ite(in1, bias[1], bias[2]);
        let torque = b.ite(in0, bias[0], t_rest);

        let c0 = switch_exp(&mut b, holes[0], holes[1], s.x, s.y, theta0);
        let c1 = switch_exp(&mut b, holes[2], holes[3], s.x, s.y, theta1);
        let next0 = b.ite(c0, m[1], m[0]);
        let next1 = b.ite(c1, m[2], m[1]);
        let next_rest = b.ite(in1, next1, m[2]);
        let next_mode = b.ite(in0, next0, next_rest);

        // Explicit Euler: positions use the old velocities.
        let sin_a = b.sin(s.a);
        let cos_a = b.cos(s.a);
        let fm = b.mul(f, inv_mass);
        let fx = b.mul(fm, sin_a);
        let ax = b.neg(fx);
        let ay = b.mul(fm, cos_a);
        let alpha = b.mul(torque, inv_inertia);
        let dx = b.mul(s.vx, dt);
        let dy = b.mul(s.vy, dt);
        let da = b.mul(s.w, dt);
        let dvx = b.mul(ax, dt);
        let ay_dt = b.mul(ay, dt);
        let dvy = b.sub(ay_dt, gdt);
        let dw = b.mul(alpha, dt);
        s = State {
            x: b.add(s.x, dx),
            vx: b.add(s.vx, dvx),
            y: b.add(s.y, dy),
            vy: b.add(s.vy, dvy),
            a: b.add(s.a, da),
            w: b.add(s.w, dw),
        };
        mode = next_mode;
    }
    match params.task {
        QuadTask::Obstacle => {
            let gx = b.constant(ph.goal_x);
            let past = b.ge(s.x, gx);
            b.assert(past);
        }
        QuadTask::Landing => {
            let lo = b.constant(ph.landing_height.0);
            let hi = b.constant(ph.landing_height.1);
            let v = b.constant(ph.landing_speed);
            let nv = b.constant(-ph.landing_speed);
            let h0 = b.ge(s.y, lo);
            let h1 = b.le(s.y, hi);
            let v0 = b.le(s.vy, v);
            let v1 = b.ge(s.vy, nv);
            let h = b.and(h0, h1);
            let slow = b.and(v0, v1);
            let ok = b.and(h, slow);
            b.assert(ok);
        }
    }
    b.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub angle: f64,
    pub rate: f64,
    pub mode: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadSim {
    pub rows: Vec<QuadRow>,
    pub safe: bool,
    pub task_done: bool,
}

impl QuadSim {
    pub fn ok(&self) -> bool {
        self.safe && self.task_done
    }

    pub fn touchdown_speed(&self) -> f64 {
        self.rows.last().map(|r| r.vy.abs()).unwrap_or(0.0)
    }
}

/// Controller parameters in plain form.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadController {
    /// `[ysp, ky, kvy, asp, ka, kw]` per mode.
    pub gains: [[f64; 6]; NUM_MODES],
    pub theta: [f64; 2],
    pub use_x: [bool; 2],
    pub upward: [bool; 2],
}

impl QuadController {
    pub fn from_assignment(a: &Assignment) -> Self {
        let mut gains = [[0.0; 6]; NUM_MODES];
        for (k, g) in gains.iter_mut().enumerate() {
            g.copy_from_slice(&a.reals[k * 6..k * 6 + 6]);
        }
        QuadController {
            gains,
            theta: [a.reals[18], a.reals[19]],
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

/// Reference simulation with the same explicit Euler update.
pub fn simulate_quad(params: QuadParams, ctl: &QuadController) -> QuadSim {
    let ph = &physics().quad;
    let (mut x, mut y) = params.start;
    let (mut vx, mut vy, mut a, mut w) = (0.0, 0.0, 0.0, 0.0);
    let mut mode = 0u8;
    let mut rows = Vec::new();
    let mut safe = true;
    let dt = params.dt;
    for step in 0..=params.steps {
        rows.push(QuadRow {
            t: step as f64 * dt,
            x,
            y,
            vx,
            vy,
            angle: a,
            rate: w,
            mode,
        });
        if y < 0.0 || y > ph.ceiling {
            safe = false;
        }
        if params.task == QuadTask::Obstacle
            && ph.wall_x.0 <= x
            && x <= ph.wall_x.1
            && y <= ph.wall_height
        {
            safe = false;
        }
        if step == params.steps {
            break;
        }
        let g = &ctl.gains[mode as usize];
        let f = (y - g[0]) * g[1] + vy * g[2] + ph.mass * params.gravity;
        let torque = (a - g[3]) * g[4] + w * g[5];
        let next = match mode {
            0 if ctl.fires(0, x, y) => 1,
            1 if ctl.fires(1, x, y) => 2,
            m => m,
        };
        let fm = f * (1.0 / ph.mass);
        let ax = -(fm * a.sin());
        let ay = fm * a.cos();
        let alpha = torque * (1.0 / ph.inertia);
        x += vx * dt;
        y += vy * dt;
        a += w * dt;
        vx += ax * dt;
        vy += ay * dt - params.gravity * dt;
        w += alpha * dt;
        mode = next;
    }
    let last = rows.last().expect("at least one row");
    let task_done = match params.task {
        QuadTask::Obstacle => last.x >= ph.goal_x,
        QuadTask::Landing => {
            last.y >= ph.landing_height.0
                && last.y <= ph.landing_height.1
                && last.vy.abs() <= ph.landing_speed
        }
    };
    QuadSim {
        rows,
        safe,
        task_done,
    }
}
