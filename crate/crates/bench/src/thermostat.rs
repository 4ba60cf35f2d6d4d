//! Thermostat with a four-state heater (OFF, HEATING, ON, COOLING) and two
//! unknown switching thresholds.
//!
//! OFF switches to HEATING when the temperature drops to `x_on`; HEATING
//! turns ON after a warm-up time; ON switches to COOLING when the temperature
//! reaches `x_off`; COOLING returns to OFF after a cool-down time. The room
//! temperature must stay within range, and the heater may only be switched
//! on or off after it has spent the dwell time in its current state.

use reas::ir::{Assignment, Bool, Program, ProgramBuilder, Real};
use serde::Serialize;

use crate::config::{physics, ThermostatPhysics};
use crate::MODE_SPACING;

pub const OFF: u8 = 0;
pub const HEATING: u8 = 1;
pub const ON: u8 = 2;
pub const COOLING: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermostatParams {
    pub steps: usize,
    pub dt: f64,
    pub dwell: f64,
}

impl ThermostatParams {
    pub fn new(steps: usize, dt: f64, dwell: f64) -> Self {
        ThermostatParams { steps, dt, dwell }
    }
}

struct Rates {
    change: [f64; 4],
    heating_time: f64,
    cooling_time: f64,
}

fn rates(ph: &ThermostatPhysics, dwell: f64) -> Rates {
    Rates {
        change: [
            ph.off_change / dwell,
            ph.heating_change / dwell,
            ph.on_change / dwell,
            ph.cooling_change / dwell,
        ],
        heating_time: ph.heating_fraction * dwell,
        cooling_time: ph.cooling_fraction * dwell,
    }
}

/// Unrolled thermostat program with real unknowns `x_on` and `x_off`.
pub fn gen_thermostat(params: ThermostatParams) -> Program {
    assert!(params.steps >= 1, "at least one step");
    let ph = &physics().thermostat;
    let r = rates(ph, params.dwell);
    let dt = params.dt;
    let mut b = ProgramBuilder::folding();
    let x_on = b.real_unknown("x_on", Some(ph.threshold_bounds));
    let x_off = b.real_unknown("x_off", Some(ph.threshold_bounds));
    let lo = b.constant(ph.temp_min);
    let hi = b.constant(ph.temp_max);
    let dwell = b.constant(timer_threshold(params.dwell, dt));
    let heating_time = b.constant(timer_threshold(r.heating_time, dt));
    let cooling_time = b.constant(timer_threshold(r.cooling_time, dt));
    let zero = b.constant(0.0);
    let modes: Vec<Real> = (0..4).map(|m| b.constant(m as f64 * MODE_SPACING)).collect();
    let change: Vec<Real> = r.change.iter().map(|c| b.constant(c * dt)).collect();

    let mut temp = b.constant(ph.initial_temp);
    let mut mode = b.constant(OFF as f64);
    let mut timer = b.constant(0.0);
    let in_range = |b: &mut ProgramBuilder, t: Real| {
        let above = b.ge(t, lo);
        let below = b.le(t, hi);
        b.assert(above);
        b.assert(below);
    };
    for step in 0..params.steps {
        if step >= ph.warmup {
            in_range(&mut b, temp);
        }
        // Nested mode tests: OFF, else HEATING, else ON, else COOLING.
        let half = |b: &mut ProgramBuilder, k: f64| b.constant((k + 0.5) * MODE_SPACING);
        let c0 = half(&mut b, 0.0);
        let c1 = half(&mut b, 1.0);
        let c2 = half(&mut b, 2.0);
        let is_off = b.le(mode, c0);
        let is_heating = b.le(mode, c1);
        let is_on = b.le(mode, c2);
        let go_heat = b.le(temp, x_on);
        let go_cool = b.ge(temp, x_off);
        let warmed = b.ge(timer, heating_time);
        let cooled = b.ge(timer, cooling_time);
        let dwelled = b.ge(timer, dwell);

        // Dwell: OFF -> HEATING and ON -> COOLING only after the dwell time.
        let early = b.not(dwelled);
        let off_switch = b.and(is_off, go_heat);
        let bad_off = b.and(off_switch, early);
        let ok_off = b.not(bad_off);
        b.assert(ok_off);
        let not_heating = b.not(is_heating);
        let on_mode = b.and(not_heating, is_on);
        let on_switch = b.and(on_mode, go_cool);
        let bad_on = b.and(on_switch, early);
        let ok_on = b.not(bad_on);
        b.assert(ok_on);

        let rate = chain(&mut b, [is_off, is_heating, is_on], [change[0], change[1], change[2], change[3]]);
        let next_temp = b.add(temp, rate);

        let m_off = b.ite(go_heat, modes[1], modes[0]);
        let m_heat = b.ite(warmed, modes[2], modes[1]);
        let m_on = b.ite(go_cool, modes[3], modes[2]);
        let m_cool = b.ite(cooled, modes[0], modes[3]);
        let next_mode = chain(&mut b, [is_off, is_heating, is_on], [m_off, m_heat, m_on, m_cool]);

        let dtc = b.constant(dt);
        let ticking = b.add(timer, dtc);
        let t_off = b.ite(go_heat, zero, ticking);
        let t_heat = b.ite(warmed, zero, ticking);
        let t_on = b.ite(go_cool, zero, ticking);
        let t_cool = b.ite(cooled, zero, ticking);
        let next_timer = chain(&mut b, [is_off, is_heating, is_on], [t_off, t_heat, t_on, t_cool]);

        temp = next_temp;
        mode = next_mode;
        timer = next_timer;
    }
    if params.steps >= ph.warmup {
        in_range(&mut b, temp);
    }
    b.finish()
}

/// Timers only take multiples of `dt`, so `timer >= t` is encoded against
/// the midpoint below the first multiple reaching `t`. This keeps the
/// comparison away from ties.
fn timer_threshold(t: f64, dt: f64) -> f64 {
    ((t / dt - 1e-9).ceil() - 0.5) * dt
}

/// `ite(c0, v0, ite(c1, v1, ite(c2, v2, v3)))`
fn chain(b: &mut ProgramBuilder, c: [Bool; 3], v: [Real; 4]) -> Real {
    let inner = b.ite(c[2], v[2], v[3]);
    let mid = b.ite(c[1], v[1], inner);
    b.ite(c[0], v[0], mid)
}

/// One row of a simulated trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermostatRow {
    pub t: f64,
    pub temp: f64,
    pub timer: f64,
    pub mode: u8,
}

/// Outcome of the reference simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermostatSim {
    pub rows: Vec<ThermostatRow>,
    pub in_range: bool,
    pub dwell_ok: bool,
}

impl ThermostatSim {
    pub fn ok(&self) -> bool {
        self.in_range && self.dwell_ok
    }
}

/// Absorbs rounding in accumulated timers.
const TICK_TOL: f64 = 1e-9;

/// Plain forward simulation of the thermostat, written independently of the
/// program encoding.
pub fn simulate_thermostat(params: ThermostatParams, x_on: f64, x_off: f64) -> ThermostatSim {
    let ph = &physics().thermostat;
    let r = rates(ph, params.dwell);
    let mut temp = ph.initial_temp;
    let mut mode = OFF;
    let mut timer = 0.0;
    let mut rows = Vec::with_capacity(params.steps + 1);
    let mut in_range = true;
    let mut dwell_ok = true;
    for step in 0..=params.steps {
        rows.push(ThermostatRow {
            t: step as f64 * params.dt,
            temp,
            timer,
            mode,
        });
        if step >= ph.warmup && !(ph.temp_min..=ph.temp_max).contains(&temp) {
            in_range = false;
        }
        if step == params.steps {
            break;
        }
        let (switch, next) = match mode {
            OFF => (temp <= x_on, HEATING),
            HEATING => (timer >= r.heating_time - TICK_TOL, ON),
            ON => (temp >= x_off, COOLING),
            _ => (timer >= r.cooling_time - TICK_TOL, OFF),
        };
        if switch && (mode == OFF || mode == ON) && timer < params.dwell - TICK_TOL {
            dwell_ok = false;
        }
        temp += r.change[mode as usize] * params.dt;
        if switch {
            mode = next;
            timer = 0.0;
        } else {
            timer += params.dt;
        }
    }
    ThermostatSim {
        rows,
        in_range,
        dwell_ok,
    }
}

/// Simulates the thresholds found in `a`.
pub fn simulate_assignment(params: ThermostatParams, a: &Assignment) -> ThermostatSim {
    simulate_thermostat(params, a.reals[0], a.reals[1])
}
