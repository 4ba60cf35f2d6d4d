//! Benchmark registry, run reports and trajectory export.

use std::collections::BTreeMap;
use std::io::Write;

use reas::baseline::BaselineResult;
use reas::ir::{verify, Assignment, Program};
use reas::synth::SolveStats;
use serde::Serialize;

use crate::config::physics;
use crate::pointcar::{gen_pointcar_lanechange, simulate_pointcar, CarController, PointCarParams};
use crate::quad::{gen_quad1d, simulate_quad, QuadController, QuadParams, QuadTask, NUM_BOOLS, NUM_REALS};
use crate::thermostat::{gen_thermostat, simulate_assignment, ThermostatParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bench {
    Thermostat(ThermostatParams),
    PointCar(PointCarParams),
    Quad(QuadParams),
}

/// Optional overrides of a benchmark's default parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BenchOverrides {
    pub steps: Option<usize>,
    pub dt: Option<f64>,
    pub dwell: Option<f64>,
    pub obstacles: Option<usize>,
}

pub const BENCH_NAMES: [&str; 4] = ["thermostat", "pointcar", "quad-obstacle", "quad-landing"];

impl Bench {
    pub fn from_name(name: &str, o: BenchOverrides) -> Result<Bench, String> {
        let b = match name {
            "thermostat" => Bench::Thermostat(ThermostatParams::new(
                o.steps.unwrap_or(50),
                o.dt.unwrap_or(2.0),
                o.dwell.unwrap_or(20.0),
            )),
            "pointcar" | "lanechange" => Bench::PointCar(PointCarParams::new(
                o.steps.unwrap_or(50),
                o.dt.unwrap_or(0.1),
                o.obstacles.unwrap_or(physics().pointcar.obstacles.len()),
            )),
            "quad-obstacle" | "quad-landing" => {
                let task = if name == "quad-obstacle" {
                    QuadTask::Obstacle
                } else {
                    QuadTask::Landing
                };
                Bench::Quad(QuadParams::new(o.steps.unwrap_or(70), o.dt.unwrap_or(0.05), task))
            }
            _ => {
                return Err(format!(
                    "unknown benchmark `{name}` (expected one of: {})",
                    BENCH_NAMES.join(", ")
                ))
            }
        };
        if b.steps() == 0 {
            return Err("--steps must be at least 1".into());
        }
        if let Bench::PointCar(p) = b {
            let max = physics().pointcar.obstacles.len();
            if p.num_obstacles > max {
                return Err(format!("--obstacles must be at most {max}"));
            }
        }
        Ok(b)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Bench::Thermostat(_) => "thermostat",
            Bench::PointCar(_) => "pointcar",
            Bench::Quad(q) if q.task == QuadTask::Obstacle => "quad-obstacle",
            Bench::Quad(_) => "quad-landing",
        }
    }

    pub fn steps(&self) -> usize {
        match self {
            Bench::Thermostat(p) => p.steps,
            Bench::PointCar(p) => p.steps,
            Bench::Quad(p) => p.steps,
        }
    }

    pub fn program(&self) -> Program {
        match *self {
            Bench::Thermostat(p) => gen_thermostat(p),
            Bench::PointCar(p) => gen_pointcar_lanechange(p),
            Bench::Quad(p) => gen_quad1d(p),
        }
    }

    /// Expected (Boolean unknowns, real unknowns).
    pub fn expected_counts(&self) -> (usize, usize) {
        match self {
            Bench::Thermostat(_) => (0, 2),
            Bench::PointCar(_) => (4, 5),
            Bench::Quad(_) => (NUM_BOOLS, NUM_REALS),
        }
    }

    /// Re-simulates the controller in `a` with the reference simulator.
    pub fn oracle(&self, a: &Assignment) -> bool {
        match *self {
            Bench::Thermostat(p) => simulate_assignment(p, a).ok(),
            Bench::PointCar(p) => simulate_pointcar(p, &CarController::from_assignment(a)).ok(),
            Bench::Quad(p) => simulate_quad(p, &QuadController::from_assignment(a)).ok(),
        }
    }

    /// Writes the simulated trajectory as CSV: time, state, mode index.
    pub fn write_trajectory<W: Write>(&self, a: &Assignment, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        match *self {
            Bench::Thermostat(p) => {
                for r in simulate_assignment(p, a).rows {
                    out.serialize(r)?;
                }
            }
            Bench::PointCar(p) => {
                for r in simulate_pointcar(p, &CarController::from_assignment(a)).rows {
                    out.serialize(r)?;
                }
            }
            Bench::Quad(p) => {
                for r in simulate_quad(p, &QuadController::from_assignment(a)).rows {
                    out.serialize(r)?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedAssignment {
    pub reals: BTreeMap<String, f64>,
    pub bools: BTreeMap<String, bool>,
}

impl NamedAssignment {
    pub fn new(p: &Program, a: &Assignment) -> Self {
        NamedAssignment {
            reals: p
                .real_unknowns()
                .iter()
                .zip(&a.reals)
                .map(|(d, v)| (d.name.clone(), *v))
                .collect(),
            bools: p
                .bool_unknowns()
                .iter()
                .zip(&a.bools)
                .map(|(d, v)| (d.name.clone(), *v))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineSummary {
    pub trials: usize,
    pub found: usize,
    pub correct: usize,
    pub timed_out: bool,
}

/// JSON report written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub status: String,
    pub assignment: Option<NamedAssignment>,
    pub stats: SolveStats,
    /// Exact verification, recomputed independently of the solver.
    pub verified: bool,
    pub benchmark: Option<String>,
    /// Verdict of the reference simulator (benchmarks only).
    pub oracle: Option<bool>,
    pub physics_version: u32,
    pub baseline: Option<BaselineSummary>,
}

impl RunReport {
    pub fn new(
        p: &Program,
        status: &str,
        a: Option<&Assignment>,
        stats: SolveStats,
        bench: Option<&Bench>,
    ) -> Self {
        let verified = a.is_some_and(|a| matches!(verify(p, a), Ok(true)));
        RunReport {
            status: status.to_string(),
            assignment: a.map(|a| NamedAssignment::new(p, a)),
            stats,
            verified,
            benchmark: bench.map(|b| b.name().to_string()),
            oracle: bench.zip(a).map(|(b, a)| b.oracle(a)),
            physics_version: physics().version,
            baseline: None,
        }
    }

    pub fn with_baseline(mut self, b: &BaselineResult) -> Self {
        self.baseline = Some(BaselineSummary {
            trials: b.trials,
            found: b.found,
            correct: b.correct,
            timed_out: b.timed_out,
        });
        self
    }
}
