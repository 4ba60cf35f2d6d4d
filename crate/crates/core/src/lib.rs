//! Synthesis of real and Boolean unknowns in programs that mix discrete
//! control flow with floating-point computation.
//!
//! The search couples a gradient-based optimizer, working on a smoothed
//! version of the program, with a CDCL SAT solver working on its Boolean
//! skeleton. See [`synth::solve`].

pub mod autodiff;
pub mod baseline;
pub mod boolean;
pub mod ir;
pub mod optimizer;
pub mod random;
pub mod sat;
pub mod smooth;
pub mod synth;

pub use ir::{parse_program, Assignment, Program, ProgramBuilder};
pub use synth::{solve, CoreConfig, SolveResult, SolveStatus};
