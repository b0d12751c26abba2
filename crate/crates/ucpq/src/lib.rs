//! Unit-commitment scheduling compiled to quadratic unconstrained binary
//! optimization.
//!
//! The crate takes a unit commitment problem (UCP) instance — thermal units
//! with min/max generation, start costs, variable costs, and minimum
//! running/idle times, plus a residual demand profile — and compiles it into
//! a QUBO matrix two ways:
//!
//! * [`tailored::compile_tailored`] builds the compact penalty formulation
//!   (demand, start-logic, min-up, and min-down penalty families, plus an
//!   optional discrete generation encoding) without slack variables.
//! * [`generic::compile_generic`] applies the textbook transformation:
//!   slack variables for inequalities, squared penalties for equalities.
//!
//! Compiled matrices convert losslessly to Ising form ([`qubo`]), can be
//! minimized exactly or heuristically ([`solve`]), and every decoded
//! solution is re-checked against an independent MILP-semantics oracle
//! ([`reference`]).

pub mod generic;
pub mod instance;
pub mod layout;
pub mod penalty;
pub mod qubo;
pub mod reference;
pub mod solve;
pub mod tailored;

pub use generic::{compile_generic, compare_formulations, ComparisonReport, GenericStats};
pub use instance::{
    load_instance, save_instance, two_unit_example, validate_instance, UcpInstance, UnitSpec,
    ValidationReport,
};
pub use layout::{VarRole, VariableLayout};
pub use penalty::{default_penalties, validate_penalties, PenaltyFactors};
pub use qubo::{IsingModel, MatrixFormat, MatrixMetrics, QuboMatrix};
pub use reference::{check_feasible, enumerate_optimal, true_cost, Schedule, Violation};
pub use solve::{
    brute_force, simulated_annealing, solve_and_report, AnnealParams, SolutionReport, SolveResult,
    SolverConfig,
};
pub use tailored::{
    compile_tailored, decode, objective_value, CompiledQubo, Formulation, EXAMPLE_OPTIMAL_BITS,
    EXAMPLE_PENALTIES, EXAMPLE_RUNNER_UP_BITS,
};

/// Worker count for parallel sections, capped by the `UCPQ_THREADS`
/// environment variable (unset or `0` means one worker per available core).
pub fn worker_count() -> usize {
    let auto = || {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    };
    match std::env::var("UCPQ_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) | Err(_) => auto(),
            Ok(n) => n,
        },
        Err(_) => auto(),
    }
}
