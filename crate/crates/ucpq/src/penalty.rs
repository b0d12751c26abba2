//! Penalty factors for the constraint families and their validity rule.

use serde::Serialize;

use crate::instance::{Issue, Severity, UcpInstance, ValidationReport};

/// Weights of the four penalty families. The essential ordering constraint
/// is `start_logic > min_down * max_i(min_down_i)`: a miswired start bit
/// earns a bonus from the min-down family of up to `min_down * mindown_i`,
/// which the start-logic family must strictly outweigh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PenaltyFactors {
    /// Demand balance weight (A).
    pub demand: f64,
    /// Start-variable wiring weight (B).
    pub start_logic: f64,
    /// Minimum running time weight (C).
    pub min_up: f64,
    /// Minimum idle time weight (D).
    pub min_down: f64,
}

impl PenaltyFactors {
    pub fn new(demand: f64, start_logic: f64, min_up: f64, min_down: f64) -> Self {
        PenaltyFactors {
            demand,
            start_logic,
            min_up,
            min_down,
        }
    }
}

/// Upper bound on any schedule's true cost: every unit at full output every
/// step, started every step.
pub(crate) fn cost_upper_bound(inst: &UcpInstance) -> f64 {
    let per_step_var: f64 = inst.units.iter().map(|u| u.var_cost * u.max_gen).sum();
    let per_step_start: f64 = inst.units.iter().map(|u| u.start_cost).sum();
    inst.time_steps as f64 * per_step_var + per_step_start * inst.time_steps as f64
}

fn max_min_down(inst: &UcpInstance) -> usize {
    inst.units.iter().map(|u| u.min_down).max().unwrap_or(1)
}

/// Derive penalty factors that satisfy the validity rule by construction.
///
/// `U` is one more than the rounded-up average per-(step, unit) cost scale;
/// the min-up and min-down weights both use `U`, start-logic clears the
/// ordering constraint by exactly one, and the demand weight dominates the
/// full cost range plus the start-logic budget.
pub fn default_penalties(inst: &UcpInstance) -> PenaltyFactors {
    let t = inst.time_steps as f64;
    let i = inst.num_units() as f64;
    let total_scale: f64 = inst
        .units
        .iter()
        .map(|u| (u.var_cost * u.max_gen + u.start_cost) * t)
        .sum();
    let unit_scale = 1.0 + (total_scale / (t * i)).ceil();
    let cost_upper = cost_upper_bound(inst);
    let start_logic = unit_scale * max_min_down(inst) as f64 + 1.0;
    PenaltyFactors {
        demand: 2.0 * (cost_upper + start_logic * t * i) + unit_scale * t,
        start_logic,
        min_up: unit_scale,
        min_down: unit_scale,
    }
}

/// Check a penalty set against an instance. Nonpositive factors and a
/// start-logic weight at or below `min_down * max_i(min_down_i)` are errors;
/// a demand weight below the instance's cost upper bound is only a warning
/// (demand violations might then pay for themselves).
pub fn validate_penalties(p: &PenaltyFactors, inst: &UcpInstance) -> ValidationReport {
    let mut issues = Vec::new();
    for (value, name) in [
        (p.demand, "A"),
        (p.start_logic, "B"),
        (p.min_up, "C"),
        (p.min_down, "D"),
    ] {
        if value <= 0.0 {
            issues.push(Issue {
                severity: Severity::Error,
                path: format!("penalties.{name}"),
                message: format!("factor {name} must be > 0, got {value}"),
            });
        }
    }
    let bound = p.min_down * max_min_down(inst) as f64;
    if p.start_logic <= bound {
        issues.push(Issue {
            severity: Severity::Error,
            path: "penalties.B".into(),
            message: format!(
                "start-logic factor B = {} must strictly exceed D * max(min_down) = {}",
                p.start_logic, bound
            ),
        });
    }
    let cost_upper = cost_upper_bound(inst);
    if p.demand < cost_upper {
        issues.push(Issue {
            severity: Severity::Warning,
            path: "penalties.A".into(),
            message: format!(
                "demand factor A = {} is below the cost upper bound {}; cost savings may outweigh a demand violation",
                p.demand, cost_upper
            ),
        });
    }
    ValidationReport::from_issues(issues)
}
