//! Independent ground truth for schedules: feasibility against the MILP
//! constraint semantics, true objective cost, cost-minimal dispatch for a
//! fixed commitment pattern, and exact optimal-schedule enumeration for
//! small instances.
//!
//! Nothing here touches the QUBO machinery; agreement between this module
//! and the compiled matrices is what the test suites establish.

use serde::Serialize;
use thiserror::Error;

use crate::instance::{UcpInstance, UnitSpec};

/// Relative tolerance for the demand equality and generation bounds.
const TOL: f64 = 1e-9;

fn tol_for(scale: f64) -> f64 {
    TOL * scale.abs().max(1.0)
}

/// A full operating schedule, indexed `[t][i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub on: Vec<Vec<bool>>,
    pub start: Vec<Vec<bool>>,
    pub gen: Vec<Vec<f64>>,
}

impl Schedule {
    pub fn zeroed(time_steps: usize, num_units: usize) -> Self {
        Schedule {
            on: vec![vec![false; num_units]; time_steps],
            start: vec![vec![false; num_units]; time_steps],
            gen: vec![vec![0.0; num_units]; time_steps],
        }
    }

    fn check_sized(&self, inst: &UcpInstance) -> Result<(), ReferenceError> {
        let t = inst.time_steps;
        let i = inst.num_units();
        let ok = |m: &Vec<Vec<bool>>| m.len() == t && m.iter().all(|row| row.len() == i);
        if !ok(&self.on)
            || !ok(&self.start)
            || self.gen.len() != t
            || self.gen.iter().any(|row| row.len() != i)
        {
            return Err(ReferenceError::SizeMismatch {
                expected_t: t,
                expected_i: i,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Demand,
    MinGen,
    MaxGen,
    StartLogic,
    MinUp,
    MinDown,
    GenCoupling,
}

impl ViolationKind {
    pub fn name(&self) -> &'static str {
        match self {
            ViolationKind::Demand => "demand",
            ViolationKind::MinGen => "min_gen",
            ViolationKind::MaxGen => "max_gen",
            ViolationKind::StartLogic => "start_logic",
            ViolationKind::MinUp => "min_up",
            ViolationKind::MinDown => "min_down",
            ViolationKind::GenCoupling => "gen_coupling",
        }
    }
}

/// One broken constraint, with enough detail to render a diagnostic line
/// like `t=2 unit=1 min_up: run length 1 < 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub t: usize,
    pub unit: Option<usize>,
    pub magnitude: f64,
    pub detail: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.unit {
            Some(i) => write!(f, "t={} unit={} {}: {}", self.t, i, self.kind.name(), self.detail),
            None => write!(f, "t={} {}: {}", self.t, self.kind.name(), self.detail),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReferenceError {
    #[error("schedule shape does not match instance ({expected_t} steps x {expected_i} units)")]
    SizeMismatch { expected_t: usize, expected_i: usize },
    #[error("on-pattern shape does not match instance")]
    PatternMismatch,
    #[error("enumeration guard exceeded: {vars} commitment variables > {limit}")]
    EnumerationTooLarge { vars: usize, limit: usize },
    #[error("discrete dispatch grid too large at t={t}")]
    GridTooLarge { t: usize },
}

/// Dispatch outcome for a fixed commitment pattern: the cost-minimal
/// generation levels, or the first step where demand cannot be covered.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Dispatch {
    Feasible { gen: Vec<Vec<f64>>, cost: f64 },
    Infeasible { t: usize },
}

/// Check a schedule against every constraint family and return all
/// violations; an empty list means feasible.
pub fn check_feasible(
    inst: &UcpInstance,
    schedule: &Schedule,
) -> Result<Vec<Violation>, ReferenceError> {
    schedule.check_sized(inst)?;
    let mut violations = Vec::new();

    // Demand equality per step.
    for (t, &rd) in inst.residual_demand.iter().enumerate() {
        let total: f64 = schedule.gen[t].iter().sum();
        if (total - rd).abs() > tol_for(rd) {
            violations.push(Violation {
                kind: ViolationKind::Demand,
                t,
                unit: None,
                magnitude: (total - rd).abs(),
                detail: format!("generation {total} != residual demand {rd}"),
            });
        }
    }

    // Generation bounds and the discrete step grid.
    for t in 0..inst.time_steps {
        for (i, unit) in inst.units.iter().enumerate() {
            let on = schedule.on[t][i];
            let gen = schedule.gen[t][i];
            let lo = if on { unit.min_gen } else { 0.0 };
            let hi = if on { unit.max_gen } else { 0.0 };
            if gen < lo - tol_for(lo) {
                violations.push(Violation {
                    kind: ViolationKind::MinGen,
                    t,
                    unit: Some(i),
                    magnitude: lo - gen,
                    detail: format!("generation {gen} below minimum {lo}"),
                });
            }
            if gen > hi + tol_for(hi) {
                violations.push(Violation {
                    kind: ViolationKind::MaxGen,
                    t,
                    unit: Some(i),
                    magnitude: gen - hi,
                    detail: format!("generation {gen} above maximum {hi}"),
                });
            }
            if on && unit.step_size.is_some() {
                let step = unit.step_size.unwrap();
                let steps = (gen - unit.min_gen) / step;
                let nearest = steps.round();
                let off_grid = (steps - nearest).abs() > 1e-6;
                let out_of_range = nearest < -0.5 || nearest > unit.step_count() as f64 + 0.5;
                if off_grid || out_of_range {
                    violations.push(Violation {
                        kind: ViolationKind::GenCoupling,
                        t,
                        unit: Some(i),
                        magnitude: (steps - nearest).abs().max(1.0),
                        detail: format!("generation {gen} is not on the step grid"),
                    });
                }
            }
        }
    }

    // Start variables must cover rising edges.
    for t in 0..inst.time_steps {
        for (i, unit) in inst.units.iter().enumerate() {
            let prev = if t == 0 {
                unit.initial_on
            } else {
                schedule.on[t - 1][i]
            };
            if schedule.on[t][i] && !prev && !schedule.start[t][i] {
                violations.push(Violation {
                    kind: ViolationKind::StartLogic,
                    t,
                    unit: Some(i),
                    magnitude: 1.0,
                    detail: "unit starts without its start flag".into(),
                });
            }
        }
    }

    violations.extend(commitment_violations(inst, &schedule.on));
    Ok(violations)
}

/// Minimum up/down checks on the commitment pattern alone.
///
/// Runs and idle gaps cut off by the end of the horizon are exempt, matching
/// the horizon-clipped penalty windows of the compilers. Runs inherited from
/// `initial_on` carry no start event and are likewise unconstrained.
pub(crate) fn commitment_violations(inst: &UcpInstance, on: &[Vec<bool>]) -> Vec<Violation> {
    let t_max = inst.time_steps;
    let mut violations = Vec::new();
    for (i, unit) in inst.units.iter().enumerate() {
        // Maximal runs of commitment.
        let mut t = 0;
        while t < t_max {
            if !on[t][i] {
                t += 1;
                continue;
            }
            let run_start = t;
            while t < t_max && on[t][i] {
                t += 1;
            }
            let run_end = t - 1;
            let inherited = run_start == 0 && unit.initial_on;
            if run_end < t_max - 1 && !inherited {
                let required = unit.min_up.min(t_max - run_start);
                let length = run_end - run_start + 1;
                if length < required {
                    violations.push(Violation {
                        kind: ViolationKind::MinUp,
                        t: run_start,
                        unit: Some(i),
                        magnitude: (required - length) as f64,
                        detail: format!("run length {length} < {required}"),
                    });
                }
            }
        }
        // Idle gaps that follow a shutdown.
        let mut t = 0;
        while t < t_max {
            if on[t][i] {
                t += 1;
                continue;
            }
            let gap_start = t;
            while t < t_max && !on[t][i] {
                t += 1;
            }
            let gap_end = t - 1;
            let after_shutdown = if gap_start == 0 {
                unit.initial_on
            } else {
                on[gap_start - 1][i]
            };
            if after_shutdown && gap_end < t_max - 1 {
                let length = gap_end - gap_start + 1;
                if length < unit.min_down {
                    violations.push(Violation {
                        kind: ViolationKind::MinDown,
                        t: gap_start,
                        unit: Some(i),
                        magnitude: (unit.min_down - length) as f64,
                        detail: format!("idle gap length {length} < {}", unit.min_down),
                    });
                }
            }
        }
    }
    violations
}

/// The MILP objective: variable costs on generated power plus start costs.
pub fn true_cost(inst: &UcpInstance, schedule: &Schedule) -> Result<f64, ReferenceError> {
    schedule.check_sized(inst)?;
    let mut cost = 0.0;
    for t in 0..inst.time_steps {
        for (i, unit) in inst.units.iter().enumerate() {
            cost += unit.var_cost * schedule.gen[t][i];
            if schedule.start[t][i] {
                cost += unit.start_cost;
            }
        }
    }
    Ok(cost)
}

/// All producible levels of a committed discrete unit.
fn grid_levels(unit: &UnitSpec) -> Vec<f64> {
    let step = unit.step_size.expect("grid_levels needs a discrete unit");
    (0..=unit.step_count())
        .map(|k| unit.min_gen + k as f64 * step)
        .collect()
}

/// Cost-minimal generation for a fixed commitment pattern.
///
/// Continuous units are filled greedily in ascending variable-cost order
/// (ties by unit index) after everyone covers its minimum; discrete units
/// are enumerated over their step grids so the result is always producible.
pub fn dispatch_cost(
    inst: &UcpInstance,
    on_pattern: &[Vec<bool>],
) -> Result<Dispatch, ReferenceError> {
    if on_pattern.len() != inst.time_steps
        || on_pattern.iter().any(|row| row.len() != inst.num_units())
    {
        return Err(ReferenceError::PatternMismatch);
    }
    let mut gen = vec![vec![0.0; inst.num_units()]; inst.time_steps];
    let mut cost = 0.0;
    for t in 0..inst.time_steps {
        let rd = inst.residual_demand[t];
        let committed: Vec<usize> = (0..inst.num_units()).filter(|&i| on_pattern[t][i]).collect();
        let lo: f64 = committed.iter().map(|&i| inst.units[i].min_gen).sum();
        let hi: f64 = committed.iter().map(|&i| inst.units[i].max_gen).sum();
        if rd < lo - tol_for(rd) || rd > hi + tol_for(rd) {
            return Ok(Dispatch::Infeasible { t });
        }
        let discrete: Vec<usize> = committed
            .iter()
            .copied()
            .filter(|&i| inst.units[i].step_size.is_some())
            .collect();
        let continuous: Vec<usize> = committed
            .iter()
            .copied()
            .filter(|&i| inst.units[i].step_size.is_none())
            .collect();

        let step_cost = if discrete.is_empty() {
            match fill_continuous(inst, &continuous, rd, &mut gen[t]) {
                Some(c) => c,
                None => return Ok(Dispatch::Infeasible { t }),
            }
        } else {
            match dispatch_with_grid(inst, t, &discrete, &continuous, rd, &mut gen[t])? {
                Some(c) => c,
                None => return Ok(Dispatch::Infeasible { t }),
            }
        };
        cost += step_cost;
    }
    Ok(Dispatch::Feasible { gen, cost })
}

/// Greedy continuous fill; returns the variable cost or `None` when the
/// demand is outside the combined bounds of `units`.
fn fill_continuous(
    inst: &UcpInstance,
    units: &[usize],
    demand: f64,
    gen_row: &mut [f64],
) -> Option<f64> {
    let lo: f64 = units.iter().map(|&i| inst.units[i].min_gen).sum();
    let hi: f64 = units.iter().map(|&i| inst.units[i].max_gen).sum();
    if demand < lo - tol_for(demand) || demand > hi + tol_for(demand) {
        return None;
    }
    for &i in units {
        gen_row[i] = inst.units[i].min_gen;
    }
    let mut remainder = (demand - lo).max(0.0);
    let mut order: Vec<usize> = units.to_vec();
    order.sort_by(|&a, &b| {
        inst.units[a]
            .var_cost
            .partial_cmp(&inst.units[b].var_cost)
            .unwrap()
            .then(a.cmp(&b))
    });
    for &i in &order {
        let headroom = inst.units[i].max_gen - inst.units[i].min_gen;
        let add = remainder.min(headroom);
        gen_row[i] += add;
        remainder -= add;
        if remainder <= 0.0 {
            break;
        }
    }
    Some(units.iter().map(|&i| inst.units[i].var_cost * gen_row[i]).sum())
}

/// Enumerate discrete grid combinations and greedily fill the continuous
/// remainder for each; keeps the cheapest producible assignment.
fn dispatch_with_grid(
    inst: &UcpInstance,
    t: usize,
    discrete: &[usize],
    continuous: &[usize],
    demand: f64,
    gen_row: &mut [f64],
) -> Result<Option<f64>, ReferenceError> {
    let levels: Vec<Vec<f64>> = discrete.iter().map(|&i| grid_levels(&inst.units[i])).collect();
    let combos: usize = levels.iter().map(Vec::len).product();
    if combos > 1 << 20 {
        return Err(ReferenceError::GridTooLarge { t });
    }
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut indices = vec![0usize; discrete.len()];
    loop {
        let grid_sum: f64 = indices.iter().zip(&levels).map(|(&k, l)| l[k]).sum();
        let grid_cost: f64 = indices
            .iter()
            .zip(discrete)
            .zip(&levels)
            .map(|((&k, &i), l)| inst.units[i].var_cost * l[k])
            .sum();
        let residual = demand - grid_sum;
        let mut cont_row = vec![0.0; gen_row.len()];
        let feasible = fill_continuous(inst, continuous, residual, &mut cont_row).is_some();
        if feasible {
            let cont_cost: f64 = continuous
                .iter()
                .map(|&i| inst.units[i].var_cost * cont_row[i])
                .sum();
            let total = grid_cost + cont_cost;
            let better = match &best {
                Some((c, _, _)) => total < *c,
                None => true,
            };
            if better {
                let grid_values: Vec<f64> =
                    indices.iter().zip(&levels).map(|(&k, l)| l[k]).collect();
                best = Some((total, grid_values, cont_row));
            }
        }
        // Advance the odometer; stop once every digit has wrapped.
        let mut wrapped = true;
        for pos in (0..indices.len()).rev() {
            indices[pos] += 1;
            if indices[pos] < levels[pos].len() {
                wrapped = false;
                break;
            }
            indices[pos] = 0;
        }
        if wrapped {
            break;
        }
    }
    match best {
        Some((cost, grid_values, cont_row)) => {
            for (&i, &v) in discrete.iter().zip(&grid_values) {
                gen_row[i] = v;
            }
            for &i in continuous {
                gen_row[i] = cont_row[i];
            }
            Ok(Some(cost))
        }
        None => Ok(None),
    }
}

/// Exact optimum over all commitment patterns.
#[derive(Debug, Clone, Serialize)]
pub struct OptimalResult {
    /// Minimum total cost, absent when no feasible schedule exists.
    pub best_cost: Option<f64>,
    /// Every cost-minimal schedule, ordered lexicographically by flattened
    /// commitment pattern.
    pub schedules: Vec<Schedule>,
    pub explored: u64,
}

const ENUMERATION_LIMIT: usize = 24;

/// Enumerate all `2^(T*I)` commitment patterns, derive start flags as
/// rising edges, dispatch each step, and return every minimizer.
pub fn enumerate_optimal(inst: &UcpInstance) -> Result<OptimalResult, ReferenceError> {
    let vars = inst.time_steps * inst.num_units();
    if vars > ENUMERATION_LIMIT {
        return Err(ReferenceError::EnumerationTooLarge {
            vars,
            limit: ENUMERATION_LIMIT,
        });
    }
    let t_max = inst.time_steps;
    let i_max = inst.num_units();
    let mut best_cost: Option<f64> = None;
    let mut minimizers: Vec<Schedule> = Vec::new();
    for mask in 0u64..(1 << vars) {
        let on: Vec<Vec<bool>> = (0..t_max)
            .map(|t| (0..i_max).map(|i| mask & (1 << (t * i_max + i)) != 0).collect())
            .collect();
        if !commitment_violations(inst, &on).is_empty() {
            continue;
        }
        let dispatch = dispatch_cost(inst, &on)?;
        let (gen, dispatch_total) = match dispatch {
            Dispatch::Feasible { gen, cost } => (gen, cost),
            Dispatch::Infeasible { .. } => continue,
        };
        let start = derive_starts(inst, &on);
        let start_total: f64 = (0..t_max)
            .flat_map(|t| (0..i_max).map(move |i| (t, i)))
            .filter(|&(t, i)| start[t][i])
            .map(|(_, i)| inst.units[i].start_cost)
            .sum();
        let cost = dispatch_total + start_total;
        let better = match best_cost {
            Some(b) => cost < b,
            None => true,
        };
        if better {
            best_cost = Some(cost);
            minimizers.clear();
        }
        if best_cost == Some(cost) {
            minimizers.push(Schedule { on, start, gen });
        }
    }
    minimizers.sort_by(|a, b| {
        let fa: Vec<bool> = a.on.iter().flatten().copied().collect();
        let fb: Vec<bool> = b.on.iter().flatten().copied().collect();
        fa.cmp(&fb)
    });
    Ok(OptimalResult {
        best_cost,
        schedules: minimizers,
        explored: 1 << vars,
    })
}

/// Start flags as rising-edge indicators of the commitment pattern.
pub fn derive_starts(inst: &UcpInstance, on: &[Vec<bool>]) -> Vec<Vec<bool>> {
    (0..inst.time_steps)
        .map(|t| {
            (0..inst.num_units())
                .map(|i| {
                    let prev = if t == 0 {
                        inst.units[i].initial_on
                    } else {
                        on[t - 1][i]
                    };
                    on[t][i] && !prev
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::two_unit_example;
    use proptest::prelude::*;

    /// The known optimal schedule of the built-in example.
    fn optimal_schedule() -> Schedule {
        let inst = two_unit_example();
        let on_steps: [&[usize]; 2] = [&[1, 2, 3], &[0, 1, 3, 4]];
        let mut s = Schedule::zeroed(5, 2);
        for (i, steps) in on_steps.iter().enumerate() {
            for &t in *steps {
                s.on[t][i] = true;
                s.gen[t][i] = inst.units[i].max_gen;
            }
        }
        let starts = derive_starts(&inst, &s.on);
        s.start = starts;
        s
    }

    #[test]
    fn optimal_schedule_is_feasible_with_cost_370() {
        let inst = two_unit_example();
        let s = optimal_schedule();
        assert!(check_feasible(&inst, &s).unwrap().is_empty());
        assert_eq!(true_cost(&inst, &s).unwrap(), 370.0);
    }

    #[test]
    fn runner_up_schedule_is_feasible_with_cost_410() {
        let inst = two_unit_example();
        let mut s = Schedule::zeroed(5, 2);
        for &t in &[1usize, 3] {
            s.on[t][0] = true;
            s.gen[t][0] = 1.0;
        }
        for t in 0..5 {
            s.on[t][1] = true;
            s.gen[t][1] = 1.0;
        }
        s.start = derive_starts(&inst, &s.on);
        assert!(check_feasible(&inst, &s).unwrap().is_empty());
        assert_eq!(true_cost(&inst, &s).unwrap(), 410.0);
    }

    #[test]
    fn all_off_schedule_costs_nothing() {
        let inst = two_unit_example();
        let s = Schedule::zeroed(5, 2);
        assert_eq!(true_cost(&inst, &s).unwrap(), 0.0);
    }

    #[test]
    fn shortened_run_triggers_min_up_and_demand() {
        let inst = two_unit_example();
        let mut s = optimal_schedule();
        s.on[4][1] = false;
        s.gen[4][1] = 0.0;
        let violations = check_feasible(&inst, &s).unwrap();
        assert!(violations
            .iter()
            .any(|v| v.kind == ViolationKind::MinUp && v.t == 3 && v.unit == Some(1)));
        assert!(violations
            .iter()
            .any(|v| v.kind == ViolationKind::Demand && v.t == 4));
        assert_eq!(violations.len(), 2);
    }

    #[test]
    fn violation_renders_a_readable_line() {
        let v = Violation {
            kind: ViolationKind::MinUp,
            t: 2,
            unit: Some(1),
            magnitude: 1.0,
            detail: "run length 1 < 2".into(),
        };
        assert_eq!(v.to_string(), "t=2 unit=1 min_up: run length 1 < 2");
    }

    #[test]
    fn missing_start_flag_is_flagged() {
        let inst = two_unit_example();
        let mut s = optimal_schedule();
        s.start[1][0] = false;
        let violations = check_feasible(&inst, &s).unwrap();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].kind, ViolationKind::StartLogic);
        assert_eq!((violations[0].t, violations[0].unit), (1, Some(0)));
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let inst = two_unit_example();
        let s = Schedule::zeroed(4, 2);
        assert!(matches!(
            check_feasible(&inst, &s),
            Err(ReferenceError::SizeMismatch { .. })
        ));
    }

    #[test]
    fn dispatch_degenerate_box() {
        let inst = two_unit_example();
        let on = vec![vec![true, true]];
        let mut one_step = inst.clone();
        one_step.time_steps = 1;
        one_step.residual_demand = vec![2.0];
        match dispatch_cost(&one_step, &on).unwrap() {
            Dispatch::Feasible { gen, cost } => {
                assert_eq!(gen, vec![vec![1.0, 1.0]]);
                assert_eq!(cost, 75.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dispatch_fills_cheapest_unit_first() {
        let mut inst = two_unit_example();
        inst.time_steps = 1;
        inst.residual_demand = vec![3.0];
        inst.units[0].min_gen = 0.0;
        inst.units[0].max_gen = 2.0;
        inst.units[0].var_cost = 10.0;
        inst.units[1].min_gen = 0.0;
        inst.units[1].max_gen = 2.0;
        inst.units[1].var_cost = 20.0;
        match dispatch_cost(&inst, &[vec![true, true]]).unwrap() {
            Dispatch::Feasible { gen, cost } => {
                assert_eq!(gen, vec![vec![2.0, 1.0]]);
                assert_eq!(cost, 40.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dispatch_reports_unreachable_demand() {
        let mut inst = two_unit_example();
        inst.time_steps = 1;
        inst.residual_demand = vec![2.0];
        match dispatch_cost(&inst, &[vec![true, false]]).unwrap() {
            Dispatch::Infeasible { t } => assert_eq!(t, 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn enumerate_finds_the_example_optimum() {
        let inst = two_unit_example();
        let result = enumerate_optimal(&inst).unwrap();
        assert_eq!(result.best_cost, Some(370.0));
        assert_eq!(result.explored, 1 << 10);
        let expected = optimal_schedule();
        assert!(result.schedules.iter().any(|s| s.on == expected.on));
    }

    #[test]
    fn enumerate_zero_demand_prefers_all_off() {
        let mut inst = two_unit_example();
        inst.residual_demand = vec![0.0; 5];
        let result = enumerate_optimal(&inst).unwrap();
        assert_eq!(result.best_cost, Some(0.0));
        assert!(result.schedules[0].on.iter().flatten().all(|&b| !b));
    }

    #[test]
    fn enumerate_single_step_single_unit() {
        let mut inst = two_unit_example();
        inst.units.truncate(1);
        inst.time_steps = 1;
        inst.residual_demand = vec![1.0];
        let result = enumerate_optimal(&inst).unwrap();
        assert_eq!(result.best_cost, Some(80.0));
        assert_eq!(result.schedules.len(), 1);
        assert!(result.schedules[0].start[0][0]);
    }

    #[test]
    fn enumerate_guard_rejects_large_instances() {
        let mut inst = two_unit_example();
        inst.time_steps = 13;
        inst.residual_demand = vec![1.0; 13];
        assert!(matches!(
            enumerate_optimal(&inst),
            Err(ReferenceError::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn derived_starts_satisfy_start_logic() {
        let inst = two_unit_example();
        for mask in 0u64..(1 << 10) {
            let on: Vec<Vec<bool>> = (0..5)
                .map(|t| (0..2).map(|i| mask & (1 << (t * 2 + i)) != 0).collect())
                .collect();
            let start = derive_starts(&inst, &on);
            for t in 0..5 {
                for i in 0..2 {
                    let prev = if t == 0 { false } else { on[t - 1][i] };
                    let rising = on[t][i] && !prev;
                    assert!(!rising || start[t][i]);
                    // Slack of the MILP inequality is 0 or 1.
                    let slack = i64::from(start[t][i]) - i64::from(on[t][i])
                        + i64::from(prev);
                    assert!(slack == 0 || slack == 1);
                }
            }
        }
    }

    #[test]
    fn inherited_run_is_exempt_from_min_up() {
        let mut inst = two_unit_example();
        inst.units[1].initial_on = true;
        // Unit 1 is on only at t = 0 (inherited), off afterwards.
        let mut on = vec![vec![false, false]; 5];
        on[0][1] = true;
        let violations = commitment_violations(&inst, &on);
        assert!(violations.iter().all(|v| v.kind != ViolationKind::MinUp));
    }

    #[test]
    fn shutdown_from_initial_state_respects_min_down() {
        let mut inst = two_unit_example();
        inst.units[0].initial_on = true;
        inst.units[0].min_down = 3;
        // Off at t=0..1, restart at t=2: gap of 2 < 3.
        let mut on = vec![vec![false, false]; 5];
        on[2][0] = true;
        on[3][0] = true;
        on[4][0] = true;
        let violations = commitment_violations(&inst, &on);
        assert!(violations
            .iter()
            .any(|v| v.kind == ViolationKind::MinDown && v.t == 0 && v.unit == Some(0)));
    }

    proptest! {
        /// Greedy continuous fill matches brute force over unit step grids
        /// for integral data.
        #[test]
        fn greedy_dispatch_is_optimal(
            bounds in proptest::collection::vec((0u32..3, 0u32..4, 1u32..30), 1..4),
            demand in 0u32..12,
        ) {
            let units: Vec<crate::instance::UnitSpec> = bounds
                .iter()
                .enumerate()
                .map(|(k, &(lo, extra, vc))| crate::instance::UnitSpec {
                    name: format!("u{k}"),
                    min_gen: f64::from(lo),
                    max_gen: f64::from(lo + extra),
                    min_up: 1,
                    min_down: 1,
                    start_cost: 0.0,
                    var_cost: f64::from(vc),
                    step_size: None,
                    initial_on: false,
                })
                .collect();
            let inst = crate::instance::UcpInstance {
                name: "dispatch".into(),
                time_steps: 1,
                residual_demand: vec![f64::from(demand)],
                units,
            };
            let on = vec![vec![true; inst.num_units()]];
            let greedy = dispatch_cost(&inst, &on).unwrap();

            // Oracle: enumerate all integral allocations.
            let mut best: Option<f64> = None;
            let ranges: Vec<(u32, u32)> = bounds.iter().map(|&(lo, extra, _)| (lo, lo + extra)).collect();
            let mut alloc: Vec<u32> = ranges.iter().map(|&(lo, _)| lo).collect();
            loop {
                let total: u32 = alloc.iter().sum();
                if total == demand {
                    let cost: f64 = alloc
                        .iter()
                        .zip(&bounds)
                        .map(|(&g, &(_, _, vc))| f64::from(g) * f64::from(vc))
                        .sum();
                    best = Some(best.map_or(cost, |b: f64| b.min(cost)));
                }
                let mut pos = alloc.len();
                loop {
                    if pos == 0 { break; }
                    pos -= 1;
                    alloc[pos] += 1;
                    if alloc[pos] <= ranges[pos].1 { break; }
                    alloc[pos] = ranges[pos].0;
                    if pos == 0 { pos = usize::MAX; break; }
                }
                if pos == usize::MAX { break; }
                if alloc.iter().zip(&ranges).all(|(&g, &(lo, _))| g == lo) { break; }
            }

            match (greedy, best) {
                (Dispatch::Feasible { cost, .. }, Some(expected)) => {
                    prop_assert!((cost - expected).abs() < 1e-9, "greedy {cost} vs oracle {expected}");
                }
                (Dispatch::Infeasible { .. }, None) => {}
                (g, b) => prop_assert!(false, "disagreement: {g:?} vs {b:?}"),
            }
        }
    }
}
