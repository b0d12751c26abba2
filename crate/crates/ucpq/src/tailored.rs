//! The compact QUBO formulation: cost objective plus four penalty families
//! (demand, start logic, minimum up-time, minimum down-time) and, for units
//! with a step size, the discrete generation encoding with its on/gen
//! coupling penalty.
//!
//! No slack variables are introduced; constraints are expressed through
//! products of the schedule variables themselves, which keeps both the
//! variable count and the coupling count low.

use serde::Serialize;
use thiserror::Error;

use crate::instance::{validate_instance, UcpInstance, ValidationReport};
use crate::layout::{gen_bit_weights, VariableLayout};
use crate::penalty::{validate_penalties, PenaltyFactors};
use crate::qubo::QuboMatrix;
use crate::reference::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Tailored,
    Generic,
}

impl Formulation {
    pub fn name(&self) -> &'static str {
        match self {
            Formulation::Tailored => "tailored",
            Formulation::Generic => "generic",
        }
    }
}

/// A compiled matrix together with everything needed to decode its
/// bitstrings.
#[derive(Debug, Clone)]
pub struct CompiledQubo {
    pub matrix: QuboMatrix,
    pub layout: VariableLayout,
    pub penalties: PenaltyFactors,
    pub formulation: Formulation,
    pub instance_name: String,
}

impl CompiledQubo {
    /// JSON sidecar describing the compiled artifact's variable order.
    pub fn sidecar_json(&self) -> String {
        serde_json::json!({
            "formulation": self.formulation.name(),
            "penalties": {
                "A": self.penalties.demand,
                "B": self.penalties.start_logic,
                "C": self.penalties.min_up,
                "D": self.penalties.min_down,
            },
            "layout": {
                "T": self.layout.time_steps,
                "I": self.layout.num_units,
                "gen_widths": self.layout.gen_widths,
                "slack_bits": self.layout.slack_bits,
                "ordering": "on,start,gen; t-major, i-minor",
            },
        })
        .to_string()
    }
}

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid penalties: {0}")]
    InvalidPenalties(String),
    #[error("generic transformation does not support discrete generation units")]
    DiscreteUnsupported,
    #[error("bit vector of length {actual} does not match layout size {expected}")]
    LengthMismatch { expected: usize, actual: usize },
}

fn report_errors(report: &ValidationReport) -> String {
    report
        .errors()
        .map(|i| format!("{}: {}", i.path, i.message))
        .collect::<Vec<_>>()
        .join("; ")
}

pub(crate) fn check_inputs(
    inst: &UcpInstance,
    p: &PenaltyFactors,
) -> Result<(), CompileError> {
    let inst_report = validate_instance(inst);
    if !inst_report.ok {
        return Err(CompileError::InvalidInstance(report_errors(&inst_report)));
    }
    let pen_report = validate_penalties(p, inst);
    if !pen_report.ok {
        return Err(CompileError::InvalidPenalties(report_errors(&pen_report)));
    }
    Ok(())
}

/// A linear expression over binary variables: terms plus a constant.
pub(crate) struct LinearForm {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinearForm {
    pub fn new() -> Self {
        LinearForm {
            terms: Vec::new(),
            constant: 0.0,
        }
    }

    pub fn term(mut self, var: usize, coeff: f64) -> Self {
        self.terms.push((var, coeff));
        self
    }

    pub fn plus(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }
}

/// Accumulate `factor * (sum_k c_k x_k + c0)^2` into the matrix. Constant
/// parts go to the offset; squares land on the diagonal because `x^2 = x`.
pub(crate) fn add_squared(q: &mut QuboMatrix, factor: f64, form: &LinearForm) {
    for (a, &(va, ca)) in form.terms.iter().enumerate() {
        q.add_term(va, va, factor * ca * ca).unwrap();
        q.add_term(va, va, 2.0 * factor * ca * form.constant).unwrap();
        for &(vb, cb) in &form.terms[a + 1..] {
            q.add_term(va, vb, 2.0 * factor * ca * cb).unwrap();
        }
    }
    q.add_offset(factor * form.constant * form.constant);
}

/// Accumulate `factor * (lhs) * (rhs)` for two linear forms.
pub(crate) fn add_product(q: &mut QuboMatrix, factor: f64, lhs: &LinearForm, rhs: &LinearForm) {
    for &(va, ca) in &lhs.terms {
        for &(vb, cb) in &rhs.terms {
            q.add_term(va, vb, factor * ca * cb).unwrap();
        }
        q.add_term(va, va, factor * ca * rhs.constant).unwrap();
    }
    for &(vb, cb) in &rhs.terms {
        q.add_term(vb, vb, factor * cb * lhs.constant).unwrap();
    }
    q.add_offset(factor * lhs.constant * rhs.constant);
}

/// The power output of unit `i` at step `t` as a linear form:
/// `max_gen * on` for all-or-nothing units, or
/// `min_gen * on + step * sum_k w_k gen_k` in discrete mode.
pub(crate) fn power_expression(
    inst: &UcpInstance,
    layout: &VariableLayout,
    t: usize,
    i: usize,
) -> LinearForm {
    let unit = &inst.units[i];
    let width = layout.gen_widths[i];
    if width == 0 {
        return LinearForm::new().term(layout.on(t, i), unit.max_gen);
    }
    let step = unit.step_size.expect("discrete unit must carry a step size");
    let weights = gen_bit_weights(unit.step_count(), width);
    let mut form = LinearForm::new().term(layout.on(t, i), unit.min_gen);
    for (k, &w) in weights.iter().enumerate() {
        form = form.term(layout.gen(t, i, k), w * step);
    }
    form
}

/// `sum_t sum_i var_cost_i * P(t,i) + start_cost_i * start(t,i)`.
pub(crate) fn add_cost_objective(q: &mut QuboMatrix, inst: &UcpInstance, layout: &VariableLayout) {
    for t in 0..inst.time_steps {
        for (i, unit) in inst.units.iter().enumerate() {
            let power = power_expression(inst, layout, t, i);
            for &(var, coeff) in &power.terms {
                q.add_term(var, var, unit.var_cost * coeff).unwrap();
            }
            let s = layout.start(t, i);
            q.add_term(s, s, unit.start_cost).unwrap();
        }
    }
}

/// `A * sum_t (sum_i P(t,i) - rd_t)^2`; the constant `A * rd_t^2` lands in
/// the offset.
pub(crate) fn add_demand_penalty(
    q: &mut QuboMatrix,
    inst: &UcpInstance,
    layout: &VariableLayout,
    a: f64,
) {
    for t in 0..inst.time_steps {
        let mut form = LinearForm::new().plus(-inst.residual_demand[t]);
        for i in 0..inst.num_units() {
            let power = power_expression(inst, layout, t, i);
            form.terms.extend(power.terms);
        }
        add_squared(q, a, &form);
    }
}

/// The previous-step commitment as a linear form: the variable `on(t-1, i)`,
/// or the constant `initial_on` at the first step.
fn prev_on(inst: &UcpInstance, layout: &VariableLayout, t: usize, i: usize) -> LinearForm {
    if t == 0 {
        LinearForm::new().plus(f64::from(inst.units[i].initial_on))
    } else {
        LinearForm::new().term(layout.on(t - 1, i), 1.0)
    }
}

/// `B * sum_{t,i} [on_t(1 - on_{t-1}) + 2 start(on_{t-1} + 1 - on_t) - start]`.
///
/// The bracket is zero exactly when `start` equals the rising-edge
/// indicator `on_t AND NOT on_{t-1}` and at least one otherwise.
fn add_start_logic_penalty(
    q: &mut QuboMatrix,
    inst: &UcpInstance,
    layout: &VariableLayout,
    b: f64,
) {
    for t in 0..inst.time_steps {
        for i in 0..inst.num_units() {
            let on_t = layout.on(t, i);
            let start = layout.start(t, i);
            let prev = prev_on(inst, layout, t, i);

            let on_form = LinearForm::new().term(on_t, 1.0);
            let mut one_minus_prev = LinearForm::new().plus(1.0 - prev.constant);
            for &(v, c) in &prev.terms {
                one_minus_prev = one_minus_prev.term(v, -c);
            }
            add_product(q, b, &on_form, &one_minus_prev);

            let start_form = LinearForm::new().term(start, 1.0);
            let mut gate = LinearForm::new().plus(1.0 + prev.constant).term(on_t, -1.0);
            for &(v, c) in &prev.terms {
                gate = gate.term(v, c);
            }
            add_product(q, 2.0 * b, &start_form, &gate);

            q.add_term(start, start, -b).unwrap();
        }
    }
}

/// Window length of the min-up requirement starting at `t`, clipped to the
/// horizon.
pub(crate) fn up_window(min_up: usize, t: usize, time_steps: usize) -> usize {
    min_up.min(time_steps - t)
}

/// `C * sum_{t,i} start * (w_up(t,i) - sum_{tau in window} on_tau)`:
/// a start must be followed by a full (possibly horizon-clipped) run.
fn add_min_up_penalty(q: &mut QuboMatrix, inst: &UcpInstance, layout: &VariableLayout, c: f64) {
    for t in 0..inst.time_steps {
        for (i, unit) in inst.units.iter().enumerate() {
            let start = layout.start(t, i);
            let w = up_window(unit.min_up, t, inst.time_steps);
            q.add_term(start, start, c * w as f64).unwrap();
            for tau in t..(t + unit.min_up).min(inst.time_steps) {
                q.add_term(start, layout.on(tau, i), -c).unwrap();
            }
        }
    }
}

/// `D * sum_{t,i} sum_{tau in window} (start + on_{t-1} - on_t) * on_tau`:
/// with correctly wired starts the left factor is the shutdown indicator,
/// so any recommitment inside the idle window is penalized. The `tau = t`
/// product `on_t * on_t` folds onto the diagonal.
fn add_min_down_penalty(q: &mut QuboMatrix, inst: &UcpInstance, layout: &VariableLayout, d: f64) {
    for t in 0..inst.time_steps {
        for (i, unit) in inst.units.iter().enumerate() {
            let mut edge = LinearForm::new()
                .term(layout.start(t, i), 1.0)
                .term(layout.on(t, i), -1.0);
            let prev = prev_on(inst, layout, t, i);
            edge.terms.extend(prev.terms);
            edge.constant += prev.constant;
            for tau in t..(t + unit.min_down).min(inst.time_steps) {
                let on_tau = LinearForm::new().term(layout.on(tau, i), 1.0);
                add_product(q, d, &edge, &on_tau);
            }
        }
    }
}

/// `A * sum_{t,i} (1 - on) * sum_k gen_k`: generation bits of a unit that is
/// not committed are forced to zero.
fn add_gen_coupling_penalty(
    q: &mut QuboMatrix,
    inst: &UcpInstance,
    layout: &VariableLayout,
    a: f64,
) {
    for t in 0..inst.time_steps {
        for i in 0..inst.num_units() {
            let on = layout.on(t, i);
            for k in 0..layout.gen_widths[i] {
                let g = layout.gen(t, i, k);
                q.add_term(g, g, a).unwrap();
                q.add_term(on, g, -a).unwrap();
            }
        }
    }
}

/// Penalty factors of the built-in two-unit example as published alongside
/// its reference solution.
pub const EXAMPLE_PENALTIES: PenaltyFactors = PenaltyFactors {
    demand: 1900.0,
    start_logic: 97.0,
    min_up: 96.0,
    min_down: 96.0,
};

/// The optimal bitstring of the built-in two-unit example in layout order;
/// its energy is 370 with the offset and -20530 without.
pub const EXAMPLE_OPTIMAL_BITS: [u8; 20] =
    [0, 1, 1, 1, 1, 0, 1, 1, 0, 1, 0, 1, 1, 0, 0, 0, 0, 1, 0, 0];

/// The published feasible runner-up that swaps unit occupancy at t = 2;
/// cost 410, raw energy -20490.
pub const EXAMPLE_RUNNER_UP_BITS: [u8; 20] =
    [0, 1, 1, 1, 0, 1, 1, 1, 0, 1, 0, 1, 1, 0, 0, 0, 1, 0, 0, 0];

/// Compile the tailored QUBO for a validated instance and penalty set.
pub fn compile_tailored(
    inst: &UcpInstance,
    p: &PenaltyFactors,
) -> Result<CompiledQubo, CompileError> {
    check_inputs(inst, p)?;
    let layout = VariableLayout::for_instance(inst);
    let mut q = QuboMatrix::new(layout.total());
    add_cost_objective(&mut q, inst, &layout);
    add_demand_penalty(&mut q, inst, &layout, p.demand);
    add_start_logic_penalty(&mut q, inst, &layout, p.start_logic);
    add_min_up_penalty(&mut q, inst, &layout, p.min_up);
    add_min_down_penalty(&mut q, inst, &layout, p.min_down);
    if inst.has_discrete_units() {
        add_gen_coupling_penalty(&mut q, inst, &layout, p.demand);
    }
    Ok(CompiledQubo {
        matrix: q,
        layout,
        penalties: *p,
        formulation: Formulation::Tailored,
        instance_name: inst.name.clone(),
    })
}

/// Read a bitstring back into a schedule through the layout. Generation is
/// `max_gen * on` for all-or-nothing units and the decoded step expression
/// in discrete mode; slack bits (if any) are ignored.
pub fn decode(
    x: &[u8],
    layout: &VariableLayout,
    inst: &UcpInstance,
) -> Result<Schedule, CompileError> {
    if x.len() != layout.total() {
        return Err(CompileError::LengthMismatch {
            expected: layout.total(),
            actual: x.len(),
        });
    }
    let t_max = inst.time_steps;
    let i_max = inst.num_units();
    let mut schedule = Schedule::zeroed(t_max, i_max);
    for t in 0..t_max {
        for i in 0..i_max {
            let on = x[layout.on(t, i)] != 0;
            let start = x[layout.start(t, i)] != 0;
            schedule.on[t][i] = on;
            schedule.start[t][i] = start;
            let unit = &inst.units[i];
            let width = layout.gen_widths[i];
            schedule.gen[t][i] = if width == 0 {
                if on {
                    unit.max_gen
                } else {
                    0.0
                }
            } else {
                let step = unit.step_size.expect("discrete unit must carry a step size");
                let weights = gen_bit_weights(unit.step_count(), width);
                let encoded: f64 = (0..width)
                    .filter(|&k| x[layout.gen(t, i, k)] != 0)
                    .map(|k| weights[k])
                    .sum();
                f64::from(on) * unit.min_gen + encoded * step
            };
        }
    }
    Ok(schedule)
}

/// Per-variable weights of the (linear) cost objective: `dot(weights, x)`
/// equals the objective value of the decoded schedule for every bitstring.
/// Slack variables weigh nothing.
pub fn cost_weights(inst: &UcpInstance, layout: &VariableLayout) -> Vec<f64> {
    let mut weights = vec![0.0; layout.total()];
    for t in 0..inst.time_steps {
        for (i, unit) in inst.units.iter().enumerate() {
            weights[layout.start(t, i)] = unit.start_cost;
            let power = power_expression(inst, layout, t, i);
            for &(var, coeff) in &power.terms {
                weights[var] += unit.var_cost * coeff;
            }
        }
    }
    weights
}

/// The objective part of a compiled matrix evaluated on a decoded schedule:
/// variable cost on generated power plus start costs. Subtracting it from a
/// bitstring's energy isolates the penalty part.
pub fn objective_value(inst: &UcpInstance, schedule: &Schedule) -> f64 {
    let mut cost = 0.0;
    for t in 0..inst.time_steps {
        for (i, unit) in inst.units.iter().enumerate() {
            cost += unit.var_cost * schedule.gen[t][i];
            if schedule.start[t][i] {
                cost += unit.start_cost;
            }
        }
    }
    cost
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{two_unit_example, UnitSpec};
    use crate::penalty::default_penalties;

    fn worked_penalties() -> PenaltyFactors {
        EXAMPLE_PENALTIES
    }

    const OPTIMAL_BITS: [u8; 20] = EXAMPLE_OPTIMAL_BITS;
    const SUBOPTIMAL_BITS: [u8; 20] = EXAMPLE_RUNNER_UP_BITS;

    #[test]
    fn example_energies_match_reference_values() {
        let c = compile_tailored(&two_unit_example(), &worked_penalties()).unwrap();
        assert_eq!(c.matrix.n(), 20);
        assert_eq!(c.matrix.offset(), 20900.0);
        assert_eq!(c.matrix.energy(&OPTIMAL_BITS).unwrap(), 370.0);
        assert_eq!(c.matrix.raw_energy(&OPTIMAL_BITS).unwrap(), -20530.0);
        assert_eq!(c.matrix.energy(&SUBOPTIMAL_BITS).unwrap(), 410.0);
        assert_eq!(c.matrix.raw_energy(&SUBOPTIMAL_BITS).unwrap(), -20490.0);
    }

    #[test]
    fn example_matrix_entries_spot_check() {
        let inst = two_unit_example();
        let c = compile_tailored(&inst, &worked_penalties()).unwrap();
        let l = &c.layout;
        let q = &c.matrix;
        // Diagonals: objective + demand + start-logic + min-down fold.
        assert_eq!(q.get(l.on(1, 0), l.on(1, 0)), 30.0 - 5700.0 + 97.0 - 96.0);
        assert_eq!(q.get(l.on(0, 1), l.on(0, 1)), 45.0 - 1900.0 + 97.0 - 96.0);
        // Start diagonals; unit 1's min-up window clips at the horizon.
        assert_eq!(q.get(l.start(2, 0), l.start(2, 0)), 50.0 + 97.0 + 96.0);
        assert_eq!(q.get(l.start(1, 1), l.start(1, 1)), 25.0 + 97.0 + 192.0);
        assert_eq!(q.get(l.start(4, 1), l.start(4, 1)), 25.0 + 97.0 + 96.0);
        // Demand coupling within a step.
        assert_eq!(q.get(l.on(1, 0), l.on(1, 1)), 2.0 * 1900.0);
        // Consecutive commitments: -B from start logic, +D from min-down.
        assert_eq!(q.get(l.on(0, 0), l.on(1, 0)), -1.0);
        // Start against same-step commitment: -2B - C + D.
        assert_eq!(q.get(l.start(1, 0), l.on(1, 0)), -194.0);
        // Start against previous commitment: +2B.
        assert_eq!(q.get(l.start(2, 0), l.on(1, 0)), 194.0);
        // Unit 1's min-up reaches one step ahead.
        assert_eq!(q.get(l.start(0, 1), l.on(1, 1)), -96.0);
        assert_eq!(q.get(l.start(0, 0), l.on(1, 0)), 0.0);
    }

    #[test]
    fn example_matrix_statistics() {
        let c = compile_tailored(&two_unit_example(), &worked_penalties()).unwrap();
        let m = c.matrix.metrics();
        assert_eq!(m.n, 20);
        assert_eq!(m.cells, 400);
        assert_eq!(m.nnz, 55);
        assert_eq!(m.density, 0.1375);
        assert_eq!(m.max_incident, 5);
        assert_eq!(m.couplings, 35);
    }

    #[test]
    fn example_ising_identity_at_the_optimum() {
        let c = compile_tailored(&two_unit_example(), &worked_penalties()).unwrap();
        let m = c.matrix.to_ising();
        let spins: Vec<i8> = OPTIMAL_BITS.iter().map(|&b| 2 * b as i8 - 1).collect();
        assert_eq!(m.energy(&spins).unwrap() + m.offset, 370.0);
    }

    #[test]
    fn example_dense_export_has_55_nonzero_cells() {
        let c = compile_tailored(&two_unit_example(), &worked_penalties()).unwrap();
        let csv = c.matrix.export(crate::qubo::MatrixFormat::DenseCsv);
        let nonzero = csv
            .lines()
            .flat_map(|line| line.split(','))
            .filter(|cell| *cell != "0")
            .count();
        assert_eq!(nonzero, 55);
        assert_eq!(csv.lines().count(), 20);
    }

    #[test]
    fn compile_rejects_bad_penalties() {
        let inst = two_unit_example();
        let p = PenaltyFactors::new(1900.0, 96.0, 96.0, 96.0);
        assert!(matches!(
            compile_tailored(&inst, &p),
            Err(CompileError::InvalidPenalties(_))
        ));
    }

    #[test]
    fn compile_rejects_bad_instance() {
        let mut inst = two_unit_example();
        inst.units[0].min_up = 0;
        assert!(matches!(
            compile_tailored(&inst, &default_penalties(&two_unit_example())),
            Err(CompileError::InvalidInstance(_))
        ));
    }

    #[test]
    fn start_logic_case_table() {
        // Isolate the start-logic bracket for (prev, on, start) by building
        // it alone into a fresh matrix over three binary variables.
        let layout = VariableLayout::with_widths(2, 1, vec![0], 0);
        let inst = UcpInstance {
            name: "probe".into(),
            time_steps: 2,
            residual_demand: vec![0.0, 0.0],
            units: vec![UnitSpec {
                name: "u".into(),
                min_gen: 1.0,
                max_gen: 1.0,
                min_up: 1,
                min_down: 1,
                start_cost: 0.0,
                var_cost: 0.0,
                step_size: None,
                initial_on: false,
            }],
        };
        let mut q = QuboMatrix::new(layout.total());
        add_start_logic_penalty(&mut q, &inst, &layout, 1.0);
        for prev in 0..2u8 {
            for on in 0..2u8 {
                for start in 0..2u8 {
                    // Keep step 0 quiet (no start there) and read off the
                    // t = 1 bracket through an energy difference.
                    let mut bits = vec![0u8; 4];
                    bits[layout.on(0, 0)] = prev;
                    bits[layout.on(1, 0)] = on;
                    bits[layout.start(1, 0)] = start;
                    let t0_part = f64::from(prev); // rising edge at t = 0 without a start
                    let bracket = q.raw_energy(&bits).unwrap() - t0_part;
                    let wired = on == 1 && prev == 0;
                    let expected_zero = (start == 1) == wired;
                    if expected_zero {
                        assert_eq!(bracket, 0.0, "prev={prev} on={on} start={start}");
                    } else {
                        assert!(bracket >= 1.0, "prev={prev} on={on} start={start}: {bracket}");
                    }
                }
            }
        }
    }

    #[test]
    fn decode_reads_the_optimal_bitstring() {
        let inst = two_unit_example();
        let c = compile_tailored(&inst, &worked_penalties()).unwrap();
        let s = decode(&OPTIMAL_BITS, &c.layout, &inst).unwrap();
        let on_u0: Vec<usize> = (0..5).filter(|&t| s.on[t][0]).collect();
        let on_u1: Vec<usize> = (0..5).filter(|&t| s.on[t][1]).collect();
        assert_eq!(on_u0, vec![1, 2, 3]);
        assert_eq!(on_u1, vec![0, 1, 3, 4]);
        let starts_u0: Vec<usize> = (0..5).filter(|&t| s.start[t][0]).collect();
        let starts_u1: Vec<usize> = (0..5).filter(|&t| s.start[t][1]).collect();
        assert_eq!(starts_u0, vec![1]);
        assert_eq!(starts_u1, vec![0, 3]);
        assert_eq!(s.gen[1][0], 1.0);
        assert_eq!(s.gen[0][0], 0.0);
    }

    #[test]
    fn decode_reads_the_suboptimal_bitstring() {
        let inst = two_unit_example();
        let c = compile_tailored(&inst, &worked_penalties()).unwrap();
        let s = decode(&SUBOPTIMAL_BITS, &c.layout, &inst).unwrap();
        let on_u0: Vec<usize> = (0..5).filter(|&t| s.on[t][0]).collect();
        let on_u1: Vec<usize> = (0..5).filter(|&t| s.on[t][1]).collect();
        assert_eq!(on_u0, vec![1, 3]);
        assert_eq!(on_u1, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn decode_all_zeros() {
        let inst = two_unit_example();
        let c = compile_tailored(&inst, &worked_penalties()).unwrap();
        let s = decode(&[0; 20], &c.layout, &inst).unwrap();
        assert!(s.on.iter().flatten().all(|&b| !b));
        assert!(s.gen.iter().flatten().all(|&g| g == 0.0));
    }

    #[test]
    fn decode_rejects_wrong_length() {
        let inst = two_unit_example();
        let c = compile_tailored(&inst, &worked_penalties()).unwrap();
        assert!(matches!(
            decode(&[0; 19], &c.layout, &inst),
            Err(CompileError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn trivial_instance_minimum_is_all_off() {
        let inst = UcpInstance {
            name: "idle".into(),
            time_steps: 1,
            residual_demand: vec![0.0],
            units: vec![UnitSpec {
                name: "u".into(),
                min_gen: 1.0,
                max_gen: 1.0,
                min_up: 1,
                min_down: 1,
                start_cost: 5.0,
                var_cost: 3.0,
                step_size: None,
                initial_on: false,
            }],
        };
        let c = compile_tailored(&inst, &default_penalties(&inst)).unwrap();
        let n = c.matrix.n();
        let mut best = (f64::INFINITY, 0u32);
        for mask in 0..(1u32 << n) {
            let bits: Vec<u8> = (0..n).map(|k| ((mask >> k) & 1) as u8).collect();
            let e = c.matrix.energy(&bits).unwrap();
            if e < best.0 {
                best = (e, mask);
            }
        }
        assert_eq!(best, (0.0, 0));
    }

    #[test]
    fn scaling_all_factors_preserves_zero_penalty_states() {
        let inst = two_unit_example();
        let base = compile_tailored(&inst, &worked_penalties()).unwrap();
        let scaled = compile_tailored(
            &inst,
            &PenaltyFactors::new(3.0 * 1900.0, 3.0 * 97.0, 3.0 * 96.0, 3.0 * 96.0),
        )
        .unwrap();
        // Sample the state space; exhaustive coverage lives in the
        // acceptance suite.
        for mask in (0..(1u32 << 20)).step_by(97) {
            let bits: Vec<u8> = (0..20).map(|k| ((mask >> k) & 1) as u8).collect();
            let sched = decode(&bits, &base.layout, &inst).unwrap();
            let cost = objective_value(&inst, &sched);
            let p_base = base.matrix.energy(&bits).unwrap() - cost;
            let p_scaled = scaled.matrix.energy(&bits).unwrap() - cost;
            assert_eq!(p_base == 0.0, p_scaled == 0.0, "mask {mask}");
        }
    }

    #[test]
    fn discrete_unit_power_expression_and_coupling() {
        let inst = UcpInstance {
            name: "steps".into(),
            time_steps: 1,
            residual_demand: vec![3.0],
            units: vec![UnitSpec {
                name: "u".into(),
                min_gen: 1.0,
                max_gen: 5.0,
                min_up: 1,
                min_down: 1,
                start_cost: 2.0,
                var_cost: 1.0,
                step_size: Some(1.0),
                initial_on: false,
            }],
        };
        let p = default_penalties(&inst);
        let c = compile_tailored(&inst, &p).unwrap();
        // 1 on + 1 start + 3 gen bits (4 steps).
        assert_eq!(c.matrix.n(), 5);
        let l = &c.layout;
        // Uncommitted unit with a gen bit set: the coupling penalty and the
        // demand term both fire, so the penalty part is strictly positive.
        let mut stray = vec![0u8; 5];
        stray[l.gen(0, 0, 0)] = 1;
        let stray_sched = decode(&stray, l, &inst).unwrap();
        let stray_penalty =
            c.matrix.energy(&stray).unwrap() - objective_value(&inst, &stray_sched);
        assert!(stray_penalty > 0.0);
        // Committed at 3 MW: on = 1, encoded steps = 2 (bits 0 and 1 off/on
        // per weights 1,2,1 -> choose bit 1), start = 1.
        let mut bits = vec![0u8; 5];
        bits[l.on(0, 0)] = 1;
        bits[l.start(0, 0)] = 1;
        bits[l.gen(0, 0, 1)] = 1;
        let sched = decode(&bits, l, &inst).unwrap();
        assert_eq!(sched.gen[0][0], 3.0);
        // Demand met exactly: penalty part must vanish.
        let cost = objective_value(&inst, &sched);
        assert_eq!(cost, 3.0 + 2.0);
        assert_eq!(c.matrix.energy(&bits).unwrap(), cost);
    }
}
