//! UCP instance model: units, horizon, residual demand, validation, and
//! canonical JSON I/O.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One thermal unit and its technical parameters.
///
/// `step_size`, when present, switches the unit to discrete generation mode:
/// output levels are `min_gen + k * step_size` for `k = 0..=M` with
/// `M = floor((max_gen - min_gen) / step_size)`. Without it the unit is
/// all-or-nothing and produces `max_gen` whenever committed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitSpec {
    pub name: String,
    pub min_gen: f64,
    pub max_gen: f64,
    pub min_up: usize,
    pub min_down: usize,
    pub start_cost: f64,
    pub var_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_size: Option<f64>,
    #[serde(default)]
    pub initial_on: bool,
}

impl UnitSpec {
    /// Number of discrete generation steps above `min_gen`, i.e. the largest
    /// `k` with `min_gen + k * step_size <= max_gen`. Zero for all-or-nothing
    /// units.
    pub fn step_count(&self) -> usize {
        match self.step_size {
            Some(step) if step > 0.0 => {
                let ratio = (self.max_gen - self.min_gen) / step;
                // Tiny slack so integral ratios stored inexactly in binary
                // still floor to the intended count.
                (ratio + 1e-9).floor().max(0.0) as usize
            }
            _ => 0,
        }
    }
}

/// A complete unit commitment instance over `time_steps` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UcpInstance {
    pub name: String,
    pub time_steps: usize,
    pub residual_demand: Vec<f64>,
    pub units: Vec<UnitSpec>,
}

impl UcpInstance {
    pub fn num_units(&self) -> usize {
        self.units.len()
    }

    /// True when any unit uses the discrete generation encoding.
    pub fn has_discrete_units(&self) -> bool {
        self.units.iter().any(|u| u.step_size.is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Serialize)]
pub struct Issue {
    pub severity: Severity,
    pub path: String,
    pub message: String,
}

/// Outcome of validating an instance or a penalty set. `ok` is true exactly
/// when no issue has error severity; warnings do not block compilation.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn from_issues(issues: Vec<Issue>) -> Self {
        let ok = issues.iter().all(|i| i.severity != Severity::Error);
        ValidationReport { ok, issues }
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues
            .iter()
            .filter(|i| i.severity == Severity::Error)
    }

    /// One human-readable line per issue.
    pub fn render_lines(&self) -> Vec<String> {
        self.issues
            .iter()
            .map(|i| {
                let sev = match i.severity {
                    Severity::Error => "error",
                    Severity::Warning => "warning",
                };
                format!("{} {}: {}", sev, i.path, i.message)
            })
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("invalid instance: {0}")]
    Invalid(String),
}

/// Check every structural invariant of an instance and report all findings.
///
/// Demand exceeding total installed capacity at some step is reported as a
/// warning, not an error: the instance is well formed, it merely cannot be
/// demand-feasible there.
pub fn validate_instance(inst: &UcpInstance) -> ValidationReport {
    let mut issues = Vec::new();
    let mut error = |path: String, message: String| {
        issues.push(Issue {
            severity: Severity::Error,
            path,
            message,
        });
    };

    if inst.time_steps < 1 {
        error("time_steps".into(), "must be at least 1".into());
    }
    if inst.units.is_empty() {
        error("units".into(), "at least one unit is required".into());
    }

    for (k, u) in inst.units.iter().enumerate() {
        let at = |field: &str| format!("units[{k}].{field}");
        if u.min_gen < 0.0 {
            error(at("min_gen"), format!("unit \"{}\": min_gen must be >= 0", u.name));
        }
        if u.min_gen > u.max_gen {
            error(
                at("max_gen"),
                format!(
                    "unit \"{}\": min_gen {} exceeds max_gen {}",
                    u.name, u.min_gen, u.max_gen
                ),
            );
        }
        if u.min_up < 1 {
            error(at("min_up"), format!("unit \"{}\": min_up must be >= 1", u.name));
        }
        if u.min_down < 1 {
            error(at("min_down"), format!("unit \"{}\": min_down must be >= 1", u.name));
        }
        if u.start_cost < 0.0 {
            error(at("start_cost"), format!("unit \"{}\": start_cost must be >= 0", u.name));
        }
        if u.var_cost < 0.0 {
            error(at("var_cost"), format!("unit \"{}\": var_cost must be >= 0", u.name));
        }
        if let Some(step) = u.step_size {
            if step <= 0.0 {
                error(at("step_size"), format!("unit \"{}\": step_size must be > 0", u.name));
            } else if step > u.max_gen - u.min_gen {
                error(
                    at("step_size"),
                    format!(
                        "unit \"{}\": step_size {} exceeds max_gen - min_gen = {}",
                        u.name,
                        step,
                        u.max_gen - u.min_gen
                    ),
                );
            }
        }
    }

    for (k, u) in inst.units.iter().enumerate() {
        if inst.units[..k].iter().any(|v| v.name == u.name) {
            error(
                format!("units[{k}].name"),
                format!("duplicate unit name \"{}\"", u.name),
            );
        }
    }

    if inst.residual_demand.len() != inst.time_steps {
        error(
            "residual_demand".into(),
            format!(
                "expected {} entries, found {}",
                inst.time_steps,
                inst.residual_demand.len()
            ),
        );
    }
    let capacity: f64 = inst.units.iter().map(|u| u.max_gen).sum();
    let mut warnings = Vec::new();
    for (t, &rd) in inst.residual_demand.iter().enumerate() {
        if rd < 0.0 {
            error(format!("residual_demand[{t}]"), "must be >= 0".into());
        } else if rd > capacity {
            warnings.push(Issue {
                severity: Severity::Warning,
                path: format!("residual_demand[{t}]"),
                message: format!("demand unreachable at t={t}: {rd} exceeds total capacity {capacity}"),
            });
        }
    }
    drop(error);
    issues.extend(warnings);

    ValidationReport::from_issues(issues)
}

/// Parse an instance from its JSON text form.
///
/// Serde reports missing/unknown/ill-typed fields with a line and column;
/// on top of that the horizon and unit-list bounds are checked here because
/// every later computation indexes by them.
pub fn load_instance(text: &str) -> Result<UcpInstance, InstanceError> {
    let inst: UcpInstance =
        serde_json::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
    if inst.time_steps < 1 {
        return Err(InstanceError::Schema {
            path: "time_steps".into(),
            message: "must be at least 1".into(),
        });
    }
    if inst.units.is_empty() {
        return Err(InstanceError::Schema {
            path: "units".into(),
            message: "at least one unit is required".into(),
        });
    }
    Ok(inst)
}

/// Serialize a valid instance to its canonical JSON form: fixed key order,
/// two-space indent, LF line endings. Structurally equal instances produce
/// byte-identical text.
pub fn save_instance(inst: &UcpInstance) -> Result<String, InstanceError> {
    let report = validate_instance(inst);
    if !report.ok {
        let msgs: Vec<String> = report
            .errors()
            .map(|i| format!("{}: {}", i.path, i.message))
            .collect();
        return Err(InstanceError::Invalid(msgs.join("; ")));
    }
    let mut text = serde_json::to_string_pretty(inst)
        .map_err(|e| InstanceError::Parse(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// The built-in two-unit, five-step example used throughout the docs and by
/// the `reproduce-paper` command.
pub fn two_unit_example() -> UcpInstance {
    UcpInstance {
        name: "two-units-five-steps".into(),
        time_steps: 5,
        residual_demand: vec![1.0, 2.0, 1.0, 2.0, 1.0],
        units: vec![
            UnitSpec {
                name: "Unit 0".into(),
                min_gen: 1.0,
                max_gen: 1.0,
                min_up: 1,
                min_down: 1,
                start_cost: 50.0,
                var_cost: 30.0,
                step_size: None,
                initial_on: false,
            },
            UnitSpec {
                name: "Unit 1".into(),
                min_gen: 1.0,
                max_gen: 1.0,
                min_up: 2,
                min_down: 1,
                start_cost: 25.0,
                var_cost: 45.0,
                step_size: None,
                initial_on: false,
            },
        ],
    }
}
