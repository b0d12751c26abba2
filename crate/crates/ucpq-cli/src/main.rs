//! Command-line front end: validate instances, compile them to QUBO form,
//! solve, compare formulations, export matrices, and re-check the built-in
//! example against its published reference figures.
//!
//! Exit codes: 0 success, 1 infeasible or failed-assertion result,
//! 2 usage/validation error, 3 internal error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use ucpq::instance::ValidationReport;
use ucpq::qubo::MatrixFormat;
use ucpq::solve::SolverConfig;
use ucpq::tailored::CompiledQubo;
use ucpq::{
    check_feasible, compare_formulations, compile_generic, compile_tailored, decode,
    default_penalties, load_instance, true_cost, two_unit_example, validate_instance,
    validate_penalties, AnnealParams, Formulation, PenaltyFactors, SolutionReport, UcpInstance,
    EXAMPLE_OPTIMAL_BITS, EXAMPLE_PENALTIES, EXAMPLE_RUNNER_UP_BITS,
};

const EXIT_OK: u8 = 0;
const EXIT_RESULT: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ucpq",
    about = "Compile unit commitment instances to QUBO/Ising form, solve, and verify",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormulationArg {
    Tailored,
    Generic,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    #[value(name = "dense-csv")]
    DenseCsv,
    Coo,
    Json,
}

impl From<FormatArg> for MatrixFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::DenseCsv => MatrixFormat::DenseCsv,
            FormatArg::Coo => MatrixFormat::Coo,
            FormatArg::Json => MatrixFormat::Json,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Exhaustive,
    Anneal,
    Both,
}

#[derive(Args)]
struct PenaltyArgs {
    /// Penalty factors as a comma-joined quadruple A,B,C,D
    #[arg(long, value_name = "A,B,C,D", conflicts_with = "auto")]
    penalties: Option<String>,

    /// Derive penalty factors from the instance (the default)
    #[arg(long)]
    auto: bool,
}

impl PenaltyArgs {
    fn resolve(&self, inst: &UcpInstance) -> anyhow::Result<PenaltyFactors> {
        match &self.penalties {
            None => Ok(default_penalties(inst)),
            Some(text) => {
                let parts: Vec<&str> = text.split(',').map(str::trim).collect();
                if parts.len() != 4 {
                    anyhow::bail!("--penalties expects four comma-separated values, got {text:?}");
                }
                let mut values = [0.0f64; 4];
                for (slot, part) in values.iter_mut().zip(&parts) {
                    *slot = part
                        .parse()
                        .with_context(|| format!("bad penalty value {part:?}"))?;
                }
                Ok(PenaltyFactors::new(values[0], values[1], values[2], values[3]))
            }
        }
    }
}

#[derive(Args)]
struct AnnealArgs {
    /// Random seed for the annealer
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Annealing restarts
    #[arg(long)]
    restarts: Option<usize>,

    /// Metropolis sweeps per restart
    #[arg(long)]
    sweeps: Option<usize>,

    /// Initial temperature
    #[arg(long)]
    temp_initial: Option<f64>,

    /// Final temperature
    #[arg(long)]
    temp_final: Option<f64>,
}

impl AnnealArgs {
    fn resolve(&self, c: &CompiledQubo) -> AnnealParams {
        let mut params = AnnealParams::defaults_for(&c.matrix, self.seed);
        if let Some(r) = self.restarts {
            params.restarts = r;
        }
        if let Some(s) = self.sweeps {
            params.sweeps_per_restart = s;
        }
        if let Some(t0) = self.temp_initial {
            params.temp_initial = t0;
        }
        if let Some(tf) = self.temp_final {
            params.temp_final = tf;
        }
        params
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load an instance file and report every validation finding
    Validate {
        instance: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Compile an instance and print matrix statistics
    Compile {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = FormulationArg::Tailored)]
        formulation: FormulationArg,
        #[command(flatten)]
        penalties: PenaltyArgs,
        /// Write the matrix (plus a .meta.json sidecar) to this path
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Coo)]
        format: FormatArg,
        #[arg(long)]
        json: bool,
    },
    /// Compile, minimize, decode, and verify an instance end to end
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = FormulationArg::Tailored)]
        formulation: FormulationArg,
        #[arg(long, value_enum, default_value_t = SolverArg::Exhaustive)]
        solver: SolverArg,
        #[command(flatten)]
        penalties: PenaltyArgs,
        #[command(flatten)]
        anneal: AnnealArgs,
        #[arg(long)]
        json: bool,
    },
    /// Compare the tailored and generic formulations side by side
    Compare {
        instance: PathBuf,
        #[command(flatten)]
        penalties: PenaltyArgs,
        #[arg(long)]
        json: bool,
    },
    /// Compile an instance and write only the matrix bytes
    Export {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = FormulationArg::Tailored)]
        formulation: FormulationArg,
        #[command(flatten)]
        penalties: PenaltyArgs,
        #[arg(long, value_enum, default_value_t = FormatArg::Coo)]
        format: FormatArg,
        /// Output path (standard output when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check the built-in two-unit example against its published figures
    ReproducePaper {
        #[arg(long)]
        json: bool,
        /// Test hook: override the start-logic factor B
        #[arg(long, hide = true)]
        override_b: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            EXIT_INTERNAL
        }
    };
    ExitCode::from(code)
}

fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Validate { instance, json } => cmd_validate(&instance, json),
        Command::Compile {
            instance,
            formulation,
            penalties,
            out,
            format,
            json,
        } => cmd_compile(&instance, formulation, &penalties, out.as_deref(), format, json),
        Command::Solve {
            instance,
            formulation,
            solver,
            penalties,
            anneal,
            json,
        } => cmd_solve(&instance, formulation, solver, &penalties, &anneal, json),
        Command::Compare {
            instance,
            penalties,
            json,
        } => cmd_compare(&instance, &penalties, json),
        Command::Export {
            instance,
            formulation,
            penalties,
            format,
            out,
        } => cmd_export(&instance, formulation, &penalties, format, out.as_deref()),
        Command::ReproducePaper { json, override_b } => cmd_reproduce(json, override_b),
    }
}

fn read_instance(path: &Path) -> Result<UcpInstance, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    load_instance(&text).map_err(|e| e.to_string())
}

fn print_validation(report: &ValidationReport) {
    for line in report.render_lines() {
        println!("{line}");
    }
}

fn cmd_validate(path: &Path, json: bool) -> anyhow::Result<u8> {
    let inst = match read_instance(path) {
        Ok(inst) => inst,
        Err(msg) => {
            if json {
                println!(
                    "{}",
                    serde_json::json!({ "ok": false, "error": msg })
                );
            }
            eprintln!("error: {msg}");
            return Ok(EXIT_USAGE);
        }
    };
    let report = validate_instance(&inst);
    if json {
        println!("{}", serde_json::to_string(&report)?);
    } else {
        print_validation(&report);
        println!("{}", if report.ok { "ok" } else { "invalid" });
    }
    Ok(if report.ok { EXIT_OK } else { EXIT_USAGE })
}

/// Load, validate, resolve penalties, and compile one formulation;
/// usage-level failures are returned as messages for exit code 2.
fn prepare(
    path: &Path,
    formulation: FormulationArg,
    penalties: &PenaltyArgs,
) -> Result<(UcpInstance, PenaltyFactors, CompiledQubo), String> {
    let inst = read_instance(path)?;
    let report = validate_instance(&inst);
    if !report.ok {
        let lines = report.render_lines().join("\n");
        return Err(format!("instance is invalid:\n{lines}"));
    }
    let factors = penalties.resolve(&inst).map_err(|e| e.to_string())?;
    let pen_report = validate_penalties(&factors, &inst);
    if !pen_report.ok {
        let lines = pen_report.render_lines().join("\n");
        return Err(format!("penalty factors rejected:\n{lines}"));
    }
    for line in pen_report.render_lines() {
        eprintln!("{line}");
    }
    let compiled = match formulation {
        FormulationArg::Tailored => compile_tailored(&inst, &factors).map_err(|e| e.to_string())?,
        FormulationArg::Generic => {
            let (compiled, _) = compile_generic(&inst, &factors).map_err(|e| e.to_string())?;
            compiled
        }
    };
    Ok((inst, factors, compiled))
}

fn fmt_percent(density: f64) -> String {
    let text = format!("{:.4}", density * 100.0);
    let trimmed = text.trim_end_matches('0').trim_end_matches('.');
    format!("{trimmed}%")
}

fn metrics_line(c: &CompiledQubo) -> String {
    let m = c.matrix.metrics();
    format!(
        "n={} nnz={} density={} max_incident={}",
        m.n,
        m.nnz,
        fmt_percent(m.density),
        m.max_incident
    )
}

fn write_artifact(c: &CompiledQubo, format: MatrixFormat, out: &Path) -> anyhow::Result<()> {
    let bytes = c.matrix.export(format);
    std::fs::write(out, bytes).with_context(|| format!("writing {}", out.display()))?;
    let sidecar = out.with_extension(
        out.extension()
            .map(|e| format!("{}.meta.json", e.to_string_lossy()))
            .unwrap_or_else(|| "meta.json".into()),
    );
    std::fs::write(&sidecar, c.sidecar_json())
        .with_context(|| format!("writing {}", sidecar.display()))?;
    eprintln!("wrote {} and {}", out.display(), sidecar.display());
    Ok(())
}

fn cmd_compile(
    path: &Path,
    formulation: FormulationArg,
    penalties: &PenaltyArgs,
    out: Option<&Path>,
    format: FormatArg,
    json: bool,
) -> anyhow::Result<u8> {
    let (_, factors, compiled) = match prepare(path, formulation, penalties) {
        Ok(parts) => parts,
        Err(msg) => {
            eprintln!("error: {msg}");
            return Ok(EXIT_USAGE);
        }
    };
    if let Some(out) = out {
        write_artifact(&compiled, format.into(), out)?;
    }
    let metrics = compiled.matrix.metrics();
    if json {
        let mut doc = serde_json::json!({
            "formulation": compiled.formulation.name(),
            "penalties": { "A": factors.demand, "B": factors.start_logic,
                           "C": factors.min_up, "D": factors.min_down },
            "metrics": metrics,
        });
        if compiled.formulation == Formulation::Generic {
            doc["published_example_counts"] =
                serde_json::to_value(ucpq::generic::PUBLISHED_EXAMPLE_COUNTS)?;
        }
        println!("{doc}");
    } else {
        println!("{}", metrics_line(&compiled));
        if compiled.formulation == Formulation::Generic {
            let p = ucpq::generic::PUBLISHED_EXAMPLE_COUNTS;
            println!(
                "note: published example counts are {} variables with {} interactions",
                p.generic_vars, p.generic_interactions
            );
        }
    }
    Ok(EXIT_OK)
}

fn render_schedule_table(inst: &UcpInstance, report: &SolutionReport) -> String {
    let mut out = String::new();
    let mut header = String::from("  t");
    for unit in &inst.units {
        header.push_str(&format!("  {:>14}", unit.name));
    }
    out.push_str(&header);
    out.push_str("  (on/start/gen)\n");
    for t in 0..inst.time_steps {
        let mut line = format!("  {t}");
        for i in 0..inst.num_units() {
            let cell = format!(
                "{}/{}/{}",
                u8::from(report.decoded.on[t][i]),
                u8::from(report.decoded.start[t][i]),
                report.decoded.gen[t][i]
            );
            line.push_str(&format!("  {cell:>14}"));
        }
        out.push('\n');
        out.insert_str(out.len() - 1, &line);
    }
    out
}

fn print_report(inst: &UcpInstance, label: &str, report: &SolutionReport) {
    println!("solver: {label}");
    println!("bitstring: {}", report.result.best_bitstring());
    println!("energy: {}", report.result.best_energy);
    println!("raw energy: {}", report.result.best_raw);
    println!("evaluations: {}", report.result.evaluations);
    println!("schedule:");
    print!("{}", render_schedule_table(inst, report));
    if report.violations.is_empty() {
        println!("feasible: yes");
        println!("true cost: {}", report.true_cost.unwrap_or(f64::NAN));
    } else {
        println!("feasible: no");
        for v in &report.violations {
            println!("violation: {v}");
        }
    }
    println!("penalty part: {}", report.penalty_part);
    if let Some(optimum) = &report.feasible_optimum {
        println!(
            "best feasible state: {} energy {} ({} tie{})",
            ucpq::solve::render_bits(&optimum.bits),
            optimum.energy,
            optimum.ties,
            if optimum.ties == 1 { "" } else { "s" }
        );
        println!(
            "note: the unconstrained minimizer drops start flags; raise the start-logic \
             factor B above D*max(min_down) + max start cost to make the minimum feasible"
        );
    }
}

fn cmd_solve(
    path: &Path,
    formulation: FormulationArg,
    solver: SolverArg,
    penalties: &PenaltyArgs,
    anneal: &AnnealArgs,
    json: bool,
) -> anyhow::Result<u8> {
    let (inst, _, compiled) = match prepare(path, formulation, penalties) {
        Ok(parts) => parts,
        Err(msg) => {
            eprintln!("error: {msg}");
            return Ok(EXIT_USAGE);
        }
    };
    let mut reports: Vec<(&str, SolutionReport)> = Vec::new();
    if matches!(solver, SolverArg::Exhaustive | SolverArg::Both) {
        match ucpq::solve_and_report(&compiled, &inst, &SolverConfig::Exhaustive) {
            Ok(report) => reports.push(("exhaustive", report)),
            Err(err) => {
                eprintln!("error: {err}");
                return Ok(EXIT_USAGE);
            }
        }
    }
    if matches!(solver, SolverArg::Anneal | SolverArg::Both) {
        let params = anneal.resolve(&compiled);
        match ucpq::solve_and_report(&compiled, &inst, &SolverConfig::Anneal(params)) {
            Ok(report) => reports.push(("anneal", report)),
            Err(err) => {
                eprintln!("error: {err}");
                return Ok(EXIT_USAGE);
            }
        }
    }
    if json {
        let doc: serde_json::Map<String, serde_json::Value> = reports
            .iter()
            .map(|(label, report)| {
                (label.to_string(), serde_json::to_value(report).unwrap())
            })
            .collect();
        println!("{}", serde_json::Value::Object(doc));
    } else {
        println!("formulation: {}", compiled.formulation.name());
        for (label, report) in &reports {
            print_report(&inst, label, report);
        }
        if reports.len() == 2 {
            let gap = reports[1].1.result.best_energy - reports[0].1.result.best_energy;
            println!("anneal gap over exhaustive: {gap}");
        }
    }
    // The first report (exhaustive when present) decides the exit code.
    let feasible = reports
        .first()
        .map(|(_, r)| r.violations.is_empty())
        .unwrap_or(false);
    Ok(if feasible { EXIT_OK } else { EXIT_RESULT })
}

fn cmd_compare(path: &Path, penalties: &PenaltyArgs, json: bool) -> anyhow::Result<u8> {
    let inst = match read_instance(path) {
        Ok(inst) => inst,
        Err(msg) => {
            eprintln!("error: {msg}");
            return Ok(EXIT_USAGE);
        }
    };
    let report = validate_instance(&inst);
    if !report.ok {
        eprintln!("error: instance is invalid");
        for line in report.render_lines() {
            eprintln!("{line}");
        }
        return Ok(EXIT_USAGE);
    }
    let factors = match penalties.resolve(&inst) {
        Ok(f) => f,
        Err(err) => {
            eprintln!("error: {err}");
            return Ok(EXIT_USAGE);
        }
    };
    match compare_formulations(&inst, &factors) {
        Ok(comparison) => {
            if json {
                println!("{}", serde_json::to_string(&comparison)?);
            } else {
                print!("{}", comparison.render_table());
            }
            Ok(EXIT_OK)
        }
        Err(err) => {
            eprintln!("error: {err}");
            Ok(EXIT_USAGE)
        }
    }
}

fn cmd_export(
    path: &Path,
    formulation: FormulationArg,
    penalties: &PenaltyArgs,
    format: FormatArg,
    out: Option<&Path>,
) -> anyhow::Result<u8> {
    let (_, _, compiled) = match prepare(path, formulation, penalties) {
        Ok(parts) => parts,
        Err(msg) => {
            eprintln!("error: {msg}");
            return Ok(EXIT_USAGE);
        }
    };
    let bytes = compiled.matrix.export(format.into());
    match out {
        Some(path) => {
            std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            let write = stdout
                .write_all(bytes.as_bytes())
                .and_then(|()| stdout.write_all(b"\n"));
            if let Err(e) = write {
                // A closed pipe downstream is not our failure.
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
    }
    Ok(EXIT_OK)
}

struct Assertion {
    name: &'static str,
    expected: String,
    actual: String,
    pass: bool,
}

impl Assertion {
    fn check<T: PartialEq + std::fmt::Display>(name: &'static str, expected: T, actual: T) -> Self {
        Assertion {
            name,
            pass: expected == actual,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}

fn cmd_reproduce(json: bool, override_b: Option<f64>) -> anyhow::Result<u8> {
    let inst = two_unit_example();
    let mut factors = EXAMPLE_PENALTIES;
    if let Some(b) = override_b {
        factors.start_logic = b;
    }
    let mut assertions: Vec<Assertion> = Vec::new();
    let mut notes: Vec<String> = Vec::new();

    let pen_report = validate_penalties(&factors, &inst);
    assertions.push(Assertion::check("penalty-rule", true, pen_report.ok));

    if pen_report.ok {
        let compiled = compile_tailored(&inst, &factors)
            .map_err(|e| anyhow::anyhow!("compile failed: {e}"))?;
        let metrics = compiled.matrix.metrics();
        assertions.push(Assertion::check("matrix-nnz", 55, metrics.nnz));
        assertions.push(Assertion::check("matrix-cells", 400, metrics.cells));
        assertions.push(Assertion::check("matrix-density", 0.1375, metrics.density));
        assertions.push(Assertion::check("matrix-max-incident", 5, metrics.max_incident));
        assertions.push(Assertion::check(
            "matrix-offset",
            20900.0,
            compiled.matrix.offset(),
        ));
        notes.push(format!(
            "couplings: {} after exact cancellation; published interaction count is 38 \
             (different accounting, not asserted)",
            metrics.couplings
        ));

        assertions.push(Assertion::check(
            "optimal-energy",
            370.0,
            compiled.matrix.energy(&EXAMPLE_OPTIMAL_BITS).unwrap(),
        ));
        assertions.push(Assertion::check(
            "optimal-raw-energy",
            -20530.0,
            compiled.matrix.raw_energy(&EXAMPLE_OPTIMAL_BITS).unwrap(),
        ));
        let optimal_schedule = decode(&EXAMPLE_OPTIMAL_BITS, &compiled.layout, &inst)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let optimal_violations =
            check_feasible(&inst, &optimal_schedule).map_err(|e| anyhow::anyhow!("{e}"))?;
        assertions.push(Assertion::check("optimal-feasible", 0, optimal_violations.len()));

        // Exhaustive scan over all 2^20 states: the published solution must
        // be the unique minimum over zero-penalty (feasible, correctly
        // wired) states.
        let expected_bits = ucpq::solve::render_bits(&EXAMPLE_OPTIMAL_BITS);
        let optimum = ucpq::solve::best_feasible(&compiled, &inst)
            .map_err(|e| anyhow::anyhow!("{e}"))?
            .ok_or_else(|| anyhow::anyhow!("no feasible state found"))?;
        assertions.push(Assertion::check("feasible-minimum-energy", 370.0, optimum.energy));
        assertions.push(Assertion::check(
            "feasible-minimum-bitstring",
            expected_bits.clone(),
            ucpq::solve::render_bits(&optimum.bits),
        ));
        assertions.push(Assertion::check("feasible-minimum-unique", 1, optimum.ties));

        let global = ucpq::brute_force(&compiled).map_err(|e| anyhow::anyhow!("{e}"))?;
        if global.best_energy < optimum.energy {
            notes.push(format!(
                "unconstrained matrix minimum is {} (raw {}) at {}, an infeasible state \
                 that drops start flags; with B - D*max(min_down) = {} below the start \
                 costs, missed starts pay less than they save. The published optimum is \
                 the exact minimum over feasible states.",
                global.best_energy,
                global.best_raw,
                global.best_bitstring(),
                factors.start_logic - factors.min_down
            ));
        }

        let runner_up = decode(&EXAMPLE_RUNNER_UP_BITS, &compiled.layout, &inst)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let violations = check_feasible(&inst, &runner_up).map_err(|e| anyhow::anyhow!("{e}"))?;
        assertions.push(Assertion::check("runner-up-feasible", 0, violations.len()));
        let cost = true_cost(&inst, &runner_up).map_err(|e| anyhow::anyhow!("{e}"))?;
        assertions.push(Assertion::check("runner-up-cost", 410.0, cost));
        assertions.push(Assertion::check(
            "runner-up-raw-energy",
            -20490.0,
            compiled.matrix.raw_energy(&EXAMPLE_RUNNER_UP_BITS).unwrap(),
        ));
    }

    let all_pass = assertions.iter().all(|a| a.pass);
    if json {
        let doc = serde_json::json!({
            "pass": all_pass,
            "assertions": assertions
                .iter()
                .map(|a| serde_json::json!({
                    "name": a.name,
                    "expected": a.expected,
                    "actual": a.actual,
                    "pass": a.pass,
                }))
                .collect::<Vec<_>>(),
            "notes": notes,
        });
        println!("{doc}");
    } else {
        for a in &assertions {
            if a.pass {
                println!("PASS {} = {}", a.name, a.actual);
            } else {
                println!("FAIL {}: expected {}, got {}", a.name, a.expected, a.actual);
            }
        }
        for note in &notes {
            println!("note: {note}");
        }
        println!("{}", if all_pass { "all assertions passed" } else { "assertions failed" });
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_RESULT })
}
