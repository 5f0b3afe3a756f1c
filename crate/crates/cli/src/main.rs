mod args;
mod output;

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use chemosched_core::milp;
use chemosched_core::oracle::brute_force;
use chemosched_core::presets::{self, CellOutcome, Table};
use chemosched_core::random::{random_spec, InstanceShape};
use chemosched_core::{
    heuristic_schedule, simulate, solve, solve_general, sweep_budget, Error, FeasibilityReport, Objective, ProblemSpec,
    Program, Schedule, Severity, Trajectory,
};
use clap::Parser;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use args::{Cli, Command, ObjectiveArg, PresetArg, ProgramArg, RunArgs, TableArg};

/// An error together with the process exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure { code: 2, error: anyhow!(msg.into()) }
    }

    fn io(error: anyhow::Error) -> Self {
        Failure { code: 2, error }
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { code: 1, error: e.into() }
    }
}

type Outcome = std::result::Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Solve(run) => cmd_solve(&run),
        Command::Heuristic(run) => cmd_heuristic(&run),
        Command::Simulate { run, treat } => cmd_simulate(&run, &treat),
        Command::ExportLp(run) => cmd_export_lp(&run),
        Command::Sweep { run, budgets, budget_range } => cmd_sweep(&run, budgets, budget_range.as_deref()),
        Command::Reproduce { table, out } => cmd_reproduce(table, out.as_deref()),
        Command::Selfcheck { seed, cases } => cmd_selfcheck(seed, cases),
    }
}

fn load_spec(run: &RunArgs) -> std::result::Result<ProblemSpec, Failure> {
    let mut spec = match (&run.spec, run.preset) {
        (Some(path), _) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::io)?;
            ProblemSpec::from_json(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        (None, Some(preset)) => preset_spec(preset),
        (None, None) => return Err(Failure::usage("either --spec or --preset is required")),
    };
    if run.floor_mode {
        spec.floor_mode = true;
    }
    if let Some(flag) = run.include_terminal {
        spec.include_terminal = flag;
    }
    for d in spec.validate() {
        let level = if d.severity == Severity::Error { "error" } else { "warning" };
        eprintln!("{level}[{}]: {}", d.code, d.message);
    }
    Ok(spec)
}

fn preset_spec(preset: PresetArg) -> ProblemSpec {
    use PresetArg::*;
    match preset {
        Table1P1 => presets::table1_spec(Program::P1),
        Table1P2 => presets::table1_spec(Program::P2),
        Table1P3 => presets::table1_spec(Program::P3),
        Table3P1 => presets::table3_spec(Program::P1),
        Table3P2 => presets::table3_spec(Program::P2),
        Table3P3 => presets::table3_spec(Program::P3),
    }
}

fn program_for(run: &RunArgs, spec: &ProblemSpec) -> Program {
    match run.program {
        Some(ProgramArg::P1) => Program::P1,
        Some(ProgramArg::P2) => Program::P2,
        Some(ProgramArg::P3) => Program::P3,
        None if spec.treatments.len() > 1 => Program::P2,
        None if spec.spacing_delta > 0 => Program::P3,
        None => Program::P1,
    }
}

fn objective_for(run: &RunArgs) -> std::result::Result<Objective, Failure> {
    match (run.objective, run.budget) {
        (ObjectiveArg::MinCost, None) => Ok(Objective::MinCost),
        (ObjectiveArg::MinMax, Some(budget)) => Ok(Objective::MinMaxSize { budget }),
        (ObjectiveArg::MinCost, Some(_)) => Err(Failure::usage("--budget only applies to --objective min-max")),
        (ObjectiveArg::MinMax, None) => Err(Failure::usage("--objective min-max requires --budget")),
    }
}

fn write_trajectory(dir: &Path, spec: &ProblemSpec, schedule: &Schedule, traj: &Trajectory) -> Result<(), Failure> {
    output::write_text(dir, "trajectory.csv", &output::trajectory_csv(spec, schedule, traj)).map_err(Failure::io)
}

fn cmd_solve(run: &RunArgs) -> Outcome {
    let objective = objective_for(run)?;
    let spec = load_spec(run)?;
    let program = program_for(run, &spec);
    let report = solve(&spec, program, objective)?;
    println!("convention: include_terminal = {}", spec.include_terminal);
    println!("status: {}", report.status);
    if let Some(v) = report.objective_value {
        println!("objective: {v}");
    }
    if let (Some(cost), Some(size)) = (report.cost, report.max_size) {
        println!("cost: {cost}  max size: {size:.2}  counts: {:?}", report.treatment_counts);
    }
    output::write_json(&run.out, "report.json", &report).map_err(Failure::io)?;
    if let (Some(schedule), Some(traj)) = (&report.schedule, &report.trajectory) {
        write_trajectory(&run.out, &spec, schedule, traj)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_heuristic(run: &RunArgs) -> Outcome {
    let spec = load_spec(run)?;
    let result = heuristic_schedule(&spec)?;
    println!(
        "threshold: {:.4}  cost: {}  certified optimal: {}",
        result.threshold, result.cost, result.optimality_certified
    );
    output::write_json(&run.out, "report.json", &result).map_err(Failure::io)?;
    write_trajectory(&run.out, &spec, &result.schedule, &result.trajectory)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SimulationReport<'a> {
    schedule: &'a Schedule,
    cost: f64,
    feasible: bool,
    feasibility: &'a FeasibilityReport,
    max_size: f64,
    trajectory: &'a Trajectory,
}

fn parse_treated(spec: &ProblemSpec, items: &[String]) -> std::result::Result<Schedule, Failure> {
    let mut treated = Vec::with_capacity(items.len());
    for item in items.iter().filter(|s| !s.is_empty()) {
        let (period, id) = match item.split_once(':') {
            Some((p, id)) => (p, Some(id)),
            None => (item.as_str(), None),
        };
        let period: usize = period.trim().parse().map_err(|_| Failure::usage(format!("bad period in {item:?}")))?;
        let index = match id {
            None => 0,
            Some(id) => {
                let id: usize = id.trim().parse().map_err(|_| Failure::usage(format!("bad treatment in {item:?}")))?;
                spec.treatments
                    .iter()
                    .position(|t| t.id == id)
                    .ok_or_else(|| Failure::usage(format!("no treatment with id {id}")))?
            }
        };
        treated.push((period, index));
    }
    Ok(Schedule::from_treated(spec.horizon, &treated)?)
}

fn cmd_simulate(run: &RunArgs, treat: &[String]) -> Outcome {
    let spec = load_spec(run)?;
    let schedule = parse_treated(&spec, treat)?;
    let (traj, feas) = simulate(&spec, &schedule, true)?;
    let report = SimulationReport {
        schedule: &schedule,
        cost: schedule.cost(&spec),
        feasible: feas.is_feasible(),
        feasibility: &feas,
        max_size: traj.max_log_size(spec.tracked_len()).exp(),
        trajectory: &traj,
    };
    println!("cost: {}  feasible: {}  max size: {:.2}", report.cost, report.feasible, report.max_size);
    output::write_json(&run.out, "report.json", &report).map_err(Failure::io)?;
    write_trajectory(&run.out, &spec, &schedule, &traj)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_export_lp(run: &RunArgs) -> Outcome {
    let objective = objective_for(run)?;
    let spec = load_spec(run)?;
    let program = program_for(run, &spec);
    let model = match objective {
        Objective::MinCost => milp::build(&spec, program)?,
        Objective::MinMaxSize { budget } => milp::build_pi(&spec, program, budget)?,
    };
    let name = format!("{}.lp", model.name.to_lowercase());
    output::write_text(&run.out, &name, &milp::export_lp(&model)).map_err(Failure::io)?;
    println!("wrote {}", run.out.join(name).display());
    Ok(ExitCode::SUCCESS)
}

fn parse_range(text: &str) -> std::result::Result<Vec<f64>, Failure> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Failure::usage(format!("bad budget range {text:?}")))?;
    let [from, to, step] = parts[..] else {
        return Err(Failure::usage("budget range must be FROM:TO:STEP"));
    };
    if !(step > 0.0) || to < from {
        return Err(Failure::usage("budget range needs FROM <= TO and STEP > 0"));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| from + step * i as f64).collect())
}

fn cmd_sweep(run: &RunArgs, mut budgets: Vec<f64>, range: Option<&str>) -> Outcome {
    if let Some(range) = range {
        budgets = parse_range(range)?;
    }
    if budgets.is_empty() {
        return Err(Failure::usage("give --budgets or --budget-range"));
    }
    let spec = load_spec(run)?;
    let program = program_for(run, &spec);
    let entries = match sweep_budget(&spec, program, &budgets) {
        Err(Error::Domain(msg)) => return Err(Failure::usage(msg)),
        other => other?,
    };
    let csv = output::sweep_csv(&entries);
    print!("{csv}");
    output::write_text(&run.out, "sweep.csv", &csv).map_err(Failure::io)?;
    Ok(ExitCode::SUCCESS)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.2}"))
}

fn print_outcome(o: &CellOutcome) {
    let r = &o.report;
    let size_note = if o.cell.max_size_is_objective { "" } else { " (info)" };
    println!(
        "{:<5} {:<10} cost {:>7} [{:>7}]  max size {:>7} [{:>7}]{size_note}  counts {:?}  {:>8.1} ms",
        if o.passed() { "PASS" } else { "FAIL" },
        o.cell.label,
        fmt_opt(r.cost),
        fmt_opt(o.cell.cost),
        fmt_opt(r.max_size_exact),
        fmt_opt(o.cell.max_size),
        r.treatment_counts,
        o.wall_time_ms,
    );
}

fn cmd_reproduce(table: TableArg, out: Option<&Path>) -> Outcome {
    let table = match table {
        TableArg::Table2 => Table::Table2,
        TableArg::Table4 => Table::Table4,
    };
    let outcomes = presets::reproduce(table)?;
    println!("convention: include_terminal = {}", table.spec(Program::P1).include_terminal);
    println!("values in brackets are the published ones; (info) marks sizes not implied by optimality");
    for o in &outcomes {
        print_outcome(o);
    }
    if let Some(dir) = out {
        let name = format!("{}.json", serde_json::to_value(table)?.as_str().unwrap_or("table"));
        output::write_json(dir, &name, &outcomes).map_err(Failure::io)?;
    }
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    if failed > 0 {
        println!("{failed} of {} cells differ", outcomes.len());
        return Ok(ExitCode::from(1));
    }
    println!("all {} cells match", outcomes.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_selfcheck(seed: u64, cases: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = InstanceShape { max_horizon: 10, ..InstanceShape::default() };
    let mut mismatches = 0;
    for case in 0..cases {
        let spec = random_spec(&mut rng, &shape);
        for objective in [Objective::MinCost, Objective::MinMaxSize { budget: 40.0 }] {
            let fast = solve_general(&spec, objective)?;
            let slow = brute_force(&spec, objective)?;
            if fast.objective_value != slow.objective_value {
                mismatches += 1;
                eprintln!(
                    "case {case} {objective:?}: solver {:?}, enumeration {:?}",
                    fast.objective_value, slow.objective_value
                );
            }
        }
    }
    println!("seed {seed}: {cases} instances, {mismatches} mismatches");
    if mismatches > 0 {
        return Err(anyhow!("solver disagrees with enumeration").into());
    }
    Ok(ExitCode::SUCCESS)
}
