use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "chemosched", version, about = "Optimal chemotherapy schedules for power-law tumor growth")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a program to optimality; writes report.json and trajectory.csv.
    Solve(RunArgs),
    /// Run the threshold policy; writes report.json and trajectory.csv.
    Heuristic(RunArgs),
    /// Simulate a given schedule; writes report.json and trajectory.csv.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Treated periods as `PERIOD` (first treatment) or `PERIOD:ID`, comma separated.
        #[arg(long, value_delimiter = ',')]
        treat: Vec<String>,
    },
    /// Write the mixed-integer model in LP format.
    ExportLp(RunArgs),
    /// Min-max solves over a range of budgets; writes sweep.csv.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Budgets, comma separated.
        #[arg(long, value_delimiter = ',', conflicts_with = "budget_range")]
        budgets: Vec<f64>,
        /// Budgets as `FROM:TO:STEP` (inclusive).
        #[arg(long)]
        budget_range: Option<String>,
    },
    /// Solve every cell of a published results table and compare.
    Reproduce {
        table: TableArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the solver with exhaustive enumeration on seeded random instances.
    Selfcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Problem specification (JSON).
    #[arg(long, conflicts_with = "preset")]
    pub spec: Option<PathBuf>,
    /// Built-in instance instead of a spec file.
    #[arg(long)]
    pub preset: Option<PresetArg>,
    /// Program; inferred from the spec when omitted.
    #[arg(long)]
    pub program: Option<ProgramArg>,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::MinCost)]
    pub objective: ObjectiveArg,
    /// Treatment budget, required with `--objective min-max`.
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Clamp sizes at S_min instead of rejecting undershooting doses.
    #[arg(long)]
    pub floor_mode: bool,
    /// Whether the size after the last period is band-constrained and counted in the maximum.
    #[arg(long)]
    pub include_terminal: Option<bool>,
    /// Accepted for every command; only `selfcheck` draws random numbers.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProgramArg {
    P1,
    P2,
    P3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    MinCost,
    MinMax,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PresetArg {
    /// Exponential growth (`table1-p1`, ...).
    Table1P1,
    Table1P2,
    Table1P3,
    /// Gompertz growth.
    Table3P1,
    Table3P2,
    Table3P3,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TableArg {
    Table2,
    Table4,
}
