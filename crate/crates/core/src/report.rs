use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{simulate, ProblemSpec, Schedule, Trajectory};

/// Which of the three base programs a run targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Program {
    /// Single treatment, no spacing.
    P1,
    /// Menu of treatments, at most one per period.
    P2,
    /// Single treatment with a minimum spacing between doses.
    P3,
}

impl Program {
    /// Checks that the spec has the shape this program is defined for.
    pub fn check(self, spec: &ProblemSpec) -> Result<()> {
        let wrong = |reason: String| Err(Error::WrongProgram { program: self.to_string(), reason });
        let n = spec.treatments.len();
        match self {
            Program::P1 if n != 1 => wrong(format!("needs exactly one treatment, spec has {n}")),
            Program::P1 if spec.spacing_delta != 0 => {
                wrong(format!("has no spacing constraint, spec sets delta = {}", spec.spacing_delta))
            }
            Program::P2 if n == 0 => wrong("needs at least one treatment".into()),
            Program::P2 if spec.spacing_delta != 0 => {
                wrong(format!("has no spacing constraint, spec sets delta = {}", spec.spacing_delta))
            }
            Program::P3 if n != 1 => wrong(format!("needs exactly one treatment, spec has {n}")),
            Program::P3 if spec.spacing_delta == 0 => wrong("needs spacing delta >= 1".into()),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Program::P1 => "p1",
            Program::P2 => "p2",
            Program::P3 => "p3",
        })
    }
}

impl FromStr for Program {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p1" => Ok(Program::P1),
            "p2" => Ok(Program::P2),
            "p3" => Ok(Program::P3),
            other => Err(Error::Domain(format!("unknown program {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Objective {
    /// Minimize total treatment cost.
    MinCost,
    /// Minimize the largest tracked size subject to total cost `<= budget`.
    MinMaxSize { budget: f64 },
}

impl Objective {
    pub fn budget(&self) -> Option<f64> {
        match *self {
            Objective::MinCost => None,
            Objective::MinMaxSize { budget } => Some(budget),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Optimal,
    Infeasible,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Labels (or schedules, for enumeration) generated.
    pub explored: u64,
    /// Removed by dominance.
    pub pruned: u64,
    /// Discarded for leaving the band or exceeding the budget.
    pub discarded: u64,
}

impl SearchStats {
    pub fn add(&mut self, other: &SearchStats) {
        self.explored += other.explored;
        self.pruned += other.pruned;
        self.discarded += other.discarded;
    }
}

/// Result of any solve. Sizes are given rounded to two decimals alongside the
/// full-precision values in the `*_exact` fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: Status,
    pub program: Option<Program>,
    pub objective: Objective,
    /// Total cost for min-cost runs, maximum size for min-max runs.
    pub objective_value: Option<f64>,
    pub cost: Option<f64>,
    pub max_size: Option<f64>,
    pub max_size_exact: Option<f64>,
    /// 1-based size index where the maximum is reached.
    pub max_size_index: Option<usize>,
    pub treatment_counts: Vec<usize>,
    pub min_spacing: Option<usize>,
    pub max_spacing: Option<usize>,
    pub schedule: Option<Schedule>,
    pub trajectory: Option<Trajectory>,
    /// Number of undominated terminal labels (or schedules) attaining the optimum.
    pub optimum_count: u64,
    /// Other schedules with the same objective value may exist.
    pub alternates_may_exist: bool,
    pub include_terminal: bool,
    pub stats: SearchStats,
    #[serde(skip)]
    pub wall_time: std::time::Duration,
}

pub(crate) fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

impl SolveReport {
    pub fn infeasible(program: Option<Program>, objective: Objective, spec: &ProblemSpec, stats: SearchStats) -> Self {
        Self {
            status: Status::Infeasible,
            program,
            objective,
            objective_value: None,
            cost: None,
            max_size: None,
            max_size_exact: None,
            max_size_index: None,
            treatment_counts: vec![0; spec.treatments.len()],
            min_spacing: None,
            max_spacing: None,
            schedule: None,
            trajectory: None,
            optimum_count: 0,
            alternates_may_exist: false,
            include_terminal: spec.include_terminal,
            stats,
            wall_time: Default::default(),
        }
    }

    /// Builds an optimal report by re-simulating `schedule`; fails if the
    /// schedule is not feasible for the spec.
    pub fn from_schedule(
        spec: &ProblemSpec,
        program: Option<Program>,
        objective: Objective,
        schedule: Schedule,
        optimum_count: u64,
        stats: SearchStats,
    ) -> Result<Self> {
        let (trajectory, feas) = simulate(spec, &schedule, true)?;
        if !feas.is_feasible() {
            return Err(Error::Internal(format!("returned schedule is infeasible: {feas:?}")));
        }
        let cost = schedule.cost(spec);
        if let Some(budget) = objective.budget() {
            if cost > budget + 1e-9 {
                return Err(Error::Internal(format!("schedule cost {cost} exceeds budget {budget}")));
            }
        }
        let tracked = spec.tracked_len();
        let max_exact = trajectory.max_log_size(tracked).exp();
        let value = match objective {
            Objective::MinCost => cost,
            Objective::MinMaxSize { .. } => max_exact,
        };
        let spacing = schedule.spacing_stats();
        Ok(Self {
            status: Status::Optimal,
            program,
            objective,
            objective_value: Some(value),
            cost: Some(cost),
            max_size: Some(round2(max_exact)),
            max_size_exact: Some(max_exact),
            max_size_index: Some(trajectory.argmax(tracked)),
            treatment_counts: schedule.counts(spec.treatments.len()),
            min_spacing: spacing.map(|s| s.0),
            max_spacing: spacing.map(|s| s.1),
            schedule: Some(schedule),
            trajectory: Some(trajectory),
            optimum_count,
            alternates_may_exist: true,
            include_terminal: spec.include_terminal,
            stats,
            wall_time: Default::default(),
        })
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}
