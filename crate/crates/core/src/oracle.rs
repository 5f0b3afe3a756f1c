//! Reference solvers for small instances: exhaustive enumeration of schedules
//! and the Bellman recursion over forward-reachable sizes.
//!
//! Neither shares code with [`crate::solver`]; both only rely on the model's
//! one-step dynamics. They serve as ground truth in tests.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ge_tol, le_tol, sig12_key, ProblemSpec, Schedule};
use crate::report::{Objective, Program, SearchStats, SolveReport};

/// Largest number of schedules [`brute_force`] will enumerate.
pub const MAX_SCHEDULES: u128 = 1 << 24;
/// Largest number of reachable states [`bellman_solve`] will build.
pub const MAX_STATES: usize = 1 << 22;

const COST_EPS: f64 = 1e-9;

fn check_spec(spec: &ProblemSpec) -> Result<()> {
    let errors: Vec<_> =
        spec.validate().into_iter().filter(|d| d.is_error() && d.code != "forced-spacing-conflict").collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(errors))
    }
}

/// Outcome of one complete feasible schedule.
struct Leaf<'a> {
    choices: &'a [Option<usize>],
    cost: f64,
    ls_max: f64,
}

struct Enumerator<'a> {
    spec: &'a ProblemSpec,
    budget: f64,
    choices: Vec<Option<usize>>,
    visited: u64,
    cut: u64,
}

impl<'a> Enumerator<'a> {
    /// Visits every feasible schedule in lexicographic order (no treatment
    /// first, then menu positions ascending). Prefixes that already violate a
    /// constraint are cut since no extension can repair them.
    fn run(&mut self, visit: &mut dyn FnMut(&Leaf)) {
        let ls = self.spec.s_init.ln();
        self.choices.clear();
        self.descend(1, ls, ls, 0.0, None, visit);
    }

    fn descend(
        &mut self,
        period: usize,
        ls: f64,
        ls_max: f64,
        cost: f64,
        last_treated: Option<usize>,
        visit: &mut dyn FnMut(&Leaf),
    ) {
        let spec = self.spec;
        if period > spec.horizon {
            self.visited += 1;
            visit(&Leaf { choices: &self.choices, cost, ls_max });
            return;
        }
        let options = std::iter::once(None).chain((0..spec.treatments.len()).map(Some));
        for choice in options {
            if choice.is_none() && spec.is_forced(period) {
                self.cut += 1;
                continue;
            }
            if choice.is_some() && last_treated.is_some_and(|t| period - t <= spec.spacing_delta) {
                self.cut += 1;
                continue;
            }
            let new_cost = cost + choice.map_or(0.0, |i| spec.treatments[i].cost);
            if new_cost > self.budget + COST_EPS {
                self.cut += 1;
                continue;
            }
            let next = spec.next_log_size(ls, choice);
            let mut next_max = ls_max;
            if spec.is_tracked(period + 1) {
                if !le_tol(next, spec.log_s_tol()) || !ge_tol(next, spec.log_s_min()) {
                    self.cut += 1;
                    continue;
                }
                next_max = ls_max.max(next);
            }
            self.choices.push(choice);
            let lt = if choice.is_some() { Some(period) } else { last_treated };
            self.descend(period + 1, next, next_max, new_cost, lt, visit);
            self.choices.pop();
        }
    }
}

/// Exhaustive search over all `(n + 1)^K` schedules.
///
/// Among optimal schedules the lexicographically first one is returned; for the
/// min-max objective ties are first broken by lower cost. `optimum_count` is the
/// number of schedules attaining the optimal value.
pub fn brute_force(spec: &ProblemSpec, objective: Objective) -> Result<SolveReport> {
    check_spec(spec)?;
    let options = spec.treatments.len() as u128 + 1;
    let total = options.checked_pow(spec.horizon as u32).unwrap_or(u128::MAX);
    if total > MAX_SCHEDULES {
        return Err(Error::SizeGuard { what: "schedules", size: total, limit: MAX_SCHEDULES });
    }
    let budget = objective.budget().unwrap_or(f64::INFINITY);
    let min_max = objective.budget().is_some();
    let mut en = Enumerator { spec, budget, choices: Vec::new(), visited: 0, cut: 0 };

    let value = |leaf: &Leaf| if min_max { leaf.ls_max } else { leaf.cost };
    let mut best = f64::INFINITY;
    en.run(&mut |leaf| best = best.min(value(leaf)));
    let stats = SearchStats { explored: en.visited, pruned: 0, discarded: en.cut };
    if best == f64::INFINITY {
        return Ok(SolveReport::infeasible(None, objective, spec, stats));
    }
    let attains = |leaf: &Leaf| if min_max { le_tol(leaf.ls_max, best) } else { leaf.cost <= best + COST_EPS };

    let mut cheapest = f64::INFINITY;
    if min_max {
        en.run(&mut |leaf| {
            if attains(leaf) {
                cheapest = cheapest.min(leaf.cost);
            }
        });
    }
    let mut count = 0u64;
    let mut chosen: Option<Vec<Option<usize>>> = None;
    en.run(&mut |leaf| {
        if attains(leaf) {
            count += 1;
            if chosen.is_none() && (!min_max || leaf.cost <= cheapest + COST_EPS) {
                chosen = Some(leaf.choices.to_vec());
            }
        }
    });
    let schedule = Schedule(chosen.expect("an optimal schedule was seen"));
    let mut report = SolveReport::from_schedule(spec, None, objective, schedule, count, stats)?;
    report.alternates_may_exist = count > 1;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueEntry {
    pub ls: f64,
    /// Minimal remaining cost from this state; `None` when no feasible completion exists.
    pub cost: Option<f64>,
}

/// `C_k[S]` over the forward-reachable sizes of each period `k = 1..=K`,
/// entries sorted by log size.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub periods: Vec<Vec<ValueEntry>>,
}

impl ValueTable {
    /// Whether `C_k` is nondecreasing in size within every period
    /// (unreachable completions count as `+inf`).
    pub fn is_monotone(&self) -> bool {
        self.periods.iter().all(|entries| {
            entries.windows(2).all(|w| w[0].cost.unwrap_or(f64::INFINITY) <= w[1].cost.unwrap_or(f64::INFINITY))
        })
    }
}

struct State {
    ls: f64,
    /// Child index in the next level for (no treatment, treatment).
    next: [Option<usize>; 2],
}

/// Bellman recursion `C_k[S] = min(C_{k+1}[f(S)], p + C_{k+1}[g(S)])` evaluated
/// exactly on the sizes reachable from `S_init`.
pub fn bellman_solve(spec: &ProblemSpec) -> Result<(SolveReport, ValueTable)> {
    check_spec(spec)?;
    if spec.treatments.len() != 1 || spec.spacing_delta != 0 {
        return Err(Error::WrongProgram {
            program: "bellman".into(),
            reason: "needs exactly one treatment and no spacing constraint".into(),
        });
    }
    let (lo, hi) = (spec.log_s_min(), spec.log_s_tol());
    let p = spec.treatments[0].cost;

    let mut levels: Vec<Vec<State>> = vec![vec![State { ls: spec.s_init.ln(), next: [None, None] }]];
    let mut total = 1usize;
    for period in 1..=spec.horizon {
        let mut next_level: Vec<State> = Vec::new();
        let mut index: HashMap<(i32, i64), usize> = HashMap::new();
        let tracked = spec.is_tracked(period + 1);
        for state in levels[period - 1].iter_mut() {
            for (slot, choice) in [None, Some(0)].into_iter().enumerate() {
                if choice.is_none() && spec.is_forced(period) {
                    continue;
                }
                let ls = spec.next_log_size(state.ls, choice);
                if tracked && !(le_tol(ls, hi) && ge_tol(ls, lo)) {
                    continue;
                }
                let id = *index.entry(sig12_key(ls)).or_insert_with(|| {
                    next_level.push(State { ls, next: [None, None] });
                    next_level.len() - 1
                });
                state.next[slot] = Some(id);
            }
        }
        total += next_level.len();
        if total > MAX_STATES {
            return Err(Error::SizeGuard { what: "reachable states", size: total as u128, limit: MAX_STATES as u128 });
        }
        levels.push(next_level);
    }

    // values[k][j] = C_{k+1} for state j of level k (0-based levels)
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); spec.horizon + 1];
    values[spec.horizon] = vec![0.0; levels[spec.horizon].len()];
    for k in (0..spec.horizon).rev() {
        let (head, tail) = values.split_at_mut(k + 1);
        let later = &tail[0];
        head[k] = levels[k]
            .iter()
            .map(|s| {
                let wait = s.next[0].map_or(f64::INFINITY, |j| later[j]);
                let dose = s.next[1].map_or(f64::INFINITY, |j| p + later[j]);
                wait.min(dose)
            })
            .collect();
    }

    let mut table = ValueTable::default();
    for k in 0..spec.horizon {
        let mut entries: Vec<ValueEntry> = levels[k]
            .iter()
            .zip(&values[k])
            .map(|(s, &c)| ValueEntry { ls: s.ls, cost: c.is_finite().then_some(c) })
            .collect();
        entries.sort_by(|a, b| a.ls.total_cmp(&b.ls));
        table.periods.push(entries);
    }

    let stats = SearchStats { explored: total as u64, pruned: 0, discarded: 0 };
    let optimum = values[0][0];
    if !optimum.is_finite() {
        return Ok((SolveReport::infeasible(Some(Program::P1), Objective::MinCost, spec, stats), table));
    }

    let mut choices = Vec::with_capacity(spec.horizon);
    let mut at = 0usize;
    let mut remaining = optimum;
    for k in 0..spec.horizon {
        let s = &levels[k][at];
        let wait = s.next[0].map(|j| (j, values[k + 1][j]));
        match wait {
            Some((j, v)) if v <= remaining + COST_EPS => {
                choices.push(None);
                at = j;
            }
            _ => {
                let j = s.next[1].expect("finite value has a feasible move");
                choices.push(Some(0));
                remaining -= p;
                at = j;
            }
        }
    }
    let report = SolveReport::from_schedule(spec, Some(Program::P1), Objective::MinCost, Schedule(choices), 1, stats)?;
    Ok((report, table))
}
