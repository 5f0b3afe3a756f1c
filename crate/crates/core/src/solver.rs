//! Exact solver for all programs by forward label setting.
//!
//! The log size after period `k` is a deterministic function of the decisions
//! taken so far, so a partial schedule is fully described by its accumulated
//! cost, current log size, running maximum log size and remaining spacing
//! cooldown. A label is discarded when another label of the same period is at
//! least as good on every one of these components.
//!
//! That rule treats a smaller size as never worse. With the floor constraint
//! this is false: a small label may be barred from a treatment that a larger
//! one can take. Every sweep is therefore checked against the same sweep with
//! the floor dropped, where the rule is sound; on disagreement it is repeated
//! comparing only labels of equal size.
//!
//! Ties between optimal schedules are resolved canonically after the sweep: a
//! second pass fixes decisions period by period, preferring no treatment and
//! then lower menu positions, as long as the optimum stays reachable. For the
//! min-max objective the cheapest schedule attaining the optimal maximum is
//! preferred before that.

use std::cmp::Ordering;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ge_tol, le_tol, sig12_key, ProblemSpec, Schedule};
use crate::report::{round2, Objective, Program, SearchStats, SolveReport, Status};

/// Absolute slack on log-size comparisons between labels.
pub const LS_TOL: f64 = 1e-9;
const COST_EPS: f64 = 1e-9;

/// A partial schedule covering periods `1..period`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Label {
    /// Number of decisions taken so far.
    pub period: usize,
    pub cost: f64,
    /// Log size at the start of period `period + 1`.
    pub ls: f64,
    pub ls_max: f64,
    pub cooldown: usize,
    /// Index into the solver's node arena, for schedule reconstruction.
    pub parent: Option<u32>,
}

/// Strict Pareto dominance of `a` over `b`: no worse on cost, log size,
/// running maximum (when `tracking_max`) and cooldown, better on at least one.
/// Log sizes are compared with slack [`LS_TOL`].
pub fn dominates(a: &Label, b: &Label, tracking_max: bool) -> Result<bool> {
    if a.period != b.period {
        return Err(Error::Internal(format!("comparing labels of periods {} and {}", a.period, b.period)));
    }
    let le = |x: f64, y: f64| x <= y + LS_TOL;
    let lt = |x: f64, y: f64| x < y - LS_TOL;
    let mut weak = a.cost <= b.cost + COST_EPS && le(a.ls, b.ls) && a.cooldown <= b.cooldown;
    let mut strict = a.cost < b.cost - COST_EPS || lt(a.ls, b.ls) || a.cooldown < b.cooldown;
    if tracking_max {
        weak &= le(a.ls_max, b.ls_max);
        strict |= lt(a.ls_max, b.ls_max);
    }
    Ok(weak && strict)
}

/// Pareto staircase over `(ls_max, ls)`: keys ascending, values strictly descending.
#[derive(Debug, Default)]
struct Staircase {
    points: Vec<(f64, f64)>,
}

impl Staircase {
    /// Smallest `ls` among points whose `ls_max <= key`.
    fn min_below(&self, key: f64) -> f64 {
        let idx = self.points.partition_point(|p| p.0 <= key);
        if idx == 0 {
            f64::INFINITY
        } else {
            self.points[idx - 1].1
        }
    }

    fn insert(&mut self, key: f64, value: f64) {
        let at = self.points.partition_point(|p| p.0 < key);
        if at > 0 && self.points[at - 1].1 <= value {
            return;
        }
        let end = at + self.points[at..].iter().take_while(|p| p.1 >= value).count();
        self.points.splice(at..end, std::iter::once((key, value)));
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    parent: u32,
    choice: Option<u8>,
}

const ROOT: u32 = u32::MAX;

/// Where a sweep starts: the state after `period - 1` decisions.
#[derive(Debug, Clone, Copy)]
struct Start {
    period: usize,
    cost: f64,
    ls: f64,
    ls_max: f64,
    cooldown: usize,
}

struct SweepResult {
    terminal: Vec<Label>,
    arena: Vec<Node>,
    stats: SearchStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pruning {
    Off,
    /// Componentwise dominance including the current size.
    Full,
    /// Dominance only among labels whose current sizes agree to 12 significant digits.
    SameSize,
}

/// Labels kept in one period before a sweep gives up.
pub const MAX_LABELS: usize = 1 << 22;

/// Immutable view of a spec specialised for transitions.
#[derive(Clone)]
struct Engine<'a> {
    spec: &'a ProblemSpec,
    lo: f64,
    hi: f64,
    costs: Vec<f64>,
    pruning: Pruning,
    /// Drop the lower size bound (a relaxation used for certification).
    relax_floor: bool,
}

impl<'a> Engine<'a> {
    fn new(spec: &'a ProblemSpec) -> Self {
        Self {
            spec,
            lo: spec.log_s_min(),
            hi: spec.log_s_tol(),
            costs: spec.treatments.iter().map(|t| t.cost).collect(),
            pruning: Pruning::Full,
            relax_floor: false,
        }
    }

    fn start(&self) -> Start {
        let ls = self.spec.s_init.ln();
        Start { period: 1, cost: 0.0, ls, ls_max: ls, cooldown: 0 }
    }

    fn choices(&self, period: usize, cooldown: usize) -> impl Iterator<Item = Option<usize>> {
        let forced = self.spec.is_forced(period);
        let treat_ok = cooldown == 0;
        let none = (!forced).then_some(None);
        let treatments = (0..self.costs.len()).filter(move |_| treat_ok).map(Some);
        none.into_iter().chain(treatments)
    }

    fn choice_cost(&self, choice: Option<usize>) -> f64 {
        choice.map_or(0.0, |i| self.costs[i])
    }

    fn next_cooldown(&self, cooldown: usize, choice: Option<usize>) -> usize {
        if choice.is_some() {
            self.spec.spacing_delta
        } else {
            cooldown.saturating_sub(1)
        }
    }

    /// Log size after deciding `choice` at `period`, or `None` if the new size
    /// (index `period + 1`) is tracked and leaves `[lo, upper]`.
    fn transition(&self, ls: f64, choice: Option<usize>, period: usize, upper: f64) -> Option<f64> {
        let next = self.spec.next_log_size(ls, choice);
        let above_floor = self.relax_floor || ge_tol(next, self.lo);
        if self.spec.is_tracked(period + 1) && !(le_tol(next, upper) && above_floor) {
            return None;
        }
        Some(next)
    }

    /// Forward label-setting sweep from `start` through period `K`.
    fn sweep(&self, start: Start, track_max: bool, upper: f64, cap: f64, keep_arena: bool) -> Result<SweepResult> {
        let k_max = self.spec.horizon;
        let mut stats = SearchStats::default();
        let mut arena: Vec<Node> = Vec::new();
        let mut labels = vec![Label {
            period: start.period - 1,
            cost: start.cost,
            ls: start.ls,
            ls_max: start.ls_max,
            cooldown: start.cooldown,
            parent: None,
        }];
        let mut children: Vec<(Label, Option<u8>)> = Vec::new();

        for period in start.period..=k_max {
            children.clear();
            let tracked = self.spec.is_tracked(period + 1);
            for label in &labels {
                for choice in self.choices(period, label.cooldown) {
                    stats.explored += 1;
                    let cost = label.cost + self.choice_cost(choice);
                    if cost > cap + COST_EPS {
                        stats.discarded += 1;
                        continue;
                    }
                    let Some(ls) = self.transition(label.ls, choice, period, upper) else {
                        stats.discarded += 1;
                        continue;
                    };
                    let ls_max = if tracked { label.ls_max.max(ls) } else { label.ls_max };
                    let child = Label {
                        period,
                        cost,
                        ls,
                        ls_max,
                        cooldown: self.next_cooldown(label.cooldown, choice),
                        parent: label.parent,
                    };
                    children.push((child, choice.map(|i| i as u8)));
                }
            }

            let survivors = self.prune_children(&mut children, track_max);
            stats.pruned += (children.len() - survivors) as u64;
            if survivors > MAX_LABELS {
                return Err(Error::SizeGuard { what: "labels", size: survivors as u128, limit: MAX_LABELS as u128 });
            }

            labels.clear();
            for (mut label, choice) in children.drain(..).take(survivors) {
                if keep_arena {
                    arena.push(Node { parent: label.parent.unwrap_or(ROOT), choice });
                    label.parent = Some((arena.len() - 1) as u32);
                }
                labels.push(label);
            }
            if labels.is_empty() {
                break;
            }
        }
        Ok(SweepResult { terminal: labels, arena, stats })
    }

    /// A sweep whose terminal labels are guaranteed to contain an optimum.
    ///
    /// Full dominance assumes a smaller size is never worse, which fails when
    /// the lower bound forbids a treatment the larger label could take. Its
    /// result is accepted when it matches the optimum with the lower bound
    /// dropped, where that assumption does hold. Otherwise the sweep is redone
    /// with dominance restricted to equal sizes, cut off at the first result.
    fn exact_sweep(
        &self,
        start: Start,
        track_max: bool,
        upper: f64,
        cap: f64,
        keep_arena: bool,
    ) -> Result<SweepResult> {
        let fast = self.sweep(start, track_max, upper, cap, keep_arena)?;
        if self.pruning != Pruning::Full || self.spec.floor_mode || self.relax_floor {
            return Ok(fast);
        }
        let value = |r: &SweepResult| {
            r.terminal.iter().map(|l| if track_max { l.ls_max } else { l.cost }).fold(f64::INFINITY, f64::min)
        };
        let relaxed = Engine { relax_floor: true, ..self.clone() }.sweep(start, track_max, upper, cap, false)?;
        let (found, bound) = (value(&fast), value(&relaxed));
        let tol = if track_max { LS_TOL } else { COST_EPS };
        if bound == f64::INFINITY || found <= bound + tol {
            let mut fast = fast;
            fast.stats.add(&relaxed.stats);
            return Ok(fast);
        }
        let (upper, cap) = match (track_max, found.is_finite()) {
            (true, true) => (upper.min(found), cap),
            (false, true) => (upper, cap.min(found)),
            (_, false) => (upper, cap),
        };
        let mut exact =
            Engine { pruning: Pruning::SameSize, ..self.clone() }.sweep(start, track_max, upper, cap, keep_arena)?;
        exact.stats.add(&fast.stats);
        exact.stats.add(&relaxed.stats);
        Ok(exact)
    }

    /// Moves the undominated children to the front (in canonical order) and
    /// returns how many there are.
    fn prune_children(&self, children: &mut [(Label, Option<u8>)], track_max: bool) -> usize {
        let cmp = |a: &Label, b: &Label| -> Ordering {
            let primary = a.cost.total_cmp(&b.cost);
            let secondary = if track_max { a.ls_max.total_cmp(&b.ls_max) } else { Ordering::Equal };
            primary.then(secondary).then(a.ls.total_cmp(&b.ls)).then(a.cooldown.cmp(&b.cooldown))
        };
        match self.pruning {
            Pruning::Off => children.len(),
            Pruning::Full => {
                children.sort_by(|a, b| cmp(&a.0, &b.0));
                let mut kept = 0;
                self.pareto_front(children, 0..children.len(), &mut kept, track_max, |l| l.ls);
                kept
            }
            Pruning::SameSize => {
                children.sort_by(|a, b| a.0.ls.total_cmp(&b.0.ls));
                let mut groups = Vec::new();
                let mut from = 0;
                for i in 1..=children.len() {
                    if i == children.len() || sig12_key(children[i].0.ls) != sig12_key(children[from].0.ls) {
                        groups.push(from..i);
                        from = i;
                    }
                }
                let mut kept = 0;
                for group in groups {
                    children[group.clone()].sort_by(|a, b| cmp(&a.0, &b.0));
                    self.pareto_front(children, group, &mut kept, track_max, |_| 0.0);
                }
                kept
            }
        }
    }

    /// Scans `range` (sorted by cost) and swaps the labels not dominated by an
    /// earlier survivor to position `kept`. `size` is the current-size coordinate.
    fn pareto_front(
        &self,
        children: &mut [(Label, Option<u8>)],
        range: std::ops::Range<usize>,
        kept: &mut usize,
        track_max: bool,
        size: impl Fn(&Label) -> f64,
    ) {
        let buckets = self.spec.spacing_delta + 1;
        if track_max {
            let mut stairs: Vec<Staircase> = (0..buckets).map(|_| Staircase::default()).collect();
            for i in range {
                let l = children[i].0;
                let covered = stairs[..=l.cooldown].iter().any(|s| s.min_below(l.ls_max + LS_TOL) <= size(&l) + LS_TOL);
                if !covered {
                    stairs[l.cooldown].insert(l.ls_max, size(&l));
                    children.swap(*kept, i);
                    *kept += 1;
                }
            }
        } else {
            let mut best = vec![f64::INFINITY; buckets];
            for i in range {
                let l = children[i].0;
                let covered = best[..=l.cooldown].iter().any(|&b| b <= size(&l) + LS_TOL);
                if !covered {
                    best[l.cooldown] = best[l.cooldown].min(size(&l));
                    children.swap(*kept, i);
                    *kept += 1;
                }
            }
        }
    }

    /// Minimum cost to complete periods `start.period..=K` within `upper` and `cap`.
    fn min_cost_from(&self, start: Start, upper: f64, cap: f64) -> Result<f64> {
        if start.period > self.spec.horizon {
            return Ok(start.cost);
        }
        let res = self.exact_sweep(start, false, upper, cap, false)?;
        Ok(res.terminal.iter().map(|l| l.cost).fold(f64::INFINITY, f64::min))
    }

    fn reconstruct(&self, arena: &[Node], leaf: u32) -> Schedule {
        let mut choices = Vec::with_capacity(self.spec.horizon);
        let mut node = leaf;
        while node != ROOT {
            let n = arena[node as usize];
            choices.push(n.choice.map(usize::from));
            node = n.parent;
        }
        choices.reverse();
        Schedule(choices)
    }

    /// Lexicographically first schedule (no treatment before treatment, lower
    /// menu position first) with total cost `<= cap` whose tracked log sizes stay
    /// within `upper`.
    fn canonical(&self, upper: f64, cap: f64) -> Result<Schedule> {
        let mut state = self.start();
        let mut choices = Vec::with_capacity(self.spec.horizon);
        for period in 1..=self.spec.horizon {
            let mut taken = None;
            for choice in self.choices(period, state.cooldown) {
                let cost = state.cost + self.choice_cost(choice);
                if cost > cap + COST_EPS {
                    continue;
                }
                let Some(ls) = self.transition(state.ls, choice, period, upper) else { continue };
                let next = Start {
                    period: period + 1,
                    cost,
                    ls,
                    ls_max: state.ls_max.max(ls),
                    cooldown: self.next_cooldown(state.cooldown, choice),
                };
                if self.min_cost_from(next, upper, cap)? <= cap + COST_EPS {
                    taken = Some((choice, next));
                    break;
                }
            }
            let (choice, next) = taken.ok_or_else(|| {
                Error::Internal(format!("canonical reconstruction lost the optimum at period {period}"))
            })?;
            choices.push(choice);
            state = next;
        }
        Ok(Schedule(choices))
    }
}

/// Solves `program` on `spec` to proven optimality.
pub fn solve(spec: &ProblemSpec, program: Program, objective: Objective) -> Result<SolveReport> {
    program.check(spec)?;
    let mut report = solve_general(spec, objective)?;
    report.program = Some(program);
    Ok(report)
}

/// The solver without program-shape checks: any menu size, spacing and forced
/// periods together.
pub fn solve_general(spec: &ProblemSpec, objective: Objective) -> Result<SolveReport> {
    solve_inner(spec, objective, true)
}

/// Same as [`solve_general`] with dominance pruning switched off (every
/// feasible label is kept). Exponential in `K`; for testing pruning soundness.
pub fn solve_unpruned(spec: &ProblemSpec, objective: Objective) -> Result<SolveReport> {
    solve_inner(spec, objective, false)
}

fn solve_inner(spec: &ProblemSpec, objective: Objective, prune: bool) -> Result<SolveReport> {
    // conflicting forced periods make the instance infeasible rather than malformed
    let spec_errors: Vec<_> =
        spec.validate().into_iter().filter(|d| d.is_error() && d.code != "forced-spacing-conflict").collect();
    if !spec_errors.is_empty() {
        return Err(Error::InvalidSpec(spec_errors));
    }
    if let Some(b) = objective.budget() {
        if !(b >= 0.0) {
            return Err(Error::Domain(format!("budget must be nonnegative, got {b}")));
        }
    }
    let clock = Instant::now();
    let mut engine = Engine::new(spec);
    if !prune {
        engine.pruning = Pruning::Off;
    }
    let track_max = matches!(objective, Objective::MinMaxSize { .. });
    let cap = objective.budget().unwrap_or(f64::INFINITY);

    let res = engine.exact_sweep(engine.start(), track_max, engine.hi, cap, true)?;
    let stats = res.stats;
    let key = |l: &Label| if track_max { l.ls_max } else { l.cost };
    let Some(best) = res.terminal.iter().min_by(|a, b| key(a).total_cmp(&key(b))) else {
        let mut r = SolveReport::infeasible(None, objective, spec, stats);
        r.wall_time = clock.elapsed();
        return Ok(r);
    };
    let optimum = key(best);
    let tol = if track_max { LS_TOL } else { COST_EPS };
    let optimum_count = res.terminal.iter().filter(|l| key(l) <= optimum + tol).count() as u64;
    let witness = engine.reconstruct(&res.arena, best.parent.expect("terminal label has a node"));

    let schedule = if track_max {
        let cheapest = engine.min_cost_from(engine.start(), optimum, cap)?;
        engine.canonical(optimum, cheapest)?
    } else {
        engine.canonical(engine.hi, optimum)?
    };

    let mut report = SolveReport::from_schedule(spec, None, objective, schedule, optimum_count, stats)?;
    let witness_report = SolveReport::from_schedule(spec, None, objective, witness, 1, SearchStats::default())?;
    let (a, b) = (report.objective_value.unwrap(), witness_report.objective_value.unwrap());
    if (a - b).abs() > 1e-9 * b.abs().max(1.0) {
        return Err(Error::Internal(format!("canonical optimum {a} differs from sweep optimum {b}")));
    }
    report.wall_time = clock.elapsed();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub budget: f64,
    pub status: Status,
    pub max_size: Option<f64>,
    pub max_size_exact: Option<f64>,
}

/// Min-max solves for each budget (ascending). Budgets run in parallel; an
/// infeasible budget yields an infeasible entry.
pub fn sweep_budget(spec: &ProblemSpec, program: Program, budgets: &[f64]) -> Result<Vec<SweepEntry>> {
    if budgets.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Domain("budgets must be sorted ascending".into()));
    }
    if let Some(b) = budgets.iter().find(|b| !(**b >= 0.0)) {
        return Err(Error::Domain(format!("budget must be nonnegative, got {b}")));
    }
    budgets
        .par_iter()
        .map(|&budget| {
            let r = solve(spec, program, Objective::MinMaxSize { budget })?;
            Ok(SweepEntry {
                budget,
                status: r.status,
                max_size: r.max_size_exact.map(round2),
                max_size_exact: r.max_size_exact,
            })
        })
        .collect()
}
