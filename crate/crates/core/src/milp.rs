//! Mixed-integer linear models of the scheduling programs and LP text export.
//!
//! Variables are `X_k` (single treatment) or `X_k_i` (menu position `i`,
//! 1-based in names), the log sizes `LS_k`, and `LSmax` for the min-max
//! variants. The recurrence
//!
//! ```text
//! LS_k - beta LS_{k-1} - sum_i log(1 - RF_i) X_{k-1,i} = log(alpha)
//! ```
//!
//! is linear because at most one dose is given per period, so
//! `log(1 - sum_i RF_i X_i) = sum_i log(1 - RF_i) X_i`. The at-most-one rows are
//! emitted for every menu (also of size one) for that reason.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProblemSpec;
use crate::report::Program;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VarKind {
    Binary,
    Continuous { lower: f64, upper: f64 },
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub var: VarId,
    pub coef: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    Le,
    Ge,
    Eq,
}

impl Comparator {
    fn symbol(self) -> &'static str {
        match self {
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
            Comparator::Eq => "=",
        }
    }

    fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Comparator::Le => lhs <= rhs + tol,
            Comparator::Ge => lhs >= rhs - tol,
            Comparator::Eq => (lhs - rhs).abs() <= tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowKind {
    InitialSize,
    Recurrence,
    AtMostOne,
    Spacing,
    /// Spacing windows cut short by the end of the horizon.
    SpacingTail,
    Forced,
    Budget,
    MaxLink,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub kind: RowKind,
    pub terms: Vec<Term>,
    pub cmp: Comparator,
    pub rhs: f64,
}

/// `target = max(sum terms + constant, floor)`, the floor-mode recurrence.
/// Nonlinear; [`export_lp`] linearizes it with one auxiliary binary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxEquality {
    pub name: String,
    pub target: VarId,
    pub terms: Vec<Term>,
    pub constant: f64,
    pub floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    pub name: String,
    pub program: Program,
    pub horizon: usize,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub max_equalities: Vec<MaxEquality>,
    pub sense: Sense,
    pub objective: Vec<Term>,
    pub budget: Option<f64>,
    /// `binaries[k - 1][i]` is the variable of menu position `i` at period `k`.
    pub binaries: Vec<Vec<VarId>>,
    /// `log_sizes[j - 1]` is `LS_j`.
    pub log_sizes: Vec<VarId>,
    pub ls_max: Option<VarId>,
}

impl MilpModel {
    fn add_var(&mut self, name: String, kind: VarKind) -> VarId {
        self.variables.push(Variable { name, kind });
        VarId(self.variables.len() - 1)
    }

    fn add_row(&mut self, name: String, kind: RowKind, terms: Vec<Term>, cmp: Comparator, rhs: f64) {
        self.constraints.push(Constraint { name, kind, terms, cmp, rhs });
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn count_rows(&self, kind: RowKind) -> usize {
        self.constraints.iter().filter(|c| c.kind == kind).count()
    }

    pub fn binary_count(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    /// Checks a 0/1 assignment of the treatment binaries (`x[k - 1][i]`) against
    /// every row. Continuous variables are recovered from the equality rows in
    /// order; `LSmax` is set to the largest log size it is linked to.
    pub fn accepts(&self, x: &[Vec<bool>]) -> bool {
        const TOL: f64 = 1e-9;
        let mut values: Vec<Option<f64>> = vec![None; self.variables.len()];
        for (k, row) in self.binaries.iter().enumerate() {
            for (i, var) in row.iter().enumerate() {
                values[var.0] = Some(if x[k][i] { 1.0 } else { 0.0 });
            }
        }
        let solve_for = |terms: &[Term], rhs: f64, values: &[Option<f64>]| -> Option<(VarId, f64)> {
            let unknown: Vec<&Term> = terms.iter().filter(|t| values[t.var.0].is_none()).collect();
            if unknown.len() != 1 {
                return None;
            }
            let known: f64 = terms.iter().filter_map(|t| values[t.var.0].map(|v| v * t.coef)).sum();
            Some((unknown[0].var, (rhs - known) / unknown[0].coef))
        };
        // equalities define LS in chain order
        let mut progress = true;
        while progress {
            progress = false;
            for c in self.constraints.iter().filter(|c| c.cmp == Comparator::Eq) {
                if let Some((var, v)) = solve_for(&c.terms, c.rhs, &values) {
                    values[var.0] = Some(v);
                    progress = true;
                }
            }
            for m in &self.max_equalities {
                if values[m.target.0].is_none() && m.terms.iter().all(|t| values[t.var.0].is_some()) {
                    let expr: f64 = m.terms.iter().map(|t| t.coef * values[t.var.0].unwrap()).sum::<f64>() + m.constant;
                    values[m.target.0] = Some(expr.max(m.floor));
                    progress = true;
                }
            }
        }
        if let Some(id) = self.ls_max {
            let linked = self
                .constraints
                .iter()
                .filter(|c| c.kind == RowKind::MaxLink)
                .flat_map(|c| c.terms.iter().filter(|t| t.var != id).map(|t| values[t.var.0]))
                .collect::<Option<Vec<f64>>>();
            let Some(linked) = linked else { return false };
            values[id.0] = Some(linked.into_iter().fold(f64::NEG_INFINITY, f64::max));
        }
        let Some(values) = values.into_iter().collect::<Option<Vec<f64>>>() else { return false };

        let bounds_ok = self.variables.iter().zip(&values).all(|(v, &val)| match v.kind {
            VarKind::Continuous { lower, upper } => {
                val >= lower - TOL * lower.abs().max(1.0) && val <= upper + TOL * upper.abs().max(1.0)
            }
            _ => true,
        });
        let rows_ok = self.constraints.iter().all(|c| {
            let lhs: f64 = c.terms.iter().map(|t| t.coef * values[t.var.0]).sum();
            c.cmp.holds(lhs, c.rhs, TOL * c.rhs.abs().max(1.0))
        });
        bounds_ok && rows_ok
    }

    /// Values of `LS_1..` implied by a 0/1 assignment, following the recurrence rows.
    pub fn implied_log_sizes(&self, x: &[Vec<bool>]) -> Vec<f64> {
        let mut ls = Vec::with_capacity(self.log_sizes.len());
        let init = self.constraints.iter().find(|c| c.kind == RowKind::InitialSize).expect("init row");
        ls.push(init.rhs);
        let by_target: BTreeMap<VarId, &Constraint> =
            self.constraints.iter().filter(|c| c.kind == RowKind::Recurrence).map(|c| (c.terms[0].var, c)).collect();
        let floors: BTreeMap<VarId, &MaxEquality> = self.max_equalities.iter().map(|m| (m.target, m)).collect();
        let bin_value = |var: VarId| -> f64 {
            for (k, row) in self.binaries.iter().enumerate() {
                if let Some(i) = row.iter().position(|v| *v == var) {
                    return if x[k][i] { 1.0 } else { 0.0 };
                }
            }
            0.0
        };
        for j in 1..self.log_sizes.len() {
            let target = self.log_sizes[j];
            let prev = self.log_sizes[j - 1];
            let value_of = |t: &Term| if t.var == prev { ls[j - 1] } else { bin_value(t.var) };
            if let Some(c) = by_target.get(&target) {
                let rest: f64 = c.terms[1..].iter().map(|t| t.coef * value_of(t)).sum();
                ls.push(c.rhs - rest);
            } else if let Some(m) = floors.get(&target) {
                let expr: f64 = m.terms.iter().map(|t| t.coef * value_of(t)).sum::<f64>() + m.constant;
                ls.push(expr.max(m.floor));
            }
        }
        ls
    }
}

fn base_model(spec: &ProblemSpec, program: Program) -> MilpModel {
    let n = spec.treatments.len();
    let mut model = MilpModel {
        name: program.to_string().to_uppercase(),
        program,
        horizon: spec.horizon,
        variables: Vec::new(),
        constraints: Vec::new(),
        max_equalities: Vec::new(),
        sense: Sense::Minimize,
        objective: Vec::new(),
        budget: None,
        binaries: Vec::new(),
        log_sizes: Vec::new(),
        ls_max: None,
    };
    let single = program != Program::P2;
    for k in 1..=spec.horizon {
        let row = (0..n)
            .map(|i| {
                let name = if single { format!("X_{k}") } else { format!("X_{k}_{}", i + 1) };
                model.add_var(name, VarKind::Binary)
            })
            .collect();
        model.binaries.push(row);
    }
    let (lo, hi) = (spec.log_s_min(), spec.log_s_tol());
    for j in 1..=spec.tracked_len() {
        let id = model.add_var(format!("LS_{j}"), VarKind::Continuous { lower: lo, upper: hi });
        model.log_sizes.push(id);
    }

    model.objective = (0..spec.horizon)
        .flat_map(|k| (0..n).map(move |i| (k, i)))
        .map(|(k, i)| Term { var: model.binaries[k][i], coef: spec.treatments[i].cost })
        .collect();

    model.add_row(
        "init".into(),
        RowKind::InitialSize,
        vec![Term { var: model.log_sizes[0], coef: 1.0 }],
        Comparator::Eq,
        spec.s_init.ln(),
    );

    // coefficients computed once
    let log_alpha = spec.growth.log_alpha();
    let beta = spec.growth.beta;
    let keeps: Vec<f64> = spec.treatments.iter().map(|t| t.log_keep()).collect();
    for j in 2..=spec.tracked_len() {
        let target = model.log_sizes[j - 1];
        let prev = model.log_sizes[j - 2];
        if spec.floor_mode {
            let terms = std::iter::once(Term { var: prev, coef: beta })
                .chain(keeps.iter().enumerate().map(|(i, &c)| Term { var: model.binaries[j - 2][i], coef: c }))
                .collect();
            model.max_equalities.push(MaxEquality {
                name: format!("rec_{j}"),
                target,
                terms,
                constant: log_alpha,
                floor: lo,
            });
        } else {
            let terms = [Term { var: target, coef: 1.0 }, Term { var: prev, coef: -beta }]
                .into_iter()
                .chain(keeps.iter().enumerate().map(|(i, &c)| Term { var: model.binaries[j - 2][i], coef: -c }))
                .collect();
            model.add_row(format!("rec_{j}"), RowKind::Recurrence, terms, Comparator::Eq, log_alpha);
        }
    }

    for k in 1..=spec.horizon {
        let terms: Vec<Term> = model.binaries[k - 1].iter().map(|&var| Term { var, coef: 1.0 }).collect();
        model.add_row(format!("one_{k}"), RowKind::AtMostOne, terms, Comparator::Le, 1.0);
    }
    for &k in &spec.forced_periods {
        let terms: Vec<Term> = model.binaries[k - 1].iter().map(|&var| Term { var, coef: 1.0 }).collect();
        model.add_row(format!("forced_{k}"), RowKind::Forced, terms, Comparator::Eq, 1.0);
    }
    model
}

fn require_spec(spec: &ProblemSpec) -> Result<()> {
    let errors: Vec<_> =
        spec.validate().into_iter().filter(|d| d.is_error() && d.code != "forced-spacing-conflict").collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(errors))
    }
}

/// Single-treatment minimum-cost model.
pub fn build_p1(spec: &ProblemSpec) -> Result<MilpModel> {
    require_spec(spec)?;
    Program::P1.check(spec)?;
    Ok(base_model(spec, Program::P1))
}

/// Treatment-menu minimum-cost model.
pub fn build_p2(spec: &ProblemSpec) -> Result<MilpModel> {
    require_spec(spec)?;
    Program::P2.check(spec)?;
    Ok(base_model(spec, Program::P2))
}

/// Single treatment with `delta` untreated periods after every dose:
/// `X_{k+1} + ... + X_{k+delta} <= delta (1 - X_k)` for `k = 1..=K-delta`, plus
/// the truncated windows `X_{k+1} + ... + X_K <= (K - k)(1 - X_k)` for the
/// last `delta - 1` periods.
pub fn build_p3(spec: &ProblemSpec) -> Result<MilpModel> {
    require_spec(spec)?;
    Program::P3.check(spec)?;
    if spec.spacing_delta >= spec.horizon {
        return Err(Error::Domain(format!(
            "delta {} >= K {}: at most one treatment is possible",
            spec.spacing_delta, spec.horizon
        )));
    }
    let mut model = base_model(spec, Program::P3);
    let delta = spec.spacing_delta;
    for k in 1..=spec.horizon - delta {
        let x = |p: usize| model.binaries[p - 1][0];
        let mut terms: Vec<Term> = (k + 1..=k + delta).map(|p| Term { var: x(p), coef: 1.0 }).collect();
        terms.push(Term { var: x(k), coef: delta as f64 });
        model.add_row(format!("space_{k}"), RowKind::Spacing, terms, Comparator::Le, delta as f64);
    }
    // without these a dose in the last delta periods could follow another one
    let k_max = spec.horizon;
    for k in (k_max - delta + 1).max(1)..k_max {
        let width = k_max - k;
        let x = |p: usize| model.binaries[p - 1][0];
        let mut terms: Vec<Term> = (k + 1..=k_max).map(|p| Term { var: x(p), coef: 1.0 }).collect();
        terms.push(Term { var: x(k), coef: width as f64 });
        model.add_row(format!("space_tail_{k}"), RowKind::SpacingTail, terms, Comparator::Le, width as f64);
    }
    Ok(model)
}

pub fn build(spec: &ProblemSpec, program: Program) -> Result<MilpModel> {
    match program {
        Program::P1 => build_p1(spec),
        Program::P2 => build_p2(spec),
        Program::P3 => build_p3(spec),
    }
}

/// Min-max variant of `base` under total cost `<= budget`: minimize `LSmax`
/// with `LSmax >= LS_j` for every tracked index. The optimal maximum size is
/// `exp(LSmax*)`.
pub fn build_pi(spec: &ProblemSpec, base: Program, budget: f64) -> Result<MilpModel> {
    if !(budget >= 0.0) {
        return Err(Error::Domain(format!("budget must be nonnegative, got {budget}")));
    }
    let mut model = build(spec, base)?;
    model.name = format!("PI{}", &base.to_string()[1..]);
    let cost_terms = std::mem::take(&mut model.objective);
    model.add_row("budget".into(), RowKind::Budget, cost_terms, Comparator::Le, budget);
    model.budget = Some(budget);
    let top = model.add_var("LSmax".into(), VarKind::Free);
    model.ls_max = Some(top);
    for (j, &ls) in model.log_sizes.clone().iter().enumerate() {
        model.add_row(
            format!("max_{}", j + 1),
            RowKind::MaxLink,
            vec![Term { var: top, coef: 1.0 }, Term { var: ls, coef: -1.0 }],
            Comparator::Ge,
            0.0,
        );
    }
    model.objective = vec![Term { var: top, coef: 1.0 }];
    Ok(model)
}

/// Formats with 17 significant digits in plain decimal notation.
pub fn fmt_sig17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (16 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

const TERMS_PER_LINE: usize = 6;

fn write_expr(out: &mut String, model: &MilpModel, terms: &[Term]) {
    for (n, t) in terms.iter().enumerate() {
        if n > 0 && n % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if t.coef < 0.0 { "-" } else { "+" };
        if n == 0 && sign == "+" {
            let _ = write!(out, " {} {}", fmt_sig17(t.coef), model.var(t.var).name);
        } else {
            let _ = write!(out, " {sign} {} {}", fmt_sig17(t.coef.abs()), model.var(t.var).name);
        }
    }
}

/// Renders the model in LP text format (`Minimize`, `Subject To`, `Bounds`,
/// `Binaries`, `End`). Floor-mode max-equalities are linearized with an
/// auxiliary binary `Z_j` and big-M `max(log S_Tol - log S_min, max_i -log(1 - RF_i))`.
pub fn export_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ Problem: {}", model.name);
    out.push_str("Minimize\n obj:");
    write_expr(&mut out, model, &model.objective);
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(out, " {}:", c.name);
        write_expr(&mut out, model, &c.terms);
        let _ = writeln!(out, " {} {}", c.cmp.symbol(), fmt_sig17(c.rhs));
    }

    let mut aux = Vec::new();
    if !model.max_equalities.is_empty() {
        let (lo, hi) = model
            .variables
            .iter()
            .find_map(|v| match v.kind {
                VarKind::Continuous { lower, upper } => Some((lower, upper)),
                _ => None,
            })
            .unwrap_or((0.0, 0.0));
        let deepest_cut = model.max_equalities[0]
            .terms
            .iter()
            .filter(|t| model.var(t.var).kind == VarKind::Binary)
            .map(|t| -t.coef)
            .fold(0.0, f64::max);
        let big_m = (hi - lo).max(deepest_cut);
        for m in &model.max_equalities {
            let target = &model.var(m.target).name;
            let z = format!("Z_{}", target.trim_start_matches("LS_"));
            let neg: Vec<Term> = m.terms.iter().map(|t| Term { var: t.var, coef: -t.coef }).collect();
            // target >= expr
            let _ = write!(out, " {}_lo: 1 {target}", m.name);
            write_expr_tail(&mut out, model, &neg);
            let _ = writeln!(out, " >= {}", fmt_sig17(m.constant));
            // target <= expr + M z
            let _ = write!(out, " {}_up: 1 {target}", m.name);
            write_expr_tail(&mut out, model, &neg);
            let _ = writeln!(out, " - {} {z} <= {}", fmt_sig17(big_m), fmt_sig17(m.constant));
            // target <= floor + M (1 - z)
            let _ = writeln!(
                out,
                " {}_fl: 1 {target} + {} {z} <= {}",
                m.name,
                fmt_sig17(big_m),
                fmt_sig17(m.floor + big_m)
            );
            aux.push(z);
        }
    }

    out.push_str("Bounds\n");
    for v in &model.variables {
        match v.kind {
            VarKind::Continuous { lower, upper } => {
                let _ = writeln!(out, " {} <= {} <= {}", fmt_sig17(lower), v.name, fmt_sig17(upper));
            }
            VarKind::Free => {
                let _ = writeln!(out, " {} free", v.name);
            }
            VarKind::Binary => {}
        }
    }
    out.push_str("Binaries\n");
    for v in model.variables.iter().filter(|v| v.kind == VarKind::Binary) {
        let _ = writeln!(out, " {}", v.name);
    }
    for z in aux {
        let _ = writeln!(out, " {z}");
    }
    out.push_str("End\n");
    out
}

fn write_expr_tail(out: &mut String, model: &MilpModel, terms: &[Term]) {
    for t in terms {
        let sign = if t.coef < 0.0 { "-" } else { "+" };
        let _ = write!(out, " {sign} {} {}", fmt_sig17(t.coef.abs()), model.var(t.var).name);
    }
}

/// A parsed LP row.
#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub name: String,
    pub terms: Vec<(f64, String)>,
    pub cmp: String,
    pub rhs: f64,
}

/// Minimal reader for the LP files written by [`export_lp`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpSummary {
    pub objective: Vec<(f64, String)>,
    pub rows: Vec<LpRow>,
    /// `(name, lower, upper)`; free variables have infinite bounds.
    pub bounds: Vec<(String, f64, f64)>,
    pub binaries: Vec<String>,
}

fn parse_terms(text: &str) -> Result<Vec<(f64, String)>> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let mut terms = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let mut sign = 1.0;
        if tokens[i] == "+" || tokens[i] == "-" {
            if tokens[i] == "-" {
                sign = -1.0;
            }
            i += 1;
        }
        let coef: f64 = tokens
            .get(i)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Domain(format!("expected coefficient in {text:?}")))?;
        let name = tokens.get(i + 1).ok_or_else(|| Error::Domain(format!("dangling coefficient in {text:?}")))?;
        terms.push((sign * coef, name.to_string()));
        i += 2;
    }
    Ok(terms)
}

pub fn parse_lp(text: &str) -> Result<LpSummary> {
    #[derive(PartialEq)]
    enum Section {
        Head,
        Objective,
        Rows,
        Bounds,
        Binaries,
        Done,
    }
    let mut section = Section::Head;
    let mut summary = LpSummary::default();
    // rows and the objective may continue over several lines
    let mut pending = String::new();
    let flush_row = |pending: &mut String, summary: &mut LpSummary| -> Result<()> {
        if pending.trim().is_empty() {
            return Ok(());
        }
        let (name, body) =
            pending.split_once(':').ok_or_else(|| Error::Domain(format!("row without name: {pending}")))?;
        let (cmp, at) = ["<=", ">=", "="]
            .iter()
            .find_map(|c| body.find(c).map(|at| (*c, at)))
            .ok_or_else(|| Error::Domain(format!("row without comparator: {pending}")))?;
        let rhs: f64 = body[at + cmp.len()..]
            .trim()
            .parse()
            .map_err(|_| Error::Domain(format!("bad right-hand side: {pending}")))?;
        summary.rows.push(LpRow { name: name.trim().into(), terms: parse_terms(&body[..at])?, cmp: cmp.into(), rhs });
        pending.clear();
        Ok(())
    };

    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.starts_with('\\') || trimmed.is_empty() {
            continue;
        }
        let header = trimmed.to_ascii_lowercase();
        let next = match header.as_str() {
            "minimize" => Some(Section::Objective),
            "subject to" => Some(Section::Rows),
            "bounds" => Some(Section::Bounds),
            "binaries" => Some(Section::Binaries),
            "end" => Some(Section::Done),
            _ => None,
        };
        if let Some(next) = next {
            if section == Section::Objective {
                let body = pending.split_once(':').map_or(pending.as_str(), |(_, b)| b).to_string();
                summary.objective = parse_terms(&body)?;
                pending.clear();
            } else if section == Section::Rows {
                flush_row(&mut pending, &mut summary)?;
            }
            section = next;
            continue;
        }
        match section {
            Section::Objective => {
                pending.push(' ');
                pending.push_str(trimmed);
            }
            Section::Rows => {
                // a new row starts with "name:"
                let starts_row = trimmed.split_whitespace().next().is_some_and(|t| t.ends_with(':'));
                if starts_row {
                    flush_row(&mut pending, &mut summary)?;
                }
                pending.push(' ');
                pending.push_str(trimmed);
            }
            Section::Bounds => {
                let parts: Vec<&str> = trimmed.split_whitespace().collect();
                match parts.as_slice() {
                    [name, "free"] => summary.bounds.push((name.to_string(), f64::NEG_INFINITY, f64::INFINITY)),
                    [lo, "<=", name, "<=", hi] => {
                        let lo: f64 = lo.parse().map_err(|_| Error::Domain(format!("bad bound {trimmed}")))?;
                        let hi: f64 = hi.parse().map_err(|_| Error::Domain(format!("bad bound {trimmed}")))?;
                        summary.bounds.push((name.to_string(), lo, hi));
                    }
                    _ => return Err(Error::Domain(format!("unsupported bound line {trimmed:?}"))),
                }
            }
            Section::Binaries => summary.binaries.extend(trimmed.split_whitespace().map(str::to_string)),
            Section::Head | Section::Done => {}
        }
    }
    if section != Section::Done {
        return Err(Error::Domain("LP text is missing the End marker".into()));
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::presets::{table1_spec, table3_spec};

    #[test]
    fn p1_structure_on_exponential_instance() {
        let spec = table1_spec(Program::P1);
        let m = build_p1(&spec).unwrap();
        assert_eq!(m.binary_count(), 52);
        assert_eq!(m.log_sizes.len(), 53);
        assert_eq!(m.count_rows(RowKind::InitialSize), 1);
        assert_eq!(m.count_rows(RowKind::Recurrence), 52);
        let rec = m.constraints.iter().find(|c| c.kind == RowKind::Recurrence).unwrap();
        assert_eq!(rec.terms.len(), 3);
        assert_relative_eq!(-rec.terms[1].coef, 1.0);
        assert_relative_eq!(-rec.terms[2].coef, -0.916290731874155, max_relative = 1e-12);
        assert_relative_eq!(rec.rhs, 1.5f64.ln(), max_relative = 1e-15);

        let mut no_terminal = spec.clone();
        no_terminal.include_terminal = false;
        let m = build_p1(&no_terminal).unwrap();
        assert_eq!(m.log_sizes.len(), 52);
        assert_eq!(m.count_rows(RowKind::Recurrence), 51);
    }

    #[test]
    fn p1_gompertz_coefficients() {
        let m = build_p1(&table3_spec(Program::P1)).unwrap();
        let rec = m.constraints.iter().find(|c| c.kind == RowKind::Recurrence).unwrap();
        assert!((-rec.terms[1].coef - 0.84).abs() < 0.005);
        assert!((rec.rhs - 1.303).abs() < 0.001, "log alpha = {}", rec.rhs);
    }

    #[test]
    fn smallest_horizon() {
        let mut spec = table1_spec(Program::P1);
        spec.horizon = 1;
        spec.include_terminal = false;
        let m = build_p1(&spec).unwrap();
        assert_eq!(m.count_rows(RowKind::Recurrence), 0);
        assert_eq!(m.objective.len(), 1);
    }

    #[test]
    fn p2_has_one_coefficient_per_treatment() {
        let m = build_p2(&table1_spec(Program::P2)).unwrap();
        assert_eq!(m.binary_count(), 104);
        let rec = m.constraints.iter().find(|c| c.kind == RowKind::Recurrence).unwrap();
        assert_eq!(rec.terms.len(), 4);
        assert_relative_eq!(-rec.terms[2].coef, 0.4f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(-rec.terms[3].coef, 0.3f64.ln(), max_relative = 1e-15);
        assert_eq!(m.count_rows(RowKind::AtMostOne), 52);
        assert!(build_p1(&table1_spec(Program::P2)).is_err());
    }

    #[test]
    fn p3_spacing_rows() {
        let m = build_p3(&table1_spec(Program::P3)).unwrap();
        assert_eq!(m.count_rows(RowKind::Spacing), 51);
        let row = m.constraints.iter().find(|c| c.kind == RowKind::Spacing).unwrap();
        assert_eq!(row.terms.len(), 2);
        assert_eq!(row.rhs, 1.0);

        let mut spec = table1_spec(Program::P3);
        spec.horizon = 5;
        spec.spacing_delta = 2;
        let m = build_p3(&spec).unwrap();
        let names: Vec<_> =
            m.constraints.iter().filter(|c| c.kind == RowKind::Spacing).map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["space_1", "space_2", "space_3"]);
        assert_eq!(m.count_rows(RowKind::SpacingTail), 1);
        let tail = m.constraints.iter().find(|c| c.kind == RowKind::SpacingTail).unwrap();
        assert_eq!((tail.name.as_str(), tail.terms.len(), tail.rhs), ("space_tail_4", 2, 1.0));

        spec.spacing_delta = 5;
        assert!(matches!(build_p3(&spec), Err(Error::Domain(_))));
    }

    #[test]
    fn pi_adds_budget_and_links() {
        let m = build_pi(&table1_spec(Program::P1), Program::P1, 210.0).unwrap();
        assert_eq!(m.count_rows(RowKind::Budget), 1);
        assert_eq!(m.count_rows(RowKind::MaxLink), 53);
        assert_eq!(m.objective.len(), 1);
        assert!(build_pi(&table1_spec(Program::P1), Program::P1, -1.0).is_err());
    }

    #[test]
    fn export_contains_init_row_and_binaries() {
        let m = build_p1(&table1_spec(Program::P1)).unwrap();
        let text = export_lp(&m);
        assert!(text.contains(" init: 1 LS_1 = 3.912023005428146"), "{}", &text[..400]);
        let parsed = parse_lp(&text).unwrap();
        assert_eq!(parsed.binaries.len(), 52);
        assert_eq!(parsed.rows.len(), m.constraints.len());
        assert_eq!(parsed.objective.len(), 52);
        assert_eq!(parsed.bounds.len(), 53);
        // every line stays within common LP reader limits
        assert!(text.lines().all(|l| l.len() < 255));
    }

    #[test]
    fn export_pi_budget_row() {
        let m = build_pi(&table1_spec(Program::P2), Program::P2, 217.0).unwrap();
        let parsed = parse_lp(&export_lp(&m)).unwrap();
        let budget: Vec<_> = parsed.rows.iter().filter(|r| r.name == "budget").collect();
        assert_eq!(budget.len(), 1);
        assert_eq!(budget[0].rhs, 217.0);
        assert_eq!(budget[0].terms.len(), 104);
        assert_eq!(parsed.objective, vec![(1.0, "LSmax".to_string())]);
    }

    #[test]
    fn floor_mode_export_is_linearized() {
        let mut spec = table1_spec(Program::P1);
        spec.horizon = 4;
        spec.floor_mode = true;
        let m = build_p1(&spec).unwrap();
        assert_eq!(m.max_equalities.len(), 4);
        assert_eq!(m.count_rows(RowKind::Recurrence), 0);
        let parsed = parse_lp(&export_lp(&m)).unwrap();
        assert_eq!(parsed.binaries.len(), 8);
        assert_eq!(parsed.rows.len(), m.constraints.len() + 3 * 4);
    }

    #[test]
    fn sig17_formatting() {
        assert_eq!(fmt_sig17(0.0), "0");
        assert_eq!(fmt_sig17(1.0), "1");
        assert_eq!(fmt_sig17(210.0), "210");
        assert_eq!(fmt_sig17(-0.916290731874155), "-0.916290731874155");
        let x = 50f64.ln();
        assert_eq!(fmt_sig17(x).parse::<f64>().unwrap(), x);
    }
}
