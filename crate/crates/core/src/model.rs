//! Domain types and tumor dynamics.
//!
//! Dynamics are evaluated in log space: `LS' = log(alpha) + beta * LS + log(1 - RF)`
//! for a treated period and without the last term otherwise; feasibility is
//! decided on log sizes. The multiplicative form ([`grow`], [`treat`]) is kept
//! as an independent path: [`simulate`] cross-checks the two and reports sizes
//! from it, so that `S_1` reads back as exactly `S_init`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance applied to log-size comparisons against band bounds.
pub const BAND_TOL: f64 = 1e-9;

/// Relative agreement required between the log and multiplicative trajectories.
const PATH_AGREEMENT_TOL: f64 = 1e-9;

/// Key identifying log sizes equal to 12 significant digits.
pub(crate) fn sig12_key(x: f64) -> (i32, i64) {
    if x == 0.0 {
        return (0, 0);
    }
    let exp = x.abs().log10().floor() as i32;
    let mantissa = (x / 10f64.powi(exp - 11)).round() as i64;
    (exp, mantissa)
}

/// `value <= bound` up to [`BAND_TOL`] relative to the bound.
#[inline]
pub fn le_tol(value: f64, bound: f64) -> bool {
    value <= bound + BAND_TOL * bound.abs().max(1.0)
}

/// `value >= bound` up to [`BAND_TOL`] relative to the bound.
#[inline]
pub fn ge_tol(value: f64, bound: f64) -> bool {
    value >= bound - BAND_TOL * bound.abs().max(1.0)
}

/// Power-law growth between period starts, `f(S) = alpha * S^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GrowthInput")]
pub struct GrowthLaw {
    pub alpha: f64,
    pub beta: f64,
}

impl GrowthLaw {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidGrowth(format!("alpha must be positive, got {alpha}")));
        }
        if !(beta.is_finite() && beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidGrowth(format!("beta must lie in (0, 1], got {beta}")));
        }
        if beta == 1.0 && alpha <= 1.0 {
            return Err(Error::InvalidGrowth(format!(
                "exponential law needs alpha > 1 for the tumor to grow, got {alpha}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn log_alpha(&self) -> f64 {
        self.alpha.ln()
    }

    /// Fixed point `alpha^(1/(1-beta))` of a Gompertz law; `None` when `beta = 1`.
    pub fn asymptote(&self) -> Option<f64> {
        (self.beta < 1.0).then(|| self.alpha.powf(1.0 / (1.0 - self.beta)))
    }

    /// Whether `f(S) > S` at both ends of `[lo, hi]`. `alpha * S^(beta - 1)` is
    /// monotone in `S`, so the endpoints decide the whole interval.
    pub fn grows_on(&self, lo: f64, hi: f64) -> bool {
        grow(lo, self) > lo && grow(hi, self) > hi
    }
}

/// Accepted JSON encodings of a growth law; parameter blocks are converted on load.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum GrowthInput {
    Raw { alpha: f64, beta: f64 },
    Exponential { exponential: ExponentialParams },
    Gompertz { gompertz: GompertzParams },
}

impl TryFrom<GrowthInput> for GrowthLaw {
    type Error = Error;

    fn try_from(input: GrowthInput) -> Result<Self> {
        match input {
            GrowthInput::Raw { alpha, beta } => GrowthLaw::new(alpha, beta),
            GrowthInput::Exponential { exponential } => exponential_coefficients(&exponential),
            GrowthInput::Gompertz { gompertz } => gompertz_coefficients(&gompertz),
        }
    }
}

/// `phi(t) = phi0 * e^(b t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialParams {
    pub phi0: f64,
    pub b: f64,
}

/// `phi(t) = phi0 * e^((a / b)(1 - e^(-b t)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GompertzParams {
    pub phi0: f64,
    pub a: f64,
    pub b: f64,
}

/// Per-period multiplier for exponential growth, taken as `alpha = ln(b)`.
pub fn exponential_coefficients(params: &ExponentialParams) -> Result<GrowthLaw> {
    if !(params.b > 1.0) {
        return Err(Error::InvalidGrowth(format!("exponential rate parameter b must exceed 1, got {}", params.b)));
    }
    GrowthLaw::new(params.b.ln(), 1.0)
}

/// Recurrence coefficients of the Gompertz curve:
/// `alpha = (phi0 e^(a/b))^(1 - e^(-b))`, `beta = e^(-b)`.
pub fn gompertz_coefficients(params: &GompertzParams) -> Result<GrowthLaw> {
    let GompertzParams { phi0, a, b } = *params;
    for (name, v) in [("phi0", phi0), ("a", a), ("b", b)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!("Gompertz parameter {name} must be positive, got {v}")));
        }
    }
    let beta = (-b).exp();
    // log-domain evaluation avoids overflow of e^(a/b) for small b
    let log_alpha = (phi0.ln() + a / b) * (1.0 - beta);
    GrowthLaw::new(log_alpha.exp(), beta)
}

/// `f(s) = alpha * s^beta`.
#[inline]
pub fn grow(s: f64, law: &GrowthLaw) -> f64 {
    law.alpha * s.powf(law.beta)
}

/// `g(s) = (1 - rf) * f(s)`.
#[inline]
pub fn treat(s: f64, law: &GrowthLaw, rf: f64) -> f64 {
    (1.0 - rf) * grow(s, law)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Treatment {
    pub id: usize,
    pub cost: f64,
    pub reduction: f64,
}

impl Treatment {
    pub fn new(id: usize, cost: f64, reduction: f64) -> Self {
        Self { id, cost, reduction }
    }

    /// `log(1 - RF)`, the additive effect of one dose on the log size.
    pub fn log_keep(&self) -> f64 {
        (1.0 - self.reduction).ln()
    }
}

fn default_true() -> bool {
    true
}

/// A full problem instance.
///
/// Periods are numbered `1..=K`; sizes are indexed `1..=K+1` where `S_1 = s_init`
/// and `S_{k+1}` results from the decision taken at the start of period `k`.
/// `S_{K+1}` is always computed and is subject to the band (and the max-size
/// objective) only when `include_terminal` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(rename = "K")]
    pub horizon: usize,
    pub s_init: f64,
    pub s_min: f64,
    pub s_tol: f64,
    pub growth: GrowthLaw,
    pub treatments: Vec<Treatment>,
    #[serde(default)]
    pub spacing_delta: usize,
    #[serde(default)]
    pub forced_periods: BTreeSet<usize>,
    #[serde(default)]
    pub floor_mode: bool,
    #[serde(default = "default_true")]
    pub include_terminal: bool,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialization is infallible")
    }

    /// Number of size indices subject to the band: `K`, or `K + 1` with the terminal size.
    pub fn tracked_len(&self) -> usize {
        if self.include_terminal {
            self.horizon + 1
        } else {
            self.horizon
        }
    }

    /// Whether size index `index` (1-based) is band-constrained.
    pub fn is_tracked(&self, index: usize) -> bool {
        index >= 1 && index <= self.tracked_len()
    }

    pub fn log_s_min(&self) -> f64 {
        self.s_min.ln()
    }

    pub fn log_s_tol(&self) -> f64 {
        self.s_tol.ln()
    }

    pub fn is_forced(&self, period: usize) -> bool {
        self.forced_periods.contains(&period)
    }

    /// One log-space transition from `ls` with the given choice; applies the floor
    /// clamp in floor mode. No band check.
    pub fn next_log_size(&self, ls: f64, choice: Option<usize>) -> f64 {
        let keep = choice.map_or(0.0, |i| self.treatments[i].log_keep());
        let raw = keep + self.growth.log_alpha() + self.growth.beta * ls;
        if self.floor_mode {
            raw.max(self.log_s_min())
        } else {
            raw
        }
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        validate_spec(self)
    }

    /// Returns the spec unchanged when validation reports no errors.
    pub fn validated(self) -> Result<Self> {
        let diags = validate_spec(&self);
        if diags.iter().any(Diagnostic::is_error) {
            Err(Error::InvalidSpec(diags))
        } else {
            Ok(self)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub message: String,
}

impl Diagnostic {
    fn error(code: &str, message: impl Into<String>) -> Self {
        Self { severity: Severity::Error, code: code.to_string(), message: message.into() }
    }

    fn warning(code: &str, message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, code: code.to_string(), message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}[{}]: {}", self.code, self.message)
    }
}

/// Checks every instance invariant. Never fails; errors carry `Severity::Error`.
pub fn validate_spec(spec: &ProblemSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    if spec.horizon == 0 {
        out.push(Diagnostic::error("empty-horizon", "K must be at least 1"));
    }
    let positive = [("s_init", spec.s_init), ("s_min", spec.s_min), ("s_tol", spec.s_tol)];
    let mut sizes_ok = true;
    for (name, v) in positive {
        if !(v.is_finite() && v > 0.0) {
            out.push(Diagnostic::error("nonpositive-size", format!("{name} must be positive, got {v}")));
            sizes_ok = false;
        }
    }
    if sizes_ok {
        if !(spec.s_min < spec.s_tol) {
            out.push(Diagnostic::error(
                "empty-band",
                format!("s_min ({}) must be below s_tol ({})", spec.s_min, spec.s_tol),
            ));
        }
        if !(spec.s_min < spec.s_init) {
            out.push(Diagnostic::error(
                "init-below-band",
                format!("s_init ({}) must exceed s_min ({})", spec.s_init, spec.s_min),
            ));
        }
        if spec.s_init > spec.s_tol {
            out.push(Diagnostic::error(
                "init-above-band",
                format!("s_init ({}) exceeds s_tol ({})", spec.s_init, spec.s_tol),
            ));
        }
    }

    if let Err(e) = GrowthLaw::new(spec.growth.alpha, spec.growth.beta) {
        out.push(Diagnostic::error("invalid-growth", e.to_string()));
    } else if sizes_ok && spec.s_min < spec.s_tol && !spec.growth.grows_on(spec.s_min, spec.s_tol) {
        out.push(Diagnostic::error(
            "no-growth",
            format!(
                "f(S) = {} S^{} does not exceed S over [{}, {}]",
                spec.growth.alpha, spec.growth.beta, spec.s_min, spec.s_tol
            ),
        ));
    }

    if spec.treatments.is_empty() {
        out.push(Diagnostic::error("no-treatments", "at least one treatment is required"));
    }
    let mut ids = BTreeSet::new();
    for t in &spec.treatments {
        if !ids.insert(t.id) {
            out.push(Diagnostic::error("duplicate-treatment-id", format!("treatment id {} repeats", t.id)));
        }
        if !(t.cost.is_finite() && t.cost > 0.0) {
            out.push(Diagnostic::error(
                "nonpositive-cost",
                format!("treatment {} cost must be positive, got {}", t.id, t.cost),
            ));
        }
        if !(t.reduction > 0.0 && t.reduction < 1.0) {
            out.push(Diagnostic::error(
                "reduction-range",
                format!("treatment {} reduction must lie in (0, 1), got {}", t.id, t.reduction),
            ));
        } else if !spec.floor_mode && sizes_ok && treat(spec.s_init, &spec.growth, t.reduction) < spec.s_min {
            out.push(Diagnostic::warning(
                "undershoot-at-start",
                format!(
                    "treatment {} from s_init lands at {:.4} below s_min {}",
                    t.id,
                    treat(spec.s_init, &spec.growth, t.reduction),
                    spec.s_min
                ),
            ));
        }
    }

    for &k in &spec.forced_periods {
        if k == 0 || k > spec.horizon {
            out.push(Diagnostic::error(
                "forced-out-of-horizon",
                format!("forced period {k} is outside 1..={}", spec.horizon),
            ));
        }
    }
    if spec.spacing_delta > 0 {
        let forced: Vec<usize> = spec.forced_periods.iter().copied().collect();
        for w in forced.windows(2) {
            if w[1] - w[0] <= spec.spacing_delta {
                out.push(Diagnostic::error(
                    "forced-spacing-conflict",
                    format!(
                        "forced periods {} and {} are closer than the spacing delta {} allows",
                        w[0], w[1], spec.spacing_delta
                    ),
                ));
            }
        }
        if spec.spacing_delta >= spec.horizon && spec.horizon > 0 {
            out.push(Diagnostic::warning(
                "spacing-exceeds-horizon",
                format!("delta {} >= K {}: at most one treatment is possible", spec.spacing_delta, spec.horizon),
            ));
        }
    }
    out
}

/// Per-period decisions: `None` for no treatment, `Some(i)` for treatment at
/// position `i` of the spec's menu.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule(pub Vec<Option<usize>>);

impl Schedule {
    pub fn untreated(horizon: usize) -> Self {
        Self(vec![None; horizon])
    }

    /// Builds a schedule from `(period, treatment index)` pairs, periods 1-based.
    pub fn from_treated(horizon: usize, treated: &[(usize, usize)]) -> Result<Self> {
        let mut choices = vec![None; horizon];
        for &(period, index) in treated {
            if period == 0 || period > horizon {
                return Err(Error::Domain(format!("period {period} outside 1..={horizon}")));
            }
            choices[period - 1] = Some(index);
        }
        Ok(Self(choices))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Choice at 1-based period `k`.
    pub fn at(&self, period: usize) -> Option<usize> {
        self.0[period - 1]
    }

    /// 1-based periods that receive a treatment.
    pub fn treated_periods(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter_map(|(i, c)| c.map(|_| i + 1)).collect()
    }

    pub fn counts(&self, menu_len: usize) -> Vec<usize> {
        let mut counts = vec![0; menu_len];
        for i in self.0.iter().flatten() {
            if *i < menu_len {
                counts[*i] += 1;
            }
        }
        counts
    }

    pub fn cost(&self, spec: &ProblemSpec) -> f64 {
        self.0.iter().flatten().map(|&i| spec.treatments[i].cost).sum()
    }

    /// Min and max number of untreated periods between consecutive treatments.
    pub fn spacing_stats(&self) -> Option<(usize, usize)> {
        let treated = self.treated_periods();
        let gaps = treated.windows(2).map(|w| w[1] - w[0] - 1);
        gaps.fold(None, |acc, g| match acc {
            None => Some((g, g)),
            Some((lo, hi)) => Some((lo.min(g), hi.max(g))),
        })
    }
}

/// Sizes `S_1..S_{K+1}` and their logs, with the decision per period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub sizes: Vec<f64>,
    pub log_sizes: Vec<f64>,
    pub treated: Vec<Option<usize>>,
}

impl Trajectory {
    /// Size at 1-based index.
    pub fn size(&self, index: usize) -> f64 {
        self.sizes[index - 1]
    }

    /// Largest log size over the first `tracked` indices.
    pub fn max_log_size(&self, tracked: usize) -> f64 {
        self.log_sizes[..tracked].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// 1-based index of the largest tracked size (first one on ties).
    pub fn argmax(&self, tracked: usize) -> usize {
        let mut best = 0;
        for i in 1..tracked {
            if self.log_sizes[i] > self.log_sizes[best] {
                best = i;
            }
        }
        best + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandViolation {
    pub index: usize,
    pub size: f64,
    pub bound: Bound,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub band: Vec<BandViolation>,
    /// Pairs of treated periods closer than the spacing delta allows.
    pub spacing: Vec<(usize, usize)>,
    /// Forced periods left untreated.
    pub forced_missing: Vec<usize>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.band.is_empty() && self.spacing.is_empty() && self.forced_missing.is_empty()
    }
}

fn check_schedule_shape(spec: &ProblemSpec, schedule: &Schedule) -> Result<()> {
    if schedule.len() != spec.horizon {
        return Err(Error::ScheduleLength { expected: spec.horizon, got: schedule.len() });
    }
    for (k, choice) in schedule.0.iter().enumerate() {
        if let Some(i) = *choice {
            if i >= spec.treatments.len() {
                return Err(Error::UnknownTreatment { period: k + 1, index: i });
            }
        }
    }
    Ok(())
}

/// Runs a schedule forward.
///
/// Infeasibility is reported, never returned as an error; errors only signal a
/// malformed schedule or disagreement between the log and multiplicative paths.
/// With `enforce_band` off no band violations are recorded.
pub fn simulate(
    spec: &ProblemSpec,
    schedule: &Schedule,
    enforce_band: bool,
) -> Result<(Trajectory, FeasibilityReport)> {
    check_schedule_shape(spec, schedule)?;
    let k_max = spec.horizon;

    let mut log_sizes = Vec::with_capacity(k_max + 1);
    let mut mult = Vec::with_capacity(k_max + 1);
    log_sizes.push(spec.s_init.ln());
    mult.push(spec.s_init);
    for k in 1..=k_max {
        let choice = schedule.at(k);
        log_sizes.push(spec.next_log_size(log_sizes[k - 1], choice));
        let prev = mult[k - 1];
        let mut next = match choice {
            Some(i) => treat(prev, &spec.growth, spec.treatments[i].reduction),
            None => grow(prev, &spec.growth),
        };
        if spec.floor_mode {
            next = next.max(spec.s_min);
        }
        mult.push(next);
    }

    for (idx, (a, b)) in log_sizes.iter().map(|ls| ls.exp()).zip(&mult).enumerate() {
        if ((a - b) / b).abs() > PATH_AGREEMENT_TOL {
            return Err(Error::Internal(format!(
                "log and multiplicative trajectories disagree at index {}: {a} vs {b}",
                idx + 1
            )));
        }
    }

    let mut report = FeasibilityReport::default();
    if enforce_band {
        let (lo, hi) = (spec.log_s_min(), spec.log_s_tol());
        for index in 1..=spec.tracked_len() {
            let ls = log_sizes[index - 1];
            if !le_tol(ls, hi) {
                report.band.push(BandViolation { index, size: mult[index - 1], bound: Bound::Upper });
            } else if !ge_tol(ls, lo) {
                report.band.push(BandViolation { index, size: mult[index - 1], bound: Bound::Lower });
            }
        }
    }
    let treated = schedule.treated_periods();
    for w in treated.windows(2) {
        if w[1] - w[0] <= spec.spacing_delta {
            report.spacing.push((w[0], w[1]));
        }
    }
    report.forced_missing =
        spec.forced_periods.iter().copied().filter(|&k| k <= k_max && schedule.at(k).is_none()).collect();

    Ok((Trajectory { sizes: mult, log_sizes, treated: schedule.0.clone() }, report))
}
