//! Threshold policy: treat at the start of period `k` exactly when `S_k` exceeds
//! the size whose untreated growth reaches `S_Tol`. The policy is optimal for a
//! single treatment whenever treating-then-growing never ends above
//! growing-then-treating, `g(f(S)) <= f(g(S))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ge_tol, grow, le_tol, simulate, ProblemSpec, Schedule, Trajectory, BAND_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicResult {
    pub threshold: f64,
    pub schedule: Schedule,
    pub trajectory: Trajectory,
    pub cost: f64,
    pub optimality_certified: bool,
}

/// `S_bar = (S_Tol / alpha)^(1 / beta)`, the unique solution of `f(S_bar) = S_Tol`.
pub fn threshold(spec: &ProblemSpec) -> f64 {
    (spec.s_tol / spec.growth.alpha).powf(1.0 / spec.growth.beta)
}

/// Runs the threshold policy with `treatments[0]`.
///
/// The last period is only considered when the terminal size is band-constrained.
pub fn heuristic_schedule(spec: &ProblemSpec) -> Result<HeuristicResult> {
    let refuse = |reason: &str| Err(Error::WrongProgram { program: "heuristic".into(), reason: reason.into() });
    if spec.treatments.len() != 1 {
        return refuse("needs exactly one treatment");
    }
    if spec.spacing_delta != 0 {
        return refuse("does not handle spacing constraints");
    }
    if !spec.forced_periods.is_empty() {
        return refuse("does not handle forced periods");
    }
    let errors: Vec<_> = spec.validate().into_iter().filter(|d| d.is_error()).collect();
    if !errors.is_empty() {
        return Err(Error::InvalidSpec(errors));
    }

    let s_bar = threshold(spec);
    let log_bar = s_bar.ln();
    let (lo, hi) = (spec.log_s_min(), spec.log_s_tol());
    let mut ls = spec.s_init.ln();
    let mut choices = Vec::with_capacity(spec.horizon);
    for period in 1..=spec.horizon {
        let next_tracked = spec.is_tracked(period + 1);
        let over = ls > log_bar + BAND_TOL * log_bar.abs().max(1.0);
        let choice = (next_tracked && over).then_some(0);
        let next = spec.next_log_size(ls, choice);
        if next_tracked {
            if !le_tol(next, hi) {
                return Err(Error::Infeasible {
                    period,
                    reason: format!("size {:.4} exceeds s_tol even after treatment", next.exp()),
                });
            }
            if !ge_tol(next, lo) {
                return Err(Error::Infeasible {
                    period,
                    reason: format!("treatment would take the size to {:.4}, below s_min", next.exp()),
                });
            }
        }
        choices.push(choice);
        ls = next;
    }

    let schedule = Schedule(choices);
    let (trajectory, feas) = simulate(spec, &schedule, true)?;
    if !feas.is_feasible() {
        return Err(Error::Internal(format!("heuristic schedule failed re-simulation: {feas:?}")));
    }
    let cost = schedule.cost(spec);
    let optimality_certified = commutation_holds(spec)?[0];
    Ok(HeuristicResult { threshold: s_bar, schedule, trajectory, cost, optimality_certified })
}

/// Per treatment, whether `g(f(S)) <= f(g(S))` holds over the spec's band.
pub fn commutation_holds(spec: &ProblemSpec) -> Result<Vec<bool>> {
    spec.treatments
        .iter()
        .map(|t| commutation_check(spec.growth.alpha, spec.growth.beta, t.reduction, spec.s_min, spec.s_tol))
        .collect()
}

/// Raw form of [`commutation_holds`] for arbitrary coefficients (including
/// `beta > 1`, which no [`crate::GrowthLaw`] accepts).
///
/// The analytic verdict is `(1 - rf) <= (1 - rf)^beta`; it is confirmed
/// numerically at 100 log-spaced sizes in `[lo, hi]`.
pub fn commutation_check(alpha: f64, beta: f64, rf: f64, lo: f64, hi: f64) -> Result<bool> {
    let keep = 1.0 - rf;
    let analytic = keep <= keep.powf(beta);
    let law = crate::GrowthLaw { alpha, beta };
    const SAMPLES: usize = 100;
    let numeric = (0..SAMPLES).all(|j| {
        let s = (lo.ln() + (hi.ln() - lo.ln()) * j as f64 / (SAMPLES - 1) as f64).exp();
        let treat_after_growth = keep * grow(grow(s, &law), &law);
        let grow_after_treatment = grow(keep * grow(s, &law), &law);
        treat_after_growth <= grow_after_treatment * (1.0 + 1e-12)
    });
    if analytic != numeric {
        return Err(Error::Internal(format!(
            "commutation verdicts disagree for alpha={alpha}, beta={beta}, rf={rf}: analytic {analytic}, numeric {numeric}"
        )));
    }
    Ok(analytic)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::model::GrowthLaw;
    use crate::presets::{table1_spec, table3_spec};
    use crate::Program;

    #[test]
    fn threshold_values() {
        assert_relative_eq!(threshold(&table1_spec(Program::P1)), 500.0 / 1.5, max_relative = 1e-12);

        // independent root of alpha S^beta = 500 by bisection
        let spec = table3_spec(Program::P1);
        let (mut lo, mut hi) = (1.0, 500.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if grow(mid, &spec.growth) < 500.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_relative_eq!(threshold(&spec), 0.5 * (lo + hi), max_relative = 1e-10);
        assert!((threshold(&spec) - 357.6).abs() < 0.2, "{}", threshold(&spec));

        let mut unit = table1_spec(Program::P1);
        unit.s_tol = unit.growth.alpha;
        assert_relative_eq!(threshold(&unit), 1.0);
    }

    #[test]
    fn published_heuristic_costs() {
        let r = heuristic_schedule(&table1_spec(Program::P1)).unwrap();
        assert_eq!(r.cost, 210.0);
        assert_eq!(r.schedule.treated_periods().len(), 21);
        assert!(r.optimality_certified);

        let r = heuristic_schedule(&table3_spec(Program::P1)).unwrap();
        assert_eq!(r.cost, 200.0);
        assert!(r.optimality_certified);
    }

    #[test]
    fn policy_treats_exactly_above_threshold() {
        let spec = table3_spec(Program::P1);
        let r = heuristic_schedule(&spec).unwrap();
        for k in 1..=spec.horizon {
            assert_eq!(r.schedule.at(k).is_some(), r.trajectory.size(k) > r.threshold, "period {k}");
        }
        assert_relative_eq!(grow(r.threshold, &spec.growth), spec.s_tol, max_relative = 1e-9);
    }

    #[test]
    fn never_triggers_on_short_horizon() {
        let mut spec = table1_spec(Program::P1);
        spec.horizon = 4;
        let r = heuristic_schedule(&spec).unwrap();
        assert_eq!(r.cost, 0.0);
    }

    #[test]
    fn refuses_unsupported_shapes() {
        assert!(matches!(heuristic_schedule(&table1_spec(Program::P2)), Err(Error::WrongProgram { .. })));
        assert!(matches!(heuristic_schedule(&table1_spec(Program::P3)), Err(Error::WrongProgram { .. })));
        let mut forced = table1_spec(Program::P1);
        forced.forced_periods.insert(3);
        assert!(heuristic_schedule(&forced).is_err());
    }

    #[test]
    fn undershoot_is_an_error() {
        // treating from just above the threshold lands below a high floor
        let mut spec = table1_spec(Program::P1);
        spec.s_min = 250.0;
        spec.s_init = 340.0;
        let err = heuristic_schedule(&spec).unwrap_err();
        assert!(matches!(err, Error::Infeasible { period: 1, .. }), "{err}");
    }

    #[test]
    fn commutation_verdicts() {
        let exp = table1_spec(Program::P1);
        assert_eq!(commutation_holds(&exp).unwrap(), vec![true]);
        // beta = 1: both orders coincide
        let law = exp.growth;
        let s = 123.0;
        let gf = 0.4 * grow(grow(s, &law), &law);
        let fg = grow(0.4 * grow(s, &law), &law);
        assert_relative_eq!(gf, fg, max_relative = 1e-14);

        let g = GrowthLaw::new(3.68, 0.84).unwrap();
        assert!(commutation_check(g.alpha, g.beta, 0.6, 60.0, 500.0).unwrap());
        let s = 200.0;
        assert!(0.4 * grow(grow(s, &g), &g) < grow(0.4 * grow(s, &g), &g));

        assert!(!commutation_check(1.5, 1.2, 0.6, 10.0, 500.0).unwrap());
    }
}
