//! Seeded random instances small enough for exhaustive enumeration.

use std::collections::BTreeSet;

use rand::Rng;

use crate::model::{gompertz_coefficients, GompertzParams, GrowthLaw, ProblemSpec, Treatment};
use crate::oracle::MAX_SCHEDULES;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceShape {
    pub min_horizon: usize,
    pub max_horizon: usize,
    pub max_treatments: usize,
    pub max_delta: usize,
    pub allow_forced: bool,
    pub allow_floor: bool,
    pub allow_no_terminal: bool,
}

impl Default for InstanceShape {
    fn default() -> Self {
        InstanceShape {
            min_horizon: 4,
            max_horizon: 14,
            max_treatments: 3,
            max_delta: 2,
            allow_forced: true,
            allow_floor: true,
            allow_no_terminal: true,
        }
    }
}

impl InstanceShape {
    /// Single treatment, no spacing, no forced periods.
    pub fn single() -> Self {
        InstanceShape { max_treatments: 1, max_delta: 0, allow_forced: false, ..Self::default() }
    }
}

fn random_growth<R: Rng>(rng: &mut R, s_tol: f64) -> GrowthLaw {
    loop {
        if rng.gen_bool(0.5) {
            return GrowthLaw::new(rng.gen_range(1.2..2.0), 1.0).expect("alpha > 1");
        }
        let params =
            GompertzParams { phi0: rng.gen_range(20.0..80.0), a: rng.gen_range(0.4..1.0), b: rng.gen_range(0.1..0.3) };
        if let Ok(law) = gompertz_coefficients(&params) {
            // the band must sit well below the asymptote so growth matters
            if law.asymptote().is_some_and(|a| s_tol <= 0.8 * a) {
                return law;
            }
        }
    }
}

/// Draws an instance; it may be infeasible.
pub fn random_spec<R: Rng>(rng: &mut R, shape: &InstanceShape) -> ProblemSpec {
    let n = rng.gen_range(1..=shape.max_treatments.max(1));
    // keep (n + 1)^K within what exhaustive enumeration accepts
    let enumerable = (MAX_SCHEDULES as f64).log2() / ((n + 1) as f64).log2();
    let max_horizon = shape.max_horizon.min(enumerable.floor() as usize).max(shape.min_horizon);
    let horizon = rng.gen_range(shape.min_horizon..=max_horizon);
    let s_tol = rng.gen_range(200.0..600.0);
    let s_min = s_tol * rng.gen_range(0.02..0.2);
    let s_init = rng.gen_range(s_min * 1.5..s_tol * 0.9);
    let growth = random_growth(rng, s_tol);
    let treatments =
        (0..n).map(|i| Treatment::new(i + 1, rng.gen_range(5..=15) as f64, rng.gen_range(0.3..0.8))).collect();
    let spacing_delta = if n == 1 { rng.gen_range(0..=shape.max_delta) } else { 0 };
    let mut forced_periods = BTreeSet::new();
    if shape.allow_forced && rng.gen_bool(0.2) {
        forced_periods.insert(rng.gen_range(1..=horizon));
    }
    ProblemSpec {
        horizon,
        s_init,
        s_min,
        s_tol,
        growth,
        treatments,
        spacing_delta,
        forced_periods,
        floor_mode: shape.allow_floor && rng.gen_bool(0.2),
        include_terminal: !(shape.allow_no_terminal && rng.gen_bool(0.2)),
    }
}
