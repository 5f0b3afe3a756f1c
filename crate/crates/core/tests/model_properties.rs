//! Invariants of the growth model, simulation, serialization and the MILP models.

use chemosched_core::milp::{self, export_lp, parse_lp};
use chemosched_core::presets::table3_spec;
use chemosched_core::random::{random_spec, InstanceShape};
use chemosched_core::{grow, simulate, solve_general, Objective, ProblemSpec, Program, Schedule};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn draw(seed: u64) -> (ProblemSpec, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = random_spec(&mut rng, &InstanceShape::default());
    (spec, rng)
}

fn random_schedule(rng: &mut ChaCha8Rng, spec: &ProblemSpec) -> Schedule {
    let n = spec.treatments.len();
    Schedule((0..spec.horizon).map(|_| rng.gen_bool(0.4).then(|| rng.gen_range(0..n))).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn log_and_multiplicative_paths_agree(seed in any::<u64>()) {
        let (spec, mut rng) = draw(seed);
        let schedule = random_schedule(&mut rng, &spec);
        let (traj, _) = simulate(&spec, &schedule, false).unwrap();
        let mut s = spec.s_init;
        for k in 0..spec.horizon {
            let keep = schedule.0[k].map_or(1.0, |i| 1.0 - spec.treatments[i].reduction);
            s = keep * grow(s, &spec.growth);
            if spec.floor_mode {
                s = s.max(spec.s_min);
            }
            prop_assert!((traj.sizes[k + 1] - s).abs() <= 1e-9 * s);
            prop_assert!((traj.log_sizes[k + 1] - s.ln()).abs() <= 1e-9 * s.ln().abs().max(1.0));
        }
    }

    #[test]
    fn spec_json_round_trip(seed in any::<u64>()) {
        let (spec, _) = draw(seed);
        let back = ProblemSpec::from_json(&spec.to_json_pretty()).unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn reports_are_deterministic(seed in any::<u64>()) {
        let (spec, _) = draw(seed);
        let a = solve_general(&spec, Objective::MinMaxSize { budget: 40.0 }).unwrap();
        let b = solve_general(&spec, Objective::MinMaxSize { budget: 40.0 }).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn model_accepts_exactly_the_feasible_schedules(seed in any::<u64>()) {
        let (mut spec, mut rng) = draw(seed);
        let n = spec.treatments.len();
        spec.horizon = spec.horizon.min(12 / n);
        spec.forced_periods.retain(|&k| k <= spec.horizon);
        let program = if n > 1 { Program::P2 } else if spec.spacing_delta > 0 { Program::P3 } else { Program::P1 };
        prop_assume!(program != Program::P3 || spec.spacing_delta < spec.horizon);
        let budget = rng.gen_range(0..=50) as f64;
        let model = milp::build_pi(&spec, program, budget).unwrap();
        for _ in 0..300 {
            let schedule = random_schedule(&mut rng, &spec);
            let x: Vec<Vec<bool>> = schedule.0.iter().map(|c| (0..n).map(|i| *c == Some(i)).collect()).collect();
            let (_, feas) = simulate(&spec, &schedule, true).unwrap();
            let expected = feas.is_feasible() && schedule.cost(&spec) <= budget;
            prop_assert_eq!(model.accepts(&x), expected, "{:?}", schedule);
            let implied = model.implied_log_sizes(&x);
            let (traj, _) = simulate(&spec, &schedule, false).unwrap();
            for (a, b) in implied.iter().zip(&traj.log_sizes) {
                prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn lp_text_round_trips(seed in any::<u64>()) {
        let (spec, _) = draw(seed);
        let program = if spec.treatments.len() > 1 { Program::P2 } else if spec.spacing_delta > 0 { Program::P3 } else { Program::P1 };
        prop_assume!(program != Program::P3 || spec.spacing_delta < spec.horizon);
        let model = milp::build_pi(&spec, program, 30.0).unwrap();
        let parsed = parse_lp(&export_lp(&model)).unwrap();
        prop_assert_eq!(parsed.binaries.len(), model.binary_count() + model.max_equalities.len());
        prop_assert_eq!(parsed.rows.len(), model.constraints.len() + 3 * model.max_equalities.len());
        for (row, c) in parsed.rows.iter().zip(&model.constraints) {
            prop_assert_eq!(&row.name, &c.name);
            for ((coef, _), t) in row.terms.iter().zip(&c.terms) {
                prop_assert_eq!(coef.to_bits(), t.coef.to_bits());
            }
        }
    }
}

#[test]
fn gompertz_iteration_converges_to_the_asymptote() {
    let spec = table3_spec(Program::P1);
    let target = 50.0 * 4f64.exp();
    assert!((spec.growth.asymptote().unwrap() - target).abs() < 1e-9 * target);
    let mut s = 150.0;
    let mut previous = s;
    for _ in 0..200 {
        s = grow(s, &spec.growth);
        assert!(s >= previous, "untreated growth is monotone below the asymptote");
        previous = s;
    }
    assert!((s - target).abs() <= 1e-3 * target);
}
