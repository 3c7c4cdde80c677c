//! Cross-path checks on solver output: folded residuals against brute-force
//! residuals, fixed points against trajectories, decompositions against the
//! independent verifier.

use proptest::prelude::*;

use volterra_periodic::asymptotic_solver::solve_asymptotic;
use volterra_periodic::config::{example_one, example_two, parse_scenario, Scenario};
use volterra_periodic::periodic_solver::{apply_e, solve_periodic, InitialGuess, SolverOptions};
use volterra_periodic::verify::{periodic_max_defect, verify_decomposition, verify_periodic};
use volterra_periodic::{Kernel, PeriodicSequence, SystemSpec, TruncationPolicy};

fn nontrivial_example_one() -> (PeriodicSequence, PeriodicSequence) {
    let opts = SolverOptions {
        initial_guess: InitialGuess::Pair {
            x: vec![-1.0, -2.0],
            y: vec![-2.0, -1.0],
        },
        ..SolverOptions::default()
    };
    let report = solve_periodic(&example_one(), &opts).unwrap();
    assert!(report.converged, "{report:?}");
    (report.x, report.y)
}

/// Residual of the recurrence with the inner sums folded into lag weights.
fn folded_defect(spec: &SystemSpec, x: &PeriodicSequence, y: &PeriodicSequence, n: i64) -> f64 {
    let t = spec.period as i64;
    let fold = |k: &Kernel, src: &PeriodicSequence, f: &dyn Fn(f64) -> f64| {
        let w = k.folded_weights(spec.period).unwrap();
        let row = &w[n.rem_euclid(t) as usize];
        (0..t)
            .map(|r| row[r as usize] * f(src.get(n - r)))
            .sum::<f64>()
    };
    let sx = fold(&spec.a, y, &|v| spec.f.eval(v));
    let sy = fold(&spec.b, x, &|v| spec.g.eval(v));
    let rx = x.get(n + 1) - (1.0 + spec.h.get(n)) * x.get(n) - sx;
    let ry = y.get(n + 1) - (1.0 + spec.p.get(n)) * y.get(n) - sy;
    rx.abs().max(ry.abs())
}

#[test]
fn brute_and_folded_residuals_agree() {
    let spec = example_one();
    let (x, y) = nontrivial_example_one();
    let folded = (0..20)
        .map(|n| folded_defect(&spec, &x, &y, n))
        .fold(0.0, f64::max);
    let brute = periodic_max_defect(&spec, &x, &y, 20).unwrap();
    assert!(
        (folded - brute).abs() <= 1e-9,
        "folded {folded:e}, brute {brute:e}"
    );
}

#[test]
fn periodic_solution_is_a_fixed_point() {
    let spec = example_one();
    let (x, y) = nontrivial_example_one();
    let v = verify_periodic(&spec, &x, &y, 21).unwrap();
    assert!(v.max_defect <= 1e-8 && v.drift <= 1e-6, "{v:?}");
    let (ex, ey) = apply_e(&spec, &x, &y).unwrap();
    let gap = (0..2)
        .map(|n| {
            (ex.get(n) - x.get(n))
                .abs()
                .max((ey.get(n) - y.get(n)).abs())
        })
        .fold(0.0, f64::max);
    assert!(gap <= 10.0 * 1e-8, "‖z - E(z)‖ = {gap:e}");
}

#[test]
fn decomposition_verifies_for_several_constants() {
    let policy = TruncationPolicy::new(1e-10, 100_000).unwrap();
    for (c1, c2) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.25)] {
        let (dec, report) = solve_asymptotic(
            &example_two(),
            c1,
            c2,
            40,
            &SolverOptions::default(),
            &policy,
        )
        .unwrap();
        assert!(report.converged, "c = ({c1}, {c2}): {report:?}");
        let v = verify_decomposition(&example_two(), &dec).unwrap();
        assert!(v.pass, "c = ({c1}, {c2}): {v:?}");
    }
}

fn scenario_strategy() -> impl Strategy<Value = Scenario> {
    (
        1usize..4,
        prop::collection::vec(-0.9f64..2.0, 3),
        prop::collection::vec(-0.9f64..2.0, 3),
        0.1f64..3.0,
        0.0f64..2.0,
        -2.0f64..2.0,
        1usize..200,
    )
        .prop_map(|(t, h, p, rho, gap, c, horizon)| {
            let mut s = Scenario::from_system(
                SystemSpec::new(
                    PeriodicSequence::new(h[..t].to_vec()).unwrap(),
                    PeriodicSequence::new(p[..t].to_vec()).unwrap(),
                    Kernel::separable_exponential(c, rho, rho + gap).unwrap(),
                    Kernel::finite_lag(vec![vec![c, 0.5]; t]).unwrap(),
                    example_one().f,
                    example_two().g,
                )
                .unwrap(),
            );
            s.c1 = c;
            s.horizon = Some(horizon);
            s
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_echo_round_trips(s in scenario_strategy()) {
        let back = parse_scenario(&s.to_json()).unwrap();
        prop_assert_eq!(back, s);
    }
}
