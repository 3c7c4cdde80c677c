use std::path::Path;

use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use volterra_periodic::asymptotic_solver::{
    default_horizon, solve_asymptotic, Decomposition, TailOperator, Window,
};
use volterra_periodic::config::{parse_scenario, Scenario};
use volterra_periodic::periodic_solver::{solve_periodic, PeriodicOperator, PeriodicSolveReport};
use volterra_periodic::simulate::{residual, simulate, trajectory_residuals};
use volterra_periodic::system::{
    check_asymptotic_hypotheses, check_periodic_hypotheses, CheckReport,
};
use volterra_periodic::verify::{verify_decomposition, verify_periodic, DRIFT_TOL};
use volterra_periodic::{PeriodicSequence, PRODUCT_ONE_TOL};

use crate::table::{self, Row};
use crate::{
    AsymptoticArgs, CheckArgs, Command, Common, Constants, Mode, PeriodicArgs, SimulateArgs,
    Tolerances, VerifyArgs,
};

/// Random states drawn per operator probe.
const PROBE_STATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// A hypothesis check failed, or a solve did not converge or verify.
    Failed,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Failed => 2,
        }
    }

    fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Success
        } else {
            Outcome::Failed
        }
    }
}

pub fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Check(args) => check(args),
        Command::Simulate(args) => simulate_cmd(args),
        Command::SolvePeriodic(args) => solve_periodic_cmd(args),
        Command::SolveAsymptotic(args) => solve_asymptotic_cmd(args),
        Command::Verify(args) => verify_cmd(args),
    }
}

fn load(common: &Common) -> Result<Scenario> {
    let text = std::fs::read_to_string(&common.config)
        .with_context(|| format!("reading config {}", common.config.display()))?;
    parse_scenario(&text).with_context(|| format!("in {}", common.config.display()))
}

fn apply_tolerances(scenario: &mut Scenario, tol: &Tolerances) -> Result<()> {
    if let Some(t) = tol.tol {
        scenario.solver.tol = t;
        scenario
            .solver
            .validate(scenario.system.period)
            .context("--tol")?;
    }
    set_tail_tol(scenario, tol.tail_tol)
}

fn set_tail_tol(scenario: &mut Scenario, tail_tol: Option<f64>) -> Result<()> {
    if let Some(t) = tail_tol {
        scenario.truncation.tail_tol = t;
        scenario.truncation.validate().context("--tail-tol")?;
    }
    Ok(())
}

fn apply_constants(scenario: &mut Scenario, c: &Constants) -> Result<()> {
    for (flag, value, slot) in [
        ("--c1", c.c1, &mut scenario.c1),
        ("--c2", c.c2, &mut scenario.c2),
    ] {
        if let Some(v) = value {
            anyhow::ensure!(v.is_finite(), "{flag} must be finite");
            *slot = v;
        }
    }
    Ok(())
}

fn emit(out: Option<&Path>, report: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    match out {
        Some(path) => {
            std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn detect_mode(scenario: &Scenario) -> Mode {
    if (scenario.system.h.period_product() - 1.0).abs() <= PRODUCT_ONE_TOL {
        Mode::Asymptotic
    } else {
        Mode::Periodic
    }
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Periodic => "periodic",
        Mode::Asymptotic => "asymptotic",
    }
}

fn run_check(scenario: &Scenario, mode: Mode) -> CheckReport {
    match mode {
        Mode::Periodic => check_periodic_hypotheses(&scenario.system),
        Mode::Asymptotic => check_asymptotic_hypotheses(&scenario.system, scenario.c1, scenario.c2),
    }
}

fn report_failed_check(
    command: &str,
    scenario: &Scenario,
    check: &CheckReport,
    out: Option<&Path>,
) -> Result<Outcome> {
    if let Some(item) = check.first_failure() {
        eprintln!("hypothesis `{}` failed: {}", item.id, item.detail);
    }
    emit(
        out,
        &json!({ "command": command, "config": scenario.to_value(), "check": check }),
    )?;
    Ok(Outcome::Failed)
}

fn check(args: CheckArgs) -> Result<Outcome> {
    let mut scenario = load(&args.common)?;
    apply_constants(&mut scenario, &args.constants)?;
    let mode = args.mode.unwrap_or_else(|| detect_mode(&scenario));
    let report = run_check(&scenario, mode);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(item) = report.first_failure() {
        eprintln!("hypothesis `{}` failed: {}", item.id, item.detail);
    }
    emit(
        args.common.out.as_deref(),
        &json!({
            "command": "check",
            "mode": mode_name(mode),
            "config": scenario.to_value(),
            "check": report,
        }),
    )?;
    Ok(Outcome::from_bool(report.pass))
}

fn simulate_cmd(args: SimulateArgs) -> Result<Outcome> {
    let mut scenario = load(&args.common)?;
    set_tail_tol(&mut scenario, args.tail_tol)?;
    let policy = scenario.truncation;
    let traj = simulate(&scenario.system, &scenario.history, args.steps, &policy)?;
    let residuals = trajectory_residuals(&scenario.system, &traj, &policy)?;
    let max_residual = residuals.iter().fold(0.0f64, |m, (a, b)| m.max(*a).max(*b));

    if let Some(path) = &args.csv {
        let rows: Vec<Row> = (0..traj.len())
            .map(|n| Row {
                x: Some(traj.x[n]),
                y: Some(traj.y[n]),
                res_x: residuals.get(n).map(|r| r.0),
                res_y: residuals.get(n).map(|r| r.1),
                ..Row::new(n)
            })
            .collect();
        table::write(path, &rows)?;
    }
    emit(
        args.common.out.as_deref(),
        &json!({
            "command": "simulate",
            "config": scenario.to_value(),
            "steps": args.steps,
            "tail_tolerance_used": traj.tail_tolerance_used,
            "max_residual": max_residual,
            "x": traj.x,
            "y": traj.y,
        }),
    )?;
    Ok(Outcome::Success)
}

fn periodic_rows(
    scenario: &Scenario,
    x: &PeriodicSequence,
    y: &PeriodicSequence,
    last: usize,
) -> Result<Vec<Row>> {
    (0..=last)
        .map(|n| {
            let (rx, ry) = residual(
                &scenario.system,
                |m| x.get(m),
                |m| y.get(m),
                n as i64,
                &scenario.truncation,
            )?;
            Ok(Row {
                x: Some(x.get(n as i64)),
                y: Some(y.get(n as i64)),
                res_x: Some(rx),
                res_y: Some(ry),
                ..Row::new(n)
            })
        })
        .collect()
}

fn asymptotic_rows(scenario: &Scenario, dec: &Decomposition) -> Result<Vec<Row>> {
    (0..=dec.horizon)
        .map(|n| {
            let (rx, ry) = residual(
                &scenario.system,
                |m| dec.x_at(m),
                |m| dec.y_at(m),
                n as i64,
                &scenario.truncation,
            )?;
            Ok(Row {
                x: Some(dec.x(n)),
                y: Some(dec.y(n)),
                u1: Some(dec.u1.get(n as i64)),
                v1: Some(dec.v1[n]),
                u2: Some(dec.u2.get(n as i64)),
                v2: Some(dec.v2[n]),
                res_x: Some(rx),
                res_y: Some(ry),
                bound_v1: Some(dec.v1_bound[n]),
                bound_v2: Some(dec.v2_bound[n]),
                ..Row::new(n)
            })
        })
        .collect()
}

fn report_convergence(converged: bool) {
    if !converged {
        eprintln!("solver did not converge; see the report");
    }
}

fn solve_periodic_cmd(args: PeriodicArgs) -> Result<Outcome> {
    let mut scenario = load(&args.common)?;
    apply_tolerances(&mut scenario, &args.tolerances)?;
    let out = args.common.out.as_deref();
    let check = check_periodic_hypotheses(&scenario.system);
    if !check.pass {
        return report_failed_check("solve-periodic", &scenario, &check, out);
    }
    let report = solve_periodic(&scenario.system, &scenario.solver)?;
    report_convergence(report.converged);
    if let Some(path) = &args.csv {
        let last = args.steps.unwrap_or(scenario.system.period);
        table::write(path, &periodic_rows(&scenario, &report.x, &report.y, last)?)?;
    }
    emit(
        out,
        &json!({
            "command": "solve-periodic",
            "config": scenario.to_value(),
            "check": check,
            "solve": report,
        }),
    )?;
    Ok(Outcome::from_bool(report.converged))
}

fn horizon_for(scenario: &Scenario, flag: Option<usize>) -> Result<usize> {
    match flag.or(scenario.horizon) {
        Some(h) => Ok(h),
        None => Ok(default_horizon(&scenario.system, scenario.c1, scenario.c2)?),
    }
}

fn solve_asymptotic_cmd(args: AsymptoticArgs) -> Result<Outcome> {
    let mut scenario = load(&args.common)?;
    apply_tolerances(&mut scenario, &args.tolerances)?;
    apply_constants(&mut scenario, &args.constants)?;
    let out = args.common.out.as_deref();
    let check = check_asymptotic_hypotheses(&scenario.system, scenario.c1, scenario.c2);
    for w in &check.warnings {
        eprintln!("warning: {w}");
    }
    if !check.pass {
        return report_failed_check("solve-asymptotic", &scenario, &check, out);
    }
    let horizon = horizon_for(&scenario, args.horizon)?;
    scenario.horizon = Some(horizon);
    let (dec, report) = solve_asymptotic(
        &scenario.system,
        scenario.c1,
        scenario.c2,
        horizon,
        &scenario.solver,
        &scenario.truncation,
    )?;
    report_convergence(report.converged);
    if let Some(path) = &args.csv {
        table::write(path, &asymptotic_rows(&scenario, &dec)?)?;
    }
    emit(
        out,
        &json!({
            "command": "solve-asymptotic",
            "config": scenario.to_value(),
            "check": check,
            "solve": report,
            "decomposition": dec,
        }),
    )?;
    Ok(Outcome::from_bool(report.converged))
}

/// Largest `‖E(z)‖` over random `z` in the ball of radius `W`.
fn probe_periodic(scenario: &Scenario, check: &CheckReport, rng: &mut ChaCha8Rng) -> Result<Value> {
    let radius = check
        .quantity("W")
        .context("periodic check did not produce W")?;
    let op = PeriodicOperator::new(&scenario.system)?;
    let t = scenario.system.period;
    let mut worst: f64 = 0.0;
    for _ in 0..PROBE_STATES {
        let x = PeriodicSequence::from_fn(t, |_| rng.gen_range(-radius..=radius))?;
        let y = PeriodicSequence::from_fn(t, |_| rng.gen_range(-radius..=radius))?;
        let (ex, ey) = op.apply(&x, &y)?;
        worst = worst.max(ex.max_abs()).max(ey.max_abs());
    }
    let tol = 1e-9;
    Ok(json!({
        "states": PROBE_STATES,
        "radius": radius,
        "max_image_norm": worst,
        "pass": worst <= radius + tol,
    }))
}

/// Largest `‖E*(z)‖` over random windows in the ball of radius `W*`.
fn probe_asymptotic(
    scenario: &Scenario,
    check: &CheckReport,
    horizon: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Value> {
    let radius = check
        .quantity("W_star")
        .context("asymptotic check did not produce W*")?;
    let op = TailOperator::new(
        &scenario.system,
        scenario.c1,
        scenario.c2,
        horizon,
        &scenario.truncation,
    )?;
    let mut worst: f64 = 0.0;
    for _ in 0..PROBE_STATES {
        let z = Window {
            x: (0..=horizon)
                .map(|_| rng.gen_range(-radius..=radius))
                .collect(),
            y: (0..=horizon)
                .map(|_| rng.gen_range(-radius..=radius))
                .collect(),
        };
        let image = op.apply(&z)?;
        worst = image
            .window
            .x
            .iter()
            .chain(&image.window.y)
            .fold(worst, |m, v| m.max(v.abs()));
    }
    Ok(json!({
        "states": PROBE_STATES,
        "radius": radius,
        "max_image_norm": worst,
        "pass": worst <= radius + 10.0 * scenario.truncation.tail_tol,
    }))
}

fn verify_periodic_mode(
    args: &VerifyArgs,
    scenario: &Scenario,
    rng: &mut ChaCha8Rng,
) -> Result<Outcome> {
    let out = args.common.out.as_deref();
    let check = check_periodic_hypotheses(&scenario.system);
    if !check.pass {
        return report_failed_check("verify", scenario, &check, out);
    }
    let report: PeriodicSolveReport = solve_periodic(&scenario.system, &scenario.solver)?;
    report_convergence(report.converged);
    let n_checks = args.steps.unwrap_or(21);
    let verification = verify_periodic(&scenario.system, &report.x, &report.y, n_checks)?;
    let probe = probe_periodic(scenario, &check, rng)?;
    let pass = report.converged
        && verification.max_defect <= scenario.solver.residual_tol
        && verification.drift <= DRIFT_TOL
        && probe["pass"] == json!(true);
    if let Some(path) = &args.csv {
        let last = n_checks.saturating_sub(1).max(scenario.system.period);
        table::write(path, &periodic_rows(scenario, &report.x, &report.y, last)?)?;
    }
    emit(
        out,
        &json!({
            "command": "verify",
            "mode": "periodic",
            "seed": args.seed,
            "config": scenario.to_value(),
            "check": check,
            "solve": report,
            "verification": verification,
            "drift_tol": DRIFT_TOL,
            "self_map_probe": probe,
            "pass": pass,
        }),
    )?;
    Ok(Outcome::from_bool(pass))
}

fn verify_asymptotic_mode(
    args: &VerifyArgs,
    scenario: &mut Scenario,
    rng: &mut ChaCha8Rng,
) -> Result<Outcome> {
    let out = args.common.out.as_deref();
    let check = check_asymptotic_hypotheses(&scenario.system, scenario.c1, scenario.c2);
    for w in &check.warnings {
        eprintln!("warning: {w}");
    }
    if !check.pass {
        return report_failed_check("verify", scenario, &check, out);
    }
    let horizon = horizon_for(scenario, args.horizon)?;
    scenario.horizon = Some(horizon);
    let (dec, report) = solve_asymptotic(
        &scenario.system,
        scenario.c1,
        scenario.c2,
        horizon,
        &scenario.solver,
        &scenario.truncation,
    )?;
    report_convergence(report.converged);
    let verification = verify_decomposition(&scenario.system, &dec)?;
    let probe = probe_asymptotic(scenario, &check, horizon, rng)?;
    let pass = report.converged && verification.pass && probe["pass"] == json!(true);
    if let Some(path) = &args.csv {
        table::write(path, &asymptotic_rows(scenario, &dec)?)?;
    }
    emit(
        out,
        &json!({
            "command": "verify",
            "mode": "asymptotic",
            "seed": args.seed,
            "config": scenario.to_value(),
            "check": check,
            "solve": report,
            "verification": verification,
            "self_map_probe": probe,
            "pass": pass,
        }),
    )?;
    Ok(Outcome::from_bool(pass))
}

fn verify_cmd(args: VerifyArgs) -> Result<Outcome> {
    let mut scenario = load(&args.common)?;
    apply_tolerances(&mut scenario, &args.tolerances)?;
    apply_constants(&mut scenario, &args.constants)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    match args.mode.unwrap_or_else(|| detect_mode(&scenario)) {
        Mode::Periodic => verify_periodic_mode(&args, &scenario, &mut rng),
        Mode::Asymptotic => verify_asymptotic_mode(&args, &mut scenario, &mut rng),
    }
}
