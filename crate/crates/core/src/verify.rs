//! Independent certification of candidate solutions.
//!
//! Everything here sums kernels directly, at a fixed minimum depth with an
//! explicit geometric remainder. Nothing goes through the folded lag weights
//! or the tail operator, so a solver bug cannot hide behind shared code.

use serde::Serialize;

use crate::asymptotic_solver::Decomposition;
use crate::error::Result;
use crate::kernels::TruncationPolicy;
use crate::sequences::{History, PeriodicSequence};
use crate::simulate::{residual, simulate};
use crate::system::SystemSpec;

/// Minimum number of terms in every brute-force inner sum.
pub const BRUTE_FORCE_DEPTH: usize = 200;

/// Periods simulated when measuring drift.
pub const DRIFT_PERIODS: usize = 10;

/// Largest drift accepted for a periodic solution over [`DRIFT_PERIODS`].
pub const DRIFT_TOL: f64 = 1e-6;

fn brute_force_policy() -> TruncationPolicy {
    TruncationPolicy {
        tail_tol: 1e-15,
        max_terms: 1_000_000,
        min_terms: BRUTE_FORCE_DEPTH,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicVerification {
    /// `max |defect|` of both equations over `n = 0..n_checks`.
    pub max_defect: f64,
    /// `max |x_sim(n) - x(n)|, |y_sim(n) - y(n)|` over ten periods.
    pub drift: f64,
    pub n_checks: usize,
    pub drift_steps: usize,
}

/// Largest residual of the periodic extension of `(x, y)` over `n = 0..n_checks`.
pub fn periodic_max_defect(
    spec: &SystemSpec,
    x: &PeriodicSequence,
    y: &PeriodicSequence,
    n_checks: usize,
) -> Result<f64> {
    let policy = brute_force_policy();
    let mut worst: f64 = 0.0;
    for n in 0..n_checks as i64 {
        let (rx, ry) = residual(spec, |m| x.get(m), |m| y.get(m), n, &policy)?;
        worst = worst.max(rx).max(ry);
    }
    Ok(worst)
}

pub fn verify_periodic(
    spec: &SystemSpec,
    x: &PeriodicSequence,
    y: &PeriodicSequence,
    n_checks: usize,
) -> Result<PeriodicVerification> {
    let max_defect = periodic_max_defect(spec, x, y, n_checks)?;

    let policy = brute_force_policy().with_min_terms(0);
    // the explicit history window must reach past every truncated sum
    let probe_a = spec
        .a
        .inner_sum(0, |_| 1.0, spec.f.bound().max(1.0), &policy)?;
    let probe_b = spec
        .b
        .inner_sum(0, |_| 1.0, spec.g.bound().max(1.0), &policy)?;
    let depth = BRUTE_FORCE_DEPTH.max(probe_a.terms).max(probe_b.terms) + spec.period;
    let hist = History::from_periodic(x, y, depth);

    let steps = DRIFT_PERIODS * spec.period;
    let traj = simulate(spec, &hist, steps, &policy)?;
    let drift = (0..=steps).fold(0.0f64, |m, n| {
        let dx = (traj.x[n] - x.get(n as i64)).abs();
        let dy = (traj.y[n] - y.get(n as i64)).abs();
        m.max(dx).max(dy)
    });
    Ok(PeriodicVerification {
        max_defect,
        drift,
        n_checks,
        drift_steps: steps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionVerification {
    /// `u` agrees with `c ∏_{j<n}(1 + h_j)` within 1e-12 over ten periods.
    pub u_periodic: bool,
    pub envelope_ok: bool,
    /// First `n` where `|v[n]| > bound[n] + 10 ε`, in either component.
    pub first_envelope_violation: Option<usize>,
    pub residual_max: f64,
    /// The last ten steps of `v` shrink at least as fast as the envelope, up to a factor 10.
    pub decay_ok: bool,
    pub pass: bool,
}

/// Residual tolerance applied by [`verify_decomposition`].
pub const DECOMPOSITION_RESIDUAL_TOL: f64 = 1e-8;

pub fn verify_decomposition(
    spec: &SystemSpec,
    dec: &Decomposition,
) -> Result<DecompositionVerification> {
    let t = spec.period as i64;
    let u_periodic = (0..10 * t).all(|n| {
        let x_form = dec.c1 * spec.h.product_one_plus(0, n - 1);
        let y_form = dec.c2 * spec.p.product_one_plus(0, n - 1);
        (dec.u1.get(n) - x_form).abs() <= 1e-12
            && (dec.u2.get(n) - y_form).abs() <= 1e-12
            && dec.u1.get(n + t) == dec.u1.get(n)
            && dec.u2.get(n + t) == dec.u2.get(n)
    });

    let slack = 10.0 * dec.tail_tol;
    let first_envelope_violation = (0..=dec.horizon).find(|&n| {
        dec.v1[n].abs() > dec.v1_bound[n] + slack || dec.v2[n].abs() > dec.v2_bound[n] + slack
    });

    let policy = brute_force_policy();
    let mut residual_max: f64 = 0.0;
    for n in 0..dec.horizon as i64 {
        let (rx, ry) = residual(spec, |m| dec.x_at(m), |m| dec.y_at(m), n, &policy)?;
        residual_max = residual_max.max(rx).max(ry);
    }

    let decay_ok = decade_decays(&dec.v1, &dec.v1_bound) && decade_decays(&dec.v2, &dec.v2_bound);
    let envelope_ok = first_envelope_violation.is_none();
    Ok(DecompositionVerification {
        u_periodic,
        envelope_ok,
        first_envelope_violation,
        residual_max,
        decay_ok,
        pass: u_periodic && envelope_ok && decay_ok && residual_max <= DECOMPOSITION_RESIDUAL_TOL,
    })
}

fn decade_decays(v: &[f64], bound: &[f64]) -> bool {
    if v.len() < 11 {
        return true;
    }
    let (end, start) = (v.len() - 1, v.len() - 11);
    if bound[start] == 0.0 {
        return v[end] == 0.0;
    }
    let ratio = bound[end] / bound[start];
    v[end].abs() <= 10.0 * ratio * v[start].abs()
}
