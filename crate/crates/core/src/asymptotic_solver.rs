//! Asymptotically periodic solutions through the tail operator
//!
//! ```text
//! E₁*(x, y)_n = c₁/φ_n - Σ_{i>=n} Σ_{m<=i} (φ_{i+1}/φ_n) a_{i,m} f(y_m),   φ_n = ∏_{j<n} 1/(1 + h_j)
//! ```
//!
//! used when `∏(1 + h_l) = 1` over a period and the kernels are summable. A
//! fixed point splits as `x = u + v` with `u_n = c₁/φ_n` periodic and
//! `|v_n| <= (M₁/m₁) W₁ Σ_{i>=n} Σ_{m<=i} |a_{i,m}|`.
//!
//! The operator is evaluated on a finite window `0..=horizon`. Beyond the
//! window `x` is closed by `u`; below zero the solution takes the zero
//! history. The deviation `v` is computed directly from the sums, never as a
//! difference `x - u`, so its decay is resolved far below the scale of `u`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{Kernel, TruncationPolicy};
use crate::linalg::{solve_fixed_point, sup_norm};
use crate::periodic_solver::{InitialGuess, Method, SolverOptions};
use crate::sequences::PeriodicSequence;
use crate::simulate::residual;
use crate::system::{check_asymptotic_hypotheses, Nonlinearity, SystemSpec};
use crate::PRODUCT_ONE_TOL;

/// Smallest envelope value the default horizon aims for.
const DEFAULT_HORIZON_ENVELOPE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiPsi {
    /// `φ_n`, stored so that `phi.get(n)` is the value at any `n >= 0`.
    pub phi: PeriodicSequence,
    pub psi: PeriodicSequence,
    pub m1: f64,
    #[serde(rename = "M1")]
    pub big_m1: f64,
    pub m2: f64,
    #[serde(rename = "M2")]
    pub big_m2: f64,
}

fn reciprocal_running_product(seq: &PeriodicSequence) -> Result<(PeriodicSequence, f64, f64)> {
    if let Some(index) = seq.values().iter().position(|v| 1.0 + v == 0.0) {
        return Err(Error::ZeroFactor { index });
    }
    let product = seq.period_product();
    if (product - 1.0).abs() > PRODUCT_ONE_TOL {
        return Err(Error::PeriodProductNotOne { product });
    }
    let t = seq.period();
    // values[k] holds φ_k for k = 1..T-1 and φ_T at k = 0
    let mut values = vec![0.0; t];
    let mut running = 1.0;
    for n in 1..=t {
        running /= 1.0 + seq.get(n as i64 - 1);
        values[n % t] = running;
    }
    let min = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok((PeriodicSequence::new(values)?, min, max))
}

/// `φ_n = ∏_{j=0}^{n-1} 1/(1 + h_j)`, `ψ_n` likewise from `p`, with their
/// extreme absolute values over one period.
pub fn phi_psi(spec: &SystemSpec) -> Result<PhiPsi> {
    let (phi, m1, big_m1) = reciprocal_running_product(&spec.h)?;
    let (psi, m2, big_m2) = reciprocal_running_product(&spec.p)?;
    Ok(PhiPsi {
        phi,
        psi,
        m1,
        big_m1,
        m2,
        big_m2,
    })
}

/// Values of `x` and `y` on `0..=horizon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Window {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Window {
    pub fn horizon(&self) -> usize {
        self.x.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EStarOutput {
    pub window: Window,
    /// `E*(z)_n - c/φ_n`, computed directly.
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    /// Certified bound on the truncation error of each window entry.
    pub error_bound: Vec<f64>,
}

/// One component of `E*`: the deviation from `c/φ`.
#[derive(Debug, Clone)]
struct TailComponent {
    kernel: Kernel,
    nonlinearity: Nonlinearity,
    phi: PeriodicSequence,
    /// `(M/m) W`.
    envelope_scale: f64,
}

impl TailComponent {
    fn envelope(&self, n: i64) -> f64 {
        if self.envelope_scale == 0.0 {
            return 0.0;
        }
        self.envelope_scale * self.kernel.double_tail(n)
    }

    /// Last outer index needed at `n`.
    fn cutoff(&self, n: i64, tol: f64) -> i64 {
        let env = self.envelope(n);
        let target = tol * env.min(1.0);
        let mut last = n;
        while self.envelope(last + 1) > target {
            last += 1;
        }
        last
    }

    /// Deviations at `n = 0..=horizon` given `src` (the other variable) on the
    /// window and `closure(m)` for `m > horizon`. `closure_gap` bounds
    /// `|src_m - closure(m)|` beyond the window.
    fn deviations(
        &self,
        src: &[f64],
        closure: impl Fn(i64) -> f64,
        closure_gap: f64,
        policy: &TruncationPolicy,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let horizon = src.len() as i64 - 1;
        if self.envelope_scale == 0.0 {
            let zeros = vec![0.0; src.len()];
            return Ok((zeros.clone(), zeros));
        }
        let tol = policy.tail_tol;
        let cutoffs: Vec<i64> = (0..=horizon).map(|n| self.cutoff(n, tol)).collect();
        let last_row = cutoffs.iter().copied().max().unwrap_or(0);

        let fsrc: Vec<f64> = src.iter().map(|v| self.nonlinearity.eval(*v)).collect();
        let f0 = self.nonlinearity.eval(0.0);
        let values = |m: i64| {
            if m < 0 {
                f0
            } else if m <= horizon {
                fsrc[m as usize]
            } else {
                self.nonlinearity.eval(closure(m))
            }
        };
        let bound = self.nonlinearity.bound();

        // rows S_i = Σ_{m<=i} a_{i,m} f(src_m), each with a relative tail bound
        let mut rows = Vec::with_capacity(last_row as usize + 1);
        let mut row_errors = Vec::with_capacity(last_row as usize + 1);
        for i in 0..=last_row {
            let row_abs = self.kernel.abs_row_sum(i);
            let row_tol = tol * (bound * row_abs).min(1.0);
            if row_tol <= 0.0 || !row_tol.is_finite() {
                rows.push(0.0);
                row_errors.push(bound * row_abs);
                continue;
            }
            let s = self
                .kernel
                .inner_sum(i, values, bound, &policy.with_tail_tol(row_tol))?;
            rows.push(s.sum);
            let closure_err = if i > horizon {
                self.nonlinearity.lipschitz() * closure_gap * row_abs
            } else {
                0.0
            };
            row_errors.push(s.tail_bound + closure_err);
        }

        let ratio = self.envelope_scale / self.nonlinearity.bound();
        let mut dev = Vec::with_capacity(src.len());
        let mut err = Vec::with_capacity(src.len());
        for n in 0..=horizon {
            let phi_n = self.phi.get(n);
            let last = cutoffs[n as usize];
            let mut acc = 0.0;
            let mut e = self.envelope(last + 1);
            for i in (n..=last).rev() {
                let w = self.phi.get(i + 1) / phi_n;
                acc += w * rows[i as usize];
                e += ratio * row_errors[i as usize];
            }
            dev.push(-acc);
            err.push(e);
        }
        Ok((dev, err))
    }
}

/// `E*` on a finite window, with the run-independent pieces precomputed.
#[derive(Debug, Clone)]
pub struct TailOperator {
    pub c1: f64,
    pub c2: f64,
    pub phi_psi: PhiPsi,
    pub u1: PeriodicSequence,
    pub u2: PeriodicSequence,
    first: TailComponent,
    second: TailComponent,
    horizon: usize,
    policy: TruncationPolicy,
}

impl TailOperator {
    pub fn new(
        spec: &SystemSpec,
        c1: f64,
        c2: f64,
        horizon: usize,
        policy: &TruncationPolicy,
    ) -> Result<Self> {
        policy.validate()?;
        let report = check_asymptotic_hypotheses(spec, c1, c2);
        if let Some(item) = report.first_failure() {
            // keep the typed errors for the product and factor conditions
            phi_psi(spec)?;
            return Err(Error::invalid(
                "asymptotic hypotheses",
                format!("{}: {}", item.id, item.detail),
            ));
        }
        let pp = phi_psi(spec)?;
        let t = spec.period;
        let u1 = PeriodicSequence::from_fn(t, |k| c1 / pp.phi.values()[k])?;
        let u2 = PeriodicSequence::from_fn(t, |k| c2 / pp.psi.values()[k])?;
        let component =
            |kernel: &Kernel, f: Nonlinearity, phi: &PeriodicSequence, m: f64, big_m: f64| {
                TailComponent {
                    kernel: kernel.clone(),
                    nonlinearity: f,
                    phi: phi.clone(),
                    envelope_scale: big_m / m * f.bound(),
                }
            };
        Ok(Self {
            c1,
            c2,
            first: component(&spec.a, spec.f, &pp.phi, pp.m1, pp.big_m1),
            second: component(&spec.b, spec.g, &pp.psi, pp.m2, pp.big_m2),
            u1,
            u2,
            phi_psi: pp,
            horizon,
            policy: *policy,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `(M₁/m₁) W₁ Σ_{i>=n} Σ_{m<=i} |a_{i,m}|`.
    pub fn envelope1(&self, n: i64) -> f64 {
        self.first.envelope(n)
    }

    pub fn envelope2(&self, n: i64) -> f64 {
        self.second.envelope(n)
    }

    /// New deviations `(v1, v2)` and per-entry error bounds from window values of `x`, `y`.
    fn deviations(&self, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let h = self.horizon as i64;
        // beyond the window x ≈ u1, with |x - u1| <= envelope1(h + 1)
        let (v1, e1) =
            self.first
                .deviations(y, |m| self.u2.get(m), self.envelope2(h + 1), &self.policy)?;
        let (v2, e2) =
            self.second
                .deviations(x, |m| self.u1.get(m), self.envelope1(h + 1), &self.policy)?;
        let err = e1.iter().zip(&e2).map(|(a, b)| a.max(*b)).collect();
        Ok((v1, v2, err))
    }

    pub fn apply(&self, z: &Window) -> Result<EStarOutput> {
        let len = self.horizon + 1;
        if z.x.len() != len || z.y.len() != len {
            return Err(Error::PeriodMismatch {
                what: "window",
                expected: len,
                got: z.x.len().min(z.y.len()),
            });
        }
        let (v1, v2, error_bound) = self.deviations(&z.x, &z.y)?;
        let window = Window {
            x: (0..len).map(|n| self.u1.get(n as i64) + v1[n]).collect(),
            y: (0..len).map(|n| self.u2.get(n as i64) + v2[n]).collect(),
        };
        Ok(EStarOutput {
            window,
            v1,
            v2,
            error_bound,
        })
    }

    fn full_values(&self, v1: &[f64], v2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let x = v1
            .iter()
            .enumerate()
            .map(|(n, v)| self.u1.get(n as i64) + v)
            .collect();
        let y = v2
            .iter()
            .enumerate()
            .map(|(n, v)| self.u2.get(n as i64) + v)
            .collect();
        (x, y)
    }
}

/// `E*(z)` on `0..=horizon`.
pub fn apply_e_star(
    spec: &SystemSpec,
    c1: f64,
    c2: f64,
    z: &Window,
    horizon: usize,
    policy: &TruncationPolicy,
) -> Result<EStarOutput> {
    TailOperator::new(spec, c1, c2, horizon, policy)?.apply(z)
}

/// Smallest `n >= 4T` with both envelopes at most `1e-12`.
pub fn default_horizon(spec: &SystemSpec, c1: f64, c2: f64) -> Result<usize> {
    let op = TailOperator::new(spec, c1, c2, 0, &TruncationPolicy::default())?;
    let mut n = 4 * spec.period;
    while op.envelope1(n as i64).max(op.envelope2(n as i64)) > DEFAULT_HORIZON_ENVELOPE {
        n += 1;
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub c1: f64,
    pub c2: f64,
    pub u1: PeriodicSequence,
    pub u2: PeriodicSequence,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub v1_bound: Vec<f64>,
    pub v2_bound: Vec<f64>,
    pub horizon: usize,
    pub tail_tol: f64,
    pub converged: bool,
}

impl Decomposition {
    pub fn x(&self, n: usize) -> f64 {
        self.u1.get(n as i64) + self.v1[n]
    }

    pub fn y(&self, n: usize) -> f64 {
        self.u2.get(n as i64) + self.v2[n]
    }

    /// Full-line `x`: zero history below 0, `u` beyond the window.
    pub fn x_at(&self, m: i64) -> f64 {
        if m < 0 {
            0.0
        } else if m as usize <= self.horizon {
            self.x(m as usize)
        } else {
            self.u1.get(m)
        }
    }

    pub fn y_at(&self, m: i64) -> f64 {
        if m < 0 {
            0.0
        } else if m as usize <= self.horizon {
            self.y(m as usize)
        } else {
            self.u2.get(m)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub iterations: usize,
    pub method_used: Method,
    /// `‖v - V(v)‖_∞` at the returned point.
    pub final_update_norm: f64,
    /// Largest residual of the recurrence over `n = 0..horizon`.
    pub residual_max: f64,
    pub envelope_ok: bool,
    /// Largest certified truncation error of a window entry.
    pub truncation_error: f64,
    pub w_star: f64,
    pub solution_norm: f64,
    pub warnings: Vec<String>,
    pub converged: bool,
}

/// Finds a window fixed point of `E*` and splits it into `u + v`.
pub fn solve_asymptotic(
    spec: &SystemSpec,
    c1: f64,
    c2: f64,
    horizon: usize,
    opts: &SolverOptions,
    policy: &TruncationPolicy,
) -> Result<(Decomposition, AsymptoticReport)> {
    opts.validate(spec.period)?;
    if horizon < 4 * spec.period {
        return Err(Error::invalid(
            "horizon",
            format!("must be at least 4T = {}, got {horizon}", 4 * spec.period),
        ));
    }
    let op = TailOperator::new(spec, c1, c2, horizon, policy)?;
    let check = check_asymptotic_hypotheses(spec, c1, c2);
    let len = horizon + 1;

    let z0 = match &opts.initial_guess {
        InitialGuess::Zero => vec![0.0; 2 * len],
        InitialGuess::Pair { x, y } => {
            let (x, y) = (
                PeriodicSequence::new(x.clone())?,
                PeriodicSequence::new(y.clone())?,
            );
            (0..len)
                .map(|n| x.get(n as i64) - op.u1.get(n as i64))
                .chain((0..len).map(|n| y.get(n as i64) - op.u2.get(n as i64)))
                .collect()
        }
    };
    let map = |z: &[f64]| -> Result<Vec<f64>> {
        let (v1, v2) = z.split_at(len);
        let (x, y) = op.full_values(v1, v2);
        let (n1, n2, _) = op.deviations(&x, &y)?;
        Ok(n1.into_iter().chain(n2).collect())
    };
    let fp = solve_fixed_point(map, z0, opts)?;
    let (v1, v2) = fp.z.split_at(len);
    let (x, y) = op.full_values(v1, v2);
    let (_, _, errors) = op.deviations(&x, &y)?;

    let v1_bound: Vec<f64> = (0..len).map(|n| op.envelope1(n as i64)).collect();
    let v2_bound: Vec<f64> = (0..len).map(|n| op.envelope2(n as i64)).collect();
    let slack = 10.0 * policy.tail_tol;
    let envelope_ok =
        (0..len).all(|n| v1[n].abs() <= v1_bound[n] + slack && v2[n].abs() <= v2_bound[n] + slack);

    let mut dec = Decomposition {
        c1,
        c2,
        u1: op.u1.clone(),
        u2: op.u2.clone(),
        v1: v1.to_vec(),
        v2: v2.to_vec(),
        v1_bound,
        v2_bound,
        horizon,
        tail_tol: policy.tail_tol,
        converged: false,
    };
    let mut residual_max: f64 = 0.0;
    for n in 0..horizon as i64 {
        let (rx, ry) = residual(spec, |m| dec.x_at(m), |m| dec.y_at(m), n, policy)?;
        residual_max = residual_max.max(rx).max(ry);
    }
    let converged =
        fp.converged && fp.defect < opts.tol && residual_max <= opts.residual_tol && envelope_ok;
    dec.converged = converged;
    let report = AsymptoticReport {
        iterations: fp.iterations,
        method_used: fp.method,
        final_update_norm: fp.defect,
        residual_max,
        envelope_ok,
        truncation_error: errors.iter().copied().fold(0.0, f64::max),
        w_star: check.quantity("W_star").unwrap_or(f64::NAN),
        solution_norm: sup_norm(&x).max(sup_norm(&y)),
        warnings: check.warnings.clone(),
        converged,
    };
    Ok((dec, report))
}
