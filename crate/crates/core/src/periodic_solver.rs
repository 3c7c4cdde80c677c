//! `T`-periodic solutions as fixed points of the period-cyclic operator
//!
//! ```text
//! E₁(x, y)_n = α_h Σ_{i=n}^{n+T-1} ∏_{l=i+1}^{n+T-1}(1 + h_l) Σ_{m<=i} a_{i,m} f(y_m)
//! ```
//!
//! and its `y`-analogue, with `α_h = 1 / (1 - ∏_{l=0}^{T-1}(1 + h_l))`. For
//! periodic inputs and diagonal-periodic kernels the inner sum folds into `T`
//! exact lag weights, so `E` is a map on the `2T` period values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::linalg::{solve_fixed_point, sup_norm};
use crate::sequences::PeriodicSequence;
use crate::system::{check_periodic_hypotheses, Nonlinearity, SystemSpec};
use crate::verify::periodic_max_defect;
use crate::PRODUCT_ONE_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    PicardThenNewton,
    PicardOnly,
    NewtonOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Picard,
    DampedPicard,
    Newton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    Zero,
    /// One period of `x` and `y`.
    Pair {
        x: Vec<f64>,
        y: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Bound on `‖z - E(z)‖_∞` at convergence.
    pub tol: f64,
    /// Bound on the residual of the recurrence for an accepted solution.
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Picard mixing `z ← (1 - θ) z + θ E(z)`, `θ ∈ (0, 1]`.
    pub damping: f64,
    pub strategy: Strategy,
    pub initial_guess: InitialGuess,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            residual_tol: 1e-8,
            max_iter: 500,
            damping: 0.5,
            strategy: Strategy::PicardThenNewton,
            initial_guess: InitialGuess::Zero,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self, period: usize) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::invalid("solver options", "tol must be positive"));
        }
        if !(self.residual_tol > 0.0 && self.residual_tol.is_finite()) {
            return Err(Error::invalid(
                "solver options",
                "residual_tol must be positive",
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid(
                "solver options",
                "max_iter must be at least 1",
            ));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid(
                "solver options",
                "damping must lie in (0, 1]",
            ));
        }
        if let InitialGuess::Pair { x, y } = &self.initial_guess {
            if x.len() != period || y.len() != period {
                return Err(Error::invalid(
                    "solver options",
                    format!("initial guess must have {period} values per component"),
                ));
            }
            if x.iter().chain(y).any(|v| !v.is_finite()) {
                return Err(Error::invalid(
                    "solver options",
                    "initial guess must be finite",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicSolveReport {
    pub x: PeriodicSequence,
    pub y: PeriodicSequence,
    pub alpha_h: f64,
    pub alpha_p: f64,
    pub iterations: usize,
    pub method_used: Method,
    /// `‖z - E(z)‖_∞` at the returned point.
    pub final_update_norm: f64,
    /// Largest independent residual of the recurrence over `n = 0..5T`.
    pub residual_max: f64,
    /// `‖(x, y)‖`, to compare against the invariant-ball radius `W`.
    pub solution_norm: f64,
    pub ball_radius: Option<f64>,
    pub converged: bool,
}

/// `1 / (1 - ∏_{l=0}^{T-1}(1 + s_l))`.
pub fn alpha(seq: &PeriodicSequence) -> Result<f64> {
    let product = seq.period_product();
    if (product - 1.0).abs() <= PRODUCT_ONE_TOL {
        return Err(Error::PeriodProductIsOne { product });
    }
    Ok(1.0 / (1.0 - product))
}

/// One component of `E`, precomputed for a fixed system.
#[derive(Debug, Clone)]
struct Component {
    alpha: f64,
    /// `coeff[n][j] = ∏_{l=n+j+1}^{n+T-1}(1 + s_l)`, the weight of row `i = n + j`.
    coeff: Vec<Vec<f64>>,
    folded: Vec<Vec<f64>>,
    nonlinearity: Nonlinearity,
}

impl Component {
    fn new(seq: &PeriodicSequence, kernel: &Kernel, nonlinearity: Nonlinearity) -> Result<Self> {
        let t = seq.period();
        let alpha = alpha(seq)?;
        let folded = kernel.folded_weights(t)?;
        let ti = t as i64;
        let coeff = (0..ti)
            .map(|n| {
                (0..ti)
                    .map(|j| seq.product_one_plus(n + j + 1, n + ti - 1))
                    .collect()
            })
            .collect();
        Ok(Self {
            alpha,
            coeff,
            folded,
            nonlinearity,
        })
    }

    /// Applies the component to the period values `src` of the other variable.
    fn apply(&self, src: &[f64]) -> Vec<f64> {
        let t = src.len();
        let fv: Vec<f64> = src.iter().map(|v| self.nonlinearity.eval(*v)).collect();
        // inner[k] = Σ_r A[k][r] f(src_{k-r})
        let inner: Vec<f64> = (0..t)
            .map(|k| {
                (0..t)
                    .map(|r| self.folded[k][r] * fv[(k + t - r) % t])
                    .sum()
            })
            .collect();
        (0..t)
            .map(|n| {
                let s: f64 = (0..t).map(|j| self.coeff[n][j] * inner[(n + j) % t]).sum();
                self.alpha * s
            })
            .collect()
    }
}

/// The operator `E` restricted to `T`-periodic pairs.
#[derive(Debug, Clone)]
pub struct PeriodicOperator {
    period: usize,
    first: Component,
    second: Component,
}

impl PeriodicOperator {
    pub fn new(spec: &SystemSpec) -> Result<Self> {
        Ok(Self {
            period: spec.period,
            first: Component::new(&spec.h, &spec.a, spec.f)?,
            second: Component::new(&spec.p, &spec.b, spec.g)?,
        })
    }

    pub fn alphas(&self) -> (f64, f64) {
        (self.first.alpha, self.second.alpha)
    }

    /// `E` on the stacked period values `[x_0..x_{T-1}, y_0..y_{T-1}]`.
    pub fn apply_stacked(&self, z: &[f64]) -> Vec<f64> {
        let (x, y) = z.split_at(self.period);
        let mut out = self.first.apply(y);
        out.extend(self.second.apply(x));
        out
    }

    pub fn apply(
        &self,
        x: &PeriodicSequence,
        y: &PeriodicSequence,
    ) -> Result<(PeriodicSequence, PeriodicSequence)> {
        if x.period() != self.period || y.period() != self.period {
            return Err(Error::PeriodMismatch {
                what: "operator input",
                expected: self.period,
                got: if x.period() != self.period {
                    x.period()
                } else {
                    y.period()
                },
            });
        }
        let ex = self.first.apply(y.values());
        let ey = self.second.apply(x.values());
        if ex.iter().chain(&ey).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("periodic operator"));
        }
        Ok((PeriodicSequence::new(ex)?, PeriodicSequence::new(ey)?))
    }
}

/// `E(x, y)` for a `T`-periodic pair.
pub fn apply_e(
    spec: &SystemSpec,
    x: &PeriodicSequence,
    y: &PeriodicSequence,
) -> Result<(PeriodicSequence, PeriodicSequence)> {
    PeriodicOperator::new(spec)?.apply(x, y)
}

/// Seeks `z = E(z)` and certifies the result against the recurrence.
pub fn solve_periodic(spec: &SystemSpec, opts: &SolverOptions) -> Result<PeriodicSolveReport> {
    opts.validate(spec.period)?;
    let op = PeriodicOperator::new(spec)?;
    let t = spec.period;
    let z0 = match &opts.initial_guess {
        InitialGuess::Zero => vec![0.0; 2 * t],
        InitialGuess::Pair { x, y } => x.iter().chain(y).copied().collect(),
    };
    let fp = solve_fixed_point(|z| Ok(op.apply_stacked(z)), z0, opts)?;
    let x = PeriodicSequence::new(fp.z[..t].to_vec())?;
    let y = PeriodicSequence::new(fp.z[t..].to_vec())?;
    let residual_max = periodic_max_defect(spec, &x, &y, 5 * t)?;
    let (alpha_h, alpha_p) = op.alphas();
    let check = check_periodic_hypotheses(spec);
    Ok(PeriodicSolveReport {
        alpha_h,
        alpha_p,
        iterations: fp.iterations,
        method_used: fp.method,
        final_update_norm: fp.defect,
        residual_max,
        solution_norm: sup_norm(&fp.z),
        ball_radius: check.quantity("W"),
        converged: fp.converged && fp.defect <= opts.tol && residual_max <= opts.residual_tol,
        x,
        y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::example_one;
    use crate::config::example_two;
    use crate::kernels::TruncationPolicy;
    use crate::system::NonlinearityKind;
    use approx::assert_relative_eq;

    const ROW: f64 = 1.5819767068693265; // e / (e - 1)

    fn seq(v: &[f64]) -> PeriodicSequence {
        PeriodicSequence::new(v.to_vec()).unwrap()
    }

    /// `E₁` by direct truncated summation, without folding.
    fn brute_e1(spec: &SystemSpec, y: &PeriodicSequence, n: i64) -> f64 {
        let t = spec.period as i64;
        let alpha_h = alpha(&spec.h).unwrap();
        let policy = TruncationPolicy::new(1e-13, 1_000_000)
            .unwrap()
            .with_min_terms(200);
        let mut s = 0.0;
        for i in n..n + t {
            let inner = spec
                .a
                .inner_sum(i, |m| spec.f.eval(y.get(m)), spec.f.bound(), &policy)
                .unwrap();
            s += spec.h.product_one_plus(i + 1, n + t - 1) * inner.sum;
        }
        alpha_h * s
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha(&example_one().h).unwrap(), -0.5);
        assert_eq!(alpha(&example_one().p).unwrap(), -0.5);
        assert!(matches!(
            alpha(&example_two().h),
            Err(Error::PeriodProductIsOne { .. })
        ));
        assert_eq!(alpha(&seq(&[1.0])).unwrap(), -1.0);
    }

    #[test]
    fn constant_nonlinearity_gives_closed_form() {
        let one = Nonlinearity::new(NonlinearityKind::Cos, 1.0, 0.0).unwrap();
        let spec = example_one().with_nonlinearities(one, one);
        let z = PeriodicSequence::zeros(2);
        let (ex, ey) = apply_e(&spec, &z, &z).unwrap();
        assert_relative_eq!(ex.get(0), -ROW, max_relative = 1e-14);
        assert_relative_eq!(ex.get(1), -2.0 * ROW, max_relative = 1e-14);
        // p = [0, 2] swaps the parities
        assert_relative_eq!(ey.get(0), -2.0 * ROW, max_relative = 1e-14);
        assert_relative_eq!(ey.get(1), -ROW, max_relative = 1e-14);
        for n in 0..2 {
            assert_relative_eq!(ex.get(n), brute_e1(&spec, &z, n), max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_nonlinearities_map_to_zero() {
        let spec = example_one().with_nonlinearities(Nonlinearity::zero(), Nonlinearity::zero());
        let (ex, ey) = apply_e(&spec, &seq(&[3.0, -1.0]), &seq(&[0.5, 7.0])).unwrap();
        assert_eq!(ex.values(), &[0.0, 0.0]);
        assert_eq!(ey.values(), &[0.0, 0.0]);
        let report = solve_periodic(&spec, &SolverOptions::default()).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 1);
        assert_eq!(report.x.values(), &[0.0, 0.0]);
    }

    #[test]
    fn folded_matches_brute_force_on_example_one() {
        let spec = example_one();
        let y = seq(&[0.3, -1.2]);
        let (ex, _) = apply_e(&spec, &seq(&[0.0, 0.0]), &y).unwrap();
        for n in -3..4 {
            assert!((ex.get(n) - brute_e1(&spec, &y, n)).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_wrong_regime() {
        assert!(matches!(
            solve_periodic(&example_two(), &SolverOptions::default()),
            Err(Error::PeriodProductIsOne { .. })
        ));
        let mut spec = example_one();
        spec.a = Kernel::separable_exponential(1.0, 1.0, 1.5).unwrap();
        assert!(matches!(
            PeriodicOperator::new(&spec),
            Err(Error::NotDiagonalPeriodic { period: 2 })
        ));
    }

    #[test]
    fn options_validate() {
        let mut o = SolverOptions::default();
        assert!(o.validate(2).is_ok());
        o.damping = 0.0;
        assert!(o.validate(2).is_err());
        o.damping = 1.0;
        o.initial_guess = InitialGuess::Pair {
            x: vec![0.0],
            y: vec![0.0, 1.0],
        };
        assert!(o.validate(2).is_err());
    }

    #[test]
    fn solves_example_one() {
        let spec = example_one();
        let opts = SolverOptions::default();
        let report = solve_periodic(&spec, &opts).unwrap();
        assert!(report.converged, "{report:#?}");
        assert!(report.residual_max <= 1e-8);
        assert_eq!((report.alpha_h, report.alpha_p), (-0.5, -0.5));
        // the fixed-point equations hold on one period
        let (ex, ey) = apply_e(&spec, &report.x, &report.y).unwrap();
        for n in 0..2 {
            assert!((ex.get(n) - report.x.get(n)).abs() <= 1e-12);
            assert!((ey.get(n) - report.y.get(n)).abs() <= 1e-12);
        }
    }
}
