//! Two-index weight families `a_{n,i}` (`i <= n`).
//!
//! Every infinite sum the solvers need is either evaluated in closed form or
//! truncated with an exact bound on the neglected remainder.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A kernel `a_{n,i}`, defined for `i <= n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    /// `a_{n,i} = coef * exp(row_rate * i - col_rate * n)` with `row_rate > 0`.
    SeparableExponential {
        coef: f64,
        row_rate: f64,
        col_rate: f64,
    },
    /// `a_{n,i} = weights[n mod P][n - i]` for `0 <= n - i <= L`, zero otherwise.
    /// `P` is the number of rows and `L + 1` their common length.
    FiniteLag { weights: Vec<Vec<f64>> },
}

/// Truncation rule for the infinite inner sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruncationPolicy {
    /// Largest admissible bound on the neglected remainder of one sum.
    pub tail_tol: f64,
    /// Cap on the number of terms of one sum.
    pub max_terms: usize,
    /// Lower limit on the number of terms, independent of the tail bound.
    pub min_terms: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            tail_tol: 1e-10,
            max_terms: 100_000,
            min_terms: 0,
        }
    }
}

impl TruncationPolicy {
    pub fn new(tail_tol: f64, max_terms: usize) -> Result<Self> {
        let p = Self {
            tail_tol,
            max_terms,
            min_terms: 0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_min_terms(mut self, min_terms: usize) -> Self {
        self.min_terms = min_terms;
        self
    }

    pub fn with_tail_tol(mut self, tail_tol: f64) -> Self {
        self.tail_tol = tail_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tail_tol > 0.0 && self.tail_tol.is_finite()) {
            return Err(Error::invalid(
                "truncation policy",
                "tail_tol must be positive",
            ));
        }
        if self.max_terms == 0 {
            return Err(Error::invalid(
                "truncation policy",
                "max_terms must be at least 1",
            ));
        }
        Ok(())
    }
}

/// A truncated sum together with a certified bound on what was left out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedSum {
    pub sum: f64,
    pub tail_bound: f64,
    pub terms: usize,
}

impl Kernel {
    pub fn separable_exponential(coef: f64, row_rate: f64, col_rate: f64) -> Result<Self> {
        let k = Kernel::SeparableExponential {
            coef,
            row_rate,
            col_rate,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn finite_lag(weights: Vec<Vec<f64>>) -> Result<Self> {
        let k = Kernel::FiniteLag { weights };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::SeparableExponential {
                coef,
                row_rate,
                col_rate,
            } => {
                if !coef.is_finite() || !row_rate.is_finite() || !col_rate.is_finite() {
                    return Err(Error::invalid("kernel", "parameters must be finite"));
                }
                if *row_rate <= 0.0 {
                    return Err(Error::invalid("kernel", "row_rate must be positive"));
                }
            }
            Kernel::FiniteLag { weights } => {
                let Some(first) = weights.first() else {
                    return Err(Error::invalid(
                        "kernel",
                        "weights must have at least one row",
                    ));
                };
                if first.is_empty() {
                    return Err(Error::invalid("kernel", "weight rows must be nonempty"));
                }
                if weights.iter().any(|r| r.len() != first.len()) {
                    return Err(Error::invalid(
                        "kernel",
                        "weight rows must have equal length",
                    ));
                }
                if weights.iter().flatten().any(|w| !w.is_finite()) {
                    return Err(Error::invalid("kernel", "weights must be finite"));
                }
            }
        }
        Ok(())
    }

    /// `a_{n,i}`.
    pub fn eval(&self, n: i64, i: i64) -> Result<f64> {
        if i > n {
            return Err(Error::FutureIndex { n, i });
        }
        Ok(self.at_lag(n, (n - i) as u64))
    }

    /// `a_{i, i - lag}`.
    #[inline]
    pub fn at_lag(&self, i: i64, lag: u64) -> f64 {
        match self {
            Kernel::SeparableExponential {
                coef,
                row_rate,
                col_rate,
            } => {
                if *coef == 0.0 {
                    return 0.0;
                }
                coef * ((row_rate - col_rate) * i as f64 - row_rate * lag as f64).exp()
            }
            Kernel::FiniteLag { weights } => {
                let row = &weights[i.rem_euclid(weights.len() as i64) as usize];
                row.get(lag as usize).copied().unwrap_or(0.0)
            }
        }
    }

    /// `Σ_{m <= i} |a_{i,m}|`.
    pub fn abs_row_sum(&self, i: i64) -> f64 {
        self.abs_tail(i, -1)
    }

    /// `Σ_{m < i - depth} |a_{i,m}|`, the part of row `i` beyond lag `depth`.
    /// `depth = -1` gives the full row sum.
    pub fn abs_tail(&self, i: i64, depth: i64) -> f64 {
        match self {
            Kernel::SeparableExponential {
                coef,
                row_rate,
                col_rate,
            } => {
                if *coef == 0.0 {
                    return 0.0;
                }
                let head = ((row_rate - col_rate) * i as f64 - row_rate * (depth + 1) as f64).exp();
                coef.abs() * head / -(-row_rate).exp_m1()
            }
            Kernel::FiniteLag { weights } => {
                let row = &weights[i.rem_euclid(weights.len() as i64) as usize];
                let from = (depth + 1).max(0) as usize;
                row.iter().skip(from).map(|w| w.abs()).sum()
            }
        }
    }

    /// `Σ_{i >= n} Σ_{m <= i} |a_{i,m}|`; `+∞` when the series diverges.
    pub fn double_tail(&self, n: i64) -> f64 {
        match self {
            Kernel::SeparableExponential {
                coef,
                row_rate,
                col_rate,
            } => {
                if *coef == 0.0 {
                    return 0.0;
                }
                if col_rate <= row_rate {
                    return f64::INFINITY;
                }
                let gap = col_rate - row_rate;
                coef.abs() * (-gap * n as f64).exp() / (-(-row_rate).exp_m1() * -(-gap).exp_m1())
            }
            Kernel::FiniteLag { weights } => {
                if weights.iter().flatten().all(|w| *w == 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Whether `a_{n+T, i+T} = a_{n,i}` for all `i <= n`.
    pub fn is_diagonal_periodic(&self, period: usize) -> bool {
        match self {
            Kernel::SeparableExponential {
                coef,
                row_rate,
                col_rate,
            } => *coef == 0.0 || row_rate == col_rate,
            Kernel::FiniteLag { weights } => {
                let rows = weights.len();
                (0..rows).all(|k| weights[k] == weights[(k + period) % rows])
            }
        }
    }

    /// Lag weights `A[k][r] = Σ_{j >= 0} a_{i, i - r - jT}` for any `i ≡ k (mod T)`.
    ///
    /// For a `T`-periodic input `s`, `Σ_{m <= i} a_{i,m} s_m = Σ_r A[i mod T][r] s_{i-r}`.
    pub fn folded_weights(&self, period: usize) -> Result<Vec<Vec<f64>>> {
        if period == 0 {
            return Err(Error::invalid("period", "must be at least 1"));
        }
        if !self.is_diagonal_periodic(period) {
            return Err(Error::NotDiagonalPeriodic { period });
        }
        let table = match self {
            Kernel::SeparableExponential { coef, row_rate, .. } => {
                if *coef == 0.0 {
                    vec![vec![0.0; period]; period]
                } else {
                    let denom = -(-row_rate * period as f64).exp_m1();
                    let row: Vec<f64> = (0..period)
                        .map(|r| coef * (-row_rate * r as f64).exp() / denom)
                        .collect();
                    vec![row; period]
                }
            }
            Kernel::FiniteLag { weights } => (0..period)
                .map(|k| {
                    let src = &weights[k % weights.len()];
                    let mut row = vec![0.0; period];
                    for (lag, w) in src.iter().enumerate() {
                        row[lag % period] += w;
                    }
                    row
                })
                .collect(),
        };
        Ok(table)
    }

    /// Truncated `Σ_{m <= i} a_{i,m} v(m)` for a callback with `|v| <= bound`.
    ///
    /// The depth is the smallest one whose remainder, `bound` times the
    /// absolute kernel tail, is at most `policy.tail_tol`. Terms are added in
    /// order of increasing `|a_{i,m}|`.
    pub fn inner_sum(
        &self,
        i: i64,
        values: impl Fn(i64) -> f64,
        bound: f64,
        policy: &TruncationPolicy,
    ) -> Result<TruncatedSum> {
        let bound = bound.abs();
        let terms = self.certified_terms(i, bound, policy)?;
        let tail_bound = bound * self.abs_tail(i, terms as i64 - 1);
        let sum = match self {
            Kernel::SeparableExponential { .. } => (0..terms as u64)
                .rev()
                .map(|lag| self.at_lag(i, lag) * values(i - lag as i64))
                .sum(),
            Kernel::FiniteLag { .. } => {
                let mut lags: Vec<(u64, f64)> = (0..terms as u64)
                    .map(|lag| (lag, self.at_lag(i, lag)))
                    .filter(|(_, w)| *w != 0.0)
                    .collect();
                lags.sort_by(|a, b| a.1.abs().total_cmp(&b.1.abs()));
                lags.iter()
                    .map(|(lag, w)| w * values(i - *lag as i64))
                    .sum()
            }
        };
        Ok(TruncatedSum {
            sum,
            tail_bound,
            terms,
        })
    }

    /// Number of terms `M + 1` needed for a certified remainder.
    fn certified_terms(&self, i: i64, bound: f64, policy: &TruncationPolicy) -> Result<usize> {
        let floor = policy.min_terms.max(1);
        let needed = match self {
            Kernel::SeparableExponential { coef, row_rate, .. } => {
                let full = bound * self.abs_row_sum(i);
                if *coef == 0.0 || bound == 0.0 || full <= policy.tail_tol {
                    1
                } else {
                    // bound * full * exp(-ρ * terms) <= tol
                    let est = ((full / policy.tail_tol).ln() / row_rate).ceil();
                    let mut terms = if est.is_finite() && est > 0.0 {
                        est.min(policy.max_terms as f64 + 1.0) as usize
                    } else {
                        1
                    };
                    while terms <= policy.max_terms
                        && bound * self.abs_tail(i, terms as i64 - 1) > policy.tail_tol
                    {
                        terms += 1;
                    }
                    terms
                }
            }
            Kernel::FiniteLag { weights } => weights[0].len(),
        };
        let terms = needed.max(floor);
        if terms > policy.max_terms {
            let capped = policy.max_terms;
            let tail = bound * self.abs_tail(i, capped as i64 - 1);
            if tail > policy.tail_tol {
                return Err(Error::TailNotCertified {
                    row: i,
                    max_terms: capped,
                    tail,
                    tol: policy.tail_tol,
                });
            }
            return Ok(capped);
        }
        Ok(terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const E: f64 = std::f64::consts::E;

    fn sep(c: f64, r: f64, s: f64) -> Kernel {
        Kernel::separable_exponential(c, r, s).unwrap()
    }

    /// Direct summation of `|a_{i,m}|` for `m` from `i - depth` to `i`.
    fn brute_row(k: &Kernel, i: i64, depth: i64) -> f64 {
        (i - depth..=i).map(|m| k.eval(i, m).unwrap().abs()).sum()
    }

    #[test]
    fn eval_examples() {
        assert_relative_eq!(
            sep(1.0, 1.0, 1.0).eval(3, 1).unwrap(),
            (-2.0f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            sep(1.0, 1.0, 2.0).eval(2, 2).unwrap(),
            (-2.0f64).exp(),
            max_relative = 1e-15
        );
        let lag0 = Kernel::finite_lag(vec![vec![1.0]]).unwrap();
        assert_eq!(lag0.eval(4, 3).unwrap(), 0.0);
        assert_eq!(lag0.eval(4, 4).unwrap(), 1.0);
        assert_eq!(lag0.eval(3, 4), Err(Error::FutureIndex { n: 3, i: 4 }));
    }

    #[test]
    fn constructors_validate() {
        assert!(Kernel::separable_exponential(1.0, 0.0, 1.0).is_err());
        assert!(Kernel::separable_exponential(1.0, -1.0, 1.0).is_err());
        assert!(Kernel::separable_exponential(f64::NAN, 1.0, 1.0).is_err());
        assert!(Kernel::finite_lag(vec![]).is_err());
        assert!(Kernel::finite_lag(vec![vec![]]).is_err());
        assert!(Kernel::finite_lag(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn row_sum_examples() {
        let ex1 = sep(1.0, 1.0, 1.0);
        for i in [-5, 0, 3, 17] {
            assert_relative_eq!(ex1.abs_row_sum(i), E / (E - 1.0), max_relative = 1e-14);
            assert_relative_eq!(
                ex1.abs_row_sum(i),
                brute_row(&ex1, i, 60),
                max_relative = 1e-14
            );
        }
        assert_relative_eq!(ex1.abs_row_sum(0), 1.5819767068693265, max_relative = 1e-12);
        let b2 = sep(1.0, 2.0, 3.0);
        assert_relative_eq!(b2.abs_row_sum(0), 1.156517642749666, max_relative = 1e-12);
        assert_relative_eq!(
            b2.abs_row_sum(0),
            brute_row(&b2, 0, 60),
            max_relative = 1e-14
        );
        let zero = Kernel::finite_lag(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(zero.abs_row_sum(3), 0.0);
    }

    #[test]
    fn double_tail_examples() {
        // brute force: rows 0..=60, each to depth 60
        let brute = |k: &Kernel| (0..=60).map(|i| brute_row(k, i, 60)).sum::<f64>();
        let a2 = sep(1.0, 1.0, 2.0);
        assert_relative_eq!(a2.double_tail(0), 2.5026503, epsilon = 1e-7);
        assert_relative_eq!(
            a2.double_tail(0),
            (E / (E - 1.0)).powi(2),
            max_relative = 1e-14
        );
        assert_relative_eq!(a2.double_tail(0), brute(&a2), max_relative = 1e-12);
        let b2 = sep(1.0, 2.0, 3.0);
        // 1/(1 - e^-2) * 1/(1 - e^-1) = 1.1565176 * 1.5819767 = 1.82958397
        assert_relative_eq!(b2.double_tail(0), 1.8295840, epsilon = 1e-7);
        assert_relative_eq!(
            b2.double_tail(0),
            1.0 / ((1.0 - (-2.0f64).exp()) * (1.0 - (-1.0f64).exp())),
            max_relative = 1e-14
        );
        assert_relative_eq!(b2.double_tail(0), brute(&b2), max_relative = 1e-12);
        assert_eq!(sep(1.0, 1.0, 1.0).double_tail(0), f64::INFINITY);
        assert_eq!(
            Kernel::finite_lag(vec![vec![0.5]]).unwrap().double_tail(0),
            f64::INFINITY
        );
        assert_eq!(
            Kernel::finite_lag(vec![vec![0.0]]).unwrap().double_tail(0),
            0.0
        );
    }

    #[test]
    fn folded_example_one() {
        let ex1 = sep(1.0, 1.0, 1.0);
        let a = ex1.folded_weights(2).unwrap();
        for row in &a {
            assert_relative_eq!(row[0], 1.1565176427496657, max_relative = 1e-12);
            assert_relative_eq!(row[1], 0.42545906411966, max_relative = 1e-12);
            // brute-force lag sums
            let lag = |r: u64| (0..200u64).map(|j| ex1.at_lag(0, r + 2 * j)).sum::<f64>();
            assert_relative_eq!(row[0], lag(0), max_relative = 1e-14);
            assert_relative_eq!(row[1], lag(1), max_relative = 1e-14);
            assert_relative_eq!(row[0] + row[1], ex1.abs_row_sum(0), max_relative = 1e-14);
        }
    }

    #[test]
    fn folded_finite_lag_pads_short_rows() {
        let k = Kernel::finite_lag(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(
            k.folded_weights(2).unwrap(),
            vec![vec![1.0, 2.0], vec![3.0, 4.0]]
        );
        let single = Kernel::finite_lag(vec![vec![1.0]]).unwrap();
        assert_eq!(
            single.folded_weights(3).unwrap(),
            vec![vec![1.0, 0.0, 0.0]; 3]
        );
        // long lags wrap around the period
        let long = Kernel::finite_lag(vec![vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(long.folded_weights(2).unwrap(), vec![vec![4.0, 2.0]; 2]);
    }

    #[test]
    fn folded_rejects_non_diagonal_periodic() {
        assert_eq!(
            sep(1.0, 1.0, 2.0).folded_weights(2),
            Err(Error::NotDiagonalPeriodic { period: 2 })
        );
        // rows of period 2 are not periodic with period 3
        let k = Kernel::finite_lag(vec![vec![1.0], vec![2.0]]).unwrap();
        assert!(k.is_diagonal_periodic(4));
        assert!(!k.is_diagonal_periodic(3));
        assert!(k.folded_weights(3).is_err());
    }

    #[test]
    fn inner_sum_examples() {
        let ex1 = sep(1.0, 1.0, 1.0);
        let policy = TruncationPolicy::new(1e-10, 10_000).unwrap();
        let s = ex1.inner_sum(5, |_| 1.0, 1.0, &policy).unwrap();
        assert!(s.tail_bound <= 1e-10);
        assert!((s.sum - E / (E - 1.0)).abs() <= 1e-10 + 1e-15);

        let z = ex1.inner_sum(5, |_| 0.0, 0.0, &policy).unwrap();
        assert_eq!(z.sum, 0.0);
        assert!(z.tail_bound <= 1e-10);

        let lag = Kernel::finite_lag(vec![vec![0.5, 0.25, 0.125]]).unwrap();
        let s = lag.inner_sum(3, |m| m as f64, 10.0, &policy).unwrap();
        assert_eq!(s.tail_bound, 0.0);
        assert_eq!(s.sum, 0.5 * 3.0 + 0.25 * 2.0 + 0.125 * 1.0);
    }

    #[test]
    fn inner_sum_reports_uncertified_tail() {
        let slow = sep(1.0, 0.001, 0.001);
        let policy = TruncationPolicy::new(1e-12, 50).unwrap();
        assert!(matches!(
            slow.inner_sum(0, |_| 1.0, 1.0, &policy),
            Err(Error::TailNotCertified { max_terms: 50, .. })
        ));
    }

    #[test]
    fn min_terms_forces_depth() {
        let ex1 = sep(1.0, 1.0, 1.0);
        let policy = TruncationPolicy::new(1e-3, 10_000)
            .unwrap()
            .with_min_terms(200);
        let s = ex1.inner_sum(0, |_| 1.0, 1.0, &policy).unwrap();
        assert_eq!(s.terms, 200);
        assert!(s.tail_bound < 1e-80);
    }

    proptest! {
        #[test]
        fn inner_sum_bounded_by_row_sum(c in 0.1f64..3.0, r in 0.1f64..3.0, s in 0.1f64..3.0,
                                        i in -5i64..20, tol_exp in 2i32..13) {
            let k = sep(c, r, s);
            let tol = 10f64.powi(-tol_exp);
            let policy = TruncationPolicy::new(tol, 1_000_000).unwrap();
            let t = k.inner_sum(i, |_| 1.0, 1.0, &policy).unwrap();
            let full = k.abs_row_sum(i);
            prop_assert!(t.tail_bound <= tol);
            prop_assert!(t.sum <= full * (1.0 + 1e-14) + tol);
            prop_assert!((full - t.sum) <= t.tail_bound + full * 1e-13);
        }

        #[test]
        fn double_tail_nonincreasing(c in 0.1f64..3.0, r in 0.1f64..3.0, gap in 0.05f64..2.0, n in -10i64..50) {
            let k = sep(c, r, r + gap);
            let (a, b) = (k.double_tail(n), k.double_tail(n + 1));
            prop_assert!(a.is_finite() && b < a);
            prop_assert!(k.double_tail(n + 2000) < 1e-40);
        }

        #[test]
        fn folded_rows_match_row_sums(c in -3.0f64..3.0, r in 0.1f64..3.0, period in 1usize..6) {
            let k = sep(c, r, r);
            for row in k.folded_weights(period).unwrap() {
                let s: f64 = row.iter().map(|w| w.abs()).sum();
                let full = k.abs_row_sum(0);
                prop_assert!((s - full).abs() <= 1e-12 * full.max(f64::MIN_POSITIVE));
            }
        }
    }
}
