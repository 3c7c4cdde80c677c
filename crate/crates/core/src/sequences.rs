//! Integer-indexed sequence primitives.
//!
//! A [`PeriodicSequence`] stores one period and answers queries at any
//! integer by wraparound. A [`History`] holds the initial pair `(η, ζ)` on the
//! nonpositive integers. A [`Trajectory`] is a computed solution on `n >= 0`
//! together with the history it started from.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real sequence with `s_{n+T} = s_n` for every integer `n`.
///
/// Internal index `k` holds the value at every `n` with `n mod T = k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PeriodicSequence {
    values: Vec<f64>,
}

impl PeriodicSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid(
                "periodic sequence",
                "period must be at least 1",
            ));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "periodic sequence",
                format!("entry {k} is not finite"),
            ));
        }
        Ok(Self { values })
    }

    pub fn constant(value: f64, period: usize) -> Result<Self> {
        Self::new(vec![value; period.max(1)])
    }

    pub fn zeros(period: usize) -> Self {
        Self {
            values: vec![0.0; period.max(1)],
        }
    }

    /// Builds a sequence from its values on `0..T`, evaluated by `f`.
    pub fn from_fn(period: usize, f: impl FnMut(usize) -> f64) -> Result<Self> {
        Self::new((0..period).map(f).collect())
    }

    pub fn period(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at integer `n`, using the nonnegative modulus.
    #[inline]
    pub fn get(&self, n: i64) -> f64 {
        self.values[self.residue(n)]
    }

    #[inline]
    pub fn residue(&self, n: i64) -> usize {
        n.rem_euclid(self.values.len() as i64) as usize
    }

    /// Largest absolute value over one period.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∏_{l=0}^{T-1} (1 + s_l)`.
    pub fn period_product(&self) -> f64 {
        self.product_one_plus(0, self.period() as i64 - 1)
    }

    /// `∏_{l=a}^{b} (1 + s_l)`, equal to 1 when `a > b`.
    ///
    /// Whole periods are folded into a power of the full-period product, so
    /// any window of exactly `T` consecutive indices returns the same value
    /// bit for bit. Products are accumulated in double-double arithmetic.
    pub fn product_one_plus(&self, a: i64, b: i64) -> f64 {
        if a > b {
            return 1.0;
        }
        let period = self.period() as i64;
        let len = b - a + 1;
        let (whole, rest) = (len / period, len % period);
        let mut acc = DoubleDouble::ONE;
        if whole > 0 {
            let mut full = DoubleDouble::ONE;
            for v in &self.values {
                full = full.mul_f64(1.0 + v);
            }
            acc = full.powu(whole as u64);
        }
        for l in a..a + rest {
            acc = acc.mul_f64(1.0 + self.get(l));
        }
        acc.to_f64()
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    fn mul_f64(self, f: f64) -> Self {
        let p = self.hi * f;
        let e = self.hi.mul_add(f, -p);
        Self::renorm(p, e + self.lo * f)
    }

    fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Self::renorm(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    fn powu(self, mut exp: u64) -> Self {
        let mut base = self;
        let mut acc = Self::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            exp >>= 1;
        }
        acc
    }

    fn renorm(a: f64, b: f64) -> Self {
        let s = a + b;
        if !s.is_finite() {
            return Self { hi: s, lo: 0.0 };
        }
        let lo = b - (s - a);
        Self { hi: s, lo }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// How the history continues below its explicit window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TailRule {
    Zero,
    Constant { eta: f64, zeta: f64 },
}

/// Initial pair `(η_n, ζ_n)` for `n <= 0`.
///
/// `window[j]` holds the value at `n = j - H` where `H = window.len() - 1`,
/// so the last entry is `n = 0`. Below `-H` the tail rule applies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct History {
    window: Vec<(f64, f64)>,
    tail: TailRule,
}

impl History {
    pub fn new(window: Vec<(f64, f64)>, tail: TailRule) -> Result<Self> {
        if window.is_empty() {
            return Err(Error::invalid("history", "window must contain n = 0"));
        }
        if let Some(j) = window
            .iter()
            .position(|(a, b)| !a.is_finite() || !b.is_finite())
        {
            return Err(Error::invalid(
                "history",
                format!("window entry {j} is not finite"),
            ));
        }
        if let TailRule::Constant { eta, zeta } = tail {
            if !eta.is_finite() || !zeta.is_finite() {
                return Err(Error::invalid("history", "constant tail is not finite"));
            }
        }
        Ok(Self { window, tail })
    }

    /// The zero history, `η ≡ ζ ≡ 0`.
    pub fn zero() -> Self {
        Self {
            window: vec![(0.0, 0.0)],
            tail: TailRule::Zero,
        }
    }

    /// Restriction of a periodic pair to `-depth..=0`, with a zero tail below.
    pub fn from_periodic(x: &PeriodicSequence, y: &PeriodicSequence, depth: usize) -> Self {
        let window = (-(depth as i64)..=0)
            .map(|n| (x.get(n), y.get(n)))
            .collect();
        Self {
            window,
            tail: TailRule::Zero,
        }
    }

    pub fn window(&self) -> &[(f64, f64)] {
        &self.window
    }

    pub fn tail(&self) -> TailRule {
        self.tail
    }

    /// Depth `H` of the explicit window.
    pub fn depth(&self) -> usize {
        self.window.len() - 1
    }

    pub fn get(&self, n: i64) -> Result<(f64, f64)> {
        if n > 0 {
            return Err(Error::FutureHistory(n));
        }
        Ok(self.value(n))
    }

    /// Like [`History::get`] but for callers that already know `n <= 0`.
    pub(crate) fn value(&self, n: i64) -> (f64, f64) {
        debug_assert!(n <= 0);
        let h = self.depth() as i64;
        if n >= -h {
            self.window[(n + h) as usize]
        } else {
            match self.tail {
                TailRule::Zero => (0.0, 0.0),
                TailRule::Constant { eta, zeta } => (eta, zeta),
            }
        }
    }

    /// `sup_{n <= 0} max(|η_n|, |ζ_n|)`.
    pub fn sup_abs(&self) -> f64 {
        let tail = match self.tail {
            TailRule::Zero => 0.0,
            TailRule::Constant { eta, zeta } => eta.abs().max(zeta.abs()),
        };
        self.window
            .iter()
            .fold(tail, |m, (a, b)| m.max(a.abs()).max(b.abs()))
    }
}

/// A solution of the initial-value problem on `n >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub start: i64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub history: History,
    pub tail_tolerance_used: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Full-line value: history for `n <= 0`, computed values for `n >= 0`.
    ///
    /// Returns `None` beyond the computed range.
    pub fn value(&self, n: i64) -> Option<(f64, f64)> {
        if n < 0 {
            Some(self.history.value(n))
        } else {
            let j = n as usize;
            (j < self.x.len()).then(|| (self.x[j], self.y[j]))
        }
    }
}
