//! The problem statement and checkers for the existence hypotheses.
//!
//! [`check_periodic_hypotheses`] covers the `∏(1 + h_l) ≠ 1` regime, where a
//! `T`-periodic solution is sought as a fixed point of the period-cyclic
//! operator. [`check_asymptotic_hypotheses`] covers the `∏(1 + h_l) = 1`
//! regime with summable kernels, where the solution splits into a periodic
//! part plus a decaying part. Failed hypotheses are report items, not errors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::asymptotic_solver::phi_psi;
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::periodic_solver::alpha;
use crate::sequences::PeriodicSequence;
use crate::PRODUCT_ONE_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    Sin,
    Cos,
    Tanh,
    RationalBounded,
}

/// A bounded scalar nonlinearity `x ↦ A·φ(κx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    pub amplitude: f64,
    pub frequency: f64,
}

impl Nonlinearity {
    pub fn new(kind: NonlinearityKind, amplitude: f64, frequency: f64) -> Result<Self> {
        let f = Self {
            kind,
            amplitude,
            frequency,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() || !self.frequency.is_finite() {
            return Err(Error::invalid(
                "nonlinearity",
                "amplitude and frequency must be finite",
            ));
        }
        Ok(())
    }

    /// The identically-zero nonlinearity.
    pub fn zero() -> Self {
        Self {
            kind: NonlinearityKind::Sin,
            amplitude: 0.0,
            frequency: 1.0,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let u = self.frequency * x;
        let shape = match self.kind {
            NonlinearityKind::Sin => u.sin(),
            NonlinearityKind::Cos => u.cos(),
            NonlinearityKind::Tanh => u.tanh(),
            NonlinearityKind::RationalBounded => u / (1.0 + u * u),
        };
        self.amplitude * shape
    }

    /// `sup_x |f(x)|`.
    pub fn bound(&self) -> f64 {
        match self.kind {
            NonlinearityKind::RationalBounded => self.amplitude.abs() / 2.0,
            _ => self.amplitude.abs(),
        }
    }

    /// Global Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        (self.amplitude * self.frequency).abs()
    }

    /// Non-decreasing with `|g(x)| <= g(|x|)` for all `x`.
    pub fn is_monotone(&self) -> bool {
        self.kind == NonlinearityKind::Tanh && self.amplitude * self.frequency > 0.0
    }
}

/// The full system: period, coefficients, kernels and nonlinearities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemSpec {
    pub period: usize,
    pub h: PeriodicSequence,
    pub p: PeriodicSequence,
    pub a: Kernel,
    pub b: Kernel,
    pub f: Nonlinearity,
    pub g: Nonlinearity,
}

impl SystemSpec {
    pub fn new(
        h: PeriodicSequence,
        p: PeriodicSequence,
        a: Kernel,
        b: Kernel,
        f: Nonlinearity,
        g: Nonlinearity,
    ) -> Result<Self> {
        let spec = Self {
            period: h.period(),
            h,
            p,
            a,
            b,
            f,
            g,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.period == 0 {
            return Err(Error::invalid("period", "must be positive"));
        }
        for (what, got) in [("h", self.h.period()), ("p", self.p.period())] {
            if got != self.period {
                return Err(Error::PeriodMismatch {
                    what,
                    expected: self.period,
                    got,
                });
            }
        }
        self.a.validate()?;
        self.b.validate()?;
        self.f.validate()?;
        self.g.validate()
    }

    /// Same system with both nonlinearities replaced.
    pub fn with_nonlinearities(&self, f: Nonlinearity, g: Nonlinearity) -> Self {
        Self {
            f,
            g,
            ..self.clone()
        }
    }
}

/// Parses a JSON scenario document and returns its system.
pub fn parse_system(config_text: &str) -> Result<SystemSpec> {
    crate::config::parse_scenario(config_text).map(|s| s.system)
}

pub fn eval_nonlinearity(f: &Nonlinearity, x: f64) -> f64 {
    f.eval(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    Periodic,
    Asymptotic,
}

/// Which existence result the periodic hypotheses support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremRoute {
    /// Both nonlinearities bounded; `W = max{W1 K1, W2 K2}`.
    BothBounded,
    /// `f` bounded, `g` monotone; `W = max{W1 K1, K2 g(W1 K1)}`.
    MonotoneG,
    /// `g` bounded, `f` monotone; `W = max{W2 K2, K1 f(W2 K2)}`.
    MonotoneF,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckItem {
    pub id: &'static str,
    pub passed: bool,
    pub detail: String,
    pub quantities: BTreeMap<&'static str, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub mode: CheckMode,
    pub pass: bool,
    pub items: Vec<CheckItem>,
    pub route: Option<TheoremRoute>,
    pub warnings: Vec<String>,
}

impl CheckReport {
    fn new(mode: CheckMode) -> Self {
        Self {
            mode,
            pass: true,
            items: Vec::new(),
            route: None,
            warnings: Vec::new(),
        }
    }

    fn push(
        &mut self,
        id: &'static str,
        passed: bool,
        detail: impl Into<String>,
        q: &[(&'static str, f64)],
    ) {
        self.pass &= passed;
        self.items.push(CheckItem {
            id,
            passed,
            detail: detail.into(),
            quantities: q.iter().copied().collect(),
        });
    }

    pub fn item(&self, id: &str) -> Option<&CheckItem> {
        self.items.iter().find(|i| i.id == id)
    }

    /// First value named `name` across all items.
    pub fn quantity(&self, name: &str) -> Option<f64> {
        self.items
            .iter()
            .find_map(|i| i.quantities.get(name).copied())
    }

    pub fn first_failure(&self) -> Option<&CheckItem> {
        self.items.iter().find(|i| !i.passed)
    }
}

/// `max_{n ∈ 0..T} |α| Σ_{i=n}^{n+T-1} |∏_{l=i+1}^{n+T-1}(1 + s_l)| Σ_{m<=i} |k_{i,m}|`.
pub fn coefficient_bound(seq: &PeriodicSequence, kernel: &Kernel, alpha: f64) -> f64 {
    let t = seq.period() as i64;
    (0..t)
        .map(|n| {
            let inner: f64 = (n..n + t)
                .map(|i| seq.product_one_plus(i + 1, n + t - 1).abs() * kernel.abs_row_sum(i))
                .sum();
            alpha.abs() * inner
        })
        .fold(0.0, f64::max)
}

fn zero_factor(seq: &PeriodicSequence) -> Option<usize> {
    seq.values().iter().position(|v| 1.0 + v == 0.0)
}

pub fn check_periodic_hypotheses(spec: &SystemSpec) -> CheckReport {
    let mut report = CheckReport::new(CheckMode::Periodic);
    let t = spec.period;

    let mut diag_ok = true;
    for (id, name, kernel) in [
        ("diagonal_periodic_a", "a", &spec.a),
        ("diagonal_periodic_b", "b", &spec.b),
    ] {
        let ok = kernel.is_diagonal_periodic(t);
        diag_ok &= ok;
        let detail = if ok {
            format!("{name}(n+T, i+T) = {name}(n, i)")
        } else {
            format!("{name} is not diagonal-periodic with period {t}")
        };
        report.push(id, ok, detail, &[]);
    }

    let zh = zero_factor(&spec.h);
    let zp = zero_factor(&spec.p);
    let detail = match (zh, zp) {
        (None, None) => "1 + h_n and 1 + p_n nonzero on a period".to_string(),
        (Some(k), _) => format!("1 + h_{k} = 0"),
        (_, Some(k)) => format!("1 + p_{k} = 0"),
    };
    report.push("nonzero_factors", zh.is_none() && zp.is_none(), detail, &[]);

    let prod_h = spec.h.period_product();
    let prod_p = spec.p.period_product();
    for (id, name, prod) in [
        ("product_h_not_one", "h", prod_h),
        ("product_p_not_one", "p", prod_p),
    ] {
        let ok = (prod - 1.0).abs() > PRODUCT_ONE_TOL;
        let key = if name == "h" {
            "product_h"
        } else {
            "product_p"
        };
        report.push(id, ok, format!("∏(1 + {name}_l) = {prod}"), &[(key, prod)]);
    }

    let (Ok(alpha_h), Ok(alpha_p)) = (alpha(&spec.h), alpha(&spec.p)) else {
        return report;
    };
    let alphas_ok = alpha_h.is_finite() && alpha_p.is_finite();
    report.push(
        "alpha",
        alphas_ok,
        format!("α_h = {alpha_h}, α_p = {alpha_p}"),
        &[("alpha_h", alpha_h), ("alpha_p", alpha_p)],
    );
    if !alphas_ok || !diag_ok {
        return report;
    }

    let k1 = coefficient_bound(&spec.h, &spec.a, alpha_h);
    let k2 = coefficient_bound(&spec.p, &spec.b, alpha_p);
    let k_ok = k1.is_finite() && k2.is_finite();
    report.push(
        "kernel_bounds",
        k_ok,
        format!("K1 = {k1}, K2 = {k2}"),
        &[("K1", k1), ("K2", k2)],
    );
    if !k_ok {
        return report;
    }

    let (w1, w2) = (spec.f.bound(), spec.g.bound());
    let (route, w) = if spec.g.is_monotone() {
        (
            TheoremRoute::MonotoneG,
            (w1 * k1).max(k2 * spec.g.eval(w1 * k1)),
        )
    } else if spec.f.is_monotone() {
        (
            TheoremRoute::MonotoneF,
            (w2 * k2).max(k1 * spec.f.eval(w2 * k2)),
        )
    } else {
        (TheoremRoute::BothBounded, (w1 * k1).max(w2 * k2))
    };
    report.route = Some(route);
    report.push(
        "theorem_route",
        w.is_finite(),
        format!("{route:?}: E maps the ball of radius W = {w} into itself"),
        &[("W1", w1), ("W2", w2), ("W", w)],
    );
    report
}

pub fn check_asymptotic_hypotheses(spec: &SystemSpec, c1: f64, c2: f64) -> CheckReport {
    let mut report = CheckReport::new(CheckMode::Asymptotic);
    for (name, c) in [("c1", c1), ("c2", c2)] {
        if c <= 0.0 || c.is_nan() {
            report.warnings.push(format!(
                "{name} = {c} is not positive; the existence result assumes positive constants"
            ));
        }
    }

    let prod_h = spec.h.period_product();
    let prod_p = spec.p.period_product();
    for (id, name, prod) in [
        ("product_h_one", "h", prod_h),
        ("product_p_one", "p", prod_p),
    ] {
        let ok = (prod - 1.0).abs() <= PRODUCT_ONE_TOL;
        let key = if name == "h" {
            "product_h"
        } else {
            "product_p"
        };
        report.push(id, ok, format!("∏(1 + {name}_l) = {prod}"), &[(key, prod)]);
    }

    let zh = zero_factor(&spec.h);
    let zp = zero_factor(&spec.p);
    report.push(
        "nonzero_factors",
        zh.is_none() && zp.is_none(),
        match (zh, zp) {
            (None, None) => "1 + h_n and 1 + p_n nonzero on a period".to_string(),
            (Some(k), _) => format!("1 + h_{k} = 0"),
            (_, Some(k)) => format!("1 + p_{k} = 0"),
        },
        &[],
    );

    let a_sum = spec.a.double_tail(0);
    let b_sum = spec.b.double_tail(0);
    report.push(
        "summable_a",
        a_sum.is_finite(),
        format!("Σ_(i>=0) Σ_(m<=i) |a(i,m)| = {a_sum}"),
        &[("a", a_sum)],
    );
    report.push(
        "summable_b",
        b_sum.is_finite(),
        format!("Σ_(i>=0) Σ_(m<=i) |b(i,m)| = {b_sum}"),
        &[("b", b_sum)],
    );

    let pp = match phi_psi(spec) {
        Ok(pp) => pp,
        Err(e) => {
            report.push("phi_psi", false, e.to_string(), &[]);
            return report;
        }
    };
    report.push(
        "phi_psi",
        true,
        "φ, ψ periodic with nonzero bounds".to_string(),
        &[
            ("m1", pp.m1),
            ("M1", pp.big_m1),
            ("m2", pp.m2),
            ("M2", pp.big_m2),
        ],
    );
    if !(a_sum.is_finite() && b_sum.is_finite()) {
        return report;
    }

    let w_star = w_star(spec, &pp, a_sum, b_sum, c1, c2);
    report.push(
        "w_star",
        w_star.is_finite(),
        format!("E* maps the ball of radius W* = {w_star} into itself"),
        &[
            ("W1", spec.f.bound()),
            ("W2", spec.g.bound()),
            ("W_star", w_star),
        ],
    );
    report
}

/// `max{M1/m1 W1 a + |c1|/m1, M2/m2 W2 b + |c2|/m2}`.
pub(crate) fn w_star(
    spec: &SystemSpec,
    pp: &crate::asymptotic_solver::PhiPsi,
    a_sum: f64,
    b_sum: f64,
    c1: f64,
    c2: f64,
) -> f64 {
    let first = pp.big_m1 / pp.m1 * spec.f.bound() * a_sum + c1.abs() / pp.m1;
    let second = pp.big_m2 / pp.m2 * spec.g.bound() * b_sum + c2.abs() / pp.m2;
    first.max(second)
}
