//! JSON scenario documents.
//!
//! ```json
//! {
//!   "period": 2,
//!   "h": [2.0, 0.0],
//!   "p": [0.0, 2.0],
//!   "kernel_a": {"type": "separable_exponential", "coef": 1.0, "row_rate": 1.0, "col_rate": 1.0},
//!   "kernel_b": {"type": "finite_lag", "weights": [[0.5, 0.25]]},
//!   "f": {"kind": "sin", "amplitude": 1.0, "frequency": 1.0},
//!   "g": {"kind": "sin", "amplitude": 1.0, "frequency": 2.0},
//!   "history": {"window": [[0.0, 0.0], [1.0, 0.5]], "tail": {"type": "zero"}},
//!   "solver": {"tol": 1e-12, "strategy": "picard_then_newton"},
//!   "truncation": {"tail_tol": 1e-10, "max_terms": 100000},
//!   "c1": 1.0, "c2": 1.0, "horizon": 60
//! }
//! ```
//!
//! Only the system keys are required. The history window is listed in
//! increasing `n`, ending at `n = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{Kernel, TruncationPolicy};
use crate::periodic_solver::SolverOptions;
use crate::sequences::{History, PeriodicSequence, TailRule};
use crate::system::{Nonlinearity, NonlinearityKind, SystemSpec};

/// A parsed scenario: the system plus run parameters, with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub system: SystemSpec,
    pub history: History,
    pub solver: SolverOptions,
    pub truncation: TruncationPolicy,
    pub c1: f64,
    pub c2: f64,
    pub horizon: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    period: i64,
    h: Vec<f64>,
    p: Vec<f64>,
    kernel_a: Kernel,
    kernel_b: Kernel,
    f: Nonlinearity,
    g: Nonlinearity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    history: Option<RawHistory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    solver: Option<SolverOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truncation: Option<TruncationPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    horizon: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHistory {
    window: Vec<(f64, f64)>,
    #[serde(default = "zero_tail")]
    tail: TailRule,
}

fn zero_tail() -> TailRule {
    TailRule::Zero
}

fn at(path: &str) -> impl FnOnce(Error) -> Error + '_ {
    move |e| Error::Config {
        path: path.to_string(),
        message: e.to_string(),
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawScenario = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;

    if raw.period <= 0 {
        return Err(Error::Config {
            path: "period".into(),
            message: format!("period must be positive, got {}", raw.period),
        });
    }
    let period = raw.period as usize;
    for (name, v) in [("h", &raw.h), ("p", &raw.p)] {
        if v.len() != period {
            return Err(Error::Config {
                path: name.into(),
                message: format!("expected {period} entries (the period), got {}", v.len()),
            });
        }
    }
    let h = PeriodicSequence::new(raw.h).map_err(at("h"))?;
    let p = PeriodicSequence::new(raw.p).map_err(at("p"))?;
    raw.kernel_a.validate().map_err(at("kernel_a"))?;
    raw.kernel_b.validate().map_err(at("kernel_b"))?;
    raw.f.validate().map_err(at("f"))?;
    raw.g.validate().map_err(at("g"))?;
    let system = SystemSpec::new(h, p, raw.kernel_a, raw.kernel_b, raw.f, raw.g)?;

    let history = match raw.history {
        Some(rh) => History::new(rh.window, rh.tail).map_err(at("history"))?,
        None => History::zero(),
    };
    let solver = raw.solver.unwrap_or_default();
    solver.validate(period).map_err(at("solver"))?;
    let truncation = raw.truncation.unwrap_or_default();
    truncation.validate().map_err(at("truncation"))?;
    let c1 = raw.c1.unwrap_or(1.0);
    let c2 = raw.c2.unwrap_or(1.0);
    for (name, c) in [("c1", c1), ("c2", c2)] {
        if !c.is_finite() {
            return Err(Error::Config {
                path: name.into(),
                message: "must be finite".into(),
            });
        }
    }
    Ok(Scenario {
        system,
        history,
        solver,
        truncation,
        c1,
        c2,
        horizon: raw.horizon,
    })
}

impl Scenario {
    /// A scenario around `system` with every run parameter at its default.
    pub fn from_system(system: SystemSpec) -> Self {
        Self {
            system,
            history: History::zero(),
            solver: SolverOptions::default(),
            truncation: TruncationPolicy::default(),
            c1: 1.0,
            c2: 1.0,
            horizon: None,
        }
    }

    /// Canonical JSON form; [`parse_scenario`] maps it back to `self`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("scenario serializes")
    }

    pub fn to_value(&self) -> serde_json::Value {
        let s = &self.system;
        let raw = RawScenario {
            period: s.period as i64,
            h: s.h.values().to_vec(),
            p: s.p.values().to_vec(),
            kernel_a: s.a.clone(),
            kernel_b: s.b.clone(),
            f: s.f,
            g: s.g,
            history: Some(RawHistory {
                window: self.history.window().to_vec(),
                tail: self.history.tail(),
            }),
            solver: Some(self.solver.clone()),
            truncation: Some(self.truncation),
            c1: Some(self.c1),
            c2: Some(self.c2),
            horizon: self.horizon,
        };
        serde_json::to_value(raw).expect("scenario serializes")
    }
}

/// `h_n = 1 + cos(nπ)`, `p_n = 1 - cos(nπ)`, `a = b = e^{i-n}`, `f = sin x`, `g = sin 2x`.
pub fn example_one() -> SystemSpec {
    let k = Kernel::separable_exponential(1.0, 1.0, 1.0).unwrap();
    SystemSpec::new(
        PeriodicSequence::new(vec![2.0, 0.0]).unwrap(),
        PeriodicSequence::new(vec![0.0, 2.0]).unwrap(),
        k.clone(),
        k,
        Nonlinearity::new(NonlinearityKind::Sin, 1.0, 1.0).unwrap(),
        Nonlinearity::new(NonlinearityKind::Sin, 1.0, 2.0).unwrap(),
    )
    .unwrap()
}

/// `h_n = p_n = -1/2` (n even), `1` (n odd), `a = e^{i-2n}`, `b = e^{2i-3n}`,
/// `f = cos x`, `g = cos 2x`.
pub fn example_two() -> SystemSpec {
    let hp = PeriodicSequence::new(vec![-0.5, 1.0]).unwrap();
    SystemSpec::new(
        hp.clone(),
        hp,
        Kernel::separable_exponential(1.0, 1.0, 2.0).unwrap(),
        Kernel::separable_exponential(1.0, 2.0, 3.0).unwrap(),
        Nonlinearity::new(NonlinearityKind::Cos, 1.0, 1.0).unwrap(),
        Nonlinearity::new(NonlinearityKind::Cos, 1.0, 2.0).unwrap(),
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::parse_system;

    const EX1: &str = r#"{
        "period": 2, "h": [2.0, 0.0], "p": [0.0, 2.0],
        "kernel_a": {"type": "separable_exponential", "coef": 1.0, "row_rate": 1.0, "col_rate": 1.0},
        "kernel_b": {"type": "separable_exponential", "coef": 1.0, "row_rate": 1.0, "col_rate": 1.0},
        "f": {"kind": "sin", "amplitude": 1.0, "frequency": 1.0},
        "g": {"kind": "sin", "amplitude": 1.0, "frequency": 2.0}
    }"#;

    const EX2: &str = r#"{
        "period": 2, "h": [-0.5, 1.0], "p": [-0.5, 1.0],
        "kernel_a": {"type": "separable_exponential", "coef": 1.0, "row_rate": 1.0, "col_rate": 2.0},
        "kernel_b": {"type": "separable_exponential", "coef": 1.0, "row_rate": 2.0, "col_rate": 3.0},
        "f": {"kind": "cos", "amplitude": 1.0, "frequency": 1.0},
        "g": {"kind": "cos", "amplitude": 1.0, "frequency": 2.0},
        "c1": 1.0, "c2": 1.0, "horizon": 60
    }"#;

    #[test]
    fn parses_both_examples() {
        assert_eq!(parse_system(EX1).unwrap(), example_one());
        assert_eq!(parse_system(EX2).unwrap(), example_two());
        let s = parse_scenario(EX2).unwrap();
        assert_eq!(s.horizon, Some(60));
        assert_eq!(s.history, History::zero());
    }

    #[test]
    fn wrong_length_names_field() {
        let text = EX1.replace("\"h\": [2.0, 0.0]", "\"h\": [2.0, 0.0, 1.0]");
        match parse_system(&text) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "h"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nonpositive_period_rejected() {
        let text = EX1.replace("\"period\": 2", "\"period\": 0");
        assert!(matches!(parse_system(&text), Err(Error::Config { path, .. }) if path == "period"));
    }

    #[test]
    fn schema_errors_carry_paths() {
        let text = EX1.replace(
            "\"row_rate\": 1.0, \"col_rate\": 1.0}",
            "\"row_rate\": \"x\", \"col_rate\": 1.0}",
        );
        match parse_system(&text) {
            Err(Error::Config { path, .. }) => assert!(path.starts_with("kernel_a"), "{path}"),
            other => panic!("unexpected {other:?}"),
        }
        let text = EX1.replace(
            "\"kind\": \"sin\", \"amplitude\": 1.0, \"frequency\": 2.0",
            "\"kind\": \"exp\", \"amplitude\": 1.0, \"frequency\": 2.0",
        );
        match parse_system(&text) {
            Err(Error::Config { path, .. }) => assert!(path.starts_with('g'), "{path}"),
            other => panic!("unexpected {other:?}"),
        }
        let bad_rate = EX1.replacen("\"row_rate\": 1.0", "\"row_rate\": -1.0", 1);
        assert!(
            matches!(parse_system(&bad_rate), Err(Error::Config { path, .. }) if path == "kernel_a")
        );
        assert!(parse_system("{").is_err());
        assert!(parse_system("[]").is_err());
    }

    #[test]
    fn history_and_truncation_parse() {
        let text = EX1.replacen(
            "\"period\": 2,",
            r#""period": 2, "history": {"window": [[3.0, 4.0], [1.0, 2.0]], "tail": {"type": "constant", "eta": 5.0, "zeta": 6.0}},
               "truncation": {"tail_tol": 1e-12, "max_terms": 500},"#,
            1,
        );
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.history.get(0).unwrap(), (1.0, 2.0));
        assert_eq!(s.history.get(-1).unwrap(), (3.0, 4.0));
        assert_eq!(s.history.get(-9).unwrap(), (5.0, 6.0));
        assert_eq!(s.truncation.tail_tol, 1e-12);
        assert_eq!(s.truncation.max_terms, 500);
    }

    #[test]
    fn echo_round_trips() {
        for text in [EX1, EX2] {
            let s = parse_scenario(text).unwrap();
            let again = parse_scenario(&s.to_json()).unwrap();
            assert_eq!(again, s);
        }
    }
}
