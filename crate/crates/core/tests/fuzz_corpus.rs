//! Replays the checked-in fuzz seeds through the same assertions as the fuzz
//! targets, so the seeds stay meaningful on stable toolchains.

use std::path::Path;

use volterra_periodic::config::parse_scenario;
use volterra_periodic::system::{
    check_asymptotic_hypotheses, check_periodic_hypotheses, parse_system,
};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<(String, String)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            (
                path.display().to_string(),
                std::fs::read_to_string(&path).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn scenario_seeds() {
    let all = seeds("parse_scenario");
    assert!(all.len() >= 5);
    let mut accepted = 0;
    for (name, text) in &all {
        let Ok(scenario) = parse_scenario(text) else {
            continue;
        };
        accepted += 1;
        let echoed = parse_scenario(&scenario.to_json()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(echoed, scenario, "{name}");
        let _ = check_periodic_hypotheses(&scenario.system);
        let _ = check_asymptotic_hypotheses(&scenario.system, scenario.c1, scenario.c2);
    }
    // the corpus holds both valid and rejected documents
    assert!(accepted >= 3 && accepted < all.len());
}

#[test]
fn system_seeds() {
    for (name, text) in seeds("parse_system") {
        if let Ok(spec) = parse_system(&text) {
            assert!(spec.validate().is_ok(), "{name}");
            assert_eq!(spec.h.period(), spec.period, "{name}");
        }
    }
}
