#![no_main]

use libfuzzer_sys::fuzz_target;
use volterra_periodic::config::parse_scenario;
use volterra_periodic::system::{check_asymptotic_hypotheses, check_periodic_hypotheses};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(scenario) = parse_scenario(text) else {
        return;
    };
    // the echo of an accepted scenario must parse back to itself
    let echoed = parse_scenario(&scenario.to_json()).expect("echo re-parses");
    assert_eq!(echoed, scenario);

    let _ = check_periodic_hypotheses(&scenario.system);
    let _ = check_asymptotic_hypotheses(&scenario.system, scenario.c1, scenario.c2);
});
