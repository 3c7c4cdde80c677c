#![no_main]

use libfuzzer_sys::fuzz_target;
use volterra_periodic::system::parse_system;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = parse_system(text) {
            assert!(spec.validate().is_ok());
            assert_eq!(spec.h.period(), spec.period);
        }
    }
});
