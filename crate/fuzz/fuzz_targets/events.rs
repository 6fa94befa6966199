#![no_main]

use groupcraft::runner::{eval_points, parse_events};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(events) = parse_events(text) {
        let _ = eval_points(&events);
    }
});
