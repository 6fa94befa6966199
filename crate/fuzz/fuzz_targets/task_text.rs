#![no_main]

use groupcraft::recipe::{parse_task, write_task};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(task) = parse_task(text) {
        // anything accepted must survive a write/parse cycle unchanged
        let written = write_task(&task);
        let again = parse_task(&written).expect("written task parses");
        assert_eq!(write_task(&again), written);
        assert_eq!(again.optimal_return, task.optimal_return);
    }
});
