#![no_main]

use groupcraft::qlearner::checkpoint::Checkpoint;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(ck) = Checkpoint::parse(text) {
        let again = Checkpoint::parse(&ck.write()).expect("written checkpoint parses");
        // NaN payloads compare unequal, so compare the text form
        assert_eq!(again.write(), ck.write());
    }
});
