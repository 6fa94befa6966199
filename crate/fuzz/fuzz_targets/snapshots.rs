#![no_main]

use groupcraft::metrics::decode_snapshots;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(snaps) = decode_snapshots(data) {
        let mut bytes = Vec::new();
        for s in &snaps {
            s.encode_into(&mut bytes);
        }
        assert_eq!(bytes, data);
    }
});
