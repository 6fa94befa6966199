#![no_main]

use groupcraft::metrics::{read_metrics_csv, write_metrics_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_metrics_csv(data) {
        let mut out = Vec::new();
        write_metrics_csv(&rows, &mut out).expect("writing to memory");
        let _ = read_metrics_csv(out.as_slice());
    }
});
