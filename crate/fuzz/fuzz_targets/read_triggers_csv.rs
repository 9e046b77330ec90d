#![no_main]

use libfuzzer_sys::fuzz_target;
use spindet::io::{demux_triggers, read_triggers_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = read_triggers_csv(data) {
        let mut merged: Vec<u64> = records.iter().map(|r| r.t).collect();
        merged.sort_unstable();
        if let Ok(d) = demux_triggers(&merged, 1e6, 6.614e6, 500.0) {
            assert_eq!(d.pps.len() + d.rotation.len() + d.unknown.len(), merged.len());
        }
    }
});
