#![no_main]

use libfuzzer_sys::fuzz_target;
use spindet::io::read_ground_truth_csv;

fuzz_target!(|data: &[u8]| {
    let _ = read_ground_truth_csv(data);
});
