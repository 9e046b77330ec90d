#![no_main]

use libfuzzer_sys::fuzz_target;
use spindet::io::{decode_events, encode_events};

fuzz_target!(|data: &[u8]| {
    if let Ok(stream) = decode_events(data) {
        // anything that decodes re-encodes to the same bytes
        assert_eq!(encode_events(&stream).unwrap(), data);
    }
});
