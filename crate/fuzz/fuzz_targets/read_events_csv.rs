#![no_main]

use libfuzzer_sys::fuzz_target;
use spindet::event::validate_stream;
use spindet::io::read_events_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(stream) = read_events_csv(data, 640, 480) {
        assert!(validate_stream(&stream).is_ok());
    }
});
