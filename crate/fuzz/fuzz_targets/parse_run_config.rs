#![no_main]

use libfuzzer_sys::fuzz_target;
use spindet::io::RunConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = RunConfig::from_json_str(text) {
            let again = RunConfig::from_json_str(&cfg.to_json()).expect("serialized config parses");
            assert_eq!(again, cfg);
        }
    }
});
