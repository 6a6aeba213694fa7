#![no_main]

use libfuzzer_sys::fuzz_target;
use skycube::persist::parse_materialization;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(stored) = parse_materialization(text) {
        let doc = stored.to_document().unwrap();
        let again = parse_materialization(&doc).expect("written document parses");
        assert_eq!(again.to_document().unwrap(), doc);
    }
});
