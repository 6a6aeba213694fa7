#![no_main]

use libfuzzer_sys::fuzz_target;
use skycube::persist::{parse_merged, write_merged};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(mr) = parse_merged(text) {
        let doc = write_merged(&mr).unwrap();
        let again = parse_merged(&doc).expect("written document parses");
        assert_eq!(write_merged(&again).unwrap(), doc);
    }
});
