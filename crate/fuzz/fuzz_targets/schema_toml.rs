#![no_main]

use libfuzzer_sys::fuzz_target;
use skycube::Schema;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(schema) = Schema::from_toml(text) {
        let all = schema.all_criteria();
        let shown = schema.format_set(all);
        assert_eq!(schema.parse_set(&shown).unwrap(), all);
    }
});
