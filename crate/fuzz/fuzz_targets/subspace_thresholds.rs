#![no_main]

use libfuzzer_sys::fuzz_target;
use skycube::emerging::{Cell, ThresholdSpec};
use skycube::fixtures::pokemon_schema;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let schema = pokemon_schema();
    if let Ok(set) = schema.parse_set(text) {
        assert_eq!(schema.parse_set(&schema.format_set(set)).unwrap(), set);
    }
    let items: Vec<String> = text.lines().map(str::to_string).collect();
    let half = items.len() / 2;
    let _ = ThresholdSpec::from_pairs(&items[..half], &items[half..]);
    let cell = Cell::parse(text);
    assert!(cell.specializes(&Cell::apex(cell.0.len())));
});
