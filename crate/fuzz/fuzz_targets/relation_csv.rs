#![no_main]

use libfuzzer_sys::fuzz_target;
use skycube::fixtures::pokemon_schema;
use skycube::load_relation;

fuzz_target!(|data: &[u8]| {
    if let Ok(r) = load_relation(data, pokemon_schema()) {
        let _ = skycube::relation::split_by_property(&r);
    }
});
