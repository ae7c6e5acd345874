#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((header, rows)) = causaldb::storage::read_relation_csv(data, Path::new("fuzz.csv")) {
        assert!(!header.is_empty());
        assert!(rows.iter().all(|(_, v)| v.len() == header.len()));
    }
});
