#![no_main]

use std::path::Path;

use causaldb::Schema;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let mut schema = Schema::new();
    schema.add("R", vec!["X".into(), "Y".into()]).unwrap();
    schema.add("S", vec!["Y".into()]).unwrap();
    if let Ok(db) = causaldb::storage::read_candidates_csv(data, Path::new("fuzz.csv"), &schema) {
        assert_eq!(db.endo_ids().count(), db.len());
    }
});
