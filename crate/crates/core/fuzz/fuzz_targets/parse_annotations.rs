#![no_main]

use causaldb::storage::AnnotationSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = AnnotationSpec::parse(text);
    }
});
