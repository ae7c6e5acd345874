#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(q) = causaldb::parse_query(text) {
        // printing must round-trip
        let again = causaldb::parse_query(&q.to_string()).expect("printed query parses");
        assert_eq!(again.to_string(), q.to_string());
    }
});
