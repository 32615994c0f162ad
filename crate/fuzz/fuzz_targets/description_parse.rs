#![no_main]

use libfuzzer_sys::fuzz_target;
use srnn_core::language::DescriptionDoc;

fuzz_target!(|data: &str| {
    if let Ok(doc) = DescriptionDoc::parse(data) {
        assert_eq!(DescriptionDoc::parse(&doc.render()).as_ref(), Ok(&doc));
    }
});
