#![no_main]

use libfuzzer_sys::fuzz_target;
use srnn_core::language::{assemble_prompt, DescriptionDoc, QType, Question};

fuzz_target!(|data: &str| {
    if let Ok(q) = Question::from_json(data) {
        let _ = assemble_prompt(&DescriptionDoc::default(), &q, QType::Descriptive);
    }
});
