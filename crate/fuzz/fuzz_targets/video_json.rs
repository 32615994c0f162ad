#![no_main]

use libfuzzer_sys::fuzz_target;
use srnn_core::config::EngineConfig;
use srnn_core::ingest::{ingest, VideoDocument};

fuzz_target!(|data: &str| {
    let Ok(doc) = VideoDocument::from_json(data) else { return };
    if doc.frame_count() > 2_000 {
        return;
    }
    let _ = ingest(&doc, &EngineConfig::default());
});
