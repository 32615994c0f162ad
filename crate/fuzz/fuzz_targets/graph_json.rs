#![no_main]

use libfuzzer_sys::fuzz_target;
use srnn_core::language::describe;
use srnn_core::config::AttributeOrder;
use srnn_core::network::GraphDoc;

fuzz_target!(|data: &str| {
    let Ok(doc) = GraphDoc::from_json(data) else { return };
    if let Ok(g) = doc.into_graph() {
        let _ = g.invariant_violations();
        let _ = describe(&g, AttributeOrder::TextureColorShape);
    }
});
