//! Replays the checked-in fuzz seeds through the same entry points as the
//! fuzz targets.

use std::fs;
use std::path::PathBuf;

use srnn_core::config::{AttributeOrder, EngineConfig};
use srnn_core::ingest::{ingest, VideoDocument};
use srnn_core::language::{assemble_prompt, describe, DescriptionDoc, QType, Question};
use srnn_core::network::GraphDoc;
use srnn_core::simulate::SimScene;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn config_seeds_round_trip() {
    let mut parsed = 0;
    for (name, text) in seeds("config_parse") {
        if let Ok(cfg) = EngineConfig::parse(&text) {
            assert_eq!(EngineConfig::parse(&cfg.to_config_string()).unwrap(), cfg, "{name}");
            parsed += 1;
        }
    }
    assert!(parsed >= 2);
    assert_eq!(
        EngineConfig::parse(&seeds("config_parse").into_iter().find(|s| s.0 == "default.cfg").unwrap().1).unwrap(),
        EngineConfig::default()
    );
}

#[test]
fn video_seeds_ingest() {
    for (name, text) in seeds("video_json") {
        let doc = VideoDocument::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        ingest(&doc, &EngineConfig::default()).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn scene_seeds_load() {
    for (name, text) in seeds("scene_json") {
        let scene = SimScene::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(scene.trajectories().len(), scene.objects.len());
    }
}

#[test]
fn description_seeds_round_trip() {
    for (name, text) in seeds("description_parse") {
        let doc = DescriptionDoc::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(doc.render(), text, "{name}");
    }
}

#[test]
fn graph_seeds_reload_and_describe() {
    for (name, text) in seeds("graph_json") {
        let g = GraphDoc::from_json(&text)
            .unwrap_or_else(|e| panic!("{name}: {e}"))
            .into_graph()
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(g.invariant_violations().is_empty(), "{name}");
        assert_eq!(GraphDoc::from_graph(&g).to_json(), text.trim_end(), "{name}");
        let _ = describe(&g, AttributeOrder::TextureColorShape);
    }
}

#[test]
fn question_seeds_assemble() {
    for (name, text) in seeds("question_json") {
        let q = Question::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(assemble_prompt(&DescriptionDoc::default(), &q, QType::Predictive).contains(&q.question));
    }
}
