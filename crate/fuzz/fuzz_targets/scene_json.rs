#![no_main]

use libfuzzer_sys::fuzz_target;
use srnn_core::simulate::SimScene;

fuzz_target!(|data: &str| {
    if let Ok(scene) = SimScene::from_json(data) {
        let _ = scene.trajectories();
    }
});
