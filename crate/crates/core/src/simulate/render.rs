use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{world_to_camera, SimScene};
use crate::geometry::{Box2, Point3};
use crate::ingest::{Detection, DetectionKind, FrameDoc, IntrinsicsDoc, VideoDocument};

pub const IMAGE_WIDTH: u32 = 480;
pub const IMAGE_HEIGHT: u32 = 320;
pub const FOCAL_PX: f64 = 420.0;
const DETECTION_CONFIDENCE: f64 = 0.95;
const NOISE_STREAM: u64 = 0x6e6f_6973_65;

fn anchor_rgb(color: &str) -> [f64; 3] {
    crate::config::default_palette()
        .into_iter()
        .find(|p| p.name == color)
        .map_or([128.0, 128.0, 128.0], |p| p.rgb.map(f64::from))
}

/// Image box of a disc of `radius` whose center is at camera point `c`.
pub fn project_box(c: Point3, radius: f64) -> Option<Box2> {
    let u = FOCAL_PX * c.x / c.z + IMAGE_WIDTH as f64 / 2.0;
    let v = FOCAL_PX * c.y / c.z + IMAGE_HEIGHT as f64 / 2.0;
    Box2::centered(u, v, FOCAL_PX * 2.0 * radius / c.z).ok()
}

/// Renders the scene as an ingest document: one shape and one texture
/// detection per present object per frame, each carrying the camera-frame
/// center plus isotropic Gaussian noise of standard deviation `noise_sigma`.
/// Boxes are squares around the exact projected centers whose side is the
/// projected disc diameter; the noise perturbs positions only.
pub fn render_observations(scene: &SimScene, noise_sigma: f64) -> VideoDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(scene.seed ^ NOISE_STREAM);
    let normal = (noise_sigma > 0.0).then(|| Normal::new(0.0, noise_sigma).expect("sigma is finite"));
    let trajectories = scene.trajectories();
    let (cx, cy) = (IMAGE_WIDTH as f64 / 2.0, IMAGE_HEIGHT as f64 / 2.0);
    let mut frames = Vec::with_capacity(scene.frame_count());
    for f in 0..scene.frame_count() as u32 {
        let t = scene.frame_time(f);
        let mut detections = Vec::new();
        for (obj, tr) in scene.objects.iter().zip(&trajectories) {
            if f < obj.start_frame {
                continue;
            }
            let Some(world) = tr.position(t) else { continue };
            let exact = world_to_camera(world);
            let bbox = project_box(exact, scene.radius).expect("finite projection");
            let c = match &normal {
                Some(n) => exact + Point3::new(n.sample(&mut rng), n.sample(&mut rng), n.sample(&mut rng)),
                None => exact,
            };
            let rgb = anchor_rgb(&obj.color);
            for (kind, label) in [
                (DetectionKind::Shape, &obj.shape),
                (DetectionKind::Texture, &obj.texture),
            ] {
                detections.push(Detection {
                    kind,
                    label: label.clone(),
                    confidence: DETECTION_CONFIDENCE,
                    bbox,
                    mean_rgb: rgb,
                    center_depth: None,
                    center_3d: Some(c),
                });
            }
        }
        frames.push(FrameDoc {
            index: f,
            detections,
        });
    }
    VideoDocument {
        video_id: format!("sim_{}", scene.seed),
        fps: scene.fps,
        width: IMAGE_WIDTH,
        height: IMAGE_HEIGHT,
        intrinsics: IntrinsicsDoc {
            f: Some(FOCAL_PX),
            cx: Some(cx),
            cy: Some(cy),
        },
        seed: Some(scene.seed),
        frames,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::EngineConfig;
    use crate::ingest::ingest;
    use crate::simulate::generate;

    #[test]
    fn noiseless_centers_are_exact_and_tracks_match_trajectories() {
        let cfg = EngineConfig::default();
        let scene = generate(5, 4, &cfg);
        let doc = render_observations(&scene, 0.0);
        let trajectories = scene.trajectories();
        let out = ingest(&doc, &cfg).unwrap();
        assert_eq!(out.tracks.len(), scene.objects.len());
        for tr in &out.tracks {
            let idx = scene
                .objects
                .iter()
                .position(|o| o.composite_label() == tr.composite_label())
                .unwrap();
            assert_eq!(tr.samples.len(), scene.frame_count());
            for s in &tr.samples {
                let want = world_to_camera(trajectories[idx].position(scene.frame_time(s.frame)).unwrap());
                assert_eq!(s.center, want);
            }
        }
    }

    #[test]
    fn overlapping_boxes_imply_close_centers() {
        let cfg = EngineConfig::default();
        let r = cfg.touch_thd / 4.0;
        let step = 0.02;
        let n = (1.6 / step) as i32;
        let grid = |i: i32| -0.8 + step * i as f64;
        for i in 0..=n {
            for j in 0..=n {
                let a = Point3::new(grid(i), grid(j), 0.0);
                let ba = project_box(world_to_camera(a), r).unwrap();
                for dx in -15..=15 {
                    for dy in -15..=15 {
                        let b = a + Point3::new(dx as f64 * 0.004, dy as f64 * 0.004, 0.0);
                        let bb = project_box(world_to_camera(b), r).unwrap();
                        if crate::geometry::iou(&ba, &bb) >= cfg.touch_box_overlap_thd {
                            assert!((a - b).norm() < cfg.touch_thd, "{a:?} {b:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn noise_is_seeded_and_has_the_requested_scale() {
        let cfg = EngineConfig::default();
        let scene = generate(9, 2, &cfg);
        let a = render_observations(&scene, 0.01);
        assert_eq!(a, render_observations(&scene, 0.01));
        let clean = render_observations(&scene, 0.0);
        let mut sq = 0.0;
        let mut n = 0.0;
        for (fa, fc) in a.frames.iter().zip(&clean.frames) {
            for (da, dc) in fa.detections.iter().zip(&fc.detections).step_by(2) {
                let d = da.center_3d.unwrap() - dc.center_3d.unwrap();
                sq += d.dot(d);
                n += 3.0;
            }
        }
        let sigma = (sq / n).sqrt();
        assert!((sigma - 0.01).abs() < 0.001, "sigma {sigma}");
    }
}
