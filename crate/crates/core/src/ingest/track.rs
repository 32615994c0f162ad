use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::bind::{BoundObject, CenterObs};
use super::IngestError;
use crate::config::EngineConfig;
use crate::geometry::{back_project, iou, Box2, CameraIntrinsics, Pixel, Point3};

#[derive(Debug, Clone, PartialEq)]
pub struct RawSample {
    pub frame: u32,
    pub bbox: Box2,
    pub center: Option<CenterObs>,
}

/// A track before 3D centers are resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTrack {
    pub track_id: u32,
    pub shape_label: String,
    pub texture_label: String,
    pub color_label: String,
    pub samples: Vec<RawSample>,
}

impl RawTrack {
    fn composite_label(&self) -> String {
        format!(
            "{}_{}_{}",
            self.color_label, self.texture_label, self.shape_label
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub frame: u32,
    #[serde(rename = "box")]
    pub bbox: Box2,
    pub center: Point3,
}

/// One tracked object: constant labels and time-ordered samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectTrack {
    pub track_id: u32,
    pub shape_label: String,
    pub texture_label: String,
    pub color_label: String,
    pub samples: Vec<TrackSample>,
}

impl ObjectTrack {
    pub fn composite_label(&self) -> String {
        format!(
            "{}_{}_{}",
            self.color_label, self.texture_label, self.shape_label
        )
    }

    pub fn first_frame(&self) -> Option<u32> {
        self.samples.first().map(|s| s.frame)
    }

    pub fn last_frame(&self) -> Option<u32> {
        self.samples.last().map(|s| s.frame)
    }

    /// Sample at `frame`, linearly interpolated across gaps of at most
    /// `max_gap` missing frames. `None` outside the track or inside a longer
    /// gap.
    pub fn sample_at(&self, frame: u32, max_gap: usize) -> Option<TrackSample> {
        match self.samples.binary_search_by_key(&frame, |s| s.frame) {
            Ok(i) => Some(self.samples[i]),
            Err(i) => {
                if i == 0 || i == self.samples.len() {
                    return None;
                }
                let (a, b) = (self.samples[i - 1], self.samples[i]);
                let missing = (b.frame - a.frame - 1) as usize;
                if missing > max_gap {
                    return None;
                }
                let t = (frame - a.frame) as f64 / (b.frame - a.frame) as f64;
                Some(TrackSample {
                    frame,
                    bbox: a.bbox.lerp(&b.bbox, t),
                    center: a.center.lerp(b.center, t),
                })
            }
        }
    }
}

/// Associates bound objects frame by frame.
///
/// An object continues the track with the same composite label whose last
/// box overlaps it most, provided the IoU reaches `box_overlap_thd`. Ties go
/// to the older track. Unmatched objects open new tracks in input order.
/// Tracks never close, so an object may reappear after a gap.
pub fn track(frames: &[Vec<BoundObject>], cfg: &EngineConfig) -> Vec<RawTrack> {
    let mut tracks: Vec<RawTrack> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for objects in frames {
        let object_labels: Vec<String> = objects.iter().map(|o| o.composite_label()).collect();
        let mut candidates = Vec::new();
        for (oi, obj) in objects.iter().enumerate() {
            for (ti, tr) in tracks.iter().enumerate() {
                let last = tr.samples.last().expect("tracks are never empty");
                if labels[ti] != object_labels[oi] || last.frame >= obj.frame_index {
                    continue;
                }
                let overlap = iou(&last.bbox, &obj.bbox);
                if overlap >= cfg.box_overlap_thd {
                    candidates.push((overlap, ti, oi));
                }
            }
        }
        candidates.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        let mut track_taken = vec![false; tracks.len()];
        let mut object_taken = vec![false; objects.len()];
        for (_, ti, oi) in candidates {
            if track_taken[ti] || object_taken[oi] {
                continue;
            }
            track_taken[ti] = true;
            object_taken[oi] = true;
            let obj = &objects[oi];
            tracks[ti].samples.push(RawSample {
                frame: obj.frame_index,
                bbox: obj.bbox,
                center: obj.center,
            });
        }
        for (oi, obj) in objects.iter().enumerate() {
            if object_taken[oi] {
                continue;
            }
            let t = RawTrack {
                track_id: tracks.len() as u32,
                shape_label: obj.shape_label.clone(),
                texture_label: obj.texture_label.clone(),
                color_label: obj.color_label.clone(),
                samples: vec![RawSample {
                    frame: obj.frame_index,
                    bbox: obj.bbox,
                    center: obj.center,
                }],
            };
            labels.push(t.composite_label());
            tracks.push(t);
        }
    }
    tracks
}

/// Turns depth observations into camera-frame centers using the box center
/// as the pixel location; supplied 3D centers pass through unchanged.
pub fn resolve_centers(
    tracks: &[RawTrack],
    k: &CameraIntrinsics,
) -> Result<Vec<ObjectTrack>, IngestError> {
    tracks
        .iter()
        .map(|t| {
            let samples = t
                .samples
                .iter()
                .map(|s| {
                    let center = match s.center {
                        Some(CenterObs::Camera(p)) => p,
                        Some(CenterObs::Depth(z)) => {
                            let (u, v) = s.bbox.center();
                            let px = Pixel::new(u, v, z)
                                .map_err(|e| IngestError::Validation(e.to_string()))?;
                            back_project(px, k)
                        }
                        None => {
                            return Err(IngestError::MissingDepth {
                                track_id: t.track_id,
                                frame: s.frame,
                            })
                        }
                    };
                    Ok(TrackSample {
                        frame: s.frame,
                        bbox: s.bbox,
                        center,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ObjectTrack {
                track_id: t.track_id,
                shape_label: t.shape_label.clone(),
                texture_label: t.texture_label.clone(),
                color_label: t.color_label.clone(),
                samples,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(frame: u32, label: (&str, &str, &str), b: [f64; 4]) -> BoundObject {
        BoundObject {
            frame_index: frame,
            color_label: label.0.into(),
            texture_label: label.1.into(),
            shape_label: label.2.into(),
            bbox: Box2::try_from(b).unwrap(),
            center: Some(CenterObs::Depth(2.0)),
            pair_iou: 1.0,
        }
    }

    const RED_CUBE: (&str, &str, &str) = ("red", "rubber", "cube");

    #[test]
    fn identical_boxes_continue_one_track() {
        let frames = vec![
            vec![obj(0, RED_CUBE, [0.0, 0.0, 10.0, 10.0])],
            vec![obj(1, RED_CUBE, [0.0, 0.0, 10.0, 10.0])],
        ];
        let tracks = track(&frames, &EngineConfig::default());
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].samples.len(), 2);
    }

    #[test]
    fn low_overlap_opens_new_track() {
        // IoU of [0,10]^2 and [x,x+10]x[0,10] is (10-x)/(10+x), which is 0.05 here
        let x = 10.0 * 0.95 / 1.05;
        let a = Box2::new(0.0, 0.0, 10.0, 10.0).unwrap();
        let b = Box2::new(x, 0.0, x + 10.0, 10.0).unwrap();
        assert!((iou(&a, &b) - 0.05).abs() < 1e-12);
        let frames = vec![
            vec![obj(0, RED_CUBE, [0.0, 0.0, 10.0, 10.0])],
            vec![obj(1, RED_CUBE, [x, 0.0, x + 10.0, 10.0])],
        ];
        let tracks = track(&frames, &EngineConfig::default());
        assert_eq!(tracks.len(), 2);
        assert_eq!(tracks[1].track_id, 1);
    }

    #[test]
    fn label_mismatch_opens_new_track() {
        let frames = vec![
            vec![obj(0, RED_CUBE, [0.0, 0.0, 10.0, 10.0])],
            vec![obj(1, ("red", "metal", "cube"), [0.0, 0.0, 10.0, 10.0])],
        ];
        assert_eq!(track(&frames, &EngineConfig::default()).len(), 2);
    }

    #[test]
    fn ties_go_to_the_older_track_and_are_deterministic() {
        // two tracks with identical boxes, then one object: older track wins
        let frames = vec![
            vec![
                obj(0, RED_CUBE, [0.0, 0.0, 10.0, 10.0]),
                obj(0, RED_CUBE, [0.0, 0.0, 10.0, 10.0]),
            ],
            vec![obj(1, RED_CUBE, [0.0, 0.0, 10.0, 10.0])],
        ];
        let first = track(&frames, &EngineConfig::default());
        assert_eq!(first[0].samples.len(), 2);
        assert_eq!(first[1].samples.len(), 1);
        assert_eq!(first, track(&frames, &EngineConfig::default()));
    }

    #[test]
    fn tracks_survive_gaps() {
        let frames = vec![
            vec![obj(0, RED_CUBE, [0.0, 0.0, 10.0, 10.0])],
            vec![],
            vec![],
            vec![obj(3, RED_CUBE, [1.0, 0.0, 11.0, 10.0])],
        ];
        let tracks = track(&frames, &EngineConfig::default());
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].samples.len(), 2);
    }

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(420.0, 240.0, 160.0).unwrap()
    }

    fn raw(center: Option<CenterObs>, b: [f64; 4]) -> RawTrack {
        RawTrack {
            track_id: 0,
            shape_label: "cube".into(),
            texture_label: "rubber".into(),
            color_label: "red".into(),
            samples: vec![RawSample {
                frame: 0,
                bbox: Box2::try_from(b).unwrap(),
                center,
            }],
        }
    }

    #[test]
    fn resolve_passes_3d_through() {
        let t = raw(
            Some(CenterObs::Camera(Point3::new(1.0, 1.0, 1.0))),
            [0.0, 0.0, 4.0, 4.0],
        );
        let out = resolve_centers(&[t], &k()).unwrap();
        assert_eq!(out[0].samples[0].center, Point3::new(1.0, 1.0, 1.0));
    }

    #[test]
    fn resolve_back_projects_box_center() {
        let t = raw(Some(CenterObs::Depth(3.0)), [230.0, 150.0, 250.0, 170.0]);
        let out = resolve_centers(&[t], &k()).unwrap();
        assert_eq!(out[0].samples[0].center, Point3::new(0.0, 0.0, 3.0));

        let t = raw(Some(CenterObs::Depth(2.0)), [440.0, 150.0, 460.0, 170.0]);
        let out = resolve_centers(&[t], &k()).unwrap();
        let c = out[0].samples[0].center;
        assert!((c.x - 1.0).abs() < 1e-12 && c.y == 0.0 && c.z == 2.0);
    }

    #[test]
    fn resolve_without_center_fails() {
        let t = raw(None, [0.0, 0.0, 4.0, 4.0]);
        assert!(matches!(
            resolve_centers(&[t], &k()),
            Err(IngestError::MissingDepth { track_id: 0, frame: 0 })
        ));
    }

    #[test]
    fn interpolation_respects_gap_limit() {
        let s = |frame, x: f64| TrackSample {
            frame,
            bbox: Box2::new(x, 0.0, x + 1.0, 1.0).unwrap(),
            center: Point3::new(x, 0.0, 2.0),
        };
        let t = ObjectTrack {
            track_id: 0,
            shape_label: "cube".into(),
            texture_label: "rubber".into(),
            color_label: "red".into(),
            samples: vec![s(0, 0.0), s(6, 6.0), s(20, 20.0)],
        };
        assert_eq!(t.sample_at(3, 5).unwrap().center.x, 3.0);
        assert!(t.sample_at(10, 5).is_none());
        assert!(t.sample_at(21, 5).is_none());
        assert_eq!(t.sample_at(10, 13).unwrap().center.x, 10.0);
    }
}
