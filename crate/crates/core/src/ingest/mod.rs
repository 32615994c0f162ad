//! Per-frame detection input: schema, attribute binding, tracking and 3D
//! center resolution.
//!
//! The input is one JSON document per video:
//!
//! ```json
//! {
//!   "video_id": "video_0001", "fps": 25, "width": 480, "height": 320,
//!   "intrinsics": {"f": 420, "cx": 240, "cy": 160},
//!   "frames": [
//!     {"index": 0, "detections": [
//!       {"kind": "shape", "label": "sphere", "confidence": 0.98,
//!        "box": [10, 10, 30, 30], "mean_rgb": [42, 75, 215], "center_depth": 2.1},
//!       {"kind": "texture", "label": "metal", "confidence": 0.95,
//!        "box": [10, 10, 30, 30], "mean_rgb": [42, 75, 215], "center_depth": 2.1}
//!     ]}
//!   ]
//! }
//! ```
//!
//! Each detection carries either `center_depth` (depth at the box center,
//! back-projected here) or `center_3d` (camera-frame center, used as is).
//! `mean_rgb` is expected to be aggregated over the central
//! `color_focus_area_ratio` of the box by whoever produced the detections.

mod bind;
mod color;
mod track;

pub use bind::{bind_attributes, BindTally, BoundObject, CenterObs};
pub use color::classify_color;
pub use track::{resolve_centers, track, ObjectTrack, RawSample, RawTrack, TrackSample};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::EngineConfig;
use crate::geometry::{Box2, CameraIntrinsics, Point3};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input does not match the video schema: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("track {track_id} has no depth or 3D center at frame {frame}")]
    MissingDepth { track_id: u32, frame: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionKind {
    Shape,
    Texture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub kind: DetectionKind,
    pub label: String,
    pub confidence: f64,
    #[serde(rename = "box")]
    pub bbox: Box2,
    pub mean_rgb: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_depth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_3d: Option<Point3>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IntrinsicsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDoc {
    pub index: u32,
    #[serde(default)]
    pub detections: Vec<Detection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoDocument {
    pub video_id: String,
    pub fps: f64,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub intrinsics: IntrinsicsDoc,
    /// Simulator seed, present when the document was rendered from a scene.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub frames: Vec<FrameDoc>,
}

impl VideoDocument {
    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("video document serializes")
    }

    /// Checks value ranges the schema cannot express.
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: String| Err(IngestError::Validation(m));
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return bad(format!("fps must be > 0, got {}", self.fps));
        }
        if let Some(f) = self.intrinsics.f {
            if !(f.is_finite() && f > 0.0) {
                return bad(format!("intrinsics.f must be > 0, got {f}"));
            }
        }
        for c in [self.intrinsics.cx, self.intrinsics.cy].into_iter().flatten() {
            if !c.is_finite() {
                return bad("principal point must be finite".into());
            }
        }
        let mut prev: Option<u32> = None;
        for frame in &self.frames {
            if prev.is_some_and(|p| frame.index <= p) {
                return bad(format!(
                    "frame indices must strictly increase (saw {} after {})",
                    frame.index,
                    prev.unwrap()
                ));
            }
            prev = Some(frame.index);
            for (i, d) in frame.detections.iter().enumerate() {
                let at = format!("frame {} detection {i}", frame.index);
                if !(0.0..=1.0).contains(&d.confidence) {
                    return bad(format!("{at}: confidence {} outside [0, 1]", d.confidence));
                }
                if d.mean_rgb.iter().any(|c| !(0.0..=255.0).contains(c)) {
                    return bad(format!("{at}: mean_rgb channel outside [0, 255]"));
                }
                if let Some(z) = d.center_depth {
                    if !(z.is_finite() && z > 0.0) {
                        return bad(format!("{at}: center_depth must be > 0, got {z}"));
                    }
                }
                if let Some(p) = d.center_3d {
                    if !p.is_finite() {
                        return bad(format!("{at}: center_3d must be finite"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of frames spanned, counting from index 0.
    pub fn frame_count(&self) -> usize {
        self.frames.last().map_or(0, |f| f.index as usize + 1)
    }

    pub fn camera(&self, cfg: &EngineConfig) -> Result<CameraIntrinsics, IngestError> {
        let f = self.intrinsics.f.unwrap_or(cfg.focal_length);
        let cx = self.intrinsics.cx.unwrap_or(self.width as f64 / 2.0);
        let cy = self.intrinsics.cy.unwrap_or(self.height as f64 / 2.0);
        CameraIntrinsics::new(f, cx, cy).map_err(|e| IngestError::Validation(e.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestDiagnostics {
    pub low_confidence: usize,
    pub unmatched_shape: usize,
    pub unmatched_texture: usize,
    pub bound_objects: usize,
    pub tracks: usize,
}

#[derive(Debug, Clone)]
pub struct IngestOutput {
    pub tracks: Vec<ObjectTrack>,
    pub frame_count: usize,
    pub diagnostics: IngestDiagnostics,
}

/// Binds, tracks and resolves every frame of a validated document.
pub fn ingest(doc: &VideoDocument, cfg: &EngineConfig) -> Result<IngestOutput, IngestError> {
    doc.validate()?;
    let camera = doc.camera(cfg)?;
    let mut diagnostics = IngestDiagnostics::default();
    let mut frames = Vec::with_capacity(doc.frames.len());
    for frame in &doc.frames {
        let (shapes, textures): (Vec<_>, Vec<_>) = frame
            .detections
            .iter()
            .cloned()
            .partition(|d| d.kind == DetectionKind::Shape);
        let (bound, tally) = bind_attributes(frame.index, &shapes, &textures, cfg);
        diagnostics.low_confidence += tally.low_confidence;
        diagnostics.unmatched_shape += tally.unmatched_shape;
        diagnostics.unmatched_texture += tally.unmatched_texture;
        diagnostics.bound_objects += bound.len();
        frames.push(bound);
    }
    let raw = track(&frames, cfg);
    let tracks = resolve_centers(&raw, &camera)?;
    diagnostics.tracks = tracks.len();
    Ok(IngestOutput {
        tracks,
        frame_count: doc.frame_count(),
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{
      "video_id": "v1", "fps": 25, "width": 480, "height": 320,
      "intrinsics": {"f": 420, "cx": 240, "cy": 160},
      "frames": [
        {"index": 0, "detections": [
          {"kind": "shape", "label": "sphere", "confidence": 0.98,
           "box": [230, 150, 250, 170], "mean_rgb": [42, 75, 215], "center_depth": 2.0},
          {"kind": "texture", "label": "metal", "confidence": 0.95,
           "box": [230, 150, 250, 170], "mean_rgb": [40, 70, 210], "center_depth": 2.0}
        ]},
        {"index": 1, "detections": [
          {"kind": "shape", "label": "sphere", "confidence": 0.98,
           "box": [231, 150, 251, 170], "mean_rgb": [42, 75, 215], "center_depth": 2.0},
          {"kind": "texture", "label": "metal", "confidence": 0.95,
           "box": [231, 150, 251, 170], "mean_rgb": [40, 70, 210], "center_depth": 2.0}
        ]}
      ]
    }"#;

    #[test]
    fn parses_and_ingests_example_document() {
        let doc = VideoDocument::from_json(DOC).unwrap();
        let out = ingest(&doc, &EngineConfig::default()).unwrap();
        assert_eq!(out.frame_count, 2);
        assert_eq!(out.tracks.len(), 1);
        let t = &out.tracks[0];
        assert_eq!(t.composite_label(), "blue_metal_sphere");
        assert_eq!(t.samples.len(), 2);
        assert_eq!(t.samples[0].center, Point3::new(0.0, 0.0, 2.0));
    }

    #[test]
    fn schema_errors_are_distinguished_from_validation_errors() {
        assert!(matches!(
            VideoDocument::from_json("{\"video_id\": 3}"),
            Err(IngestError::Schema(_))
        ));
        let mut doc = VideoDocument::from_json(DOC).unwrap();
        doc.frames[0].detections[0].confidence = 1.5;
        assert!(matches!(doc.validate(), Err(IngestError::Validation(_))));
        let mut doc = VideoDocument::from_json(DOC).unwrap();
        doc.frames[1].index = 0;
        assert!(matches!(doc.validate(), Err(IngestError::Validation(_))));
    }

    #[test]
    fn missing_depth_is_reported() {
        let mut doc = VideoDocument::from_json(DOC).unwrap();
        for d in &mut doc.frames[1].detections {
            d.center_depth = None;
        }
        match ingest(&doc, &EngineConfig::default()) {
            Err(IngestError::MissingDepth { track_id: 0, frame: 1 }) => {}
            other => panic!("expected MissingDepth, got {other:?}"),
        }
    }

    #[test]
    fn json_round_trip() {
        let doc = VideoDocument::from_json(DOC).unwrap();
        assert_eq!(VideoDocument::from_json(&doc.to_json()).unwrap(), doc);
    }
}
