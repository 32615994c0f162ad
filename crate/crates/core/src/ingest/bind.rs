use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::color::classify_color;
use super::Detection;
use crate::config::EngineConfig;
use crate::geometry::{iou, Box2, Point3};

/// Where a bound object's 3D center comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterObs {
    /// Camera-frame center supplied by the producer.
    Camera(Point3),
    /// Depth at the box center; back-projected later.
    Depth(f64),
}

/// One object in one frame: a shape detection and a texture detection that
/// agree on location and color.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundObject {
    pub frame_index: u32,
    pub shape_label: String,
    pub texture_label: String,
    pub color_label: String,
    pub bbox: Box2,
    pub center: Option<CenterObs>,
    /// IoU of the source shape/texture pair.
    pub pair_iou: f64,
}

impl BoundObject {
    /// `<color>_<texture>_<shape>`
    pub fn composite_label(&self) -> String {
        format!(
            "{}_{}_{}",
            self.color_label, self.texture_label, self.shape_label
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BindTally {
    pub low_confidence: usize,
    pub unmatched_shape: usize,
    pub unmatched_texture: usize,
}

/// Greedy highest-IoU pairing of shape and texture detections of one frame.
///
/// A pair qualifies when its IoU is at least `attention_iou_thd` and both
/// detections classify to the same color. Ties in IoU go to the lower shape
/// index, then the lower texture index.
pub fn bind_attributes(
    frame_index: u32,
    shape_dets: &[Detection],
    texture_dets: &[Detection],
    cfg: &EngineConfig,
) -> (Vec<BoundObject>, BindTally) {
    let mut tally = BindTally::default();
    let keep = |d: &&Detection| d.confidence >= cfg.confidence_thd;
    let shapes: Vec<&Detection> = shape_dets.iter().filter(keep).collect();
    let textures: Vec<&Detection> = texture_dets.iter().filter(keep).collect();
    tally.low_confidence =
        shape_dets.len() + texture_dets.len() - shapes.len() - textures.len();

    let shape_colors: Vec<&str> = shapes
        .iter()
        .map(|d| classify_color(d.mean_rgb, &cfg.palette))
        .collect();
    let texture_colors: Vec<&str> = textures
        .iter()
        .map(|d| classify_color(d.mean_rgb, &cfg.palette))
        .collect();

    let mut candidates = Vec::new();
    for (si, s) in shapes.iter().enumerate() {
        for (ti, t) in textures.iter().enumerate() {
            let overlap = iou(&s.bbox, &t.bbox);
            if overlap >= cfg.attention_iou_thd && shape_colors[si] == texture_colors[ti] {
                candidates.push((overlap, si, ti));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut shape_used = vec![false; shapes.len()];
    let mut texture_used = vec![false; textures.len()];
    let mut bound = Vec::new();
    for (overlap, si, ti) in candidates {
        if shape_used[si] || texture_used[ti] {
            continue;
        }
        shape_used[si] = true;
        texture_used[ti] = true;
        let (s, t) = (shapes[si], textures[ti]);
        let center = s
            .center_3d
            .or(t.center_3d)
            .map(CenterObs::Camera)
            .or_else(|| s.center_depth.or(t.center_depth).map(CenterObs::Depth));
        bound.push(BoundObject {
            frame_index,
            shape_label: s.label.clone(),
            texture_label: t.label.clone(),
            color_label: shape_colors[si].to_string(),
            bbox: s.bbox.union(&t.bbox),
            center,
            pair_iou: overlap,
        });
    }
    tally.unmatched_shape = shape_used.iter().filter(|u| !**u).count();
    tally.unmatched_texture = texture_used.iter().filter(|u| !**u).count();
    (bound, tally)
}
