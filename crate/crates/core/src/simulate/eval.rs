use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{oracle_relations, SimScene};
use crate::config::EngineConfig;
use crate::ingest::ObjectTrack;
use crate::relations::{DirectionLabel, RelationEvent, RelationKind, SlotEvents};

/// Counts for one relation kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KindScore {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// 1.0 when nothing was detected.
    pub precision: f64,
    /// 1.0 when the oracle has nothing.
    pub recall: f64,
    pub f1: f64,
}

impl KindScore {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = ratio(2 * tp, 2 * tp + fp + fn_);
        Self {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub per_kind: BTreeMap<RelationKind, KindScore>,
    /// Tracks whose attribute labels match no scene object.
    pub unmatched_tracks: Vec<u32>,
}

impl EvalReport {
    pub fn score(&self, kind: RelationKind) -> KindScore {
        self.per_kind.get(&kind).copied().unwrap_or_default()
    }

    /// Pooled score over the kinds selected by `pick`.
    pub fn pooled(&self, pick: impl Fn(RelationKind) -> bool) -> KindScore {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (k, s) in &self.per_kind {
            if pick(*k) {
                tp += s.true_positives;
                fp += s.false_positives;
                fn_ += s.false_negatives;
            }
        }
        KindScore::from_counts(tp, fp, fn_)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("seed {}\n{:<28} {:>5} {:>5} {:>5} {:>9} {:>9}\n", self.seed, "kind", "tp", "fp", "fn", "precision", "recall");
        for (k, s) in &self.per_kind {
            out.push_str(&format!(
                "{:<28} {:>5} {:>5} {:>5} {:>9.4} {:>9.4}\n",
                k.as_str(),
                s.true_positives,
                s.false_positives,
                s.false_negatives,
                s.precision,
                s.recall
            ));
        }
        if !self.unmatched_tracks.is_empty() {
            out.push_str(&format!("unmatched tracks: {:?}\n", self.unmatched_tracks));
        }
        out
    }
}

/// Comparison key: slot, kind, scene object indices and direction label.
/// Touch pairs are unordered; every other kind keeps participant order.
pub type EventKey = (usize, RelationKind, Vec<Option<u32>>, Option<DirectionLabel>);

pub fn event_key(e: &RelationEvent, to_object: impl Fn(u32) -> Option<u32>) -> EventKey {
    let mut p: Vec<Option<u32>> = e.participants.iter().map(|id| to_object(*id)).collect();
    if e.kind == RelationKind::Touch {
        p.sort();
    }
    (e.slot_index, e.kind, p, e.direction_label)
}

/// Maps track ids to scene object indices by composite attribute label.
pub fn track_object_map(scene: &SimScene, tracks: &[ObjectTrack]) -> BTreeMap<u32, u32> {
    tracks
        .iter()
        .filter_map(|t| {
            let label = t.composite_label();
            scene
                .objects
                .iter()
                .position(|o| o.composite_label() == label)
                .map(|i| (t.track_id, i as u32))
        })
        .collect()
}

/// Scores detected events against the oracle for `scene`, per kind.
/// Every kind the oracle covers is reported, even when both sides are
/// empty.
pub fn evaluate(scene: &SimScene, tracks: &[ObjectTrack], detected: &[SlotEvents], cfg: &EngineConfig) -> EvalReport {
    let map = track_object_map(scene, tracks);
    let truth: BTreeSet<EventKey> = oracle_relations(scene, cfg)
        .iter()
        .flat_map(|s| s.events.iter())
        .map(|e| event_key(e, Some))
        .collect();
    let got: BTreeSet<EventKey> = detected
        .iter()
        .flat_map(|s| s.events.iter())
        .filter(|e| e.kind != RelationKind::FutureTouch)
        .map(|e| event_key(e, |id| map.get(&id).copied()))
        .collect();
    let mut per_kind = BTreeMap::new();
    for kind in RelationKind::ALL.into_iter().filter(|k| *k != RelationKind::FutureTouch) {
        let of = |s: &BTreeSet<EventKey>| s.iter().filter(|k| k.1 == kind).cloned().collect::<BTreeSet<_>>();
        let (t, g) = (of(&truth), of(&got));
        let tp = t.intersection(&g).count();
        per_kind.insert(kind, KindScore::from_counts(tp, g.len() - tp, t.len() - tp));
    }
    EvalReport {
        seed: scene.seed,
        per_kind,
        unmatched_tracks: tracks
            .iter()
            .map(|t| t.track_id)
            .filter(|id| !map.contains_key(id))
            .collect(),
    }
}
