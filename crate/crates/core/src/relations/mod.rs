//! Time slots and the four relation detectors: kinematic profile, direction
//! change, distance change and touch.

mod detect;
mod direction;

pub use detect::{
    detect_all, detect_touch, direction_change, distance_change, distance_series,
    endpoint_displacement, kinematic_profile, mover_first, slot_samples, trailing_moving_average,
    DistanceSeries, TouchCheck,
};
pub use direction::{signed_angle, wrap_degrees, DirectionLabel};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::EngineConfig;

/// Frames `[start, end)` of one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeSlot {
    pub slot_index: usize,
    pub start: u32,
    pub end: u32,
}

impl TimeSlot {
    pub fn len(&self) -> usize {
        (self.end - self.start) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, frame: u32) -> bool {
        frame >= self.start && frame < self.end
    }

    pub fn frames(&self) -> std::ops::Range<u32> {
        self.start..self.end
    }
}

/// Splits `frame_count` frames into `slot_count` slots of
/// `round(fps * slot_duration_s)` frames. Frames past the last full slot are
/// appended to it; a short video yields fewer, possibly shorter slots.
pub fn segment(frame_count: usize, cfg: &EngineConfig) -> Vec<TimeSlot> {
    let len = cfg.slot_len_frames();
    let mut slots = Vec::new();
    for k in 0..cfg.slot_count {
        let start = k * len;
        if start >= frame_count {
            break;
        }
        let end = if k + 1 == cfg.slot_count {
            frame_count
        } else {
            ((k + 1) * len).min(frame_count)
        };
        slots.push(TimeSlot {
            slot_index: k,
            start: start as u32,
            end: end as u32,
        });
    }
    slots
}

/// Relation kinds in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Rest,
    Move,
    RestFirstThenMove,
    MoveFirstThenRest,
    ChangeDirection,
    GoCloser,
    GoFarther,
    GoFartherThenCloser,
    GoCloserThenFarther,
    Touch,
    FutureTouch,
}

impl RelationKind {
    pub const ALL: [RelationKind; 11] = [
        RelationKind::Rest,
        RelationKind::Move,
        RelationKind::RestFirstThenMove,
        RelationKind::MoveFirstThenRest,
        RelationKind::ChangeDirection,
        RelationKind::GoCloser,
        RelationKind::GoFarther,
        RelationKind::GoFartherThenCloser,
        RelationKind::GoCloserThenFarther,
        RelationKind::Touch,
        RelationKind::FutureTouch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Rest => "rest",
            RelationKind::Move => "move",
            RelationKind::RestFirstThenMove => "rest_first_then_move",
            RelationKind::MoveFirstThenRest => "move_first_then_rest",
            RelationKind::ChangeDirection => "change_direction",
            RelationKind::GoCloser => "go_closer",
            RelationKind::GoFarther => "go_farther",
            RelationKind::GoFartherThenCloser => "go_farther_then_closer",
            RelationKind::GoCloserThenFarther => "go_closer_then_farther",
            RelationKind::Touch => "touch",
            RelationKind::FutureTouch => "future_touch",
        }
    }

    pub fn is_kinematic(self) -> bool {
        matches!(
            self,
            RelationKind::Rest
                | RelationKind::Move
                | RelationKind::RestFirstThenMove
                | RelationKind::MoveFirstThenRest
        )
    }

    pub fn is_distance_trend(self) -> bool {
        matches!(
            self,
            RelationKind::GoCloser
                | RelationKind::GoFarther
                | RelationKind::GoFartherThenCloser
                | RelationKind::GoCloserThenFarther
        )
    }

    pub fn arity(self) -> usize {
        if self.is_kinematic() {
            1
        } else {
            2
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown relation kind `{0}`")]
pub struct UnknownKind(pub String);

impl FromStr for RelationKind {
    type Err = UnknownKind;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownKind(s.to_string()))
    }
}

/// One detected relation in one slot.
///
/// Kinematic kinds have one participant; every other kind has two, mover
/// first. For `change_direction` the second participant is the touch
/// partner that caused the change.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelationEvent {
    pub slot_index: usize,
    pub kind: RelationKind,
    pub participants: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction_label: Option<DirectionLabel>,
}

impl RelationEvent {
    pub fn unary(slot_index: usize, kind: RelationKind, track: u32) -> Self {
        Self {
            slot_index,
            kind,
            participants: vec![track],
            direction_label: None,
        }
    }

    pub fn binary(slot_index: usize, kind: RelationKind, a: u32, b: u32) -> Self {
        Self {
            slot_index,
            kind,
            participants: vec![a, b],
            direction_label: None,
        }
    }

    /// Sort key of the canonical event order: kind, then ascending
    /// participant ids, then the participant order itself.
    pub fn canonical_key(&self) -> (RelationKind, Vec<u32>, Vec<u32>, Option<DirectionLabel>) {
        let mut sorted = self.participants.clone();
        sorted.sort_unstable();
        (
            self.kind,
            sorted,
            self.participants.clone(),
            self.direction_label,
        )
    }

    pub fn is_well_formed(&self) -> bool {
        self.participants.len() == self.kind.arity()
            && (self.kind == RelationKind::ChangeDirection) == self.direction_label.is_some()
    }
}

/// Sorts events into canonical order.
pub fn canonical_sort(events: &mut [RelationEvent]) {
    events.sort_by_cached_key(|e| e.canonical_key());
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationError {
    #[error("track {track_id} has fewer than 2 usable samples in slot {slot_index}")]
    InsufficientData { track_id: u32, slot_index: usize },
    #[error("track {track_id} barely moves on one side of frame {frame} in slot {slot_index}")]
    DegenerateVector {
        track_id: u32,
        slot_index: usize,
        frame: u32,
    },
    #[error("distance trend of {a}/{b} in slot {slot_index} changes sign {sign_changes} times")]
    InternalInconsistency {
        a: u32,
        b: u32,
        slot_index: usize,
        sign_changes: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    InsufficientData,
    DegenerateVector,
    InternalInconsistency,
    UnconfirmedTouch,
    NotIsolated,
}

/// A detector outcome that produced no event but is worth reporting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationDiagnostic {
    pub slot_index: usize,
    pub kind: DiagnosticKind,
    pub participants: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<u32>,
}

impl From<RelationError> for RelationDiagnostic {
    fn from(e: RelationError) -> Self {
        match e {
            RelationError::InsufficientData {
                track_id,
                slot_index,
            } => RelationDiagnostic {
                slot_index,
                kind: DiagnosticKind::InsufficientData,
                participants: vec![track_id],
                frame: None,
            },
            RelationError::DegenerateVector {
                track_id,
                slot_index,
                frame,
            } => RelationDiagnostic {
                slot_index,
                kind: DiagnosticKind::DegenerateVector,
                participants: vec![track_id],
                frame: Some(frame),
            },
            RelationError::InternalInconsistency {
                a, b, slot_index, ..
            } => RelationDiagnostic {
                slot_index,
                kind: DiagnosticKind::InternalInconsistency,
                participants: vec![a, b],
                frame: None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotEvents {
    pub slot: TimeSlot,
    pub events: Vec<RelationEvent>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RelationReport {
    pub slots: Vec<SlotEvents>,
    pub diagnostics: Vec<RelationDiagnostic>,
}

impl RelationReport {
    pub fn events(&self) -> impl Iterator<Item = &RelationEvent> {
        self.slots.iter().flat_map(|s| s.events.iter())
    }
}
