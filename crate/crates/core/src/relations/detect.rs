use std::cmp::Ordering;

use super::{
    canonical_sort, segment, signed_angle, DiagnosticKind, DirectionLabel, RelationDiagnostic,
    RelationError, RelationEvent, RelationKind, RelationReport, SlotEvents, TimeSlot,
};
use crate::config::EngineConfig;
use crate::geometry::{distance, iou, Point3};
use crate::ingest::{ObjectTrack, TrackSample};

/// Distance differences at or below this size count as flat.
const FLAT_DIFF: f64 = 1e-9;

/// Samples of `track` inside `slot`, interpolated across short gaps.
///
/// Frames outside the track's lifetime are skipped. `None` when a gap longer
/// than `max_interp_gap` falls inside the slot; the track is then treated as
/// missing for the whole slot.
pub fn slot_samples(track: &ObjectTrack, slot: &TimeSlot, max_gap: usize) -> Option<Vec<TrackSample>> {
    let (Some(first), Some(last)) = (track.first_frame(), track.last_frame()) else {
        return Some(Vec::new());
    };
    let lo = slot.start.max(first);
    let hi = slot.end.min(last + 1);
    let mut out = Vec::with_capacity(hi.saturating_sub(lo) as usize);
    for frame in lo..hi {
        out.push(track.sample_at(frame, max_gap)?);
    }
    Some(out)
}

/// Displacement between the mean of the first and the mean of the last
/// `w` points, where `w = min(window, n / 2)` and at least 1. With
/// `window = 1` this is plain last-minus-first.
pub fn endpoint_displacement(points: &[Point3], window: usize) -> Option<Point3> {
    if points.len() < 2 {
        return None;
    }
    let w = window.min(points.len() / 2).max(1);
    let head = Point3::mean(points[..w].iter().copied())?;
    let tail = Point3::mean(points[points.len() - w..].iter().copied())?;
    Some(tail - head)
}

fn centers(samples: &[TrackSample]) -> Vec<Point3> {
    samples.iter().map(|s| s.center).collect()
}

fn moved(points: &[Point3], cfg: &EngineConfig) -> bool {
    endpoint_displacement(points, cfg.endpoint_window).is_some_and(|d| d.norm() > cfg.move_thd)
}

fn classify_kinematic(points: &[Point3], cfg: &EngineConfig) -> RelationKind {
    if !moved(points, cfg) {
        return RelationKind::Rest;
    }
    if points.len() < 3 {
        return RelationKind::Move;
    }
    let mid = (points.len() - 1) / 2;
    match (moved(&points[..=mid], cfg), moved(&points[mid..], cfg)) {
        (false, true) => RelationKind::RestFirstThenMove,
        (true, false) => RelationKind::MoveFirstThenRest,
        _ => RelationKind::Move,
    }
}

/// Rest, move, or one of the two half-slot transitions.
///
/// The slot's samples are split into halves sharing the middle sample; each
/// half gets the same displacement test as the whole slot.
pub fn kinematic_profile(
    track: &ObjectTrack,
    slot: &TimeSlot,
    cfg: &EngineConfig,
) -> Result<RelationEvent, RelationError> {
    let insufficient = RelationError::InsufficientData {
        track_id: track.track_id,
        slot_index: slot.slot_index,
    };
    let samples = slot_samples(track, slot, cfg.max_interp_gap).ok_or(insufficient.clone())?;
    if samples.len() < 2 {
        return Err(insufficient);
    }
    let kind = classify_kinematic(&centers(&samples), cfg);
    Ok(RelationEvent::unary(slot.slot_index, kind, track.track_id))
}

/// Pre- and post-touch windows of a slot, both including `touch_frame`.
/// Each side needs `2 * endpoint_window` samples (at least 2) so that both
/// endpoint averages are taken over disjoint stretches of the window.
fn touch_windows(
    samples: &[TrackSample],
    touch_frame: u32,
    cfg: &EngineConfig,
) -> Option<(Vec<Point3>, Vec<Point3>)> {
    let min_len = (2 * cfg.endpoint_window).max(2);
    let before: Vec<Point3> = samples
        .iter()
        .filter(|s| s.frame <= touch_frame)
        .map(|s| s.center)
        .collect();
    let after: Vec<Point3> = samples
        .iter()
        .filter(|s| s.frame >= touch_frame)
        .map(|s| s.center)
        .collect();
    (before.len() >= min_len && after.len() >= min_len).then_some((before, after))
}

fn direction_change_in(
    track_id: u32,
    partner: u32,
    samples: &[TrackSample],
    slot: &TimeSlot,
    touch_frame: u32,
    cfg: &EngineConfig,
) -> Result<Option<RelationEvent>, RelationError> {
    let (before, after) =
        touch_windows(samples, touch_frame, cfg).ok_or(RelationError::InsufficientData {
            track_id,
            slot_index: slot.slot_index,
        })?;
    let degenerate = RelationError::DegenerateVector {
        track_id,
        slot_index: slot.slot_index,
        frame: touch_frame,
    };
    let v0 = endpoint_displacement(&before, cfg.endpoint_window).ok_or(degenerate.clone())?;
    let v1 = endpoint_displacement(&after, cfg.endpoint_window).ok_or(degenerate.clone())?;
    if v0.norm() <= cfg.move_thd || v1.norm() <= cfg.move_thd {
        return Err(degenerate);
    }
    let theta = signed_angle(v0, v1);
    if theta.abs() <= cfg.direction_change_angle_thd {
        return Ok(None);
    }
    let label = DirectionLabel::from_angle(theta);
    if label == DirectionLabel::Front {
        return Ok(None);
    }
    Ok(Some(RelationEvent {
        slot_index: slot.slot_index,
        kind: RelationKind::ChangeDirection,
        participants: vec![track_id, partner],
        direction_label: Some(label),
    }))
}

/// Heading change of `track` across `touch_frame`, measured between the
/// window displacements before and after it within the slot.
pub fn direction_change(
    track: &ObjectTrack,
    partner: u32,
    slot: &TimeSlot,
    touch_frame: u32,
    cfg: &EngineConfig,
) -> Result<Option<RelationEvent>, RelationError> {
    let samples =
        slot_samples(track, slot, cfg.max_interp_gap).ok_or(RelationError::InsufficientData {
            track_id: track.track_id,
            slot_index: slot.slot_index,
        })?;
    direction_change_in(track.track_id, partner, &samples, slot, touch_frame, cfg)
}

/// At rest before `touch_frame` and moving after it.
fn starts_moving_at(samples: &[TrackSample], touch_frame: u32, cfg: &EngineConfig) -> bool {
    touch_windows(samples, touch_frame, cfg)
        .is_some_and(|(before, after)| !moved(&before, cfg) && moved(&after, cfg))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSeries {
    pub a: u32,
    pub b: u32,
    pub frames: Vec<u32>,
    pub distances: Vec<f64>,
}

impl DistanceSeries {
    /// Smallest distance and its earliest frame.
    pub fn argmin(&self) -> Option<(u32, f64)> {
        let mut best: Option<(u32, f64)> = None;
        for (&f, &d) in self.frames.iter().zip(&self.distances) {
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((f, d));
            }
        }
        best
    }
}

/// Pairwise distances over the frames where both sample lists have data.
pub fn distance_series(a: u32, sa: &[TrackSample], b: u32, sb: &[TrackSample]) -> DistanceSeries {
    let mut frames = Vec::new();
    let mut distances = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < sa.len() && j < sb.len() {
        match sa[i].frame.cmp(&sb[j].frame) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                frames.push(sa[i].frame);
                distances.push(distance(sa[i].center, sb[j].center));
                i += 1;
                j += 1;
            }
        }
    }
    DistanceSeries {
        a,
        b,
        frames,
        distances,
    }
}

/// Mean of each full trailing window; the output has `n - window + 1`
/// values, or none when the series is shorter than the window.
pub fn trailing_moving_average(values: &[f64], window: usize) -> Vec<f64> {
    if window == 0 || values.len() < window {
        return Vec::new();
    }
    values
        .windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect()
}

fn net_motion(samples: Option<&[TrackSample]>, cfg: &EngineConfig) -> f64 {
    samples
        .map(centers)
        .and_then(|p| endpoint_displacement(&p, cfg.endpoint_window))
        .map_or(0.0, |d| d.norm())
}

fn order_pair(a: u32, ma: f64, b: u32, mb: f64) -> (u32, u32) {
    match ma.partial_cmp(&mb) {
        Some(Ordering::Greater) => (a, b),
        Some(Ordering::Less) => (b, a),
        _ => (a.min(b), a.max(b)),
    }
}

/// Orders a pair mover first: larger net slot displacement, ties to the
/// lower track id.
pub fn mover_first(a: &ObjectTrack, b: &ObjectTrack, slot: &TimeSlot, cfg: &EngineConfig) -> (u32, u32) {
    let sa = slot_samples(a, slot, cfg.max_interp_gap);
    let sb = slot_samples(b, slot, cfg.max_interp_gap);
    order_pair(
        a.track_id,
        net_motion(sa.as_deref(), cfg),
        b.track_id,
        net_motion(sb.as_deref(), cfg),
    )
}

fn classify_trend(smoothed: &[f64]) -> Result<Option<RelationKind>, usize> {
    let mut signs: Vec<bool> = Vec::new();
    for w in smoothed.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= FLAT_DIFF {
            continue;
        }
        let up = d > 0.0;
        if signs.last() != Some(&up) {
            signs.push(up);
        }
    }
    match signs.as_slice() {
        [] => Ok(None),
        [false] => Ok(Some(RelationKind::GoCloser)),
        [true] => Ok(Some(RelationKind::GoFarther)),
        [false, true] => Ok(Some(RelationKind::GoCloserThenFarther)),
        [true, false] => Ok(Some(RelationKind::GoFartherThenCloser)),
        more => Err(more.len() - 1),
    }
}

fn distance_change_in(
    series: &DistanceSeries,
    order: (u32, u32),
    slot: &TimeSlot,
    cfg: &EngineConfig,
) -> Result<Option<RelationEvent>, RelationError> {
    if series.distances.len() < cfg.moving_avg_window {
        return Ok(None);
    }
    let Some((_, raw_min)) = series.argmin() else {
        return Ok(None);
    };
    if raw_min > cfg.dist_att_thd {
        return Ok(None);
    }
    let smoothed = trailing_moving_average(&series.distances, cfg.moving_avg_window);
    let lo = smoothed.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = smoothed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < cfg.distance_amplitude_thd {
        return Ok(None);
    }
    match classify_trend(&smoothed) {
        Ok(Some(kind)) => Ok(Some(RelationEvent::binary(
            slot.slot_index,
            kind,
            order.0,
            order.1,
        ))),
        Ok(None) => Ok(None),
        Err(sign_changes) => Err(RelationError::InternalInconsistency {
            a: order.0,
            b: order.1,
            slot_index: slot.slot_index,
            sign_changes,
        }),
    }
}

/// Distance trend of a pair within a slot.
///
/// The pair is attended only if its closest sampled distance is within
/// `dist_att_thd`. The series is smoothed with a trailing moving average; the
/// smoothed amplitude must reach `distance_amplitude_thd`, and the sign
/// pattern of its differences picks one of the four trends.
pub fn distance_change(
    a: &ObjectTrack,
    b: &ObjectTrack,
    slot: &TimeSlot,
    cfg: &EngineConfig,
) -> Result<Option<RelationEvent>, RelationError> {
    let (Some(sa), Some(sb)) = (
        slot_samples(a, slot, cfg.max_interp_gap),
        slot_samples(b, slot, cfg.max_interp_gap),
    ) else {
        return Ok(None);
    };
    let series = distance_series(a.track_id, &sa, b.track_id, &sb);
    let order = order_pair(
        a.track_id,
        net_motion(Some(&sa), cfg),
        b.track_id,
        net_motion(Some(&sb), cfg),
    );
    distance_change_in(&series, order, slot, cfg)
}

/// Outcome of a touch test on one pair in one slot.
#[derive(Debug, Clone, PartialEq)]
pub enum TouchCheck {
    NoCandidate,
    /// Close enough, but neither object changed its motion there.
    Unconfirmed { touch_frame: u32 },
    /// Confirmed, but a third object came within `touch_thd`.
    NotIsolated { touch_frame: u32, third: u32 },
    Touch { event: RelationEvent, touch_frame: u32 },
}

impl TouchCheck {
    pub fn event(&self) -> Option<&RelationEvent> {
        match self {
            TouchCheck::Touch { event, .. } => Some(event),
            _ => None,
        }
    }
}

struct SlotTrack<'a> {
    track: &'a ObjectTrack,
    samples: Option<Vec<TrackSample>>,
    motion: f64,
}

impl<'a> SlotTrack<'a> {
    fn new(track: &'a ObjectTrack, slot: &TimeSlot, cfg: &EngineConfig) -> Self {
        let samples = slot_samples(track, slot, cfg.max_interp_gap);
        let motion = net_motion(samples.as_deref(), cfg);
        Self {
            track,
            samples,
            motion,
        }
    }

    fn id(&self) -> u32 {
        self.track.track_id
    }
}

fn touch_in(
    a: &SlotTrack,
    b: &SlotTrack,
    others: &[&SlotTrack],
    slot: &TimeSlot,
    cfg: &EngineConfig,
) -> TouchCheck {
    let (Some(sa), Some(sb)) = (&a.samples, &b.samples) else {
        return TouchCheck::NoCandidate;
    };
    let series = distance_series(a.id(), sa, b.id(), sb);
    let Some((touch_frame, min_dist)) = series.argmin() else {
        return TouchCheck::NoCandidate;
    };
    let box_at = |s: &[TrackSample]| s.iter().find(|x| x.frame == touch_frame).map(|x| x.bbox);
    let boxes_overlap = match (box_at(sa), box_at(sb)) {
        (Some(ba), Some(bb)) => iou(&ba, &bb) >= cfg.touch_box_overlap_thd,
        _ => false,
    };
    if !(min_dist < cfg.touch_thd || boxes_overlap) {
        return TouchCheck::NoCandidate;
    }

    let changed = |s: &[TrackSample], id: u32, partner: u32| {
        matches!(
            direction_change_in(id, partner, s, slot, touch_frame, cfg),
            Ok(Some(_))
        ) || starts_moving_at(s, touch_frame, cfg)
    };
    if !(changed(sa, a.id(), b.id()) || changed(sb, b.id(), a.id())) {
        return TouchCheck::Unconfirmed { touch_frame };
    }

    for third in others {
        let Some(st) = &third.samples else { continue };
        for (pid, ps) in [(a.id(), sa), (b.id(), sb)] {
            let near = distance_series(pid, ps, third.id(), st)
                .distances
                .iter()
                .any(|&d| d < cfg.touch_thd);
            if near {
                return TouchCheck::NotIsolated {
                    touch_frame,
                    third: third.id(),
                };
            }
        }
    }

    let (first, second) = order_pair(a.id(), a.motion, b.id(), b.motion);
    TouchCheck::Touch {
        event: RelationEvent::binary(slot.slot_index, RelationKind::Touch, first, second),
        touch_frame,
    }
}

/// Touch test for a pair within a slot.
///
/// A candidate comes within `touch_thd`, or its boxes overlap by
/// `touch_box_overlap_thd` at the closest frame. It is confirmed when either
/// object changes direction across that frame or starts moving there, and
/// kept when no third track comes within `touch_thd` of either object during
/// the slot.
pub fn detect_touch(
    a: &ObjectTrack,
    b: &ObjectTrack,
    slot: &TimeSlot,
    all_tracks: &[ObjectTrack],
    cfg: &EngineConfig,
) -> TouchCheck {
    let va = SlotTrack::new(a, slot, cfg);
    let vb = SlotTrack::new(b, slot, cfg);
    let others: Vec<SlotTrack> = all_tracks
        .iter()
        .filter(|t| t.track_id != a.track_id && t.track_id != b.track_id)
        .map(|t| SlotTrack::new(t, slot, cfg))
        .collect();
    let refs: Vec<&SlotTrack> = others.iter().collect();
    touch_in(&va, &vb, &refs, slot, cfg)
}

/// Runs every detector on every slot of a video.
///
/// Events within a slot are in canonical order. Detector outcomes that yield
/// no event are reported as diagnostics.
pub fn detect_all(tracks: &[ObjectTrack], frame_count: usize, cfg: &EngineConfig) -> RelationReport {
    let mut report = RelationReport::default();
    for slot in segment(frame_count, cfg) {
        let views: Vec<SlotTrack> = tracks.iter().map(|t| SlotTrack::new(t, &slot, cfg)).collect();
        let mut events = Vec::new();
        let mut diag = |d: RelationDiagnostic| report.diagnostics.push(d);

        for v in &views {
            match &v.samples {
                Some(s) if s.len() >= 2 => {
                    let kind = classify_kinematic(&centers(s), cfg);
                    events.push(RelationEvent::unary(slot.slot_index, kind, v.id()));
                }
                Some(s) if s.is_empty() => {}
                _ => diag(
                    RelationError::InsufficientData {
                        track_id: v.id(),
                        slot_index: slot.slot_index,
                    }
                    .into(),
                ),
            }
        }

        for i in 0..views.len() {
            for j in i + 1..views.len() {
                let (a, b) = (&views[i], &views[j]);
                let others: Vec<&SlotTrack> = views
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != i && *k != j)
                    .map(|(_, v)| v)
                    .collect();
                match touch_in(a, b, &others, &slot, cfg) {
                    TouchCheck::NoCandidate => {}
                    TouchCheck::Unconfirmed { touch_frame } => diag(RelationDiagnostic {
                        slot_index: slot.slot_index,
                        kind: DiagnosticKind::UnconfirmedTouch,
                        participants: vec![a.id(), b.id()],
                        frame: Some(touch_frame),
                    }),
                    TouchCheck::NotIsolated { touch_frame, third } => diag(RelationDiagnostic {
                        slot_index: slot.slot_index,
                        kind: DiagnosticKind::NotIsolated,
                        participants: vec![a.id(), b.id(), third],
                        frame: Some(touch_frame),
                    }),
                    TouchCheck::Touch { event, touch_frame } => {
                        events.push(event);
                        for (p, partner) in [(a, b), (b, a)] {
                            let samples = p.samples.as_deref().unwrap_or(&[]);
                            match direction_change_in(
                                p.id(),
                                partner.id(),
                                samples,
                                &slot,
                                touch_frame,
                                cfg,
                            ) {
                                Ok(Some(e)) => events.push(e),
                                Ok(None) => {}
                                Err(e) => diag(e.into()),
                            }
                        }
                    }
                }

                if let (Some(sa), Some(sb)) = (&a.samples, &b.samples) {
                    let series = distance_series(a.id(), sa, b.id(), sb);
                    let order = order_pair(a.id(), a.motion, b.id(), b.motion);
                    match distance_change_in(&series, order, &slot, cfg) {
                        Ok(Some(e)) => events.push(e),
                        Ok(None) => {}
                        Err(e) => diag(e.into()),
                    }
                }
            }
        }

        canonical_sort(&mut events);
        events.dedup();
        report.slots.push(SlotEvents { slot, events });
    }
    report
}
