//! Ground-truth relations read off the closed-form scene.
//!
//! Positions come straight from the piecewise-linear trajectories in the
//! world frame, evaluated at frame instants so that window-based definitions
//! (endpoint averages, moving averages, half slots) are well defined. Angles
//! are planar `atan2` angles in the ground plane. Touch candidacy uses
//! center distance only: rendered boxes never overlap unless the centers are
//! already within `touch_thd`, so the box clause adds nothing here.

use super::{SimScene, Trajectory};
use crate::config::EngineConfig;
use crate::geometry::Point3;
use crate::relations::{
    canonical_sort, segment, DirectionLabel, RelationEvent, RelationKind, SlotEvents, TimeSlot,
};

const FLAT: f64 = 1e-9;

const SECTORS: [DirectionLabel; 8] = [
    DirectionLabel::Front,
    DirectionLabel::FrontRight,
    DirectionLabel::Right,
    DirectionLabel::BackRight,
    DirectionLabel::Back,
    DirectionLabel::BackLeft,
    DirectionLabel::Left,
    DirectionLabel::FrontLeft,
];

/// How far every thresholded quantity must sit from its threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginPolicy {
    /// Margin in units of sampling resolution. One frame moves an object by
    /// at most `v_max / fps`, so a sampled displacement is off by at most
    /// half of that and a sampled pair distance by twice as much.
    pub resolution_factor: f64,
    /// Margin on every angle comparison, in degrees.
    pub angle_margin_deg: f64,
    /// Smallest accepted gap between the two net displacements that decide
    /// participant order, unless both are exactly zero.
    pub order_gap: f64,
    /// Smoothed distance differences must stay out of this band around the
    /// flatness cutoff.
    pub flat_band: (f64, f64),
    /// Every simulated collision must show up as exactly one touch in the
    /// slot of its frame, and nothing else may.
    pub require_collision_agreement: bool,
    /// Touch confirmation must not change when the closest-approach frame
    /// moves by up to this many frames.
    pub anchor_slack_frames: u32,
    /// Fewest collisions inside the video a scene must have.
    pub min_collisions: usize,
}

impl Default for MarginPolicy {
    fn default() -> Self {
        Self {
            resolution_factor: 2.0,
            angle_margin_deg: 5.0,
            order_gap: 1e-6,
            flat_band: (1e-11, 1e-7),
            require_collision_agreement: true,
            anchor_slack_frames: 2,
            min_collisions: 0,
        }
    }
}

#[derive(Clone, Copy, Default, PartialEq)]
struct Perturb {
    angle_offset: f64,
    anchor_shift: i64,
}

#[derive(Default)]
struct Probe {
    order_gaps: Vec<(f64, f64)>,
    diffs: Vec<f64>,
}

struct Ends {
    first: Point3,
    last: Point3,
}

fn ends(points: &[Point3], window: usize) -> Option<Ends> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let w = window.min(n / 2).max(1);
    let avg = |s: &[Point3]| {
        let mut acc = Point3::ZERO;
        for p in s {
            acc = acc + *p;
        }
        acc / s.len() as f64
    };
    Some(Ends {
        first: avg(&points[..w]),
        last: avg(&points[n - w..]),
    })
}

fn planar(v: Point3) -> (f64, f64) {
    (v.x, v.y)
}

fn net(points: &[Point3], window: usize) -> Option<(f64, f64)> {
    ends(points, window).map(|e| planar(e.last - e.first))
}

fn len2((x, y): (f64, f64)) -> f64 {
    x.hypot(y)
}

fn is_moving(points: &[Point3], cfg: &EngineConfig) -> bool {
    net(points, cfg.endpoint_window).is_some_and(|d| len2(d) > cfg.move_thd)
}

/// Clockwise-from-above turn from `a` to `b` in degrees, in (-180, 180].
fn clockwise_turn(a: (f64, f64), b: (f64, f64)) -> f64 {
    let cross = a.0 * b.1 - a.1 * b.0;
    let dot = a.0 * b.0 + a.1 * b.1;
    let cw = -cross.atan2(dot).to_degrees();
    if cw <= -180.0 {
        cw + 360.0
    } else {
        cw
    }
}

fn wrap(a: f64) -> f64 {
    let mut a = a;
    while a > 180.0 {
        a -= 360.0;
    }
    while a <= -180.0 {
        a += 360.0;
    }
    a
}

fn sector(theta: f64) -> DirectionLabel {
    let idx = ((theta - 22.5) / 45.0).ceil() as i64;
    SECTORS[idx.rem_euclid(8) as usize]
}

struct View {
    frames: Vec<u32>,
    points: Vec<Point3>,
}

impl View {
    fn before(&self, f: u32) -> Vec<Point3> {
        self.frames
            .iter()
            .zip(&self.points)
            .filter(|(g, _)| **g <= f)
            .map(|(_, p)| *p)
            .collect()
    }

    fn after(&self, f: u32) -> Vec<Point3> {
        self.frames
            .iter()
            .zip(&self.points)
            .filter(|(g, _)| **g >= f)
            .map(|(_, p)| *p)
            .collect()
    }

    fn windows(&self, f: u32, cfg: &EngineConfig) -> Option<(Vec<Point3>, Vec<Point3>)> {
        let min_len = (2 * cfg.endpoint_window).max(2);
        let (b, a) = (self.before(f), self.after(f));
        (b.len() >= min_len && a.len() >= min_len).then_some((b, a))
    }
}

fn view(scene: &SimScene, tr: &Trajectory, start_frame: u32, slot: &TimeSlot) -> View {
    let mut frames = Vec::new();
    let mut points = Vec::new();
    for f in slot.start.max(start_frame)..slot.end {
        if let Some(p) = tr.position(scene.frame_time(f)) {
            frames.push(f);
            points.push(p);
        }
    }
    View { frames, points }
}

fn pair_distances(a: &View, b: &View) -> Vec<(u32, f64)> {
    a.frames
        .iter()
        .zip(&a.points)
        .filter_map(|(f, pa)| {
            b.frames
                .iter()
                .position(|g| g == f)
                .map(|k| (*f, len2(planar(*pa - b.points[k]))))
        })
        .collect()
}

fn turn_event(
    v: &View,
    touch_frame: u32,
    cfg: &EngineConfig,
    angle_offset: f64,
) -> Option<DirectionLabel> {
    let (b, a) = v.windows(touch_frame, cfg)?;
    let (d0, d1) = (net(&b, cfg.endpoint_window)?, net(&a, cfg.endpoint_window)?);
    if len2(d0) <= cfg.move_thd || len2(d1) <= cfg.move_thd {
        return None;
    }
    let theta = wrap(clockwise_turn(d0, d1) + angle_offset);
    if theta.abs() <= cfg.direction_change_angle_thd {
        return None;
    }
    Some(sector(theta)).filter(|l| *l != DirectionLabel::Front)
}

fn starts_moving(v: &View, touch_frame: u32, cfg: &EngineConfig) -> bool {
    v.windows(touch_frame, cfg)
        .is_some_and(|(b, a)| !is_moving(&b, cfg) && is_moving(&a, cfg))
}

fn slot_oracle(
    scene: &SimScene,
    trajectories: &[Trajectory],
    slot: &TimeSlot,
    cfg: &EngineConfig,
    perturb: Perturb,
    probe: &mut Probe,
) -> Vec<RelationEvent> {
    let k = slot.slot_index;
    let views: Vec<View> = scene
        .objects
        .iter()
        .zip(trajectories)
        .map(|(o, tr)| view(scene, tr, o.start_frame, slot))
        .collect();
    let motion: Vec<f64> = views
        .iter()
        .map(|v| net(&v.points, cfg.endpoint_window).map_or(0.0, len2))
        .collect();
    let order = |i: usize, j: usize, probe: &mut Probe| {
        probe.order_gaps.push((motion[i], motion[j]));
        if motion[j] > motion[i] || (motion[j] == motion[i] && j < i) {
            (j as u32, i as u32)
        } else {
            (i as u32, j as u32)
        }
    };

    let mut events = Vec::new();
    for (i, v) in views.iter().enumerate() {
        if v.points.len() < 2 {
            continue;
        }
        let kind = if !is_moving(&v.points, cfg) {
            RelationKind::Rest
        } else if v.points.len() < 3 {
            RelationKind::Move
        } else {
            let mid = (v.points.len() - 1) / 2;
            let first = is_moving(&v.points[..=mid], cfg);
            let second = is_moving(&v.points[mid..], cfg);
            match (first, second) {
                (false, true) => RelationKind::RestFirstThenMove,
                (true, false) => RelationKind::MoveFirstThenRest,
                _ => RelationKind::Move,
            }
        };
        events.push(RelationEvent::unary(k, kind, i as u32));
    }

    let n = views.len();
    for i in 0..n {
        for j in i + 1..n {
            let dists = pair_distances(&views[i], &views[j]);
            if dists.is_empty() {
                continue;
            }
            let (tf, dmin) = dists
                .iter()
                .copied()
                .fold((u32::MAX, f64::INFINITY), |best, (f, d)| if d < best.1 { (f, d) } else { best });

            if dmin < cfg.touch_thd {
                let tf = (i64::from(tf) + perturb.anchor_shift)
                    .clamp(i64::from(slot.start), i64::from(slot.end) - 1) as u32;
                let label_i = turn_event(&views[i], tf, cfg, perturb.angle_offset);
                let label_j = turn_event(&views[j], tf, cfg, perturb.angle_offset);
                let confirmed = label_i.is_some()
                    || label_j.is_some()
                    || starts_moving(&views[i], tf, cfg)
                    || starts_moving(&views[j], tf, cfg);
                let isolated = (0..n).filter(|m| *m != i && *m != j).all(|m| {
                    [i, j].iter().all(|&p| {
                        pair_distances(&views[p], &views[m])
                            .iter()
                            .all(|(_, d)| *d >= cfg.touch_thd)
                    })
                });
                if confirmed && isolated {
                    let (a, b) = order(i, j, probe);
                    events.push(RelationEvent::binary(k, RelationKind::Touch, a, b));
                    for (p, q, label) in [(i, j, label_i), (j, i, label_j)] {
                        if let Some(label) = label {
                            events.push(RelationEvent {
                                slot_index: k,
                                kind: RelationKind::ChangeDirection,
                                participants: vec![p as u32, q as u32],
                                direction_label: Some(label),
                            });
                        }
                    }
                }
            }

            let w = cfg.moving_avg_window;
            if dists.len() < w || dmin > cfg.dist_att_thd {
                continue;
            }
            let smooth: Vec<f64> = (w - 1..dists.len())
                .map(|e| dists[e + 1 - w..=e].iter().map(|x| x.1).sum::<f64>() / w as f64)
                .collect();
            let hi = smooth.iter().cloned().fold(f64::MIN, f64::max);
            let lo = smooth.iter().cloned().fold(f64::MAX, f64::min);
            if hi - lo < cfg.distance_amplitude_thd {
                continue;
            }
            let mut pattern = String::new();
            for s in smooth.windows(2) {
                let d = s[1] - s[0];
                probe.diffs.push(d);
                if d.abs() <= FLAT {
                    continue;
                }
                let c = if d > 0.0 { '+' } else { '-' };
                if !pattern.ends_with(c) {
                    pattern.push(c);
                }
            }
            let kind = match pattern.as_str() {
                "-" => RelationKind::GoCloser,
                "+" => RelationKind::GoFarther,
                "-+" => RelationKind::GoCloserThenFarther,
                "+-" => RelationKind::GoFartherThenCloser,
                _ => continue,
            };
            let (a, b) = order(i, j, probe);
            events.push(RelationEvent::binary(k, kind, a, b));
        }
    }
    canonical_sort(&mut events);
    events.dedup();
    events
}

fn run(scene: &SimScene, cfg: &EngineConfig, perturb: Perturb, probe: &mut Probe) -> Vec<SlotEvents> {
    let trajectories = scene.trajectories();
    segment(scene.frame_count(), cfg)
        .into_iter()
        .map(|slot| SlotEvents {
            events: slot_oracle(scene, &trajectories, &slot, cfg, perturb, probe),
            slot,
        })
        .collect()
}

/// Ground-truth relation events per slot. Participant ids are object
/// indices into `scene.objects`.
pub fn oracle_relations(scene: &SimScene, cfg: &EngineConfig) -> Vec<SlotEvents> {
    run(scene, cfg, Perturb::default(), &mut Probe::default())
}

/// Reasons the scene is too close to some decision boundary; empty when it
/// satisfies the policy.
///
/// Each threshold is shifted down and up by its margin and the oracle must
/// not change its answer. Displacement thresholds use one resolution unit
/// times `resolution_factor / 2`, distance thresholds twice that.
pub fn margin_violations(scene: &SimScene, cfg: &EngineConfig, policy: &MarginPolicy) -> Vec<String> {
    let mut out = Vec::new();
    let mut probe = Probe::default();
    let base = run(scene, cfg, Perturb::default(), &mut probe);

    let resolution = scene.max_speed() / scene.fps;
    let disp = policy.resolution_factor * resolution / 2.0;
    let dist = policy.resolution_factor * resolution;
    let deg = policy.angle_margin_deg;

    type Shift = fn(&mut EngineConfig, f64);
    let shifts: [(&str, Shift, f64); 5] = [
        ("move_thd", |c, d| c.move_thd += d, disp),
        ("touch_thd", |c, d| c.touch_thd += d, dist),
        ("dist_att_thd", |c, d| c.dist_att_thd += d, dist),
        ("distance_amplitude_thd", |c, d| c.distance_amplitude_thd += d, dist),
        ("direction_change_angle_thd", |c, d| c.direction_change_angle_thd += d, deg),
    ];
    for (name, shift, m) in shifts {
        for sign in [-1.0, 1.0] {
            let mut c = cfg.clone();
            shift(&mut c, sign * m);
            if run(scene, &c, Perturb::default(), &mut Probe::default()) != base {
                out.push(format!("{name} {:+}", sign * m));
            }
        }
    }
    for sign in [-1.0, 1.0] {
        let p = Perturb {
            angle_offset: sign * deg,
            ..Perturb::default()
        };
        if run(scene, cfg, p, &mut Probe::default()) != base {
            out.push(format!("turn angle {:+}", sign * deg));
        }
    }
    for shift in 1..=i64::from(policy.anchor_slack_frames) {
        for sign in [-1, 1] {
            let p = Perturb {
                anchor_shift: sign * shift,
                ..Perturb::default()
            };
            if run(scene, cfg, p, &mut Probe::default()) != base {
                out.push(format!("touch anchor {:+}", sign * shift));
            }
        }
    }

    for (a, b) in &probe.order_gaps {
        if !(*a == 0.0 && *b == 0.0) && (a - b).abs() < policy.order_gap {
            out.push(format!("participant order gap {}", (a - b).abs()));
        }
    }
    let (lo, hi) = policy.flat_band;
    for d in &probe.diffs {
        if d.abs() > lo && d.abs() < hi {
            out.push(format!("near-flat distance difference {d}"));
        }
    }

    let collisions = scene
        .events
        .iter()
        .filter(|c| (c.time * scene.fps).round() < scene.frame_count() as f64)
        .count();
    if collisions < policy.min_collisions {
        out.push(format!("{collisions} collisions, want {}", policy.min_collisions));
    }

    if policy.require_collision_agreement {
        let slots: Vec<TimeSlot> = base.iter().map(|s| s.slot).collect();
        let touches: Vec<&RelationEvent> = base
            .iter()
            .flat_map(|s| s.events.iter())
            .filter(|e| e.kind == RelationKind::Touch)
            .collect();
        let in_range: Vec<_> = scene
            .events
            .iter()
            .filter(|c| (c.time * scene.fps).round() < scene.frame_count() as f64)
            .collect();
        if touches.len() != in_range.len() {
            out.push(format!(
                "{} collisions but {} oracle touches",
                in_range.len(),
                touches.len()
            ));
        }
        for c in in_range {
            let frame = (c.time * scene.fps).round() as u32;
            let Some(slot) = slots.iter().find(|s| s.contains(frame)) else {
                continue;
            };
            let mut pair = [c.a as u32, c.b as u32];
            pair.sort_unstable();
            let found = touches.iter().any(|e| {
                let mut p = [e.participants[0], e.participants[1]];
                p.sort_unstable();
                e.slot_index == slot.slot_index && p == pair
            });
            if !found {
                out.push(format!("collision {}-{} at frame {frame} has no touch", c.a, c.b));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{generate_with_margin, simulate_collisions, SimObject};

    fn cfg() -> EngineConfig {
        EngineConfig::default()
    }

    fn object(x: f64, y: f64, vx: f64, vy: f64) -> SimObject {
        SimObject {
            shape: "sphere".into(),
            texture: "rubber".into(),
            color: "red".into(),
            position: Point3::new(x, y, 0.0),
            velocity: Point3::new(vx, vy, 0.0),
            start_frame: 0,
        }
    }

    fn scene(objects: Vec<SimObject>) -> SimScene {
        let mut s = SimScene {
            seed: 0,
            duration_s: 5.0,
            fps: 25.0,
            radius: 0.01,
            objects,
            events: Vec::new(),
        };
        simulate_collisions(&mut s);
        s
    }

    fn kinds(slots: &[SlotEvents], kind: RelationKind) -> Vec<(usize, Vec<u32>)> {
        slots
            .iter()
            .flat_map(|s| s.events.iter())
            .filter(|e| e.kind == kind)
            .map(|e| (e.slot_index, e.participants.clone()))
            .collect()
    }

    #[test]
    fn stationary_object_rests_everywhere() {
        let s = scene(vec![object(0.0, 0.0, 0.0, 0.0)]);
        let out = oracle_relations(&s, &cfg());
        assert_eq!(out.len(), 5);
        for slot in &out {
            assert_eq!(slot.events, vec![RelationEvent::unary(slot.slot.slot_index, RelationKind::Rest, 0)]);
        }
    }

    #[test]
    fn head_on_collision_is_one_touch_in_its_slot() {
        // contact when the gap of 0.32 has closed to 0.02 at 0.2/s: t = 1.5 s
        let s = scene(vec![object(-0.16, 0.0, 0.1, 0.0), object(0.16, 0.0, -0.1, 0.0)]);
        assert_eq!(s.events.len(), 1);
        let frame = (s.events[0].time * 25.0).round() as usize;
        assert_eq!(frame / 25, 1);
        let out = oracle_relations(&s, &cfg());
        assert_eq!(kinds(&out, RelationKind::Touch), vec![(1, vec![0, 1])]);
        let turns = kinds(&out, RelationKind::ChangeDirection);
        assert_eq!(turns.len(), 2);
        for slot in &out {
            for e in &slot.events {
                if e.kind == RelationKind::ChangeDirection {
                    assert_eq!(e.direction_label, Some(DirectionLabel::Back));
                }
            }
        }
    }

    #[test]
    fn receding_pair_goes_farther_while_attended() {
        // start 0.03 apart and separate at 0.04/s
        let s = scene(vec![object(-0.015, 0.0, -0.02, 0.0), object(0.015, 0.0, 0.02, 0.0)]);
        let out = oracle_relations(&s, &cfg());
        let farther = kinds(&out, RelationKind::GoFarther);
        // distance 0.03 + 0.04 t stays within 0.1 until t = 1.75 s
        assert_eq!(
            farther.iter().map(|e| e.0).collect::<Vec<_>>(),
            vec![0, 1]
        );
    }

    #[test]
    fn turn_sign_convention_in_world_frame() {
        // heading +y (away from the camera) turning to +x is a right turn
        assert!((clockwise_turn((0.0, 1.0), (1.0, 0.0)) - 90.0).abs() < 1e-12);
        assert_eq!(clockwise_turn((0.0, 1.0), (0.0, -1.0)), 180.0);
        assert_eq!(sector(90.0), DirectionLabel::Right);
        assert_eq!(sector(-157.5), DirectionLabel::Back);
        assert_eq!(sector(-157.4), DirectionLabel::BackLeft);
        assert_eq!(sector(22.5), DirectionLabel::Front);
        assert_eq!(sector(-22.5), DirectionLabel::FrontLeft);
    }

    #[test]
    fn sector_agrees_with_label_table() {
        for i in -179_999..=180_000 {
            let a = i as f64 / 1000.0;
            assert_eq!(sector(a), DirectionLabel::from_angle(a), "angle {a}");
        }
    }

    #[test]
    fn margin_scenes_exist_and_agree_with_collisions() {
        for min_collisions in [0, 1] {
            let policy = MarginPolicy {
                min_collisions,
                ..MarginPolicy::default()
            };
            for seed in 0..5 {
                let s = generate_with_margin(seed, 3, &cfg(), &policy, 5000).expect("a margin scene");
                assert!(margin_violations(&s, &cfg(), &policy).is_empty());
                assert!(s.events.len() >= min_collisions);
            }
        }
    }
}
