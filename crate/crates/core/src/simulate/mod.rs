//! Synthetic planar scenes of equal-mass discs with elastic collisions, a
//! renderer to the ingest schema, and the ground-truth relation oracle.
//!
//! World frame: `x` to the right, `y` away from the camera, `z` up. All
//! motion happens in the `z = 0` plane. The fixed camera looks at the origin
//! from `CAMERA_DISTANCE` away, pitched `CAMERA_PITCH_DEG` below the
//! horizon (see [`world_to_camera`]).

mod eval;
mod oracle;
mod render;

pub use eval::{evaluate, event_key, track_object_map, EvalReport, EventKey, KindScore};
pub use oracle::{margin_violations, oracle_relations, MarginPolicy};
pub use render::{render_observations, IMAGE_HEIGHT, IMAGE_WIDTH};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::EngineConfig;
use crate::geometry::Point3;

pub const CAMERA_PITCH_DEG: f64 = 60.0;
pub const CAMERA_DISTANCE: f64 = 2.0;

pub const SHAPES: [&str; 3] = ["cube", "sphere", "cylinder"];
pub const TEXTURES: [&str; 2] = ["rubber", "metal"];

const ARENA_HALF_WIDTH: f64 = 0.35;
const MIN_SEPARATION: f64 = 0.1;
const MOVER_PROBABILITY: f64 = 0.6;
const AIMED_PROBABILITY: f64 = 0.7;
const AIM_JITTER_RAD: f64 = 0.25;
const EXACT_AIM_PROBABILITY: f64 = 0.5;
pub const MIN_SPEED: f64 = 0.06;
pub const MAX_SPEED: f64 = 0.15;
const MAX_COLLISIONS: usize = 10_000;

/// Camera-frame coordinates of a world point. The map is a proper rotation
/// plus a translation, so distances are preserved.
/// Camera `y` points down the image, so the ground-plane normal has a
/// negative camera `y` component.
pub fn world_to_camera(p: Point3) -> Point3 {
    let (s, c) = CAMERA_PITCH_DEG.to_radians().sin_cos();
    Point3::new(p.x, -s * p.y - c * p.z, c * p.y - s * p.z + CAMERA_DISTANCE)
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene does not match the schema: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("invalid scene: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimObject {
    pub shape: String,
    pub texture: String,
    pub color: String,
    /// World position at `start_frame`.
    pub position: Point3,
    /// World velocity from `start_frame` until the first collision.
    pub velocity: Point3,
    /// The object is absent before this frame.
    #[serde(default)]
    pub start_frame: u32,
}

impl SimObject {
    pub fn composite_label(&self) -> String {
        format!("{}_{}_{}", self.color, self.texture, self.shape)
    }
}

/// One elastic collision with the velocities both objects leave it with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Collision {
    pub time: f64,
    pub frame: u32,
    pub a: usize,
    pub b: usize,
    pub velocity_a: Point3,
    pub velocity_b: Point3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScene {
    pub seed: u64,
    pub duration_s: f64,
    pub fps: f64,
    /// Disc radius; two objects touch at twice this distance.
    pub radius: f64,
    pub objects: Vec<SimObject>,
    pub events: Vec<Collision>,
}

/// Constant-velocity piece of a trajectory, valid from `t0` on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub p0: Point3,
    pub v: Point3,
}

impl Segment {
    pub fn at(&self, t: f64) -> Point3 {
        self.p0 + self.v * (t - self.t0)
    }
}

/// Closed-form motion of one object.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub segments: Vec<Segment>,
}

impl Trajectory {
    pub fn start(&self) -> f64 {
        self.segments[0].t0
    }

    pub fn segment_at(&self, t: f64) -> Option<&Segment> {
        if t < self.start() {
            return None;
        }
        self.segments.iter().rev().find(|s| s.t0 <= t)
    }

    pub fn position(&self, t: f64) -> Option<Point3> {
        self.segment_at(t).map(|s| s.at(t))
    }

    pub fn velocity(&self, t: f64) -> Option<Point3> {
        self.segment_at(t).map(|s| s.v)
    }

    pub fn max_speed(&self) -> f64 {
        self.segments.iter().map(|s| s.v.norm()).fold(0.0, f64::max)
    }
}

impl SimScene {
    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let scene: SimScene = serde_json::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: String| Err(SceneError::Validation(m));
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return bad(format!("fps must be > 0, got {}", self.fps));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!("duration_s must be > 0, got {}", self.duration_s));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return bad(format!("radius must be > 0, got {}", self.radius));
        }
        for (i, o) in self.objects.iter().enumerate() {
            if !(o.position.is_finite() && o.velocity.is_finite()) {
                return bad(format!("object {i} has a non-finite position or velocity"));
            }
        }
        let mut last = f64::NEG_INFINITY;
        for (k, e) in self.events.iter().enumerate() {
            let n = self.objects.len();
            if e.a >= n || e.b >= n || e.a == e.b {
                return bad(format!("event {k} names objects {} and {}", e.a, e.b));
            }
            if !(e.time.is_finite() && e.time >= last) {
                return bad(format!("event {k} is out of time order"));
            }
            if !(e.velocity_a.is_finite() && e.velocity_b.is_finite()) {
                return bad(format!("event {k} has a non-finite velocity"));
            }
            last = e.time;
        }
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        (self.duration_s * self.fps).round() as usize
    }

    pub fn frame_time(&self, frame: u32) -> f64 {
        frame as f64 / self.fps
    }

    /// Piecewise-constant trajectories rebuilt from the initial state and
    /// the recorded collisions.
    pub fn trajectories(&self) -> Vec<Trajectory> {
        let mut out: Vec<Trajectory> = self
            .objects
            .iter()
            .map(|o| Trajectory {
                segments: vec![Segment {
                    t0: self.frame_time(o.start_frame),
                    p0: o.position,
                    v: o.velocity,
                }],
            })
            .collect();
        for e in &self.events {
            for (i, v) in [(e.a, e.velocity_a), (e.b, e.velocity_b)] {
                let last = *out[i].segments.last().expect("trajectories start non-empty");
                out[i].segments.push(Segment {
                    t0: e.time,
                    p0: last.at(e.time),
                    v,
                });
            }
        }
        out
    }

    pub fn max_speed(&self) -> f64 {
        self.trajectories()
            .iter()
            .map(Trajectory::max_speed)
            .fold(0.0, f64::max)
    }
}

/// Earliest time `t >= 0` at which two discs moving at constant velocity
/// come within `contact`, if they are approaching.
pub fn contact_time(dp: Point3, dv: Point3, contact: f64) -> Option<f64> {
    let a = dv.dot(dv);
    let b = 2.0 * dp.dot(dv);
    if a == 0.0 || b >= 0.0 {
        return None;
    }
    let c = dp.dot(dp) - contact * contact;
    if c <= 0.0 {
        return Some(0.0);
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    Some(((-b - disc.sqrt()) / (2.0 * a)).max(0.0))
}

/// Equal-mass elastic exchange of the velocity components along the line of
/// centers.
pub fn elastic_exchange(pa: Point3, va: Point3, pb: Point3, vb: Point3) -> (Point3, Point3) {
    let d = pb - pa;
    let n = d / d.norm();
    let k = (va - vb).dot(n);
    (va - n * k, vb + n * k)
}

/// Runs the event-driven simulation and fills in `events`.
pub fn simulate_collisions(scene: &mut SimScene) {
    let n = scene.objects.len();
    let contact = 2.0 * scene.radius;
    let starts: Vec<f64> = scene
        .objects
        .iter()
        .map(|o| scene.frame_time(o.start_frame))
        .collect();
    let mut pos: Vec<Point3> = scene.objects.iter().map(|o| o.position).collect();
    let mut vel: Vec<Point3> = scene.objects.iter().map(|o| o.velocity).collect();
    let mut now = 0.0f64;
    let active = |i: usize, t: f64| starts[i] <= t;
    let mut events = Vec::new();

    // objects not yet present are parked at their entry point with no motion
    let state_at = |pos: &[Point3], vel: &[Point3], i: usize, now: f64, t: f64| -> Point3 {
        if starts[i] > now {
            pos[i]
        } else {
            pos[i] + vel[i] * (t - now)
        }
    };

    while events.len() < MAX_COLLISIONS {
        let mut next: Option<(f64, usize, usize)> = None;
        let mut next_entry: Option<f64> = None;
        for &s in &starts {
            if s > now && next_entry.map_or(true, |e| s < e) {
                next_entry = Some(s);
            }
        }
        for i in 0..n {
            if !active(i, now) {
                continue;
            }
            for j in i + 1..n {
                if !active(j, now) {
                    continue;
                }
                if let Some(dt) = contact_time(pos[j] - pos[i], vel[j] - vel[i], contact) {
                    let t = now + dt;
                    if next.map_or(true, |(bt, _, _)| t < bt) {
                        next = Some((t, i, j));
                    }
                }
            }
        }
        let horizon = scene.duration_s;
        match (next, next_entry) {
            (Some((t, i, j)), entry) if t <= horizon && entry.map_or(true, |e| t < e) => {
                let new_pos: Vec<Point3> =
                    (0..n).map(|k| state_at(&pos, &vel, k, now, t)).collect();
                pos = new_pos;
                now = t;
                let (va, vb) = elastic_exchange(pos[i], vel[i], pos[j], vel[j]);
                vel[i] = va;
                vel[j] = vb;
                events.push(Collision {
                    time: t,
                    frame: (t * scene.fps).floor() as u32,
                    a: i,
                    b: j,
                    velocity_a: va,
                    velocity_b: vb,
                });
            }
            (_, Some(e)) if e <= horizon => {
                let new_pos: Vec<Point3> =
                    (0..n).map(|k| state_at(&pos, &vel, k, now, e)).collect();
                pos = new_pos;
                now = e;
            }
            _ => break,
        }
    }
    scene.events = events;
}

/// A random scene of `n_objects` discs, deterministic in `seed`.
///
/// Every object gets a distinct `color_texture_shape` label while the 48
/// combinations last. About 60% of the objects move; most movers head for
/// another object, half of those dead center, so that collisions are common.
pub fn generate(seed: u64, n_objects: usize, cfg: &EngineConfig) -> SimScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let colors: Vec<&str> = cfg.palette.iter().map(|p| p.name.as_str()).collect();
    let mut labels: Vec<(&str, &str, &str)> = Vec::new();
    for c in &colors {
        for t in TEXTURES {
            for s in SHAPES {
                labels.push((c, t, s));
            }
        }
    }
    labels.shuffle(&mut rng);

    let mut positions: Vec<Point3> = Vec::with_capacity(n_objects);
    for _ in 0..n_objects {
        let mut p = Point3::ZERO;
        for _ in 0..1000 {
            p = Point3::new(
                rng.gen_range(-ARENA_HALF_WIDTH..ARENA_HALF_WIDTH),
                rng.gen_range(-ARENA_HALF_WIDTH..ARENA_HALF_WIDTH),
                0.0,
            );
            if positions.iter().all(|q| (*q - p).norm() >= MIN_SEPARATION) {
                break;
            }
        }
        positions.push(p);
    }

    let mut objects = Vec::with_capacity(n_objects);
    for i in 0..n_objects {
        let moving = rng.gen_bool(MOVER_PROBABILITY);
        let speed = rng.gen_range(MIN_SPEED..MAX_SPEED);
        let heading = if n_objects > 1 && rng.gen_bool(AIMED_PROBABILITY) {
            let mut target = rng.gen_range(0..n_objects - 1);
            if target >= i {
                target += 1;
            }
            let d = positions[target] - positions[i];
            let jitter = if rng.gen_bool(EXACT_AIM_PROBABILITY) {
                0.0
            } else {
                rng.gen_range(-AIM_JITTER_RAD..AIM_JITTER_RAD)
            };
            d.y.atan2(d.x) + jitter
        } else {
            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)
        };
        let velocity = if moving {
            Point3::new(speed * heading.cos(), speed * heading.sin(), 0.0)
        } else {
            Point3::ZERO
        };
        let (color, texture, shape) = labels[i % labels.len()];
        objects.push(SimObject {
            shape: shape.into(),
            texture: texture.into(),
            color: color.into(),
            position: positions[i],
            velocity,
            start_frame: 0,
        });
    }

    let mut scene = SimScene {
        seed,
        duration_s: cfg.slot_count as f64 * cfg.slot_duration_s,
        fps: cfg.frames_per_second,
        radius: cfg.touch_thd / 4.0,
        objects,
        events: Vec::new(),
    };
    simulate_collisions(&mut scene);
    scene
}

/// Draws sub-seeds from `seed` until a generated scene satisfies the margin
/// policy. The returned scene records the sub-seed that produced it, so
/// `generate(scene.seed, ..)` reproduces it.
pub fn generate_with_margin(
    seed: u64,
    n_objects: usize,
    cfg: &EngineConfig,
    policy: &MarginPolicy,
    max_attempts: usize,
) -> Option<SimScene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..max_attempts {
        let sub: u64 = rng.gen();
        let scene = generate(sub, n_objects, cfg);
        if margin_violations(&scene, cfg, policy).is_empty() {
            return Some(scene);
        }
    }
    None
}
