//! Future-touch forecasting: a principal-direction fit over a track's most
//! recent samples, extrapolated at constant velocity.
//!
//! Acceleration and anything blocking the path are ignored, so a
//! decelerating object or an obstacle between two objects can give a false
//! forecast.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::EngineConfig;
use crate::geometry::Point3;
use crate::ingest::{ObjectTrack, TrackSample};
use crate::relations::{endpoint_displacement, slot_samples, RelationEvent, RelationKind, TimeSlot};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredictError {
    #[error("track {track_id} has {samples} samples in the fitting window; need at least 3")]
    InsufficientData { track_id: u32, samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionModel {
    pub track_id: u32,
    /// Fitted position at `anchor_time`.
    pub anchor: Point3,
    /// Seconds since the first frame.
    pub anchor_time: f64,
    /// Unit vector; (1, 0, 0) when `speed` is 0.
    pub direction: Point3,
    pub speed: f64,
    /// RMS distance between the samples and the fitted motion.
    pub fit_residual: f64,
}

impl MotionModel {
    pub fn velocity(&self) -> Point3 {
        self.direction * self.speed
    }

    pub fn position_at(&self, t: f64) -> Point3 {
        self.anchor + self.velocity() * (t - self.anchor_time)
    }
}

/// Fits a constant-velocity model to `samples`, anchored at the last one.
///
/// The direction is the first principal component of the centred
/// positions; speed is the least-squares slope of the projections against
/// time, with the direction flipped so that speed is non-negative. An
/// endpoint displacement that does not exceed `move_thd` gives speed 0.
pub fn fit_motion(
    track_id: u32,
    samples: &[TrackSample],
    fps: f64,
    cfg: &EngineConfig,
) -> Result<MotionModel, PredictError> {
    if samples.len() < 3 {
        return Err(PredictError::InsufficientData {
            track_id,
            samples: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let times: Vec<f64> = samples.iter().map(|s| f64::from(s.frame) / fps).collect();
    let points: Vec<Point3> = samples.iter().map(|s| s.center).collect();
    let mean = Point3::mean(points.iter().copied()).expect("non-empty");
    let t_mean = times.iter().sum::<f64>() / n;
    let t_last = *times.last().expect("non-empty");

    let stationary = endpoint_displacement(&points, cfg.endpoint_window)
        .map_or(true, |d| d.norm() <= cfg.move_thd);

    let (direction, speed, intercept) = if stationary {
        (Point3::new(1.0, 0.0, 0.0), 0.0, 0.0)
    } else {
        let mut cov = Matrix3::zeros();
        for p in &points {
            let d = Vector3::new(p.x - mean.x, p.y - mean.y, p.z - mean.z);
            cov += d * d.transpose();
        }
        let eig = SymmetricEigen::new(cov / n);
        let (imax, _) = eig.eigenvalues.argmax();
        let v = eig.eigenvectors.column(imax);
        let mut dir = Point3::new(v[0], v[1], v[2]);
        dir = dir * (1.0 / dir.norm());

        let proj: Vec<f64> = points.iter().map(|p| (*p - mean).dot(dir)).collect();
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (t, s) in times.iter().zip(&proj) {
            sxy += (t - t_mean) * s;
            sxx += (t - t_mean) * (t - t_mean);
        }
        let mut slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let mut intercept = proj.iter().sum::<f64>() / n - slope * t_mean;
        if slope < 0.0 {
            dir = dir * -1.0;
            slope = -slope;
            intercept = -intercept;
        }
        (dir, slope, intercept)
    };

    let along = |t: f64| if stationary { 0.0 } else { intercept + speed * t };
    let anchor = mean + direction * along(t_last);
    let sq: f64 = points
        .iter()
        .zip(&times)
        .map(|(p, t)| {
            let fitted = mean + direction * along(*t);
            let e = *p - fitted;
            e.dot(e)
        })
        .sum();
    Ok(MotionModel {
        track_id,
        anchor,
        anchor_time: t_last,
        direction,
        speed,
        fit_residual: (sq / n).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TouchForecast {
    /// Track ids, lower first.
    pub pair: (u32, u32),
    /// Seconds after the later of the two anchors.
    pub time_of_min: f64,
    pub min_distance: f64,
    pub initial_distance: f64,
    pub predicted: bool,
}

/// Closest approach of two constant-velocity models within `horizon_s`.
///
/// A pair is forecast to touch when it starts within `predict_att_thd` and
/// comes closer than `touch_thd`.
pub fn forecast_touch(a: &MotionModel, b: &MotionModel, cfg: &EngineConfig, horizon_s: f64) -> TouchForecast {
    let (a, b) = if a.track_id <= b.track_id { (a, b) } else { (b, a) };
    let t0 = a.anchor_time.max(b.anchor_time);
    let dp = a.position_at(t0) - b.position_at(t0);
    let dv = a.velocity() - b.velocity();
    let vv = dv.dot(dv);
    let t_star = if vv > 0.0 {
        (-dp.dot(dv) / vv).clamp(0.0, horizon_s.max(0.0))
    } else {
        0.0
    };
    let initial_distance = dp.norm();
    let min_distance = (dp + dv * t_star).norm();
    TouchForecast {
        pair: (a.track_id, b.track_id),
        time_of_min: t_star,
        min_distance,
        initial_distance,
        predicted: initial_distance <= cfg.predict_att_thd && min_distance < cfg.touch_thd,
    }
}

/// Fits every track with enough samples in `slot` and forecasts every
/// pair. Returns one `future_touch` event per predicted pair, tagged with
/// `slot`'s index, mover first.
pub fn forecast_slot(
    tracks: &[ObjectTrack],
    slot: &TimeSlot,
    fps: f64,
    horizon_s: f64,
    cfg: &EngineConfig,
) -> Vec<(TouchForecast, RelationEvent)> {
    let models: Vec<MotionModel> = tracks
        .iter()
        .filter_map(|t| {
            let samples = slot_samples(t, slot, cfg.max_interp_gap)?;
            fit_motion(t.track_id, &samples, fps, cfg).ok()
        })
        .collect();
    let mut out = Vec::new();
    for (i, a) in models.iter().enumerate() {
        for b in &models[i + 1..] {
            let f = forecast_touch(a, b, cfg, horizon_s);
            if !f.predicted {
                continue;
            }
            let (first, second) = if b.speed > a.speed { (b, a) } else { (a, b) };
            out.push((
                f,
                RelationEvent::binary(
                    slot.slot_index,
                    RelationKind::FutureTouch,
                    first.track_id,
                    second.track_id,
                ),
            ));
        }
    }
    out
}
