//! Pinhole back-projection, box overlap and 3D distance.

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("focal length must be finite and > 0, got {0}")]
    FocalLength(f64),
    #[error("depth must be finite and > 0, got {0}")]
    Depth(f64),
    #[error("degenerate box {0:?}")]
    Box([f64; 4]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    f: f64,
    cx: f64,
    cy: f64,
}

impl CameraIntrinsics {
    pub fn new(f: f64, cx: f64, cy: f64) -> Result<Self, GeometryError> {
        if !(f.is_finite() && f > 0.0) {
            return Err(GeometryError::FocalLength(f));
        }
        Ok(Self { f, cx, cy })
    }

    pub fn focal(&self) -> f64 {
        self.f
    }

    pub fn principal_point(&self) -> (f64, f64) {
        (self.cx, self.cy)
    }

    /// Forward pinhole map: camera-frame point to `(u, v, depth)`.
    pub fn project(&self, p: Point3) -> (f64, f64, f64) {
        (
            self.f * p.x / p.z + self.cx,
            self.f * p.y / p.z + self.cy,
            p.z,
        )
    }
}

/// An image location with the scene depth at that location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
    depth: f64,
}

impl Pixel {
    pub fn new(u: f64, v: f64, depth: f64) -> Result<Self, GeometryError> {
        if !(depth.is_finite() && depth > 0.0) {
            return Err(GeometryError::Depth(depth));
        }
        Ok(Self { u, v, depth })
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ZERO: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Point3) -> Point3 {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn lerp(self, o: Point3, t: f64) -> Point3 {
        self + (o - self) * t
    }

    /// Arithmetic mean; `None` for an empty iterator.
    pub fn mean<I: IntoIterator<Item = Point3>>(points: I) -> Option<Point3> {
        let mut sum = Point3::ZERO;
        let mut n = 0usize;
        for p in points {
            sum = sum + p;
            n += 1;
        }
        (n > 0).then(|| sum / n as f64)
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Point3 {
    type Output = Point3;
    fn div(self, s: f64) -> Point3 {
        Point3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

/// Axis-aligned pixel box, serialized as `[x_min, y_min, x_max, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Box2 {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl Box2 {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, GeometryError> {
        let all_finite = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite());
        if !all_finite || x_min >= x_max || y_min >= y_max {
            return Err(GeometryError::Box([x_min, y_min, x_max, y_max]));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Square of side `side` centered at `(u, v)`.
    pub fn centered(u: f64, v: f64, side: f64) -> Result<Self, GeometryError> {
        let h = side / 2.0;
        Box2::new(u - h, v - h, u + h, v + h)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }

    /// Smallest box containing both.
    pub fn union(&self, o: &Box2) -> Box2 {
        Box2 {
            x_min: self.x_min.min(o.x_min),
            y_min: self.y_min.min(o.y_min),
            x_max: self.x_max.max(o.x_max),
            y_max: self.y_max.max(o.y_max),
        }
    }

    /// Component-wise interpolation between two boxes.
    pub fn lerp(&self, o: &Box2, t: f64) -> Box2 {
        let l = |a: f64, b: f64| a + (b - a) * t;
        Box2 {
            x_min: l(self.x_min, o.x_min),
            y_min: l(self.y_min, o.y_min),
            x_max: l(self.x_max, o.x_max),
            y_max: l(self.y_max, o.y_max),
        }
    }
}

impl TryFrom<[f64; 4]> for Box2 {
    type Error = GeometryError;
    fn try_from(a: [f64; 4]) -> Result<Self, Self::Error> {
        Box2::new(a[0], a[1], a[2], a[3])
    }
}

impl From<Box2> for [f64; 4] {
    fn from(b: Box2) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

/// Camera-frame point for a pixel with known depth.
pub fn back_project(p: Pixel, k: &CameraIntrinsics) -> Point3 {
    let z = p.depth;
    Point3::new((p.u - k.cx) * z / k.f, (p.v - k.cy) * z / k.f, z)
}

/// Intersection over union; 0 for disjoint boxes.
pub fn iou(a: &Box2, b: &Box2) -> f64 {
    let w = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let h = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = w * h;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

pub fn distance(a: Point3, b: Point3) -> f64 {
    (a - b).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(420.0, 240.0, 160.0).unwrap()
    }

    #[test]
    fn principal_point_is_on_axis() {
        let p = back_project(Pixel::new(240.0, 160.0, 5.0).unwrap(), &k());
        assert_eq!(p, Point3::new(0.0, 0.0, 5.0));
    }

    #[test]
    fn one_focal_length_off_axis() {
        let p = back_project(Pixel::new(240.0 + 420.0, 160.0, 2.0).unwrap(), &k());
        assert_relative_eq!(p.x, 2.0, epsilon = 1e-12);
        assert_eq!(p.y, 0.0);
        assert_eq!(p.z, 2.0);
    }

    #[test]
    fn mirrored_column_mirrors_x() {
        let a = back_project(Pixel::new(240.0 + 37.0, 100.0, 3.0).unwrap(), &k());
        let b = back_project(Pixel::new(240.0 - 37.0, 100.0, 3.0).unwrap(), &k());
        assert_eq!(a.x, -b.x);
        assert_eq!(a.y, b.y);
        assert_eq!(a.z, b.z);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(CameraIntrinsics::new(0.0, 0.0, 0.0).is_err());
        assert!(Pixel::new(0.0, 0.0, -1.0).is_err());
        assert!(Box2::new(1.0, 0.0, 1.0, 2.0).is_err());
        assert!(serde_json::from_str::<Box2>("[3, 0, 1, 1]").is_err());
    }

    #[test]
    fn iou_cases() {
        let a = Box2::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(iou(&a, &a), 1.0);
        let far = Box2::new(2.0, 2.0, 3.0, 3.0).unwrap();
        assert_eq!(iou(&a, &far), 0.0);
        let shifted = Box2::new(0.5, 0.0, 1.5, 1.0).unwrap();
        // overlap 0.5, union 1.5
        assert_relative_eq!(iou(&a, &shifted), 1.0 / 3.0, epsilon = 1e-15);
        // edge contact only
        let touching = Box2::new(1.0, 0.0, 2.0, 1.0).unwrap();
        assert_eq!(iou(&a, &touching), 0.0);
    }

    #[test]
    fn distance_cases() {
        let a = Point3::new(1.0, 2.0, 2.0);
        assert_eq!(distance(a, a), 0.0);
        assert_eq!(distance(a, Point3::ZERO), 3.0);
        assert_eq!(distance(a, Point3::ZERO), distance(Point3::ZERO, a));
    }

    fn arb_box() -> impl Strategy<Value = Box2> {
        (-100.0f64..100.0, -100.0f64..100.0, 0.01f64..50.0, 0.01f64..50.0)
            .prop_map(|(x, y, w, h)| Box2::new(x, y, x + w, y + h).unwrap())
    }

    fn arb_point() -> impl Strategy<Value = Point3> {
        (-1e3f64..1e3, -1e3f64..1e3, -1e3f64..1e3).prop_map(|(x, y, z)| Point3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn projection_round_trip(
            u in -2000.0f64..2000.0,
            v in -2000.0f64..2000.0,
            depth in 0.01f64..100.0,
            f in 10.0f64..5000.0,
            cx in 0.0f64..2000.0,
            cy in 0.0f64..2000.0,
        ) {
            let k = CameraIntrinsics::new(f, cx, cy).unwrap();
            let p = back_project(Pixel::new(u, v, depth).unwrap(), &k);
            let (u2, v2, d2) = k.project(p);
            prop_assert!((u2 - u).abs() < 1e-9);
            prop_assert!((v2 - v).abs() < 1e-9);
            prop_assert!((d2 - depth).abs() < 1e-9);
        }

        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let ab = iou(&a, &b);
            prop_assert_eq!(ab, iou(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
        }

        #[test]
        fn triangle_inequality(a in arb_point(), b in arb_point(), c in arb_point()) {
            prop_assert!(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9);
        }
    }
}
