use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::Point3;

/// Heading change relative to the pre-touch heading.
///
/// ```text
///                 front
///        front-left  |  front-right
///                 \  |  /
///        left  ----  o  ----  right      (viewed from above)
///                 /  |  \
///        back-left   |   back-right
///                  back
/// ```
///
/// Positive angles turn clockwise when seen from above, so +90 is `right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionLabel {
    Front,
    FrontRight,
    Right,
    BackRight,
    Back,
    BackLeft,
    Left,
    FrontLeft,
}

impl DirectionLabel {
    pub const ALL: [DirectionLabel; 8] = [
        DirectionLabel::Front,
        DirectionLabel::FrontRight,
        DirectionLabel::Right,
        DirectionLabel::BackRight,
        DirectionLabel::Back,
        DirectionLabel::BackLeft,
        DirectionLabel::Left,
        DirectionLabel::FrontLeft,
    ];

    /// The seven labels a direction change can carry.
    pub const CHANGES: [DirectionLabel; 7] = [
        DirectionLabel::FrontRight,
        DirectionLabel::Right,
        DirectionLabel::BackRight,
        DirectionLabel::Back,
        DirectionLabel::BackLeft,
        DirectionLabel::Left,
        DirectionLabel::FrontLeft,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DirectionLabel::Front => "front",
            DirectionLabel::FrontRight => "front-right",
            DirectionLabel::Right => "right",
            DirectionLabel::BackRight => "back-right",
            DirectionLabel::Back => "back",
            DirectionLabel::BackLeft => "back-left",
            DirectionLabel::Left => "left",
            DirectionLabel::FrontLeft => "front-left",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == s)
    }

    /// Label of an angle in degrees. Angles are first wrapped into
    /// (-180, 180]; each sector is open below and closed above.
    pub fn from_angle(deg: f64) -> DirectionLabel {
        let a = wrap_degrees(deg);
        if a > -22.5 && a <= 22.5 {
            DirectionLabel::Front
        } else if a > 22.5 && a <= 67.5 {
            DirectionLabel::FrontRight
        } else if a > 67.5 && a <= 112.5 {
            DirectionLabel::Right
        } else if a > 112.5 && a <= 157.5 {
            DirectionLabel::BackRight
        } else if a > 157.5 || a <= -157.5 {
            DirectionLabel::Back
        } else if a > -157.5 && a <= -112.5 {
            DirectionLabel::BackLeft
        } else if a > -112.5 && a <= -67.5 {
            DirectionLabel::Left
        } else {
            DirectionLabel::FrontLeft
        }
    }
}

impl fmt::Display for DirectionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Wraps into (-180, 180].
pub fn wrap_degrees(deg: f64) -> f64 {
    let mut a = deg % 360.0;
    if a > 180.0 {
        a -= 360.0;
    } else if a <= -180.0 {
        a += 360.0;
    }
    a
}

/// Signed angle in degrees from `before` to `after`, both camera-frame
/// vectors. The magnitude is the full 3D angle; the sign is taken from the
/// camera's vertical axis (image rows grow downward), positive clockwise
/// when seen from above. The result lies in (-180, 180].
pub fn signed_angle(before: Point3, after: Point3) -> f64 {
    let cross = before.cross(after);
    let magnitude = cross.norm().atan2(before.dot(after)).to_degrees();
    if cross.y < 0.0 && magnitude < 180.0 {
        -magnitude
    } else {
        magnitude
    }
}
