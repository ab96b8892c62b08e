use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Eight-way compass label for a planar direction in screen terms.
///
/// Angles are measured counter-clockwise from screen-right with screen-up as
/// positive, i.e. `atan2(-dy, dx)` for an image-space displacement. Each label
/// owns the half-open sector `[center - 22.5°, center + 22.5°)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionLabel {
    Right,
    RightUp,
    Up,
    LeftUp,
    Left,
    LeftDown,
    Down,
    RightDown,
}

/// Planar vectors shorter than this have no direction.
pub const MIN_DIRECTION_NORM: f64 = 1e-6;

// Angles within this many degrees of a sector boundary are snapped onto it, so
// `atan2` round-off cannot push an exact boundary into the lower sector.
const BOUNDARY_SNAP_DEG: f64 = 1e-9;

impl DirectionLabel {
    pub const ALL: [DirectionLabel; 8] = [
        DirectionLabel::Right,
        DirectionLabel::RightUp,
        DirectionLabel::Up,
        DirectionLabel::LeftUp,
        DirectionLabel::Left,
        DirectionLabel::LeftDown,
        DirectionLabel::Down,
        DirectionLabel::RightDown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DirectionLabel::Right => "right",
            DirectionLabel::RightUp => "right-up",
            DirectionLabel::Up => "up",
            DirectionLabel::LeftUp => "left-up",
            DirectionLabel::Left => "left",
            DirectionLabel::LeftDown => "left-down",
            DirectionLabel::Down => "down",
            DirectionLabel::RightDown => "right-down",
        }
    }

    pub fn center_deg(self) -> f64 {
        45.0 * self.sector() as f64
    }

    fn sector(self) -> usize {
        self as usize
    }

    /// Label for an angle in degrees (any real value, wrapped into `[0, 360)`).
    pub fn from_angle_deg(theta: f64) -> Self {
        let mut s = (theta + 22.5) / 45.0;
        let nearest = s.round();
        if (s - nearest).abs() * 45.0 < BOUNDARY_SNAP_DEG {
            s = nearest;
        }
        let idx = s.floor().rem_euclid(8.0) as usize;
        Self::ALL[idx]
    }

    /// Label for an image-space displacement (`dy` grows downward), or `None`
    /// for a vector shorter than [`MIN_DIRECTION_NORM`].
    pub fn from_image_vector(dx: f64, dy: f64) -> Option<Self> {
        if dx.hypot(dy) < MIN_DIRECTION_NORM {
            return None;
        }
        Some(Self::from_angle_deg((-dy).atan2(dx).to_degrees()))
    }

    /// Unit vector of the sector center in screen coordinates (y up).
    pub fn unit(self) -> (f64, f64) {
        let r = self.center_deg().to_radians();
        (r.cos(), r.sin())
    }

    /// Horizontal reflection: swaps left and right components, keeps up/down.
    pub fn mirrored(self) -> Self {
        use DirectionLabel::*;
        match self {
            Right => Left,
            RightUp => LeftUp,
            Up => Up,
            LeftUp => RightUp,
            Left => Right,
            LeftDown => RightDown,
            Down => Down,
            RightDown => LeftDown,
        }
    }

    pub fn has_left(self) -> bool {
        matches!(self, DirectionLabel::Left | DirectionLabel::LeftUp | DirectionLabel::LeftDown)
    }

    pub fn has_right(self) -> bool {
        matches!(self, DirectionLabel::Right | DirectionLabel::RightUp | DirectionLabel::RightDown)
    }

    pub fn has_up(self) -> bool {
        matches!(self, DirectionLabel::Up | DirectionLabel::LeftUp | DirectionLabel::RightUp)
    }

    pub fn has_down(self) -> bool {
        matches!(self, DirectionLabel::Down | DirectionLabel::LeftDown | DirectionLabel::RightDown)
    }
}

impl fmt::Display for DirectionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DirectionLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown direction `{s}`"))
    }
}
