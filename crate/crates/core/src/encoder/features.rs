//! Per-frame pose features: finger extension, pointing directions, proximity
//! groups, palm orientation, and keyframe-to-keyframe motion.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::direction::{DirectionLabel, MIN_DIRECTION_NORM};
use super::EncoderError;
use crate::frame::{self, HandFrame, Handedness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Finger {
    Thumb,
    Index,
    Middle,
    Ring,
    Pinky,
}

impl Finger {
    pub const ALL: [Finger; 5] = [Finger::Thumb, Finger::Index, Finger::Middle, Finger::Ring, Finger::Pinky];

    pub fn as_str(self) -> &'static str {
        match self {
            Finger::Thumb => "thumb",
            Finger::Index => "index",
            Finger::Middle => "middle",
            Finger::Ring => "ring",
            Finger::Pinky => "pinky",
        }
    }

    pub fn ordinal(self) -> usize {
        self as usize
    }

    /// Base joint used as the origin of the pointing vector.
    pub fn mcp(self) -> usize {
        match self {
            Finger::Thumb => frame::THUMB_MCP,
            Finger::Index => frame::INDEX_MCP,
            Finger::Middle => frame::MIDDLE_MCP,
            Finger::Ring => frame::RING_MCP,
            Finger::Pinky => frame::PINKY_MCP,
        }
    }

    /// The joint the tip is compared against (IP for the thumb).
    pub fn pip(self) -> usize {
        match self {
            Finger::Thumb => frame::THUMB_IP,
            Finger::Index => frame::INDEX_PIP,
            Finger::Middle => frame::MIDDLE_PIP,
            Finger::Ring => frame::RING_PIP,
            Finger::Pinky => frame::PINKY_PIP,
        }
    }

    pub fn tip(self) -> usize {
        match self {
            Finger::Thumb => frame::THUMB_TIP,
            Finger::Index => frame::INDEX_TIP,
            Finger::Middle => frame::MIDDLE_TIP,
            Finger::Ring => frame::RING_TIP,
            Finger::Pinky => frame::PINKY_TIP,
        }
    }

    /// Reference point for the radial extension test: the wrist, except for
    /// the thumb which folds toward the pinky side of the palm.
    pub fn extension_anchor(self) -> usize {
        match self {
            Finger::Thumb => frame::PINKY_MCP,
            _ => frame::WRIST,
        }
    }
}

impl fmt::Display for Finger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Finger {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Finger::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown finger `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FingerState {
    pub finger: Finger,
    pub extended: bool,
}

/// Extension flags in thumb..pinky order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Extension(pub [bool; 5]);

impl Extension {
    pub const OPEN: Extension = Extension([true; 5]);
    pub const FIST: Extension = Extension([false; 5]);

    pub fn from_fingers(fingers: &[Finger]) -> Self {
        let mut e = [false; 5];
        for f in fingers {
            e[f.ordinal()] = true;
        }
        Extension(e)
    }

    pub fn is_extended(&self, finger: Finger) -> bool {
        self.0[finger.ordinal()]
    }

    pub fn extended(&self) -> impl Iterator<Item = Finger> + '_ {
        Finger::ALL.into_iter().filter(|f| self.is_extended(*f))
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|e| **e).count()
    }

    pub fn states(&self) -> [FingerState; 5] {
        Finger::ALL.map(|finger| FingerState {
            finger,
            extended: self.is_extended(finger),
        })
    }
}

/// Binary extension state of each finger.
///
/// Index through pinky are extended when the tip is farther from the wrist
/// than the PIP joint is; the thumb compares tip and IP distances to the
/// pinky MCP. Distances are 3-D and the comparison is strict, so a frame with
/// coincident landmarks reads as a closed hand.
pub fn finger_states(frame: &HandFrame) -> Extension {
    let mut out = [false; 5];
    for finger in Finger::ALL {
        let anchor = frame.landmark(finger.extension_anchor());
        let tip = anchor.distance(frame.landmark(finger.tip()));
        let joint = anchor.distance(frame.landmark(finger.pip()));
        out[finger.ordinal()] = tip > joint;
    }
    Extension(out)
}

/// Compass direction of the planar MCP-to-tip vector of `finger`.
pub fn point_direction(frame: &HandFrame, finger: Finger) -> Result<DirectionLabel, EncoderError> {
    let mcp = frame.landmark(finger.mcp());
    let tip = frame.landmark(finger.tip());
    DirectionLabel::from_image_vector(tip.x - mcp.x, tip.y - mcp.y).ok_or(EncoderError::DegenerateDirection(finger))
}

/// Canonical partition of extended fingers: groups sorted by their smallest
/// member, members ascending in thumb..pinky order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Grouping(pub Vec<Vec<Finger>>);

impl Grouping {
    pub fn singletons(ext: &Extension) -> Self {
        Grouping(ext.extended().map(|f| vec![f]).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Builds the canonical form from arbitrary groups.
    pub fn canonical(mut groups: Vec<Vec<Finger>>) -> Self {
        groups.retain(|g| !g.is_empty());
        for g in &mut groups {
            g.sort();
            g.dedup();
        }
        groups.sort();
        Grouping(groups)
    }
}

pub fn palm_width(frame: &HandFrame) -> f64 {
    frame.landmark(frame::INDEX_MCP).distance(frame.landmark(frame::PINKY_MCP))
}

/// Connected components over extended fingers, joining two fingers whose tips
/// lie within `ratio × palm_width` of each other.
pub fn finger_groups(frame: &HandFrame, ext: &Extension, ratio: f64) -> Result<Grouping, EncoderError> {
    let width = palm_width(frame);
    if width < MIN_DIRECTION_NORM {
        return Err(EncoderError::DegeneratePalm);
    }
    let threshold = ratio * width;
    let fingers: Vec<Finger> = ext.extended().collect();
    let mut parent: Vec<usize> = (0..fingers.len()).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for a in 0..fingers.len() {
        for b in (a + 1)..fingers.len() {
            let d = frame.landmark(fingers[a].tip()).distance(frame.landmark(fingers[b].tip()));
            if d <= threshold {
                let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: Vec<Vec<Finger>> = vec![Vec::new(); fingers.len()];
    for (i, f) in fingers.iter().enumerate() {
        let r = root(&mut parent, i);
        groups[r].push(*f);
    }
    Ok(Grouping::canonical(groups))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Facing {
    Toward,
    Away,
    Unknown,
}

impl Facing {
    pub fn as_str(self) -> &'static str {
        match self {
            Facing::Toward => "toward",
            Facing::Away => "away",
            Facing::Unknown => "unknown",
        }
    }
}

impl FromStr for Facing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "toward" => Ok(Facing::Toward),
            "away" => Ok(Facing::Away),
            "unknown" => Ok(Facing::Unknown),
            _ => Err(format!("unknown facing `{s}`")),
        }
    }
}

/// Palm facing plus the in-plane direction of the wrist-to-middle-MCP axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HandOrientation {
    pub facing: Facing,
    pub direction: Option<DirectionLabel>,
}

/// Palm facing from the sign of the planar cross product
/// `(index_MCP − wrist) × (pinky_MCP − wrist)`: negative means the palm faces
/// the camera for a right hand, positive for a left hand.
pub fn hand_orientation(frame: &HandFrame) -> Result<HandOrientation, EncoderError> {
    let wrist = frame.landmark(frame::WRIST);
    let middle = frame.landmark(frame::MIDDLE_MCP);
    let direction = DirectionLabel::from_image_vector(middle.x - wrist.x, middle.y - wrist.y);
    if palm_width(frame) < MIN_DIRECTION_NORM {
        return Err(EncoderError::DegeneratePalm);
    }
    Ok(HandOrientation {
        facing: palm_facing(frame),
        direction,
    })
}

fn palm_facing(frame: &HandFrame) -> Facing {
    let w = frame.landmark(frame::WRIST);
    let i = frame.landmark(frame::INDEX_MCP);
    let p = frame.landmark(frame::PINKY_MCP);
    let cz = (i.x - w.x) * (p.y - w.y) - (i.y - w.y) * (p.x - w.x);
    let signed = match frame.handedness {
        Handedness::Right => cz,
        Handedness::Left => -cz,
    };
    if signed < 0.0 {
        Facing::Toward
    } else if signed > 0.0 {
        Facing::Away
    } else {
        Facing::Unknown
    }
}

/// [`hand_orientation`] with the degenerate-palm fallback applied: facing is
/// reported as unknown, the in-plane direction is kept when defined.
pub fn hand_orientation_lenient(frame: &HandFrame) -> HandOrientation {
    hand_orientation(frame).unwrap_or_else(|_| {
        let wrist = frame.landmark(frame::WRIST);
        let middle = frame.landmark(frame::MIDDLE_MCP);
        HandOrientation {
            facing: Facing::Unknown,
            direction: DirectionLabel::from_image_vector(middle.x - wrist.x, middle.y - wrist.y),
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Magnitude {
    Stationary,
    Small,
    Large,
}

impl Magnitude {
    pub fn as_str(self) -> &'static str {
        match self {
            Magnitude::Stationary => "stationary",
            Magnitude::Small => "small",
            Magnitude::Large => "large",
        }
    }
}

/// Palm displacement between consecutive keyframes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MotionDescriptor {
    pub direction: Option<DirectionLabel>,
    pub magnitude: Magnitude,
}

impl MotionDescriptor {
    pub const STATIONARY: MotionDescriptor = MotionDescriptor {
        direction: None,
        magnitude: Magnitude::Stationary,
    };
}

/// Bucket thresholds for [`trajectory`], in normalized image units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionBuckets {
    pub stationary_below: f64,
    pub large_from: f64,
}

impl Default for MotionBuckets {
    fn default() -> Self {
        Self {
            stationary_below: 0.02,
            large_from: 0.10,
        }
    }
}

pub fn trajectory(prev: Point2, curr: Point2, buckets: &MotionBuckets) -> MotionDescriptor {
    let (dx, dy) = (curr.x - prev.x, curr.y - prev.y);
    let d = dx.hypot(dy);
    if d < buckets.stationary_below {
        return MotionDescriptor::STATIONARY;
    }
    let magnitude = if d < buckets.large_from {
        Magnitude::Small
    } else {
        Magnitude::Large
    };
    MotionDescriptor {
        direction: DirectionLabel::from_image_vector(dx, dy),
        magnitude,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Landmark;

    fn frame_from(lms: [Landmark; 21], hand: Handedness) -> HandFrame {
        HandFrame::new(0.0, hand, 1.0, &lms).unwrap()
    }

    #[test]
    fn coincident_landmarks_read_as_closed() {
        let f = frame_from([Landmark::new(0.4, 0.4, 0.0); 21], Handedness::Right);
        assert_eq!(finger_states(&f), Extension::FIST);
        assert_eq!(finger_groups(&f, &Extension::OPEN, 0.5), Err(EncoderError::DegeneratePalm));
        assert_eq!(hand_orientation(&f), Err(EncoderError::DegeneratePalm));
        assert_eq!(
            hand_orientation_lenient(&f),
            HandOrientation {
                facing: Facing::Unknown,
                direction: None
            }
        );
        assert_eq!(point_direction(&f, Finger::Index), Err(EncoderError::DegenerateDirection(Finger::Index)));
    }

    fn palm() -> [Landmark; 21] {
        let mut lms = [Landmark::new(0.5, 0.8, 0.0); 21];
        lms[frame::INDEX_MCP] = Landmark::new(0.55, 0.6, 0.0);
        lms[frame::MIDDLE_MCP] = Landmark::new(0.5, 0.58, 0.0);
        lms[frame::RING_MCP] = Landmark::new(0.46, 0.6, 0.0);
        lms[frame::PINKY_MCP] = Landmark::new(0.42, 0.62, 0.0);
        lms
    }

    #[test]
    fn touching_tips_form_one_group() {
        let mut lms = palm();
        lms[frame::INDEX_TIP] = Landmark::new(0.5, 0.3, 0.0);
        lms[frame::MIDDLE_TIP] = Landmark::new(0.5, 0.3, 0.0);
        let f = frame_from(lms, Handedness::Right);
        let ext = Extension::from_fingers(&[Finger::Index, Finger::Middle]);
        assert_eq!(
            finger_groups(&f, &ext, 0.5).unwrap(),
            Grouping(vec![vec![Finger::Index, Finger::Middle]])
        );
    }

    #[test]
    fn grouping_is_transitive() {
        let mut lms = palm();
        let w = palm_width(&frame_from(lms, Handedness::Right));
        let step = 0.4 * w; // index-middle and middle-ring within 0.5w, index-ring at 0.8w
        lms[frame::INDEX_TIP] = Landmark::new(0.3, 0.3, 0.0);
        lms[frame::MIDDLE_TIP] = Landmark::new(0.3 + step, 0.3, 0.0);
        lms[frame::RING_TIP] = Landmark::new(0.3 + 2.0 * step, 0.3, 0.0);
        let f = frame_from(lms, Handedness::Right);
        let ext = Extension::from_fingers(&[Finger::Index, Finger::Middle, Finger::Ring]);
        assert_eq!(
            finger_groups(&f, &ext, 0.5).unwrap(),
            Grouping(vec![vec![Finger::Index, Finger::Middle, Finger::Ring]])
        );
    }

    #[test]
    fn palm_facing_sign_convention() {
        // index MCP on image-right of the wrist with fingers up: right palm faces the camera
        let f = frame_from(palm(), Handedness::Right);
        assert_eq!(
            hand_orientation(&f).unwrap(),
            HandOrientation {
                facing: Facing::Toward,
                direction: Some(DirectionLabel::Up)
            }
        );
        let f = frame_from(palm(), Handedness::Left);
        assert_eq!(hand_orientation(&f).unwrap().facing, Facing::Away);
    }

    #[test]
    fn fingers_down_orientation() {
        let mut lms = palm();
        for l in lms.iter_mut() {
            l.y = 1.0 - l.y;
        }
        let f = frame_from(lms, Handedness::Right);
        assert_eq!(hand_orientation(&f).unwrap().direction, Some(DirectionLabel::Down));
    }

    #[test]
    fn trajectory_buckets() {
        let b = MotionBuckets::default();
        let c = Point2::new(0.5, 0.5);
        assert_eq!(trajectory(c, c, &b), MotionDescriptor::STATIONARY);
        assert_eq!(
            trajectory(c, Point2::new(0.35, 0.5), &b),
            MotionDescriptor {
                direction: Some(DirectionLabel::Left),
                magnitude: Magnitude::Large
            }
        );
        assert_eq!(
            trajectory(c, Point2::new(0.5, 0.45), &b),
            MotionDescriptor {
                direction: Some(DirectionLabel::Up),
                magnitude: Magnitude::Small
            }
        );
        // lower edges are inclusive (binary-exact thresholds to avoid round-off)
        let exact = MotionBuckets {
            stationary_below: 0.25,
            large_from: 0.5,
        };
        assert_eq!(trajectory(c, Point2::new(0.75, 0.5), &exact).magnitude, Magnitude::Small);
        assert_eq!(trajectory(c, Point2::new(1.0, 0.5), &exact).magnitude, Magnitude::Large);
    }
}
