//! Symbolic encoding of hand poses and gestures into canonical text.

mod description;
mod direction;
mod features;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use description::{GestureDescription, KeyframeSummary};
pub use direction::{DirectionLabel, MIN_DIRECTION_NORM};
pub use features::{
    finger_groups, finger_states, hand_orientation, hand_orientation_lenient, palm_width, point_direction,
    trajectory, Extension, Facing, Finger, FingerState, Grouping, HandOrientation, Magnitude, MotionBuckets,
    MotionDescriptor, Point2,
};

use crate::frame::HandFrame;
use crate::keyframe::Keyframe;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncoderError {
    #[error("{0} has no planar direction")]
    DegenerateDirection(Finger),
    #[error("palm width is degenerate")]
    DegeneratePalm,
    #[error("gesture has no keyframes")]
    EmptyGesture,
    #[error("invalid gesture description: {0}")]
    InvalidDescription(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderParams {
    /// Fingertips closer than `group_ratio × palm_width` share a group.
    pub group_ratio: f64,
    #[serde(flatten)]
    pub motion: MotionBuckets,
}

impl Default for EncoderParams {
    fn default() -> Self {
        Self {
            group_ratio: 0.5,
            motion: MotionBuckets::default(),
        }
    }
}

/// Grouping with the degenerate-palm fallback applied (every extended finger
/// in its own group).
pub fn finger_groups_lenient(frame: &HandFrame, ext: &Extension, ratio: f64) -> Grouping {
    finger_groups(frame, ext, ratio).unwrap_or_else(|_| Grouping::singletons(ext))
}

/// Discrete summary of a single frame. Fingers whose own direction is
/// degenerate report the hand's in-plane direction instead.
pub fn summarize(frame: &HandFrame, params: &EncoderParams) -> KeyframeSummary {
    let extension = finger_states(frame);
    let orientation = hand_orientation_lenient(frame);
    let pointing = extension
        .extended()
        .map(|f| (f, point_direction(frame, f).ok().or(orientation.direction)))
        .collect();
    KeyframeSummary {
        extension,
        pointing,
        groups: finger_groups_lenient(frame, &extension, params.group_ratio),
        orientation,
    }
}

/// Encodes a keyframe sequence into its canonical description.
pub fn encode_gesture(keyframes: &[Keyframe], params: &EncoderParams) -> Result<GestureDescription, EncoderError> {
    let first = keyframes.first().ok_or(EncoderError::EmptyGesture)?;
    let summaries = keyframes.iter().map(|k| summarize(&k.frame, params)).collect();
    let moves = keyframes
        .windows(2)
        .map(|w| trajectory(w[0].center, w[1].center, &params.motion))
        .collect();
    GestureDescription::new(first.frame.handedness, summaries, moves)
}
