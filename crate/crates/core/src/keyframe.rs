//! Keyframe selection: a confidence gate followed by motion and hand-state
//! transition detection against the last emitted keyframe.

use serde::{Deserialize, Serialize};

use crate::encoder::{finger_groups_lenient, finger_states, hand_orientation_lenient, Extension, Grouping, HandOrientation, Point2};
use crate::frame::{self, HandFrame};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractorParams {
    #[serde(rename = "conf_threshold")]
    pub confidence_threshold: f64,
    /// Palm-center displacement (normalized image units) that counts as motion.
    pub motion_threshold: f64,
    /// Proximity ratio used for the grouping part of the state signature.
    pub group_ratio: f64,
}

impl Default for ExtractorParams {
    fn default() -> Self {
        Self {
            confidence_threshold: 0.7,
            motion_threshold: 0.05,
            group_ratio: 0.5,
        }
    }
}

/// Discrete pose used to detect hand-state transitions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateSignature {
    pub extension: Extension,
    pub orientation: HandOrientation,
    pub grouping: Grouping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyframeReason {
    First,
    Motion,
    StateChange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Keyframe {
    pub frame: HandFrame,
    pub signature: StateSignature,
    pub center: Point2,
    pub reason: KeyframeReason,
}

impl Keyframe {
    pub fn timestamp(&self) -> f64 {
        self.frame.timestamp
    }

    /// One-line JSON for the keyframe debug dump.
    pub fn to_debug_json(&self) -> serde_json::Value {
        let s = &self.signature;
        serde_json::json!({
            "t": self.frame.timestamp,
            "reason": self.reason,
            "center": [self.center.x, self.center.y],
            "fingers": s.extension.extended().map(|f| f.as_str()).collect::<Vec<_>>(),
            "facing": s.orientation.facing,
            "direction": s.orientation.direction,
            "groups": s.grouping.0.iter().map(|g| g.iter().map(|f| f.as_str()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "frame": self.frame.to_record(),
        })
    }
}

const PALM_POINTS: [usize; 5] = [frame::WRIST, frame::INDEX_MCP, frame::MIDDLE_MCP, frame::RING_MCP, frame::PINKY_MCP];

/// Palm center: mean of the wrist and the four finger MCPs in image x/y.
/// Finger curl does not move it, so motion and state change stay separate.
pub fn hand_center(frame: &HandFrame) -> Point2 {
    let (sx, sy) = PALM_POINTS
        .iter()
        .map(|&i| frame.landmark(i))
        .fold((0.0, 0.0), |(sx, sy), l| (sx + l.x, sy + l.y));
    let n = PALM_POINTS.len() as f64;
    Point2::new(sx / n, sy / n)
}

pub fn state_signature(frame: &HandFrame, group_ratio: f64) -> StateSignature {
    let extension = finger_states(frame);
    StateSignature {
        extension,
        orientation: hand_orientation_lenient(frame),
        grouping: finger_groups_lenient(frame, &extension, group_ratio),
    }
}

/// Stateful keyframe selector for one frame stream.
#[derive(Debug, Clone)]
pub struct KeyframeExtractor {
    params: ExtractorParams,
    last: Option<(Point2, StateSignature)>,
}

impl KeyframeExtractor {
    pub fn new(params: ExtractorParams) -> Self {
        Self { params, last: None }
    }

    pub fn params(&self) -> &ExtractorParams {
        &self.params
    }

    /// Forgets the last keyframe so the next gated frame starts afresh.
    pub fn reset(&mut self) {
        self.last = None;
    }

    /// Offers one frame; returns it as a keyframe if it qualifies.
    pub fn push(&mut self, frame: &HandFrame) -> Option<Keyframe> {
        if frame.confidence < self.params.confidence_threshold {
            return None;
        }
        let center = hand_center(frame);
        let signature = state_signature(frame, self.params.group_ratio);
        let reason = match &self.last {
            None => KeyframeReason::First,
            Some((_, last_sig)) if *last_sig != signature => KeyframeReason::StateChange,
            Some((last_center, _)) if center.distance(last_center) > self.params.motion_threshold => {
                KeyframeReason::Motion
            }
            Some(_) => return None,
        };
        self.last = Some((center, signature.clone()));
        Some(Keyframe {
            frame: frame.clone(),
            signature,
            center,
            reason,
        })
    }
}

pub fn select_keyframes<'a, I>(frames: I, params: ExtractorParams) -> Vec<Keyframe>
where
    I: IntoIterator<Item = &'a HandFrame>,
{
    let mut ex = KeyframeExtractor::new(params);
    frames.into_iter().filter_map(|f| ex.push(f)).collect()
}
