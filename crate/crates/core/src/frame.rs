//! Hand-landmark frames and the line-delimited JSON wire format they arrive in.
//!
//! One record per line:
//!
//! ```text
//! {"t": 0.0, "hand": "right", "conf": 0.95, "lm": [[x, y, z], ... 21 triples]}
//! ```
//!
//! `x` grows rightward and `y` downward, both normalized to `[0, 1]`; `z` is
//! relative depth with more negative values closer to the camera. Landmarks
//! follow the usual 21-point hand topology (0 wrist, 1-4 thumb, 5-8 index,
//! 9-12 middle, 13-16 ring, 17-20 pinky).

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const LANDMARK_COUNT: usize = 21;

pub const WRIST: usize = 0;
pub const THUMB_MCP: usize = 2;
pub const THUMB_IP: usize = 3;
pub const THUMB_TIP: usize = 4;
pub const INDEX_MCP: usize = 5;
pub const INDEX_PIP: usize = 6;
pub const INDEX_TIP: usize = 8;
pub const MIDDLE_MCP: usize = 9;
pub const MIDDLE_PIP: usize = 10;
pub const MIDDLE_TIP: usize = 12;
pub const RING_MCP: usize = 13;
pub const RING_PIP: usize = 14;
pub const RING_TIP: usize = 16;
pub const PINKY_MCP: usize = 17;
pub const PINKY_PIP: usize = 18;
pub const PINKY_TIP: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Handedness {
    Left,
    Right,
}

impl Handedness {
    pub fn as_str(self) -> &'static str {
        match self {
            Handedness::Left => "left",
            Handedness::Right => "right",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Handedness::Left => Handedness::Right,
            Handedness::Right => Handedness::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Landmark {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Landmark {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Landmark) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }

    pub fn planar_distance(&self, other: &Landmark) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// One timestamped, confidence-scored observation of a single hand.
///
/// Construct through [`HandFrame::new`] or [`parse_frame`]; both enforce the
/// invariants (21 finite landmarks, `x`/`y` clamped into `[0, 1]`, confidence
/// in `[0, 1]`).
#[derive(Debug, Clone, PartialEq)]
pub struct HandFrame {
    pub timestamp: f64,
    pub handedness: Handedness,
    pub confidence: f64,
    pub landmarks: [Landmark; LANDMARK_COUNT],
}

impl HandFrame {
    pub fn new(
        timestamp: f64,
        handedness: Handedness,
        confidence: f64,
        landmarks: &[Landmark],
    ) -> Result<Self, FrameError> {
        if !timestamp.is_finite() {
            return Err(FrameError::MalformedFrame("non-finite timestamp".into()));
        }
        if !confidence.is_finite() || !(0.0..=1.0).contains(&confidence) {
            return Err(FrameError::MalformedFrame(format!(
                "confidence {confidence} outside [0, 1]"
            )));
        }
        if landmarks.len() != LANDMARK_COUNT {
            return Err(FrameError::MalformedFrame(format!(
                "landmark count {} != {LANDMARK_COUNT}",
                landmarks.len()
            )));
        }
        let mut out = [Landmark::default(); LANDMARK_COUNT];
        for (i, (slot, lm)) in out.iter_mut().zip(landmarks).enumerate() {
            if !(lm.x.is_finite() && lm.y.is_finite() && lm.z.is_finite()) {
                return Err(FrameError::MalformedFrame(format!(
                    "landmark {i} has a non-finite coordinate"
                )));
            }
            // Tracker jitter near the frame edge is clamped, not rejected.
            *slot = Landmark::new(lm.x.clamp(0.0, 1.0), lm.y.clamp(0.0, 1.0), lm.z);
        }
        Ok(Self {
            timestamp,
            handedness,
            confidence,
            landmarks: out,
        })
    }

    pub fn landmark(&self, index: usize) -> &Landmark {
        &self.landmarks[index]
    }

    pub fn to_record(&self) -> FrameRecord {
        FrameRecord {
            t: self.timestamp,
            hand: self.handedness,
            conf: self.confidence,
            lm: self.landmarks.iter().map(|l| [l.x, l.y, l.z]).collect(),
        }
    }

    /// Serializes to one JSONL line (no trailing newline).
    pub fn to_line(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("frame record serializes")
    }
}

/// Serde mirror of the wire record. Unknown fields are ignored on input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub t: f64,
    pub hand: Handedness,
    pub conf: f64,
    pub lm: Vec<[f64; 3]>,
}

impl TryFrom<FrameRecord> for HandFrame {
    type Error = FrameError;

    fn try_from(rec: FrameRecord) -> Result<Self, Self::Error> {
        let lms: Vec<Landmark> = rec.lm.iter().map(|[x, y, z]| Landmark::new(*x, *y, *z)).collect();
        HandFrame::new(rec.t, rec.hand, rec.conf, &lms)
    }
}

impl Serialize for HandFrame {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_record().serialize(s)
    }
}

impl<'de> Deserialize<'de> for HandFrame {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rec = FrameRecord::deserialize(d)?;
        HandFrame::try_from(rec).map_err(serde::de::Error::custom)
    }
}

/// Parses one JSONL frame record.
pub fn parse_frame(line: &str) -> Result<HandFrame, FrameError> {
    // serde_json rejects NaN/Infinity literals, so non-finite numbers surface here too.
    let rec: FrameRecord =
        serde_json::from_str(line.trim()).map_err(|e| FrameError::MalformedFrame(e.to_string()))?;
    HandFrame::try_from(rec)
}

/// Drops frames whose timestamp precedes the last accepted one.
#[derive(Debug, Default, Clone)]
pub struct SequenceValidator {
    last: Option<f64>,
    dropped: usize,
}

impl SequenceValidator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn accept(&mut self, frame: HandFrame) -> Option<HandFrame> {
        match self.last {
            Some(prev) if frame.timestamp < prev => {
                self.dropped += 1;
                None
            }
            _ => {
                self.last = Some(frame.timestamp);
                Some(frame)
            }
        }
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }
}

/// Batch form of [`SequenceValidator`]: keeps frames in arrival order, dropping
/// any whose timestamp goes backwards.
pub fn validate_sequence<I: IntoIterator<Item = HandFrame>>(frames: I) -> Vec<HandFrame> {
    let mut v = SequenceValidator::new();
    frames.into_iter().filter_map(|f| v.accept(f)).collect()
}

/// Counters for a line-oriented frame reader.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct StreamStats {
    pub lines: usize,
    pub malformed: usize,
    pub out_of_order: usize,
}

/// Reads JSONL frames from any buffered source, skipping blank lines,
/// counting malformed records and dropping out-of-order timestamps.
pub struct FrameReader<R> {
    inner: R,
    validator: SequenceValidator,
    stats: StreamStats,
    buf: String,
}

impl<R: BufRead> FrameReader<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            validator: SequenceValidator::new(),
            stats: StreamStats::default(),
            buf: String::new(),
        }
    }

    pub fn stats(&self) -> StreamStats {
        StreamStats {
            out_of_order: self.validator.dropped(),
            ..self.stats
        }
    }

    /// Next valid frame, `Ok(None)` at end of input. I/O errors (including
    /// read timeouts on sockets) are passed through so callers can react.
    pub fn next_frame(&mut self) -> std::io::Result<Option<HandFrame>> {
        loop {
            self.buf.clear();
            if self.inner.read_line(&mut self.buf)? == 0 {
                return Ok(None);
            }
            if self.buf.trim().is_empty() {
                continue;
            }
            self.stats.lines += 1;
            match parse_frame(&self.buf) {
                Ok(frame) => {
                    if let Some(f) = self.validator.accept(frame) {
                        return Ok(Some(f));
                    }
                }
                Err(err) => {
                    self.stats.malformed += 1;
                    tracing::debug!(line = self.stats.lines, %err, "skipping frame");
                }
            }
        }
    }
}

impl<R: BufRead> Iterator for FrameReader<R> {
    type Item = HandFrame;

    fn next(&mut self) -> Option<HandFrame> {
        self.next_frame().ok().flatten()
    }
}
