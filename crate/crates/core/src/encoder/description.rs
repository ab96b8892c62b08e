//! Canonical gesture text: rendering and the matching strict parser.
//!
//! ```text
//! hand: right
//! pose[0]: fingers=thumb,index; pointing=thumb:right-up,index:up; groups=(thumb) (index); orientation=toward up
//! pose[1]: fingers=none; pointing=none; groups=none; orientation=toward up
//! move[0→1]: left small
//! ```
//!
//! Lines appear in that order: `hand:`, every `pose[i]`, then every
//! `move[i→i+1]`. Fingers are listed thumb to pinky, labels are lowercase,
//! and lines are joined by `\n` with no trailing newline.

use std::fmt::Write as _;

use super::direction::DirectionLabel;
use super::features::{Extension, Facing, Finger, Grouping, HandOrientation, Magnitude, MotionDescriptor};
use super::EncoderError;
use crate::frame::Handedness;

/// Discrete summary of one keyframe.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KeyframeSummary {
    pub extension: Extension,
    /// One entry per extended finger, thumb..pinky. `None` when neither the
    /// finger nor the hand axis has a defined direction.
    pub pointing: Vec<(Finger, Option<DirectionLabel>)>,
    pub groups: Grouping,
    pub orientation: HandOrientation,
}

impl KeyframeSummary {
    pub fn pointing_of(&self, finger: Finger) -> Option<DirectionLabel> {
        self.pointing.iter().find(|(f, _)| *f == finger).and_then(|(_, d)| *d)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GestureDescription {
    pub handedness: Handedness,
    pub keyframes: Vec<KeyframeSummary>,
    pub trajectory: Vec<MotionDescriptor>,
    text: String,
}

impl GestureDescription {
    pub fn new(
        handedness: Handedness,
        keyframes: Vec<KeyframeSummary>,
        trajectory: Vec<MotionDescriptor>,
    ) -> Result<Self, EncoderError> {
        if keyframes.is_empty() {
            return Err(EncoderError::EmptyGesture);
        }
        if trajectory.len() != keyframes.len() - 1 {
            return Err(EncoderError::InvalidDescription(format!(
                "{} moves for {} poses",
                trajectory.len(),
                keyframes.len()
            )));
        }
        let mut d = Self {
            handedness,
            keyframes,
            trajectory,
            text: String::new(),
        };
        d.text = d.render();
        Ok(d)
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Re-renders the canonical text from the structured fields.
    pub fn render(&self) -> String {
        let mut out = format!("hand: {}", self.handedness.as_str());
        for (i, k) in self.keyframes.iter().enumerate() {
            let _ = write!(
                out,
                "\npose[{i}]: fingers={}; pointing={}; groups={}; orientation={} {}",
                render_fingers(&k.extension),
                render_pointing(&k.pointing),
                render_groups(&k.groups),
                k.orientation.facing.as_str(),
                opt_dir(k.orientation.direction),
            );
        }
        for (i, m) in self.trajectory.iter().enumerate() {
            let _ = write!(out, "\nmove[{i}→{}]: ", i + 1);
            match (m.magnitude, m.direction) {
                (Magnitude::Stationary, _) => out.push_str("stationary"),
                (mag, dir) => {
                    let _ = write!(out, "{} {}", opt_dir(dir), mag.as_str());
                }
            }
        }
        out
    }

    /// Parses canonical text back into structured form. Only text produced by
    /// [`GestureDescription::render`] is accepted.
    pub fn parse(text: &str) -> Result<Self, EncoderError> {
        let bad = |msg: String| EncoderError::InvalidDescription(msg);
        let mut lines = text.split('\n');
        let hand = lines
            .next()
            .and_then(|l| l.strip_prefix("hand: "))
            .ok_or_else(|| bad("missing `hand:` line".into()))?;
        let handedness = match hand {
            "left" => Handedness::Left,
            "right" => Handedness::Right,
            other => return Err(bad(format!("unknown hand `{other}`"))),
        };
        let mut keyframes = Vec::new();
        let mut trajectory = Vec::new();
        for line in lines {
            if let Some(rest) = line.strip_prefix("pose[") {
                if !trajectory.is_empty() {
                    return Err(bad("pose line after move lines".into()));
                }
                let (idx, body) = rest.split_once("]: ").ok_or_else(|| bad(format!("bad pose line `{line}`")))?;
                if idx != keyframes.len().to_string() {
                    return Err(bad(format!("pose index {idx} out of sequence")));
                }
                keyframes.push(parse_pose(body).map_err(bad)?);
            } else if let Some(rest) = line.strip_prefix("move[") {
                let (idx, body) = rest.split_once("]: ").ok_or_else(|| bad(format!("bad move line `{line}`")))?;
                let i = trajectory.len();
                if idx != format!("{i}→{}", i + 1) {
                    return Err(bad(format!("move index {idx} out of sequence")));
                }
                trajectory.push(parse_move(body).map_err(bad)?);
            } else {
                return Err(bad(format!("unexpected line `{line}`")));
            }
        }
        let d = Self::new(handedness, keyframes, trajectory)?;
        if d.text != text {
            return Err(bad("text is not in canonical form".into()));
        }
        Ok(d)
    }
}

fn opt_dir(d: Option<DirectionLabel>) -> &'static str {
    d.map_or("none", DirectionLabel::as_str)
}

fn render_fingers(ext: &Extension) -> String {
    let names: Vec<&str> = ext.extended().map(Finger::as_str).collect();
    if names.is_empty() {
        "none".into()
    } else {
        names.join(",")
    }
}

fn render_pointing(pointing: &[(Finger, Option<DirectionLabel>)]) -> String {
    if pointing.is_empty() {
        return "none".into();
    }
    pointing
        .iter()
        .map(|(f, d)| format!("{}:{}", f.as_str(), opt_dir(*d)))
        .collect::<Vec<_>>()
        .join(",")
}

fn render_groups(groups: &Grouping) -> String {
    if groups.is_empty() {
        return "none".into();
    }
    groups
        .0
        .iter()
        .map(|g| format!("({})", g.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(",")))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_dir(s: &str) -> Result<Option<DirectionLabel>, String> {
    if s == "none" {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

fn parse_finger_list(s: &str) -> Result<Vec<Finger>, String> {
    if s == "none" {
        return Ok(Vec::new());
    }
    s.split(',').map(str::parse).collect()
}

fn parse_pose(body: &str) -> Result<KeyframeSummary, String> {
    let mut fields = body.split("; ");
    let mut field = |name: &str| {
        fields
            .next()
            .and_then(|f| f.strip_prefix(name))
            .and_then(|f| f.strip_prefix('='))
            .ok_or_else(|| format!("missing `{name}=` in `{body}`"))
    };
    let fingers = parse_finger_list(field("fingers")?)?;
    let pointing_raw = field("pointing")?;
    let groups_raw = field("groups")?;
    let orientation_raw = field("orientation")?;

    let pointing = if pointing_raw == "none" {
        Vec::new()
    } else {
        pointing_raw
            .split(',')
            .map(|entry| {
                let (f, d) = entry.split_once(':').ok_or_else(|| format!("bad pointing `{entry}`"))?;
                Ok((f.parse()?, parse_dir(d)?))
            })
            .collect::<Result<Vec<_>, String>>()?
    };
    let groups = if groups_raw == "none" {
        Vec::new()
    } else {
        groups_raw
            .split(' ')
            .map(|g| {
                let inner = g
                    .strip_prefix('(')
                    .and_then(|g| g.strip_suffix(')'))
                    .ok_or_else(|| format!("bad group `{g}`"))?;
                parse_finger_list(inner)
            })
            .collect::<Result<Vec<_>, String>>()?
    };
    let (facing, dir) = orientation_raw
        .split_once(' ')
        .ok_or_else(|| format!("bad orientation `{orientation_raw}`"))?;
    let orientation = HandOrientation {
        facing: facing.parse::<Facing>()?,
        direction: parse_dir(dir)?,
    };
    let extension = Extension::from_fingers(&fingers);
    if pointing.iter().map(|(f, _)| *f).ne(extension.extended()) {
        return Err(format!("pointing entries do not match extended fingers in `{body}`"));
    }
    Ok(KeyframeSummary {
        extension,
        pointing,
        groups: Grouping::canonical(groups),
        orientation,
    })
}

fn parse_move(body: &str) -> Result<MotionDescriptor, String> {
    if body == "stationary" {
        return Ok(MotionDescriptor::STATIONARY);
    }
    let (dir, mag) = body.split_once(' ').ok_or_else(|| format!("bad move `{body}`"))?;
    let magnitude = match mag {
        "small" => Magnitude::Small,
        "large" => Magnitude::Large,
        _ => return Err(format!("bad magnitude `{mag}`")),
    };
    Ok(MotionDescriptor {
        direction: parse_dir(dir)?,
        magnitude,
    })
}
