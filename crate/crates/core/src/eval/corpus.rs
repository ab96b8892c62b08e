//! Seeded synthetic gesture corpus: one canonical gesture per reference
//! command, rendered as 30 Hz frame streams with landmark jitter and a random
//! global placement.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::synth::{jitter, HandPose};
use crate::encoder::{Extension, Facing, Finger, Point2};
use crate::fleet::{self, *};
use crate::frame::{FrameReader, HandFrame};

pub const FRAME_RATE: f64 = 30.0;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus i/o error on {0}: {1}")]
    Io(String, std::io::Error),
    #[error("unreadable corpus entry at line {0}: {1}")]
    Entry(usize, String),
}

/// Frames of one trial, inline or in a separate frame JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FrameSource {
    Inline(Vec<HandFrame>),
    Path(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub gesture_id: String,
    pub expected_command: String,
    pub expected_robot: String,
    pub frames: FrameSource,
}

impl CorpusEntry {
    /// Loads the frames; relative paths resolve against `base`.
    pub fn load_frames(&self, base: Option<&Path>) -> Result<Vec<HandFrame>, CorpusError> {
        match &self.frames {
            FrameSource::Inline(f) => Ok(f.clone()),
            FrameSource::Path(p) => {
                let path = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                let file = File::open(&path).map_err(|e| CorpusError::Io(path.display().to_string(), e))?;
                Ok(FrameReader::new(BufReader::new(file)).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusParams {
    pub seed: u64,
    pub trials_per_command: usize,
    pub jitter_sigma: f64,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            seed: 1,
            trials_per_command: 20,
            jitter_sigma: 0.01,
        }
    }
}

/// A held pose: `frames` frames, with the palm center moving by `velocity`
/// (image units per frame) while it is held.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub pose: HandPose,
    pub frames: usize,
    pub velocity: (f64, f64),
}

impl Phase {
    fn hold(pose: HandPose, frames: usize) -> Self {
        Self {
            pose,
            frames,
            velocity: (0.0, 0.0),
        }
    }
}

/// Canonical gesture for a reference command, centred at (0.5, 0.5) before
/// the per-trial placement. `None` for commands outside the reference set.
pub fn canonical_script(command_id: &str) -> Option<(Point2, Vec<Phase>)> {
    let open = HandPose::default;
    let fist = || open().with_extension(Extension::FIST);
    let thumb = || open().with_extension(Extension::from_fingers(&[Finger::Thumb]));
    let center = Point2::new(0.5, 0.5);
    let alternate = |a: f64, b: f64| (0..4).map(|i| Phase::hold(HandPose::pointing(if i % 2 == 0 { a } else { b }), 6)).collect();
    let script: Vec<Phase> = match command_id {
        MANIPULATOR_HIGH_FIVE => vec![Phase::hold(open(), 12)],
        MANIPULATOR_SELECT_LEFT_ITEM => vec![Phase::hold(HandPose::pointing(180.0), 12)],
        MANIPULATOR_SELECT_RIGHT_ITEM => vec![Phase::hold(HandPose::pointing(0.0), 12)],
        MANIPULATOR_TURN_OBJECT_AROUND => alternate(180.0, 0.0),
        MANIPULATOR_CLOSE_GRIPPER => vec![Phase::hold(open(), 9), Phase::hold(fist(), 9)],
        MANIPULATOR_OPEN_GRIPPER => vec![Phase::hold(fist(), 9), Phase::hold(open(), 9)],
        ROBODOG_GIVE_PAW => vec![Phase::hold(open().with_rotation(270.0), 12)],
        ROBODOG_STAND_UP => {
            return Some((
                Point2::new(0.5, 0.64),
                vec![Phase {
                    pose: open(),
                    frames: 14,
                    velocity: (0.0, -0.02),
                }],
            ))
        }
        ROBODOG_STAND_DOWN => {
            return Some((
                Point2::new(0.5, 0.36),
                vec![Phase {
                    pose: open().with_facing(Facing::Away),
                    frames: 14,
                    velocity: (0.0, 0.02),
                }],
            ))
        }
        ROBODOG_COME_CLOSER => (0..5).map(|i| Phase::hold(if i % 2 == 0 { open() } else { thumb() }, 5)).collect(),
        ROBODOG_WAGGING_TAIL => alternate(225.0, 315.0),
        _ => return None,
    };
    Some((center, script))
}

/// Renders a script into frames starting at t = 0.
pub fn render_script<R: Rng + ?Sized>(
    start: Point2,
    script: &[Phase],
    scale: f64,
    sigma: f64,
    rng: &mut R,
) -> Vec<HandFrame> {
    let mut frames = Vec::new();
    let mut c = start;
    for phase in script {
        for _ in 0..phase.frames {
            let mut pose = phase.pose.clone();
            pose.center = c;
            pose.scale = scale;
            let t = frames.len() as f64 / FRAME_RATE;
            let conf = rng.gen_range(0.85..=1.0);
            frames.push(jitter(&pose.frame(t, conf), sigma, rng));
            c = Point2::new(c.x + phase.velocity.0, c.y + phase.velocity.1);
        }
    }
    frames
}

/// `trials_per_command` entries for each of the eleven reference commands,
/// in reporting order. The same parameters always give the same corpus.
pub fn generate_corpus(params: &CorpusParams) -> Vec<CorpusEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut out = Vec::new();
    for (robot, command) in fleet::reference_commands() {
        let (center, script) = canonical_script(command).expect("reference command has a script");
        for trial in 0..params.trials_per_command {
            let scale = rng.gen_range(0.17..=0.19);
            let shift = (rng.gen_range(-0.06..=0.06), rng.gen_range(-0.04..=0.04));
            let start = Point2::new(center.x + shift.0, center.y + shift.1);
            let frames = render_script(start, &script, scale, params.jitter_sigma, &mut rng);
            out.push(CorpusEntry {
                gesture_id: format!("{}-{trial:03}", command.split_once('_').map_or(command, |(_, rest)| rest)),
                expected_command: command.to_string(),
                expected_robot: robot.to_string(),
                frames: FrameSource::Inline(frames),
            });
        }
    }
    out
}

pub fn write_corpus<W: Write>(out: &mut W, corpus: &[CorpusEntry]) -> std::io::Result<()> {
    for e in corpus {
        writeln!(out, "{}", serde_json::to_string(e).expect("entry serializes"))?;
    }
    Ok(())
}

pub fn read_corpus<R: BufRead>(input: R) -> Result<Vec<CorpusEntry>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Io("corpus".into(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CorpusError::Entry(i + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let f = File::open(path).map_err(|e| CorpusError::Io(path.display().to_string(), e))?;
    read_corpus(BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_determinism() {
        let p = CorpusParams {
            seed: 1,
            trials_per_command: 20,
            jitter_sigma: 0.01,
        };
        let a = generate_corpus(&p);
        assert_eq!(a.len(), 220);
        for (_, cmd) in fleet::reference_commands() {
            assert_eq!(a.iter().filter(|e| e.expected_command == cmd).count(), 20);
        }
        let (mut x, mut y) = (Vec::new(), Vec::new());
        write_corpus(&mut x, &a).unwrap();
        write_corpus(&mut y, &generate_corpus(&p)).unwrap();
        assert_eq!(x, y);
        let back = read_corpus(x.as_slice()).unwrap();
        assert_eq!(back.len(), 220);
        assert_eq!(back[5].gesture_id, a[5].gesture_id);
    }

    #[test]
    fn frames_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let frames: Vec<_> = (0..3).map(|i| HandPose::default().frame(i as f64 / 30.0, 0.9)).collect();
        let mut text = String::new();
        for f in &frames {
            text.push_str(&f.to_line());
            text.push('\n');
        }
        std::fs::write(dir.path().join("g.jsonl"), text).unwrap();
        let e = CorpusEntry {
            gesture_id: "g".into(),
            expected_command: MANIPULATOR_HIGH_FIVE.into(),
            expected_robot: UR3.into(),
            frames: FrameSource::Path("g.jsonl".into()),
        };
        assert_eq!(e.load_frames(Some(dir.path())).unwrap().len(), 3);
        assert!(e.load_frames(None).is_err());
    }
}
