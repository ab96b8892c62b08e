//! Deterministic rule reasoner.
//!
//! Each reference command has one canonical gesture, recognised from the parsed
//! description:
//!
//! | command | gesture |
//! |---|---|
//! | select_left_item | index only, every keyframe pointing left, static |
//! | select_right_item | index only, every keyframe pointing right, static |
//! | turn_object_around | index only, pointing alternates left/right over ≥3 keyframes |
//! | wagging_tail | index only, pointing alternates left-down/right-down over ≥3 keyframes |
//! | close_gripper | open hand then fist |
//! | open_gripper | fist then open hand |
//! | high_five | open hand toward the camera, fingers up, static |
//! | give_paw | open hand toward the camera, fingers down, static |
//! | stand_up | open hand toward the camera, moving up |
//! | stand_down | open hand facing away, moving down |
//! | come_closer | open and thumb-only alternate, open at both ends, ≥3 keyframes |
//!
//! "Static" and "moving" are judged on the summed trajectory: every move adds
//! its direction's unit vector weighted 1 (small) or 2 (large). The gesture is
//! moving in a direction when the sum has length ≥ 2 and points there, and
//! static when the length is below 2. Finger groups are ignored because they
//! flicker under landmark noise.

use super::{Decomposition, IntentResult, Reasoner, ReasonerError, ReasonerInput, RobotContext, Step};
use crate::encoder::{DirectionLabel, Extension, Facing, Finger, GestureDescription, KeyframeSummary, Magnitude};
use crate::fleet::*;
use crate::registry::Candidate;

const MOTION_LIMIT: f64 = 2.0;

/// Features the rules look at, derived from a parsed description.
#[derive(Debug, Clone, PartialEq)]
pub struct GestureFeatures {
    pub keyframes: Vec<KeyframeSummary>,
    /// Extension patterns with consecutive repeats removed.
    pub extension_runs: Vec<Extension>,
    /// Index pointing directions with consecutive repeats removed.
    pub index_runs: Vec<Option<DirectionLabel>>,
    /// Weighted sum of move directions, screen coordinates (y up).
    pub motion: (f64, f64),
}

fn runs<T: PartialEq + Clone>(items: impl IntoIterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for it in items {
        if out.last() != Some(&it) {
            out.push(it);
        }
    }
    out
}

impl GestureFeatures {
    pub fn from_description(d: &GestureDescription) -> Self {
        let mut motion = (0.0, 0.0);
        for m in &d.trajectory {
            let w = match m.magnitude {
                Magnitude::Stationary => 0.0,
                Magnitude::Small => 1.0,
                Magnitude::Large => 2.0,
            };
            if let Some(dir) = m.direction {
                let (ux, uy) = dir.unit();
                motion.0 += w * ux;
                motion.1 += w * uy;
            }
        }
        Self {
            extension_runs: runs(d.keyframes.iter().map(|k| k.extension)),
            index_runs: runs(d.keyframes.iter().map(|k| k.pointing_of(Finger::Index))),
            keyframes: d.keyframes.clone(),
            motion,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ReasonerError> {
        GestureDescription::parse(text)
            .map(|d| Self::from_description(&d))
            .map_err(|e| ReasonerError::UninterpretableGesture(e.to_string()))
    }

    fn motion_norm(&self) -> f64 {
        self.motion.0.hypot(self.motion.1)
    }

    pub fn is_static(&self) -> bool {
        self.motion_norm() < MOTION_LIMIT
    }

    pub fn moving(&self) -> Option<DirectionLabel> {
        if self.is_static() {
            return None;
        }
        DirectionLabel::from_image_vector(self.motion.0, -self.motion.1)
    }

    fn only(&self, ext: Extension) -> bool {
        self.extension_runs == [ext]
    }

    fn all(&self, pred: impl Fn(&KeyframeSummary) -> bool) -> bool {
        self.keyframes.iter().all(pred)
    }

    fn facing_all(&self, facing: Facing) -> bool {
        self.all(|k| k.orientation.facing == facing)
    }

    fn pointing_all(&self, dir: DirectionLabel) -> bool {
        self.only(index_only()) && self.all(|k| k.pointing_of(Finger::Index) == Some(dir))
    }

    fn alternates(&self, a: DirectionLabel, b: DirectionLabel) -> bool {
        self.only(index_only())
            && self.index_runs.len() >= 3
            && self.index_runs.iter().all(|d| *d == Some(a) || *d == Some(b))
    }
}

fn index_only() -> Extension {
    Extension::from_fingers(&[Finger::Index])
}

fn thumb_only() -> Extension {
    Extension::from_fingers(&[Finger::Thumb])
}

pub struct Rule {
    pub command: &'static str,
    /// Robot named when no robot in the input offers the command.
    pub robot: &'static str,
    pub intent: &'static str,
    pub task: &'static str,
    pub matches: fn(&GestureFeatures) -> bool,
}

impl std::fmt::Debug for Rule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Rule").field("command", &self.command).finish_non_exhaustive()
    }
}

pub static RULES: [Rule; 11] = [
    Rule {
        command: MANIPULATOR_HIGH_FIVE,
        robot: UR3,
        intent: "high five",
        task: "Give a high five to the user",
        matches: |g| {
            g.only(Extension::OPEN)
                && g.is_static()
                && g.all(|k| k.orientation.facing == Facing::Toward && k.orientation.direction == Some(DirectionLabel::Up))
        },
    },
    Rule {
        command: MANIPULATOR_SELECT_LEFT_ITEM,
        robot: UR3,
        intent: "select left item",
        task: "Select item positioned to the left",
        matches: |g| g.pointing_all(DirectionLabel::Left) && g.is_static(),
    },
    Rule {
        command: MANIPULATOR_SELECT_RIGHT_ITEM,
        robot: UR3,
        intent: "select right item",
        task: "Select item positioned to the right",
        matches: |g| g.pointing_all(DirectionLabel::Right) && g.is_static(),
    },
    Rule {
        command: MANIPULATOR_TURN_OBJECT_AROUND,
        robot: UR3,
        intent: "turn object around",
        task: "Rotate object to show all sides",
        matches: |g| g.alternates(DirectionLabel::Left, DirectionLabel::Right),
    },
    Rule {
        command: MANIPULATOR_CLOSE_GRIPPER,
        robot: UR3,
        intent: "grasp object",
        task: "Grasp object",
        matches: |g| g.extension_runs == [Extension::OPEN, Extension::FIST],
    },
    Rule {
        command: MANIPULATOR_OPEN_GRIPPER,
        robot: UR3,
        intent: "release object",
        task: "Release object",
        matches: |g| g.extension_runs == [Extension::FIST, Extension::OPEN],
    },
    Rule {
        command: ROBODOG_GIVE_PAW,
        robot: GO1,
        intent: "give paw",
        task: "Lift front leg to simulate a paw shake",
        matches: |g| {
            g.only(Extension::OPEN)
                && g.is_static()
                && g.all(|k| k.orientation.facing == Facing::Toward && k.orientation.direction == Some(DirectionLabel::Down))
        },
    },
    Rule {
        command: ROBODOG_STAND_UP,
        robot: GO1,
        intent: "stand up",
        task: "Rise on command when user gestures upward",
        matches: |g| g.only(Extension::OPEN) && g.facing_all(Facing::Toward) && g.moving() == Some(DirectionLabel::Up),
    },
    Rule {
        command: ROBODOG_STAND_DOWN,
        robot: GO1,
        intent: "stand down",
        task: "Sit or lie down",
        matches: |g| g.only(Extension::OPEN) && g.facing_all(Facing::Away) && g.moving() == Some(DirectionLabel::Down),
    },
    Rule {
        command: ROBODOG_COME_CLOSER,
        robot: GO1,
        intent: "come closer",
        task: "Approach the user on beckoning gesture",
        matches: |g| {
            let r = &g.extension_runs;
            r.len() >= 3
                && r.first() == Some(&Extension::OPEN)
                && r.last() == Some(&Extension::OPEN)
                && r.iter().all(|e| *e == Extension::OPEN || *e == thumb_only())
        },
    },
    Rule {
        command: ROBODOG_WAGGING_TAIL,
        robot: GO1,
        intent: "wag tail",
        task: "Simulate tail-wagging behavior",
        matches: |g| g.alternates(DirectionLabel::LeftDown, DirectionLabel::RightDown),
    },
];

pub fn rule_for_command(command_id: &str) -> Option<&'static Rule> {
    RULES.iter().find(|r| r.command == command_id)
}

/// Explainer fallback table, scanned in order: the first entry whose
/// keywords all occur in the lowercased task supplies the plan.
pub static FALLBACK_TABLE: &[(&[&str], &[&str])] = &[
    (&["inspect"], &[MANIPULATOR_CLOSE_GRIPPER, MANIPULATOR_TURN_OBJECT_AROUND, MANIPULATOR_OPEN_GRIPPER]),
    (&["all sides", "holding"], &[MANIPULATOR_CLOSE_GRIPPER, MANIPULATOR_TURN_OBJECT_AROUND]),
    (&["all sides"], &[MANIPULATOR_TURN_OBJECT_AROUND]),
    (&["rotate"], &[MANIPULATOR_TURN_OBJECT_AROUND]),
    (&["hand over"], &[MANIPULATOR_CLOSE_GRIPPER, MANIPULATOR_OPEN_GRIPPER]),
    (&["grasp"], &[MANIPULATOR_CLOSE_GRIPPER]),
    (&["release"], &[MANIPULATOR_OPEN_GRIPPER]),
    (&["high five"], &[MANIPULATOR_HIGH_FIVE]),
    (&["left"], &[MANIPULATOR_SELECT_LEFT_ITEM]),
    (&["right"], &[MANIPULATOR_SELECT_RIGHT_ITEM]),
    (&["paw"], &[ROBODOG_GIVE_PAW]),
    (&["greet"], &[ROBODOG_GIVE_PAW, ROBODOG_WAGGING_TAIL]),
    (&["sit"], &[ROBODOG_STAND_DOWN]),
    (&["lie down"], &[ROBODOG_STAND_DOWN]),
    (&["rise"], &[ROBODOG_STAND_UP]),
    (&["stand up"], &[ROBODOG_STAND_UP]),
    (&["approach"], &[ROBODOG_COME_CLOSER]),
    (&["closer"], &[ROBODOG_COME_CLOSER]),
    (&["wag"], &[ROBODOG_WAGGING_TAIL]),
];

/// Command ids the fallback table proposes for a task, before validation.
pub fn fallback_plan(task: &str) -> &'static [&'static str] {
    let task = task.to_lowercase();
    FALLBACK_TABLE
        .iter()
        .find(|(keys, _)| keys.iter().all(|k| task.contains(k)))
        .map(|(_, cmds)| *cmds)
        .unwrap_or(&[])
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RuleReasoner;

impl RuleReasoner {
    pub fn new() -> Self {
        Self
    }

    /// Rules that fire on a description, in table order.
    pub fn matching_rules(text: &str) -> Result<Vec<&'static Rule>, ReasonerError> {
        let g = GestureFeatures::parse(text)?;
        Ok(RULES.iter().filter(|r| (r.matches)(&g)).collect())
    }
}

fn robots_for(command: &str, default: &str, robots: &[RobotContext]) -> Vec<String> {
    let mut ids: Vec<String> = robots
        .iter()
        .filter(|r| r.supports(command))
        .map(|r| r.robot_id.clone())
        .collect();
    ids.sort();
    ids.dedup();
    if ids.is_empty() {
        ids.push(default.to_string());
    }
    ids
}

impl Reasoner for RuleReasoner {
    fn name(&self) -> &'static str {
        "rule"
    }

    fn interpret(&self, input: &ReasonerInput) -> Result<IntentResult, ReasonerError> {
        let fired = Self::matching_rules(&input.description)?;
        let Some(first) = fired.first() else {
            return Err(ReasonerError::UninterpretableGesture("no rule matches the description".into()));
        };
        let confidence = if fired.len() == 1 { 1.0 } else { 0.5 };
        let candidates = fired
            .iter()
            .flat_map(|r| {
                robots_for(r.command, r.robot, &input.robots)
                    .into_iter()
                    .map(move |robot| Candidate::new(robot, r.command, confidence))
            })
            .collect();
        let (intent, task) = if fired.len() == 1 {
            (first.intent.to_string(), first.task.to_string())
        } else {
            (
                fired.iter().map(|r| r.intent).collect::<Vec<_>>().join(" or "),
                fired.iter().map(|r| r.task).collect::<Vec<_>>().join("; or "),
            )
        };
        Ok(IntentResult {
            intent_label: intent,
            task_description: task,
            candidates,
        })
    }

    fn explain_decompose(&self, task: &str, robots: &[RobotContext]) -> Result<Decomposition, ReasonerError> {
        let plan = fallback_plan(task);
        let mut sorted: Vec<&RobotContext> = robots.iter().collect();
        sorted.sort_by(|a, b| a.robot_id.cmp(&b.robot_id));
        let subcommands: Vec<Step> = plan
            .iter()
            .filter_map(|cmd| sorted.iter().find(|r| r.supports(cmd)).map(|r| Step::new(r.robot_id.clone(), *cmd)))
            .collect();
        if subcommands.is_empty() {
            return Err(ReasonerError::NoFeasibleCommand(task.to_string()));
        }
        Ok(Decomposition {
            rationale: format!("fallback plan for \"{task}\": {}", plan.join(", ")),
            subcommands,
        })
    }
}
