//! Intent reasoning: turn a gesture description plus fleet context into
//! ranked (robot, command) candidates, and decompose tasks no single command
//! covers.
//!
//! Two implementations share the [`Reasoner`] trait: [`RuleReasoner`] is a
//! deterministic feature-rule table, [`LlmReasoner`] prompts an external
//! chat-completions endpoint. Either way the output is only advisory; the
//! registry validates every candidate against robot schemas afterwards.

mod llm;
mod parse;
mod prompt;
mod rules;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::MemoryRecord;
use crate::registry::{Candidate, CommandSchema, LiveState, RobotProfile, RobotStatus};

pub use llm::{LlmConfig, LlmReasoner};
pub use parse::{extract_first_object, parse_decomposition_output, parse_reasoner_output};
pub use prompt::{build_decompose_prompt, build_prompt, FORMAT_REMINDER};
pub use rules::{fallback_plan, rule_for_command, GestureFeatures, Rule, RuleReasoner, FALLBACK_TABLE, RULES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReasonerError {
    #[error("reasoner unavailable: {0}")]
    ReasonerUnavailable(String),
    #[error("uninterpretable gesture: {0}")]
    UninterpretableGesture(String),
    #[error("malformed reasoner output: {0}")]
    MalformedReasonerOutput(String),
    #[error("no feasible command for task: {0}")]
    NoFeasibleCommand(String),
}

/// What the reasoner is told about one robot.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotContext {
    pub robot_id: String,
    pub description: String,
    pub commands: Vec<CommandSchema>,
    pub status: RobotStatus,
    pub load: f64,
}

impl RobotContext {
    pub fn new(profile: &RobotProfile, state: &LiveState) -> Self {
        Self {
            robot_id: profile.robot_id.clone(),
            description: profile.description.clone(),
            commands: profile.commands.clone(),
            status: state.status,
            load: state.load,
        }
    }

    pub fn supports(&self, command_id: &str) -> bool {
        self.commands.iter().any(|c| c.command_id == command_id)
    }
}

/// A past success shown to the reasoner as a worked example.
#[derive(Debug, Clone, PartialEq)]
pub struct Exemplar {
    pub description: String,
    pub robot_id: String,
    pub command_id: String,
}

impl From<&MemoryRecord> for Exemplar {
    fn from(r: &MemoryRecord) -> Self {
        Self {
            description: r.description_text.clone(),
            robot_id: r.robot_id.clone(),
            command_id: r.command_id.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReasonerInput {
    pub description: String,
    pub robots: Vec<RobotContext>,
    /// Most similar first.
    pub exemplars: Vec<Exemplar>,
}

impl ReasonerInput {
    pub fn new(description: impl Into<String>, snapshot: &[(RobotProfile, LiveState)], exemplars: &[MemoryRecord]) -> Self {
        Self {
            description: description.into(),
            robots: snapshot.iter().map(|(p, s)| RobotContext::new(p, s)).collect(),
            exemplars: exemplars.iter().map(Exemplar::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentResult {
    #[serde(rename = "intent")]
    pub intent_label: String,
    #[serde(rename = "task")]
    pub task_description: String,
    pub candidates: Vec<Candidate>,
}

impl IntentResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("intent result serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    #[serde(rename = "robot")]
    pub robot_id: String,
    #[serde(rename = "command")]
    pub command_id: String,
}

impl Step {
    pub fn new(robot_id: impl Into<String>, command_id: impl Into<String>) -> Self {
        Self {
            robot_id: robot_id.into(),
            command_id: command_id.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub subcommands: Vec<Step>,
    #[serde(default)]
    pub rationale: String,
}

/// Keeps only steps whose command exists in the named robot's schema.
pub fn validate_steps(steps: Vec<Step>, robots: &[RobotContext]) -> Vec<Step> {
    steps
        .into_iter()
        .filter(|s| {
            let ok = robots.iter().any(|r| r.robot_id == s.robot_id && r.supports(&s.command_id));
            if !ok {
                tracing::debug!(robot = %s.robot_id, command = %s.command_id, "dropping invalid subcommand");
            }
            ok
        })
        .collect()
}

pub trait Reasoner: Send + Sync {
    fn name(&self) -> &'static str;

    fn interpret(&self, input: &ReasonerInput) -> Result<IntentResult, ReasonerError>;

    /// Fallback when no candidate from [`Reasoner::interpret`] fits any
    /// registered schema.
    fn explain_decompose(&self, task: &str, robots: &[RobotContext]) -> Result<Decomposition, ReasonerError>;
}
