//! End-to-end orchestration: gesture → description → exemplars → intent →
//! feasibility → selection → wire dispatch → memory.

mod segment;
mod stream;
mod wire;

use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::encoder::{encode_gesture, GestureDescription};
use crate::keyframe::Keyframe;
use crate::memory::{Memory, MemoryRecord, Outcome};
use crate::reasoner::{Reasoner, ReasonerError, ReasonerInput, RobotContext, Step};
use crate::registry::{Registry, RobotStatus, StateReport};

pub use segment::{segment_gestures, FrameEffect, Segmenter, StreamPipeline};
pub use stream::{run_channel, run_frames, serve, spawn_reader, StreamObserver};
pub use wire::{Ack, AckStatus, CommandReply, CommandRequest, WireClient};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispatchStatus {
    Executed,
    RobotRejected,
    NoFeasibleRobot,
    NoFeasibleCommand,
    Uninterpretable,
}

impl DispatchStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            DispatchStatus::Executed => "executed",
            DispatchStatus::RobotRejected => "robot_rejected",
            DispatchStatus::NoFeasibleRobot => "no_feasible_robot",
            DispatchStatus::NoFeasibleCommand => "no_feasible_command",
            DispatchStatus::Uninterpretable => "uninterpretable",
        }
    }

    fn memory_outcome(self) -> Outcome {
        match self {
            DispatchStatus::Executed => Outcome::Success,
            DispatchStatus::RobotRejected => Outcome::Rejected,
            _ => Outcome::Failed,
        }
    }
}

/// One line of the outcome log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchOutcome {
    pub dispatch_id: String,
    /// Stream time of the gesture's last keyframe.
    pub timestamp: f64,
    pub description_text: String,
    pub intent_label: String,
    /// For a multi-step plan, the last step attempted.
    pub robot_id: Option<String>,
    pub command_id: Option<String>,
    pub status: DispatchStatus,
    pub latency_ms: f64,
    /// The planned steps when the explainer decomposed the task.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<Step>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl DispatchOutcome {
    /// Copy with latency zeroed, for comparing runs.
    pub fn without_latency(&self) -> Self {
        Self {
            latency_ms: 0.0,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("outcome serializes")
    }
}

pub fn write_outcome<W: Write>(out: &mut W, outcome: &DispatchOutcome) -> std::io::Result<()> {
    writeln!(out, "{}", outcome.to_json())
}

/// Shared, thread-safe orchestration core. Streams call
/// [`Engine::process_gesture`] one gesture at a time.
pub struct Engine {
    config: EngineConfig,
    registry: Arc<Registry>,
    memory: Arc<Memory>,
    reasoner: Arc<dyn Reasoner>,
    wire: WireClient,
    next_id: AtomicU64,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("reasoner", &self.reasoner.name())
            .field("robots", &self.registry.len())
            .field("memory", &self.memory)
            .finish_non_exhaustive()
    }
}

struct Partial {
    intent: String,
    robot: Option<String>,
    command: Option<String>,
    status: DispatchStatus,
    steps: Vec<Step>,
    detail: String,
    /// Steps that reached the robot and were accepted.
    executed: Vec<Step>,
}

impl Partial {
    fn failed(status: DispatchStatus, intent: String, detail: impl Into<String>) -> Self {
        Self {
            intent,
            robot: None,
            command: None,
            status,
            steps: Vec::new(),
            detail: detail.into(),
            executed: Vec::new(),
        }
    }
}

impl Engine {
    pub fn new(config: EngineConfig, registry: Arc<Registry>, memory: Arc<Memory>, reasoner: Arc<dyn Reasoner>) -> Self {
        let wire = WireClient::new(Duration::from_secs_f64(config.dispatch_timeout));
        Self {
            config,
            registry,
            memory,
            reasoner,
            wire,
            next_id: AtomicU64::new(1),
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    pub fn memory(&self) -> &Arc<Memory> {
        &self.memory
    }

    pub fn reasoner(&self) -> &dyn Reasoner {
        self.reasoner.as_ref()
    }

    /// Polls `GET /state` on every robot. Unreachable robots are recorded as
    /// offline.
    pub fn refresh_states(&self) {
        for p in self.registry.profiles() {
            let report = self.wire.fetch_state(&p.endpoint).unwrap_or_else(|e| {
                tracing::warn!(robot = %p.robot_id, error = %e, "state poll failed");
                StateReport {
                    status: RobotStatus::Offline,
                    load: 0.0,
                    detail: e,
                }
            });
            let _ = self.registry.update_state(&p.robot_id, report);
        }
    }

    pub fn process_gesture(&self, keyframes: &[Keyframe]) -> DispatchOutcome {
        let started = Instant::now();
        let timestamp = keyframes.last().map_or(0.0, Keyframe::timestamp);
        match encode_gesture(keyframes, &self.config.encoder) {
            Ok(d) => self.process_description_at(&d, timestamp, started),
            Err(e) => self.finish(
                self.next_dispatch_id(),
                String::new(),
                timestamp,
                started,
                Partial::failed(DispatchStatus::Uninterpretable, String::new(), e.to_string()),
            ),
        }
    }

    pub fn process_description(&self, description: &GestureDescription, timestamp: f64) -> DispatchOutcome {
        self.process_description_at(description, timestamp, Instant::now())
    }

    fn process_description_at(&self, d: &GestureDescription, timestamp: f64, started: Instant) -> DispatchOutcome {
        let id = self.next_dispatch_id();
        let text = d.text().to_string();
        let partial = self.decide_and_dispatch(&id, &text);
        self.finish(id, text, timestamp, started, partial)
    }

    fn decide_and_dispatch(&self, id: &str, text: &str) -> Partial {
        use DispatchStatus::*;
        if self.registry.is_empty() {
            return Partial::failed(NoFeasibleRobot, String::new(), "no robots registered");
        }
        if self.config.poll_state {
            self.refresh_states();
        }
        let exemplars = self.memory.retrieve(text, self.config.memory_k);
        let input = ReasonerInput::new(text, &self.registry.snapshot(), &exemplars);
        let intent = match self.reasoner.interpret(&input) {
            Ok(i) => i,
            Err(e) => return Partial::failed(Uninterpretable, String::new(), e.to_string()),
        };
        let label = intent.intent_label.clone();

        let feasible = self.registry.feasible_robots(&intent.candidates);
        for f in &feasible {
            assert!(
                self.registry.is_schema_valid(&f.candidate.robot_id, &f.candidate.command_id),
                "feasible candidate outside its robot's schema"
            );
        }
        if !feasible.is_empty() {
            let winner = self.registry.select_robot(&feasible).expect("non-empty feasible set");
            return self.run_steps(id, label, vec![Step::new(winner.robot_id, winner.command_id)], false);
        }
        if let Some(c) = intent
            .candidates
            .iter()
            .find(|c| self.registry.is_schema_valid(&c.robot_id, &c.command_id))
        {
            let mut p = Partial::failed(NoFeasibleRobot, label, format!("{} is not available", c.robot_id));
            p.robot = Some(c.robot_id.clone());
            p.command = Some(c.command_id.clone());
            return p;
        }

        let robots: Vec<RobotContext> = input.robots;
        let plan = match self.reasoner.explain_decompose(&intent.task_description, &robots) {
            Ok(p) => p,
            Err(ReasonerError::NoFeasibleCommand(t)) => {
                return Partial::failed(NoFeasibleCommand, label, format!("no supported command for task: {t}"))
            }
            Err(e) => return Partial::failed(NoFeasibleCommand, label, e.to_string()),
        };
        for s in &plan.subcommands {
            assert!(
                self.registry.is_schema_valid(&s.robot_id, &s.command_id),
                "explainer step outside its robot's schema"
            );
        }
        let unavailable: Vec<&str> = plan
            .subcommands
            .iter()
            .filter(|s| !self.registry.live_state(&s.robot_id).is_ok_and(|st| st.is_available()))
            .map(|s| s.robot_id.as_str())
            .collect();
        if !unavailable.is_empty() {
            let mut p = Partial::failed(NoFeasibleRobot, label, format!("{} is not available", unavailable.join(", ")));
            p.steps = plan.subcommands;
            return p;
        }
        self.run_steps(id, label, plan.subcommands, true)
    }

    /// Sends steps in order, stopping at the first rejection. A lone command
    /// carries the gesture's id on the wire; plan steps get `<id>.<n>`.
    fn run_steps(&self, id: &str, intent: String, steps: Vec<Step>, planned: bool) -> Partial {
        let mut p = Partial::failed(DispatchStatus::Executed, intent, "");
        for (n, step) in steps.iter().enumerate() {
            p.robot = Some(step.robot_id.clone());
            p.command = Some(step.command_id.clone());
            let profile = self.registry.profile(&step.robot_id).expect("validated robot");
            let req = CommandRequest {
                dispatch_id: if planned { format!("{id}.{}", n + 1) } else { id.to_string() },
                command_id: step.command_id.clone(),
                params: Default::default(),
            };
            match self.wire.send_command(&profile.endpoint, &req) {
                Ack::Accepted => p.executed.push(step.clone()),
                Ack::Rejected(detail) => {
                    p.status = DispatchStatus::RobotRejected;
                    p.detail = detail;
                    break;
                }
            }
        }
        if planned {
            p.steps = steps;
        }
        p
    }

    fn next_dispatch_id(&self) -> String {
        format!("g{:06}", self.next_id.fetch_add(1, Ordering::Relaxed))
    }

    fn finish(&self, dispatch_id: String, text: String, timestamp: f64, started: Instant, p: Partial) -> DispatchOutcome {
        if !text.is_empty() {
            let mut records: Vec<MemoryRecord> = p
                .executed
                .iter()
                .map(|s| MemoryRecord {
                    description_text: text.clone(),
                    robot_id: s.robot_id.clone(),
                    command_id: s.command_id.clone(),
                    timestamp,
                    outcome: Outcome::Success,
                })
                .collect();
            if p.status != DispatchStatus::Executed {
                records.push(MemoryRecord {
                    description_text: text.clone(),
                    robot_id: p.robot.clone().unwrap_or_default(),
                    command_id: p.command.clone().unwrap_or_default(),
                    timestamp,
                    outcome: p.status.memory_outcome(),
                });
            }
            for r in records {
                if let Err(e) = self.memory.store(r) {
                    tracing::error!(error = %e, "memory write failed");
                }
            }
        }
        let outcome = DispatchOutcome {
            dispatch_id,
            timestamp,
            description_text: text,
            intent_label: p.intent,
            robot_id: p.robot,
            command_id: p.command,
            status: p.status,
            latency_ms: started.elapsed().as_secs_f64() * 1000.0,
            steps: p.steps,
            detail: p.detail,
        };
        tracing::info!(id = %outcome.dispatch_id, status = outcome.status.as_str(), robot = ?outcome.robot_id, command = ?outcome.command_id, "gesture processed");
        outcome
    }
}
