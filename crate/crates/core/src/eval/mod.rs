//! Accuracy evaluation: synthetic corpora replayed through the full pipeline
//! against simulated robots.

pub mod corpus;
pub mod report;
pub mod sim;
pub mod synth;

use std::path::Path;
use std::sync::Arc;

pub use corpus::{generate_corpus, load_corpus, CorpusEntry, CorpusError, CorpusParams, FrameSource};
pub use report::{render_confusion, render_counts, render_table, AccuracyReport, CommandTally};
pub use sim::{BindFailure, Scenario, ScenarioPhase, SimulatedRobot};

use crate::config::EngineConfig;
use crate::dispatch::{run_frames, DispatchOutcome, DispatchStatus, Engine};
use crate::fleet;
use crate::memory::{HashingEmbedder, Memory};
use crate::reasoner::{Reasoner, RuleReasoner};
use crate::registry::{Registry, RobotProfile};

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub gesture_id: String,
    pub expected_robot: String,
    pub expected_command: String,
    pub outcomes: Vec<DispatchOutcome>,
    pub correct: bool,
}

/// A trial counts as correct only when it produced exactly one gesture and
/// that gesture executed the expected command on the expected robot.
pub fn is_correct(expected_robot: &str, expected_command: &str, outcomes: &[DispatchOutcome]) -> bool {
    match outcomes {
        [o] => {
            o.status == DispatchStatus::Executed
                && o.robot_id.as_deref() == Some(expected_robot)
                && o.command_id.as_deref() == Some(expected_command)
        }
        _ => false,
    }
}

/// Short label of what a trial produced, for the confusion table.
pub fn observed_label(outcomes: &[DispatchOutcome]) -> String {
    match outcomes {
        [] => "no_gesture".into(),
        [o] if o.status == DispatchStatus::Executed => {
            format!("{}/{}", o.robot_id.as_deref().unwrap_or("?"), o.command_id.as_deref().unwrap_or("?"))
        }
        [o] => o.status.as_str().into(),
        many => format!("{}_gestures", many.len()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayResult {
    pub report: AccuracyReport,
    pub trials: Vec<TrialResult>,
}

impl ReplayResult {
    pub fn outcomes(&self) -> impl Iterator<Item = &DispatchOutcome> {
        self.trials.iter().flat_map(|t| t.outcomes.iter())
    }
}

/// Runs every entry as its own stream, one after another.
pub fn replay(corpus: &[CorpusEntry], engine: &Engine, base: Option<&Path>) -> Result<ReplayResult, CorpusError> {
    let mut report = AccuracyReport::new();
    let mut trials = Vec::with_capacity(corpus.len());
    for entry in corpus {
        let frames = entry.load_frames(base)?;
        let mut outcomes: Vec<DispatchOutcome> = Vec::new();
        run_frames(engine, frames, &mut outcomes);
        let correct = is_correct(&entry.expected_robot, &entry.expected_command, &outcomes);
        report.record(&entry.expected_robot, &entry.expected_command, correct, &observed_label(&outcomes));
        trials.push(TrialResult {
            gesture_id: entry.gesture_id.clone(),
            expected_robot: entry.expected_robot.clone(),
            expected_command: entry.expected_command.clone(),
            outcomes,
            correct,
        });
    }
    Ok(ReplayResult { report, trials })
}

/// Simulated robots plus an engine wired to them.
pub struct Harness {
    pub engine: Arc<Engine>,
    pub robots: Vec<SimulatedRobot>,
}

impl std::fmt::Debug for Harness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Harness").field("robots", &self.robots).finish_non_exhaustive()
    }
}

impl Harness {
    /// Starts one simulated robot per profile and registers it. Memory is
    /// in-process only.
    pub fn start(
        config: EngineConfig,
        robots: Vec<(RobotProfile, Scenario)>,
        reasoner: Arc<dyn Reasoner>,
    ) -> Result<Self, BindFailure> {
        let registry = Registry::new(config.registry);
        let mut sims = Vec::new();
        for (profile, scenario) in robots {
            let sim = SimulatedRobot::start(profile, scenario)?;
            registry
                .register_robot(sim.profile())
                .map_err(|e| BindFailure(e.to_string()))?;
            sims.push(sim);
        }
        let memory = Memory::in_memory(Arc::new(HashingEmbedder::new(config.embedding_dim)));
        let engine = Engine::new(config, Arc::new(registry), Arc::new(memory), reasoner);
        Ok(Self {
            engine: Arc::new(engine),
            robots: sims,
        })
    }

    /// The two-robot reference fleet, both operational, with the rule reasoner.
    pub fn reference(config: EngineConfig) -> Result<Self, BindFailure> {
        Self::start(
            config,
            vec![
                (fleet::ur3_profile(""), Scenario::operational()),
                (fleet::go1_profile(""), Scenario::operational()),
            ],
            Arc::new(RuleReasoner),
        )
    }

    pub fn robot(&self, robot_id: &str) -> Option<&SimulatedRobot> {
        self.robots.iter().find(|r| r.profile().robot_id == robot_id)
    }

    /// Commands accepted across all simulated robots.
    pub fn accepted_commands(&self) -> usize {
        self.robots.iter().map(SimulatedRobot::accepted_count).sum()
    }
}

/// Generates a corpus, replays it against the reference fleet and returns
/// the result.
pub fn evaluate(params: &CorpusParams, config: EngineConfig) -> Result<ReplayResult, Box<dyn std::error::Error>> {
    let harness = Harness::reference(config)?;
    let corpus = generate_corpus(params);
    Ok(replay(&corpus, &harness.engine, None)?)
}
