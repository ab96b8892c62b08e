//! Robot metadata repository: static profiles, command schemas and live
//! state, plus the feasibility filter and weighted selection used to pick a
//! robot for an interpreted gesture.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("robot `{0}` is already registered")]
    DuplicateRobotId(String),
    #[error("invalid robot profile: {0}")]
    InvalidProfile(String),
    #[error("unknown robot `{0}`")]
    UnknownRobot(String),
    #[error("no feasible robot")]
    NoFeasibleRobot,
    #[error("registry config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamType {
    String,
    Number,
    Boolean,
    Enum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: ParamType,
    #[serde(default)]
    pub required: bool,
    /// Allowed values for `enum` parameters.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandSchema {
    #[serde(rename = "id")]
    pub command_id: String,
    pub description: String,
    #[serde(default)]
    pub params: Vec<ParamSpec>,
}

impl CommandSchema {
    pub fn new(command_id: impl Into<String>, description: impl Into<String>) -> Self {
        Self {
            command_id: command_id.into(),
            description: description.into(),
            params: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotProfile {
    #[serde(rename = "id")]
    pub robot_id: String,
    pub description: String,
    pub capacity: u32,
    pub endpoint: String,
    pub commands: Vec<CommandSchema>,
}

impl RobotProfile {
    pub fn command(&self, command_id: &str) -> Option<&CommandSchema> {
        self.commands.iter().find(|c| c.command_id == command_id)
    }

    pub fn supports(&self, command_id: &str) -> bool {
        self.command(command_id).is_some()
    }

    pub fn validate(&self) -> Result<(), RegistryError> {
        let bad = |m: String| Err(RegistryError::InvalidProfile(m));
        if self.robot_id.trim().is_empty() {
            return bad("empty robot id".into());
        }
        if self.capacity < 1 {
            return bad(format!("{}: capacity must be at least 1", self.robot_id));
        }
        if self.commands.is_empty() {
            return bad(format!("{}: no commands", self.robot_id));
        }
        let mut ids = HashSet::new();
        for c in &self.commands {
            if c.command_id.trim().is_empty() {
                return bad(format!("{}: empty command id", self.robot_id));
            }
            if !ids.insert(c.command_id.as_str()) {
                return bad(format!("{}: duplicate command `{}`", self.robot_id, c.command_id));
            }
            let mut names = HashSet::new();
            for p in &c.params {
                if !names.insert(p.name.as_str()) {
                    return bad(format!("{}/{}: duplicate param `{}`", self.robot_id, c.command_id, p.name));
                }
            }
        }
        Ok(())
    }
}

/// On-disk registry document: `{"robots": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryConfig {
    pub robots: Vec<RobotProfile>,
}

impl RegistryConfig {
    pub fn from_json(text: &str) -> Result<Self, RegistryError> {
        serde_json::from_str(text).map_err(|e| RegistryError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path).map_err(|e| RegistryError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("registry config serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RobotStatus {
    Operational,
    Busy,
    Fault,
    Offline,
}

impl RobotStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RobotStatus::Operational => "operational",
            RobotStatus::Busy => "busy",
            RobotStatus::Fault => "fault",
            RobotStatus::Offline => "offline",
        }
    }
}

/// Wire body of `GET {endpoint}/state`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateReport {
    pub status: RobotStatus,
    pub load: f64,
    #[serde(default)]
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveState {
    pub status: RobotStatus,
    pub load: f64,
    pub detail: String,
    pub last_updated: f64,
}

impl LiveState {
    pub fn offline() -> Self {
        Self {
            status: RobotStatus::Offline,
            load: 0.0,
            detail: String::new(),
            last_updated: 0.0,
        }
    }

    pub fn is_available(&self) -> bool {
        self.status == RobotStatus::Operational && self.load < 1.0
    }
}

/// Source of "now" in seconds, injectable for freshness tests.
pub trait Clock: Send + Sync {
    fn now(&self) -> f64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> f64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
    }
}

#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(t: f64) -> Self {
        Self(AtomicU64::new(t.to_bits()))
    }

    pub fn set(&self, t: f64) {
        self.0.store(t.to_bits(), AtomicOrdering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> f64 {
        f64::from_bits(self.0.load(AtomicOrdering::SeqCst))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionWeights {
    pub match_confidence: f64,
    pub availability: f64,
    pub context: f64,
}

impl Default for SelectionWeights {
    fn default() -> Self {
        Self {
            match_confidence: 0.6,
            availability: 0.3,
            context: 0.1,
        }
    }
}

impl SelectionWeights {
    fn sum(&self) -> f64 {
        self.match_confidence + self.availability + self.context
    }

    pub fn validate(&self) -> Result<(), RegistryError> {
        let parts = [self.match_confidence, self.availability, self.context];
        if parts.iter().any(|w| !w.is_finite() || *w < 0.0) || self.sum() <= 0.0 {
            return Err(RegistryError::Config(format!("invalid selection weights {self:?}")));
        }
        Ok(())
    }

    /// Weighted sum of the three criteria. With weights summing to 1 (the
    /// defaults do) the total stays in `[0, 1]`.
    pub fn total(&self, match_confidence: f64, availability: f64, context: f64) -> f64 {
        self.match_confidence * match_confidence + self.availability * availability + self.context * context
    }
}

/// A (robot, command) suggestion from the reasoner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    #[serde(rename = "robot")]
    pub robot_id: String,
    #[serde(rename = "command")]
    pub command_id: String,
    pub confidence: f64,
}

impl Candidate {
    pub fn new(robot_id: impl Into<String>, command_id: impl Into<String>, confidence: f64) -> Self {
        Self {
            robot_id: robot_id.into(),
            command_id: command_id.into(),
            confidence,
        }
    }
}

/// A candidate that passed all feasibility gates, with the facts selection
/// needs: its rank in the reasoner's list and the robot's load at filter time.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleCandidate {
    pub candidate: Candidate,
    pub rank: usize,
    pub of: usize,
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionScore {
    pub robot_id: String,
    pub command_id: String,
    pub match_confidence: f64,
    pub availability: f64,
    pub context: f64,
    pub total: f64,
}

pub fn score(fc: &FeasibleCandidate, weights: &SelectionWeights) -> SelectionScore {
    let match_confidence = fc.candidate.confidence.clamp(0.0, 1.0);
    let availability = (1.0 - fc.load).clamp(0.0, 1.0);
    let context = if fc.of == 0 { 0.0 } else { 1.0 - fc.rank as f64 / fc.of as f64 };
    SelectionScore {
        robot_id: fc.candidate.robot_id.clone(),
        command_id: fc.candidate.command_id.clone(),
        match_confidence,
        availability,
        context,
        total: weights.total(match_confidence, availability, context),
    }
}

/// Highest total wins; exact ties go to the smallest robot id, then the
/// smallest command id. Input order never matters.
pub fn select_best(feasible: &[FeasibleCandidate], weights: &SelectionWeights) -> Result<SelectionScore, RegistryError> {
    feasible
        .iter()
        .map(|fc| score(fc, weights))
        .min_by(|a, b| {
            b.total
                .total_cmp(&a.total)
                .then_with(|| a.robot_id.cmp(&b.robot_id))
                .then_with(|| a.command_id.cmp(&b.command_id))
        })
        .ok_or(RegistryError::NoFeasibleRobot)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegistryParams {
    pub weights: SelectionWeights,
    /// States older than this many seconds read as offline.
    pub freshness_window: f64,
}

impl Default for RegistryParams {
    fn default() -> Self {
        Self {
            weights: SelectionWeights::default(),
            freshness_window: 5.0,
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    profile: RobotProfile,
    state: Option<LiveState>,
}

/// Concurrent robot registry. Reads take a shared lock; registration and
/// state updates are serialized behind the write lock.
pub struct Registry {
    robots: RwLock<BTreeMap<String, Entry>>,
    params: RegistryParams,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for Registry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Registry").field("params", &self.params).finish_non_exhaustive()
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::new(RegistryParams::default())
    }
}

impl Registry {
    pub fn new(params: RegistryParams) -> Self {
        Self::with_clock(params, Arc::new(SystemClock))
    }

    pub fn with_clock(params: RegistryParams, clock: Arc<dyn Clock>) -> Self {
        Self {
            robots: RwLock::new(BTreeMap::new()),
            params,
            clock,
        }
    }

    pub fn from_config(config: &RegistryConfig, params: RegistryParams) -> Result<Self, RegistryError> {
        params.weights.validate()?;
        let reg = Self::new(params);
        for p in &config.robots {
            reg.register_robot(p.clone())?;
        }
        Ok(reg)
    }

    pub fn params(&self) -> &RegistryParams {
        &self.params
    }

    pub fn now(&self) -> f64 {
        self.clock.now()
    }

    pub fn register_robot(&self, profile: RobotProfile) -> Result<(), RegistryError> {
        profile.validate()?;
        let mut robots = self.robots.write().expect("registry lock");
        if robots.contains_key(&profile.robot_id) {
            return Err(RegistryError::DuplicateRobotId(profile.robot_id));
        }
        robots.insert(profile.robot_id.clone(), Entry { profile, state: None });
        Ok(())
    }

    /// Records a state report, stamped with the registry clock.
    pub fn update_state(&self, robot_id: &str, report: StateReport) -> Result<(), RegistryError> {
        let state = LiveState {
            status: report.status,
            load: report.load.clamp(0.0, 1.0),
            detail: report.detail,
            last_updated: self.clock.now(),
        };
        let mut robots = self.robots.write().expect("registry lock");
        let entry = robots.get_mut(robot_id).ok_or_else(|| RegistryError::UnknownRobot(robot_id.to_string()))?;
        entry.state = Some(state);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.robots.read().expect("registry lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn profile(&self, robot_id: &str) -> Option<RobotProfile> {
        self.robots.read().expect("registry lock").get(robot_id).map(|e| e.profile.clone())
    }

    /// Profiles sorted by robot id.
    pub fn profiles(&self) -> Vec<RobotProfile> {
        self.robots.read().expect("registry lock").values().map(|e| e.profile.clone()).collect()
    }

    fn effective(&self, state: &Option<LiveState>, now: f64) -> LiveState {
        match state {
            Some(s) if now - s.last_updated <= self.params.freshness_window => s.clone(),
            Some(s) => LiveState {
                status: RobotStatus::Offline,
                detail: format!("stale state ({:.1}s old)", now - s.last_updated),
                ..s.clone()
            },
            None => LiveState::offline(),
        }
    }

    /// Current state with staleness applied; never-polled robots are offline.
    pub fn live_state(&self, robot_id: &str) -> Result<LiveState, RegistryError> {
        let now = self.clock.now();
        let robots = self.robots.read().expect("registry lock");
        let entry = robots.get(robot_id).ok_or_else(|| RegistryError::UnknownRobot(robot_id.to_string()))?;
        Ok(self.effective(&entry.state, now))
    }

    /// Consistent view of every robot with its effective state.
    pub fn snapshot(&self) -> Vec<(RobotProfile, LiveState)> {
        let now = self.clock.now();
        let robots = self.robots.read().expect("registry lock");
        robots.values().map(|e| (e.profile.clone(), self.effective(&e.state, now))).collect()
    }

    /// True when the robot is registered and its schema has the command.
    pub fn is_schema_valid(&self, robot_id: &str, command_id: &str) -> bool {
        self.robots
            .read()
            .expect("registry lock")
            .get(robot_id)
            .is_some_and(|e| e.profile.supports(command_id))
    }

    /// Keeps candidates whose robot is registered, supports the command, and
    /// is operational with load below 1. Preserves input order.
    pub fn feasible_robots(&self, candidates: &[Candidate]) -> Vec<FeasibleCandidate> {
        let now = self.clock.now();
        let robots = self.robots.read().expect("registry lock");
        candidates
            .iter()
            .enumerate()
            .filter_map(|(rank, c)| {
                let entry = robots.get(&c.robot_id)?;
                if !entry.profile.supports(&c.command_id) {
                    return None;
                }
                let state = self.effective(&entry.state, now);
                state.is_available().then(|| FeasibleCandidate {
                    candidate: c.clone(),
                    rank,
                    of: candidates.len(),
                    load: state.load,
                })
            })
            .collect()
    }

    pub fn select_robot(&self, feasible: &[FeasibleCandidate]) -> Result<SelectionScore, RegistryError> {
        select_best(feasible, &self.params.weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fleet;

    fn registry() -> (Registry, Arc<ManualClock>) {
        let clock = Arc::new(ManualClock::new(100.0));
        let reg = Registry::with_clock(RegistryParams::default(), clock.clone());
        for p in fleet::reference_fleet("http://127.0.0.1:1") {
            reg.register_robot(p).unwrap();
        }
        (reg, clock)
    }

    fn report(status: RobotStatus, load: f64) -> StateReport {
        StateReport {
            status,
            load,
            detail: String::new(),
        }
    }

    #[test]
    fn registration_and_duplicates() {
        let (reg, _) = registry();
        assert_eq!(reg.len(), 2);
        let ur3 = reg.profile("ur3").unwrap();
        assert_eq!(ur3.commands.len(), 6);
        assert_eq!(reg.profile("go1").unwrap().commands.len(), 5);
        assert_eq!(reg.register_robot(ur3), Err(RegistryError::DuplicateRobotId("ur3".into())));
        assert_eq!(reg.live_state("ur3").unwrap().status, RobotStatus::Offline);
    }

    #[test]
    fn invalid_profiles_rejected() {
        let (reg, _) = registry();
        let mut p = reg.profile("ur3").unwrap();
        p.robot_id = "ur3b".into();
        p.capacity = 0;
        assert!(matches!(reg.register_robot(p.clone()), Err(RegistryError::InvalidProfile(_))));
        p.capacity = 1;
        p.commands.clear();
        assert!(matches!(reg.register_robot(p.clone()), Err(RegistryError::InvalidProfile(_))));
        p.commands = vec![CommandSchema::new("a", "x"), CommandSchema::new("a", "y")];
        assert!(matches!(reg.register_robot(p), Err(RegistryError::InvalidProfile(_))));
    }

    #[test]
    fn state_updates_and_gates() {
        let (reg, clock) = registry();
        reg.update_state("ur3", report(RobotStatus::Operational, 0.0)).unwrap();
        reg.update_state("go1", report(RobotStatus::Fault, 0.0)).unwrap();
        assert_eq!(reg.update_state("ur9", report(RobotStatus::Operational, 0.0)), Err(RegistryError::UnknownRobot("ur9".into())));
        let cands = vec![
            Candidate::new("ur3", "manipulator_close_gripper", 0.9),
            Candidate::new("go1", "manipulator_close_gripper", 0.9),
            Candidate::new("go1", "robodog_give_paw", 0.9),
            Candidate::new("ghost", "robodog_give_paw", 0.9),
        ];
        let f = reg.feasible_robots(&cands);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].candidate.robot_id, "ur3");
        assert_eq!((f[0].rank, f[0].of), (0, 4));

        reg.update_state("ur3", report(RobotStatus::Busy, 1.0)).unwrap();
        assert!(reg.feasible_robots(&cands).is_empty());

        reg.update_state("ur3", report(RobotStatus::Operational, 0.2)).unwrap();
        assert_eq!(reg.feasible_robots(&cands).len(), 1);
        clock.set(105.0);
        assert_eq!(reg.feasible_robots(&cands).len(), 1);
        clock.set(105.5);
        assert!(reg.feasible_robots(&cands).is_empty(), "stale state demotes to offline");
        assert_eq!(reg.live_state("ur3").unwrap().status, RobotStatus::Offline);
    }

    fn fc(robot: &str, cmd: &str, conf: f64, rank: usize, of: usize, load: f64) -> FeasibleCandidate {
        FeasibleCandidate {
            candidate: Candidate::new(robot, cmd, conf),
            rank,
            of,
            load,
        }
    }

    #[test]
    fn selection_examples() {
        let w = SelectionWeights::default();
        assert_eq!(select_best(&[], &w), Err(RegistryError::NoFeasibleRobot));
        let one = select_best(&[fc("ur3", "a", 0.4, 0, 1, 0.5)], &w).unwrap();
        assert_eq!(one.robot_id, "ur3");
        assert!((one.total - (0.6 * 0.4 + 0.3 * 0.5 + 0.1 * 1.0)).abs() < 1e-12);

        // equal confidence and context, loads 0.2 vs 0.8:
        // 0.6*0.9 + 0.3*0.8 + 0.1*0.5 = 0.83 beats 0.6*0.9 + 0.3*0.2 + 0.1*0.5 = 0.65
        let a = fc("alpha", "x", 0.9, 1, 2, 0.8);
        let b = fc("beta", "x", 0.9, 1, 2, 0.2);
        assert_eq!(select_best(&[a.clone(), b.clone()], &w).unwrap().robot_id, "beta");
        assert_eq!(select_best(&[b, a], &w).unwrap().robot_id, "beta");

        let g = fc("go1", "x", 0.5, 0, 1, 0.0);
        let u = fc("ur3", "x", 0.5, 0, 1, 0.0);
        assert_eq!(select_best(&[u.clone(), g.clone()], &w).unwrap().robot_id, "go1");
        assert_eq!(select_best(&[g, u], &w).unwrap().robot_id, "go1");
    }

    #[test]
    fn weights_validation() {
        assert!(SelectionWeights::default().validate().is_ok());
        let neg = SelectionWeights {
            context: -0.1,
            ..Default::default()
        };
        assert!(neg.validate().is_err());
        let zero = SelectionWeights {
            match_confidence: 0.0,
            availability: 0.0,
            context: 0.0,
        };
        assert!(zero.validate().is_err());
    }
}
