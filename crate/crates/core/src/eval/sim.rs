//! In-process HTTP robot standing in for real hardware. It speaks the robot
//! wire protocol and follows a scripted scenario.

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::{AckStatus, CommandReply, CommandRequest};
use crate::registry::{RobotProfile, RobotStatus, StateReport};

#[derive(Debug, Error)]
#[error("cannot bind simulated robot: {0}")]
pub struct BindFailure(pub String);

/// Robot behaviour from the moment `after_commands` commands have been
/// received until the next phase starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioPhase {
    pub after_commands: usize,
    pub status: RobotStatus,
    pub load: f64,
    pub reject_all: bool,
    /// Command ids refused in this phase.
    pub reject: Vec<String>,
}

impl Default for ScenarioPhase {
    fn default() -> Self {
        Self {
            after_commands: 0,
            status: RobotStatus::Operational,
            load: 0.0,
            reject_all: false,
            reject: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scenario {
    pub phases: Vec<ScenarioPhase>,
}

impl Scenario {
    fn single(phase: ScenarioPhase) -> Self {
        Self { phases: vec![phase] }
    }

    pub fn operational() -> Self {
        Self::single(ScenarioPhase::default())
    }

    pub fn with_status(status: RobotStatus) -> Self {
        Self::single(ScenarioPhase {
            status,
            ..Default::default()
        })
    }

    pub fn with_load(load: f64) -> Self {
        Self::single(ScenarioPhase {
            load,
            ..Default::default()
        })
    }

    pub fn rejecting_all() -> Self {
        Self::single(ScenarioPhase {
            reject_all: true,
            ..Default::default()
        })
    }

    pub fn rejecting(commands: &[&str]) -> Self {
        Self::single(ScenarioPhase {
            reject: commands.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        })
    }

    /// Phase in force after `received` commands.
    pub fn phase(&self, received: usize) -> ScenarioPhase {
        self.phases
            .iter()
            .filter(|p| p.after_commands <= received)
            .max_by_key(|p| p.after_commands)
            .cloned()
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedCommand {
    pub request: CommandRequest,
    pub accepted: bool,
}

#[derive(Debug)]
struct SimState {
    profile: RobotProfile,
    scenario: Scenario,
    received: Vec<ReceivedCommand>,
}

impl SimState {
    fn handle_command(&mut self, body: &str) -> (u16, CommandReply) {
        let Ok(request) = serde_json::from_str::<CommandRequest>(body) else {
            return (400, CommandReply::rejected("malformed command body"));
        };
        let phase = self.scenario.phase(self.received.len());
        let reply = if !self.profile.supports(&request.command_id) {
            CommandReply::rejected(format!("unknown command {}", request.command_id))
        } else if phase.status != RobotStatus::Operational {
            CommandReply::rejected(format!("robot is {}", phase.status.as_str()))
        } else if phase.reject_all || phase.reject.contains(&request.command_id) {
            CommandReply::rejected(format!("scripted rejection of {}", request.command_id))
        } else {
            CommandReply::accepted()
        };
        self.received.push(ReceivedCommand {
            request,
            accepted: reply.status == AckStatus::Accepted,
        });
        (200, reply)
    }

    fn state(&self) -> StateReport {
        let phase = self.scenario.phase(self.received.len());
        StateReport {
            status: phase.status,
            load: phase.load,
            detail: String::new(),
        }
    }
}

/// A running simulated robot; stops when dropped.
pub struct SimulatedRobot {
    addr: SocketAddr,
    server: Arc<tiny_http::Server>,
    state: Arc<Mutex<SimState>>,
    worker: Option<JoinHandle<()>>,
}

impl std::fmt::Debug for SimulatedRobot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimulatedRobot").field("addr", &self.addr).finish_non_exhaustive()
    }
}

fn json_response(code: u16, body: String) -> tiny_http::Response<std::io::Cursor<Vec<u8>>> {
    let header = tiny_http::Header::from_bytes("Content-Type", "application/json").expect("static header");
    tiny_http::Response::from_string(body).with_status_code(code).with_header(header)
}

impl SimulatedRobot {
    /// Serves on an ephemeral localhost port.
    pub fn start(profile: RobotProfile, scenario: Scenario) -> Result<Self, BindFailure> {
        Self::bind("127.0.0.1:0", profile, scenario)
    }

    pub fn bind(addr: &str, profile: RobotProfile, scenario: Scenario) -> Result<Self, BindFailure> {
        let server = tiny_http::Server::http(addr).map_err(|e| BindFailure(e.to_string()))?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| BindFailure("not an IP listener".into()))?;
        let server = Arc::new(server);
        let state = Arc::new(Mutex::new(SimState {
            profile,
            scenario,
            received: Vec::new(),
        }));
        let worker = {
            let server = server.clone();
            let state = state.clone();
            thread::spawn(move || serve(&server, &state))
        };
        Ok(Self {
            addr,
            server,
            state,
            worker: Some(worker),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// The served profile with its endpoint pointing at this server.
    pub fn profile(&self) -> RobotProfile {
        let mut p = self.state.lock().expect("sim lock").profile.clone();
        p.endpoint = self.endpoint();
        p
    }

    pub fn set_scenario(&self, scenario: Scenario) {
        self.state.lock().expect("sim lock").scenario = scenario;
    }

    pub fn received(&self) -> Vec<ReceivedCommand> {
        self.state.lock().expect("sim lock").received.clone()
    }

    pub fn accepted_count(&self) -> usize {
        self.received().iter().filter(|r| r.accepted).count()
    }

    pub fn clear_received(&self) {
        self.state.lock().expect("sim lock").received.clear();
    }
}

fn serve(server: &tiny_http::Server, state: &Mutex<SimState>) {
    for mut req in server.incoming_requests() {
        let mut body = String::new();
        let _ = req.as_reader().read_to_string(&mut body);
        let (code, payload) = {
            let mut s = state.lock().expect("sim lock");
            match (req.method(), req.url()) {
                (tiny_http::Method::Get, "/state") => (200, serde_json::to_string(&s.state()).expect("state")),
                (tiny_http::Method::Post, "/command") => {
                    let (code, reply) = s.handle_command(&body);
                    (code, serde_json::to_string(&reply).expect("reply"))
                }
                _ => (404, r#"{"status":"rejected","detail":"not found"}"#.to_string()),
            }
        };
        let _ = req.respond(json_response(code, payload));
    }
}

impl Drop for SimulatedRobot {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}
