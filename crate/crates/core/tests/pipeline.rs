//! Whole-pipeline behaviour against simulated robots.

use std::io::Write;
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gestos::config::EngineConfig;
use gestos::dispatch::{run_frames, serve, DispatchOutcome, DispatchStatus, Engine};
use gestos::eval::corpus::{canonical_script, render_script};
use gestos::eval::{generate_corpus, replay, CorpusParams, Harness, Scenario, SimulatedRobot};
use gestos::fleet::{self, *};
use gestos::frame::HandFrame;
use gestos::memory::{HashingEmbedder, Memory, Outcome};
use gestos::reasoner::{
    Decomposition, IntentResult, LlmConfig, LlmReasoner, Reasoner, ReasonerError, ReasonerInput, RobotContext, RuleReasoner,
};
use gestos::registry::{Candidate, Registry, RobotProfile};

fn gesture(command: &str) -> Vec<HandFrame> {
    let (start, script) = canonical_script(command).unwrap();
    render_script(start, &script, 0.18, 0.0, &mut ChaCha8Rng::seed_from_u64(3))
}

fn run(engine: &Engine, frames: Vec<HandFrame>) -> Vec<DispatchOutcome> {
    let mut out = Vec::new();
    run_frames(engine, frames, &mut out);
    out
}

#[test]
fn point_left_selects_left_item() {
    let h = Harness::reference(EngineConfig::default()).unwrap();
    let out = run(&h.engine, gesture(MANIPULATOR_SELECT_LEFT_ITEM));
    assert_eq!(out.len(), 1);
    let o = &out[0];
    assert_eq!(o.status, DispatchStatus::Executed, "{o:?}");
    assert_eq!((o.robot_id.as_deref(), o.command_id.as_deref()), (Some(UR3), Some(MANIPULATOR_SELECT_LEFT_ITEM)));
    assert!(o.description_text.contains("pointing=index:left"), "{}", o.description_text);

    let got = h.robot(UR3).unwrap().received();
    assert_eq!(got.len(), 1);
    assert_eq!(got[0].request.dispatch_id, o.dispatch_id);
    assert!(h.robot(GO1).unwrap().received().is_empty());

    // The success becomes an exemplar for the same description.
    let mem = h.engine.memory();
    assert_eq!(mem.count_outcome(Outcome::Success), 1);
    assert_eq!(mem.retrieve(&o.description_text, 3)[0].command_id, MANIPULATOR_SELECT_LEFT_ITEM);

    let again = run(&h.engine, gesture(MANIPULATOR_SELECT_LEFT_ITEM));
    assert_eq!(again[0].dispatch_id, "g000002");
    assert_eq!(mem.count_outcome(Outcome::Success), 2);
}

#[test]
fn empty_registry_is_no_feasible_robot() {
    let engine = Engine::new(
        EngineConfig::default(),
        Arc::new(Registry::new(Default::default())),
        Arc::new(Memory::in_memory(Arc::new(HashingEmbedder::default()))),
        Arc::new(RuleReasoner),
    );
    let out = run(&engine, gesture(MANIPULATOR_HIGH_FIVE));
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].status, DispatchStatus::NoFeasibleRobot);
    assert_eq!(engine.memory().count_outcome(Outcome::Success), 0);
}

#[test]
fn lower_load_wins_between_equivalent_arms() {
    let arm = |id: &str| RobotProfile {
        robot_id: id.into(),
        ..fleet::ur3_profile("")
    };
    let h = Harness::start(
        EngineConfig::default(),
        vec![(arm("arm_a"), Scenario::with_load(0.5)), (arm("arm_b"), Scenario::with_load(0.0))],
        Arc::new(RuleReasoner),
    )
    .unwrap();
    let out = run(&h.engine, gesture(MANIPULATOR_HIGH_FIVE));
    assert_eq!(out[0].status, DispatchStatus::Executed);
    assert_eq!(out[0].robot_id.as_deref(), Some("arm_b"));
    assert_eq!(h.robot("arm_a").unwrap().received().len(), 0);
    assert_eq!(h.robot("arm_b").unwrap().received().len(), 1);
}

#[test]
fn unreachable_robot_reads_offline() {
    let dead = {
        let sim = SimulatedRobot::start(fleet::ur3_profile(""), Scenario::operational()).unwrap();
        sim.profile()
    };
    let registry = Registry::new(Default::default());
    registry.register_robot(dead).unwrap();
    let config = EngineConfig {
        dispatch_timeout: 0.5,
        ..Default::default()
    };
    let engine = Engine::new(
        config,
        Arc::new(registry),
        Arc::new(Memory::in_memory(Arc::new(HashingEmbedder::default()))),
        Arc::new(RuleReasoner),
    );
    let out = run(&engine, gesture(MANIPULATOR_HIGH_FIVE));
    assert_eq!(out[0].status, DispatchStatus::NoFeasibleRobot);
    assert_eq!(out[0].robot_id.as_deref(), Some(UR3));
    assert_eq!(engine.registry().live_state(UR3).unwrap().status, gestos::registry::RobotStatus::Offline);
}

/// Names a command no robot has, forcing the explainer.
struct Inspector;

impl Reasoner for Inspector {
    fn name(&self) -> &'static str {
        "inspector"
    }

    fn interpret(&self, _: &ReasonerInput) -> Result<IntentResult, ReasonerError> {
        Ok(IntentResult {
            intent_label: "inspect".into(),
            task_description: "inspect the object".into(),
            candidates: vec![Candidate::new(UR3, "manipulator_inspect", 0.9)],
        })
    }

    fn explain_decompose(&self, task: &str, robots: &[RobotContext]) -> Result<Decomposition, ReasonerError> {
        RuleReasoner.explain_decompose(task, robots)
    }
}

#[test]
fn unsupported_task_is_decomposed_and_sent_in_order() {
    let h = Harness::start(
        EngineConfig::default(),
        vec![(fleet::ur3_profile(""), Scenario::operational()), (fleet::go1_profile(""), Scenario::operational())],
        Arc::new(Inspector),
    )
    .unwrap();
    let out = run(&h.engine, gesture(MANIPULATOR_HIGH_FIVE));
    let o = &out[0];
    assert_eq!(o.status, DispatchStatus::Executed, "{o:?}");
    let plan: Vec<&str> = o.steps.iter().map(|s| s.command_id.as_str()).collect();
    assert_eq!(plan, [MANIPULATOR_CLOSE_GRIPPER, MANIPULATOR_TURN_OBJECT_AROUND, MANIPULATOR_OPEN_GRIPPER]);
    let sent: Vec<(String, String)> = h
        .robot(UR3)
        .unwrap()
        .received()
        .into_iter()
        .map(|r| (r.request.dispatch_id, r.request.command_id))
        .collect();
    assert_eq!(
        sent,
        [
            ("g000001.1".to_string(), MANIPULATOR_CLOSE_GRIPPER.to_string()),
            ("g000001.2".to_string(), MANIPULATOR_TURN_OBJECT_AROUND.to_string()),
            ("g000001.3".to_string(), MANIPULATOR_OPEN_GRIPPER.to_string()),
        ]
    );
    assert_eq!(h.engine.memory().count_outcome(Outcome::Success), 3);
}

#[test]
fn plan_stops_at_first_rejection() {
    let h = Harness::start(
        EngineConfig::default(),
        vec![(fleet::ur3_profile(""), Scenario::rejecting(&[MANIPULATOR_TURN_OBJECT_AROUND]))],
        Arc::new(Inspector),
    )
    .unwrap();
    let out = run(&h.engine, gesture(MANIPULATOR_HIGH_FIVE));
    assert_eq!(out[0].status, DispatchStatus::RobotRejected);
    assert_eq!(out[0].command_id.as_deref(), Some(MANIPULATOR_TURN_OBJECT_AROUND));
    assert_eq!(h.robot(UR3).unwrap().received().len(), 2);
    let mem = h.engine.memory();
    assert_eq!((mem.count_outcome(Outcome::Success), mem.count_outcome(Outcome::Rejected)), (1, 1));
}

#[test]
fn replay_is_deterministic() {
    let corpus = generate_corpus(&CorpusParams {
        seed: 5,
        trials_per_command: 2,
        jitter_sigma: 0.01,
    });
    let pass = || {
        let h = Harness::reference(EngineConfig::default()).unwrap();
        let r = replay(&corpus, &h.engine, None).unwrap();
        let outcomes: Vec<DispatchOutcome> = r.outcomes().map(DispatchOutcome::without_latency).collect();
        (r.report, outcomes)
    };
    assert_eq!(pass(), pass());
}

#[test]
fn memory_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mem.jsonl");
    let ur3 = SimulatedRobot::start(fleet::ur3_profile(""), Scenario::operational()).unwrap();
    let go1 = SimulatedRobot::start(fleet::go1_profile(""), Scenario::operational()).unwrap();
    let engine = |memory: Memory| {
        let registry = Registry::new(Default::default());
        registry.register_robot(ur3.profile()).unwrap();
        registry.register_robot(go1.profile()).unwrap();
        Engine::new(EngineConfig::default(), Arc::new(registry), Arc::new(memory), Arc::new(RuleReasoner))
    };
    let first = engine(Memory::open(&path, Arc::new(HashingEmbedder::default())).unwrap());
    let out = run(&first, gesture(ROBODOG_STAND_DOWN));
    assert_eq!(out[0].status, DispatchStatus::Executed);
    drop(first);

    let second = engine(Memory::open(&path, Arc::new(HashingEmbedder::default())).unwrap());
    let hits = second.memory().retrieve(&out[0].description_text, 1);
    assert_eq!(hits[0].command_id, ROBODOG_STAND_DOWN);
    assert_eq!(hits[0].robot_id, GO1);
}

#[test]
fn socket_streams_are_processed() {
    let h = Harness::reference(EngineConfig::default()).unwrap();
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let seen: Arc<Mutex<Vec<DispatchOutcome>>> = Arc::default();
    {
        let (engine, seen) = (h.engine.clone(), seen.clone());
        thread::spawn(move || serve(engine, listener, seen));
    }
    let mut conn = TcpStream::connect(addr).unwrap();
    for f in gesture(ROBODOG_GIVE_PAW) {
        writeln!(conn, "{}", f.to_line()).unwrap();
    }
    writeln!(conn, "not a frame").unwrap();
    drop(conn);

    let deadline = Instant::now() + Duration::from_secs(10);
    while seen.lock().unwrap().is_empty() && Instant::now() < deadline {
        thread::sleep(Duration::from_millis(20));
    }
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 1);
    assert_eq!(seen[0].command_id.as_deref(), Some(ROBODOG_GIVE_PAW));
    assert_eq!(seen[0].status, DispatchStatus::Executed);
}

#[test]
fn llm_reasoner_drives_dispatch() {
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", server.server_addr().to_ip().unwrap());
    let prompts = Arc::new(Mutex::new(Vec::<String>::new()));
    {
        let prompts = prompts.clone();
        thread::spawn(move || {
            for mut req in server.incoming_requests() {
                let mut body = String::new();
                req.as_reader().read_to_string(&mut body).unwrap();
                prompts.lock().unwrap().push(body);
                let content = r#"Sure. {"intent":"stand","task":"Stand up","candidates":[{"robot":"go1","command":"robodog_stand_up","confidence":0.8}]}"#;
                let reply = serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]});
                let _ = req.respond(tiny_http::Response::from_string(reply.to_string()));
            }
        });
    }
    let llm = LlmReasoner::new(LlmConfig {
        url,
        api_key_env: "GESTOS_TEST_UNSET_KEY".into(),
        ..LlmConfig::default()
    });
    let h = Harness::start(
        EngineConfig::default(),
        vec![(fleet::ur3_profile(""), Scenario::operational()), (fleet::go1_profile(""), Scenario::operational())],
        Arc::new(llm),
    )
    .unwrap();
    let out = run(&h.engine, gesture(ROBODOG_STAND_UP));
    assert_eq!(out[0].status, DispatchStatus::Executed, "{:?}", out[0]);
    assert_eq!(out[0].command_id.as_deref(), Some(ROBODOG_STAND_UP));
    let prompts = prompts.lock().unwrap();
    assert_eq!(prompts.len(), 1);
    assert!(prompts[0].contains("robodog_wagging_tail"));
}
