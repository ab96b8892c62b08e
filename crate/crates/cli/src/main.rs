//! `gestos`: run the gesture pipeline against a robot fleet, replay and
//! evaluate corpora, and inspect robots, memory and descriptions.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tracing_subscriber::EnvFilter;

use gestos::config::EngineConfig;
use gestos::dispatch::{self, run_channel, run_frames, spawn_reader, write_outcome, DispatchOutcome, Engine, StreamObserver, StreamPipeline, WireClient};
use gestos::encoder::encode_gesture;
use gestos::eval::corpus::write_corpus;
use gestos::eval::{
    self, generate_corpus, load_corpus, render_confusion, render_counts, render_table, CorpusParams, Harness, ReplayResult,
    Scenario, SimulatedRobot,
};
use gestos::frame::FrameReader;
use gestos::keyframe::Keyframe;
use gestos::memory::{HashingEmbedder, Memory};
use gestos::reasoner::{LlmReasoner, Reasoner, RuleReasoner};
use gestos::registry::{Registry, RegistryConfig};

#[derive(Parser)]
#[command(name = "gestos", version, about = "Hand gestures in, robot commands out")]
struct Cli {
    /// Engine config file (JSON); missing keys take defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Process a live frame stream and dispatch commands
    Run(RunArgs),
    /// Replay a corpus file and print the accuracy table
    Replay(ReplayArgs),
    /// Generate a synthetic corpus, replay it against simulated robots and report
    Eval(EvalArgs),
    /// Inspect registered robots
    Robots {
        #[command(subcommand)]
        action: RobotsAction,
    },
    /// Move interaction memory in and out as JSONL
    Memory {
        #[command(subcommand)]
        action: MemoryAction,
    },
    /// Print the gesture descriptions found in a frame file
    Describe {
        /// Frame JSONL file, or `-` for stdin
        #[arg(long, default_value = "-")]
        input: String,
    },
    /// Serve simulated robots on the endpoints named in a registry file
    Sim {
        #[arg(long)]
        registry: PathBuf,
        /// Scenario file for one robot, as `robot_id=path.json`
        #[arg(long = "scenario", value_name = "ROBOT=FILE")]
        scenarios: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReasonerKind {
    Rule,
    Llm,
}

#[derive(Args)]
struct EngineArgs {
    #[arg(long, value_enum, default_value = "rule")]
    reasoner: ReasonerKind,
    /// Memory file; memory is kept in-process only when absent
    #[arg(long)]
    memory: Option<PathBuf>,
    /// Seconds without a keyframe that close a gesture
    #[arg(long)]
    gesture_timeout: Option<f64>,
    /// Chat-completions URL for `--reasoner llm`
    #[arg(long)]
    llm_url: Option<String>,
    #[arg(long)]
    llm_model: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    registry: PathBuf,
    #[command(flatten)]
    engine: EngineArgs,
    /// Outcome log (JSONL); stdout when absent
    #[arg(long)]
    log: Option<PathBuf>,
    /// Write every keyframe as JSONL to this file
    #[arg(long)]
    dump_keyframes: Option<PathBuf>,
    /// Accept frame streams over TCP, one per connection
    #[arg(long, conflicts_with_all = ["input", "stdin"])]
    socket: Option<String>,
    /// Frame JSONL file, processed in stream time
    #[arg(long, conflicts_with = "stdin")]
    input: Option<PathBuf>,
    /// `-` reads frames from stdin (the default)
    #[arg(value_name = "-")]
    stdin: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Also print the expected-vs-observed table
    #[arg(long)]
    confusion: bool,
    /// Print the report as JSON instead of tables
    #[arg(long)]
    json: bool,
    /// Outcome log (JSONL)
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Dispatch to these robots instead of the simulated reference fleet
    #[arg(long)]
    registry: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Trials per command
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Landmark jitter sigma in image units
    #[arg(long, default_value_t = 0.01)]
    jitter: f64,
    /// Save the generated corpus as JSONL
    #[arg(long)]
    write_corpus: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Subcommand)]
enum RobotsAction {
    /// Profiles and their commands
    List {
        #[arg(long)]
        registry: PathBuf,
    },
    /// Poll every robot's live state
    State {
        #[arg(long)]
        registry: PathBuf,
    },
}

#[derive(Subcommand)]
enum MemoryAction {
    /// Write every record as JSONL
    Export {
        #[arg(long)]
        memory: PathBuf,
        /// Destination; stdout when absent
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Append records from a JSONL file (embeddings are recomputed)
    Import {
        #[arg(long)]
        memory: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
}

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("GESTOS_LOG").unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(io::stderr)
        .init();
    if let Err(e) = real_main(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn real_main(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => EngineConfig::load(p)?,
        None => EngineConfig::default(),
    };
    match cli.command {
        Command::Run(args) => run(config, args),
        Command::Replay(args) => replay(config, args),
        Command::Eval(args) => evaluate(config, args),
        Command::Robots { action } => robots(config, action),
        Command::Memory { action } => memory(config, action),
        Command::Describe { input } => describe(config, &input),
        Command::Sim { registry, scenarios } => sim(&registry, &scenarios),
    }
}

fn apply(mut config: EngineConfig, args: &EngineArgs) -> Result<EngineConfig> {
    if let Some(t) = args.gesture_timeout {
        config.gesture_timeout = t;
    }
    if let Some(u) = &args.llm_url {
        config.llm.url = u.clone();
    }
    if let Some(m) = &args.llm_model {
        config.llm.model = m.clone();
    }
    config.validate()?;
    Ok(config)
}

fn reasoner(kind: ReasonerKind, config: &EngineConfig) -> Arc<dyn Reasoner> {
    match kind {
        ReasonerKind::Rule => Arc::new(RuleReasoner),
        ReasonerKind::Llm => Arc::new(LlmReasoner::new(config.llm.clone())),
    }
}

fn open_memory(path: Option<&Path>, config: &EngineConfig) -> Result<Memory> {
    let embedder = Arc::new(HashingEmbedder::new(config.embedding_dim));
    Ok(match path {
        Some(p) => Memory::open(p, embedder).with_context(|| format!("opening memory {}", p.display()))?,
        None => Memory::in_memory(embedder),
    })
}

fn load_registry(path: &Path, config: &EngineConfig) -> Result<Registry> {
    let doc = RegistryConfig::load(path)?;
    Ok(Registry::from_config(&doc, config.registry)?)
}

fn build_engine(config: EngineConfig, registry: &Path, args: &EngineArgs) -> Result<Engine> {
    let registry = load_registry(registry, &config)?;
    let memory = open_memory(args.memory.as_deref(), &config)?;
    let reasoner = reasoner(args.reasoner, &config);
    Ok(Engine::new(config, Arc::new(registry), Arc::new(memory), reasoner))
}

fn create(path: &Path) -> Result<Box<dyn Write + Send>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(Box::new(BufWriter::new(f)))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write + Send>> {
    match path {
        Some(p) => create(p),
        None => Ok(Box::new(io::stdout())),
    }
}

/// Writes outcomes (and optionally keyframes) as JSONL, flushing each line.
struct Sink {
    outcomes: Box<dyn Write + Send>,
    keyframes: Option<Box<dyn Write + Send>>,
}

impl StreamObserver for Sink {
    fn on_keyframe(&mut self, keyframe: &Keyframe) {
        if let Some(out) = &mut self.keyframes {
            let _ = writeln!(out, "{}", keyframe.to_debug_json()).and_then(|_| out.flush());
        }
    }

    fn on_outcome(&mut self, outcome: &DispatchOutcome) {
        if let Err(e) = write_outcome(&mut self.outcomes, outcome).and_then(|_| self.outcomes.flush()) {
            tracing::error!("cannot write outcome log: {e}");
        }
    }
}

fn run(config: EngineConfig, args: RunArgs) -> Result<()> {
    let config = apply(config, &args.engine)?;
    let engine = build_engine(config, &args.registry, &args.engine)?;
    let mut sink = Sink {
        outcomes: output(args.log.as_deref())?,
        keyframes: args.dump_keyframes.as_deref().map(create).transpose()?,
    };
    if let Some(dash) = &args.stdin {
        if dash != "-" {
            bail!("unexpected argument `{dash}`; use --input <file> for files");
        }
    }
    let n = if let Some(addr) = &args.socket {
        let listener = TcpListener::bind(addr).with_context(|| format!("binding {addr}"))?;
        eprintln!("listening on {}", listener.local_addr()?);
        dispatch::serve(Arc::new(engine), listener, Arc::new(Mutex::new(sink)))?;
        return Ok(());
    } else if let Some(path) = &args.input {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        run_frames(&engine, FrameReader::new(BufReader::new(f)), &mut sink)
    } else {
        run_channel(&engine, spawn_reader(BufReader::new(io::stdin())), &mut sink)
    };
    tracing::info!(gestures = n, "stream finished");
    Ok(())
}

fn report(result: &ReplayResult, args: &ReportArgs) -> Result<()> {
    if let Some(path) = &args.log {
        let mut out = create(path)?;
        for o in result.outcomes() {
            write_outcome(&mut out, o)?;
        }
        out.flush()?;
    }
    let mut stdout = io::stdout().lock();
    if args.json {
        writeln!(stdout, "{}", result.report.to_json())?;
        return Ok(());
    }
    write!(stdout, "{}", render_table(&result.report))?;
    writeln!(stdout)?;
    write!(stdout, "{}", render_counts(&result.report))?;
    if args.confusion {
        writeln!(stdout)?;
        write!(stdout, "{}", render_confusion(&result.report))?;
    }
    Ok(())
}

fn replay(config: EngineConfig, args: ReplayArgs) -> Result<()> {
    let config = apply(config, &args.engine)?;
    let corpus = load_corpus(&args.corpus)?;
    let base = args.corpus.parent();
    // Simulated robots must outlive the replay, so the harness is kept here.
    let (engine, _harness) = match &args.registry {
        Some(reg) => (Arc::new(build_engine(config, reg, &args.engine)?), None),
        None => {
            let reasoner = reasoner(args.engine.reasoner, &config);
            let h = reference_harness(config, reasoner, args.engine.memory.as_deref())?;
            (h.engine.clone(), Some(h))
        }
    };
    let result = eval::replay(&corpus, &engine, base)?;
    report(&result, &args.report)
}

fn reference_harness(config: EngineConfig, reasoner: Arc<dyn Reasoner>, memory: Option<&Path>) -> Result<Harness> {
    let mut h = Harness::start(
        config.clone(),
        vec![
            (gestos::fleet::ur3_profile(""), Scenario::operational()),
            (gestos::fleet::go1_profile(""), Scenario::operational()),
        ],
        reasoner.clone(),
    )?;
    if memory.is_some() {
        let registry = h.engine.registry().clone();
        let mem = open_memory(memory, &config)?;
        h.engine = Arc::new(Engine::new(config, registry, Arc::new(mem), reasoner));
    }
    Ok(h)
}

fn evaluate(config: EngineConfig, args: EvalArgs) -> Result<()> {
    let config = apply(config, &args.engine)?;
    if !(args.jitter >= 0.0) {
        bail!("--jitter must be non-negative");
    }
    let params = CorpusParams {
        seed: args.seed,
        trials_per_command: args.trials,
        jitter_sigma: args.jitter,
    };
    let corpus = generate_corpus(&params);
    if let Some(path) = &args.write_corpus {
        let mut out = create(path)?;
        write_corpus(&mut out, &corpus)?;
        out.flush()?;
    }
    let reasoner = reasoner(args.engine.reasoner, &config);
    let harness = reference_harness(config, reasoner, args.engine.memory.as_deref())?;
    let result = eval::replay(&corpus, &harness.engine, None)?;
    report(&result, &args.report)
}

fn robots(config: EngineConfig, action: RobotsAction) -> Result<()> {
    let mut out = io::stdout().lock();
    match action {
        RobotsAction::List { registry } => {
            for p in RegistryConfig::load(&registry)?.robots {
                writeln!(out, "{}\t{}\t{} commands", p.robot_id, p.endpoint, p.commands.len())?;
                for c in &p.commands {
                    writeln!(out, "  {}\t{}", c.command_id, c.description)?;
                }
            }
        }
        RobotsAction::State { registry } => {
            let wire = WireClient::new(Duration::from_secs_f64(config.dispatch_timeout));
            for p in RegistryConfig::load(&registry)?.robots {
                match wire.fetch_state(&p.endpoint) {
                    Ok(s) => writeln!(out, "{}\t{}\tload {:.2}\t{}", p.robot_id, s.status.as_str(), s.load, s.detail)?,
                    Err(e) => writeln!(out, "{}\toffline\t\t{e}", p.robot_id)?,
                }
            }
        }
    }
    Ok(())
}

fn memory(config: EngineConfig, action: MemoryAction) -> Result<()> {
    match action {
        MemoryAction::Export { memory, output: dest } => {
            let m = open_memory(Some(&memory), &config)?;
            let mut out = output(dest.as_deref())?;
            let n = m.export(&mut out)?;
            out.flush()?;
            eprintln!("exported {n} records");
        }
        MemoryAction::Import { memory, input } => {
            let m = open_memory(Some(&memory), &config)?;
            let f = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let n = m.import(f)?;
            eprintln!("imported {n} records");
        }
    }
    Ok(())
}

fn describe(config: EngineConfig, input: &str) -> Result<()> {
    let reader: Box<dyn BufRead> = if input == "-" {
        Box::new(BufReader::new(io::stdin()))
    } else {
        Box::new(BufReader::new(File::open(input).with_context(|| format!("opening {input}"))?))
    };
    let mut pipeline = StreamPipeline::new(&config);
    let mut gestures: Vec<Vec<Keyframe>> = Vec::new();
    for frame in FrameReader::new(reader) {
        gestures.extend(pipeline.push_frame(&frame).closed);
    }
    gestures.extend(pipeline.flush());
    let mut out = io::stdout().lock();
    for (i, g) in gestures.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        match encode_gesture(g, &config.encoder) {
            Ok(d) => writeln!(out, "{}", d.text())?,
            Err(e) => writeln!(out, "# gesture {i}: {e}")?,
        }
    }
    Ok(())
}

fn sim(registry: &Path, scenarios: &[String]) -> Result<()> {
    let mut running = Vec::new();
    for p in RegistryConfig::load(registry)?.robots {
        let scenario = match scenarios.iter().find_map(|s| s.strip_prefix(&format!("{}=", p.robot_id))) {
            Some(path) => serde_json::from_reader(File::open(path).with_context(|| format!("opening {path}"))?)
                .with_context(|| format!("reading scenario {path}"))?,
            None => Scenario::operational(),
        };
        let addr = p.endpoint.trim_start_matches("http://").trim_end_matches('/').to_string();
        let robot = SimulatedRobot::bind(&addr, p.clone(), scenario)?;
        eprintln!("{} serving on {}", p.robot_id, robot.endpoint());
        running.push(robot);
    }
    if running.is_empty() {
        bail!("registry has no robots");
    }
    loop {
        std::thread::park();
    }
}
