//! Stream drivers: a finite frame sequence, a live channel with wall-clock
//! flushing, and a TCP listener with one stream per connection.

use std::io::{BufRead, BufReader};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use super::{DispatchOutcome, Engine, StreamPipeline};
use crate::frame::{FrameReader, HandFrame};
use crate::keyframe::Keyframe;

pub trait StreamObserver {
    fn on_keyframe(&mut self, _keyframe: &Keyframe) {}
    fn on_outcome(&mut self, outcome: &DispatchOutcome);
}

impl StreamObserver for Vec<DispatchOutcome> {
    fn on_outcome(&mut self, outcome: &DispatchOutcome) {
        self.push(outcome.clone());
    }
}

impl<O: StreamObserver + ?Sized> StreamObserver for Arc<Mutex<O>> {
    fn on_keyframe(&mut self, keyframe: &Keyframe) {
        self.lock().expect("observer lock").on_keyframe(keyframe);
    }

    fn on_outcome(&mut self, outcome: &DispatchOutcome) {
        self.lock().expect("observer lock").on_outcome(outcome);
    }
}

fn feed(engine: &Engine, pipeline: &mut StreamPipeline, frame: &HandFrame, observer: &mut dyn StreamObserver) -> usize {
    let effect = pipeline.push_frame(frame);
    let mut n = 0;
    if let Some(g) = effect.closed {
        observer.on_outcome(&engine.process_gesture(&g));
        n += 1;
    }
    if let Some(k) = &effect.keyframe {
        observer.on_keyframe(k);
    }
    n
}

fn flush(engine: &Engine, pipeline: &mut StreamPipeline, observer: &mut dyn StreamObserver) -> usize {
    match pipeline.flush() {
        Some(g) => {
            observer.on_outcome(&engine.process_gesture(&g));
            1
        }
        None => 0,
    }
}

/// Runs a finite stream; segmentation uses stream time only, so the result
/// does not depend on how fast frames arrive. Returns the gesture count.
pub fn run_frames<I>(engine: &Engine, frames: I, observer: &mut dyn StreamObserver) -> usize
where
    I: IntoIterator<Item = HandFrame>,
{
    let mut pipeline = StreamPipeline::new(engine.config());
    let mut n = 0;
    for f in frames {
        n += feed(engine, &mut pipeline, &f, observer);
    }
    n + flush(engine, &mut pipeline, observer)
}

/// Runs a live stream. Besides stream-time segmentation, a pending gesture
/// is also closed when no frame arrives for one idle timeout of wall time.
pub fn run_channel(engine: &Engine, frames: Receiver<HandFrame>, observer: &mut dyn StreamObserver) -> usize {
    let idle = Duration::from_secs_f64(engine.config().gesture_timeout);
    let mut pipeline = StreamPipeline::new(engine.config());
    let mut n = 0;
    loop {
        match frames.recv_timeout(idle) {
            Ok(f) => n += feed(engine, &mut pipeline, &f, observer),
            Err(RecvTimeoutError::Timeout) => n += flush(engine, &mut pipeline, observer),
            Err(RecvTimeoutError::Disconnected) => return n + flush(engine, &mut pipeline, observer),
        }
    }
}

/// Parses JSONL frames on a background thread. Malformed and out-of-order
/// lines are skipped with a warning.
pub fn spawn_reader<R: BufRead + Send + 'static>(input: R) -> Receiver<HandFrame> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut reader = FrameReader::new(input);
        loop {
            match reader.next_frame() {
                Ok(Some(f)) => {
                    if tx.send(f).is_err() {
                        break;
                    }
                }
                Ok(None) => break,
                Err(e) => {
                    tracing::warn!(error = %e, "frame input closed");
                    break;
                }
            }
        }
        let s = reader.stats();
        tracing::info!(lines = s.lines, malformed = s.malformed, out_of_order = s.out_of_order, "frame input finished");
    });
    rx
}

fn handle_connection<O>(engine: Arc<Engine>, stream: TcpStream, mut observer: Arc<Mutex<O>>)
where
    O: StreamObserver + Send + ?Sized + 'static,
{
    let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
    tracing::info!(%peer, "stream connected");
    let frames = spawn_reader(BufReader::new(stream));
    let n = run_channel(&engine, frames, &mut observer);
    tracing::info!(%peer, gestures = n, "stream closed");
}

/// Accepts frame streams over TCP, one JSONL stream per connection, each with
/// its own pipeline. Blocks for as long as the listener yields connections.
pub fn serve<O>(engine: Arc<Engine>, listener: TcpListener, observer: Arc<Mutex<O>>) -> std::io::Result<()>
where
    O: StreamObserver + Send + ?Sized + 'static,
{
    for conn in listener.incoming() {
        let stream = conn?;
        let engine = engine.clone();
        let observer = observer.clone();
        thread::spawn(move || handle_connection(engine, stream, observer));
    }
    Ok(())
}
