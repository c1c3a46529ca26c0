use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use hoigym::engine::{Action, Engine, EpisodeConfig, EpisodeOptions, EpisodeRecord};
use hoigym::metrics::{evaluate, MetricsReport};
use hoigym::motiongen::Catalog;
use hoigym::oracle::gt_grasp;

use crate::wire::{
    read_message, write_message, ActionData, ErrorCode, ImageAndState, Metrics, StartEpisode, WireError, WireMessage,
};

/// Errors that end a session. The client is told with an `error` message
/// whenever the transport still works.
pub type SessionError = WireError;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub catalog: Arc<Catalog>,
    /// Observation window, thresholds and jitter for every episode.
    pub options: EpisodeOptions,
    /// Wall-clock budget of one whole session.
    pub deadline: Duration,
}

impl ServerConfig {
    pub fn new(catalog: Catalog) -> Self {
        Self { catalog: Arc::new(catalog), options: EpisodeOptions::default(), deadline: Duration::from_secs(300) }
    }
}

/// Outcome of one completed session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionSummary {
    pub start: StartEpisode,
    pub report: MetricsReport,
    pub record: EpisodeRecord,
    /// Frames executed from each received chunk.
    pub chunks: Vec<usize>,
}

pub type SessionResult = Result<SessionSummary, SessionError>;

trait Deadline {
    fn set_remaining(&mut self, remaining: Duration) -> io::Result<()>;
}

impl Deadline for TcpStream {
    fn set_remaining(&mut self, remaining: Duration) -> io::Result<()> {
        self.set_read_timeout(Some(remaining.max(Duration::from_millis(1))))
    }
}

struct Session<'a, S> {
    stream: S,
    config: &'a ServerConfig,
    until: Instant,
}

impl<S: Read + Write + Deadline> Session<'_, S> {
    fn recv(&mut self) -> Result<WireMessage, WireError> {
        let now = Instant::now();
        if now >= self.until {
            return Err(WireError::new(ErrorCode::Deadline, "session deadline exceeded"));
        }
        self.stream.set_remaining(self.until - now)?;
        match read_message(&mut self.stream) {
            Err(e) if e.code == ErrorCode::Deadline => Err(WireError::new(ErrorCode::Deadline, "session deadline exceeded")),
            other => other,
        }
    }

    fn send(&mut self, msg: &WireMessage) -> Result<(), WireError> {
        write_message(&mut self.stream, msg)
    }

    fn fail<T>(&mut self, err: WireError) -> Result<T, WireError> {
        if err.code != ErrorCode::Transport {
            let _ = self.send(&WireMessage::error(err.code, err.detail.clone()));
        }
        Err(err)
    }

    fn run(&mut self) -> SessionResult {
        match self.exchange() {
            Ok(s) => Ok(s),
            Err(e) => self.fail(e),
        }
    }

    fn exchange(&mut self) -> SessionResult {
        let start = match self.recv()? {
            WireMessage::StartEpisode(s) => s,
            WireMessage::Error(e) => return Err(WireError::new(e.code, format!("client aborted: {}", e.detail))),
            other => return Err(out_of_order("start_episode", &other)),
        };
        let config = self.build(&start)?;
        let frames = config.frames;
        let (mut engine, mut obs) = Engine::reset(config).map_err(invalid)?;
        let mut chunks = Vec::new();
        while !engine.is_done() {
            let state = obs.state_vector().to_vec();
            self.send(&WireMessage::ImageAndState(ImageAndState { frame: obs.frame, observation: obs.clone(), state }))?;
            let actions = match self.recv()? {
                WireMessage::ActionData(ActionData { actions }) => actions,
                WireMessage::Error(e) => return Err(WireError::new(e.code, format!("client aborted: {}", e.detail))),
                other => return Err(out_of_order("action_data", &other)),
            };
            if actions.len() > start.horizon {
                return Err(WireError::new(
                    ErrorCode::Schema,
                    format!("chunk of {} actions exceeds horizon {}", actions.len(), start.horizon),
                ));
            }
            // the tail of a chunk past the episode end is dropped
            let take = actions.len().min(frames - engine.frame());
            for row in &actions[..take] {
                let action = Action::from_slice(row).ok_or_else(|| WireError::new(ErrorCode::Schema, "bad action row"))?;
                obs = engine.step(&action, None).map_err(internal)?.observation;
            }
            chunks.push(take);
        }
        let controller = start.controller.clone().unwrap_or_else(|| "remote".to_string());
        let record = engine.into_record(&controller).map_err(internal)?;
        let report = evaluate(&record, &gt_grasp()).map_err(|e| WireError::new(ErrorCode::Internal, e.to_string()))?;
        self.send(&WireMessage::Metrics(Metrics { report: report.clone() }))?;
        Ok(SessionSummary { start, report, record, chunks })
    }

    fn build(&self, start: &StartEpisode) -> Result<EpisodeConfig, WireError> {
        let opts = EpisodeOptions { horizon: Some(start.length), ..self.config.options.clone() };
        let config = EpisodeConfig::generate(&self.config.catalog, &start.task_type, start.episode_id, &opts).map_err(invalid)?;
        if config.frames != start.length {
            return Err(WireError::new(
                ErrorCode::InvalidEpisode,
                format!(
                    "episode {} of `{}` lasts {} frames, not {}",
                    start.episode_id, start.task_type, config.frames, start.length
                ),
            ));
        }
        Ok(config)
    }
}

fn out_of_order(expected: &str, got: &WireMessage) -> WireError {
    WireError::new(ErrorCode::OutOfOrder, format!("expected {expected}, got {}", got.tag()))
}

fn invalid(e: impl std::fmt::Display) -> WireError {
    WireError::new(ErrorCode::InvalidEpisode, e.to_string())
}

fn internal(e: impl std::fmt::Display) -> WireError {
    WireError::new(ErrorCode::Internal, e.to_string())
}

/// Runs one session to completion on an accepted connection.
pub fn serve_connection(stream: TcpStream, config: &ServerConfig) -> SessionResult {
    stream.set_nodelay(true)?;
    let until = Instant::now() + config.deadline;
    Session { stream, config, until }.run()
}

pub struct Server {
    listener: TcpListener,
    config: Arc<ServerConfig>,
}

type Sink = Arc<dyn Fn(SessionResult) + Send + Sync>;

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, config: ServerConfig) -> io::Result<Self> {
        Ok(Self { listener: TcpListener::bind(addr)?, config: Arc::new(config) })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serves connections on the calling thread, one thread per session.
    /// Returns after `limit` sessions have finished, or never without one.
    pub fn run(self, limit: Option<usize>, sink: impl Fn(SessionResult) + Send + Sync + 'static) -> io::Result<()> {
        accept_loop(self.listener, self.config, limit, Arc::new(AtomicBool::new(false)), Arc::new(sink))
    }

    /// Serves in the background, keeping every session result.
    pub fn spawn(self) -> io::Result<ServerHandle> {
        let addr = self.local_addr()?;
        let results = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let sink: Sink = {
            let results = Arc::clone(&results);
            Arc::new(move |r| results.lock().expect("results lock").push(r))
        };
        let thread = {
            let stop = Arc::clone(&stop);
            thread::spawn(move || {
                let _ = accept_loop(self.listener, self.config, None, stop, sink);
            })
        };
        Ok(ServerHandle { addr, stop, thread, results })
    }
}

fn accept_loop(
    listener: TcpListener,
    config: Arc<ServerConfig>,
    limit: Option<usize>,
    stop: Arc<AtomicBool>,
    sink: Sink,
) -> io::Result<()> {
    let mut sessions: Vec<JoinHandle<()>> = Vec::new();
    let mut accepted = 0;
    while limit.is_none_or(|n| accepted < n) {
        let (stream, _) = listener.accept()?;
        if stop.load(Ordering::SeqCst) {
            break;
        }
        accepted += 1;
        let config = Arc::clone(&config);
        let sink = Arc::clone(&sink);
        sessions.push(thread::spawn(move || sink(serve_connection(stream, &config))));
    }
    for s in sessions {
        let _ = s.join();
    }
    Ok(())
}

pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: JoinHandle<()>,
    results: Arc<Mutex<Vec<SessionResult>>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting, waits for running sessions and returns all results
    /// in completion order.
    pub fn shutdown(self) -> Vec<SessionResult> {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        let _ = self.thread.join();
        std::mem::take(&mut *self.results.lock().expect("results lock"))
    }
}
