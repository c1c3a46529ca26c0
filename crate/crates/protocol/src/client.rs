use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use hoigym::engine::{Action, Controller};
use hoigym::metrics::MetricsReport;

use crate::wire::{read_message, write_message, ActionData, ErrorMessage, ImageAndState, StartEpisode, WireError, WireMessage};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClientError {
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("server error {}: {}", .0.code, .0.detail)]
    Server(ErrorMessage),
    #[error("policy failed at frame {frame}: {message}")]
    Policy { frame: usize, message: String },
    #[error("unexpected `{0}` message from server")]
    Unexpected(&'static str),
}

/// Produces up to `horizon` actions from one observation.
pub trait ChunkPolicy {
    fn chunk(&mut self, msg: &ImageAndState, horizon: usize) -> Result<Vec<Action>, String>;
}

impl<F: FnMut(&ImageAndState, usize) -> Result<Vec<Action>, String>> ChunkPolicy for F {
    fn chunk(&mut self, msg: &ImageAndState, horizon: usize) -> Result<Vec<Action>, String> {
        self(msg, horizon)
    }
}

/// Wraps a step-wise controller as a one-action-per-chunk policy.
pub struct PerFrame<C>(pub C);

impl<C: Controller> ChunkPolicy for PerFrame<C> {
    fn chunk(&mut self, msg: &ImageAndState, _horizon: usize) -> Result<Vec<Action>, String> {
        Ok(vec![self.0.act(&msg.observation)?])
    }
}

/// Plays one episode against a server and returns its metrics.
pub fn run_remote(
    addr: impl ToSocketAddrs,
    start: StartEpisode,
    policy: &mut dyn ChunkPolicy,
    timeout: Option<Duration>,
) -> Result<MetricsReport, ClientError> {
    let mut stream = TcpStream::connect(addr).map_err(WireError::from)?;
    stream.set_nodelay(true).map_err(WireError::from)?;
    stream.set_read_timeout(timeout).map_err(WireError::from)?;
    let horizon = start.horizon;
    write_message(&mut stream, &WireMessage::StartEpisode(start))?;
    loop {
        match read_message(&mut stream)? {
            WireMessage::ImageAndState(msg) => {
                let actions = policy.chunk(&msg, horizon).map_err(|message| ClientError::Policy { frame: msg.frame, message })?;
                let actions = actions.iter().map(|a| a.to_vector().to_vec()).collect();
                write_message(&mut stream, &WireMessage::ActionData(ActionData { actions }))?;
            }
            WireMessage::Metrics(m) => return Ok(m.report),
            WireMessage::Error(e) => return Err(ClientError::Server(e)),
            other => return Err(ClientError::Unexpected(other.tag())),
        }
    }
}
