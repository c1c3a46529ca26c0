//! Message framing. Every message is a 4-byte big-endian body length
//! followed by a UTF-8 JSON object with sorted keys and a `type` tag.
//!
//! | type              | fields                                                        |
//! |-------------------|---------------------------------------------------------------|
//! | `start_episode`   | `episode_id` u64, `task_type` string, `length` frames, `horizon` T, optional `controller` name |
//! | `image_and_state` | `frame`, `observation` (camera projection and hand), `state` 18 reals |
//! | `action_data`     | `actions`: 1..=T rows of 18 reals (3 palm deltas, 15 joint deltas) |
//! | `metrics`         | `report`: the episode's metrics report                         |
//! | `error`           | `code` (snake_case), `detail`                                  |

use std::fmt;
use std::io::{self, Read, Write};

use hoigym::engine::{Observation, ACTION_DIM};
use hoigym::metrics::MetricsReport;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Action chunk length used when a client does not ask for another.
pub const DEFAULT_HORIZON: usize = 10;
/// Largest accepted body in bytes.
pub const MAX_FRAME: usize = 8 << 20;
pub const STATE_DIM: usize = 18;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartEpisode {
    pub episode_id: u64,
    pub task_type: String,
    /// Episode length L in frames.
    pub length: usize,
    /// Action horizon T: the longest chunk the client may send.
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageAndState {
    pub frame: usize,
    pub observation: Observation,
    pub state: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionData {
    pub actions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metrics {
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorMessage {
    pub code: ErrorCode,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WireMessage {
    StartEpisode(StartEpisode),
    ImageAndState(ImageAndState),
    ActionData(ActionData),
    Metrics(Metrics),
    Error(ErrorMessage),
}

impl WireMessage {
    pub fn tag(&self) -> &'static str {
        match self {
            WireMessage::StartEpisode(_) => "start_episode",
            WireMessage::ImageAndState(_) => "image_and_state",
            WireMessage::ActionData(_) => "action_data",
            WireMessage::Metrics(_) => "metrics",
            WireMessage::Error(_) => "error",
        }
    }

    pub fn error(code: ErrorCode, detail: impl Into<String>) -> Self {
        WireMessage::Error(ErrorMessage { code, detail: detail.into() })
    }

    fn validate(&self) -> Result<(), WireError> {
        let schema = |d: String| Err(WireError::new(ErrorCode::Schema, d));
        match self {
            WireMessage::StartEpisode(s) => {
                if s.length == 0 || s.horizon == 0 {
                    return schema("length and horizon must be positive".into());
                }
            }
            WireMessage::ImageAndState(m) => {
                if m.state.len() != STATE_DIM {
                    return schema(format!("state has {} values, expected {STATE_DIM}", m.state.len()));
                }
                if !m.state.iter().all(|x| x.is_finite()) {
                    return schema("state has non-finite values".into());
                }
            }
            WireMessage::ActionData(a) => {
                if a.actions.is_empty() {
                    return schema("empty action chunk".into());
                }
                for (i, row) in a.actions.iter().enumerate() {
                    if row.len() != ACTION_DIM {
                        return schema(format!("action row {i} has {} values, expected {ACTION_DIM}", row.len()));
                    }
                    if !row.iter().all(|x| x.is_finite()) {
                        return schema(format!("action row {i} has non-finite values"));
                    }
                }
            }
            WireMessage::Metrics(_) | WireMessage::Error(_) => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Bad length prefix, not UTF-8 or not JSON.
    Malformed,
    UnknownTag,
    /// Valid JSON that does not fit the message schema.
    Schema,
    OutOfOrder,
    Deadline,
    /// The episode cannot be built from the start message.
    InvalidEpisode,
    Transport,
    Internal,
}

impl ErrorCode {
    pub fn name(self) -> &'static str {
        match self {
            ErrorCode::Malformed => "malformed",
            ErrorCode::UnknownTag => "unknown_tag",
            ErrorCode::Schema => "schema",
            ErrorCode::OutOfOrder => "out_of_order",
            ErrorCode::Deadline => "deadline",
            ErrorCode::InvalidEpisode => "invalid_episode",
            ErrorCode::Transport => "transport",
            ErrorCode::Internal => "internal",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{code}: {detail}")]
pub struct WireError {
    pub code: ErrorCode,
    pub detail: String,
}

impl WireError {
    pub fn new(code: ErrorCode, detail: impl Into<String>) -> Self {
        Self { code, detail: detail.into() }
    }
}

impl From<io::Error> for WireError {
    fn from(e: io::Error) -> Self {
        let code = match e.kind() {
            io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => ErrorCode::Deadline,
            _ => ErrorCode::Transport,
        };
        WireError::new(code, e.to_string())
    }
}

/// Canonical frame: length prefix plus sorted-key JSON.
pub fn encode(msg: &WireMessage) -> Vec<u8> {
    let body = hoigym::canonical_json(msg);
    let mut out = Vec::with_capacity(body.len() + 4);
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(body.as_bytes());
    out
}

/// Decodes exactly one complete frame.
pub fn decode(bytes: &[u8]) -> Result<WireMessage, WireError> {
    let Some((head, body)) = bytes.split_first_chunk::<4>() else {
        return Err(WireError::new(ErrorCode::Malformed, format!("frame of {} bytes has no length prefix", bytes.len())));
    };
    let len = u32::from_be_bytes(*head) as usize;
    if len != body.len() {
        return Err(WireError::new(ErrorCode::Malformed, format!("length prefix {len} but body has {} bytes", body.len())));
    }
    decode_body(body)
}

fn decode_body(body: &[u8]) -> Result<WireMessage, WireError> {
    if body.len() > MAX_FRAME {
        return Err(WireError::new(ErrorCode::Malformed, format!("body of {} bytes exceeds {MAX_FRAME}", body.len())));
    }
    let text = std::str::from_utf8(body).map_err(|e| WireError::new(ErrorCode::Malformed, format!("not UTF-8: {e}")))?;
    let value: Value = serde_json::from_str(text).map_err(|e| WireError::new(ErrorCode::Malformed, format!("not JSON: {e}")))?;
    let tag = value
        .as_object()
        .ok_or_else(|| WireError::new(ErrorCode::Schema, "message is not a JSON object"))?
        .get("type")
        .ok_or_else(|| WireError::new(ErrorCode::Schema, "missing `type` tag"))?
        .as_str()
        .ok_or_else(|| WireError::new(ErrorCode::Schema, "`type` is not a string"))?;
    if !["start_episode", "image_and_state", "action_data", "metrics", "error"].contains(&tag) {
        return Err(WireError::new(ErrorCode::UnknownTag, format!("unknown message type `{tag}`")));
    }
    let msg: WireMessage = serde_json::from_value(value).map_err(|e| WireError::new(ErrorCode::Schema, e.to_string()))?;
    msg.validate()?;
    Ok(msg)
}

pub fn read_message(reader: &mut impl Read) -> Result<WireMessage, WireError> {
    let mut head = [0u8; 4];
    reader.read_exact(&mut head)?;
    let len = u32::from_be_bytes(head) as usize;
    if len > MAX_FRAME {
        return Err(WireError::new(ErrorCode::Malformed, format!("body of {len} bytes exceeds {MAX_FRAME}")));
    }
    let mut body = vec![0u8; len];
    reader.read_exact(&mut body)?;
    decode_body(&body)
}

pub fn write_message(writer: &mut impl Write, msg: &WireMessage) -> Result<(), WireError> {
    writer.write_all(&encode(msg))?;
    writer.flush()?;
    Ok(())
}
