//! Length-prefixed JSON wire protocol between an evaluation server that owns
//! the engine and a remote policy, plus the constrained skill-program
//! response format.
//!
//! A session is one episode:
//!
//! ```text
//! client                      server
//!   start_episode      ->
//!                      <-     image_and_state (frame 0)
//!   action_data (<= T) ->
//!                      <-     image_and_state (next frame)
//!   ...
//!                      <-     metrics
//! ```

// `!(x > 0.0)` reads as "not positive" and also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod client;
mod server;
pub mod skill;
pub mod wire;

pub use client::{run_remote, ChunkPolicy, ClientError, PerFrame};
pub use server::{serve_connection, Server, ServerConfig, ServerHandle, SessionError, SessionResult, SessionSummary};
pub use skill::{expand_skill_program, parse_skill_program, Skill, SkillError, SkillProgram};
pub use wire::{
    decode, encode, read_message, write_message, ActionData, ErrorCode, ErrorMessage, ImageAndState, Metrics, StartEpisode,
    WireError, WireMessage, DEFAULT_HORIZON, STATE_DIM,
};
