//! Messages of the `plm/1` line-delimited JSON scorer protocol.
//!
//! The scorer opens with a handshake line. The client then sends optional
//! labelled training lines followed by `{"train":true}`, then scoring
//! requests, then `{"eof":true}`. The scorer answers every request id exactly
//! once, in any order, and closes with `{"eof":true}`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const PROTOCOL: &str = "plm/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    pub protocol: String,
    pub role: String,
}

impl Handshake {
    pub fn scorer() -> Self {
        Self {
            protocol: PROTOCOL.into(),
            role: "scorer".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    pub score: f64,
}

/// Anything the client may send.
#[derive(Debug, Clone, PartialEq)]
pub enum ClientMessage {
    Request(Request),
    Train,
    Eof,
}

/// Anything the scorer may send after the handshake.
#[derive(Debug, Clone, PartialEq)]
pub enum ServerMessage {
    Score(Response),
    Error { id: Option<u64>, message: String },
    Eof,
}

pub fn eof_line() -> String {
    r#"{"eof":true}"#.to_owned()
}

pub fn train_line() -> String {
    r#"{"train":true}"#.to_owned()
}

fn flag(v: &Value, key: &str) -> bool {
    v.get(key).and_then(Value::as_bool) == Some(true)
}

/// Parse a client line; `Err` carries a human-readable reason.
pub fn parse_client(line: &str) -> Result<ClientMessage, String> {
    let v: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    if flag(&v, "eof") {
        return Ok(ClientMessage::Eof);
    }
    if flag(&v, "train") {
        return Ok(ClientMessage::Train);
    }
    let req: Request = serde_json::from_value(v).map_err(|e| format!("bad request: {e}"))?;
    if matches!(req.label, Some(l) if l > 1) {
        return Err(format!("label must be 0 or 1 for id {}", req.id));
    }
    Ok(ClientMessage::Request(req))
}

/// Parse a scorer line; `Err` carries a human-readable reason.
pub fn parse_server(line: &str) -> Result<ServerMessage, String> {
    let v: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    if flag(&v, "eof") {
        return Ok(ServerMessage::Eof);
    }
    if let Some(err) = v.get("error") {
        return Ok(ServerMessage::Error {
            id: v.get("id").and_then(Value::as_u64),
            message: err.as_str().map_or_else(|| err.to_string(), str::to_owned),
        });
    }
    let resp: Response = serde_json::from_value(v).map_err(|e| format!("bad response: {e}"))?;
    Ok(ServerMessage::Score(resp))
}

pub fn parse_handshake(line: &str) -> Result<Handshake, String> {
    let h: Handshake = serde_json::from_str(line).map_err(|e| format!("bad handshake: {e}"))?;
    if h.protocol != PROTOCOL || h.role != "scorer" {
        return Err(format!(
            "unsupported handshake: protocol {:?}, role {:?}",
            h.protocol, h.role
        ));
    }
    Ok(h)
}
