//! Line-delimited JSON protocol that exposes the engine to external
//! trainers.
//!
//! Requests, one per line:
//!
//! ```text
//! {"cmd":"reset","seed":7}                 # base64 payloads
//! {"cmd":"reset","seed":7,"format":"json"} # plain numeric arrays
//! {"cmd":"step","a":[0.2,-0.1]}
//! {"cmd":"close"}
//! ```
//!
//! Every request gets exactly one response line. Malformed requests get
//! `{"ok":false,"error":{...}}` and the session continues.

use std::io::{self, BufRead, Write};
use std::net::{TcpListener, TcpStream};

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Engine, EngineError, ScenarioConfig, StepInfo};
use crate::observation::Observation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadFormat {
    /// Little-endian f32, base64 encoded.
    #[default]
    Base64,
    Json,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case", deny_unknown_fields)]
enum Request {
    Reset {
        seed: u64,
        #[serde(default)]
        format: Option<PayloadFormat>,
    },
    Step {
        a: Vec<f64>,
    },
    Close,
}

/// Encodes the observation arrays in the declared order.
pub fn observation_payload(obs: &Observation, format: PayloadFormat) -> Value {
    let arrays: Vec<Value> = Observation::SHAPES
        .iter()
        .zip(obs.components())
        .map(|((name, [rows, cols]), data)| {
            let shape = if *rows == 1 { vec![*cols] } else { vec![*rows, *cols] };
            let data = match format {
                PayloadFormat::Base64 => {
                    let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_le_bytes()).collect();
                    Value::String(STANDARD.encode(bytes))
                }
                PayloadFormat::Json => json!(data),
            };
            json!({ "name": name, "shape": shape, "data": data })
        })
        .collect();
    let encoding = match format {
        PayloadFormat::Base64 => "f32le-base64",
        PayloadFormat::Json => "json",
    };
    json!({ "encoding": encoding, "arrays": arrays })
}

/// Decodes a base64 payload array back into floats.
pub fn decode_f32_base64(text: &str) -> Option<Vec<f32>> {
    let bytes = STANDARD.decode(text).ok()?;
    if bytes.len() % 4 != 0 {
        return None;
    }
    Some(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
}

fn error_reply(code: &str, message: impl Into<String>) -> Value {
    json!({ "ok": false, "error": { "code": code, "message": message.into() } })
}

fn info_value(info: &StepInfo) -> Value {
    serde_json::to_value(info).expect("info serializes")
}

/// One protocol session over one engine.
pub struct Session {
    engine: Engine,
    format: PayloadFormat,
    closed: bool,
}

impl Session {
    pub fn new(cfg: ScenarioConfig) -> Result<Self, EngineError> {
        let mut engine = Engine::new(cfg)?;
        engine.set_record_trajectory(false);
        Ok(Self { engine, format: PayloadFormat::Base64, closed: false })
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Handles one request line and returns the response line (without a
    /// trailing newline).
    pub fn handle_line(&mut self, line: &str) -> String {
        let reply = match serde_json::from_str::<Request>(line) {
            Err(e) => error_reply("malformed", e.to_string()),
            Ok(req) => self.handle(req),
        };
        reply.to_string()
    }

    fn handle(&mut self, req: Request) -> Value {
        match req {
            Request::Close => {
                self.closed = true;
                json!({ "ok": true, "closed": true })
            }
            Request::Reset { seed, format } => {
                if let Some(f) = format {
                    self.format = f;
                }
                match self.engine.reset(seed) {
                    Ok(obs) => json!({
                        "ok": true,
                        "observation": observation_payload(&obs, self.format),
                        "done": self.engine.is_done(),
                        "info": info_value(self.engine.info().expect("reset sets info")),
                    }),
                    Err(e) => error_reply("engine", e.to_string()),
                }
            }
            Request::Step { a } => {
                let Ok(a) = <[f64; 2]>::try_from(a.as_slice()) else {
                    return error_reply("bad_action", format!("expected 2 action components, got {}", a.len()));
                };
                match self.engine.step(a) {
                    Ok(r) => json!({
                        "ok": true,
                        "observation": observation_payload(&r.observation, self.format),
                        "reward": r.reward,
                        "done": r.done,
                        "info": info_value(&r.info),
                    }),
                    Err(EngineError::NotReset) => error_reply("not_reset", "step before reset"),
                    Err(EngineError::EpisodeDone) => error_reply("episode_done", "episode is done; send reset"),
                    Err(e) => error_reply("engine", e.to_string()),
                }
            }
        }
    }
}

/// Serves one session until `close` or end of input.
pub fn serve_env_protocol<R: BufRead, W: Write>(cfg: ScenarioConfig, reader: R, mut writer: W) -> io::Result<()> {
    let mut session = Session::new(cfg).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(writer, "{}", session.handle_line(&line))?;
        writer.flush()?;
        if session.is_closed() {
            break;
        }
    }
    Ok(())
}

/// Accepts connections forever, one session per connection on its own
/// thread.
pub fn serve_tcp(listener: TcpListener, cfg: ScenarioConfig) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let cfg = cfg.clone();
        std::thread::spawn(move || {
            let _ = serve_connection(stream, cfg);
        });
    }
    Ok(())
}

fn serve_connection(stream: TcpStream, cfg: ScenarioConfig) -> io::Result<()> {
    let reader = io::BufReader::new(stream.try_clone()?);
    serve_env_protocol(cfg, reader, stream)
}
