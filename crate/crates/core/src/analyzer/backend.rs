use std::collections::HashMap;
use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::time::Duration;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Environment variable holding the `host:port` of the inference endpoint.
pub const MODEL_ADDR_ENV: &str = "QWERTY_MODEL_ADDR";

const MAX_FRAME: usize = 64 * 1024 * 1024;

/// One window's worth of work for a backend.
#[derive(Debug, Clone)]
pub struct CompletionRequest {
    pub prompt: String,
    /// The scene text inside the prompt, used as the mock lookup key.
    pub window_text: String,
}

/// Turns prompts into raw completions. A batch is sent as a unit and the
/// completions come back in request order.
pub trait CompletionBackend: Send + Sync {
    fn complete_batch(&self, requests: &[CompletionRequest]) -> Result<Vec<String>>;
}

/// Writes a frame: a big-endian `u32` byte length followed by UTF-8 bytes.
pub fn write_frame(w: &mut impl Write, payload: &str) -> std::io::Result<()> {
    let len = u32::try_from(payload.len())
        .map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidInput, "frame too large"))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(payload.as_bytes())?;
    w.flush()
}

pub fn read_frame(r: &mut impl Read) -> std::io::Result<String> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("frame of {len} bytes exceeds limit"),
        ));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

/// Client for a local inference process speaking the framed protocol.
/// One connection is opened per batch; prompts and completions alternate.
#[derive(Debug, Clone)]
pub struct TcpBackend {
    addr: String,
    timeout: Duration,
}

impl TcpBackend {
    pub fn new(addr: impl Into<String>) -> Self {
        TcpBackend {
            addr: addr.into(),
            timeout: Duration::from_secs(120),
        }
    }

    pub fn from_env() -> Result<Self> {
        std::env::var(MODEL_ADDR_ENV)
            .map(TcpBackend::new)
            .map_err(|_| Error::AnalyzerUnavailable(format!("{MODEL_ADDR_ENV} is not set")))
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn addr(&self) -> &str {
        &self.addr
    }

    fn exchange(&self, requests: &[CompletionRequest]) -> std::io::Result<Vec<String>> {
        let mut stream = TcpStream::connect(&self.addr)?;
        stream.set_read_timeout(Some(self.timeout))?;
        stream.set_write_timeout(Some(self.timeout))?;
        let mut out = Vec::with_capacity(requests.len());
        for req in requests {
            write_frame(&mut stream, &req.prompt)?;
            out.push(read_frame(&mut stream)?);
        }
        Ok(out)
    }
}

impl CompletionBackend for TcpBackend {
    fn complete_batch(&self, requests: &[CompletionRequest]) -> Result<Vec<String>> {
        self.exchange(requests)
            .map_err(|e| Error::AnalyzerUnavailable(format!("{}: {e}", self.addr)))
    }
}

/// Canned completions keyed by the SHA-256 (lowercase hex) of the window
/// text. The key `"*"` supplies a completion for any other window.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    responses: HashMap<String, String>,
    fallback: Option<String>,
}

impl MockBackend {
    pub fn new(responses: HashMap<String, String>) -> Self {
        let mut responses = responses;
        let fallback = responses.remove("*");
        MockBackend { responses, fallback }
    }

    /// Reads a fixture: a JSON object mapping text hashes to completions.
    pub fn from_json(source: &str) -> Result<Self> {
        let map: HashMap<String, String> = serde_json::from_str(source)
            .map_err(|e| Error::Config(format!("mock fixture: {e}")))?;
        Ok(MockBackend::new(map))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        MockBackend::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn hash_text(text: &str) -> String {
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn insert(&mut self, text: &str, completion: impl Into<String>) {
        self.responses.insert(Self::hash_text(text), completion.into());
    }

    pub fn set_fallback(&mut self, completion: impl Into<String>) {
        self.fallback = Some(completion.into());
    }
}

impl CompletionBackend for MockBackend {
    fn complete_batch(&self, requests: &[CompletionRequest]) -> Result<Vec<String>> {
        requests
            .iter()
            .map(|req| {
                let key = Self::hash_text(&req.window_text);
                self.responses
                    .get(&key)
                    .or(self.fallback.as_ref())
                    .cloned()
                    .ok_or_else(|| Error::AnalyzerUnavailable(format!("no canned completion for window {key}")))
            })
            .collect()
    }
}
