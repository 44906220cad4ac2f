use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::backend::{LlmBackend, LlmError, LlmRequest, Purpose};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub request_hash: String,
    pub reply: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purpose: Option<Purpose>,
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptEntry>, LlmError> {
    let f = File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e: TranscriptEntry = serde_json::from_str(&line).map_err(|e| {
            LlmError::Config(format!("{}:{}: {e}", path.display(), i + 1))
        })?;
        out.push(e);
    }
    Ok(out)
}

/// Replays recorded replies keyed by request hash. Repeated requests get their
/// recorded replies in order; the last one repeats once they run out.
pub struct OracleScript {
    replies: BTreeMap<String, Vec<String>>,
    cursor: Mutex<BTreeMap<String, usize>>,
}

impl OracleScript {
    pub fn new(entries: Vec<TranscriptEntry>) -> Self {
        let mut replies: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for e in entries {
            replies.entry(e.request_hash).or_default().push(e.reply);
        }
        Self {
            replies,
            cursor: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, LlmError> {
        Ok(Self::new(read_transcript(path)?))
    }
}

impl LlmBackend for OracleScript {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        let key = request.hash();
        let list = self
            .replies
            .get(&key)
            .ok_or_else(|| LlmError::OracleMiss(key.clone()))?;
        let mut cursor = self.cursor.lock().unwrap();
        let i = cursor.entry(key).or_insert(0);
        let reply = list[(*i).min(list.len() - 1)].clone();
        *i += 1;
        Ok(reply)
    }

    fn name(&self) -> &str {
        "oracle_script"
    }
}

/// Passes requests through and keeps a transcript of every reply, optionally
/// appending it to a JSON Lines file as it goes.
pub struct Recorder {
    inner: Arc<dyn LlmBackend>,
    entries: Mutex<Vec<TranscriptEntry>>,
    sink: Option<Mutex<File>>,
}

impl Recorder {
    pub fn new(inner: Arc<dyn LlmBackend>) -> Self {
        Self {
            inner,
            entries: Mutex::new(Vec::new()),
            sink: None,
        }
    }

    pub fn to_file(inner: Arc<dyn LlmBackend>, path: &Path) -> Result<Self, LlmError> {
        let f = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            sink: Some(Mutex::new(f)),
            ..Self::new(inner)
        })
    }

    pub fn entries(&self) -> Vec<TranscriptEntry> {
        self.entries.lock().unwrap().clone()
    }
}

impl LlmBackend for Recorder {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        let reply = self.inner.complete(request)?;
        let e = TranscriptEntry {
            request_hash: request.hash(),
            reply: reply.clone(),
            purpose: Some(request.purpose),
        };
        if let Some(sink) = &self.sink {
            let mut f = sink.lock().unwrap();
            writeln!(f, "{}", serde_json::to_string(&e).unwrap())?;
        }
        self.entries.lock().unwrap().push(e);
        Ok(reply)
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}
