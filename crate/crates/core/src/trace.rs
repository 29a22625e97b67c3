//! Line-delimited JSON event log for a run.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use serde_json::{json, Value};

use crate::error::{Error, Result};

#[derive(Debug)]
pub struct TraceLog {
    out: Mutex<BufWriter<File>>,
    verbose: bool,
}

impl TraceLog {
    pub fn create(path: &Path, verbose: bool) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            out: Mutex::new(BufWriter::new(file)),
            verbose,
        })
    }

    /// Whether request and response bodies should be logged.
    pub fn verbose(&self) -> bool {
        self.verbose
    }

    pub fn event(&self, kind: &str, fields: Value) {
        let mut record = json!({
            "ts": chrono::Utc::now().to_rfc3339(),
            "event": kind,
        });
        if let (Some(map), Value::Object(extra)) = (record.as_object_mut(), fields) {
            map.extend(extra);
        }
        let mut out = self.out.lock().unwrap_or_else(|e| e.into_inner());
        // Trace output is best effort.
        let _ = serde_json::to_writer(&mut *out, &record);
        let _ = out.write_all(b"\n");
    }

    pub fn flush(&self) {
        let _ = self.out.lock().unwrap_or_else(|e| e.into_inner()).flush();
    }
}

impl Drop for TraceLog {
    fn drop(&mut self) {
        self.flush();
    }
}

/// Replaces inline base64 payloads (`data:` URLs) with a size note.
pub fn redact(value: &Value) -> Value {
    match value {
        Value::String(s) if s.starts_with("data:") => {
            let kind = s.split(';').next().unwrap_or("data:");
            Value::String(format!("<{} redacted, {} bytes>", &kind[5..], s.len()))
        }
        Value::Array(items) => Value::Array(items.iter().map(redact).collect()),
        Value::Object(map) => Value::Object(map.iter().map(|(k, v)| (k.clone(), redact(v))).collect()),
        other => other.clone(),
    }
}
