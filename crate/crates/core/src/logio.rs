//! JSON-lines event logs.
//!
//! Every non-blank line that does not start with `#` is one record:
//!
//! ```text
//! {"record":"reference","utterance_id":"u1","text":"rosalie how are you"}
//! {"record":"event","utterance_id":"u1","time_ms":300,"origin":"causal","kind":"partial","text":"_ro za"}
//! ```
//!
//! Event text holds space-joined word pieces with the `_` word-boundary
//! marker; reference text holds plain space-joined words. Records are grouped
//! per utterance in order of first appearance. Within an utterance the events
//! must already be ordered by `(time_ms, origin, kind)`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::merge::first_unsorted;

pub use crate::merge::{Kind, Origin, ResultEvent};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtteranceLog {
    pub utterance_id: String,
    pub reference: Option<Vec<String>>,
    pub events: Vec<ResultEvent>,
}

impl UtteranceLog {
    pub fn new(utterance_id: impl Into<String>) -> Self {
        Self {
            utterance_id: utterance_id.into(),
            reference: None,
            events: Vec::new(),
        }
    }

    pub fn final_event(&self) -> Option<&ResultEvent> {
        self.events.iter().find(|e| e.kind == Kind::Final)
    }

    pub fn causal_partials(&self) -> impl Iterator<Item = &ResultEvent> {
        self.events.iter().filter(|e| e.is_causal_partial())
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(index) = first_unsorted(&self.events) {
            return Err(Error::OutOfOrder {
                utterance_id: self.utterance_id.clone(),
                index,
                time_ms: self.events[index].time_ms,
            });
        }
        if self.events.iter().filter(|e| e.kind == Kind::Final).count() > 1 {
            return Err(Error::DuplicateFinal {
                utterance_id: self.utterance_id.clone(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase", deny_unknown_fields)]
enum Record {
    Reference {
        utterance_id: String,
        text: String,
    },
    Event {
        utterance_id: String,
        time_ms: u64,
        origin: Origin,
        kind: Kind,
        text: String,
    },
}

pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<UtteranceLog>> {
    let path = path.as_ref();
    parse_log(BufReader::new(File::open(path)?), path)
}

/// Parses and validates a log; `origin` only labels error messages.
pub fn parse_log(reader: impl BufRead, origin: &Path) -> Result<Vec<UtteranceLog>> {
    let mut logs: Vec<UtteranceLog> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let record: Record = serde_json::from_str(trimmed).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let id = match &record {
            Record::Reference { utterance_id, .. } | Record::Event { utterance_id, .. } => utterance_id,
        };
        let pos = *index.entry(id.clone()).or_insert_with(|| {
            logs.push(UtteranceLog::new(id.clone()));
            logs.len() - 1
        });
        let log = &mut logs[pos];
        match record {
            Record::Reference { text, utterance_id } => {
                if log.reference.is_some() {
                    return Err(Error::DuplicateReference { utterance_id });
                }
                log.reference = Some(text.split_whitespace().map(str::to_owned).collect());
            }
            Record::Event {
                time_ms,
                origin,
                kind,
                text,
                ..
            } => log.events.push(ResultEvent::new(time_ms, origin, kind, text)),
        }
    }
    for log in &logs {
        log.validate()?;
    }
    Ok(logs)
}

pub fn write_log(logs: &[UtteranceLog], path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_log_to(&mut out, logs)?;
    out.flush()?;
    Ok(())
}

pub fn write_log_to(mut out: impl Write, logs: &[UtteranceLog]) -> Result<()> {
    for log in logs {
        if let Some(words) = &log.reference {
            let record = Record::Reference {
                utterance_id: log.utterance_id.clone(),
                text: words.join(" "),
            };
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
        for event in &log.events {
            let record = Record::Event {
                utterance_id: log.utterance_id.clone(),
                time_ms: event.time_ms,
                origin: event.origin,
                kind: event.kind,
                text: event.text.clone(),
            };
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Reference transcripts: one utterance per line, optionally `id<TAB>words`.
/// Lines without an id get `utt-NNNN` by position.
pub fn read_references(path: impl AsRef<Path>) -> Result<Vec<(String, Vec<String>)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut refs = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (id, text) = match line.split_once('\t') {
            Some((id, text)) => (id.trim().to_owned(), text),
            None => (format!("utt-{:04}", refs.len()), line.as_str()),
        };
        refs.push((id, text.split_whitespace().map(str::to_owned).collect()));
    }
    Ok(refs)
}
