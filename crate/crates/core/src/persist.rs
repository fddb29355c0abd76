//! Append-only JSON-lines event log plus an occasional state snapshot.
//!
//! The log starts with a header record naming its format version; each
//! following line is `{"seq": n, "event": {...}}`. A final line without a
//! terminating newline is a torn write from a crash and is discarded; any
//! other unreadable line aborts recovery.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LOG_FORMAT_VERSION: u32 = 1;
const LOG_FILE: &str = "events.jsonl";
const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    rosetta_event_log: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct Record<E> {
    seq: u64,
    event: E,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SnapshotFile<S> {
    /// Sequence number of the last event folded into `state`.
    pub log_seq: u64,
    pub state: S,
}

/// Events read back from a log, in order.
#[derive(Debug)]
pub struct Replayed<E> {
    pub events: Vec<(u64, E)>,
    /// Line number (1-based) of each event, for error reporting.
    pub lines: Vec<usize>,
    pub torn_tail: bool,
}

pub struct EventLog {
    dir: PathBuf,
    out: BufWriter<File>,
}

impl std::fmt::Debug for EventLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EventLog").field("dir", &self.dir).finish()
    }
}

impl EventLog {
    /// Opens (creating if needed) the log in `dir` and reads back every
    /// complete event.
    pub fn open<E: DeserializeOwned>(dir: &Path) -> Result<(Self, Replayed<E>)> {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let path = dir.join(LOG_FILE);
        let replayed = if path.exists() {
            let text = fs::read_to_string(&path)?;
            let (replayed, keep) = parse_log(&text)?;
            if keep < text.len() {
                log::warn!("discarding torn final record of {}", path.display());
                let f = OpenOptions::new().write(true).open(&path)?;
                f.set_len(keep as u64)?;
                f.sync_all()?;
            }
            replayed
        } else {
            let mut f = File::create(&path)?;
            writeln!(f, "{}", serde_json::to_string(&Header { rosetta_event_log: LOG_FORMAT_VERSION })?)?;
            f.sync_all()?;
            Replayed { events: Vec::new(), lines: Vec::new(), torn_tail: false }
        };
        let file = OpenOptions::new().append(true).open(&path)?;
        Ok((EventLog { dir: dir.to_owned(), out: BufWriter::new(file) }, replayed))
    }

    /// Durably appends one event.
    pub fn append<E: Serialize>(&mut self, seq: u64, event: &E) -> Result<()> {
        let line = serde_json::to_string(&Record { seq, event })?;
        self.out.write_all(line.as_bytes())?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        self.out.get_ref().sync_data()?;
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes the snapshot atomically (temp file + rename).
    pub fn write_snapshot<S: Serialize>(&self, log_seq: u64, state: &S) -> Result<()> {
        write_snapshot(&self.dir, log_seq, state)
    }
}

pub fn write_snapshot<S: Serialize>(dir: &Path, log_seq: u64, state: &S) -> Result<()> {
    let tmp = dir.join(format!("{SNAPSHOT_FILE}.tmp"));
    {
        let mut f = BufWriter::new(File::create(&tmp)?);
        serde_json::to_writer(&mut f, &SnapshotFile { log_seq, state })?;
        f.flush()?;
        f.get_ref().sync_all()?;
    }
    fs::rename(&tmp, dir.join(SNAPSHOT_FILE))?;
    Ok(())
}

pub fn read_snapshot<S: DeserializeOwned>(dir: &Path) -> Result<Option<SnapshotFile<S>>> {
    let path = dir.join(SNAPSHOT_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path)?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| Error::Replay { line: 0, reason: format!("unreadable snapshot: {e}") })
}

/// Parses log text, returning the events and the byte length of the valid
/// prefix.
fn parse_log<E: DeserializeOwned>(text: &str) -> Result<(Replayed<E>, usize)> {
    let mut events = Vec::new();
    let mut lines = Vec::new();
    let mut offset = 0;
    let mut torn_tail = false;
    for (i, raw) in text.split_inclusive('\n').enumerate() {
        let line_no = i + 1;
        let complete = raw.ends_with('\n');
        let body = raw.trim_end_matches('\n');
        if i == 0 {
            let header: Header = serde_json::from_str(body)
                .map_err(|e| Error::Replay { line: 1, reason: format!("missing or malformed header: {e}") })?;
            if header.rosetta_event_log != LOG_FORMAT_VERSION {
                return Err(Error::Replay {
                    line: 1,
                    reason: format!("unsupported log format version {}", header.rosetta_event_log),
                });
            }
            if !complete {
                return Err(Error::Replay { line: 1, reason: "header is truncated".into() });
            }
        } else {
            match serde_json::from_str::<Record<E>>(body) {
                Ok(record) => {
                    if !complete {
                        // A parseable but unterminated tail still counts as torn:
                        // the writer never acknowledged it.
                        torn_tail = true;
                        break;
                    }
                    let expected = events.last().map_or(1, |(s, _): &(u64, E)| s + 1);
                    if record.seq != expected {
                        return Err(Error::Replay {
                            line: line_no,
                            reason: format!("expected sequence {expected}, found {}", record.seq),
                        });
                    }
                    events.push((record.seq, record.event));
                    lines.push(line_no);
                }
                Err(_) if !complete => {
                    torn_tail = true;
                    break;
                }
                Err(e) => return Err(Error::Replay { line: line_no, reason: e.to_string() }),
            }
        }
        offset += raw.len();
    }
    if text.is_empty() {
        return Err(Error::Replay { line: 1, reason: "empty log file".into() });
    }
    Ok((Replayed { events, lines, torn_tail }, offset))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    #[serde(tag = "type", rename_all = "kebab-case")]
    enum Ev {
        Put { key: String },
    }

    fn put(k: &str) -> Ev {
        Ev::Put { key: k.into() }
    }

    #[test]
    fn append_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        {
            let (mut log, r) = EventLog::open::<Ev>(dir.path()).unwrap();
            assert!(r.events.is_empty());
            log.append(1, &put("a")).unwrap();
            log.append(2, &put("b")).unwrap();
        }
        let (_, r) = EventLog::open::<Ev>(dir.path()).unwrap();
        assert_eq!(r.events, vec![(1, put("a")), (2, put("b"))]);
        assert!(!r.torn_tail);
    }

    #[test]
    fn torn_tail_is_dropped_and_truncated() {
        let dir = tempfile::tempdir().unwrap();
        {
            let (mut log, _) = EventLog::open::<Ev>(dir.path()).unwrap();
            log.append(1, &put("a")).unwrap();
        }
        let path = dir.path().join(LOG_FILE);
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        write!(f, "{{\"seq\":2,\"event\":{{\"type\":\"pu").unwrap();
        drop(f);
        let (mut log, r) = EventLog::open::<Ev>(dir.path()).unwrap();
        assert!(r.torn_tail);
        assert_eq!(r.events.len(), 1);
        log.append(2, &put("c")).unwrap();
        drop(log);
        let (_, r) = EventLog::open::<Ev>(dir.path()).unwrap();
        assert_eq!(r.events, vec![(1, put("a")), (2, put("c"))]);
    }

    #[test]
    fn unknown_records_abort() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(LOG_FILE);
        fs::write(&path, "{\"rosetta_event_log\":1}\n{\"seq\":1,\"event\":{\"type\":\"teleport\"}}\n").unwrap();
        let err = EventLog::open::<Ev>(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Replay { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn future_versions_abort() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(LOG_FILE), "{\"rosetta_event_log\":2}\n").unwrap();
        assert!(matches!(EventLog::open::<Ev>(dir.path()), Err(Error::Replay { line: 1, .. })));
    }

    #[test]
    fn sequence_gaps_abort() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join(LOG_FILE),
            "{\"rosetta_event_log\":1}\n{\"seq\":1,\"event\":{\"type\":\"put\",\"key\":\"a\"}}\n{\"seq\":3,\"event\":{\"type\":\"put\",\"key\":\"b\"}}\n",
        )
        .unwrap();
        assert!(matches!(EventLog::open::<Ev>(dir.path()), Err(Error::Replay { line: 3, .. })));
    }

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        assert!(read_snapshot::<Vec<u32>>(dir.path()).unwrap().is_none());
        write_snapshot(dir.path(), 7, &vec![1u32, 2, 3]).unwrap();
        let s = read_snapshot::<Vec<u32>>(dir.path()).unwrap().unwrap();
        assert_eq!(s.log_seq, 7);
        assert_eq!(s.state, vec![1, 2, 3]);
    }
}
