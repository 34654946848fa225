//! Append-only session log, one JSON record per line.
//!
//! Records are appended and synced before the change they describe is
//! applied, so a crash loses at most a request that was never acknowledged.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::session::SessionSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    Create {
        session: String,
        spec: SessionSpec,
        at_ms: u64,
    },
    Label {
        session: String,
        index: usize,
        label: u8,
        at_ms: u64,
    },
}

#[derive(Debug)]
pub struct Wal {
    file: Option<(PathBuf, File)>,
}

impl Wal {
    /// A log that keeps nothing.
    pub fn disabled() -> Self {
        Wal { file: None }
    }

    pub fn open(path: &Path) -> Result<Self, ServiceError> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Wal {
            file: Some((path.to_path_buf(), file)),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.file.as_ref().map(|(p, _)| p.as_path())
    }

    pub fn append(&mut self, rec: &Record) -> std::io::Result<()> {
        let Some((_, file)) = self.file.as_mut() else {
            return Ok(());
        };
        let mut line = serde_json::to_vec(rec)?;
        line.push(b'\n');
        file.write_all(&line)?;
        file.sync_data()
    }
}

/// Reads every record of the log at `path`. A torn final line, left by a
/// crash mid-append, is dropped with a warning; a bad line elsewhere is an
/// error.
pub fn read_log(path: &Path) -> Result<Vec<Record>, ServiceError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let lines: Vec<String> = BufReader::new(File::open(path)?)
        .lines()
        .collect::<Result<_, _>>()?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut out = Vec::with_capacity(lines.len());
    for (k, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => out.push(r),
            Err(e) if Some(k) == last => {
                log::warn!("dropping torn final record on line {}: {e}", k + 1);
            }
            Err(e) => {
                return Err(ServiceError::Replay {
                    line: k + 1,
                    msg: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}
