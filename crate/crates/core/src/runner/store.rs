//! On-disk layout of an experiment:
//!
//! ```text
//! <out>/config.toml
//! <out>/summary.json, summary.csv, series.csv
//! <out>/trial-000/metrics.csv      long-format metric table
//! <out>/trial-000/events.jsonl     graph changes and evaluations
//! <out>/trial-000/share_log.csv    every (sender, receiver, count) delivery
//! <out>/trial-000/snapshots.bin    buffer fingerprints at evaluation points
//! <out>/trial-000/meta.json        seed, config hash, timing, completion flag
//! ```

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::events::{write_event, Event, ShareLogRow};
use super::trial::Recorder;
use crate::error::{Error, Result};
use crate::metrics::{BufferSnapshot, EvalPoint};
use crate::sharing::ShareRecord;
use crate::topology::SocialGraph;

pub fn trial_dir(root: &Path, trial: u64) -> PathBuf {
    root.join(format!("trial-{trial:03}"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialMeta {
    pub trial: u64,
    pub seed: u64,
    pub config_hash: String,
    pub complete: bool,
    pub error: Option<String>,
    pub episodes: u64,
    pub shared_transitions: u64,
    pub wall_secs: f64,
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Streams trial records into a trial directory.
pub struct DirRecorder {
    dir: PathBuf,
    events: BufWriter<File>,
    shares: csv::Writer<BufWriter<File>>,
    snapshots: BufWriter<File>,
    scratch: Vec<u8>,
}

impl DirRecorder {
    pub fn create(dir: &Path) -> Result<Self> {
        create_dir(dir)?;
        Ok(DirRecorder {
            dir: dir.to_path_buf(),
            events: create(&dir.join("events.jsonl"))?,
            shares: csv::Writer::from_writer(create(&dir.join("share_log.csv"))?),
            snapshots: create(&dir.join("snapshots.bin"))?,
            scratch: Vec::new(),
        })
    }

    pub fn flush(&mut self) -> Result<()> {
        let dir = &self.dir;
        self.events.flush().map_err(|e| Error::io(dir.join("events.jsonl"), e))?;
        self.shares.flush().map_err(|e| Error::io(dir.join("share_log.csv"), e))?;
        self.snapshots.flush().map_err(|e| Error::io(dir.join("snapshots.bin"), e))
    }
}

impl Recorder for DirRecorder {
    fn graph(&mut self, episode: u64, step: u64, graph: &SocialGraph) -> Result<()> {
        write_event(
            &mut self.events,
            &Event::Graph {
                episode,
                step,
                edges: graph.edges(),
            },
        )
    }

    fn shares(&mut self, episode: u64, step: u64, log: &[ShareRecord]) -> Result<()> {
        for r in log {
            self.shares.serialize(ShareLogRow {
                episode,
                step,
                sender: r.sender,
                receiver: r.receiver,
                count: r.count,
            })?;
        }
        Ok(())
    }

    fn eval(&mut self, point: &EvalPoint) -> Result<()> {
        write_event(&mut self.events, &Event::Eval(point.clone()))
    }

    fn snapshot(&mut self, snap: &BufferSnapshot) -> Result<()> {
        self.scratch.clear();
        snap.encode_into(&mut self.scratch);
        self.snapshots
            .write_all(&self.scratch)
            .map_err(|e| Error::io(self.dir.join("snapshots.bin"), e))
    }
}
