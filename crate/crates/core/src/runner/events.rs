use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::EvalPoint;

/// One line of a trial's `events.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Event {
    /// Graph in force from this episode barrier on; only emitted on change.
    Graph {
        episode: u64,
        step: u64,
        edges: Vec<(usize, usize)>,
    },
    Eval(EvalPoint),
}

pub fn write_event<W: Write>(out: &mut W, event: &Event) -> Result<()> {
    serde_json::to_writer(&mut *out, event)?;
    out.write_all(b"\n").map_err(|e| Error::io("events.jsonl", e))
}

pub fn parse_events(text: &str) -> Result<Vec<Event>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(i + 1, e.to_string())))
        .collect()
}

pub fn eval_points(events: &[Event]) -> Vec<EvalPoint> {
    events
        .iter()
        .filter_map(|e| match e {
            Event::Eval(p) => Some(p.clone()),
            _ => None,
        })
        .collect()
}

/// Row of `share_log.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareLogRow {
    pub episode: u64,
    pub step: u64,
    pub sender: usize,
    pub receiver: usize,
    pub count: usize,
}
