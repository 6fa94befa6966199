use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{
    conformity, diversity, group_diversity, group_success, intra_alignment, reward_curves,
    success_times, volatility, BufferSnapshot, EvalPoint,
};
use crate::error::Result;

/// One value in the long-format metric table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub trial: u64,
    pub step: u64,
    pub metric: String,
    /// `group` or `agent<k>`.
    pub agent_or_group: String,
    pub value: f64,
}

fn row(trial: u64, step: u64, metric: &str, who: String, value: f64) -> MetricRow {
    MetricRow {
        trial,
        step,
        metric: metric.to_string(),
        agent_or_group: who,
        value,
    }
}

fn group() -> String {
    "group".to_string()
}

fn agent(k: usize) -> String {
    format!("agent{k}")
}

/// Accumulates metric rows while a trial runs.
#[derive(Clone, Debug, Default)]
pub struct MetricTracker {
    trial: u64,
    rows: Vec<MetricRow>,
    evals: Vec<EvalPoint>,
    changes: Vec<u64>,
}

impl MetricTracker {
    pub fn new(trial: u64) -> Self {
        MetricTracker {
            trial,
            ..Default::default()
        }
    }

    pub fn rows(&self) -> &[MetricRow] {
        &self.rows
    }

    pub fn evals(&self) -> &[EvalPoint] {
        &self.evals
    }

    pub fn record_eval(&mut self, point: &EvalPoint) -> Result<()> {
        let (t, s) = (self.trial, point.step);
        for (k, a) in point.agents.iter().enumerate() {
            self.rows.push(row(t, s, "return", agent(k), a.normalized_return));
        }
        let best = point.agents.iter().map(|a| a.normalized_return).fold(f64::NEG_INFINITY, f64::max);
        let mean = point.agents.iter().map(|a| a.normalized_return).sum::<f64>() / point.agents.len() as f64;
        self.rows.push(row(t, s, "reward_max", group(), best));
        self.rows.push(row(t, s, "reward_mean", group(), mean));
        self.rows.push(row(t, s, "conformity", group(), conformity(point)?));
        if self.changes.is_empty() {
            self.changes = vec![0; point.agents.len()];
        } else {
            let prev = self.evals.last().unwrap();
            for (k, a) in point.agents.iter().enumerate() {
                if prev.agents[k].trajectory != a.trajectory {
                    self.changes[k] += 1;
                }
            }
        }
        for (k, &v) in self.changes.iter().enumerate() {
            self.rows.push(row(t, s, "volatility", agent(k), v as f64));
        }
        self.evals.push(point.clone());
        Ok(())
    }

    pub fn record_snapshot(&mut self, snap: &BufferSnapshot) {
        let (t, s) = (self.trial, snap.step);
        for (k, b) in snap.buffers.iter().enumerate() {
            self.rows.push(row(t, s, "diversity", agent(k), diversity(b) as f64));
        }
        self.rows.push(row(t, s, "group_diversity", group(), group_diversity(snap) as f64));
        if let Ok(a) = intra_alignment(snap) {
            self.rows.push(row(t, s, "intra_alignment", group(), a));
        }
    }

    pub fn finish(mut self, t_train: u64) -> Result<Vec<MetricRow>> {
        let success = group_success(&self.evals)?;
        self.rows.extend(summary_rows(self.trial, &self.evals, t_train, success));
        Ok(self.rows)
    }
}

fn summary_rows(trial: u64, evals: &[EvalPoint], t_train: u64, success: bool) -> Vec<MetricRow> {
    let times = success_times(evals, t_train);
    vec![
        row(trial, t_train, "group_success", group(), f64::from(u8::from(success))),
        row(trial, t_train, "time_first_success", group(), times.first as f64),
        row(trial, t_train, "time_all_success", group(), times.all as f64),
        row(trial, t_train, "spread_time", group(), times.spread as f64),
    ]
}

/// Recomputes the full metric table of a finished trial from its records.
/// Produces exactly the rows [`MetricTracker`] emits online when evaluations
/// and snapshots were recorded in step order, evaluation first.
pub fn trial_metrics(
    trial: u64,
    evals: &[EvalPoint],
    snapshots: &[BufferSnapshot],
    t_train: u64,
) -> Result<Vec<MetricRow>> {
    let mut rows = Vec::new();
    let curves = reward_curves(evals);
    let k = evals.first().map_or(0, |p| p.agents.len());
    let vol: Vec<Vec<u64>> = (0..k)
        .map(|a| {
            let series: Vec<&[u32]> = evals.iter().map(|p| p.agents[a].trajectory.as_slice()).collect();
            if series.len() >= 2 { volatility(&series) } else { Ok(vec![0; series.len()]) }
        })
        .collect::<Result<_>>()?;

    let mut snaps = snapshots.iter().peekable();
    let mut emit_snapshots_before = |rows: &mut Vec<MetricRow>, step: Option<u64>| {
        while let Some(s) = snaps.next_if(|s| step.is_none_or(|st| s.step <= st)) {
            for (a, b) in s.buffers.iter().enumerate() {
                rows.push(row(trial, s.step, "diversity", agent(a), diversity(b) as f64));
            }
            rows.push(row(trial, s.step, "group_diversity", group(), group_diversity(s) as f64));
            if let Ok(v) = intra_alignment(s) {
                rows.push(row(trial, s.step, "intra_alignment", group(), v));
            }
        }
    };
    for (i, p) in evals.iter().enumerate() {
        emit_snapshots_before(&mut rows, Some(p.step.saturating_sub(1)));
        for (a, e) in p.agents.iter().enumerate() {
            rows.push(row(trial, p.step, "return", agent(a), e.normalized_return));
        }
        let (_, best, mean) = curves[i];
        rows.push(row(trial, p.step, "reward_max", group(), best));
        rows.push(row(trial, p.step, "reward_mean", group(), mean));
        rows.push(row(trial, p.step, "conformity", group(), conformity(p)?));
        for (a, v) in vol.iter().enumerate() {
            rows.push(row(trial, p.step, "volatility", agent(a), v[i] as f64));
        }
        emit_snapshots_before(&mut rows, Some(p.step));
    }
    emit_snapshots_before(&mut rows, None);
    rows.extend(summary_rows(trial, evals, t_train, group_success(evals)?));
    Ok(rows)
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_metrics_csv<R: Read>(input: R) -> Result<Vec<MetricRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::AgentEval;

    fn evals() -> Vec<EvalPoint> {
        (1..=4)
            .map(|i| EvalPoint {
                step: i * 100,
                agents: (0..3)
                    .map(|k| AgentEval {
                        trajectory: vec![(i as u32 * k) % 3],
                        normalized_return: if i >= 3 && k == 1 { 1.0 } else { 0.25 * k as f64 },
                    })
                    .collect(),
            })
            .collect()
    }

    fn snaps() -> Vec<BufferSnapshot> {
        (1..=4)
            .map(|i| BufferSnapshot {
                step: i * 100,
                buffers: (0..3).map(|k| (0..i as u128 + k).collect()).collect(),
            })
            .collect()
    }

    #[test]
    fn online_matches_offline() {
        let mut tr = MetricTracker::new(7);
        for (e, s) in evals().iter().zip(snaps().iter()) {
            tr.record_eval(e).unwrap();
            tr.record_snapshot(s);
        }
        let online = tr.finish(1000).unwrap();
        let offline = trial_metrics(7, &evals(), &snaps(), 1000).unwrap();
        assert_eq!(online, offline);
        let last = online.last().unwrap();
        assert_eq!((last.metric.as_str(), last.value), ("spread_time", 700.0));
        assert!(online.iter().any(|r| r.metric == "group_success" && r.value == 1.0));
    }

    #[test]
    fn csv_roundtrip() {
        let rows = trial_metrics(0, &evals(), &snaps(), 1000).unwrap();
        let mut bytes = Vec::new();
        write_metrics_csv(&rows, &mut bytes).unwrap();
        assert!(bytes.starts_with(b"trial,step,metric,agent_or_group,value\n"));
        assert_eq!(read_metrics_csv(bytes.as_slice()).unwrap(), rows);
    }
}
