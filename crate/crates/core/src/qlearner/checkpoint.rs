//! Text dump of agent parameters and optimizer state.
//!
//! ```text
//! groupcraft-checkpoint 1
//! widths 4 64 64 3
//! adam_step 10
//! gradient_steps 10
//! env_steps 42
//! tensor online 0 weights
//! <fan_in lines of fan_out values>
//! tensor online 0 bias
//! <one line of fan_out values>
//! ...
//! ```
//!
//! Tensors appear for the groups `online`, `target`, `adam_m`, `adam_v` in that
//! order, layer by layer, weights before bias. Values use the shortest
//! representation that round-trips, so a dump restores bit-for-bit. The replay
//! buffer is not part of a checkpoint.

use std::fmt::Write as _;

use super::agent::{DqnAgent, Scalar};
use super::mlp::Mlp;
use crate::error::{Error, Result};

const HEADER: &str = "groupcraft-checkpoint 1";
const GROUPS: [&str; 4] = ["online", "target", "adam_m", "adam_v"];
/// Refuse absurd layer widths from untrusted input.
const MAX_WIDTH: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub online: Mlp<Scalar>,
    pub target: Mlp<Scalar>,
    pub adam_m: Mlp<Scalar>,
    pub adam_v: Mlp<Scalar>,
    pub adam_step: u64,
    pub gradient_steps: u64,
    pub env_steps: u64,
}

impl Checkpoint {
    pub fn capture(agent: &DqnAgent) -> Self {
        Checkpoint {
            online: agent.online.clone(),
            target: agent.target.clone(),
            adam_m: agent.optimizer.first_moment.clone(),
            adam_v: agent.optimizer.second_moment.clone(),
            adam_step: agent.optimizer.step,
            gradient_steps: agent.gradient_steps,
            env_steps: agent.env_steps,
        }
    }

    pub fn restore_into(&self, agent: &mut DqnAgent) -> Result<()> {
        if self.online.widths() != agent.online.widths() {
            return Err(Error::invalid(format!(
                "checkpoint widths {:?} do not match agent {:?}",
                self.online.widths(),
                agent.online.widths()
            )));
        }
        agent.online = self.online.clone();
        agent.target = self.target.clone();
        agent.optimizer.first_moment = self.adam_m.clone();
        agent.optimizer.second_moment = self.adam_v.clone();
        agent.optimizer.step = self.adam_step;
        agent.gradient_steps = self.gradient_steps;
        agent.env_steps = self.env_steps;
        Ok(())
    }

    fn groups(&self) -> [&Mlp<Scalar>; 4] {
        [&self.online, &self.target, &self.adam_m, &self.adam_v]
    }

    pub fn write(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{HEADER}").unwrap();
        let widths: Vec<String> = self.online.widths().iter().map(|w| w.to_string()).collect();
        writeln!(out, "widths {}", widths.join(" ")).unwrap();
        writeln!(out, "adam_step {}", self.adam_step).unwrap();
        writeln!(out, "gradient_steps {}", self.gradient_steps).unwrap();
        writeln!(out, "env_steps {}", self.env_steps).unwrap();
        for (name, net) in GROUPS.iter().zip(self.groups()) {
            for (i, layer) in net.layers.iter().enumerate() {
                writeln!(out, "tensor {name} {i} weights").unwrap();
                for row in layer.weights.rows() {
                    let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                    writeln!(out, "{}", vals.join(" ")).unwrap();
                }
                writeln!(out, "tensor {name} {i} bias").unwrap();
                let vals: Vec<String> = layer.bias.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{}", vals.join(" ")).unwrap();
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("unexpected end of checkpoint, wanted {what}")))
        };
        let (n, l) = next("header")?;
        if l != HEADER {
            return Err(Error::parse(n, format!("expected header {HEADER:?}")));
        }
        let (n, l) = next("widths")?;
        let widths: Vec<usize> = match l.strip_prefix("widths ") {
            Some(rest) => rest
                .split_whitespace()
                .map(|w| w.parse().map_err(|_| Error::parse(n, format!("bad width {w:?}"))))
                .collect::<Result<_>>()?,
            None => return Err(Error::parse(n, "expected widths")),
        };
        if widths.len() < 2 || widths.iter().any(|&w| w == 0 || w > MAX_WIDTH) {
            return Err(Error::parse(n, "widths must list at least two positive sizes"));
        }
        let mut counter = |key: &str| -> Result<u64> {
            let (n, l) = next(key)?;
            l.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .and_then(|r| r.parse().ok())
                .ok_or_else(|| Error::parse(n, format!("expected {key} <u64>")))
        };
        let adam_step = counter("adam_step")?;
        let gradient_steps = counter("gradient_steps")?;
        let env_steps = counter("env_steps")?;

        let mut nets = Vec::with_capacity(4);
        for name in GROUPS {
            let mut net = Mlp::<Scalar>::zeros(&widths);
            for (i, layer) in net.layers.iter_mut().enumerate() {
                let (fan_in, fan_out) = layer.weights.dim();
                for (part, rows) in [("weights", fan_in), ("bias", 1)] {
                    let (n, l) = next("tensor header")?;
                    if l != format!("tensor {name} {i} {part}") {
                        return Err(Error::parse(n, format!("expected tensor {name} {i} {part}")));
                    }
                    for r in 0..rows {
                        let (n, l) = next("tensor row")?;
                        let mut count = 0;
                        for (c, tok) in l.split_whitespace().enumerate() {
                            if c >= fan_out {
                                return Err(Error::parse(n, "too many values in row"));
                            }
                            let v: Scalar = tok
                                .parse()
                                .map_err(|_| Error::parse(n, format!("bad value {tok:?}")))?;
                            if !v.is_finite() {
                                return Err(Error::parse(n, "non-finite parameter"));
                            }
                            if part == "weights" {
                                layer.weights[[r, c]] = v;
                            } else {
                                layer.bias[c] = v;
                            }
                            count += 1;
                        }
                        if count != fan_out {
                            return Err(Error::parse(n, format!("expected {fan_out} values, got {count}")));
                        }
                    }
                }
            }
            nets.push(net);
        }
        if let Some((n, l)) = lines.find(|(_, l)| !l.is_empty()) {
            return Err(Error::parse(n, format!("trailing content {l:?}")));
        }
        let mut it = nets.into_iter();
        Ok(Checkpoint {
            online: it.next().unwrap(),
            target: it.next().unwrap(),
            adam_m: it.next().unwrap(),
            adam_v: it.next().unwrap(),
            adam_step,
            gradient_steps,
            env_steps,
        })
    }
}
