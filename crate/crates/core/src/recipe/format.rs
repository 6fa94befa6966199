//! Line-oriented text format for tasks.
//!
//! ```text
//! groupcraft-task 1
//! name single-path-1
//! horizon 2
//! optimal_return 1
//! optimal_trajectory 3
//! element 0 a1 A 0 0 0
//! element 1 a2 A 0 0 0
//! element 2 a3 A 0 0 0
//! element 3 A1 A 1 1 1
//! recipe 0 1 3
//! initial 0 1 2
//! ```
//!
//! `element` fields are `id name path rank level reward`; elements must be
//! listed in id order. `recipe a b z` crafts `z` from the unordered pair
//! `(a, b)`. Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;

use super::{Element, ElementId, RecipeBook, TaskSpec};
use crate::error::{Error, Result};

const HEADER: &str = "groupcraft-task 1";

pub fn write_task(task: &TaskSpec) -> String {
    let mut out = String::new();
    let book = &task.book;
    writeln!(out, "{HEADER}").unwrap();
    writeln!(out, "name {}", task.name).unwrap();
    writeln!(out, "horizon {}", task.horizon).unwrap();
    writeln!(out, "optimal_return {}", task.optimal_return).unwrap();
    write!(out, "optimal_trajectory").unwrap();
    for id in &task.optimal_trajectory {
        write!(out, " {id}").unwrap();
    }
    out.push('\n');
    for e in book.elements() {
        writeln!(
            out,
            "element {} {} {} {} {} {}",
            e.id,
            e.name,
            e.path,
            e.rank,
            e.level,
            book.reward(e.id)
        )
        .unwrap();
    }
    for (a, b, z) in book.recipes() {
        writeln!(out, "recipe {a} {b} {z}").unwrap();
    }
    write!(out, "initial").unwrap();
    for id in book.initial_set() {
        write!(out, " {id}").unwrap();
    }
    out.push('\n');
    out
}

fn field<'a>(
    parts: &mut impl Iterator<Item = &'a str>,
    line: usize,
    what: &str,
) -> Result<&'a str> {
    parts
        .next()
        .ok_or_else(|| Error::parse(line, format!("missing {what}")))
}

fn num<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("bad {what} {s:?}")))
}

fn ids<'a>(parts: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec<ElementId>> {
    parts.map(|p| num(p, line, "element id").map(ElementId)).collect()
}

pub fn parse_task(text: &str) -> Result<TaskSpec> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, l)) if l == HEADER => {}
        Some((n, _)) => return Err(Error::parse(n, format!("expected header {HEADER:?}"))),
        None => return Err(Error::parse(0, "empty task file")),
    }

    let mut name = None;
    let mut horizon = None;
    let mut optimal_return = None;
    let mut trajectory = Vec::new();
    let mut elements = Vec::new();
    let mut rewards = Vec::new();
    let mut recipes = Vec::new();
    let mut initial = None;

    for (n, line) in lines {
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or_default();
        match key {
            "name" => name = Some(field(&mut parts, n, "name")?.to_string()),
            "horizon" => horizon = Some(num::<u32>(field(&mut parts, n, "horizon")?, n, "horizon")?),
            "optimal_return" => {
                let v: f64 = num(field(&mut parts, n, "value")?, n, "optimal return")?;
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::parse(n, "optimal return must be finite and >= 0"));
                }
                optimal_return = Some(v);
            }
            "optimal_trajectory" => trajectory = ids(&mut parts, n)?,
            "element" => {
                let id: u32 = num(field(&mut parts, n, "id")?, n, "id")?;
                if id as usize != elements.len() {
                    return Err(Error::parse(n, format!("element {id} out of order")));
                }
                let ename = field(&mut parts, n, "name")?.to_string();
                let path_s = field(&mut parts, n, "path")?;
                let mut chars = path_s.chars();
                let path = match (chars.next(), chars.next()) {
                    (Some(c), None) => c,
                    _ => return Err(Error::parse(n, format!("bad path label {path_s:?}"))),
                };
                let rank = num(field(&mut parts, n, "rank")?, n, "rank")?;
                let level = num(field(&mut parts, n, "level")?, n, "level")?;
                let reward: f64 = num(field(&mut parts, n, "reward")?, n, "reward")?;
                elements.push(Element {
                    id: ElementId(id),
                    name: ename,
                    path,
                    rank,
                    level,
                });
                rewards.push(reward);
            }
            "recipe" => {
                let r = ids(&mut parts, n)?;
                let [a, b, z] = r[..] else {
                    return Err(Error::parse(n, "recipe needs exactly three ids"));
                };
                recipes.push((a, b, z));
                continue;
            }
            "initial" => initial = Some(ids(&mut parts, n)?),
            other => return Err(Error::parse(n, format!("unknown directive {other:?}"))),
        }
        if parts.next().is_some() && key != "optimal_trajectory" && key != "initial" {
            return Err(Error::parse(n, "trailing fields"));
        }
    }

    let book = RecipeBook::new(
        elements,
        recipes,
        initial.ok_or_else(|| Error::parse(0, "missing initial set"))?,
        rewards,
    )?;
    let horizon = horizon.ok_or_else(|| Error::parse(0, "missing horizon"))?;
    if horizon % 2 != 0 {
        return Err(Error::invalid(format!("horizon {horizon} must be even")));
    }
    if let Some(bad) = trajectory.iter().find(|id| id.index() >= book.len()) {
        return Err(Error::UnknownElement(bad.0));
    }
    Ok(TaskSpec {
        name: name.ok_or_else(|| Error::parse(0, "missing name"))?,
        book,
        horizon,
        optimal_return: optimal_return.ok_or_else(|| Error::parse(0, "missing optimal_return"))?,
        optimal_trajectory: trajectory,
    })
}
