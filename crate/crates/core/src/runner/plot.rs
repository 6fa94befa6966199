//! Hand-written SVG charts and text tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::experiment::{Comparison, ExperimentSummary, SeriesRow, SweepCell};
use super::store;
use crate::error::{Error, Result};
use crate::stats::{format_cell, stars};

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(title)).unwrap();
}

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let widen = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = widen(x0, x1);
        let (y0, y1) = widen(y0, y1);
        Axes { x0, x1, y0, y1 }
    }

    fn x(&self, v: f64) -> f64 {
        PAD + (v - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn y(&self, v: f64) -> f64 {
        H - PAD - (v - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }

    fn draw(&self, out: &mut String, x_label: &str, y_label: &str) {
        let (l, r, t, b) = (PAD, W - PAD, PAD, H - PAD);
        writeln!(out, r#"<path d="M{l} {t}V{b}H{r}" fill="none" stroke="black"/>"#).unwrap();
        for i in 0..=4 {
            let f = f64::from(i) / 4.0;
            let (xv, yv) = (self.x0 + f * (self.x1 - self.x0), self.y0 + f * (self.y1 - self.y0));
            let (px, py) = (self.x(xv), self.y(yv));
            writeln!(out, r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, b + 16.0, tick(xv)).unwrap();
            writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, l - 6.0, py + 4.0, tick(yv)).unwrap();
        }
        writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 16.0, esc(x_label)).unwrap();
        writeln!(
            out,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            esc(y_label)
        )
        .unwrap();
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 {
        format!("{:.0}", v)
    } else {
        format!("{:.2}", v)
    }
}

/// Mean line with a shaded CI band per series; points are `(x, mean, half_width)`.
pub fn line_chart(title: &str, y_label: &str, series: &[(String, Vec<(f64, f64, f64)>)]) -> String {
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, m, h) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(m - h);
        y1 = y1.max(m + h);
    }
    let ax = Axes::new(x0, x1, y0.min(0.0), y1);
    let mut out = String::new();
    header(&mut out, title);
    ax.draw(&mut out, "training step", y_label);
    for (i, (label, p)) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let upper: Vec<String> = p.iter().map(|&(x, m, h)| format!("{:.1},{:.1}", ax.x(x), ax.y(m + h))).collect();
        let lower: Vec<String> = p.iter().rev().map(|&(x, m, h)| format!("{:.1},{:.1}", ax.x(x), ax.y(m - h))).collect();
        writeln!(out, r#"<polygon points="{} {}" fill="{c}" fill-opacity="0.2" stroke="none"/>"#, upper.join(" "), lower.join(" ")).unwrap();
        let line: Vec<String> = p.iter().map(|&(x, m, _)| format!("{:.1},{:.1}", ax.x(x), ax.y(m))).collect();
        writeln!(out, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"/>"#, line.join(" ")).unwrap();
        let ly = PAD + 14.0 * i as f64;
        writeln!(out, r#"<text x="{}" y="{ly:.1}" fill="{c}">{}</text>"#, W - PAD + 4.0 - 120.0, esc(label)).unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Bars with CI whiskers and significance brackets `(i, j, stars)`.
pub fn bar_chart(title: &str, y_label: &str, bars: &[(String, f64, f64)], brackets: &[(usize, usize, String)]) -> String {
    let top = bars.iter().map(|b| b.1 + b.2).fold(0.0f64, f64::max).max(1e-9);
    let ax = Axes::new(0.0, bars.len() as f64, 0.0, top * (1.15 + 0.08 * brackets.len() as f64));
    let mut out = String::new();
    header(&mut out, title);
    let (l, b) = (PAD, H - PAD);
    writeln!(out, r#"<path d="M{l} {PAD}V{b}H{}" fill="none" stroke="black"/>"#, W - PAD).unwrap();
    writeln!(out, r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">{}</text>"#, H / 2.0, H / 2.0, esc(y_label)).unwrap();
    let slot = (W - 2.0 * PAD) / bars.len().max(1) as f64;
    let center = |i: usize| PAD + slot * (i as f64 + 0.5);
    for (i, (label, mean, half)) in bars.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let (x, y) = (center(i) - slot * 0.3, ax.y(*mean));
        writeln!(out, r#"<rect x="{x:.1}" y="{y:.1}" width="{:.1}" height="{:.1}" fill="{c}"/>"#, slot * 0.6, b - y).unwrap();
        writeln!(out, r#"<path d="M{0:.1} {1:.1}V{2:.1}" stroke="black"/>"#, center(i), ax.y(mean + half), ax.y(mean - half)).unwrap();
        writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, center(i), b + 16.0, esc(label)).unwrap();
    }
    for (n, (i, j, s)) in brackets.iter().enumerate() {
        let y = ax.y(top * (1.08 + 0.08 * n as f64));
        writeln!(out, r#"<path d="M{:.1} {:.1}V{y:.1}H{:.1}V{:.1}" fill="none" stroke="black"/>"#, center(*i), y + 6.0, center(*j), y + 6.0).unwrap();
        writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (center(*i) + center(*j)) / 2.0, y - 2.0, esc(s)).unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Grid of values in `[0, 1]` with rows `ys` and columns `xs`.
pub fn heatmap(title: &str, x_label: &str, y_label: &str, xs: &[String], ys: &[String], values: &[Vec<f64>]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let cw = (W - 2.0 * PAD) / xs.len().max(1) as f64;
    let ch = (H - 2.0 * PAD) / ys.len().max(1) as f64;
    for (r, row) in values.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let shade = (255.0 * (1.0 - v.clamp(0.0, 1.0))).round() as u8;
            let (x, y) = (PAD + c as f64 * cw, PAD + r as f64 * ch);
            writeln!(out, r#"<rect x="{x:.1}" y="{y:.1}" width="{cw:.1}" height="{ch:.1}" fill="rgb({shade},{shade},255)" stroke="white"/>"#).unwrap();
            writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{v:.2}</text>"#, x + cw / 2.0, y + ch / 2.0 + 4.0).unwrap();
        }
    }
    for (c, x) in xs.iter().enumerate() {
        writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, PAD + (c as f64 + 0.5) * cw, H - PAD + 16.0, esc(x)).unwrap();
    }
    for (r, y) in ys.iter().enumerate() {
        writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, PAD - 6.0, PAD + (r as f64 + 0.5) * ch + 4.0, esc(y)).unwrap();
    }
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 16.0, esc(x_label)).unwrap();
    writeln!(out, r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">{}</text>"#, H / 2.0, H / 2.0, esc(y_label)).unwrap();
    out.push_str("</svg>\n");
    out
}

pub fn read_series(dir: &Path) -> Result<Vec<SeriesRow>> {
    let bytes = store::read_file(&dir.join("series.csv"))?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Writes one line chart per metric found in the experiments' `series.csv`
/// into `out`, overlaying experiments. Returns notices for skipped metrics.
pub fn render_experiments(dirs: &[&Path], labels: &[String], out: &Path) -> Result<Vec<String>> {
    store::create_dir(out)?;
    let mut by_metric: BTreeMap<String, Vec<(String, Vec<(f64, f64, f64)>)>> = BTreeMap::new();
    for (dir, label) in dirs.iter().zip(labels) {
        let mut per: BTreeMap<String, Vec<(f64, f64, f64)>> = BTreeMap::new();
        for r in read_series(dir)? {
            per.entry(r.metric).or_default().push((r.step as f64, r.mean, r.ci_half));
        }
        for (m, pts) in per {
            by_metric.entry(m).or_default().push((label.clone(), pts));
        }
    }
    let mut notices = Vec::new();
    for m in ["reward_max", "reward_mean", "conformity", "volatility_mean", "diversity_mean", "group_diversity", "intra_alignment"] {
        match by_metric.get(m) {
            Some(s) if s.iter().any(|(_, p)| !p.is_empty()) => {
                store::write_file(&out.join(format!("{m}.svg")), line_chart(m, m, s).as_bytes())?;
            }
            _ => notices.push(format!("no data for {m}; chart omitted")),
        }
    }
    Ok(notices)
}

fn fmt_p(p: f64) -> String {
    if p < 1e-4 { format!("{p:.1e}") } else { format!("{p:.4}") }
}

/// `(mean, std)` table of selected scalars, one row per condition.
pub fn summary_table(summaries: &[ExperimentSummary], metrics: &[&str]) -> String {
    let mut out = String::new();
    write!(out, "{:<20}", "condition").unwrap();
    for m in metrics {
        write!(out, " {:>22}", m).unwrap();
    }
    out.push('\n');
    for s in summaries {
        write!(out, "{:<20}", s.name).unwrap();
        for m in metrics {
            write!(out, " {:>22}", format_cell(&s.values(m))).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Writes `compare.csv`, `compare.txt` and `compare.svg` for a comparison.
pub fn write_comparison(cmp: &Comparison, summaries: &[ExperimentSummary], out: &Path) -> Result<()> {
    store::create_dir(out)?;
    let mut w = csv::Writer::from_writer(store::create(&out.join("compare.csv"))?);
    w.write_record(["a", "b", "mean_diff", "q", "p", "significant", "stars"])?;
    for t in &cmp.tukey {
        w.write_record([
            t.a.clone(),
            t.b.clone(),
            t.mean_diff.to_string(),
            t.q.to_string(),
            t.p.to_string(),
            t.significant.to_string(),
            stars(t.p).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(out.join("compare.csv"), e))?;

    let mut columns = vec![cmp.metric.as_str()];
    for m in ["group_success", "reward_max_final", "time_first_success", "spread_time"] {
        if m != cmp.metric {
            columns.push(m);
        }
    }
    let mut text = summary_table(summaries, &columns);
    match &cmp.anova {
        Some(a) => writeln!(text, "\nANOVA on {}: F({}, {}) = {:.4}, p = {} {}", cmp.metric, a.df_between, a.df_within, a.f, fmt_p(a.p), stars(a.p)).unwrap(),
        None => writeln!(text, "\nANOVA skipped: every condition needs >= 2 trials").unwrap(),
    }
    for t in &cmp.tukey {
        writeln!(text, "{} vs {}: diff {:+.4}, q = {:.3}, p = {} {}", t.a, t.b, t.mean_diff, t.q, fmt_p(t.p), stars(t.p)).unwrap();
    }
    store::write_file(&out.join("compare.txt"), text.as_bytes())?;

    let index = |name: &str| cmp.groups.iter().position(|(n, _)| n == name).unwrap();
    let bars: Vec<(String, f64, f64)> = cmp
        .groups
        .iter()
        .map(|(n, v)| {
            let mean = v.iter().sum::<f64>() / v.len().max(1) as f64;
            let half = if v.len() >= 2 { crate::stats::mean_ci(v, 0.95).map(|c| c.1).unwrap_or(0.0) } else { 0.0 };
            (n.clone(), mean, half)
        })
        .collect();
    let brackets: Vec<(usize, usize, String)> = cmp
        .tukey
        .iter()
        .filter(|t| !stars(t.p).is_empty())
        .map(|t| (index(&t.a), index(&t.b), stars(t.p).to_string()))
        .collect();
    store::write_file(&out.join("compare.svg"), bar_chart(&cmp.metric, &cmp.metric, &bars, &brackets).as_bytes())
}

pub fn sweep_heatmap(cells: &[SweepCell]) -> String {
    let mut lens: Vec<usize> = cells.iter().map(|c| c.batch_len).collect();
    lens.dedup();
    let mut probs: Vec<f64> = cells.iter().map(|c| c.probability).collect();
    probs.sort_by(f64::total_cmp);
    probs.dedup();
    let values: Vec<Vec<f64>> = lens
        .iter()
        .map(|&l| {
            probs
                .iter()
                .map(|&p| cells.iter().find(|c| c.batch_len == l && c.probability == p).map_or(0.0, |c| c.group_success))
                .collect()
        })
        .collect();
    heatmap(
        "group success",
        "share probability",
        "shared batch length",
        &probs.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        &lens.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
        &values,
    )
}
