//! Text-only SVG line charts from metrics CSVs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

struct Table {
    stem: String,
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = rdr
        .headers()
        .with_context(|| format!("{}: line 1: unreadable header", path.display()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.first().map(String::as_str) != Some("step") {
        bail!(
            "{}: line 1: expected a metrics header starting with `step`",
            path.display()
        );
    }
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.with_context(|| format!("{}: line {line}: malformed row", path.display()))?;
        let mut row = Vec::with_capacity(rec.len());
        for cell in rec.iter() {
            let v: f64 = cell
                .trim()
                .parse()
                .with_context(|| format!("{}: line {line}: `{cell}` is not a number", path.display()))?;
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: line 2: no data rows", path.display());
    }
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(Table { stem, header, rows })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One chart: each series is `(legend, points)`.
pub fn render_svg(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{l}" y1="{t}" x2="{l}" y2="{b}" stroke="black"/>"#
    );
    for (v, y) in [(y0, b), (y1, t)] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{y}" text-anchor="end" font-family="sans-serif" font-size="10">{v:.4}</text>"#,
            l - 4.0
        );
    }
    for (v, x) in [(x0, l), (x1, r)] {
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">{v}</text>"#,
            b + 14.0
        );
    }
    for (k, (name, points)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let coords: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.3},{:.3}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = t + 14.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" fill="{color}" font-family="sans-serif" font-size="11">{}</text>"#,
            r - 120.0,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn run(inputs: &[PathBuf], out: &Path, metric: Option<&str>) -> Result<()> {
    let tables = inputs.iter().map(|p| read_table(p)).collect::<Result<Vec<_>>>()?;
    let metrics: Vec<String> = match metric {
        Some(m) => vec![m.to_owned()],
        None => {
            let mut names: Vec<String> = Vec::new();
            for t in &tables {
                for h in t.header.iter().skip(1) {
                    if !names.contains(h) {
                        names.push(h.clone());
                    }
                }
            }
            names
        }
    };
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for m in &metrics {
        let mut series = Vec::new();
        for t in &tables {
            let Some(col) = t.header.iter().position(|h| h == m) else {
                continue;
            };
            let pts = t
                .rows
                .iter()
                .filter_map(|r| {
                    let (x, y) = (*r.first()?, *r.get(col)?);
                    (x.is_finite() && y.is_finite()).then_some((x, y))
                })
                .collect();
            series.push((t.stem.clone(), pts));
        }
        if series.is_empty() {
            bail!("no input file has a `{m}` column");
        }
        let path = out.join(format!("{m}.svg"));
        fs::write(&path, render_svg(m, &series)).with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}
