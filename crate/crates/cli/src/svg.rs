//! Deterministic SVG line plots from CSV tables.

use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// Free-entropy profile with its energy and entropy parts.
    Profile,
    /// Hitting-time survival curve `Pr(τ > k)`.
    Survival,
    /// Empirical `Pr(τ <= k)` against the conductance bound.
    BoundOverlay,
}

impl PlotKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "profile" => Some(PlotKind::Profile),
            "survival" => Some(PlotKind::Survival),
            "bound-overlay" => Some(PlotKind::BoundOverlay),
            _ => None,
        }
    }
}

pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// Numeric CSV; an empty input gives an empty table.
    pub fn parse(text: &str) -> Result<Table, String> {
        if text.trim().is_empty() {
            return Ok(Table { headers: vec![], rows: vec![] });
        }
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let headers: Vec<String> = rd.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| format!("row {}: {e}", i + 1))?;
            let row: Result<Vec<f64>, String> = rec
                .iter()
                .map(|f| match f.trim() {
                    "true" => Ok(1.0),
                    "false" => Ok(0.0),
                    "" => Ok(f64::NAN),
                    s => s.parse::<f64>().map_err(|_| format!("row {}: '{s}' is not a number", i + 1)),
                })
                .collect();
            rows.push(row?);
        }
        Ok(Table { headers, rows })
    }

    fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

struct Series {
    label: String,
    y: Vec<f64>,
    step: bool,
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f4e79", "#b5442d", "#3b7a3b", "#7a5c99"];

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi == lo {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn series_for(kind: PlotKind, t: &Table) -> Result<(String, Vec<f64>, Vec<Series>), String> {
    if t.headers.is_empty() {
        return Ok((String::new(), vec![], vec![]));
    }
    let need = |name: &str| t.column(name).ok_or_else(|| format!("CSV lacks column '{name}'"));
    Ok(match kind {
        PlotKind::Profile => {
            let xname = t.headers[0].clone();
            let main = ["F_N", "F"].iter().find(|c| t.headers.iter().any(|h| h == *c)).copied().unwrap_or(
                t.headers.get(1).map(String::as_str).ok_or("profile CSV needs at least two columns")?,
            );
            let mut s = vec![Series { label: main.to_string(), y: need(main)?, step: false }];
            if let (Some(e), Some(h)) = (t.column("energy"), t.column("entropy")) {
                s.push(Series { label: "energy".into(), y: e, step: false });
                s.push(Series { label: "entropy".into(), y: h, step: false });
            }
            (xname.clone(), need(&xname)?, s)
        }
        PlotKind::Survival => ("k".into(), need("k")?, vec![Series { label: "Pr(τ > k)".into(), y: need("survival")?, step: true }]),
        PlotKind::BoundOverlay => {
            let bound: Vec<f64> = need("bound")?.into_iter().map(|b| b.min(1.0)).collect();
            (
                "k".into(),
                need("k")?,
                vec![
                    Series { label: "empirical Pr(τ ≤ k)".into(), y: need("empirical")?, step: true },
                    Series { label: "bound (capped at 1)".into(), y: bound, step: false },
                ],
            )
        }
    })
}

/// Render `csv_text` as an SVG document.
pub fn render(kind: PlotKind, csv_text: &str) -> Result<String, String> {
    let table = Table::parse(csv_text)?;
    let (xname, x, series) = series_for(kind, &table)?;
    let (x0, x1) = range(x.iter().copied());
    let (y0, y1) = range(series.iter().flat_map(|s| s.y.iter().copied()));
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let px = |v: f64| LEFT + (v - x0) / (x1 - x0) * pw;
    let py = |v: f64| TOP + (1.0 - (v - y0) / (y1 - y0)) * ph;

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(out, r#"<rect class="frame" x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (tx, ty) = (px(xv), py(yv));
        let _ = writeln!(out, r#"<line x1="{tx:.2}" y1="{:.2}" x2="{tx:.2}" y2="{:.2}" stroke="black"/>"#, TOP + ph, TOP + ph + 4.0);
        let _ = writeln!(out, r#"<text x="{tx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, tick_label(xv));
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{ty:.2}" x2="{LEFT}" y2="{ty:.2}" stroke="black"/>"#, LEFT - 4.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, ty + 4.0, tick_label(yv));
    }
    if !xname.is_empty() {
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 10.0, escape(&xname));
    }
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        // non-finite values split a curve into segments
        let mut segments: Vec<Vec<(f64, f64)>> = vec![vec![]];
        for (xv, yv) in x.iter().zip(&s.y) {
            if xv.is_finite() && yv.is_finite() {
                let seg = segments.last_mut().unwrap();
                if s.step {
                    if let Some(&(_, prev)) = seg.last() {
                        seg.push((px(*xv), prev));
                    }
                }
                seg.push((px(*xv), py(*yv)));
            } else if !segments.last().unwrap().is_empty() {
                segments.push(vec![]);
            }
        }
        let _ = writeln!(out, r#"<g class="curve" data-label="{}">"#, escape(&s.label));
        for seg in segments.iter().filter(|s| !s.is_empty()) {
            let pts: Vec<String> = seg.iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
            let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
        }
        let _ = writeln!(out, "</g>");
        let ly = TOP + 14.0 + 14.0 * i as f64;
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, W - RIGHT - 150.0, W - RIGHT - 130.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, W - RIGHT - 125.0, ly + 4.0, escape(&s.label));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
