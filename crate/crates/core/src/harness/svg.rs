use std::fmt::Write as _;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::bench::{Aggregate, AGGREGATE_HEADER};
use super::trace::{Trace, TRACE_HEADER};
use super::HarnessError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// One plotted series: a median line with an optional interquartile band.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub steps: Vec<f64>,
    pub median: Vec<f64>,
    pub band: Option<(Vec<f64>, Vec<f64>)>,
}

impl Curve {
    pub fn from_trace(trace: &Trace, label: &str) -> Self {
        Self {
            label: label.into(),
            steps: trace.rows.iter().map(|r| r.step as f64).collect(),
            median: trace.rows.iter().map(|r| r.f_gap).collect(),
            band: None,
        }
    }

    pub fn from_aggregate(agg: &Aggregate, label: &str) -> Self {
        Self {
            label: label.into(),
            steps: agg.rows.iter().map(|r| r.step as f64).collect(),
            median: agg.rows.iter().map(|r| r.median).collect(),
            band: Some((
                agg.rows.iter().map(|r| r.q25).collect(),
                agg.rows.iter().map(|r| r.q75).collect(),
            )),
        }
    }

    /// Reads a trace or aggregate CSV, chosen by its header.
    pub fn from_csv(text: &str, label: &str) -> Result<Self, HarnessError> {
        match text.lines().next().map(str::trim) {
            Some(TRACE_HEADER) => Ok(Self::from_trace(&Trace::from_csv(text)?, label)),
            Some(AGGREGATE_HEADER) => Ok(Self::from_aggregate(&Aggregate::from_csv(text)?, label)),
            _ => Err(HarnessError::Csv {
                line: 1,
                msg: format!("expected a trace ({TRACE_HEADER}) or aggregate ({AGGREGATE_HEADER}) header"),
            }),
        }
    }
}

struct Axes {
    x_min: f64,
    x_max: f64,
    y_lo: i32,
    y_hi: i32,
}

impl Axes {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(f64::MIN_POSITIVE);
        LEFT + (v - self.x_min) / span * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let t = (v.log10() - self.y_lo as f64) / (self.y_hi - self.y_lo) as f64;
        HEIGHT - BOTTOM - t.clamp(0.0, 1.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn positive_range(curves: &[Curve]) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in curves {
        let band = c.band.iter().flat_map(|(a, b)| a.iter().chain(b));
        for &v in c.median.iter().chain(band) {
            if v > 0.0 && v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    (lo <= hi).then_some((lo, hi))
}

fn points(axes: &Axes, xs: &[f64], ys: &[f64]) -> String {
    let mut s = String::new();
    for (x, y) in xs.iter().zip(ys).filter(|(_, y)| **y > 0.0 && y.is_finite()) {
        let _ = write!(s, "{:.2},{:.2} ", axes.x(*x), axes.y(*y));
    }
    s.trim_end().to_string()
}

/// Self-contained SVG of gap versus step on a logarithmic gap axis.
/// Nonpositive values cannot be placed on the axis and are skipped.
pub fn render_svg(curves: &[Curve], title: &str) -> Result<String, HarnessError> {
    let (lo, hi) = positive_range(curves).ok_or_else(|| HarnessError::Svg("no positive values to plot".into()))?;
    let x_min = curves.iter().flat_map(|c| c.steps.iter().copied()).fold(f64::INFINITY, f64::min);
    let x_max = curves.iter().flat_map(|c| c.steps.iter().copied()).fold(f64::NEG_INFINITY, f64::max);
    let y_lo = lo.log10().floor() as i32;
    let y_hi = (hi.log10().ceil() as i32).max(y_lo + 1);
    let axes = Axes { x_min, x_max, y_lo, y_hi };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(s, r##"<g stroke="#444" stroke-width="1" fill="none">"##);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>"#);
    s.push_str("</g>\n");

    for e in y_lo..=y_hi {
        let y = axes.y(10f64.powi(e));
        let _ = writeln!(s, r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#ddd"/>"##);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">1e{e}</text>"#, x0 - 6.0, y + 4.0);
    }
    for i in 0..=4 {
        let v = x_min + (x_max - x_min) * i as f64 / 4.0;
        let x = axes.x(v);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="#444"/>"##, y0 + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, y0 + 20.0, v.round());
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">step</text>"#, (x0 + x1) / 2.0, HEIGHT - 14.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">gap</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if let Some((q25, q75)) = &c.band {
            let floor = 10f64.powi(y_lo);
            let upper = points(&axes, &c.steps, q75);
            let lower_x: Vec<f64> = c.steps.iter().rev().copied().collect();
            let lower_y: Vec<f64> = q25.iter().rev().map(|v| v.max(floor)).collect();
            let lower = points(&axes, &lower_x, &lower_y);
            if !upper.is_empty() {
                let _ = writeln!(
                    s,
                    r#"<polygon points="{upper} {lower}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#
                );
            }
        }
        let line = points(&axes, &c.steps, &c.median);
        if !line.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline points="{line}" fill="none" stroke="{color}" stroke-width="1.5"/>"#
            );
        }
        let ly = TOP + 16.0 * (i as f64 + 1.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{color}" text-anchor="end">{}</text>"#,
            x1 - 8.0,
            escape(&c.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SvgSummary {
    pub polylines: usize,
    pub polygons: usize,
    pub elements: usize,
}

const FORBIDDEN_ELEMENTS: [&[u8]; 4] = [b"script", b"image", b"foreignObject", b"use"];

fn inspect(e: &BytesStart, summary: &mut SvgSummary, depth: usize) -> Result<(), HarnessError> {
    let name = e.name();
    let name = name.as_ref();
    if depth == 0 && name != b"svg" {
        return Err(HarnessError::Svg(format!("root element is {}", String::from_utf8_lossy(name))));
    }
    if FORBIDDEN_ELEMENTS.contains(&name) {
        return Err(HarnessError::Svg(format!("element {} is not allowed", String::from_utf8_lossy(name))));
    }
    summary.elements += 1;
    for attr in e.attributes() {
        let attr = attr.map_err(|err| HarnessError::Svg(err.to_string()))?;
        let key = attr.key.as_ref();
        if key.ends_with(b"href") || key == b"src" {
            return Err(HarnessError::Svg("external reference attribute".into()));
        }
        let value = attr.unescape_value().map_err(|err| HarnessError::Svg(err.to_string()))?;
        if key != b"xmlns" && value.contains("url(") {
            return Err(HarnessError::Svg("url() reference".into()));
        }
        if key == b"points" {
            let ok = value
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .all(|t| t.parse::<f64>().is_ok_and(f64::is_finite));
            if !ok {
                return Err(HarnessError::Svg("malformed points list".into()));
            }
        }
    }
    match name {
        b"polyline" => summary.polylines += 1,
        b"polygon" => summary.polygons += 1,
        _ => {}
    }
    Ok(())
}

/// Parses SVG text and checks that it is well formed, rooted at `<svg>`,
/// and free of scripts and external references.
pub fn validate_svg(text: &str) -> Result<SvgSummary, HarnessError> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().check_end_names = true;
    let mut summary = SvgSummary {
        polylines: 0,
        polygons: 0,
        elements: 0,
    };
    let mut depth = 0usize;
    let mut roots = 0usize;
    loop {
        match reader.read_event() {
            Ok(Event::Start(e)) => {
                inspect(&e, &mut summary, depth)?;
                roots += usize::from(depth == 0);
                depth += 1;
            }
            Ok(Event::Empty(e)) => {
                inspect(&e, &mut summary, depth)?;
                roots += usize::from(depth == 0);
            }
            Ok(Event::End(_)) => depth -= 1,
            Ok(Event::Text(t)) if depth == 0 => {
                let raw = t.unescape().map_err(|err| HarnessError::Svg(err.to_string()))?;
                if !raw.trim().is_empty() {
                    return Err(HarnessError::Svg("text outside the root element".into()));
                }
            }
            Ok(Event::Eof) => break,
            Ok(Event::DocType(_)) => return Err(HarnessError::Svg("doctype declarations are not allowed".into())),
            Ok(_) => {}
            Err(e) => {
                return Err(HarnessError::Svg(format!(
                    "at byte {}: {e}",
                    reader.error_position()
                )))
            }
        }
    }
    if depth != 0 {
        return Err(HarnessError::Svg("unclosed elements at end of document".into()));
    }
    if roots != 1 {
        return Err(HarnessError::Svg(format!("expected one root element, found {roots}")));
    }
    Ok(summary)
}
