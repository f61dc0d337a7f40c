//! Minimal deterministic SVG charts: lines, boxplots and bars.

use std::fmt::Write;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn n(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
    pub width: f64,
    pub dashed: bool,
    pub opacity: f64,
    /// Shown in the legend.
    pub legend: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, color: &str) -> Self {
        Series { label: label.into(), points, color: color.into(), width: 2.0, dashed: false, opacity: 1.0, legend: true }
    }
}

/// Plot area in pixels plus data ranges.
struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        self.top + self.height - (y - self.y.0) / (self.y.1 - self.y.0) * self.height
    }
}

fn header(out: &mut String, w: f64, h: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        n(w),
        n(h),
        n(w),
        n(h)
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="15">{}</text>"#, n(w / 2.0), esc(title));
}

/// "Nice" tick positions covering `[lo, hi]`.
pub fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return vec![lo];
    }
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str, x_ticks: bool) {
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        n(f.left),
        n(f.top),
        n(f.width),
        n(f.height)
    );
    for t in ticks(f.y.0, f.y.1, 5) {
        let y = f.py(t);
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#dddddd"/><text x="{}" y="{}" text-anchor="end">{}</text>"##,
            n(f.left),
            n(y),
            n(f.left + f.width),
            n(y),
            n(f.left - 5.0),
            n(y + 4.0),
            tick_label(t)
        );
    }
    if x_ticks {
        for t in ticks(f.x.0, f.x.1, 5) {
            let x = f.px(t);
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/><text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                n(x),
                n(f.top + f.height),
                n(x),
                n(f.top + f.height + 5.0),
                n(x),
                n(f.top + f.height + 18.0),
                tick_label(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            n(f.left + f.width / 2.0),
            n(f.top + f.height + 36.0),
            esc(x_label)
        );
    }
    let cy = f.top + f.height / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        n(cy),
        n(cy),
        esc(y_label)
    );
}

fn polyline(out: &mut String, f: &Frame, s: &Series) {
    if s.points.is_empty() {
        return;
    }
    let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{},{}", n(f.px(x)), n(f.py(y)))).collect();
    let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="{}" stroke-opacity="{}"{dash}/>"#,
        pts.join(" "),
        s.color,
        n(s.width),
        n(s.opacity)
    );
}

fn legend(out: &mut String, x: f64, y: f64, items: &[(&str, &str, bool)]) {
    for (i, (label, c, dashed)) in items.iter().enumerate() {
        let yy = y + 16.0 * i as f64;
        let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{c}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            n(x),
            n(yy),
            n(x + 20.0),
            n(yy),
            n(x + 25.0),
            n(yy + 4.0),
            esc(label)
        );
    }
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], x: (f64, f64), y: (f64, f64)) -> String {
    let items: Vec<(&str, &str, bool)> =
        series.iter().filter(|s| s.legend).map(|s| (s.label.as_str(), s.color.as_str(), s.dashed)).collect();
    let legend_w = if items.is_empty() { 0.0 } else { 190.0 };
    let (w, h) = (560.0 + legend_w, 480.0);
    let f = Frame { left: 60.0, top: 35.0, width: 480.0, height: 390.0, x, y };
    let mut out = String::new();
    header(&mut out, w, h, title);
    axes(&mut out, &f, x_label, y_label, true);
    for s in series {
        polyline(&mut out, &f, s);
    }
    legend(&mut out, f.left + f.width + 15.0, f.top + 10.0, &items);
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    /// Most extreme values within 1.5 IQR of the box.
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: Vec<f64>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Box and 1.5·IQR whiskers over the finite values; `None` when empty.
pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let (q1, median, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = v.iter().copied().filter(|x| *x >= lo && *x <= hi).collect();
    Some(BoxStats {
        q1,
        median,
        q3,
        whisker_lo: inside.first().copied().unwrap_or(q1),
        whisker_hi: inside.last().copied().unwrap_or(q3),
        outliers: v.into_iter().filter(|x| *x < lo || *x > hi).collect(),
    })
}

fn value_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

fn category_labels(out: &mut String, f: &Frame, labels: &[String]) {
    let slot = f.width / labels.len() as f64;
    for (i, label) in labels.iter().enumerate() {
        let x = f.left + slot * (i as f64 + 0.5);
        let y = f.top + f.height + 14.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end" transform="rotate(-45 {} {})">{}</text>"#,
            n(x),
            n(y),
            n(x),
            n(y),
            esc(label)
        );
    }
}

fn category_frame(count: usize, y: (f64, f64), legend: bool) -> (Frame, f64, f64) {
    let width = (36.0 * count as f64).max(420.0);
    let f = Frame { left: 60.0, top: 35.0, width, height: 360.0, x: (0.0, 1.0), y };
    let w = f.left + width + if legend { 200.0 } else { 30.0 };
    (f, w, 520.0)
}

/// Boxplots per group, optionally with lines through per-group values (one
/// line per entry of `trends`, each holding a value per group).
pub fn boxplot(title: &str, y_label: &str, groups: &[(String, Vec<f64>)], trends: &[(String, Vec<f64>)]) -> String {
    let y = value_range(groups.iter().flat_map(|g| g.1.iter().copied()).chain(trends.iter().flat_map(|t| t.1.iter().copied())));
    let (f, w, h) = category_frame(groups.len().max(1), y, !trends.is_empty());
    let mut out = String::new();
    header(&mut out, w, h, title);
    axes(&mut out, &f, "", y_label, false);
    let slot = f.width / groups.len().max(1) as f64;
    let half = (slot * 0.3).min(30.0);
    for (i, (_, values)) in groups.iter().enumerate() {
        let Some(b) = box_stats(values) else { continue };
        let cx = f.left + slot * (i as f64 + 0.5);
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"##,
            n(cx),
            n(f.py(b.whisker_lo)),
            n(cx),
            n(f.py(b.q1)),
            n(cx),
            n(f.py(b.q3)),
            n(cx),
            n(f.py(b.whisker_hi))
        );
        for wv in [b.whisker_lo, b.whisker_hi] {
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
                n(cx - half / 2.0),
                n(f.py(wv)),
                n(cx + half / 2.0),
                n(f.py(wv))
            );
        }
        let _ = writeln!(
            out,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#9ecae1" stroke="black"/>"##,
            n(cx - half),
            n(f.py(b.q3)),
            n(2.0 * half),
            n((f.py(b.q1) - f.py(b.q3)).max(0.5))
        );
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black" stroke-width="2"/>"#,
            n(cx - half),
            n(f.py(b.median)),
            n(cx + half),
            n(f.py(b.median))
        );
        for o in &b.outliers {
            let _ = writeln!(out, r#"<circle cx="{}" cy="{}" r="3" fill="none" stroke="black"/>"#, n(cx), n(f.py(*o)));
        }
    }
    let mut items = Vec::new();
    for (t, (label, values)) in trends.iter().enumerate() {
        let c = color(t);
        let pts: Vec<String> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, v)| format!("{},{}", n(f.left + slot * (i as f64 + 0.5)), n(f.py(*v))))
            .collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, pts.join(" "));
        items.push((label.as_str(), c, false));
    }
    let names: Vec<String> = groups.iter().map(|g| g.0.clone()).collect();
    category_labels(&mut out, &f, &names);
    legend(&mut out, f.left + f.width + 15.0, f.top + 10.0, &items);
    out.push_str("</svg>\n");
    out
}

/// Vertical bars; several series stack on top of each other.
pub fn stacked_bars(title: &str, y_label: &str, categories: &[String], series: &[(String, Vec<f64>)]) -> String {
    let totals: Vec<f64> =
        (0..categories.len()).map(|i| series.iter().map(|s| s.1[i].max(0.0)).sum::<f64>()).collect();
    let lowest = series.iter().flat_map(|s| s.1.iter().copied()).fold(0.0, f64::min);
    let top = totals.iter().copied().fold(0.0, f64::max);
    let y = (lowest, if top > lowest { top * 1.05 } else { lowest + 1.0 });
    let show_legend = series.len() > 1;
    let (f, w, h) = category_frame(categories.len().max(1), y, show_legend);
    let mut out = String::new();
    header(&mut out, w, h, title);
    axes(&mut out, &f, "", y_label, false);
    let slot = f.width / categories.len().max(1) as f64;
    for i in 0..categories.len() {
        let mut base = 0.0;
        for (k, (_, values)) in series.iter().enumerate() {
            let v = values[i];
            let (a, b) = if v >= 0.0 { (base, base + v) } else { (v, 0.0) };
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                n(f.left + slot * i as f64 + slot * 0.15),
                n(f.py(b)),
                n(slot * 0.7),
                n(f.py(a) - f.py(b)),
                color(k)
            );
            if v >= 0.0 {
                base += v;
            }
        }
    }
    category_labels(&mut out, &f, categories);
    if show_legend {
        let items: Vec<(&str, &str, bool)> = series.iter().enumerate().map(|(k, s)| (s.0.as_str(), color(k), false)).collect();
        let mut boxes = String::new();
        for (i, (label, c, _)) in items.iter().enumerate() {
            let yy = f.top + 10.0 + 16.0 * i as f64;
            let _ = writeln!(
                boxes,
                r#"<rect x="{}" y="{}" width="12" height="12" fill="{c}"/><text x="{}" y="{}">{}</text>"#,
                n(f.left + f.width + 15.0),
                n(yy - 6.0),
                n(f.left + f.width + 32.0),
                n(yy + 4.0),
                esc(label)
            );
        }
        out.push_str(&boxes);
    }
    out.push_str("</svg>\n");
    out
}

pub fn bars(title: &str, y_label: &str, bars: &[(String, f64)]) -> String {
    let cats: Vec<String> = bars.iter().map(|b| b.0.clone()).collect();
    stacked_bars(title, y_label, &cats, &[(y_label.to_string(), bars.iter().map(|b| b.1).collect())])
}
