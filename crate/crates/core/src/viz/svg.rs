//! SVG writing helpers: number formatting, scales, ticks, colors.

use std::fmt::Write;

/// Formats `v` rounded to 6 significant digits, in plain decimal notation
/// for moderate magnitudes.
pub fn num(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return "0".into();
    }
    let rounded: f64 = format!("{v:.5e}").parse().unwrap_or(v);
    let s = format!("{rounded}");
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

pub const CATEGORY: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

pub fn category(i: usize) -> &'static str {
    CATEGORY[i % CATEGORY.len()]
}

/// Linear interpolation between two RGB endpoints, `t` in [0, 1].
pub fn ramp(lo: [u8; 3], hi: [u8; 3], t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let c = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(lo[0], hi[0]), c(lo[1], hi[1]), c(lo[2], hi[2]))
}

/// Maps data values onto a pixel interval, optionally in log10 space.
#[derive(Clone, Copy, Debug)]
pub struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
    px0: f64,
    px1: f64,
}

impl Scale {
    /// `lo`/`hi` are data bounds (already positive for log scales).
    pub fn new(lo: f64, hi: f64, log: bool, px0: f64, px1: f64) -> Self {
        let (mut lo, mut hi) = if log { (lo.log10(), hi.log10()) } else { (lo, hi) };
        if hi - lo <= 0.0 {
            let pad = if log { 0.5 } else { (lo.abs() * 0.1).max(0.5) };
            lo -= pad;
            hi += pad;
        } else {
            let pad = (hi - lo) * 0.05;
            lo -= pad;
            hi += pad;
        }
        Self { lo, hi, log, px0, px1 }
    }

    pub fn map(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        self.px0 + (v - self.lo) / (self.hi - self.lo) * (self.px1 - self.px0)
    }

    /// Tick values in data units.
    pub fn ticks(&self) -> Vec<f64> {
        if self.log {
            let first = self.lo.ceil() as i32;
            let last = self.hi.floor() as i32;
            let step = ((last - first) / 6 + 1).max(1);
            let ticks: Vec<f64> =
                (first..=last).step_by(step as usize).map(|e| 10f64.powi(e)).collect();
            if !ticks.is_empty() {
                return ticks;
            }
            return vec![10f64.powf((self.lo + self.hi) / 2.0)];
        }
        let raw = (self.hi - self.lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .into_iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let start = (self.lo / step).ceil() as i64;
        let end = (self.hi / step).floor() as i64;
        (start..=end).map(|i| i as f64 * step).collect()
    }
}

pub fn tick_label(v: f64, log: bool) -> String {
    if log {
        let e = v.log10().round() as i32;
        if (v.log10() - e as f64).abs() < 1e-9 && !(-3..=5).contains(&e) {
            return format!("1e{e}");
        }
    }
    num(v)
}

/// Rectangular plotting region inside the canvas.
#[derive(Clone, Copy, Debug)]
pub struct Area {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

pub fn open(out: &mut String, width: u32, height: u32, title: &str) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text class="title" x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        num(width as f64 / 2.0),
        escape(title)
    );
}

pub fn close(out: &mut String) {
    out.push_str("</svg>\n");
}

/// Draws the frame, ticks and axis labels for `area`.
pub fn axes(out: &mut String, area: Area, xs: &Scale, ys: &Scale, x_label: &str, y_label: &str) {
    let Area { x, y, w, h } = area;
    let _ = writeln!(out, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
        num(x),
        num(y),
        num(w),
        num(h)
    );
    for t in xs.ticks() {
        let px = xs.map(t);
        let _ = writeln!(
            out,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}"/>"#,
            num(px),
            num(y + h),
            num(y + h + 5.0)
        );
    }
    for t in ys.ticks() {
        let py = ys.map(t);
        let _ = writeln!(
            out,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}"/>"#,
            num(x - 5.0),
            num(py),
            num(x)
        );
    }
    out.push_str("</g>\n<g class=\"tick-labels\" fill=\"black\">\n");
    for t in xs.ticks() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(xs.map(t)),
            num(y + h + 18.0),
            tick_label(t, xs.log)
        );
    }
    for t in ys.ticks() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            num(x - 8.0),
            num(ys.map(t) + 4.0),
            tick_label(t, ys.log)
        );
    }
    out.push_str("</g>\n");
    let _ = writeln!(
        out,
        r#"<text class="xlabel" x="{}" y="{}" text-anchor="middle">{}</text>"#,
        num(x + w / 2.0),
        num(y + h + 38.0),
        escape(x_label)
    );
    let cx = x - 52.0;
    let cy = y + h / 2.0;
    let _ = writeln!(
        out,
        r#"<text class="ylabel" x="{0}" y="{1}" text-anchor="middle" transform="rotate(-90 {0} {1})">{2}</text>"#,
        num(cx),
        num(cy),
        escape(y_label)
    );
}

/// Legend entries drawn as colored swatches starting at `(x, y)`.
pub fn legend(out: &mut String, x: f64, y: f64, entries: &[(String, String)]) {
    out.push_str("<g class=\"legend\">\n");
    for (i, (color, label)) in entries.iter().enumerate() {
        let ey = y + i as f64 * 18.0;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="12" height="12" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            num(x),
            num(ey),
            num(x + 18.0),
            num(ey + 10.0),
            escape(label)
        );
    }
    out.push_str("</g>\n");
}
