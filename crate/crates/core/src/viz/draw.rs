use std::fmt::Write;

use super::svg::{self, num, Area, Scale};
use super::{PlotKind, PlotSpec, Rendered};
use crate::embedding::{project_3d_to_2d, Plane, PointCloud};
use crate::error::{Error, Result};
use crate::graph::LayoutRow;
use crate::recommend::SeriesTrace;
use crate::recurrence::RecurrenceGrid;

const LEFT: f64 = 75.0;
const TOP: f64 = 40.0;
const RIGHT: f64 = 170.0;
const BOTTOM: f64 = 55.0;

fn plot_area(x0: f64, width: f64, height: f64) -> Area {
    Area {
        x: x0 + LEFT,
        y: TOP,
        w: (width - LEFT - RIGHT).max(10.0),
        h: (height - TOP - BOTTOM).max(10.0),
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Values at or below zero on a log axis are drawn at half the smallest
/// positive value on that axis (1 when there is none).
fn log_floor(values: impl Iterator<Item = f64>) -> f64 {
    let min = values.filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    if min.is_finite() {
        min / 2.0
    } else {
        1.0
    }
}

pub(super) fn series(spec: &PlotSpec, series: &[SeriesTrace]) -> String {
    let all_x = || series.iter().flat_map(|s| s.xs.iter().copied());
    let all_y = || series.iter().flat_map(|s| s.ys.iter().copied());
    let fx = spec.log_x.then(|| log_floor(all_x()));
    let fy = spec.log_y.then(|| log_floor(all_y()));
    let lift = |v: f64, floor: Option<f64>| match floor {
        Some(f) if v <= 0.0 => (f, true),
        _ => (v, false),
    };
    let (x_lo, x_hi) = bounds(all_x().map(|v| lift(v, fx).0));
    let (y_lo, y_hi) = bounds(all_y().map(|v| lift(v, fy).0));

    let area = plot_area(0.0, spec.width as f64, spec.height as f64);
    let xs = Scale::new(x_lo, x_hi, spec.log_x, area.x, area.x + area.w);
    let ys = Scale::new(y_lo, y_hi, spec.log_y, area.y + area.h, area.y);

    let mut out = String::new();
    svg::open(&mut out, spec.width, spec.height, &spec.title);
    svg::axes(&mut out, area, &xs, &ys, &spec.x_label, &spec.y_label);
    let mut floored = 0usize;
    for (k, s) in series.iter().enumerate() {
        let color = svg::category(k);
        let _ = writeln!(out, r#"<g class="series" data-index="{k}">"#);
        if spec.kind == PlotKind::Line && s.xs.len() > 1 {
            let pts: Vec<String> = s
                .xs
                .iter()
                .zip(&s.ys)
                .map(|(&x, &y)| {
                    format!("{},{}", num(xs.map(lift(x, fx).0)), num(ys.map(lift(y, fy).0)))
                })
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline class="line" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let r = if spec.kind == PlotKind::Line { 3.0 } else { 2.5 };
        for (&x, &y) in s.xs.iter().zip(&s.ys) {
            let (x, x_floor) = lift(x, fx);
            let (y, y_floor) = lift(y, fy);
            let (px, py) = (xs.map(x), ys.map(y));
            if x_floor || y_floor {
                floored += 1;
                let _ = writeln!(
                    out,
                    r#"<rect class="pt floor" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="{color}"/>"#,
                    num(px - r),
                    num(py - r),
                    num(2.0 * r),
                    num(2.0 * r)
                );
            } else {
                let _ = writeln!(
                    out,
                    r#"<circle class="pt" cx="{}" cy="{}" r="{}" fill="{color}"/>"#,
                    num(px),
                    num(py),
                    num(r)
                );
            }
        }
        out.push_str("</g>\n");
    }
    if floored > 0 {
        let mut note = format!("{floored} non-positive value(s) drawn at floor");
        if let Some(f) = fx {
            let _ = write!(note, " x={}", num(f));
        }
        if let Some(f) = fy {
            let _ = write!(note, " y={}", num(f));
        }
        note.push_str(" (hollow squares)");
        let _ = writeln!(
            out,
            r#"<text class="floor-note" x="{}" y="{}" font-size="10">{}</text>"#,
            num(area.x),
            num(spec.height as f64 - 6.0),
            svg::escape(&note)
        );
    }
    let entries: Vec<(String, String)> = series
        .iter()
        .enumerate()
        .map(|(k, s)| (svg::category(k).to_string(), s.label.clone()))
        .collect();
    svg::legend(&mut out, area.x + area.w + 15.0, area.y, &entries);
    svg::close(&mut out);
    out
}

fn cloud_panel(out: &mut String, area: Area, points: &[Vec<f64>], labels: (&str, &str)) {
    let (x_lo, x_hi) = bounds(points.iter().map(|p| p[0]));
    let (y_lo, y_hi) = bounds(points.iter().map(|p| p[1]));
    let xs = Scale::new(x_lo, x_hi, false, area.x, area.x + area.w);
    let ys = Scale::new(y_lo, y_hi, false, area.y + area.h, area.y);
    svg::axes(out, area, &xs, &ys, labels.0, labels.1);
    let color = svg::category(0);
    out.push_str("<g class=\"cloud\">\n");
    for p in points {
        let _ = writeln!(
            out,
            r#"<circle class="pt" cx="{}" cy="{}" r="1.8" fill="{color}" fill-opacity="0.7"/>"#,
            num(xs.map(p[0])),
            num(ys.map(p[1]))
        );
    }
    out.push_str("</g>\n");
}

pub(super) fn cloud(spec: &PlotSpec, cloud: &PointCloud) -> Result<String> {
    let width = spec.width as f64;
    let height = spec.height as f64;
    let mut out = String::new();
    svg::open(&mut out, spec.width, spec.height, &spec.title);
    let legend_label = format!("{} (tau={})", cloud.source_label, cloud.tau);
    match cloud.dim {
        2 => {
            let area = plot_area(0.0, width, height);
            let x_label = if spec.x_label.is_empty() { "x(t)" } else { &spec.x_label };
            let y_label = if spec.y_label.is_empty() { "x(t+tau)" } else { &spec.y_label };
            cloud_panel(&mut out, area, &cloud.points, (x_label, y_label));
            svg::legend(
                &mut out,
                area.x + area.w + 15.0,
                area.y,
                &[(svg::category(0).into(), legend_label)],
            );
        }
        3 => {
            let panel_w = (width - RIGHT) / 3.0;
            for (i, plane) in Plane::ALL.into_iter().enumerate() {
                let projected = project_3d_to_2d(cloud, plane)?;
                let x0 = i as f64 * panel_w;
                let area = Area {
                    x: x0 + 60.0,
                    y: TOP,
                    w: (panel_w - 75.0).max(10.0),
                    h: (height - TOP - BOTTOM).max(10.0),
                };
                let labels = match plane {
                    Plane::Xy => ("x(t)", "x(t+tau)"),
                    Plane::Xz => ("x(t)", "x(t+2tau)"),
                    Plane::Yz => ("x(t+tau)", "x(t+2tau)"),
                };
                let _ = writeln!(out, r#"<g class="panel" data-plane="{}">"#, plane.name());
                cloud_panel(&mut out, area, &projected.points, labels);
                out.push_str("</g>\n");
            }
            svg::legend(
                &mut out,
                width - RIGHT + 15.0,
                TOP,
                &[(svg::category(0).into(), legend_label)],
            );
        }
        d => {
            return Err(Error::invalid(format!(
                "only 2-D or 3-D clouds can be plotted, got {d}-D"
            )))
        }
    }
    svg::close(&mut out);
    Ok(out)
}

fn ramp_legend(out: &mut String, spec: &PlotSpec, x: f64, y: f64, h: f64) {
    let (lo, hi) = spec.palette.endpoints();
    let steps = 10;
    let seg = h / steps as f64;
    out.push_str("<g class=\"color-legend\">\n");
    for s in 0..steps {
        let t = 1.0 - (s as f64 + 0.5) / steps as f64;
        let _ = writeln!(
            out,
            r#"<rect class="ramp" x="{}" y="{}" width="16" height="{}" fill="{}"/>"#,
            num(x),
            num(y + s as f64 * seg),
            num(seg),
            svg::ramp(lo, hi, t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}">1</text><text x="{}" y="{}">0</text>"#,
        num(x + 22.0),
        num(y + 10.0),
        num(x + 22.0),
        num(y + h)
    );
    out.push_str("</g>\n");
}

pub(super) fn heatmap(spec: &PlotSpec, grid: &[Vec<f64>]) -> Result<Rendered> {
    let rows = grid.len();
    let cols = grid.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("cannot plot an empty heatmap"));
    }
    if let Some(r) = grid.iter().position(|row| row.len() != cols) {
        return Err(Error::invalid(format!(
            "ragged heatmap: row {r} has {} cells, expected {cols}",
            grid[r].len()
        )));
    }
    for (r, row) in grid.iter().enumerate() {
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("heatmap cell ({r}, {c}) is not finite")));
        }
    }
    let clamped = grid.iter().flatten().filter(|v| !(0.0..=1.0).contains(*v)).count();
    let mut warnings = Vec::new();
    if clamped > 0 {
        warnings.push(format!("{clamped} heatmap value(s) outside [0, 1] were clamped"));
    }

    let area = plot_area(0.0, spec.width as f64, spec.height as f64);
    let side = area.w.min(area.h);
    let cell = side / rows.max(cols) as f64;
    let (lo, hi) = spec.palette.endpoints();
    let mut out = String::new();
    svg::open(&mut out, spec.width, spec.height, &spec.title);
    out.push_str("<g class=\"cells\" shape-rendering=\"crispEdges\">\n");
    for (r, row) in grid.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<rect class="cell" x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                num(area.x + c as f64 * cell),
                num(area.y + r as f64 * cell),
                num(cell),
                num(cell),
                svg::ramp(lo, hi, v)
            );
        }
    }
    out.push_str("</g>\n");
    let _ = writeln!(
        out,
        r#"<text class="xlabel" x="{}" y="{}" text-anchor="middle">{}</text>"#,
        num(area.x + cols as f64 * cell / 2.0),
        num(area.y + rows as f64 * cell + 20.0),
        svg::escape(&spec.x_label)
    );
    ramp_legend(&mut out, spec, area.x + side + 20.0, area.y, side.min(200.0));
    svg::close(&mut out);
    Ok(Rendered {
        svg: out,
        warnings,
    })
}

pub(super) fn recurrence(spec: &PlotSpec, grid: &RecurrenceGrid) -> String {
    let n = grid.n();
    let area = plot_area(0.0, spec.width as f64, spec.height as f64);
    let side = area.w.min(area.h);
    let cell = side / n as f64;
    let (_, ink) = spec.palette.endpoints();
    let ink = svg::ramp(ink, ink, 1.0);
    let mut out = String::new();
    svg::open(&mut out, spec.width, spec.height, &spec.title);
    let _ = writeln!(
        out,
        r#"<rect class="frame" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        num(area.x),
        num(area.y),
        num(side),
        num(side)
    );
    out.push_str("<g class=\"cells\" shape-rendering=\"crispEdges\">\n");
    for j in 0..n {
        for i in 0..n {
            if grid.get(i, j) {
                let _ = writeln!(
                    out,
                    r#"<rect class="cell" x="{}" y="{}" width="{}" height="{}" fill="{ink}"/>"#,
                    num(area.x + i as f64 * cell),
                    num(area.y + (n - 1 - j) as f64 * cell),
                    num(cell),
                    num(cell)
                );
            }
        }
    }
    out.push_str("</g>\n");
    let _ = writeln!(
        out,
        r#"<text class="xlabel" x="{}" y="{}" text-anchor="middle">{}</text>"#,
        num(area.x + side / 2.0),
        num(area.y + side + 20.0),
        svg::escape(&spec.x_label)
    );
    svg::legend(
        &mut out,
        area.x + side + 20.0,
        area.y,
        &[(ink, format!("recurrent pair ({} of {})", grid.ones(), n * n))],
    );
    svg::close(&mut out);
    out
}

pub(super) fn graph(spec: &PlotSpec, nodes: &[LayoutRow], edges: &[(usize, usize, f64)]) -> String {
    let area = plot_area(0.0, spec.width as f64, spec.height as f64);
    let (x_lo, x_hi) = bounds(nodes.iter().map(|n| n.0));
    let (y_lo, y_hi) = bounds(nodes.iter().map(|n| n.1));
    let xs = Scale::new(x_lo, x_hi, false, area.x, area.x + area.w);
    let ys = Scale::new(y_lo, y_hi, false, area.y + area.h, area.y);
    let max_w = edges.iter().map(|e| e.2).fold(0.0, f64::max);
    let mut out = String::new();
    svg::open(&mut out, spec.width, spec.height, &spec.title);
    out.push_str("<g class=\"edges\" stroke=\"#888888\">\n");
    for &(a, b, w) in edges {
        let opacity = if max_w > 0.0 { 0.1 + 0.5 * w / max_w } else { 0.3 };
        let _ = writeln!(
            out,
            r#"<line class="edge" x1="{}" y1="{}" x2="{}" y2="{}" stroke-opacity="{}"/>"#,
            num(xs.map(nodes[a].0)),
            num(ys.map(nodes[a].1)),
            num(xs.map(nodes[b].0)),
            num(ys.map(nodes[b].1)),
            num(opacity)
        );
    }
    out.push_str("</g>\n<g class=\"nodes\" stroke=\"white\" stroke-width=\"0.5\">\n");
    let max_radius = nodes.iter().map(|n| n.3).max().unwrap_or(0).max(1) as f64;
    for (i, &(x, y, community, radius)) in nodes.iter().enumerate() {
        let r = 2.0 + 7.0 * (radius as f64 / max_radius).sqrt();
        let _ = writeln!(
            out,
            r#"<circle class="pt" data-node="{i}" cx="{}" cy="{}" r="{}" fill="{}"/>"#,
            num(xs.map(x)),
            num(ys.map(y)),
            num(r),
            svg::category(community)
        );
    }
    out.push_str("</g>\n");

    let count = nodes.iter().map(|n| n.2).max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; count];
    for n in nodes {
        sizes[n.2] += 1;
    }
    let shown = count.min(10);
    let mut entries: Vec<(String, String)> = (0..shown)
        .map(|c| (svg::category(c).to_string(), format!("community {c} (n={})", sizes[c])))
        .collect();
    if count > shown {
        entries.push(("#ffffff".into(), format!("+{} more", count - shown)));
    }
    entries.push(("#ffffff".into(), "size = radius".into()));
    svg::legend(&mut out, area.x + area.w + 15.0, area.y, &entries);
    svg::close(&mut out);
    out
}
