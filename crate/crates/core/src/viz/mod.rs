//! Static SVG rendering for series, point clouds, heatmaps, recurrence
//! bitmaps and graph drawings.
//!
//! Output is a pure function of the spec and payload. Every number is written
//! rounded to 6 significant digits. Each payload point becomes exactly one
//! element: `circle class="pt"` for series, cloud and graph nodes,
//! `rect class="cell"` for heatmap cells and set recurrence bits.

mod draw;
mod svg;

use serde::{Deserialize, Serialize};

use crate::embedding::PointCloud;
use crate::error::{Error, Result};
use crate::graph::LayoutRow;
use crate::recommend::SeriesTrace;
use crate::recurrence::RecurrenceGrid;

pub use svg::num as format_number;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    Line,
    Scatter2d,
    Heatmap,
    Recurrence,
    Graph,
    Loglog,
}

/// Sequential ramp used for heatmaps and recurrence bitmaps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Palette {
    #[default]
    Blues,
    Grayscale,
}

impl Palette {
    /// Colors for the ramp minimum and maximum.
    fn endpoints(self) -> ([u8; 3], [u8; 3]) {
        match self {
            Palette::Blues => ([247, 251, 255], [8, 48, 107]),
            Palette::Grayscale => ([255, 255, 255], [0, 0, 0]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: u32,
    pub height: u32,
    pub palette: Palette,
    pub log_x: bool,
    pub log_y: bool,
}

impl PlotSpec {
    pub fn new(kind: PlotKind, title: impl Into<String>) -> Self {
        let loglog = kind == PlotKind::Loglog;
        Self {
            kind,
            title: title.into(),
            x_label: String::new(),
            y_label: String::new(),
            width: 720,
            height: 480,
            palette: if kind == PlotKind::Recurrence {
                Palette::Grayscale
            } else {
                Palette::Blues
            },
            log_x: loglog,
            log_y: loglog,
        }
    }

    pub fn labels(mut self, x: impl Into<String>, y: impl Into<String>) -> Self {
        self.x_label = x.into();
        self.y_label = y.into();
        self
    }

    pub fn size(mut self, width: u32, height: u32) -> Self {
        self.width = width;
        self.height = height;
        self
    }
}

/// Data to draw. Which variants a kind accepts:
/// line and loglog take `Series`; scatter2d takes `Series` or `Cloud`;
/// heatmap takes `Grid`; recurrence takes `Recurrence`; graph takes `Graph`.
#[derive(Clone, Copy, Debug)]
pub enum Payload<'a> {
    Series(&'a [SeriesTrace]),
    Cloud(&'a PointCloud),
    Grid(&'a [Vec<f64>]),
    Recurrence(&'a RecurrenceGrid),
    Graph {
        nodes: &'a [LayoutRow],
        edges: &'a [(usize, usize, f64)],
    },
}

impl Payload<'_> {
    fn name(&self) -> &'static str {
        match self {
            Payload::Series(_) => "series",
            Payload::Cloud(_) => "point cloud",
            Payload::Grid(_) => "grid",
            Payload::Recurrence(_) => "recurrence grid",
            Payload::Graph { .. } => "graph",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rendered {
    pub svg: String,
    /// Non-fatal adjustments, such as clamped heatmap values.
    pub warnings: Vec<String>,
}

pub fn render(spec: &PlotSpec, payload: Payload<'_>) -> Result<Rendered> {
    if spec.width == 0 || spec.height == 0 {
        return Err(Error::invalid("plot width and height must be positive"));
    }
    use PlotKind as K;
    match (spec.kind, payload) {
        (K::Line | K::Loglog | K::Scatter2d, Payload::Series(series)) => {
            check_series(series)?;
            Ok(plain(draw::series(spec, series)))
        }
        (K::Scatter2d, Payload::Cloud(cloud)) => {
            check_values(cloud.points.iter().flatten().copied(), "cloud coordinate")?;
            if cloud.points.is_empty() {
                return Err(Error::invalid("cannot plot an empty point cloud"));
            }
            draw::cloud(spec, cloud).map(plain)
        }
        (K::Heatmap, Payload::Grid(grid)) => draw::heatmap(spec, grid),
        (K::Recurrence, Payload::Recurrence(grid)) => {
            if grid.n() == 0 {
                return Err(Error::invalid("cannot plot an empty recurrence grid"));
            }
            Ok(plain(draw::recurrence(spec, grid)))
        }
        (K::Graph, Payload::Graph { nodes, edges }) => {
            if nodes.is_empty() {
                return Err(Error::invalid("cannot plot a graph without nodes"));
            }
            check_values(nodes.iter().flat_map(|n| [n.0, n.1]), "node coordinate")?;
            check_values(edges.iter().map(|e| e.2), "edge weight")?;
            if let Some(e) = edges.iter().find(|e| e.0 >= nodes.len() || e.1 >= nodes.len()) {
                return Err(Error::invalid(format!(
                    "edge ({}, {}) refers to a missing node",
                    e.0, e.1
                )));
            }
            Ok(plain(draw::graph(spec, nodes, edges)))
        }
        (kind, payload) => Err(Error::invalid(format!(
            "plot kind {kind:?} cannot draw a {} payload",
            payload.name()
        ))),
    }
}

/// Heatmap with a linear ramp from 0 to 1 and a color legend.
pub fn render_heatmap(grid: &[Vec<f64>], spec: &PlotSpec) -> Result<Rendered> {
    let spec = PlotSpec {
        kind: PlotKind::Heatmap,
        ..spec.clone()
    };
    render(&spec, Payload::Grid(grid))
}

/// `<dataset>_<analysis>_<algo>.svg`, with an empty `algo` omitted.
pub fn plot_file_name(dataset: &str, analysis: &str, algo: &str) -> String {
    if algo.is_empty() {
        format!("{dataset}_{analysis}.svg")
    } else {
        format!("{dataset}_{analysis}_{algo}.svg")
    }
}

fn plain(svg: String) -> Rendered {
    Rendered {
        svg,
        warnings: Vec::new(),
    }
}

fn check_series(series: &[SeriesTrace]) -> Result<()> {
    if series.iter().all(|s| s.xs.is_empty()) {
        return Err(Error::invalid("cannot plot an empty series payload"));
    }
    for (k, s) in series.iter().enumerate() {
        if s.xs.len() != s.ys.len() {
            return Err(Error::invalid(format!("series {k} has mismatched x and y lengths")));
        }
        let bad = s.xs.iter().zip(&s.ys).position(|(x, y)| !x.is_finite() || !y.is_finite());
        if let Some(i) = bad {
            return Err(Error::invalid(format!("series {k} point {i} is not finite")));
        }
    }
    Ok(())
}

fn check_values(values: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let mut values = values;
    match values.position(|v| !v.is_finite()) {
        Some(i) => Err(Error::invalid(format!("{what} {i} is not finite"))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(xs: Vec<f64>, ys: Vec<f64>) -> SeriesTrace {
        SeriesTrace {
            label: "s".into(),
            xs,
            ys,
        }
    }

    #[test]
    fn one_point_line() {
        let s = [trace(vec![1.0], vec![0.5])];
        let out = render(&PlotSpec::new(PlotKind::Line, "t"), Payload::Series(&s)).unwrap();
        assert_eq!(out.svg.matches("class=\"pt\"").count(), 1);
        assert!(out.svg.contains("class=\"axes\""));
    }

    #[test]
    fn kind_payload_mismatch() {
        let s = [trace(vec![1.0], vec![0.5])];
        assert!(render(&PlotSpec::new(PlotKind::Heatmap, "t"), Payload::Series(&s)).is_err());
    }

    #[test]
    fn non_finite_reports_index() {
        let s = [trace(vec![1.0, 2.0, 3.0], vec![0.5, f64::NAN, 1.0])];
        let err = render(&PlotSpec::new(PlotKind::Line, "t"), Payload::Series(&s)).unwrap_err();
        assert!(err.to_string().contains("point 1"), "{err}");
    }

    #[test]
    fn empty_payload_rejected() {
        let s = [trace(vec![], vec![])];
        assert!(render(&PlotSpec::new(PlotKind::Line, "t"), Payload::Series(&s)).is_err());
        assert!(render(&PlotSpec::new(PlotKind::Line, "t"), Payload::Series(&[])).is_err());
        let g: Vec<Vec<f64>> = vec![];
        assert!(render_heatmap(&g, &PlotSpec::new(PlotKind::Heatmap, "h")).is_err());
    }

    #[test]
    fn zero_size_rejected() {
        let s = [trace(vec![1.0], vec![0.5])];
        let spec = PlotSpec::new(PlotKind::Line, "t").size(0, 10);
        assert!(render(&spec, Payload::Series(&s)).is_err());
    }

    #[test]
    fn file_names() {
        assert_eq!(plot_file_name("mini", "mae", "zeromat"), "mini_mae_zeromat.svg");
        assert_eq!(plot_file_name("mini", "recurrence", ""), "mini_recurrence.svg");
    }
}
