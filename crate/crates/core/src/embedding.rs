//! Delay embedding of 1-D traces into point clouds, plus the span and
//! diameter statistics used to compare clouds.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recommend::SeriesTrace;

/// Above this many points the diameter is the bounding-box diagonal (an upper
/// bound) and flagged as approximate.
pub const EXACT_DIAMETER_LIMIT: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub source_label: String,
    pub tau: usize,
    pub origin_len: usize,
}

/// Delay embedding: point `t` is `(y[t], y[t + tau], ..., y[t + (dim-1) tau])`.
pub fn takens_embed(series: &SeriesTrace, dim: usize, tau: usize) -> Result<PointCloud> {
    if dim == 0 || tau == 0 {
        return Err(Error::invalid(format!(
            "embedding needs dim >= 1 and tau >= 1, got dim={dim} tau={tau}"
        )));
    }
    let len = series.ys.len();
    let span = (dim - 1) * tau;
    if len < span + 1 {
        return Err(Error::invalid(format!(
            "series of length {len} is too short for dim={dim} tau={tau} (needs {})",
            span + 1
        )));
    }
    let points = (0..len - span)
        .map(|t| (0..dim).map(|d| series.ys[t + d * tau]).collect())
        .collect();
    Ok(PointCloud {
        dim,
        points,
        source_label: series.label.clone(),
        tau,
        origin_len: len,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Plane {
    Xy,
    Xz,
    Yz,
}

impl Plane {
    pub const ALL: [Plane; 3] = [Plane::Xy, Plane::Xz, Plane::Yz];

    fn axes(self) -> (usize, usize) {
        match self {
            Plane::Xy => (0, 1),
            Plane::Xz => (0, 2),
            Plane::Yz => (1, 2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Plane::Xy => "xy",
            Plane::Xz => "xz",
            Plane::Yz => "yz",
        }
    }
}

/// Drops the coordinate not in `plane`.
pub fn project_3d_to_2d(cloud: &PointCloud, plane: Plane) -> Result<PointCloud> {
    if cloud.dim != 3 {
        return Err(Error::invalid(format!("projection needs a 3-D cloud, got {}-D", cloud.dim)));
    }
    let (a, b) = plane.axes();
    Ok(PointCloud {
        dim: 2,
        points: cloud.points.iter().map(|p| vec![p[a], p[b]]).collect(),
        ..cloud.clone()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudStats {
    pub diameter: f64,
    pub approximate: bool,
    pub span: Vec<f64>,
    pub centroid: Vec<f64>,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn cloud_stats(cloud: &PointCloud) -> Result<CloudStats> {
    let n = cloud.points.len();
    if n == 0 {
        return Err(Error::invalid("statistics of an empty point cloud"));
    }
    let mut lo = vec![f64::INFINITY; cloud.dim];
    let mut hi = vec![f64::NEG_INFINITY; cloud.dim];
    let mut sum = vec![0.0; cloud.dim];
    for p in &cloud.points {
        for d in 0..cloud.dim {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
            sum[d] += p[d];
        }
    }
    let span: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| h - l).collect();
    let centroid = sum.iter().map(|s| s / n as f64).collect();

    let (diameter, approximate) = if n <= EXACT_DIAMETER_LIMIT {
        let mut best = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                best = best.max(distance(&cloud.points[i], &cloud.points[j]));
            }
        }
        (best, false)
    } else {
        (span.iter().map(|s| s * s).sum::<f64>().sqrt(), true)
    };
    Ok(CloudStats {
        diameter,
        approximate,
        span,
        centroid,
    })
}

/// CSV with header `x,y` or `x,y,z` (higher dimensions continue `d3,d4,...`).
pub fn write_cloud_csv<W: Write>(cloud: &PointCloud, mut out: W) -> std::io::Result<()> {
    let header: Vec<String> = (0..cloud.dim)
        .map(|d| match d {
            0 => "x".to_string(),
            1 => "y".to_string(),
            2 => "z".to_string(),
            _ => format!("d{d}"),
        })
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for p in &cloud.points {
        let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_cloud_csv<R: BufRead>(reader: R, label: &str) -> Result<PointCloud> {
    let mut dim = 0;
    let mut points = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(label, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if n == 0 {
            dim = line.split(',').count();
            continue;
        }
        let p: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        match p {
            Ok(p) if p.len() == dim => points.push(p),
            _ => return Err(Error::parse(label, format!("line {}: expected {dim} reals", n + 1))),
        }
    }
    if dim == 0 {
        return Err(Error::parse(label, "missing header"));
    }
    let origin_len = points.len();
    Ok(PointCloud {
        dim,
        points,
        source_label: label.to_string(),
        tau: 1,
        origin_len,
    })
}
