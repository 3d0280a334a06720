//! Recurrence plots of 1-D traces.
//!
//! Cell `(x, y)` is set when `|T(x) - T(y)| < epsilon`. Equality is not a
//! recurrence.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::recommend::SeriesTrace;

pub const DEFAULT_FRACTION: f64 = 0.1;

/// Square binary recurrence matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecurrenceGrid {
    n: usize,
    bits: Vec<bool>,
    pub source_label: String,
}

impl RecurrenceGrid {
    pub fn from_bits(n: usize, bits: Vec<bool>, source_label: impl Into<String>) -> Result<Self> {
        if bits.len() != n * n {
            return Err(Error::invalid(format!("{} bits do not form a {n}x{n} grid", bits.len())));
        }
        Ok(Self {
            n,
            bits,
            source_label: source_label.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[x * self.n + y]
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Plain PBM (`P1`), one row per line, `1` = black = recurrence.
    pub fn write_pbm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "P1")?;
        writeln!(out, "{} {}", self.n, self.n)?;
        for row in self.bits.chunks(self.n.max(1)) {
            let line: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    /// Plain PGM (`P2`, maxval 255): recurrences are black (0), the rest
    /// white (255).
    pub fn write_pgm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "P2")?;
        writeln!(out, "{} {}", self.n, self.n)?;
        writeln!(out, "255")?;
        for row in self.bits.chunks(self.n.max(1)) {
            let line: Vec<&str> = row.iter().map(|&b| if b { "0" } else { "255" }).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    /// Parses either plain layout written above (any whitespace between
    /// tokens, `#` comments allowed). In PGM input any pixel below half the
    /// maxval counts as a recurrence.
    pub fn read_pbm(text: &str, label: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        let magic = tokens.next();
        if magic != Some("P1") && magic != Some("P2") {
            return Err(Error::parse(label, "not a plain PBM (P1) or PGM (P2) file"));
        }
        let mut number = |what: &str| -> Result<usize> {
            tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(label, format!("bad {what}")))
        };
        let (w, h) = (number("width")?, number("height")?);
        if w != h {
            return Err(Error::parse(label, "recurrence grids are square"));
        }
        let maxval = if magic == Some("P2") { Some(number("maxval")?) } else { None };
        let bits: Result<Vec<bool>> = tokens
            .map(|t| match (maxval, t.parse::<usize>()) {
                (None, Ok(1)) => Ok(true),
                (None, Ok(0)) => Ok(false),
                (Some(max), Ok(v)) if v <= max => Ok(2 * v < max),
                _ => Err(Error::parse(label, format!("bad pixel {t:?}"))),
            })
            .collect();
        Self::from_bits(w, bits?, label)
    }
}

pub fn recurrence_plot(series: &SeriesTrace, epsilon: f64) -> Result<RecurrenceGrid> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let ys = &series.ys;
    let n = ys.len();
    if n == 0 {
        return Err(Error::invalid("recurrence plot of an empty series"));
    }
    let bits = (0..n)
        .into_par_iter()
        .flat_map_iter(|x| ys.iter().map(move |&y| (ys[x] - y).abs() < epsilon))
        .collect();
    RecurrenceGrid::from_bits(n, bits, series.label.clone())
}

/// `fraction * (max - min)` of the series.
pub fn epsilon_from_fraction(series: &SeriesTrace, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("fraction must lie in (0, 1], got {fraction}")));
    }
    let lo = series.ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = series.ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if !(range > 0.0) {
        return Err(Error::invalid(
            "series is constant; pass an explicit epsilon instead of a range fraction",
        ));
    }
    Ok(fraction * range)
}

/// Fraction of set cells.
pub fn recurrence_rate(grid: &RecurrenceGrid) -> f64 {
    if grid.n == 0 {
        return 0.0;
    }
    grid.ones() as f64 / (grid.n * grid.n) as f64
}
