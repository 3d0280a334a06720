use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use super::{Rating, RatingScale, RatingsDataset};
use crate::error::{Error, Result};

/// Supported rating file layouts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    /// `UserID::MovieID::Rating::Timestamp`
    MovielensDat,
    /// `user<TAB>item<TAB>rating<TAB>timestamp`
    MovielensTab,
    /// Comma separated with a header row; `user,item,rating` first, extra
    /// columns ignored unless the fourth header column is `timestamp`.
    ComodaCsv,
}

/// Counters collected while parsing a rating file.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub lines: usize,
    pub triplets: usize,
    pub duplicates: usize,
    pub malformed: usize,
    pub out_of_range: usize,
}

pub fn load_ratings(
    path: &Path,
    format: InputFormat,
    scale: RatingScale,
) -> Result<(RatingsDataset, IngestReport)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_ratings(
        BufReader::new(file),
        format,
        scale,
        &path.display().to_string(),
    )
}

struct Record<'a> {
    user: &'a str,
    item: &'a str,
    rating: &'a str,
    timestamp: Option<&'a str>,
}

fn split_fields(line: &str, format: InputFormat, with_timestamp: bool) -> Option<Record<'_>> {
    let fields: Vec<&str> = match format {
        InputFormat::MovielensDat => line.split("::").collect(),
        InputFormat::MovielensTab => line.split('\t').collect(),
        InputFormat::ComodaCsv => line.split(',').collect(),
    };
    if fields.len() < 3 {
        return None;
    }
    let timestamp = match format {
        InputFormat::ComodaCsv if !with_timestamp => None,
        _ => fields.get(3).copied(),
    };
    Some(Record {
        user: fields[0].trim(),
        item: fields[1].trim(),
        rating: fields[2].trim(),
        timestamp: timestamp.map(str::trim).filter(|t| !t.is_empty()),
    })
}

/// Parses rating lines from any reader.
///
/// Malformed lines and ratings outside `scale` are skipped and counted; the
/// parse fails only when no valid triplet remains. Repeated (user, item)
/// pairs keep the last occurrence.
pub fn parse_ratings<R: BufRead>(
    reader: R,
    format: InputFormat,
    scale: RatingScale,
    context: &str,
) -> Result<(RatingsDataset, IngestReport)> {
    let mut report = IngestReport::default();
    let mut users = IndexSet::new();
    let mut items = IndexSet::new();
    let mut slots: Vec<Option<Rating>> = Vec::new();
    let mut position: HashMap<(usize, usize), usize> = HashMap::new();
    let mut header_pending = format == InputFormat::ComodaCsv;
    let mut with_timestamp = false;

    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(context, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if header_pending {
            header_pending = false;
            with_timestamp = line
                .split(',')
                .nth(3)
                .is_some_and(|c| c.trim().eq_ignore_ascii_case("timestamp"));
            continue;
        }
        report.lines += 1;

        let Some(record) = split_fields(line, format, with_timestamp) else {
            report.malformed += 1;
            continue;
        };
        if record.user.is_empty() || record.item.is_empty() {
            report.malformed += 1;
            continue;
        }
        let Ok(value) = record.rating.parse::<f64>() else {
            report.malformed += 1;
            continue;
        };
        let timestamp = match record.timestamp.map(str::parse::<i64>) {
            None => None,
            Some(Ok(t)) => Some(t),
            Some(Err(_)) => {
                report.malformed += 1;
                continue;
            }
        };
        if !value.is_finite() || !scale.contains(value) {
            report.out_of_range += 1;
            continue;
        }

        let (user, _) = users.insert_full(record.user.to_string());
        let (item, _) = items.insert_full(record.item.to_string());
        if let Some(prev) = position.insert((user, item), slots.len()) {
            slots[prev] = None;
            report.duplicates += 1;
        }
        slots.push(Some(Rating {
            user,
            item,
            value,
            timestamp,
        }));
    }

    let ratings: Vec<Rating> = slots.into_iter().flatten().collect();
    if ratings.is_empty() {
        return Err(Error::parse(context, "no valid rating triplets"));
    }
    report.triplets = ratings.len();
    let dataset = RatingsDataset::from_parts(Arc::new(users), Arc::new(items), ratings, scale)?;
    Ok((dataset, report))
}

/// Writes the canonical CSV form: header `user,item,rating,timestamp`, LF line
/// endings, ratings with one decimal place, empty timestamp when unknown.
pub fn write_canonical<W: Write>(dataset: &RatingsDataset, mut out: W) -> std::io::Result<()> {
    out.write_all(b"user,item,rating,timestamp\n")?;
    for r in dataset.ratings() {
        let user = dataset.user_id(r.user).unwrap_or_default();
        let item = dataset.item_id(r.item).unwrap_or_default();
        match r.timestamp {
            Some(ts) => writeln!(out, "{user},{item},{:.1},{ts}", r.value)?,
            None => writeln!(out, "{user},{item},{:.1},", r.value)?,
        }
    }
    Ok(())
}
