//! Hourly CSV ingestion.
//!
//! Two layouts are accepted and detected from the header:
//!
//! - wide: `date,h01,...,h24`, one day per row;
//! - long: `timestamp,value`, one hour per row (`YYYY-MM-DD HH:MM`, a `T`
//!   separator and trailing seconds are also accepted).
//!
//! Prices in $/MWh are converted to $/kWh on load.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const HOURS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Celsius,
    UsdPerMwh,
    UsdPerKwh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    Weather,
    Price(Unit),
}

impl SeriesKind {
    fn stored_unit(self) -> Unit {
        match self {
            SeriesKind::Weather => Unit::Celsius,
            SeriesKind::Price(_) => Unit::UsdPerKwh,
        }
    }

    fn scale(self) -> f64 {
        match self {
            SeriesKind::Price(Unit::UsdPerMwh) => 1e-3,
            _ => 1.0,
        }
    }
}

/// One day of hourly values.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    pub date: NaiveDate,
    pub values: Vec<f64>,
    pub unit: Unit,
}

/// Reads and validates a series file; days come back in date order.
pub fn load_series(path: &Path, kind: SeriesKind) -> CliResult<Vec<HourlySeries>> {
    if let SeriesKind::Price(Unit::Celsius) = kind {
        return Err(CliError::config("price unit must be usd_per_mwh or usd_per_kwh"));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    parse_series(&text, kind).map_err(|e| CliError::data(format!("{}: {}", path.display(), e.message)))
}

/// Parses series text in either layout.
pub fn parse_series(text: &str, kind: SeriesKind) -> CliResult<Vec<HourlySeries>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(CliError::data(format!("line 1: {e}"))),
        None => return Err(CliError::data("file is empty")),
    };
    let names: Vec<String> = header.iter().map(|h| h.trim_start_matches('\u{feff}').to_ascii_lowercase()).collect();
    let rows = records.map(|r| {
        r.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            format!("line {line}: {e}")
        })
    });
    let days = if is_wide_header(&names) {
        parse_wide(rows, kind)?
    } else if names == ["timestamp", "value"] {
        parse_long(rows, kind)?
    } else {
        return Err(CliError::data(format!(
            "line 1: unrecognized header `{}`; expected `date,h01,...,h24` or `timestamp,value`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    };
    if days.is_empty() {
        return Err(CliError::data("no data rows"));
    }
    Ok(days)
}

fn is_wide_header(names: &[String]) -> bool {
    names.len() == HOURS + 1
        && names[0] == "date"
        && names[1..].iter().enumerate().all(|(k, n)| *n == format!("h{:02}", k + 1))
}

fn fail_lines(problems: Vec<String>) -> CliError {
    let mut msg = format!("{} malformed row(s): ", problems.len());
    for (k, p) in problems.iter().enumerate() {
        if k > 0 {
            msg.push_str("; ");
        }
        msg.push_str(p);
    }
    CliError::data(msg)
}

fn parse_value(raw: &str, line: u64, what: &str) -> Result<f64, String> {
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("line {line}: {what} `{raw}` is not a finite number")),
    }
}

fn parse_wide(
    rows: impl Iterator<Item = Result<csv::StringRecord, String>>,
    kind: SeriesKind,
) -> CliResult<Vec<HourlySeries>> {
    let mut problems = Vec::new();
    let mut days: BTreeMap<NaiveDate, (u64, Vec<f64>)> = BTreeMap::new();
    for row in rows {
        let rec = match row {
            Ok(r) => r,
            Err(e) => {
                problems.push(e);
                continue;
            }
        };
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != HOURS + 1 {
            problems.push(format!("line {line}: expected {} fields, found {}", HOURS + 1, rec.len()));
            continue;
        }
        let date = match NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d") {
            Ok(d) => d,
            Err(_) => {
                problems.push(format!("line {line}: bad date `{}`", &rec[0]));
                continue;
            }
        };
        let mut values = Vec::with_capacity(HOURS);
        for (k, raw) in rec.iter().skip(1).enumerate() {
            match parse_value(raw, line, &format!("h{:02}", k + 1)) {
                Ok(v) => values.push(v * kind.scale()),
                Err(e) => problems.push(e),
            }
        }
        if values.len() != HOURS {
            continue;
        }
        if let Some((first, _)) = days.get(&date) {
            problems.push(format!("line {line}: date {date} already given on line {first}"));
            continue;
        }
        days.insert(date, (line, values));
    }
    if !problems.is_empty() {
        return Err(fail_lines(problems));
    }
    Ok(days
        .into_iter()
        .map(|(date, (_, values))| HourlySeries {
            date,
            values,
            unit: kind.stored_unit(),
        })
        .collect())
}

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    ["%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
}

fn parse_long(
    rows: impl Iterator<Item = Result<csv::StringRecord, String>>,
    kind: SeriesKind,
) -> CliResult<Vec<HourlySeries>> {
    let mut problems = Vec::new();
    let mut days: BTreeMap<NaiveDate, [Option<(u64, f64)>; HOURS]> = BTreeMap::new();
    for row in rows {
        let rec = match row {
            Ok(r) => r,
            Err(e) => {
                problems.push(e);
                continue;
            }
        };
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            problems.push(format!("line {line}: expected 2 fields, found {}", rec.len()));
            continue;
        }
        let Some(ts) = parse_timestamp(&rec[0]) else {
            problems.push(format!("line {line}: bad timestamp `{}`", &rec[0]));
            continue;
        };
        if ts.minute() != 0 || ts.second() != 0 {
            problems.push(format!("line {line}: timestamp `{}` is not on the hour", &rec[0]));
            continue;
        }
        let value = match parse_value(&rec[1], line, "value") {
            Ok(v) => v * kind.scale(),
            Err(e) => {
                problems.push(e);
                continue;
            }
        };
        let slot = &mut days.entry(ts.date()).or_insert([None; HOURS])[ts.hour() as usize];
        match slot {
            Some((first, _)) => problems.push(format!(
                "line {line}: hour {} of {} already given on line {first}",
                ts.hour(),
                ts.date()
            )),
            None => *slot = Some((line, value)),
        }
    }
    for (date, hours) in &days {
        let missing: Vec<usize> = (0..HOURS).filter(|&h| hours[h].is_none()).collect();
        if !missing.is_empty() {
            let lines: Vec<u64> = hours.iter().flatten().map(|(l, _)| *l).collect();
            let mut msg = format!("{date}: missing hour(s) {missing:?}");
            if let (Some(lo), Some(hi)) = (lines.iter().min(), lines.iter().max()) {
                let _ = write!(msg, " (day rows on lines {lo}-{hi})");
            }
            problems.push(msg);
        }
    }
    if !problems.is_empty() {
        return Err(fail_lines(problems));
    }
    Ok(days
        .into_iter()
        .map(|(date, hours)| HourlySeries {
            date,
            values: hours.iter().map(|h| h.expect("checked above").1).collect(),
            unit: kind.stored_unit(),
        })
        .collect())
}

/// Hour-by-hour mean over days.
pub fn mean_profile(days: &[HourlySeries]) -> Vec<f64> {
    let n = days.len() as f64;
    (0..HOURS)
        .map(|h| days.iter().map(|d| d.values[h]).sum::<f64>() / n)
        .collect()
}

/// Renders series in the wide layout, in the unit they are stored in.
pub fn to_wide_csv(days: &[HourlySeries]) -> String {
    let mut out = String::from("date");
    for h in 1..=HOURS {
        let _ = write!(out, ",h{h:02}");
    }
    out.push('\n');
    for d in days {
        let _ = write!(out, "{}", d.date);
        for v in &d.values {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}
