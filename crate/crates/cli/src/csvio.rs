//! CSV formats for datasets, curves, risk profiles and benchmark tables.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! value read back is bit-identical to the one written. Lines starting
//! with `#` are comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use shrinkrel::{AutopsyDataset, Observation, SystemCurveEstimate, SystemDataset};

use crate::CliError;

pub const AUTOPSY_HEADER: &str = "system,component,time,event";
pub const SYSTEM_HEADER: &str = "system,time,event";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    Autopsy,
    System,
}

fn data_err(line: u64, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("line {line}: {msg}"))
}

/// Header and records of a CSV text; `#` lines are comments.
fn parse_table(text: &str) -> Result<(String, Vec<(u64, csv::StringRecord)>), CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| CliError::Data(e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header.is_empty() {
        return Err(CliError::Data("empty file".into()));
    }
    let rows = rdr
        .records()
        .map(|r| {
            let r = r.map_err(|e| CliError::Data(e.to_string()))?;
            Ok((r.position().map_or(0, |p| p.line()), r))
        })
        .collect::<Result<_, CliError>>()?;
    Ok((header, rows))
}

fn expect_header(found: &str, expected: &str) -> Result<(), CliError> {
    if found == expected {
        Ok(())
    } else {
        Err(CliError::Data(format!(
            "expected header `{expected}`, got `{found}`"
        )))
    }
}

pub fn detect(text: &str) -> Result<DataKind, CliError> {
    let (header, _) = parse_table(text)?;
    match header.as_str() {
        AUTOPSY_HEADER => Ok(DataKind::Autopsy),
        SYSTEM_HEADER => Ok(DataKind::System),
        other => Err(CliError::Data(format!("unrecognized header `{other}`"))),
    }
}

fn parse_id(field: &str, line: u64, what: &str) -> Result<usize, CliError> {
    match field.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(data_err(
            line,
            format!("{what} `{field}` is not a positive integer"),
        )),
    }
}

fn parse_time(field: &str, line: u64) -> Result<f64, CliError> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(data_err(
            line,
            format!("time `{field}` is not a finite non-negative number"),
        )),
    }
}

fn parse_event(field: &str, line: u64) -> Result<bool, CliError> {
    match field {
        "1" => Ok(true),
        "0" => Ok(false),
        other => Err(data_err(line, format!("event `{other}` must be 0 or 1"))),
    }
}

fn check_width(rec: &csv::StringRecord, n: usize, line: u64) -> Result<(), CliError> {
    if rec.len() != n {
        return Err(data_err(
            line,
            format!("expected {n} fields, got {}", rec.len()),
        ));
    }
    Ok(())
}

pub fn write_autopsy(data: &AutopsyDataset) -> String {
    let mut out = format!("{AUTOPSY_HEADER}\n");
    for i in 0..data.n() {
        for (j, o) in data.system(i).iter().enumerate() {
            writeln!(out, "{},{},{},{}", i + 1, j + 1, o.time, u8::from(o.event)).unwrap();
        }
    }
    out
}

/// Rows may come in any order; systems are ordered by id.
pub fn read_autopsy(text: &str) -> Result<AutopsyDataset, CliError> {
    let (header, rows) = parse_table(text)?;
    expect_header(&header, AUTOPSY_HEADER)?;
    let mut systems: BTreeMap<usize, BTreeMap<usize, Observation>> = BTreeMap::new();
    for (n, rec) in &rows {
        let n = *n;
        check_width(rec, 4, n)?;
        let sys = parse_id(&rec[0], n, "system")?;
        let comp = parse_id(&rec[1], n, "component")?;
        let obs = Observation::new(parse_time(&rec[2], n)?, parse_event(&rec[3], n)?);
        if systems.entry(sys).or_default().insert(comp, obs).is_some() {
            return Err(data_err(
                n,
                format!("duplicate row for system {sys}, component {comp}"),
            ));
        }
    }
    let k = systems
        .values()
        .flat_map(|c| c.keys().copied())
        .max()
        .unwrap_or(0);
    if k == 0 {
        return Err(CliError::Data("autopsy file has no rows".into()));
    }
    let mut records = Vec::with_capacity(systems.len() * k);
    for (sys, comps) in &systems {
        if comps.len() != k || comps.keys().copied().ne(1..=k) {
            return Err(CliError::Data(format!(
                "system {sys} does not have exactly components 1..={k}"
            )));
        }
        records.extend(comps.values().copied());
    }
    AutopsyDataset::new(k, records).map_err(CliError::from)
}

pub fn write_system(data: &SystemDataset) -> String {
    let mut out = format!("{SYSTEM_HEADER}\n");
    for (i, o) in data.records().iter().enumerate() {
        writeln!(out, "{},{},{}", i + 1, o.time, u8::from(o.event)).unwrap();
    }
    out
}

pub fn read_system(text: &str) -> Result<SystemDataset, CliError> {
    let (header, recs) = parse_table(text)?;
    expect_header(&header, SYSTEM_HEADER)?;
    let mut rows = BTreeMap::new();
    for (n, rec) in &recs {
        let n = *n;
        check_width(rec, 3, n)?;
        let sys = parse_id(&rec[0], n, "system")?;
        let obs = Observation::new(parse_time(&rec[1], n)?, parse_event(&rec[2], n)?);
        if rows.insert(sys, obs).is_some() {
            return Err(data_err(n, format!("duplicate system id {sys}")));
        }
    }
    SystemDataset::new(rows.into_values().collect()).map_err(CliError::from)
}

/// `t,value[,variance]`, first row at `t = 0`.
pub fn write_curve(est: &SystemCurveEstimate, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    match est.variances() {
        Some(vars) => {
            out.push_str("t,value,variance\n");
            for ((t, v), var) in est.times().iter().zip(est.values()).zip(vars) {
                writeln!(out, "{t},{v},{var}").unwrap();
            }
        }
        None => {
            out.push_str("t,value\n");
            for (t, v) in est.times().iter().zip(est.values()) {
                writeln!(out, "{t},{v}").unwrap();
            }
        }
    }
    out
}

/// `(t, value)` pairs of a curve file.
pub fn read_curve(text: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let (header, rows) = parse_table(text)?;
    if header != "t,value" && header != "t,value,variance" {
        return Err(CliError::Data(format!(
            "unexpected curve header `{header}`"
        )));
    }
    rows.iter()
        .map(|(n, rec)| {
            if rec.len() < 2 || rec.len() > 3 {
                return Err(data_err(*n, "expected 2 or 3 fields"));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| data_err(*n, format!("bad number `{s}`")))
            };
            Ok((num(&rec[0])?, num(&rec[1])?))
        })
        .collect()
}

pub fn write_grid_curve(points: &[(f64, f64)]) -> String {
    let mut out = String::from("t,value\n");
    for (t, v) in points {
        writeln!(out, "{t},{v}").unwrap();
    }
    out
}

pub fn write_profile(profile: &[(f64, f64)], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    out.push_str("c,estimated_risk\n");
    for (c, r) in profile {
        writeln!(out, "{c},{r}").unwrap();
    }
    out
}
