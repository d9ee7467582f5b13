//! Atomic file writes and the benchmark table.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use shrinkrel::ScenarioResult;

use crate::CliError;

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per (scenario, method). Component completeness columns run to
/// the largest `K` among the scenarios and are blank past a scenario's own.
pub fn bench_table(rows: &[(String, &ScenarioResult)]) -> String {
    let kmax = rows
        .iter()
        .map(|(_, r)| r.pct_complete_components.len())
        .max()
        .unwrap_or(0);
    let mut out =
        String::from("scenario,method,mean_risk,sd_risk,mean_cstar,sd_cstar,pct_complete_system");
    for j in 1..=kmax {
        write!(out, ",pct_complete_c{j}").unwrap();
    }
    out.push_str(",risk_efficiency_pct,excluded_reps\n");
    for (label, res) in rows {
        for s in &res.summaries {
            write!(
                out,
                "{label},{},{},{},{},{},{}",
                s.method,
                s.mean_risk,
                s.sd_risk,
                opt(s.mean_cstar),
                opt(s.sd_cstar),
                res.pct_complete_system
            )
            .unwrap();
            for j in 0..kmax {
                out.push(',');
                if let Some(p) = res.pct_complete_components.get(j) {
                    write!(out, "{p}").unwrap();
                }
            }
            writeln!(out, ",{},{}", opt(s.risk_efficiency_pct), res.excluded).unwrap();
        }
    }
    out
}
