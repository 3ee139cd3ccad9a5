//! Trajectory tables, run manifests and return files.
//!
//! Tables are comma-separated with a one-line header of column symbols.
//! Values are written in the shortest decimal form that parses back to the
//! same `f64`, so a table read back equals the in-memory values exactly.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use imm_core::portfolio::atom_gop_path;
use imm_core::{portfolio::portfolio_path, MarketConfig, MarketView, PathSet, WeightsRule};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

/// A numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("writing to memory");
        for row in &self.rows {
            w.write_record(row.iter().map(f64::to_string)).expect("writing to memory");
        }
        w.into_inner().expect("writing to memory")
    }

    pub fn write_csv(&self, path: &Path) -> AppResult<()> {
        fs::write(path, self.to_csv_bytes()).map_err(|e| AppError::io(path, e))
    }

    pub fn read_csv(path: &Path) -> AppResult<Self> {
        let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
        Self::from_csv_bytes(&bytes).map_err(|message| AppError::Input { path: path.into(), message })
    }

    pub fn from_csv_bytes(bytes: &[u8]) -> Result<Self, String> {
        let mut r = csv::Reader::from_reader(bytes);
        let header: Vec<String> = r.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record.map_err(|e| e.to_string())?;
            let row = record
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| format!("row {}: `{f}` is not a number", line + 1)))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(Self { header, rows })
    }
}

fn symbols(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |k| format!("{prefix}^{k}"))
}

fn header(cols: impl IntoIterator<Item = String>) -> Vec<String> {
    ["path".to_string(), "t".to_string()].into_iter().chain(cols).collect()
}

/// File names of the trajectory tables written by [`write_trajectories`].
pub const TRAJECTORY_FILES: [&str; 5] =
    ["atoms.csv", "normalized.csv", "clocks.csv", "activities.csv", "portfolios.csv"];

/// One table per quantity, all paths stacked with a leading `path` column.
///
/// Portfolio columns: `S_star` atom GOP, `S_star_star` extended GOP,
/// `S_MVP`, `S_AP`, and in info-minimizing mode the normalized atom GOP
/// `Y_star` with its clock `tau_star`. A portfolio that cannot be formed
/// on a path (for instance a bankrupt extended GOP) is written as NaN.
pub fn trajectory_tables(set: &PathSet) -> Vec<(&'static str, Table)> {
    let n = set.config.n;
    let shared = set.paths.first().is_none_or(|p| p.activities.len() == 1);
    let info = set.config.is_info_minimizing();

    let mut atoms = Table::new(header(std::iter::once("A^0".to_string()).chain(symbols("A", n))));
    let mut normalized = Table::new(header(symbols("Y", n)));
    let mut clocks = Table::new(header(symbols("tau", n).chain(["tau_hat".to_string()])));
    let activity_cols: Vec<String> = if shared { Vec::new() } else { symbols("a", n).collect() };
    let mut activities = Table::new(header(
        std::iter::once("a_t".to_string())
            .chain(activity_cols)
            .chain(["r_t".to_string(), "lambda_star".to_string()]),
    ));
    let mut pcols: Vec<String> =
        ["B", "S_star", "S_star_star", "S_MVP", "S_AP"].iter().map(|s| s.to_string()).collect();
    if info {
        pcols.extend(["Y_star".to_string(), "tau_star".to_string()]);
    }
    let mut portfolios = Table::new(header(pcols));

    for view in set.views() {
        let p = view.path;
        let lead = |i: usize| [p.index as f64, view.grid[i]];
        let values = |rule: WeightsRule| portfolio_path(&rule, &view).map(|s| s.values()).ok();
        let s_star = values(WeightsRule::AtomGop);
        let s_ext = values(WeightsRule::ExtendedGop);
        let s_mvp = values(WeightsRule::Mvp);
        let s_ap = values(WeightsRule::Ap);
        let gop = if info { atom_gop_path(&view).ok() } else { None };
        let at = |v: &Option<Vec<f64>>, i: usize| v.as_ref().map_or(f64::NAN, |v| v[i]);

        for i in 0..p.len() {
            let mut row = lead(i).to_vec();
            row.push(p.savings(i));
            row.extend((0..n).map(|k| p.atoms[k][i]));
            atoms.rows.push(row);

            let mut row = lead(i).to_vec();
            row.extend((0..n).map(|k| p.normalized[k][i]));
            normalized.rows.push(row);

            let mut row = lead(i).to_vec();
            row.extend((0..n).map(|k| p.clocks[k][i]));
            row.push(p.average_clock[i]);
            clocks.rows.push(row);

            let mut row = lead(i).to_vec();
            row.push(p.average_activity[i]);
            if !shared {
                row.extend((0..n).map(|k| p.activities[k][i]));
            }
            row.extend([p.rate[i], p.lambda_star[i]]);
            activities.rows.push(row);

            let mut row = lead(i).to_vec();
            row.extend([p.basis(i), at(&s_star, i), at(&s_ext, i), at(&s_mvp, i), at(&s_ap, i)]);
            if info {
                row.push(gop.as_ref().map_or(f64::NAN, |g| g.normalized[i]));
                row.push(gop.as_ref().map_or(f64::NAN, |g| g.clock[i]));
            }
            portfolios.rows.push(row);
        }
    }
    let tables = [atoms, normalized, clocks, activities, portfolios];
    TRAJECTORY_FILES.into_iter().zip(tables).collect()
}

/// Writes the trajectory tables into `dir` and returns their paths.
pub fn write_trajectories(set: &PathSet, dir: &Path) -> AppResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let mut written = Vec::new();
    for (name, table) in trajectory_tables(set) {
        let path = dir.join(name);
        table.write_csv(&path)?;
        written.push(path);
    }
    Ok(written)
}

/// Record of one run: with the same code version, re-running the recorded
/// configuration reproduces every output file byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: MarketConfig,
    pub seed: u64,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub started_at: u64,
    pub finished_at: u64,
    pub outputs: Vec<String>,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn new(command: &str, config: &MarketConfig, started_at: u64, outputs: &[PathBuf]) -> Self {
        Self {
            command: command.into(),
            config: config.clone(),
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION").into(),
            started_at,
            finished_at: unix_now(),
            outputs: outputs
                .iter()
                .map(|p| p.file_name().map_or_else(|| p.display().to_string(), |f| f.to_string_lossy().into()))
                .collect(),
        }
    }

    pub fn write(&self, path: &Path) -> AppResult<()> {
        write_json(path, self)
    }

    pub fn read(path: &Path) -> AppResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| AppError::Input { path: path.into(), message: e.to_string() })
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

/// Reads log-returns, one per line. Blank lines and lines starting with
/// `#` are skipped; anything else must be a finite number.
pub fn read_returns(path: &Path) -> AppResult<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let bad = |message: String| AppError::Input { path: path.into(), message };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ => return Err(bad(format!("line {}: `{line}` is not a finite number", i + 1))),
        }
    }
    if out.is_empty() {
        return Err(bad("no returns".into()));
    }
    Ok(out)
}

/// Log-returns of the atom portfolio over each grid step, path by path.
pub fn ap_log_returns(view: MarketView<'_>) -> imm_core::Result<Vec<f64>> {
    Ok(portfolio_path(&WeightsRule::Ap, &view)?.log_increments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use imm_core::simulate_market;

    #[test]
    fn tables_round_trip_exactly() {
        let cfg = MarketConfig::info_minimizing(2, 0.03, 0.2, 0.05).with_grid(0.5, 0.1).with_paths(2, 4);
        let set = simulate_market(&cfg).unwrap();
        for (name, table) in trajectory_tables(&set) {
            let back = Table::from_csv_bytes(&table.to_csv_bytes()).unwrap();
            assert_eq!(back, table, "{name}");
        }
    }

    #[test]
    fn headers_use_symbols() {
        let cfg = MarketConfig::info_minimizing(2, 0.03, 0.2, 0.05).with_grid(0.5, 0.1);
        let set = simulate_market(&cfg).unwrap();
        let tables = trajectory_tables(&set);
        assert_eq!(tables[1].1.header, ["path", "t", "Y^1", "Y^2"]);
        assert!(tables[3].1.header.contains(&"a_t".to_string()));
        assert!(tables[4].1.header.contains(&"S_star".to_string()));
        let ap = tables[4].1.column("S_AP").unwrap();
        let a1 = tables[0].1.column("A^1").unwrap();
        let a2 = tables[0].1.column("A^2").unwrap();
        for i in 0..ap.len() {
            assert!((ap[i] / (a1[i] + a2[i]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(Table::from_csv_bytes(b"t,x\n0,abc\n").is_err());
    }
}
