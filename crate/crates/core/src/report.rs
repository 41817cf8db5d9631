//! CSV tables and JSON sidecars. Column layouts are listed in `docs/formats.md`.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::kernel::{ConductanceResult, TvCurve};

/// Bumped whenever a CSV column layout or sidecar field changes meaning.
pub const FORMAT_VERSION: u32 = 1;

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Metadata written next to every CSV table.
#[derive(Clone, Debug, Serialize)]
pub struct Sidecar<C: Serialize, S: Serialize> {
    pub format_version: u32,
    pub library_version: &'static str,
    pub command_line: Vec<String>,
    pub seed: u64,
    pub model_hash: String,
    pub config: C,
    pub summary: S,
}

impl<C: Serialize, S: Serialize> Sidecar<C, S> {
    pub fn new(command_line: Vec<String>, seed: u64, model_hash: String, config: C, summary: S) -> Self {
        Self { format_version: FORMAT_VERSION, library_version: LIBRARY_VERSION, command_line, seed, model_hash, config, summary }
    }
}

/// Writes a header row and string records.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Optional value as a CSV cell; `None` is the empty string.
pub fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TvCurve {
    /// Columns `t,d`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_table(
            path,
            &["t", "d"],
            self.times.iter().zip(&self.distances).map(|(t, d)| vec![t.to_string(), d.to_string()]),
        )
    }
}

/// Columns `n,phi,pi_a,flow`.
pub fn write_conductance_csv(path: &Path, results: &[ConductanceResult]) -> Result<()> {
    write_table(
        path,
        &["n", "phi", "pi_a", "flow"],
        results
            .iter()
            .map(|c| vec![c.n.to_string(), c.phi.to_string(), c.pi_a.to_string(), c.flow.to_string()]),
    )
}

#[cfg(test)]
mod tests {
    use crate::kernel::tv_curve;
    use crate::model::{BlockModel, MagState};

    #[test]
    fn tv_curve_round_trips_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let m = BlockModel::new(10, &[1.0], vec![vec![1.0]]).unwrap();
        let c = tv_curve(&m, 0.5, &MagState(vec![10]), 20, 5).unwrap();
        let path = dir.path().join("tv.csv");
        c.write_csv(&path).unwrap();
        let mut r = csv::Reader::from_path(&path).unwrap();
        assert_eq!(r.headers().unwrap(), vec!["t", "d"]);
        let rows: Vec<(u64, f64)> = r.deserialize().map(|x| x.unwrap()).collect();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[4].0, 20);
        assert_eq!(rows[4].1, c.distances[4]);
    }
}
