use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct FixtureRef {
    pub label: String,
    pub path: PathBuf,
    pub sha256: String,
    pub n_frozen: usize,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Rows of a CSV file with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }
}

pub fn num(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// One `<run-id>.trace.json` plus its `<run-id>.csv` projection.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub run_id: String,
    pub json: Value,
    pub table: Table,
}

impl Artifact {
    pub fn new(
        run_id: String,
        command: &str,
        config: Value,
        fixtures: &[FixtureRef],
        seeds: &[u64],
        body: Value,
        table: Table,
    ) -> Self {
        let json = json!({
            "version": ARTIFACT_VERSION,
            "run_id": run_id,
            "command": command,
            "config": config,
            "fixtures": fixtures,
            "seeds": seeds,
            "result": body,
        });
        Self { run_id, json, table }
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let trace = dir.join(format!("{}.trace.json", self.run_id));
        let csv = dir.join(format!("{}.csv", self.run_id));
        let text = serde_json::to_string_pretty(&self.json).expect("json values serialise");
        fs::write(&trace, text + "\n")?;
        fs::write(&csv, self.table.to_csv())?;
        Ok((trace, csv))
    }
}

/// File-name-safe run id from its parts.
pub fn run_id(parts: &[&str]) -> String {
    parts
        .iter()
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
                .collect::<String>()
        })
        .collect::<Vec<_>>()
        .join("__")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_rows() {
        let mut t = Table::new(&["k", "energy"]);
        t.push(vec!["1".into(), num(-1.5)]);
        assert_eq!(t.to_csv(), "k,energy\n1,-1.500000000000e0\n");
    }

    #[test]
    fn run_ids_are_path_safe() {
        assert_eq!(run_id(&["run", "compass_pro", "H4_d1.50", ""]), "run__compass_pro__H4_d1.50");
        assert_eq!(run_id(&["a/b c"]), "a_b_c");
    }

    #[test]
    fn digest_matches_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
