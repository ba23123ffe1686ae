use crate::config::{ScenarioConfig, ScenarioKind};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    /// A pipeline stage errored; outputs up to that point were still written.
    Failed,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Failed => "FAILED",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

/// One CSV table. Cells are written with the shortest round-trip float
/// representation, so identical runs give identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub kind: ScenarioKind,
    pub status: Status,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub wall_clock_seconds: f64,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub config: ScenarioConfig,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Writes every table as CSV plus `summary.json`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for t in &self.tables {
            let f = std::fs::File::create(dir.join(t.file_name()))?;
            let mut w = std::io::BufWriter::new(f);
            t.write_csv(&mut w)?;
            w.flush()?;
        }
        let f = std::fs::File::create(dir.join("summary.json"))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), self).map_err(std::io::Error::other)?;
        Ok(())
    }

    pub fn read_summary(dir: &Path) -> std::io::Result<Report> {
        let text = std::fs::read_to_string(dir.join("summary.json"))?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }

    /// Human-readable digest, one line per check.
    pub fn render(&self) -> String {
        let mut s = format!("{} {} ({:.1} s)\n", self.kind.name(), self.status.label(), self.wall_clock_seconds);
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            s += &format!("  {mark} {}: {:.6e} (tol {:.1e}) {}\n", c.name, c.value, c.tolerance, c.detail);
        }
        if let Some(stage) = &self.failed_stage {
            s += &format!("  FAILED at stage `{stage}`: {}\n", self.error.as_deref().unwrap_or(""));
        }
        s
    }
}
