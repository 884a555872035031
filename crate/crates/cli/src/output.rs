//! Tables, manifests and the files they are written to.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde_json::{json, Map, Value};

use lifs::csvfmt::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Num(v as f64)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// A named table plus the solver data that produced it.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub tol: Option<f64>,
    pub iterations: Option<usize>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
            tol: None,
            iterations: None,
        }
    }

    pub fn solved(mut self, tol: f64, iterations: usize) -> Self {
        self.tol = Some(tol);
        self.iterations = Some(iterations);
        self
    }

    pub fn push<I: IntoIterator<Item = C>, C: Into<Cell>>(&mut self, row: I) {
        self.rows.push(row.into_iter().map(Into::into).collect());
    }

    fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => fmt_f64(*v),
                    Cell::Text(t) => t.clone(),
                })
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Array(
                    row.iter()
                        .map(|c| match c {
                            Cell::Num(v) => json!(v),
                            Cell::Text(t) => json!(t),
                        })
                        .collect(),
                )
            })
            .collect();
        json!({ "columns": self.header, "rows": rows })
    }

    pub fn file_name(&self, format: Format) -> String {
        match format {
            Format::Csv => format!("{}.csv", self.name),
            Format::Json => format!("{}.json", self.name),
        }
    }
}

/// Everything a command produces.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    /// Extra JSON documents written verbatim, by file stem.
    pub documents: Vec<(String, Value)>,
    /// Residuals and other scalar diagnostics.
    pub residuals: Map<String, Value>,
    pub summary: Map<String, Value>,
}

impl RunOutput {
    pub fn residual(&mut self, key: &str, v: f64) {
        self.residuals.insert(key.to_string(), json!(v));
    }

    pub fn note(&mut self, key: &str, v: impl Into<Value>) {
        self.summary.insert(key.to_string(), v.into());
    }
}

pub struct RunContext<'a> {
    pub command: &'a str,
    pub params: Map<String, Value>,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub out: &'a Path,
    pub format: Format,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f =
        fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    f.write_all(contents.as_bytes())
        .with_context(|| format!("cannot write {}", path.display()))
}

/// Writes all tables, documents and `manifest.json`; returns the paths.
pub fn write_run(ctx: &RunContext, run: &RunOutput) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(ctx.out).with_context(|| format!("cannot create {}", ctx.out.display()))?;
    let mut written = Vec::new();
    let mut outputs = Vec::new();
    for t in &run.tables {
        let name = t.file_name(ctx.format);
        let path = ctx.out.join(&name);
        match ctx.format {
            Format::Csv => write_file(&path, &t.to_csv())?,
            Format::Json => {
                write_file(&path, &(serde_json::to_string_pretty(&t.to_json())? + "\n"))?
            }
        }
        outputs.push(json!({
            "file": name,
            "rows": t.rows.len(),
            "tol": t.tol,
            "iterations": t.iterations,
        }));
        written.push(path);
    }
    for (stem, doc) in &run.documents {
        let name = format!("{stem}.json");
        let path = ctx.out.join(&name);
        write_file(&path, &(serde_json::to_string_pretty(doc)? + "\n"))?;
        outputs.push(json!({ "file": name, "rows": null, "tol": null, "iterations": null }));
        written.push(path);
    }
    let manifest = json!({
        "manifest_version": 1,
        "command": ctx.command,
        "params": ctx.params,
        "seed": ctx.seed,
        "library_version": lifs::VERSION,
        "tol": ctx.tol,
        "max_iter": ctx.max_iter,
        "outputs": outputs,
        "residuals": run.residuals,
        "summary": run.summary,
    });
    let path = ctx.out.join("manifest.json");
    write_file(&path, &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_cells() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push([Cell::Text("0.(1)".into()), Cell::Num(0.5)]);
        assert_eq!(t.to_csv(), "a,b\n0.(1),5.0000000000000000e-1\n");
        assert_eq!(
            t.to_json(),
            json!({"columns": ["a", "b"], "rows": [["0.(1)", 0.5]]})
        );
    }
}
