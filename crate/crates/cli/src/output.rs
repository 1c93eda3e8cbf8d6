//! Output destination: files under `--out`, or standard output.

use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use serde::Serialize;

use crate::manifest::{git_hash, write_atomic, OutputFile};

pub struct Sink {
    dir: Option<PathBuf>,
    files: Vec<OutputFile>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> anyhow::Result<Self> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).with_context(|| format!("cannot create {}", d.display()))?;
        }
        Ok(Self { dir, files: Vec::new() })
    }

    pub fn dir(&self) -> Option<&PathBuf> {
        self.dir.as_ref()
    }

    pub fn into_files(self) -> Vec<OutputFile> {
        self.files
    }

    /// Writes `rows` as CSV with a header row.
    pub fn csv<T: Serialize>(&mut self, name: &str, schema: &str, rows: &[T]) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{}", e.error()))?;
        let columns = match bytes.split(|&b| b == b'\n').next() {
            Some(h) if !rows.is_empty() => csv::ReaderBuilder::new()
                .has_headers(false)
                .from_reader(h)
                .records()
                .next()
                .transpose()?
                .map(|r| r.iter().map(String::from).collect())
                .unwrap_or_default(),
            _ => Vec::new(),
        };
        self.emit(name, schema, columns, &bytes)
    }

    /// Writes raw bytes (JSONL, binary).
    pub fn raw(&mut self, name: &str, schema: &str, bytes: &[u8]) -> anyhow::Result<()> {
        self.emit(name, schema, Vec::new(), bytes)
    }

    fn emit(&mut self, name: &str, schema: &str, columns: Vec<String>, bytes: &[u8]) -> anyhow::Result<()> {
        match &self.dir {
            Some(d) => {
                write_atomic(&d.join(name), bytes)?;
                self.files.push(OutputFile {
                    path: name.to_string(),
                    schema: schema.to_string(),
                    columns,
                    sha256: git_hash(bytes),
                });
            }
            None => {
                let mut out = std::io::stdout().lock();
                if !self.files.is_empty() {
                    writeln!(out)?;
                }
                out.write_all(bytes)?;
                out.flush()?;
                self.files.push(OutputFile {
                    path: String::from("-"),
                    schema: schema.to_string(),
                    columns,
                    sha256: git_hash(bytes),
                });
            }
        }
        Ok(())
    }
}
