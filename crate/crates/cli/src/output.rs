//! CSV tables with a leading `#` metadata line.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use eda_lab::stats::GENERATOR_ID;

/// Everything needed to replay an output file.
#[derive(Clone, Debug)]
pub struct Metadata {
    pub command: String,
    pub config: Vec<(String, String)>,
    pub master_seed: u64,
}

impl Metadata {
    pub fn new(command: &str, master_seed: u64) -> Self {
        Metadata {
            command: command.to_string(),
            config: Vec::new(),
            master_seed,
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config.push((key.to_string(), value.to_string()));
        self
    }

    /// `# eda-lab <version> command=<c> generator=<g> key=value ... master_seed=<s>`;
    /// values with whitespace or quotes are double-quoted.
    pub fn line(&self) -> String {
        let mut s = format!(
            "# eda-lab {} command={}",
            env!("CARGO_PKG_VERSION"),
            self.command
        );
        let generator = ("generator".to_string(), GENERATOR_ID.to_string());
        for (k, v) in std::iter::once(&generator).chain(&self.config) {
            if v.is_empty() || v.contains(|c: char| c.is_whitespace() || c == '"') {
                let _ = write!(s, " {k}={v:?}");
            } else {
                let _ = write!(s, " {k}={v}");
            }
        }
        let _ = write!(s, " master_seed={}", self.master_seed);
        s
    }
}

/// Renders the metadata line, the header and the rows.
pub fn render_csv(meta: &Metadata, header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut out = meta.line().into_bytes();
    out.push(b'\n');
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
}

pub fn write_csv(
    path: &Path,
    meta: &Metadata,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    let bytes = render_csv(meta, header, rows)?;
    std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

/// Columns of a CSV file that may start with `#` comment lines.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.iter().all(String::is_empty) {
            anyhow::bail!("no header row");
        }
        let rows = r
            .records()
            .map(|rec| Ok(rec?.iter().map(str::to_string).collect()))
            .collect::<Result<Vec<Vec<String>>>>()?;
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).with_context(|| {
            format!(
                "no column named '{name}' (columns: {})",
                self.header.join(", ")
            )
        })
    }
}
