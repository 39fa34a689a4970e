//! JSON and CSV writers. Every record carries the config hash.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// CSV table with a trailing `config_hash` column.
pub struct Table {
    writer: csv::Writer<BufWriter<File>>,
    hash: String,
}

impl Table {
    pub fn create(path: &Path, header: &[&str], hash: &str) -> anyhow::Result<Self> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut writer = csv::Writer::from_writer(BufWriter::new(file));
        writer.write_record(header.iter().copied().chain(["config_hash"]))?;
        Ok(Self {
            writer,
            hash: hash.to_string(),
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> anyhow::Result<()>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut record: Vec<String> = fields.into_iter().map(Into::into).collect();
        record.push(self.hash.clone());
        self.writer.write_record(&record)?;
        Ok(())
    }

    pub fn finish(mut self) -> anyhow::Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

/// `x1, y1, ..., xn, yn` column names.
pub fn zeta_columns(n: usize) -> Vec<String> {
    (1..=n).flat_map(|k| [format!("x{k}"), format!("y{k}")]).collect()
}
