use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::RunError;

pub const SCHEMA_VERSION: u32 = 1;

/// Shortest decimal that parses back to the same `f64`.
pub fn real(x: f64) -> String {
    format!("{x:?}")
}

/// CSV accumulated in memory and written in one piece.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
    header: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self {
            writer,
            header: header.join(","),
        }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("in-memory write");
    }

    fn finish(self) -> (String, Vec<u8>) {
        let bytes = self.writer.into_inner().expect("in-memory flush");
        (self.header, bytes)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    /// CSV header, or `json`.
    pub schema: String,
}

/// Output directory; every file is written to a temporary name and renamed.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(root).map_err(|e| RunError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        let target = self.root.join(name);
        let tmp = self.root.join(format!(".{name}.tmp"));
        fs::write(&tmp, bytes).map_err(|e| RunError::io(&tmp, e))?;
        fs::rename(&tmp, &target).map_err(|e| RunError::io(&target, e))
    }

    pub fn csv(&mut self, name: &str, table: Table) -> Result<(), RunError> {
        let (header, bytes) = table.finish();
        self.write_bytes(name, &bytes)?;
        self.files.push(FileEntry {
            name: name.into(),
            schema: header,
        });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), RunError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| RunError::Data(e.to_string()))?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)?;
        self.files.push(FileEntry {
            name: name.into(),
            schema: "json".into(),
        });
        Ok(())
    }

    pub fn manifest<T: Serialize>(&self, manifest: &T) -> Result<(), RunError> {
        let mut bytes = serde_json::to_vec_pretty(manifest).map_err(|e| RunError::Data(e.to_string()))?;
        bytes.push(b'\n');
        self.write_bytes("manifest.json", &bytes)
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 2.5e300, -0.0, 4.0, f64::MIN_POSITIVE] {
            assert_eq!(real(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn csv_and_atomic_write() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        let mut t = Table::new(&["a", "b"]);
        t.row([real(0.5), "x,y".to_string()]);
        out.csv("t.csv", t).unwrap();
        let text = fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(text, "a,b\n0.5,\"x,y\"\n");
        assert_eq!(out.files()[0].schema, "a,b");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
