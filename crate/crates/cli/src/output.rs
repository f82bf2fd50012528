//! Output directory with atomic per-file writes and a checksum manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Scenario;

pub struct OutputDir {
    root: PathBuf,
    written: Mutex<BTreeMap<String, String>>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a Scenario,
    inputs: &'a BTreeMap<String, String>,
    outputs: &'a BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl OutputDir {
    pub fn create(root: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), written: Mutex::new(BTreeMap::new()) })
    }

    /// Writes `name` via a temporary file and a rename, recording its checksum.
    pub fn write(&self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let target = self.root.join(name);
        let tmp = self.root.join(format!(".{name}.tmp"));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &target)?;
        self.written.lock().expect("manifest lock").insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Writes `manifest.json` last; `inputs` maps input paths to their checksums.
    pub fn finish(self, scenario: &Scenario, inputs: &BTreeMap<String, String>) -> std::io::Result<()> {
        let outputs = self.written.into_inner().expect("manifest lock");
        let kind = scenario.kind.expect("resolved scenario has a kind");
        let manifest = Manifest {
            tool: "qcs",
            version: env!("CARGO_PKG_VERSION"),
            command: kind.name(),
            config: scenario,
            inputs,
            outputs: &outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
        text.push('\n');
        let out = OutputDir { root: self.root, written: Mutex::new(BTreeMap::new()) };
        out.write("manifest.json", text.as_bytes())
    }
}

/// CSV text builder; floats use the shortest representation that round-trips.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, fields: &[Field]) {
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match f {
                Field::F(x) if x.is_nan() => {}
                Field::F(x) if *x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e15) => write!(self.text, "{x:e}").unwrap(),
                Field::F(x) => write!(self.text, "{x}").unwrap(),
                Field::U(x) => write!(self.text, "{x}").unwrap(),
                Field::B(x) => self.text.push_str(if *x { "1" } else { "0" }),
                Field::S(s) => self.text.push_str(s),
            }
        }
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

pub enum Field<'a> {
    F(f64),
    U(u64),
    B(bool),
    S(&'a str),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows_are_plain_and_round_trip() {
        let mut c = Csv::new(&["a", "b", "c"]);
        c.row(&[Field::F(0.1 + 0.2), Field::U(3), Field::F(f64::NAN)]);
        c.row(&[Field::F(6.5e-9), Field::F(0.0), Field::F(f64::INFINITY)]);
        let text = String::from_utf8(c.into_bytes()).unwrap();
        assert_eq!(text, "a,b,c\n0.30000000000000004,3,\n6.5e-9,0,inf\n");
        assert_eq!("6.5e-9".parse::<f64>().unwrap(), 6.5e-9);
    }

    #[test]
    fn writes_are_recorded_with_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutputDir::create(dir.path()).unwrap();
        out.write("x.csv", b"abc").unwrap();
        assert_eq!(fs::read(dir.path().join("x.csv")).unwrap(), b"abc");
        let sums = out.written.lock().unwrap().clone();
        assert_eq!(sums["x.csv"], "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert!(!dir.path().join(".x.csv.tmp").exists());
    }
}
