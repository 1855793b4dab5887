//! Deterministic output files.
//!
//! Every file starts with provenance: CSV and Matrix Market files carry a
//! comment line (`#` resp. `%`) with the software version and the config
//! fingerprint; JSON files wrap their payload as `{"meta": …, "data": …}`.
//! Nothing time- or host-dependent is written, so reruns are byte-identical.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::sparse::SparseSymMatrix;

pub const SOFTWARE: &str = "doublon";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 of the canonical JSON encoding of `config`, hex encoded.
pub fn fingerprint<T: Serialize>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub software: String,
    pub version: String,
    pub fingerprint: String,
    pub command: String,
    /// The full configuration, defaults included.
    pub config: serde_json::Value,
    pub notes: Vec<String>,
}

impl Metadata {
    pub fn new<T: Serialize>(command: &str, config: &T) -> Result<Self> {
        Ok(Self {
            software: SOFTWARE.into(),
            version: VERSION.into(),
            fingerprint: fingerprint(config)?,
            command: command.into(),
            config: serde_json::to_value(config)?,
            notes: Vec::new(),
        })
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    fn banner(&self) -> String {
        format!("{} {} fingerprint={}", self.software, self.version, self.fingerprint)
    }
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    meta: &'a Metadata,
    data: &'a T,
}

/// An output directory; records every file written, in order.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    meta: Metadata,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>, meta: Metadata) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            meta,
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn meta(&self) -> &Metadata {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut Metadata {
        &mut self.meta
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn open(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.root.join(name);
        let f = File::create(&path)?;
        self.written.push(path);
        Ok(BufWriter::new(f))
    }

    /// CSV with a leading `# provenance` comment line.
    pub fn csv<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let banner = self.meta.banner();
        let mut w = self.open(name)?;
        writeln!(w, "# {banner}")?;
        body(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, data: &T) -> Result<()> {
        let meta = self.meta.clone();
        let mut w = self.open(name)?;
        serde_json::to_writer_pretty(
            &mut w,
            &Envelope {
                meta: &meta,
                data,
            },
        )?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// Matrix Market coordinate dump of a sector Hamiltonian.
    pub fn matrix_market(&mut self, name: &str, h: &SparseSymMatrix) -> Result<()> {
        let banner = self.meta.banner();
        let mut buf = Vec::new();
        h.write_coordinate(&mut buf)?;
        let text = String::from_utf8(buf).expect("ascii output");
        let mut lines = text.lines();
        let mut w = self.open(name)?;
        // the header line must stay first
        if let Some(header) = lines.next() {
            writeln!(w, "{header}")?;
        }
        writeln!(w, "% {banner}")?;
        for l in lines {
            writeln!(w, "{l}")?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Cfg {
        n: usize,
        g: f64,
    }

    #[test]
    fn fingerprint_is_stable_and_sensitive() {
        let a = fingerprint(&Cfg { n: 5, g: 0.25 }).unwrap();
        assert_eq!(a, fingerprint(&Cfg { n: 5, g: 0.25 }).unwrap());
        assert_ne!(a, fingerprint(&Cfg { n: 5, g: 0.26 }).unwrap());
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn files_carry_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let meta = Metadata::new("test", &Cfg { n: 5, g: 0.25 }).unwrap();
        let fp = meta.fingerprint.clone();
        let mut out = OutputDir::create(dir.path(), meta).unwrap();
        out.csv("a.csv", |w| writeln!(w, "x\n1")).unwrap();
        out.json("a.json", &[1.5, 2.0]).unwrap();
        let csv = fs::read_to_string(dir.path().join("a.csv")).unwrap();
        assert!(csv.starts_with(&format!("# doublon {VERSION} fingerprint={fp}\n")));
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();
        assert_eq!(json["meta"]["fingerprint"], fp.as_str());
        assert_eq!(json["meta"]["version"], VERSION);
        assert_eq!(json["data"][0], 1.5);
        assert_eq!(out.written().len(), 2);
    }
}
