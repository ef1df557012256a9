//! Run manifests: a TSV record of what produced an output.
//!
//! Rows are `kind<TAB>name<TAB>value` with kinds `command`, `version`,
//! `seed`, `flag`, `input` (sha256 of the file) and `output` (sha256 of the
//! file). Nothing time- or host-dependent is recorded, so two runs with the
//! same manifest produced the same bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("{}: cannot read", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    pub command: String,
    pub seed: Option<u64>,
    pub flags: Vec<(String, String)>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self { command: command.to_string(), ..Self::default() }
    }

    pub fn flag(&mut self, name: &str, value: impl ToString) -> &mut Self {
        self.flags.push((name.to_string(), value.to_string()));
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    pub fn render(&self) -> Result<String> {
        let mut s = String::from("kind\tname\tvalue\n");
        writeln!(s, "command\t{}\t-", self.command)?;
        writeln!(s, "version\tipakit\t{}", env!("CARGO_PKG_VERSION"))?;
        let seed = self.seed.map_or_else(|| "-".to_string(), |v| v.to_string());
        writeln!(s, "seed\tseed\t{seed}")?;
        for (name, value) in &self.flags {
            writeln!(s, "flag\t{name}\t{value}")?;
        }
        for p in &self.inputs {
            writeln!(s, "input\t{}\t{}", p.display(), sha256_file(p)?)?;
        }
        for p in &self.outputs {
            writeln!(s, "output\t{}\t{}", p.display(), sha256_file(p)?)?;
        }
        Ok(s)
    }

    /// Path of the manifest written next to `primary`.
    pub fn path_for(primary: &Path) -> PathBuf {
        let mut name = primary.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.tsv");
        primary.with_file_name(name)
    }

    /// Write the manifest beside the first output.
    pub fn write(&self) -> Result<PathBuf> {
        let primary = self.outputs.first().context("manifest has no outputs")?;
        let path = Self::path_for(primary);
        fs::write(&path, self.render()?).with_context(|| format!("{}: cannot write", path.display()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_path_sits_beside_output() {
        assert_eq!(RunManifest::path_for(Path::new("out/m.bin")), PathBuf::from("out/m.bin.manifest.tsv"));
    }

    #[test]
    fn render_lists_digests() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("a.txt");
        fs::write(&f, b"abc").unwrap();
        let mut m = RunManifest::new("convert");
        m.flag("--seed", 3).input(&f);
        let text = m.render().unwrap();
        assert!(text.contains("ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"));
        assert!(text.contains("flag\t--seed\t3"));
        assert!(text.contains("seed\tseed\t-"));
    }
}
