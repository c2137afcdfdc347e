//! Run directories and manifests.
//!
//! Every subcommand writes its artifacts into a directory named after the
//! command and a fingerprint of its inputs. The fingerprint makes output
//! placement deterministic: rerunning with identical inputs lands in the
//! same directory and overwrites the previous artifacts with identical
//! bytes, while any change to the inputs picks a fresh directory. Each run
//! leaves a `manifest.txt` recording the command line inputs and an
//! unedited echo of the config file.

use std::fmt::Display;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::config_file::FlatConfig;

/// Name of the per-run provenance file.
pub const MANIFEST_FILE: &str = "manifest.txt";

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "TALAB_OUT";

/// Output root resolution: `--out-dir` flag, then the environment
/// variable, then `talab-out` in the working directory.
pub fn out_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("talab-out"))
}

/// FNV-1a over the parts with a separator fold between them, so the same
/// bytes split differently hash differently.
pub fn fingerprint(parts: &[&str]) -> u64 {
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for byte in part.as_bytes() {
            hash ^= u64::from(*byte);
            hash = hash.wrapping_mul(PRIME);
        }
        hash ^= 0x1f;
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}

/// One run's output directory plus the manifest being accumulated for it.
pub struct RunDir {
    path: PathBuf,
    entries: Vec<(String, String)>,
    config_echo: String,
}

impl RunDir {
    /// Creates `<root>/<command>-<fingerprint>`. `inputs` lists the
    /// resolved command inputs; they seed both the fingerprint and the
    /// manifest's `[run]` section.
    pub fn create(
        root: &Path,
        command: &str,
        config: &FlatConfig,
        inputs: &[(&str, String)],
    ) -> Result<Self> {
        let mut parts: Vec<&str> = vec![command];
        for (key, value) in inputs {
            parts.push(key);
            parts.push(value);
        }
        parts.push(config.echo());
        let path = root.join(format!("{command}-{:016x}", fingerprint(&parts)));
        fs::create_dir_all(&path)
            .with_context(|| format!("creating run directory {}", path.display()))?;

        let mut entries = vec![("command".to_string(), command.to_string())];
        for (key, value) in inputs {
            entries.push((key.to_string(), value.clone()));
        }
        for spec in config.overrides() {
            entries.push(("override".to_string(), spec.clone()));
        }
        Ok(Self {
            path,
            entries,
            config_echo: config.echo().to_string(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    /// Adds a `key = value` line to the manifest's `[run]` section.
    pub fn record(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// Writes a text artifact into the run directory and records it.
    pub fn write_text(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.file(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.record("output", name);
        Ok(path)
    }

    /// Records an artifact the caller wrote itself (binary writers).
    pub fn record_output(&mut self, name: &str) {
        self.record("output", name);
    }

    /// Writes `manifest.txt` and consumes the run.
    pub fn finish(self) -> Result<PathBuf> {
        let mut text = String::from("[run]\n");
        for (key, value) in &self.entries {
            let _ = writeln!(text, "{key} = {value}");
        }
        text.push('\n');
        if self.config_echo.is_empty() {
            text.push_str("# config echo: none\n");
        } else {
            text.push_str("# config echo (verbatim)\n");
            text.push_str(&self.config_echo);
            if !self.config_echo.ends_with('\n') {
                text.push('\n');
            }
        }
        let path = self.file(MANIFEST_FILE);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_distinguishes_groupings() {
        assert_ne!(fingerprint(&["ab", "c"]), fingerprint(&["a", "bc"]));
        assert_eq!(fingerprint(&["ab", "c"]), fingerprint(&["ab", "c"]));
    }

    #[test]
    fn identical_inputs_reuse_the_directory() {
        let root = std::env::temp_dir().join(format!("talab-output-test-{}", std::process::id()));
        let config = FlatConfig::from_text("[solve]\nthreshold = 1e-5\n").unwrap();
        let one = RunDir::create(&root, "solve", &config, &[("net", "a.tntp".into())]).unwrap();
        let two = RunDir::create(&root, "solve", &config, &[("net", "a.tntp".into())]).unwrap();
        assert_eq!(one.path(), two.path());
        let other = RunDir::create(&root, "solve", &config, &[("net", "b.tntp".into())]).unwrap();
        assert_ne!(one.path(), other.path());
        fs::remove_dir_all(&root).unwrap();
    }

    #[test]
    fn manifest_lists_entries_and_echoes_config() {
        let root = std::env::temp_dir().join(format!("talab-manifest-test-{}", std::process::id()));
        let mut config = FlatConfig::from_text("[train]\nepochs = 2\n").unwrap();
        config.apply_override("train.epochs=3").unwrap();
        let mut run = RunDir::create(&root, "train", &config, &[("data", "d.jsonl".into())]).unwrap();
        run.write_text("history.csv", "epoch\n").unwrap();
        let manifest = run.finish().unwrap();
        let text = fs::read_to_string(manifest).unwrap();
        assert!(text.contains("command = train"));
        assert!(text.contains("data = d.jsonl"));
        assert!(text.contains("override = train.epochs=3"));
        assert!(text.contains("output = history.csv"));
        assert!(text.contains("[train]\nepochs = 2"));
        fs::remove_dir_all(&root).unwrap();
    }
}
