//! Output directory layout, atomic writes and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chewseg::config::{Config, RunManifest};
use chewseg::data::participant_from_path;

pub const MANIFEST: &str = "manifest.txt";

/// One command's view of the output directory. Every artifact read is
/// digested into the manifest block appended by [`Workspace::finish`].
pub struct Workspace {
    root: PathBuf,
    command: &'static str,
    manifest: RunManifest,
    participants: Vec<String>,
}

/// A per-session artifact: `<stage>/<session>.csv`.
#[derive(Debug, Clone)]
pub struct SessionFile {
    pub session: String,
    pub participant: String,
    pub path: PathBuf,
}

impl Workspace {
    pub fn open(root: &Path, command: &'static str, cfg: &Config, participants: &[String]) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), command, manifest: RunManifest::new(cfg), participants: participants.to_vec() })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn keeps(&self, participant: &str) -> bool {
        self.participants.is_empty() || self.participants.iter().any(|p| p == participant)
    }

    pub fn note_input(&mut self, name: &str, bytes: &[u8]) {
        self.manifest.add_input(name, bytes);
    }

    /// Reads `rel`, failing with the command that produces it when absent.
    pub fn read(&mut self, rel: &str, producer: &str) -> Result<String> {
        let path = self.path(rel);
        if !path.exists() {
            bail!("missing artifact {}: run `chewseg {producer}` first", path.display());
        }
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        self.manifest.add_input(rel, text.as_bytes());
        Ok(text)
    }

    pub fn exists(&self, rel: &str) -> bool {
        self.path(rel).exists()
    }

    /// Session files of `stage`, sorted by name and filtered by participant.
    pub fn sessions(&self, stage: &str, producer: &str) -> Result<Vec<SessionFile>> {
        let dir = self.path(stage);
        let missing = || anyhow::anyhow!("missing artifacts in {}: run `chewseg {producer}` first", dir.display());
        let entries = fs::read_dir(&dir).map_err(|_| missing())?;
        let mut out = Vec::new();
        for e in entries {
            let path = e?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
            let Some(session) = name.strip_suffix(".csv") else { continue };
            let participant = participant_from_path(&path);
            if self.keeps(&participant) {
                out.push(SessionFile { session: session.to_string(), participant, path });
            }
        }
        out.sort_by(|a, b| a.session.cmp(&b.session));
        if out.is_empty() {
            return Err(missing());
        }
        Ok(out)
    }

    pub fn read_session(&mut self, stage: &str, f: &SessionFile) -> Result<String> {
        let text = fs::read_to_string(&f.path).with_context(|| format!("reading {}", f.path.display()))?;
        self.manifest.add_input(&format!("{stage}/{}", f.session), text.as_bytes());
        Ok(text)
    }

    /// Reads the matching session file of another stage.
    pub fn read_companion(&mut self, stage: &str, session: &str, producer: &str) -> Result<String> {
        self.read(&format!("{stage}/{session}.csv"), producer)
    }

    pub fn write(&self, rel: &str, contents: &str) -> Result<()> {
        write_atomic(&self.path(rel), contents.as_bytes())
    }

    pub fn write_session(&self, stage: &str, session: &str, contents: &str) -> Result<()> {
        self.write(&format!("{stage}/{session}.csv"), contents)
    }

    /// Appends this command's manifest block.
    pub fn finish(self) -> Result<()> {
        let path = self.path(MANIFEST);
        let mut text = if path.exists() { fs::read_to_string(&path)? } else { String::new() };
        text.push_str(&format!("[{}]\n", self.command));
        if !self.participants.is_empty() {
            text.push_str(&format!("participants = {}\n", self.participants.join(",")));
        }
        text.push_str(&self.manifest.to_text());
        text.push_str(&format!("manifest_hash = {}\n\n", self.manifest.hash()));
        write_atomic(&path, text.as_bytes())
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }
}

/// Writes to a sibling temp file, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        e
    }).with_context(|| format!("renaming onto {}", path.display()))
}
