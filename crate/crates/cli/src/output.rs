use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use toml::{Table, Value};

use crate::config::ExperimentConfig;

/// Float formatting shared by every CSV: 17 significant digits, which
/// round-trips an `f64` exactly.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Output directory of one invocation; remembers what it wrote.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
    started: Instant,
}

impl Artifacts {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn write(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut Vec<u8>) -> lrk_core::Result<()>,
    ) -> Result<PathBuf, Box<dyn std::error::Error + Send + Sync>> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        let path = self.dir.join(name);
        fs::File::create(&path)?.write_all(&buf)?;
        self.files.push(name.to_string());
        Ok(path)
    }

    /// `manifest-<command>.toml`: config echo, seed, worker count, versions,
    /// wall time and the list of files written.
    pub fn finish(
        self,
        command: &str,
        cfg: &ExperimentConfig,
        threads: usize,
    ) -> Result<PathBuf, Box<dyn std::error::Error + Send + Sync>> {
        let mut run = Table::new();
        run.insert("command".into(), Value::String(command.into()));
        run.insert("seed".into(), Value::String(cfg.run.seed.to_string()));
        run.insert("threads".into(), Value::Integer(threads as i64));
        run.insert("lrk_version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        run.insert("wall_time_seconds".into(), Value::Float(self.started.elapsed().as_secs_f64()));
        run.insert(
            "files".into(),
            Value::Array(self.files.iter().cloned().map(Value::String).collect()),
        );
        let mut doc = Table::new();
        doc.insert("manifest".into(), Value::Table(run));
        doc.insert("config".into(), Value::Table(Table::try_from(cfg)?));
        let path = self.dir.join(format!("manifest-{command}.toml"));
        fs::write(&path, toml::to_string(&doc)?)?;
        Ok(path)
    }
}
