//! Where results go.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub const DATA_DIR_VAR: &str = "VIBRELEVEL_DATA_DIR";

pub enum Sink {
    Stdout,
    File(PathBuf),
}

impl Sink {
    /// `--out` if given ("-" is stdout), else `$VIBRELEVEL_DATA_DIR/default_name`,
    /// else stdout.
    pub fn resolve(out: Option<&Path>, default_name: &str) -> Self {
        match out {
            Some(p) if p == Path::new("-") => Sink::Stdout,
            Some(p) => Sink::File(p.to_path_buf()),
            None => match std::env::var_os(DATA_DIR_VAR) {
                Some(dir) if !dir.is_empty() => Sink::File(PathBuf::from(dir).join(default_name)),
                _ => Sink::Stdout,
            },
        }
    }

    pub fn write_with(&self, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
        match self {
            Sink::Stdout => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                f(&mut lock)?;
                lock.flush()?;
            }
            Sink::File(path) => {
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)
                        .with_context(|| format!("creating {}", dir.display()))?;
                }
                let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
                let mut w = BufWriter::new(file);
                f(&mut w)?;
                w.flush()?;
                eprintln!("wrote {}", path.display());
            }
        }
        Ok(())
    }
}
