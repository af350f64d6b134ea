use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use mixedreg_core::kkt::KktOptions;
use mixedreg_core::presets::try_spec_with;
use mixedreg_core::{Error, ProblemSpec};

use crate::{Failure, GlobalArgs};

/// Resolved settings of one invocation.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: &'static str,
    pub config: Option<PathBuf>,
    pub levels: RangeInclusive<usize>,
    pub newton_tol: f64,
    pub kkt_tol: f64,
    pub active_tol: f64,
    pub damping: f64,
    pub max_iter: usize,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub threads: usize,
}

impl RunConfig {
    pub fn from_args(command: &'static str, g: &GlobalArgs, default_levels: RangeInclusive<usize>) -> Self {
        Self {
            command,
            config: g.config.clone(),
            levels: g.levels.clone().unwrap_or(default_levels),
            newton_tol: g.newton_tol,
            kkt_tol: g.kkt_tol,
            active_tol: g.active_tol,
            damping: g.damping,
            max_iter: g.max_iter,
            out_dir: g.out.clone(),
            seed: g.seed,
            threads: g.threads,
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        for (name, v) in [("newton-tol", self.newton_tol), ("kkt-tol", self.kkt_tol), ("active-tol", self.active_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Failure::Config(format!("--{name} must be positive, got {v}")).into());
            }
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Failure::Config(format!("--damping must lie in (0, 1], got {}", self.damping)).into());
        }
        if self.levels.is_empty() {
            return Err(Failure::Config("level range is empty".into()).into());
        }
        if self.max_iter == 0 {
            return Err(Failure::Config("--max-iter must be positive".into()).into());
        }
        Ok(())
    }

    pub fn kkt_options(&self) -> KktOptions {
        KktOptions {
            damping: self.damping,
            max_iter: self.max_iter,
            kkt_tol: self.kkt_tol,
            active_tol: self.active_tol,
            ..Default::default()
        }
    }

    /// The problem from `--config`, or the built-in default.
    pub fn load_spec(&self) -> anyhow::Result<ProblemSpec> {
        let Some(path) = &self.config else {
            return Ok(try_spec_with(&[])?);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        ProblemSpec::from_toml_str(&text).map_err(|e| diagnostic(path, &text, e).into())
    }
}

fn diagnostic(path: &Path, text: &str, e: Error) -> Failure {
    match e {
        Error::Parse { field, message } => {
            let line = field
                .strip_prefix("config line ")
                .and_then(|n| n.parse::<usize>().ok())
                .or_else(|| locate_field(text, &field));
            match line {
                Some(n) if field.starts_with("config line") => {
                    Failure::Config(format!("{}:{n}: {message}", path.display()))
                }
                Some(n) => Failure::Config(format!("{}:{n}: {field}: {message}", path.display())),
                None => Failure::Config(format!("{}: {field}: {message}", path.display())),
            }
        }
        other => Failure::Config(format!("{}: {other}", path.display())),
    }
}

/// 1-based line of `section.key` (or of `[section]`) in TOML `text`. Anything
/// after the first space in `field` is ignored.
pub fn locate_field(text: &str, field: &str) -> Option<usize> {
    let path = field.split_whitespace().next()?;
    let (section, key) = match path.split_once('.') {
        Some((s, k)) => (s, Some(k)),
        None => (path, None),
    };
    let mut current = "";
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim();
            if key.is_none() && current == section {
                return Some(i + 1);
            }
            continue;
        }
        if let Some(key) = key {
            if current == section {
                if let Some(rest) = line.strip_prefix(key) {
                    if rest.trim_start().starts_with('=') {
                        return Some(i + 1);
                    }
                }
            }
        }
    }
    None
}
