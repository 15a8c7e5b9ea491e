//! Run configuration files.
//!
//! ```toml
//! rtl = ["minirv.v"]
//! top = "minirv"
//! labels = "labels.toml"
//! interface = "interface.toml"
//! program = "naive.s"        # assembled; `.hex` needs `metadata`
//! mode = "full"
//! output = "out"
//!
//! [params]
//! TRAP_ILLEGAL = 1
//!
//! [limits]
//! max_k = 16
//! jobs = 4
//! ```
//!
//! Relative paths are resolved against the configuration file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{run, Failure, PipelineError, Report, RunInputs, RunLimits, RunMode, Settings, Stage};
use crate::hdl::{elaborate_with, parse_sources, ElabOptions, FlatNetlist};
use crate::ifa::LabelConfig;
use crate::software::{assemble_with, CoreInterface, ProgramImage};

#[derive(Debug, Error)]
#[error("invalid run configuration: {0}")]
pub struct ConfigError(pub String);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub rtl: Vec<PathBuf>,
    #[serde(default)]
    pub top: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, u64>,
    pub labels: PathBuf,
    #[serde(default)]
    pub interface: Option<PathBuf>,
    /// Assembly source (`.s`) or hex image.
    #[serde(default)]
    pub program: Option<PathBuf>,
    /// Sidecar metadata of a hex image.
    #[serde(default)]
    pub metadata: Option<PathBuf>,
    /// Assembler constants that override `.equ` definitions.
    #[serde(default)]
    pub defines: BTreeMap<String, i64>,
    #[serde(default = "default_mode")]
    pub mode: RunMode,
    #[serde(default)]
    pub stack_depth: Option<usize>,
    #[serde(default)]
    pub limits: RunLimits,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_mode() -> RunMode {
    RunMode::Full
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.rtl.is_empty() {
            return Err(ConfigError("no RTL files".into()));
        }
        let needs_program = !matches!(self.mode, RunMode::None | RunMode::Legal);
        if needs_program && self.program.is_none() {
            return Err(ConfigError(format!("mode {} needs a program", self.mode)));
        }
        if self.mode != RunMode::None && self.interface.is_none() {
            return Err(ConfigError(format!("mode {} needs a core interface file", self.mode)));
        }
        if let Some(p) = &self.program {
            let is_asm = p.extension().is_some_and(|e| e == "s" || e == "S" || e == "asm");
            let needs_metadata = matches!(self.mode, RunMode::Jumps | RunMode::Stack | RunMode::Full);
            if !is_asm && self.metadata.is_none() && needs_metadata {
                return Err(ConfigError(format!(
                    "mode {} needs program metadata; give `metadata` or an assembly source",
                    self.mode
                )));
            }
        }
        Ok(())
    }

    pub fn settings(&self) -> Settings {
        Settings {
            mode: self.mode,
            limits: self.limits,
            stack_depth: self.stack_depth,
        }
    }
}

fn read(base: &Path, p: &Path) -> Result<String, PipelineError> {
    let full = base.join(p);
    std::fs::read_to_string(&full).map_err(|e| PipelineError::new(Stage::Load, format!("{}: {e}", full.display())))
}

/// Parses and elaborates RTL files.
pub fn load_design(files: &[(String, String)], top: Option<&str>, params: &BTreeMap<String, u64>) -> Result<FlatNetlist, PipelineError> {
    let sources: Vec<(&str, &str)> = files.iter().map(|(n, t)| (n.as_str(), t.as_str())).collect();
    let tree = parse_sources(&sources).map_err(|(f, e)| PipelineError::new(Stage::Load, format!("{f}: {e}")))?;
    elaborate_with(
        &tree,
        &ElabOptions {
            top: top.map(str::to_string),
            params: params.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        },
    )
    .map_err(|e| PipelineError::new(Stage::Load, e))
}

/// Reads every file named by `cfg`; relative paths start at `base`.
pub fn load_inputs(cfg: &RunConfig, base: &Path) -> Result<RunInputs, PipelineError> {
    let files = cfg
        .rtl
        .iter()
        .map(|p| Ok((p.display().to_string(), read(base, p)?)))
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let netlist = load_design(&files, cfg.top.as_deref(), &cfg.params)?;
    let labels = LabelConfig::from_toml(&read(base, &cfg.labels)?)
        .and_then(|l| l.resolve(&netlist))
        .map_err(|e| PipelineError::new(Stage::Load, e))?;
    let interface = match &cfg.interface {
        Some(p) => Some(CoreInterface::from_toml(&read(base, p)?).map_err(|e| PipelineError::new(Stage::Load, e))?),
        None => None,
    };
    let program = match &cfg.program {
        None => None,
        Some(p) => {
            let text = read(base, p)?;
            let is_asm = p.extension().is_some_and(|e| e == "s" || e == "S" || e == "asm");
            let img = if is_asm {
                let defines: Vec<(&str, i64)> = cfg.defines.iter().map(|(k, v)| (k.as_str(), *v)).collect();
                assemble_with(&text, &defines)
            } else {
                let meta = match &cfg.metadata {
                    Some(m) => read(base, m)?,
                    None => r#"{"entry":0,"call_sites":[],"hwloops":[],"symbols":{},"labels":{}}"#.to_string(),
                };
                ProgramImage::load(&text, &meta)
            };
            Some(img.map_err(|e| PipelineError::new(Stage::Load, format!("{}: {e}", p.display())))?)
        }
    };
    Ok(RunInputs {
        netlist,
        labels,
        interface,
        program,
    })
}

/// Loads, runs and, when `output` is set, writes the report (also a
/// partial one).
pub fn run_config(cfg: &RunConfig, base: &Path) -> Result<Report, Failure> {
    cfg.validate()
        .map_err(|e| PipelineError::new(Stage::Load, e))?;
    let inputs = load_inputs(cfg, base)?;
    let out = cfg.output.as_ref().map(|o| base.join(o));
    match run(&inputs, &cfg.settings()) {
        Ok(mut r) => {
            if let Some(dir) = &out {
                r.write(dir)?;
            }
            Ok(r)
        }
        Err(mut f) => {
            if let (Some(dir), Some(p)) = (&out, f.partial.as_mut()) {
                let _ = p.write(dir);
            }
            Err(f)
        }
    }
}
