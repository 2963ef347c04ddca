//! TOML run configuration. Every key is optional so that a file and command
//! line flags can be layered; [`ConfigFile::merge`] lets later layers win.
//!
//! ```toml
//! field = "field.csv"
//! load = "load.csv"
//! output = "out"
//! qoi = ["p", "dp:20"]
//! snapshots = [999]
//! workers = 4
//!
//! [material]
//! youngs_modulus = 200000.0
//! poisson_ratio = 0.3
//! sigma_y = 100.0
//! c = 40000.0
//! d = 400.0
//! q = 100.0
//! b = 10.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corrector::SolverSettings;
use crate::error::{Error, Result};
use crate::material::{MaterialInput, MaterialParams};
use crate::qoi::QoiKind;

use super::pipeline::{Mode, RunConfig};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "PLASCORR_WORKERS";
pub const DEFAULT_N_S: usize = 150;
pub const DEFAULT_S_PLUS: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Direct,
    Surrogate,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub fy_tolerance: Option<f64>,
    pub max_newton_iters: Option<usize>,
    pub fd_step: Option<f64>,
    pub bisection_fallback: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateSection {
    pub n_s: Option<usize>,
    pub s_plus: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub field: Option<PathBuf>,
    pub load: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub material_file: Option<PathBuf>,
    pub material: Option<MaterialInput>,
    pub mode: Option<ModeName>,
    pub qoi: Option<Vec<String>>,
    pub snapshots: Option<Vec<usize>>,
    pub components: Option<bool>,
    pub workers: Option<usize>,
    pub max_failure_fraction: Option<f64>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub surrogate: SurrogateSection,
}

fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

macro_rules! overlay {
    ($base:expr, $top:expr; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl ConfigFile {
    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: ConfigFile = parse_toml(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.field, &mut cfg.load, &mut cfg.output, &mut cfg.material_file]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Values set in `top` replace those in `self`.
    pub fn merge(mut self, top: ConfigFile) -> ConfigFile {
        overlay!(self, top; field, load, output, mode, qoi, snapshots, components, workers, max_failure_fraction);
        if top.material.is_some() || top.material_file.is_some() {
            self.material = top.material;
            self.material_file = top.material_file;
        }
        overlay!(self.solver, top.solver; fy_tolerance, max_newton_iters, fd_step, bisection_fallback);
        overlay!(self.surrogate, top.surrogate; n_s, s_plus);
        self
    }

    pub fn material(&self) -> Result<MaterialParams> {
        match (&self.material, &self.material_file) {
            (Some(m), None) => MaterialParams::try_from(*m),
            (None, Some(path)) => MaterialParams::try_from(parse_toml::<MaterialInput>(path)?),
            (Some(_), Some(_)) => Err(Error::Input("give either [material] or material_file, not both".into())),
            (None, None) => Err(Error::Input("material parameters are required".into())),
        }
    }

    pub fn settings(&self, material: &MaterialParams) -> SolverSettings {
        let mut s = SolverSettings::for_material(material);
        let o = &self.solver;
        if let Some(v) = o.fy_tolerance {
            s.fy_tolerance = v;
        }
        if let Some(v) = o.max_newton_iters {
            s.max_newton_iters = v;
        }
        if let Some(v) = o.fd_step {
            s.fd_step = v;
        }
        if let Some(v) = o.bisection_fallback {
            s.bisection_fallback = v;
        }
        s
    }

    pub fn qois(&self) -> Result<Vec<QoiKind>> {
        match &self.qoi {
            Some(list) => list.iter().map(|s| s.parse()).collect(),
            None => Ok(vec![QoiKind::PFinal]),
        }
    }

    pub fn into_run_config(self) -> Result<RunConfig> {
        let required =
            |p: &Option<PathBuf>, name: &str| p.clone().ok_or_else(|| Error::Input(format!("`{name}` is required")));
        let material = self.material()?;
        let mode = match self.mode.unwrap_or(ModeName::Direct) {
            ModeName::Direct => Mode::Direct,
            ModeName::Surrogate => Mode::Surrogate {
                n_s: self.surrogate.n_s.unwrap_or(DEFAULT_N_S),
                s_plus: self.surrogate.s_plus.unwrap_or(DEFAULT_S_PLUS),
            },
        };
        Ok(RunConfig {
            field: required(&self.field, "field")?,
            load: required(&self.load, "load")?,
            output: required(&self.output, "output")?,
            settings: self.settings(&material),
            material,
            mode,
            qois: self.qois()?,
            snapshots: self.snapshots.clone().unwrap_or_default(),
            components: self.components.unwrap_or(false),
            workers: match self.workers {
                Some(w) => w,
                None => default_workers()?,
            },
            max_failure_fraction: self.max_failure_fraction.unwrap_or(0.0),
        })
    }
}

/// Worker count from the environment, else the available parallelism.
pub fn default_workers() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Input(format!("{WORKERS_ENV}=`{v}` is not a positive integer"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
field = "f.csv"
load = "l.csv"
output = "out"
qoi = ["p", "dp:2"]
workers = 3
mode = "surrogate"

[material]
youngs_modulus = 200000.0
poisson_ratio = 0.3
sigma_y = 100.0
c = 40000.0
d = 400.0
q = 100.0
b = 10.0

[solver]
max_newton_iters = 20

[surrogate]
n_s = 40
"#;

    #[test]
    fn parses_and_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, TEXT).unwrap();
        let cfg = ConfigFile::from_path(&path).unwrap();
        assert_eq!(cfg.field.as_deref(), Some(dir.path().join("f.csv").as_path()));
        let run = cfg.into_run_config().unwrap();
        assert_eq!(run.material, MaterialParams::reference_steel(0.3).unwrap());
        assert_eq!(run.qois, vec![QoiKind::PFinal, QoiKind::DeltaP(2)]);
        assert_eq!(run.mode, Mode::Surrogate { n_s: 40, s_plus: 12.0 });
        assert_eq!(run.settings.max_newton_iters, 20);
        assert_eq!(run.settings.fy_tolerance, 1e-9 * 100.0);
        assert_eq!(run.workers, 3);
    }

    #[test]
    fn flags_override_file() {
        let base: ConfigFile = toml::from_str(TEXT).unwrap();
        let top = ConfigFile {
            workers: Some(1),
            mode: Some(ModeName::Direct),
            ..Default::default()
        };
        let run = base.merge(top).into_run_config().unwrap();
        assert_eq!(run.workers, 1);
        assert_eq!(run.mode, Mode::Direct);
        assert_eq!(run.qois.len(), 2);
    }

    #[test]
    fn unknown_keys_and_missing_material_rejected() {
        assert!(toml::from_str::<ConfigFile>("fied = \"x\"").is_err());
        let cfg: ConfigFile = toml::from_str("field = \"a\"\nload = \"b\"\noutput = \"c\"").unwrap();
        assert!(matches!(cfg.into_run_config(), Err(Error::Input(_))));
    }
}
