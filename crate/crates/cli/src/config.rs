//! Run configuration: a single TOML document.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stochastic_poisson::integrate::Scheme;
use stochastic_poisson::models::ModelParams;
use stochastic_poisson::polynomial::Polynomial;
use stochastic_poisson::sde::expanded::AUDIT_TOLERANCE;
use stochastic_poisson::sde::ItoConvention;

/// A configuration problem, tagged with the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Check,
    Audit,
}

/// `"default"`, `"zero"`, or a polynomial table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Preset(String),
    Table(Polynomial),
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::Preset("default".into())
    }
}

/// `"default"`, `"none"`, or a list of polynomial tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseSpec {
    Preset(String),
    List(Vec<Polynomial>),
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::Preset("default".into())
    }
}

/// `"casimirs"`, the name of one model Casimir, or a named polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MonitorSpec {
    Preset(String),
    Custom { name: String, field: Polynomial },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    pub scheme: Scheme,
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
    /// Factor on the Itô correction used by Euler–Maruyama.
    pub convention: ItoConvention,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        IntegratorSection {
            scheme: Scheme::StratonovichHeun,
            dt: 1e-3,
            steps: 1000,
            seed: 0,
            convention: ItoConvention::Standard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub paths: PathBuf,
    pub stats: PathBuf,
    pub check: PathBuf,
    pub audit: PathBuf,
    /// Write every `path_stride`-th state of path 0.
    pub path_stride: usize,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            paths: "paths.csv".into(),
            stats: "stats.json".into(),
            check: "check.json".into(),
            audit: "audit.json".into(),
            path_stride: 1,
        }
    }
}

impl Outputs {
    /// Keep file names, replace directories.
    pub fn relocate(&mut self, dir: &Path) {
        for p in [&mut self.paths, &mut self.stats, &mut self.check, &mut self.audit] {
            let name = p.file_name().map(PathBuf::from).unwrap_or_else(|| p.clone());
            *p = dir.join(name);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSection {
    pub points: usize,
    pub seed: u64,
    pub antisymmetry_tolerance: f64,
    pub jacobi_tolerance: f64,
    pub compatibility_tolerance: f64,
    pub casimir_tolerance: f64,
}

impl Default for CheckSection {
    fn default() -> Self {
        CheckSection {
            points: 100,
            seed: 0,
            antisymmetry_tolerance: 1e-12,
            jacobi_tolerance: 1e-7,
            compatibility_tolerance: 1e-9,
            casimir_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSection {
    pub points: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for AuditSection {
    fn default() -> Self {
        AuditSection {
            points: 50,
            seed: 0,
            tolerance: AUDIT_TOLERANCE,
        }
    }
}

fn default_n_paths() -> usize {
    1
}

fn default_monitors() -> Vec<MonitorSpec> {
    vec![MonitorSpec::Preset("casimirs".into())]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    pub model: ModelParams,
    #[serde(default)]
    pub hamiltonian: FieldSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub initial: Vec<f64>,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    /// Largest tolerated fraction of blown-up paths.
    #[serde(default)]
    pub max_failure_fraction: f64,
    #[serde(default = "default_monitors")]
    pub monitors: Vec<MonitorSpec>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub check: CheckSection,
    #[serde(default)]
    pub audit: AuditSection,
}

impl RunConfig {
    /// Parse and validate the parts that do not need the model.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut value: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::new("<document>", e))?;
        // `parameters` may be omitted to take every default.
        if let Some(toml::Value::Table(model)) = value.get_mut("model") {
            model
                .entry("parameters")
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        }
        let config: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(value)).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::new(if path == "." { "<document>".into() } else { path }, e.into_inner())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("<file>", format!("{}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let ig = &self.integrator;
        if !(ig.dt > 0.0 && ig.dt.is_finite()) {
            return Err(ConfigError::new("integrator.dt", format!("must be positive and finite, got {}", ig.dt)));
        }
        if ig.steps == 0 {
            return Err(ConfigError::new("integrator.steps", "must be positive"));
        }
        if self.n_paths == 0 {
            return Err(ConfigError::new("n_paths", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.max_failure_fraction) {
            return Err(ConfigError::new("max_failure_fraction", "must lie in [0, 1]"));
        }
        if let Some(k) = self.initial.iter().position(|v| !v.is_finite()) {
            return Err(ConfigError::new(format!("initial[{k}]"), "must be finite"));
        }
        if self.outputs.path_stride == 0 {
            return Err(ConfigError::new("outputs.path_stride", "must be positive"));
        }
        if let FieldSpec::Preset(name) = &self.hamiltonian {
            if !matches!(name.as_str(), "default" | "zero") {
                return Err(ConfigError::new("hamiltonian", format!("unknown preset `{name}` (default, zero)")));
            }
        }
        if let NoiseSpec::Preset(name) = &self.noise {
            if !matches!(name.as_str(), "default" | "none") {
                return Err(ConfigError::new("noise", format!("unknown preset `{name}` (default, none)")));
            }
        }
        let c = &self.check;
        for (field, tol) in [
            ("check.antisymmetry_tolerance", c.antisymmetry_tolerance),
            ("check.jacobi_tolerance", c.jacobi_tolerance),
            ("check.compatibility_tolerance", c.compatibility_tolerance),
            ("check.casimir_tolerance", c.casimir_tolerance),
            ("audit.tolerance", self.audit.tolerance),
        ] {
            if !(tol >= 0.0 && tol.is_finite()) {
                return Err(ConfigError::new(field, "must be a nonnegative number"));
            }
        }
        if c.points == 0 {
            return Err(ConfigError::new("check.points", "must be positive"));
        }
        if self.audit.points == 0 {
            return Err(ConfigError::new("audit.points", "must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        initial = [1.0, 2.0, 3.0]
        [model]
        name = "so3_lie_poisson"
    "#;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.model, ModelParams::defaults("so3_lie_poisson").unwrap());
        assert_eq!(c.integrator, IntegratorSection::default());
        assert_eq!(c.n_paths, 1);
        assert_eq!(c.monitors, default_monitors());
    }

    #[test]
    fn errors_name_the_field() {
        let bad = MINIMAL.replace("initial", "[integrator]\ndt = -1.0\n[x]\ninitial");
        assert!(RunConfig::parse(&bad).is_err());
        let cases = [
            ("[integrator]\ndt = -1.0", "integrator.dt"),
            ("[integrator]\ndt = \"fast\"", "integrator.dt"),
            ("[integrator]\nscheme = \"rk4\"", "integrator.scheme"),
            ("n_paths = 0", "n_paths"),
            ("[model.parameters]\ninertia = [1.0, 2.0]", "model.parameters.inertia"),
            ("[model.parameters]\ninertai = [1.0, 2.0, 3.0]", "model.parameters"),
            ("hamiltonian = \"nope\"", "hamiltonian"),
        ];
        for (extra, field) in cases {
            let text = format!("initial = [1.0, 2.0, 3.0]\n{extra}\n[model]\nname = \"so3_lie_poisson\"\n");
            let text = if extra.starts_with("[model.parameters]") {
                format!("initial = [1.0, 2.0, 3.0]\n[model]\nname = \"so3_lie_poisson\"\n{extra}\n")
            } else {
                text
            };
            let err = RunConfig::parse(&text).unwrap_err();
            assert!(err.field.starts_with(field), "{extra}: {err}");
            assert!(err.to_string().contains(field));
        }
        let unknown = RunConfig::parse("[model]\nname = \"nope\"").unwrap_err();
        assert!(unknown.field.starts_with("model"), "{unknown}");
    }

    #[test]
    fn every_model_round_trips() {
        for d in stochastic_poisson::models::registry() {
            let config = RunConfig::parse(&format!("[model]\nname = \"{}\"", d.name)).unwrap();
            let text = config.to_toml();
            let again = RunConfig::parse(&text).unwrap();
            assert_eq!(config, again, "{}", d.name);
            assert_eq!(again.model, (d.defaults)());
        }
    }

    #[test]
    fn polynomial_specs_round_trip() {
        let text = r#"
            initial = [1.0, 2.0, 3.0]
            hamiltonian = { "2,0,0" = 0.5, "0,0,1" = -1.0 }
            noise = [{ "1,0,0" = 0.2 }, { "0,1,0" = 0.1 }]
            monitors = ["casimirs", { name = "x1", field = { "1,0,0" = 1.0 } }]
            [model]
            name = "so3_lie_poisson"
            [model.parameters]
            preset = "so21"
            inertia = [2.0, 2.0, 1.0]
        "#;
        let config = RunConfig::parse(text).unwrap();
        assert!(matches!(config.hamiltonian, FieldSpec::Table(_)));
        assert!(matches!(&config.noise, NoiseSpec::List(l) if l.len() == 2));
        assert_eq!(config.monitors.len(), 2);
        assert_eq!(RunConfig::parse(&config.to_toml()).unwrap(), config);
    }

    #[test]
    fn relocate_keeps_file_names() {
        let mut o = Outputs::default();
        o.relocate(Path::new("/tmp/out"));
        assert_eq!(o.paths, PathBuf::from("/tmp/out/paths.csv"));
        assert_eq!(o.audit, PathBuf::from("/tmp/out/audit.json"));
    }
}
