//! The three run modes and the model listing.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use stochastic_poisson::algebroid::check_compatibility;
use stochastic_poisson::integrate::{casimir_monitor, run_ensemble, simulate, EnsembleStats, IntegratorConfig, Monitor};
use stochastic_poisson::models::{registry, sample_points, ModelInstance};
use stochastic_poisson::poisson::{antisymmetry_residual, check_jacobi};
use stochastic_poisson::sde::expanded::AuditReport;
use stochastic_poisson::sde::{compile_with, StochasticHamiltonianSystem};
use stochastic_poisson::{Error, ScalarField};

use crate::config::{ConfigError, FieldSpec, Mode, MonitorSpec, NoiseSpec, RunConfig};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    /// Too many paths blew up; outputs were still written.
    BlowUp(String),
    Io(String),
    Numerical(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) | RunError::Io(_) | RunError::Numerical(_) => 1,
            RunError::BlowUp(_) => 2,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::BlowUp(m) => write!(f, "numerical blow-up: {m}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
            RunError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

fn config_err(field: &str) -> impl Fn(Error) -> RunError + '_ {
    move |e| RunError::Config(ConfigError::new(field, e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// The model plus any Hamiltonian/noise overrides from the config.
pub struct Prepared {
    pub model: ModelInstance,
    pub system: StochasticHamiltonianSystem,
    pub overridden: bool,
}

pub fn prepare(config: &RunConfig) -> Result<Prepared, RunError> {
    let model = config.model.build().map_err(config_err("model.parameters"))?;
    let m = model.dim();
    let h = match &config.hamiltonian {
        FieldSpec::Preset(name) if name == "zero" => ScalarField::zero(m),
        FieldSpec::Preset(_) => model.hamiltonian().clone(),
        FieldSpec::Table(p) => p.to_field(m).map_err(config_err("hamiltonian"))?,
    };
    let noise = match &config.noise {
        NoiseSpec::Preset(name) if name == "none" => Vec::new(),
        NoiseSpec::Preset(_) => model.noise().to_vec(),
        NoiseSpec::List(list) => list
            .iter()
            .enumerate()
            .map(|(k, p)| p.to_field(m).map_err(|e| RunError::Config(ConfigError::new(format!("noise[{k}]"), e))))
            .collect::<Result<_, _>>()?,
    };
    let overridden = config.hamiltonian != FieldSpec::default() || config.noise != NoiseSpec::default();
    let system = StochasticHamiltonianSystem::new(model.structure().clone(), h, noise).map_err(config_err("noise"))?;
    Ok(Prepared {
        model,
        system,
        overridden,
    })
}

fn monitors(config: &RunConfig, prepared: &Prepared) -> Result<Vec<Monitor>, RunError> {
    let structure = prepared.model.structure();
    let m = prepared.model.dim();
    let mut out = Vec::new();
    for (k, spec) in config.monitors.iter().enumerate() {
        let field = format!("monitors[{k}]");
        match spec {
            MonitorSpec::Preset(name) if name == "casimirs" => {
                for c in &prepared.model.casimirs {
                    let mo = casimir_monitor(structure, c.field.clone()).map_err(config_err(&field))?;
                    out.push(mo.with_name(c.name.clone()));
                }
            }
            MonitorSpec::Preset(name) => {
                let c = prepared.model.casimirs.iter().find(|c| &c.name == name).ok_or_else(|| {
                    let known: Vec<_> = prepared.model.casimirs.iter().map(|c| c.name.as_str()).collect();
                    ConfigError::new(&field, format!("unknown Casimir `{name}` (model provides {known:?})"))
                })?;
                let mo = casimir_monitor(structure, c.field.clone()).map_err(config_err(&field))?;
                out.push(mo.with_name(name.clone()));
            }
            MonitorSpec::Custom { name, field: poly } => {
                let f = poly.to_field(m).map_err(config_err(&field))?;
                let mo = casimir_monitor(structure, f).map_err(config_err(&field))?;
                out.push(mo.with_name(name.clone()));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct StatsReport {
    pub model: String,
    pub labels: Vec<String>,
    pub initial: Vec<f64>,
    pub convention: String,
    pub final_time: f64,
    pub stats: EnsembleStats,
}

pub fn simulate_mode(config: &RunConfig) -> Result<StatsReport, RunError> {
    let prepared = prepare(config)?;
    let m = prepared.model.dim();
    if config.initial.len() != m {
        return Err(ConfigError::new(
            "initial",
            format!("model `{}` has dimension {m}, got {} coordinates", config.model.name(), config.initial.len()),
        )
        .into());
    }
    let ig = &config.integrator;
    let cfg = IntegratorConfig::new(ig.scheme, ig.dt, ig.steps, ig.seed).map_err(config_err("integrator"))?;
    let dynamics = compile_with(&prepared.system, ig.convention);
    let monitors = monitors(config, &prepared)?;
    let stats = run_ensemble(&dynamics, &config.initial, &cfg, config.n_paths, &monitors).map_err(|e| match e {
        Error::NonFiniteInput { .. } | Error::DimensionMismatch { .. } | Error::NonFiniteValue { .. } => {
            RunError::Config(ConfigError::new("initial", e))
        }
        other => RunError::Numerical(other.to_string()),
    })?;

    match simulate(&dynamics, &config.initial, &cfg) {
        Ok(path) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let header: Vec<String> = std::iter::once("t".to_string()).chain((1..=m).map(|i| format!("z{i}"))).collect();
            w.write_record(&header).map_err(|e| RunError::Io(e.to_string()))?;
            for (k, (t, z)) in path.times.iter().zip(&path.states).enumerate() {
                if k % config.outputs.path_stride != 0 && k != path.states.len() - 1 {
                    continue;
                }
                let row: Vec<String> = std::iter::once(*t).chain(z.iter().copied()).map(|v| format!("{v:.16e}")).collect();
                w.write_record(&row).map_err(|e| RunError::Io(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| RunError::Io(e.to_string()))?;
            write_file(&config.outputs.paths, &String::from_utf8(bytes).expect("ascii csv"))?;
        }
        Err(e) => log::warn!("path 0 was not exported: {e}"),
    }

    let report = StatsReport {
        model: config.model.name().to_string(),
        labels: prepared.model.structure().labels().to_vec(),
        initial: config.initial.clone(),
        convention: ig.convention.to_string(),
        final_time: cfg.final_time(),
        stats,
    };
    write_file(&config.outputs.stats, &to_json(&report))?;

    let fraction = report.stats.failure_fraction();
    if fraction > config.max_failure_fraction {
        let first = &report.stats.failures[0];
        return Err(RunError::BlowUp(format!(
            "{} of {} paths failed (path {} at step {}), above max_failure_fraction = {}",
            report.stats.n_failed, report.stats.n_paths, first.path, first.step, config.max_failure_fraction
        )));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub model: String,
    pub points: usize,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub fn check_mode(config: &RunConfig) -> Result<CheckReport, RunError> {
    let prepared = prepare(config)?;
    let c = &config.check;
    let samples = sample_points(prepared.model.dim(), c.points, c.seed);
    let structure = prepared.model.structure();
    let numeric = |e: Error| RunError::Numerical(e.to_string());
    let mut checks = Vec::new();
    let mut push = |name: String, value: f64, tolerance: f64| {
        checks.push(CheckResult {
            name,
            value,
            tolerance,
            pass: value <= tolerance,
        })
    };
    push(
        "antisymmetry".into(),
        antisymmetry_residual(structure, &samples).map_err(numeric)?.max(),
        c.antisymmetry_tolerance,
    );
    push(
        "jacobi".into(),
        check_jacobi(structure, &samples).map_err(numeric)?.max(),
        c.jacobi_tolerance,
    );
    if let Some(algebroid) = &prepared.model.algebroid {
        let base: Vec<Vec<f64>> = samples.iter().map(|z| z[..algebroid.base_dim()].to_vec()).collect();
        let report = check_compatibility(algebroid, &base).map_err(numeric)?;
        push("compatibility.anchor".into(), report.max_anchor(), c.compatibility_tolerance);
        push("compatibility.jacobi".into(), report.max_jacobi(), c.compatibility_tolerance);
    }
    for casimir in &prepared.model.casimirs {
        let mo = casimir_monitor(structure, casimir.field.clone()).map_err(numeric)?;
        push(
            format!("casimir.{}", casimir.name),
            mo.casimir_residual().unwrap_or(f64::INFINITY),
            c.casimir_tolerance,
        );
    }
    let report = CheckReport {
        model: config.model.name().to_string(),
        points: c.points,
        seed: c.seed,
        checks,
    };
    write_file(&config.outputs.check, &to_json(&report))?;
    Ok(report)
}

pub fn audit_mode(config: &RunConfig) -> Result<AuditReport, RunError> {
    let prepared = prepare(config)?;
    let Some(expanded) = &prepared.model.expanded else {
        return Err(ConfigError::new(
            "model.name",
            format!("`{}` has no expanded equations to audit", config.model.name()),
        )
        .into());
    };
    if prepared.overridden {
        log::warn!("hamiltonian/noise overrides do not apply to the audit, which uses the model parameters");
    }
    let a = &config.audit;
    let samples = sample_points(prepared.model.dim(), a.points, a.seed);
    let report = expanded
        .audit(&samples, a.tolerance)
        .map_err(|e| RunError::Numerical(e.to_string()))?;
    write_file(&config.outputs.audit, &to_json(&report))?;
    Ok(report)
}

/// Dispatch on `mode`, falling back to the config's own `mode` field.
pub fn run(config: &RunConfig, mode: Option<Mode>) -> Result<String, RunError> {
    let mode = mode
        .or(config.mode)
        .ok_or_else(|| ConfigError::new("mode", "not set (simulate, check or audit)"))?;
    match mode {
        Mode::Simulate => {
            let r = simulate_mode(config)?;
            let mut s = format!(
                "{}: {} paths, {} failed, T = {}\n",
                r.model,
                r.stats.n_paths,
                r.stats.n_failed,
                r.final_time
            );
            for (i, (m, se)) in r.stats.final_mean().iter().zip(r.stats.final_std_error()).enumerate() {
                let _ = writeln!(s, "  E[{}](T) = {m:.6e} ± {se:.1e}", r.labels[i]);
            }
            for mo in &r.stats.monitors {
                let _ = writeln!(s, "  {} drift: max {:.3e}", mo.name, mo.max_relative_drift);
            }
            Ok(s)
        }
        Mode::Check => {
            let r = check_mode(config)?;
            let mut s = String::new();
            for c in &r.checks {
                let verdict = if c.pass { "PASS" } else { "FAIL" };
                let _ = writeln!(s, "{verdict} {:<24} {:.3e} (tolerance {:.0e})", c.name, c.value, c.tolerance);
            }
            Ok(s)
        }
        Mode::Audit => {
            let r = audit_mode(config)?;
            let flagged = r.flagged_terms();
            let mut s = format!(
                "audit {}: {} comparisons at {} points, {} terms flagged (tolerance {:.0e}, max rel err {:.3e})\n",
                r.equation,
                r.checked,
                r.points,
                flagged.len(),
                r.tolerance,
                r.max_relative_error
            );
            for note in &r.notes {
                let _ = writeln!(s, "  note: {note}");
            }
            if !r.skipped.is_empty() {
                let _ = writeln!(s, "  {} parts not printed in the expanded form, skipped", r.skipped.len());
            }
            for (line, part) in &flagged {
                let _ = writeln!(s, "  FLAGGED {line} [{part}]");
            }
            Ok(s)
        }
    }
}

/// One row per registered model: name, dimension, summary and parameter schema.
pub fn list_models() -> String {
    let mut s = format!("{:<18} | {:<28} | {:<60} | parameters\n", "model", "dimension", "summary");
    for d in registry() {
        let schema: Vec<String> = d.schema.iter().map(|p| format!("{} ({}) = {}", p.name, p.kind, p.default)).collect();
        let _ = writeln!(s, "{:<18} | {:<28} | {:<60} | {}", d.name, d.dimensions, d.summary, schema.join("; "));
    }
    s
}
