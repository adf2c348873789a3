//! Time stepping of compiled dynamics and Monte Carlo ensembles.
//!
//! Euler–Maruyama consumes the Itô drift, Heun the Stratonovich drift. Path
//! `i` of an ensemble draws its increments from `NoiseStream::new(derive_path_seed(seed, i))`,
//! `r` normals per step scaled by `√dt`; a single simulated path is path 0.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_point, ScalarField};
use crate::poisson::{bracket, PoissonStructure};
use crate::rng::{derive_path_seed, NoiseStream};
use crate::sde::CompiledDynamics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EulerMaruyama,
    StratonovichHeun,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::EulerMaruyama => "euler_maruyama",
            Scheme::StratonovichHeun => "stratonovich_heun",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler_maruyama" => Ok(Scheme::EulerMaruyama),
            "stratonovich_heun" => Ok(Scheme::StratonovichHeun),
            other => Err(Error::InvalidArgument(format!(
                "unknown scheme `{other}` (expected `euler_maruyama` or `stratonovich_heun`)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
}

impl IntegratorConfig {
    pub fn new(scheme: Scheme, dt: f64, steps: usize, seed: u64) -> Result<Self> {
        let cfg = IntegratorConfig { scheme, dt, steps, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive and finite, got {}", self.dt)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("steps must be positive".into()));
        }
        if !(self.dt * self.steps as f64).is_finite() {
            return Err(Error::InvalidArgument("dt·steps overflows".into()));
        }
        Ok(())
    }

    pub fn final_time(&self) -> f64 {
        self.dt * self.steps as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub times: Vec<f64>,
    /// `steps + 1` states, the first being the initial condition.
    pub states: Vec<Vec<f64>>,
    /// The realized Brownian increments, one row per step.
    pub increments: Vec<Vec<f64>>,
}

impl SamplePath {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().map_or(&[], Vec::as_slice)
    }
}

fn step(dynamics: &CompiledDynamics, scheme: Scheme, z: &[f64], dt: f64, dw: &DVector<f64>) -> Result<DVector<f64>> {
    let zv = DVector::from_column_slice(z);
    match scheme {
        Scheme::EulerMaruyama => {
            let (a, sigma) = dynamics.ito_coefficients(z)?;
            Ok(zv + a * dt + sigma * dw)
        }
        Scheme::StratonovichHeun => {
            let (a, sigma) = dynamics.stratonovich_coefficients(z)?;
            let predictor = &zv + &a * dt + &sigma * dw;
            if predictor.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue {
                    context: "Heun predictor".into(),
                });
            }
            let (a2, sigma2) = dynamics.stratonovich_coefficients(predictor.as_slice())?;
            Ok(zv + (a + a2) * (0.5 * dt) + (sigma + sigma2) * dw * 0.5)
        }
    }
}

/// Step through `steps` increments drawn by `next_increment`, calling `visit(k, z_k)`
/// for `k = 0..=steps`. A non-finite state or failed evaluation aborts with
/// `BlowUp` naming the step that produced it.
fn drive(
    dynamics: &CompiledDynamics,
    z0: &[f64],
    scheme: Scheme,
    dt: f64,
    steps: usize,
    mut next_increment: impl FnMut(usize) -> DVector<f64>,
    mut visit: impl FnMut(usize, &[f64], Option<&DVector<f64>>),
) -> Result<()> {
    let mut z = z0.to_vec();
    visit(0, &z, None);
    for k in 0..steps {
        let dw = next_increment(k);
        let next = step(dynamics, scheme, &z, dt, &dw).map_err(|_| Error::BlowUp { step: k + 1 })?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { step: k + 1 });
        }
        z.copy_from_slice(next.as_slice());
        visit(k + 1, &z, Some(&dw));
    }
    Ok(())
}

fn check_start(dynamics: &CompiledDynamics, z0: &[f64], dt: f64) -> Result<()> {
    check_point("initial point", z0, dynamics.dim())?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive and finite, got {dt}")));
    }
    Ok(())
}

/// Integrate along caller-supplied Brownian increments (each of length `r`).
pub fn integrate_with_increments(
    dynamics: &CompiledDynamics,
    z0: &[f64],
    scheme: Scheme,
    dt: f64,
    increments: &[Vec<f64>],
) -> Result<SamplePath> {
    check_start(dynamics, z0, dt)?;
    let r = dynamics.noise_dim();
    if let Some(bad) = increments.iter().find(|w| w.len() != r) {
        return Err(Error::dim("Brownian increment", r, bad.len()));
    }
    let mut path = SamplePath {
        times: Vec::with_capacity(increments.len() + 1),
        states: Vec::with_capacity(increments.len() + 1),
        increments: increments.to_vec(),
    };
    drive(
        dynamics,
        z0,
        scheme,
        dt,
        increments.len(),
        |k| DVector::from_column_slice(&increments[k]),
        |k, z, _| {
            path.times.push(k as f64 * dt);
            path.states.push(z.to_vec());
        },
    )?;
    Ok(path)
}

fn path_noise(seed: u64, index: u64, r: usize, dt: f64) -> impl FnMut(usize) -> DVector<f64> {
    let mut stream = NoiseStream::new(derive_path_seed(seed, index));
    let scale = dt.sqrt();
    move |_| {
        let mut dw = DVector::zeros(r);
        stream.fill_normal(dw.as_mut_slice(), scale);
        dw
    }
}

/// Single path with the configured scheme.
pub fn simulate(dynamics: &CompiledDynamics, z0: &[f64], cfg: &IntegratorConfig) -> Result<SamplePath> {
    cfg.validate()?;
    check_start(dynamics, z0, cfg.dt)?;
    let r = dynamics.noise_dim();
    let mut path = SamplePath {
        times: Vec::with_capacity(cfg.steps + 1),
        states: Vec::with_capacity(cfg.steps + 1),
        increments: Vec::with_capacity(cfg.steps),
    };
    drive(
        dynamics,
        z0,
        cfg.scheme,
        cfg.dt,
        cfg.steps,
        path_noise(cfg.seed, 0, r, cfg.dt),
        |k, z, dw| {
            path.times.push(k as f64 * cfg.dt);
            path.states.push(z.to_vec());
            if let Some(dw) = dw {
                path.increments.push(dw.as_slice().to_vec());
            }
        },
    )?;
    Ok(path)
}

fn require_scheme(cfg: &IntegratorConfig, expected: Scheme) -> Result<()> {
    if cfg.scheme != expected {
        return Err(Error::InvalidArgument(format!(
            "configuration selects `{}` but `{expected}` was called",
            cfg.scheme
        )));
    }
    Ok(())
}

/// `z_{k+1} = z_k + ito_drift(z_k) dt + σ(z_k) ΔB_k`.
pub fn euler_maruyama(dynamics: &CompiledDynamics, z0: &[f64], cfg: &IntegratorConfig) -> Result<SamplePath> {
    require_scheme(cfg, Scheme::EulerMaruyama)?;
    simulate(dynamics, z0, cfg)
}

/// Predictor `z̄ = z + a dt + σ ΔB`, corrector `z + ½(a + ā) dt + ½(σ + σ̄) ΔB`
/// with `a` the Stratonovich drift.
pub fn stratonovich_heun(dynamics: &CompiledDynamics, z0: &[f64], cfg: &IntegratorConfig) -> Result<SamplePath> {
    require_scheme(cfg, Scheme::StratonovichHeun)?;
    simulate(dynamics, z0, cfg)
}

/// Scalar quantity tracked along paths, optionally verified to be a Casimir.
#[derive(Debug, Clone)]
pub struct Monitor {
    name: String,
    field: ScalarField,
    casimir_residual: Option<f64>,
}

/// Absolute bound on `|{c, g}|` for the Casimir probe.
pub const CASIMIR_TOLERANCE: f64 = 1e-8;
const CASIMIR_PROBES: usize = 10;
const CASIMIR_PROBE_SEED: u64 = 0x00C4_5EED;

impl Monitor {
    pub fn new(name: impl Into<String>, field: ScalarField) -> Self {
        Monitor {
            name: name.into(),
            field,
            casimir_residual: None,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    /// Largest `|{c, g}|` over the probe fields, when checked.
    pub fn casimir_residual(&self) -> Option<f64> {
        self.casimir_residual
    }

    pub fn is_casimir(&self) -> Option<bool> {
        self.casimir_residual.map(|r| r < CASIMIR_TOLERANCE)
    }
}

/// Probe `c` against 10 random quadratic fields at random points in `[−1, 1]^m`
/// (fixed seed), warn when it fails to commute, and return a drift monitor.
pub fn casimir_monitor(p: &PoissonStructure, c: ScalarField) -> Result<Monitor> {
    let m = p.dim();
    if c.dim() != m {
        return Err(Error::dim("Casimir candidate", m, c.dim()));
    }
    let mut stream = NoiseStream::new(CASIMIR_PROBE_SEED);
    let mut residual: f64 = 0.0;
    for _ in 0..CASIMIR_PROBES {
        let w: Vec<f64> = (0..m).map(|_| stream.normal()).collect();
        let v: Vec<f64> = (0..m).map(|_| stream.normal()).collect();
        let (wg, vg) = (w.clone(), v.clone());
        let probe = ScalarField::new(m, move |z| (0..m).map(|i| w[i] * z[i] + 0.5 * v[i] * z[i] * z[i]).sum())
            .with_gradient(move |z| (0..m).map(|i| wg[i] + vg[i] * z[i]).collect());
        let z: Vec<f64> = (0..m).map(|_| 2.0 * stream.uniform() - 1.0).collect();
        residual = residual.max(bracket(p, &c, &probe, &z)?.abs());
    }
    if residual >= CASIMIR_TOLERANCE {
        log::warn!("monitored field is not a Casimir of `{}`: |{{c, g}}| reaches {residual:.3e}", p.name());
    }
    Ok(Monitor {
        name: "casimir".into(),
        field: c,
        casimir_residual: Some(residual),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFailure {
    pub path: usize,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorSummary {
    pub name: String,
    pub casimir_residual: Option<f64>,
    /// Max over paths and steps of `|c(z_t) − c(z_0)| / (1 + |c(z_0)|)`.
    pub max_relative_drift: f64,
    /// Max over paths of the same quantity at the final time.
    pub max_final_drift: f64,
    /// Mean over paths of the final-time drift.
    pub mean_final_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n_paths: usize,
    pub n_failed: usize,
    pub failures: Vec<PathFailure>,
    pub scheme: Scheme,
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
    pub times: Vec<f64>,
    /// `mean[t][i]` over completed paths.
    pub mean: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    /// Sample standard deviation over `√(completed paths)`.
    pub std_error: Vec<Vec<f64>>,
    pub monitors: Vec<MonitorSummary>,
}

impl EnsembleStats {
    pub fn failure_fraction(&self) -> f64 {
        if self.n_paths == 0 {
            0.0
        } else {
            self.n_failed as f64 / self.n_paths as f64
        }
    }

    pub fn final_mean(&self) -> &[f64] {
        self.mean.last().map_or(&[], Vec::as_slice)
    }

    pub fn final_std_error(&self) -> &[f64] {
        self.std_error.last().map_or(&[], Vec::as_slice)
    }
}

/// Step indices recorded by `run_ensemble`: eleven evenly spaced, including both ends.
pub fn default_sample_steps(steps: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..=10).map(|k| k * steps / 10).collect();
    out.dedup();
    out
}

struct PathOutcome {
    samples: Vec<Vec<f64>>,
    max_drift: Vec<f64>,
    final_drift: Vec<f64>,
    failed_at: Option<usize>,
}

pub fn run_ensemble(
    dynamics: &CompiledDynamics,
    z0: &[f64],
    cfg: &IntegratorConfig,
    n_paths: usize,
    monitors: &[Monitor],
) -> Result<EnsembleStats> {
    run_ensemble_at(dynamics, z0, cfg, n_paths, monitors, &default_sample_steps(cfg.steps))
}

/// Ensemble statistics at the given step indices. Paths run in parallel and are
/// reduced in path order, so results do not depend on the worker count.
pub fn run_ensemble_at(
    dynamics: &CompiledDynamics,
    z0: &[f64],
    cfg: &IntegratorConfig,
    n_paths: usize,
    monitors: &[Monitor],
    sample_steps: &[usize],
) -> Result<EnsembleStats> {
    cfg.validate()?;
    check_start(dynamics, z0, cfg.dt)?;
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be positive".into()));
    }
    if let Some(&bad) = sample_steps.iter().find(|&&k| k > cfg.steps) {
        return Err(Error::InvalidArgument(format!("sample step {bad} beyond {} steps", cfg.steps)));
    }
    if let Some(bad) = monitors.iter().find(|mo| mo.field.dim() != z0.len()) {
        return Err(Error::dim(format!("monitor `{}`", bad.name), z0.len(), bad.field.dim()));
    }
    let initial: Vec<f64> = monitors.iter().map(|mo| mo.field.eval(z0)).collect::<Result<_>>()?;
    let r = dynamics.noise_dim();
    let outcomes: Vec<PathOutcome> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut out = PathOutcome {
                samples: Vec::with_capacity(sample_steps.len()),
                max_drift: vec![0.0; monitors.len()],
                final_drift: vec![0.0; monitors.len()],
                failed_at: None,
            };
            let result = drive(
                dynamics,
                z0,
                cfg.scheme,
                cfg.dt,
                cfg.steps,
                path_noise(cfg.seed, i as u64, r, cfg.dt),
                |k, z, _| {
                    if sample_steps.contains(&k) {
                        out.samples.push(z.to_vec());
                    }
                    for (j, mo) in monitors.iter().enumerate() {
                        let v = mo.field.eval(z).unwrap_or(f64::NAN);
                        let drift = (v - initial[j]).abs() / (1.0 + initial[j].abs());
                        let drift = if drift.is_nan() { f64::INFINITY } else { drift };
                        out.max_drift[j] = out.max_drift[j].max(drift);
                        out.final_drift[j] = drift;
                    }
                },
            );
            if let Err(Error::BlowUp { step }) = result {
                out.failed_at = Some(step);
            }
            out
        })
        .collect();
    let m = z0.len();
    let times: Vec<f64> = sample_steps.iter().map(|&k| k as f64 * cfg.dt).collect();
    let mut sum = vec![vec![0.0; m]; times.len()];
    let mut sum_sq = vec![vec![0.0; m]; times.len()];
    let mut failures = Vec::new();
    let mut monitor_max = vec![0.0f64; monitors.len()];
    let mut monitor_final_max = vec![0.0f64; monitors.len()];
    let mut monitor_final_sum = vec![0.0f64; monitors.len()];
    let mut done = 0usize;
    for (i, o) in outcomes.iter().enumerate() {
        if let Some(step) = o.failed_at {
            failures.push(PathFailure { path: i, step });
            continue;
        }
        done += 1;
        for (t, z) in o.samples.iter().enumerate() {
            for c in 0..m {
                sum[t][c] += z[c];
                sum_sq[t][c] += z[c] * z[c];
            }
        }
        for j in 0..monitors.len() {
            monitor_max[j] = monitor_max[j].max(o.max_drift[j]);
            monitor_final_max[j] = monitor_final_max[j].max(o.final_drift[j]);
            monitor_final_sum[j] += o.final_drift[j];
        }
    }
    let count = done as f64;
    let mut mean = vec![vec![f64::NAN; m]; times.len()];
    let mut second = vec![vec![f64::NAN; m]; times.len()];
    let mut std_error = vec![vec![f64::NAN; m]; times.len()];
    if done > 0 {
        for t in 0..times.len() {
            for c in 0..m {
                let mu = sum[t][c] / count;
                mean[t][c] = mu;
                second[t][c] = sum_sq[t][c] / count;
                // Second pass over the stored samples for a stable variance.
                let ss: f64 = outcomes
                    .iter()
                    .filter(|o| o.failed_at.is_none())
                    .map(|o| (o.samples[t][c] - mu).powi(2))
                    .sum();
                let var = if done > 1 { ss / (count - 1.0) } else { 0.0 };
                std_error[t][c] = (var / count).sqrt();
            }
        }
    }
    let summaries = monitors
        .iter()
        .enumerate()
        .map(|(j, mo)| MonitorSummary {
            name: mo.name.clone(),
            casimir_residual: mo.casimir_residual,
            max_relative_drift: monitor_max[j],
            max_final_drift: monitor_final_max[j],
            mean_final_drift: if done > 0 { monitor_final_sum[j] / count } else { f64::NAN },
        })
        .collect();
    Ok(EnsembleStats {
        n_paths,
        n_failed: failures.len(),
        failures,
        scheme: cfg.scheme,
        dt: cfg.dt,
        steps: cfg.steps,
        seed: cfg.seed,
        times,
        mean,
        second_moment: second,
        std_error,
        monitors: summaries,
    })
}
