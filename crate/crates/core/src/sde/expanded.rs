//! Specialized stochastic systems on algebroid duals and connection-twisted
//! bundles, plus literal evaluations of their printed coordinate expansions.
//!
//! The dynamics are always built the canonical way: assemble the Poisson
//! structure, form the fiber-linear noise Hamiltonian(s), and compile. The
//! printed expansions are evaluated term by term and compared against the
//! compiled coefficients; `audit` reports every disagreement.
//!
//! Literal corrections are compared against the unhalved double bracket
//! `Σ_s {{z, f_s}, f_s}`, which is what the printed expansions write.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{compile_with, CompiledDynamics, ItoConvention, StochasticHamiltonianSystem};
use crate::algebroid::{LieAlgebroid, Section};
use crate::connection::{AffineConnection, GlRefinementConnection, PrincipalConnection};
use crate::error::{Error, Result};
use crate::geometry::{check_point, fd_gradient, ScalarField};
use crate::poisson::{
    adjoint_bundle_structure_with, affine_refinement_structure, from_algebroid, gl_refinement_structure,
    whitney_sum_structure, AdjointSign, LambdaPairing, WhitneyBlocks,
};

/// Default relative tolerance of the audit: `|Δ| > tol·max(1, |canonical|)` is flagged.
pub const AUDIT_TOLERANCE: f64 = 1e-6;

/// `(label, drift, unhalved correction, diffusion columns)` of one printed line.
pub type LiteralLine = (String, Option<f64>, Option<f64>, Vec<Option<f64>>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpandedKind {
    AlgebroidDual,
    WhitneySum,
    AdjointBundle,
    AffineRefinement,
    GlRefinement,
}

impl ExpandedKind {
    pub const ALL: [ExpandedKind; 5] = [
        ExpandedKind::AlgebroidDual,
        ExpandedKind::WhitneySum,
        ExpandedKind::AdjointBundle,
        ExpandedKind::AffineRefinement,
        ExpandedKind::GlRefinement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExpandedKind::AlgebroidDual => "algebroid_dual",
            ExpandedKind::WhitneySum => "whitney_sum",
            ExpandedKind::AdjointBundle => "adjoint_bundle",
            ExpandedKind::AffineRefinement => "affine_refinement",
            ExpandedKind::GlRefinement => "gl_refinement",
        }
    }
}

impl fmt::Display for ExpandedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExpandedKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExpandedKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

/// Quadratic Hamiltonian `½ k^{ij} p_i p_j + k^{iα} p_i ξ_α + ½ k^{αβ} ξ_α ξ_β` on `T*M ⊕ A*`.
#[derive(Debug, Clone)]
pub struct WhitneyMetric {
    /// `k^{ij}` at `i·n + j`.
    pub pp: Vec<ScalarField>,
    /// `k^{iα}` at `i·r + α`.
    pub p_xi: Vec<ScalarField>,
    /// `k^{αβ}` at `α·r + β`.
    pub xi_xi: Vec<ScalarField>,
}

impl WhitneyMetric {
    pub fn zero(n: usize, r: usize) -> Self {
        WhitneyMetric {
            pp: vec![ScalarField::zero(n); n * n],
            p_xi: vec![ScalarField::zero(n); n * r],
            xi_xi: vec![ScalarField::zero(n); r * r],
        }
    }
}

/// `g_s = a_s^α ξ_α + d_s^i p_i`.
#[derive(Debug, Clone)]
pub struct WhitneyNoise {
    pub a: Section,
    pub d: Vec<ScalarField>,
}

/// `f = a^j p_j + d^a μ_a`.
#[derive(Debug, Clone)]
pub struct AdjointNoise {
    pub a: Vec<ScalarField>,
    pub d: Vec<ScalarField>,
}

/// `f = a^j p_j + d^k_ℓ μ^ℓ_k + g^ℓ μ_ℓ`; `d[ℓ·n + k]` multiplies `μ^ℓ_k`.
#[derive(Debug, Clone)]
pub struct AffineNoise {
    pub a: Vec<ScalarField>,
    pub d: Vec<ScalarField>,
    pub g: Vec<ScalarField>,
}

/// `f = a^j p_j + d^j λ_j + g^ℓ_k μ^k_ℓ` with coefficients on `(x, q)`;
/// `g[ℓ·n + k]` multiplies `μ^ℓ_k`.
#[derive(Debug, Clone)]
pub struct GlNoise {
    pub a: Vec<ScalarField>,
    pub d: Vec<ScalarField>,
    pub g: Vec<ScalarField>,
}

#[derive(Debug, Clone)]
pub enum ExpandedInputs {
    AlgebroidDual {
        algebroid: LieAlgebroid,
        h: ScalarField,
        sections: Vec<Section>,
    },
    WhitneySum {
        algebroid: LieAlgebroid,
        metric: WhitneyMetric,
        noise: Vec<WhitneyNoise>,
    },
    AdjointBundle {
        connection: PrincipalConnection,
        sign: AdjointSign,
        h: ScalarField,
        noise: AdjointNoise,
    },
    AffineRefinement {
        connection: AffineConnection,
        h: ScalarField,
        noise: AffineNoise,
    },
    GlRefinement {
        connection: GlRefinementConnection,
        pairing: LambdaPairing,
        h: ScalarField,
        noise: GlNoise,
    },
}

impl ExpandedInputs {
    pub fn kind(&self) -> ExpandedKind {
        match self {
            ExpandedInputs::AlgebroidDual { .. } => ExpandedKind::AlgebroidDual,
            ExpandedInputs::WhitneySum { .. } => ExpandedKind::WhitneySum,
            ExpandedInputs::AdjointBundle { .. } => ExpandedKind::AdjointBundle,
            ExpandedInputs::AffineRefinement { .. } => ExpandedKind::AffineRefinement,
            ExpandedInputs::GlRefinement { .. } => ExpandedKind::GlRefinement,
        }
    }
}

/// Build the canonical dynamics of an expanded system.
pub fn expanded_system(kind: ExpandedKind, inputs: ExpandedInputs) -> Result<CompiledDynamics> {
    Ok(ExpandedSystem::new(kind, inputs)?.compile(ItoConvention::Standard))
}

#[derive(Debug, Clone)]
pub struct ExpandedSystem {
    inputs: ExpandedInputs,
    system: StochasticHamiltonianSystem,
}

/// One flagged disagreement between a printed term and the canonical coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub equation: String,
    /// Printed line, e.g. `dp_1`.
    pub line: String,
    /// `drift`, `correction` or `diffusion[s]`.
    pub part: String,
    /// The printed term as evaluated.
    pub term: String,
    pub component: usize,
    pub point: usize,
    pub canonical: f64,
    pub literal: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub equation: String,
    pub tolerance: f64,
    pub points: usize,
    /// Number of (component, part, point) comparisons made.
    pub checked: usize,
    /// Largest `|Δ| / max(1, |canonical|)` over all comparisons.
    pub max_relative_error: f64,
    /// Readings adopted where the printed expansion is ambiguous.
    pub notes: Vec<String>,
    /// Printed terms left unevaluated because they are written as nested brackets.
    pub skipped: Vec<String>,
    pub records: Vec<AuditRecord>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct `(line, part)` pairs that were flagged.
    pub fn flagged_terms(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        for r in &self.records {
            let key = (r.line.clone(), r.part.clone());
            if !out.contains(&key) {
                out.push(key);
            }
        }
        out
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "audit {}: {} comparisons at {} points, {} flagged (tol {:e}, max rel err {:.3e})",
            self.equation,
            self.checked,
            self.points,
            self.records.len(),
            self.tolerance,
            self.max_relative_error
        )?;
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        for s in &self.skipped {
            writeln!(f, "  skipped: {s}")?;
        }
        for r in &self.records {
            writeln!(
                f,
                "  {} {} [{}] point {}: canonical {:.6e} literal {:.6e} |Δ| {:.3e}  term: {}",
                r.equation, r.line, r.part, r.point, r.canonical, r.literal, r.abs_diff, r.term
            )?;
        }
        Ok(())
    }
}

enum Part {
    Value(&'static str, f64),
    Symbolic(&'static str),
}

struct Line {
    name: String,
    drift: Part,
    correction: Part,
    diffusion: Vec<Part>,
}

impl ExpandedSystem {
    pub fn new(kind: ExpandedKind, inputs: ExpandedInputs) -> Result<Self> {
        if inputs.kind() != kind {
            return Err(Error::InvalidArgument(format!(
                "inputs describe `{}` but kind `{kind}` was requested",
                inputs.kind()
            )));
        }
        let system = match &inputs {
            ExpandedInputs::AlgebroidDual {
                algebroid,
                h,
                sections,
            } => {
                let (n, r) = (algebroid.base_dim(), algebroid.rank());
                let noise = sections
                    .iter()
                    .enumerate()
                    .map(|(s, a)| {
                        check_fields(&format!("section {}", s + 1), a.components(), r, n)?;
                        Ok(fiber_field(n + r, n, (0..r).map(|al| (n + al, a.components()[al].clone())).collect(), vec![]))
                    })
                    .collect::<Result<Vec<_>>>()?;
                StochasticHamiltonianSystem::new(from_algebroid(algebroid), h.clone(), noise)?
            }
            ExpandedInputs::WhitneySum { algebroid, metric, noise } => {
                let (n, r) = (algebroid.base_dim(), algebroid.rank());
                let m = 2 * n + r;
                check_fields("k^{ij}", &metric.pp, n * n, n)?;
                check_fields("k^{iα}", &metric.p_xi, n * r, n)?;
                check_fields("k^{αβ}", &metric.xi_xi, r * r, n)?;
                let mut quad = Vec::new();
                for i in 0..n {
                    for j in 0..n {
                        quad.push((n + i, n + j, 0.5, metric.pp[i * n + j].clone()));
                    }
                    for al in 0..r {
                        quad.push((n + i, 2 * n + al, 1.0, metric.p_xi[i * r + al].clone()));
                    }
                }
                for al in 0..r {
                    for be in 0..r {
                        quad.push((2 * n + al, 2 * n + be, 0.5, metric.xi_xi[al * r + be].clone()));
                    }
                }
                let h = fiber_field(m, n, vec![], quad);
                let fields = noise
                    .iter()
                    .enumerate()
                    .map(|(s, g)| {
                        check_fields(&format!("noise {} a", s + 1), g.a.components(), r, n)?;
                        check_fields(&format!("noise {} d", s + 1), &g.d, n, n)?;
                        let mut lin: Vec<(usize, ScalarField)> = (0..n).map(|i| (n + i, g.d[i].clone())).collect();
                        lin.extend((0..r).map(|al| (2 * n + al, g.a.components()[al].clone())));
                        Ok(fiber_field(m, n, lin, vec![]))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let structure = whitney_sum_structure(algebroid, WhitneyBlocks::anchor_coupled(algebroid))?;
                StochasticHamiltonianSystem::new(structure, h, fields)?
            }
            ExpandedInputs::AdjointBundle {
                connection,
                sign,
                h,
                noise,
            } => {
                let (n, p) = (connection.base_dim(), connection.algebra().dim());
                check_fields("noise a", &noise.a, n, n)?;
                check_fields("noise d", &noise.d, p, n)?;
                let mut lin: Vec<(usize, ScalarField)> = (0..n).map(|j| (n + j, noise.a[j].clone())).collect();
                lin.extend((0..p).map(|a| (2 * n + a, noise.d[a].clone())));
                let f = fiber_field(2 * n + p, n, lin, vec![]);
                StochasticHamiltonianSystem::new(adjoint_bundle_structure_with(connection, *sign), h.clone(), vec![f])?
            }
            ExpandedInputs::AffineRefinement { connection, h, noise } => {
                let n = connection.base_dim();
                check_fields("noise a", &noise.a, n, n)?;
                check_fields("noise d", &noise.d, n * n, n)?;
                check_fields("noise g", &noise.g, n, n)?;
                let mut lin: Vec<(usize, ScalarField)> = (0..n).map(|j| (n + j, noise.a[j].clone())).collect();
                lin.extend((0..n * n).map(|u| (2 * n + u, noise.d[u].clone())));
                lin.extend((0..n).map(|l| (2 * n + n * n + l, noise.g[l].clone())));
                let f = fiber_field(3 * n + n * n, n, lin, vec![]);
                StochasticHamiltonianSystem::new(affine_refinement_structure(connection), h.clone(), vec![f])?
            }
            ExpandedInputs::GlRefinement {
                connection,
                pairing,
                h,
                noise,
            } => {
                let n = connection.n();
                check_fields("noise a", &noise.a, n, 2 * n)?;
                check_fields("noise d", &noise.d, n, 2 * n)?;
                check_fields("noise g", &noise.g, n * n, 2 * n)?;
                let mut lin: Vec<(usize, ScalarField)> = (0..n).map(|j| (2 * n + j, noise.a[j].clone())).collect();
                lin.extend((0..n).map(|j| (3 * n + j, noise.d[j].clone())));
                lin.extend((0..n * n).map(|u| (4 * n + u, noise.g[u].clone())));
                let f = fiber_field(4 * n + n * n, 2 * n, lin, vec![]);
                StochasticHamiltonianSystem::new(gl_refinement_structure(connection, *pairing), h.clone(), vec![f])?
            }
        };
        Ok(ExpandedSystem { inputs, system })
    }

    pub fn kind(&self) -> ExpandedKind {
        self.inputs.kind()
    }

    pub fn inputs(&self) -> &ExpandedInputs {
        &self.inputs
    }

    pub fn system(&self) -> &StochasticHamiltonianSystem {
        &self.system
    }

    pub fn compile(&self, convention: ItoConvention) -> CompiledDynamics {
        compile_with(&self.system, convention)
    }

    /// Readings adopted for the printed expansion of this kind.
    pub fn notes(&self) -> Vec<String> {
        let mut notes = Vec::new();
        match &self.inputs {
            ExpandedInputs::AlgebroidDual { .. } => {}
            ExpandedInputs::WhitneySum { algebroid, .. } => {
                if algebroid.rank() > algebroid.base_dim() {
                    notes.push("dx: `p_β` in the second drift term has no meaning for r > n; ξ_β used".into());
                } else {
                    notes.push("dx: second drift term evaluated with `p_β` as printed".into());
                }
                notes.push("dx correction: undefined `a_s^i` replaced by `d_s^i`".into());
                notes.push("dp correction: `∂d_s^α/∂x^j` read as `∂d_s^ℓ/∂x^j`".into());
                notes.push("dξ drift: `∂k^{αβ}/∂x^i ξ_α ξ_β` read with summed indices `k^{γβ} ξ_γ ξ_β`".into());
            }
            ExpandedInputs::AdjointBundle { .. } => {
                notes.push("dp drift: `C^d_{ca} μ_a A^c_i ∂h/∂μ_a` read as `C^d_{ca} μ_d A^c_i ∂h/∂μ_a`".into());
                notes.push("literal terms use the curvature `∂_iA_j − ∂_jA_i + C A_i A_j` as printed".into());
            }
            ExpandedInputs::AffineRefinement { .. } => {
                notes.push("dμ^ℓ_k drift: unsaturated `i` summed; `ℓ, k` of `d^k_ℓ` taken from the left-hand side".into());
            }
            ExpandedInputs::GlRefinement { .. } => {
                notes.push("dp, dλ drift: unsaturated `j` in `½ B^ℓ_{kij} μ^k_ℓ` summed".into());
                notes.push("dμ drift: unsaturated `q` in `B^ℓ_{kj} δ^p_k μ^q_p` summed".into());
            }
        }
        notes
    }

    /// Compare the printed expansion against the compiled coefficients at `samples`.
    pub fn audit(&self, samples: &[Vec<f64>], tolerance: f64) -> Result<AuditReport> {
        let dynamics = compile_with(&self.system, ItoConvention::AsPrinted);
        let m = self.system.dim();
        let equation = self.kind().name().to_string();
        let mut report = AuditReport {
            equation: equation.clone(),
            tolerance,
            points: samples.len(),
            checked: 0,
            max_relative_error: 0.0,
            notes: self.notes(),
            skipped: Vec::new(),
            records: Vec::new(),
        };
        for (point, z) in samples.iter().enumerate() {
            check_point("audit sample", z, m)?;
            let drift = dynamics.stratonovich_drift(z)?;
            let correction = dynamics.double_bracket_sum(z)?;
            let sigma = dynamics.diffusion(z)?;
            let lines = self.literal(z)?;
            for (component, line) in lines.iter().enumerate() {
                let mut parts: Vec<(String, &Part, f64)> = vec![
                    ("drift".into(), &line.drift, drift[component]),
                    ("correction".into(), &line.correction, correction[component]),
                ];
                for (s, part) in line.diffusion.iter().enumerate() {
                    parts.push((format!("diffusion[{}]", s + 1), part, sigma[(component, s)]));
                }
                for (part_name, part, canonical) in parts {
                    match part {
                        Part::Symbolic(term) => {
                            let entry = format!("{} {part_name}: {term}", line.name);
                            if !report.skipped.contains(&entry) {
                                report.skipped.push(entry);
                            }
                        }
                        Part::Value(term, literal) => {
                            report.checked += 1;
                            let abs_diff = (canonical - literal).abs();
                            let scale = canonical.abs().max(1.0);
                            let rel = if abs_diff.is_nan() { f64::INFINITY } else { abs_diff / scale };
                            report.max_relative_error = report.max_relative_error.max(rel);
                            if rel > tolerance {
                                report.records.push(AuditRecord {
                                    equation: equation.clone(),
                                    line: line.name.clone(),
                                    part: part_name,
                                    term: term.to_string(),
                                    component,
                                    point,
                                    canonical,
                                    literal: *literal,
                                    abs_diff,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(report)
    }

    /// Literal evaluation of the printed expansion at `z`, one line per coordinate:
    /// `(label, drift, unhalved correction, diffusion columns)`, `None` where the
    /// printed term is a nested bracket.
    pub fn literal_coefficients(&self, z: &[f64]) -> Result<Vec<LiteralLine>> {
        check_point("literal expansion", z, self.system.dim())?;
        let value = |p: &Part| match p {
            Part::Value(_, v) => Some(*v),
            Part::Symbolic(_) => None,
        };
        Ok(self
            .literal(z)?
            .into_iter()
            .map(|l| {
                let diffusion = l.diffusion.iter().map(value).collect();
                (l.name, value(&l.drift), value(&l.correction), diffusion)
            })
            .collect())
    }

    fn literal(&self, z: &[f64]) -> Result<Vec<Line>> {
        let dh = fd_gradient(self.system.hamiltonian(), z, None)?;
        match &self.inputs {
            ExpandedInputs::AlgebroidDual { algebroid, sections, .. } => algebroid_dual_literal(algebroid, sections, &dh, z),
            ExpandedInputs::WhitneySum {
                algebroid,
                metric,
                noise,
            } => whitney_literal(algebroid, metric, noise, z),
            ExpandedInputs::AdjointBundle { connection, noise, .. } => adjoint_literal(connection, noise, &dh, z),
            ExpandedInputs::AffineRefinement { connection, noise, .. } => affine_literal(connection, noise, &dh, z),
            ExpandedInputs::GlRefinement { connection, .. } => gl_literal(connection, &dh, z),
        }
    }
}

fn check_fields(what: &str, fields: &[ScalarField], count: usize, dim: usize) -> Result<()> {
    if fields.len() != count {
        return Err(Error::dim(format!("{what} coefficient count"), count, fields.len()));
    }
    if let Some(f) = fields.iter().find(|f| f.dim() != dim) {
        return Err(Error::dim(format!("{what} coefficient field"), dim, f.dim()));
    }
    Ok(())
}

type Quadratic = (usize, usize, f64, ScalarField);

/// `Σ c_t(x) z[i_t] + Σ w_t c_t(x) z[i_t] z[j_t]` where `x = z[..base]`. Gradient and
/// Hessian are assembled from the coefficients' own derivatives when those are analytic.
fn fiber_field(dim: usize, base: usize, linear: Vec<(usize, ScalarField)>, quadratic: Vec<Quadratic>) -> ScalarField {
    let constant = |c: &ScalarField| c.linear_coefficients().is_some_and(|l| l.iter().all(|v| *v == 0.0));
    if quadratic.is_empty() && linear.iter().all(|(_, c)| constant(c)) {
        let mut coeffs = vec![0.0; dim];
        let origin = vec![0.0; base];
        for (i, c) in &linear {
            coeffs[*i] += c.eval(&origin).unwrap_or(f64::NAN);
        }
        return ScalarField::linear(coeffs);
    }
    let linear = Arc::new(linear);
    let quadratic = Arc::new(quadratic);
    let all = |pred: fn(&ScalarField) -> bool| linear.iter().all(|(_, c)| pred(c)) && quadratic.iter().all(|q| pred(&q.3));
    let has_gradient = all(ScalarField::has_gradient);
    let has_hessian = all(ScalarField::has_hessian);
    let value = {
        let (linear, quadratic) = (linear.clone(), quadratic.clone());
        move |z: &[f64]| {
            let x = &z[..base];
            let at = |c: &ScalarField| c.eval(x).unwrap_or(f64::NAN);
            linear.iter().map(|(i, c)| at(c) * z[*i]).sum::<f64>()
                + quadratic.iter().map(|(i, j, w, c)| w * at(c) * z[*i] * z[*j]).sum::<f64>()
        }
    };
    let mut field = ScalarField::new(dim, value);
    if has_gradient {
        let (linear, quadratic) = (linear.clone(), quadratic.clone());
        field = field.with_gradient(move |z: &[f64]| {
            let x = &z[..base];
            let mut g = vec![0.0; dim];
            let mut add = |c: &ScalarField, weight: f64| {
                match c.gradient(x) {
                    Ok(dc) => (0..base).for_each(|k| g[k] += dc[k] * weight),
                    Err(_) => (0..base).for_each(|k| g[k] = f64::NAN),
                };
            };
            for (i, c) in linear.iter() {
                add(c, z[*i]);
            }
            for (i, j, w, c) in quadratic.iter() {
                add(c, w * z[*i] * z[*j]);
            }
            for (i, c) in linear.iter() {
                g[*i] += c.eval(x).unwrap_or(f64::NAN);
            }
            for (i, j, w, c) in quadratic.iter() {
                let v = w * c.eval(x).unwrap_or(f64::NAN);
                g[*i] += v * z[*j];
                g[*j] += v * z[*i];
            }
            g
        });
    }
    if has_hessian {
        let (linear, quadratic) = (linear.clone(), quadratic.clone());
        field = field.with_hessian(move |z: &[f64]| {
            let x = &z[..base];
            let mut hm = DMatrix::zeros(dim, dim);
            let nan = |hm: &mut DMatrix<f64>| hm.fill(f64::NAN);
            for (i, c) in linear.iter() {
                let (Ok(dc), Ok(hc)) = (c.gradient(x), c.hessian(x)) else {
                    nan(&mut hm);
                    return hm;
                };
                for k in 0..base {
                    for l in 0..base {
                        hm[(k, l)] += hc[(k, l)] * z[*i];
                    }
                    hm[(k, *i)] += dc[k];
                    hm[(*i, k)] += dc[k];
                }
            }
            for (i, j, w, c) in quadratic.iter() {
                let (Ok(v), Ok(dc), Ok(hc)) = (c.eval(x), c.gradient(x), c.hessian(x)) else {
                    nan(&mut hm);
                    return hm;
                };
                for k in 0..base {
                    for l in 0..base {
                        hm[(k, l)] += w * hc[(k, l)] * z[*i] * z[*j];
                    }
                    hm[(k, *i)] += w * dc[k] * z[*j];
                    hm[(*i, k)] += w * dc[k] * z[*j];
                    hm[(k, *j)] += w * dc[k] * z[*i];
                    hm[(*j, k)] += w * dc[k] * z[*i];
                }
                hm[(*i, *j)] += w * v;
                hm[(*j, *i)] += w * v;
            }
            hm
        });
    }
    field
}

/// Values, gradients and (optionally) Hessians of coefficient fields at a base point.
struct Coeffs {
    v: Vec<f64>,
    g: Vec<DVector<f64>>,
    h: Vec<DMatrix<f64>>,
}

impl Coeffs {
    fn at(fields: &[ScalarField], x: &[f64], hessians: bool) -> Result<Self> {
        Ok(Coeffs {
            v: fields.iter().map(|f| f.eval(x)).collect::<Result<_>>()?,
            g: fields.iter().map(|f| f.gradient(x)).collect::<Result<_>>()?,
            h: if hessians {
                fields.iter().map(|f| f.hessian(x)).collect::<Result<_>>()?
            } else {
                Vec::new()
            },
        })
    }
}

fn labelled(prefix: &str, i: usize) -> String {
    format!("{prefix}{}", i + 1)
}

fn algebroid_dual_literal(algebroid: &LieAlgebroid, sections: &[Section], dh: &DVector<f64>, z: &[f64]) -> Result<Vec<Line>> {
    let (n, r) = (algebroid.base_dim(), algebroid.rank());
    let (x, xi) = z.split_at(n);
    let b = algebroid.anchor_at(x)?;
    let db = algebroid.anchor_derivative(x)?;
    let c = algebroid.structure_at(x)?;
    let secs = sections
        .iter()
        .map(|s| Coeffs::at(s.components(), x, true))
        .collect::<Result<Vec<_>>>()?;
    let mut lines = Vec::with_capacity(n + r);
    for i in 0..n {
        let drift = (0..r).map(|al| b[(i, al)] * dh[n + al]).sum();
        let mut correction = 0.0;
        let mut diffusion = Vec::new();
        for a in &secs {
            // b^k_λ a^λ ∂_k (b^i_β a^β)
            for k in 0..n {
                let lead: f64 = (0..r).map(|la| b[(k, la)] * a.v[la]).sum();
                let d: f64 = (0..r).map(|be| db[k][(i, be)] * a.v[be] + b[(i, be)] * a.g[be][k]).sum();
                correction += lead * d;
            }
            let v = (0..r).map(|be| b[(i, be)] * a.v[be]).sum();
            diffusion.push(Part::Value("b^i_β a_s^β", v));
        }
        lines.push(Line {
            name: labelled("dx^", i),
            drift: Part::Value("b^i_α ∂h/∂ξ_α", drift),
            correction: Part::Value("b^k_λ a_s^λ ∂_k(b^i_β a_s^β)", correction),
            diffusion,
        });
    }
    for al in 0..r {
        let mut drift: f64 = (0..n).map(|i| b[(i, al)] * dh[i]).sum();
        for be in 0..r {
            for ga in 0..r {
                drift += c[(ga, al, be)] * xi[ga] * dh[n + be];
            }
        }
        let mut correction = 0.0;
        let mut diffusion = Vec::new();
        for a in &secs {
            let pairing: f64 = (0..r).map(|e| a.v[e] * xi[e]).sum();
            // b^j_γ ∂_j(b^i_α ∂_i a^γ) a^ε ξ_ε
            for ga in 0..r {
                for j in 0..n {
                    let inner: f64 = (0..n).map(|i| db[j][(i, al)] * a.g[ga][i] + b[(i, al)] * a.h[ga][(i, j)]).sum();
                    correction += b[(j, ga)] * inner * pairing;
                }
            }
            // C^ε_{θγ} b^i_α ∂_i a^θ a^γ ξ_ε
            for th in 0..r {
                let bda: f64 = (0..n).map(|i| b[(i, al)] * a.g[th][i]).sum();
                for ga in 0..r {
                    for e in 0..r {
                        correction += c[(e, th, ga)] * bda * a.v[ga] * xi[e];
                    }
                }
            }
            let mut v = 0.0;
            for i in 0..n {
                for la in 0..r {
                    v += b[(i, al)] * a.g[la][i] * xi[la];
                }
            }
            for mu in 0..r {
                for ga in 0..r {
                    v += c[(ga, al, mu)] * a.v[mu] * xi[ga];
                }
            }
            diffusion.push(Part::Value("b^i_α ∂_i a_s^λ ξ_λ + C^γ_{αμ} a_s^μ ξ_γ", v));
        }
        lines.push(Line {
            name: labelled("dxi_", al),
            drift: Part::Value("b^i_α ∂h/∂x^i + C^γ_{αβ} ξ_γ ∂h/∂ξ_β", drift),
            correction: Part::Value(
                "b^j_γ ∂_j(b^i_α ∂_i a_u^γ) a_s^ε ξ_ε + C^ε_{θγ} b^i_α ∂_i a_u^θ a_s^γ ξ_ε",
                correction,
            ),
            diffusion,
        });
    }
    Ok(lines)
}

fn whitney_literal(algebroid: &LieAlgebroid, metric: &WhitneyMetric, noise: &[WhitneyNoise], z: &[f64]) -> Result<Vec<Line>> {
    let (n, r) = (algebroid.base_dim(), algebroid.rank());
    let x = &z[..n];
    let p = &z[n..2 * n];
    let xi = &z[2 * n..];
    let b = algebroid.anchor_at(x)?;
    let db = algebroid.anchor_derivative(x)?;
    let kpp = Coeffs::at(&metric.pp, x, false)?;
    let kpx = Coeffs::at(&metric.p_xi, x, false)?;
    let kxx = Coeffs::at(&metric.xi_xi, x, false)?;
    // The second dx drift term multiplies p_β as printed when that index exists.
    let w: Vec<f64> = if r <= n { p[..r].to_vec() } else { xi.to_vec() };
    struct Noise {
        a: Coeffs,
        d: Coeffs,
        /// Base component `d^i + b^i_α a^α` of the noise field.
        base: Vec<f64>,
        /// `∂_j (d^i + b^i_α a^α)` at `(i, j)`.
        dbase: DMatrix<f64>,
    }
    let noises = noise
        .iter()
        .map(|g| {
            let a = Coeffs::at(g.a.components(), x, true)?;
            let d = Coeffs::at(&g.d, x, true)?;
            let base = (0..n).map(|i| d.v[i] + (0..r).map(|al| b[(i, al)] * a.v[al]).sum::<f64>()).collect();
            let dbase = DMatrix::from_fn(n, n, |i, j| {
                d.g[i][j] + (0..r).map(|al| db[j][(i, al)] * a.v[al] + b[(i, al)] * a.g[al][j]).sum::<f64>()
            });
            Ok(Noise { a, d, base, dbase })
        })
        .collect::<Result<Vec<_>>>()?;
    // ∂_ℓ a^α ξ_α + ∂_ℓ d^i p_i
    let dpair = |g: &Noise, l: usize| -> f64 {
        (0..r).map(|al| g.a.g[al][l] * xi[al]).sum::<f64>() + (0..n).map(|i| g.d.g[i][l] * p[i]).sum::<f64>()
    };
    let mut lines = Vec::with_capacity(2 * n + r);
    for i in 0..n {
        let mut drift = 0.0;
        for j in 0..n {
            let coeff = kpp.v[i * n + j] + (0..r).map(|al| b[(i, al)] * kpx.v[j * r + al]).sum::<f64>();
            drift += coeff * p[j];
        }
        for be in 0..r {
            let coeff = kpx.v[i * r + be] + (0..r).map(|al| b[(i, al)] * kxx.v[al * r + be]).sum::<f64>();
            drift += coeff * w[be];
        }
        let correction = noises
            .iter()
            .map(|g| (0..n).map(|j| g.base[j] * g.dbase[(i, j)]).sum::<f64>())
            .sum();
        lines.push(Line {
            name: labelled("dx^", i),
            drift: Part::Value("(k^{ij} + b^i_α k^{jα}) p_j + (k^{iβ} + b^i_α k^{αβ}) p_β", drift),
            correction: Part::Value("(d_u^j + b^j_α a_u^α) ∂_j(a_s^i + b^i_α a_s^α)", correction),
            diffusion: noises
                .iter()
                .map(|g| Part::Value("d_s^i + b^i_α a_s^α", g.base[i]))
                .collect(),
        });
    }
    for j in 0..n {
        let mut drift = 0.0;
        for hh in 0..n {
            for l in 0..n {
                drift -= 0.5 * kpp.g[hh * n + l][j] * p[hh] * p[l];
            }
        }
        let mut correction = 0.0;
        for g in &noises {
            let mut first = 0.0;
            for mm in 0..n {
                let second: f64 = (0..r).map(|ga| g.a.h[ga][(mm, j)] * xi[ga]).sum::<f64>()
                    + (0..n).map(|i| g.d.h[i][(mm, j)] * p[i]).sum::<f64>();
                first += g.base[mm] * second;
            }
            let last: f64 = (0..n).map(|l| g.d.g[l][j] * dpair(g, l)).sum();
            correction -= first - last;
        }
        lines.push(Line {
            name: labelled("dp_", j),
            drift: Part::Value("−½ ∂_j k^{hℓ} p_h p_ℓ", drift),
            correction: Part::Value(
                "−[(b^m_α a_u^α + d_u^m)(∂_m∂_j a_s^γ ξ_γ + ∂_m∂_j d_s^i p_i) − ∂_j d_s^α (∂_ℓ a_u^α ξ_α + ∂_ℓ d_u^i p_i)]",
                correction,
            ),
            diffusion: noises
                .iter()
                .map(|g| Part::Value("∂_j a_s^α ξ_α + ∂_j d_s^i p_i", dpair(g, j)))
                .collect(),
        });
    }
    for al in 0..r {
        let mut inner = 0.0;
        for i in 0..n {
            let mut t = 0.0;
            for hh in 0..n {
                for l in 0..n {
                    t += 0.5 * kpp.g[hh * n + l][i] * p[hh] * p[l];
                }
            }
            for ga in 0..r {
                for be in 0..r {
                    t += kxx.g[ga * r + be][i] * xi[ga] * xi[be];
                }
            }
            for jj in 0..n {
                for be in 0..r {
                    t += 0.5 * kpx.g[jj * r + be][i] * p[jj] * xi[be];
                }
            }
            inner += b[(i, al)] * t;
        }
        let mut correction = 0.0;
        for g in &noises {
            // −X^ℓ ∂_ℓ(b^i_α G_i) with G_i = ∂_i a^β ξ_β + ∂_i d^j p_j
            for l in 0..n {
                let mut d = 0.0;
                for i in 0..n {
                    let hess: f64 = (0..r).map(|be| g.a.h[be][(i, l)] * xi[be]).sum::<f64>()
                        + (0..n).map(|jj| g.d.h[jj][(i, l)] * p[jj]).sum::<f64>();
                    d += db[l][(i, al)] * dpair(g, i) + b[(i, al)] * hess;
                }
                correction -= g.base[l] * d;
            }
            // + b^i_α (∂_i d^ℓ + b^ℓ_γ ∂_i a^γ)(∂_ℓ a^μ ξ_μ + ∂_i d^j p_j)
            for i in 0..n {
                let di: f64 = (0..n).map(|jj| g.d.g[jj][i] * p[jj]).sum();
                for l in 0..n {
                    let lead = g.d.g[l][i] + (0..r).map(|ga| b[(l, ga)] * g.a.g[ga][i]).sum::<f64>();
                    let tail = (0..r).map(|mu| g.a.g[mu][l] * xi[mu]).sum::<f64>() + di;
                    correction += b[(i, al)] * lead * tail;
                }
            }
        }
        lines.push(Line {
            name: labelled("dxi_", al),
            drift: Part::Value(
                "−b^i_α(½ ∂_i k^{hℓ} p_h p_ℓ + ∂_i k^{αβ} ξ_α ξ_β + ½ ∂_i k^{jβ} p_j ξ_β)",
                -inner,
            ),
            correction: Part::Value(
                "−(b^ℓ_β a_u^β + d_u^ℓ) ∂_ℓ(b^i_α ∂_i a_s^β ξ_β + b^i_α ∂_i d_s^j p_j) + b^i_α(∂_i d_s^ℓ + b^ℓ_γ ∂_i a_s^γ)(∂_ℓ a_u^μ ξ_μ + ∂_i d_s^j p_j)",
                correction,
            ),
            diffusion: noises
                .iter()
                .map(|g| {
                    let v: f64 = (0..n).map(|i| b[(i, al)] * dpair(g, i)).sum();
                    Part::Value("−b^i_α(∂_i a_s^β ξ_β + ∂_i d_s^j p_j)", -v)
                })
                .collect(),
        });
    }
    Ok(lines)
}

fn adjoint_literal(conn: &PrincipalConnection, noise: &AdjointNoise, dh: &DVector<f64>, z: &[f64]) -> Result<Vec<Line>> {
    let (n, pd) = (conn.base_dim(), conn.algebra().dim());
    let x = &z[..n];
    let mu = &z[2 * n..];
    let a_conn = conn.coefficients_at(x)?;
    let bc = conn.curvature(x)?;
    let c = conn.algebra().constants();
    let a = Coeffs::at(&noise.a, x, false)?;
    let d = Coeffs::at(&noise.d, x, false)?;
    let mut lines = Vec::with_capacity(2 * n + pd);
    for i in 0..n {
        let corr = (0..n).map(|l| a.g[i][l] * a.v[l]).sum();
        lines.push(Line {
            name: labelled("dx^", i),
            drift: Part::Value("∂h/∂x^i", dh[i]),
            correction: Part::Value("∂a^i/∂x^ℓ a^ℓ", corr),
            diffusion: vec![Part::Value("a^i", a.v[i])],
        });
    }
    // C^d_{ca} μ_d A^c_i, the coefficient shared by the p and μ lines.
    let twist = |i: usize, aa: usize| -> f64 {
        let mut v = 0.0;
        for cc in 0..pd {
            for dd in 0..pd {
                v += c[(dd, cc, aa)] * mu[dd] * a_conn[(cc, i)];
            }
        }
        v
    };
    for i in 0..n {
        let mut drift = -dh[i];
        let mut diff = 0.0;
        for j in 0..n {
            let curv: f64 = (0..pd).map(|cc| bc[(cc, i, j)] * mu[cc]).sum();
            drift -= curv * dh[n + j];
            diff += curv * a.v[j];
        }
        for aa in 0..pd {
            drift -= twist(i, aa) * dh[2 * n + aa];
            diff += twist(i, aa) * d.v[aa];
        }
        lines.push(Line {
            name: labelled("dp_", i),
            drift: Part::Value("−∂h/∂x^i − B^c_{ij} μ_c ∂h/∂p_j − C^d_{ca} μ_d A^c_i ∂h/∂μ_a", drift),
            correction: Part::Symbolic("{{p_i, f}, f}"),
            diffusion: vec![Part::Value("−(B^c_{ij} μ_c a^j + C^d_{ca} μ_d A^c_i d^a)", -diff)],
        });
    }
    for aa in 0..pd {
        let mut drift = 0.0;
        let mut diff = 0.0;
        for j in 0..n {
            drift += twist(j, aa) * dh[n + j];
            diff += twist(j, aa) * a.v[j];
        }
        for bb in 0..pd {
            let ad: f64 = (0..pd).map(|cc| c[(cc, aa, bb)] * mu[cc]).sum();
            drift += ad * dh[2 * n + bb];
            diff += ad * d.v[bb];
        }
        lines.push(Line {
            name: labelled("dmu_", aa),
            drift: Part::Value("C^d_{ca} μ_d A^c_j ∂h/∂p_j + C^c_{ab} μ_c ∂h/∂μ_b", drift),
            correction: Part::Symbolic("{{μ_a, f}, f}"),
            diffusion: vec![Part::Value("C^d_{ca} μ_d A^c_j a^j + C^c_{ab} μ_c d^b", diff)],
        });
    }
    Ok(lines)
}

fn affine_literal(conn: &AffineConnection, noise: &AffineNoise, dh: &DVector<f64>, z: &[f64]) -> Result<Vec<Line>> {
    let n = conn.base_dim();
    let x = &z[..n];
    let gl = |up: usize, lo: usize| 2 * n + up * n + lo;
    let tr = |l: usize| 2 * n + n * n + l;
    let ag = conn.gl_coefficients(x)?;
    let at = conn.translation_coefficients(x)?;
    let (bg, bt) = conn.split_curvature(x)?;
    let a = Coeffs::at(&noise.a, x, false)?;
    let d = Coeffs::at(&noise.d, x, false)?;
    let g = Coeffs::at(&noise.g, x, false)?;
    // (A^p_{ki} δ^ℓ_q − A^ℓ_{qi} δ^p_k) μ^q_p − A^ℓ_i μ_k
    let twist = |i: usize, l: usize, k: usize| -> f64 {
        let mut v = 0.0;
        for p in 0..n {
            v += ag[(p, k, i)] * z[gl(l, p)];
        }
        for q in 0..n {
            v -= ag[(l, q, i)] * z[gl(q, k)];
        }
        v - at[(l, i)] * z[tr(k)]
    };
    let mut lines = Vec::with_capacity(3 * n + n * n);
    for i in 0..n {
        let corr = (0..n).map(|k| a.g[i][k] * a.v[k]).sum();
        lines.push(Line {
            name: labelled("dx^", i),
            drift: Part::Value("∂h/∂p_i", dh[n + i]),
            correction: Part::Value("∂a^i/∂x^k a^k", corr),
            diffusion: vec![Part::Value("a^i", a.v[i])],
        });
    }
    for i in 0..n {
        let mut drift = dh[i];
        for j in 0..n {
            let mut curv = 0.0;
            for k in 0..n {
                for l in 0..n {
                    curv += bg[(k * n + l, i, j)] * z[gl(k, l)];
                }
            }
            for l in 0..n {
                curv += bt[(l, i, j)] * z[tr(l)];
            }
            drift -= curv * dh[n + j];
        }
        for k in 0..n {
            for l in 0..n {
                drift += twist(i, l, k) * dh[gl(l, k)];
            }
            let tk: f64 = (0..n).map(|p| ag[(p, k, i)] * z[tr(p)]).sum();
            drift += tk * dh[tr(k)];
        }
        lines.push(Line {
            name: labelled("dp_", i),
            drift: Part::Value(
                "∂h/∂x^i − (B^ℓ_{kij} μ^k_ℓ + B^ℓ_{ij} μ_ℓ) ∂h/∂p_j + ((A^p_{ki} δ^ℓ_q − A^ℓ_{qi} δ^p_k) μ^q_p − A^ℓ_i μ_k) ∂h/∂μ^ℓ_k + A^p_{ki} μ_p ∂h/∂μ_k",
                drift,
            ),
            correction: Part::Symbolic("{{p_i, f}, f}"),
            diffusion: vec![Part::Symbolic("{p_i, f}")],
        });
    }
    for l in 0..n {
        for k in 0..n {
            let dkl = d.v[l * n + k];
            let mut drift = 0.0;
            for i in 0..n {
                drift += twist(i, l, k) * dkl;
                drift += (0..n).map(|p| ag[(p, k, i)] * z[gl(l, p)]).sum::<f64>() * g.v[i];
            }
            lines.push(Line {
                name: format!("dmu^{}_{}", l + 1, k + 1),
                drift: Part::Value(
                    "((A^p_{ki} δ^ℓ_q − A^ℓ_{qi} δ^p_k) μ^q_p − A^ℓ_i μ_k) d^k_ℓ + A^p_{ki} μ^ℓ_p g^i",
                    drift,
                ),
                correction: Part::Symbolic("{{μ^ℓ_k, f}, f}"),
                diffusion: vec![Part::Symbolic("{μ^ℓ_k, f}")],
            });
        }
    }
    let trace: f64 = (0..n).map(|k| d.v[k * n + k]).sum();
    for i in 0..n {
        let mut drift = -z[tr(i)] * trace;
        for k in 0..n {
            for p in 0..n {
                drift -= ag[(p, i, k)] * z[tr(p)] * a.v[k];
            }
        }
        lines.push(Line {
            name: labelled("dmu_", i),
            drift: Part::Value("−A^p_{ik} μ_p a^k − μ_i δ^ℓ_k d^k_ℓ", drift),
            correction: Part::Symbolic("{{μ_i, f}, f}"),
            diffusion: vec![Part::Symbolic("{μ_i, f}")],
        });
    }
    Ok(lines)
}

fn gl_literal(conn: &GlRefinementConnection, dh: &DVector<f64>, z: &[f64]) -> Result<Vec<Line>> {
    let n = conn.n();
    let base = &z[..2 * n];
    let (xo, qo, po, lo) = (0, n, 2 * n, 3 * n);
    let mu = |up: usize, low: usize| 4 * n + up * n + low;
    let ax = conn.x_coefficients(base)?;
    let aq = conn.q_coefficients(base)?;
    let curv = conn.curvature_blocks(base)?;
    let symbolic = |line: String, corr: &'static str, diff: &'static str, drift: Part| Line {
        name: line,
        drift,
        correction: Part::Symbolic(corr),
        diffusion: vec![Part::Symbolic(diff)],
    };
    let mut lines = Vec::with_capacity(4 * n + n * n);
    for i in 0..n {
        lines.push(symbolic(
            labelled("dx^", i),
            "{{x^i, f}, f}",
            "{x^i, f}",
            Part::Value("∂h/∂p_i", dh[po + i]),
        ));
    }
    for i in 0..n {
        lines.push(symbolic(
            labelled("dq^", i),
            "{{q^i, f}, f}",
            "{q^i, f}",
            Part::Value("∂h/∂λ_i", dh[lo + i]),
        ));
    }
    // −½ Σ_j B^ℓ_{kij} μ^k_ℓ + (A^p_{ki} μ^ℓ_p − A^ℓ_{qi} μ^q_k) ∂h/∂μ^ℓ_k
    let momentum = |i: usize, conn_part: &crate::geometry::Tensor3, block: &crate::geometry::Tensor3| -> f64 {
        let mut v = 0.0;
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    v -= 0.5 * block[(k * n + l, i, j)] * z[mu(k, l)];
                }
            }
        }
        for k in 0..n {
            for l in 0..n {
                let mut t = 0.0;
                for p in 0..n {
                    t += conn_part[(p, k, i)] * z[mu(l, p)];
                }
                for q in 0..n {
                    t -= conn_part[(l, q, i)] * z[mu(q, k)];
                }
                v += t * dh[mu(l, k)];
            }
        }
        v
    };
    for i in 0..n {
        lines.push(symbolic(
            labelled("dp_", i),
            "{{p_i, f}, f}",
            "{p_i, f}",
            Part::Value(
                "−∂h/∂x^i − ½ B^ℓ_{kij} μ^k_ℓ + (A^p_{ki} δ^ℓ_q − A^ℓ_{qi} δ^p_k) μ^q_p ∂h/∂μ^ℓ_k",
                -dh[xo + i] + momentum(i, &ax, &curv.xx),
            ),
        ));
    }
    for i in 0..n {
        lines.push(symbolic(
            labelled("dlambda_", i),
            "{{λ_i, f}, f}",
            "{λ_i, f}",
            Part::Value(
                "−∂h/∂q^i − ½ B^ℓ_{kij} μ^k_ℓ + (B^p_{ki} δ^ℓ_q − B^ℓ_{qi} δ^p_k) μ^q_p ∂h/∂μ^ℓ_k",
                -dh[qo + i] + momentum(i, &aq, &curv.qq),
            ),
        ));
    }
    for l in 0..n {
        for k in 0..n {
            let mut drift = 0.0;
            for j in 0..n {
                let mut tp = 0.0;
                let mut tl = 0.0;
                for p in 0..n {
                    tp += ax[(p, k, j)] * z[mu(l, p)];
                    tl += aq[(p, k, j)] * z[mu(l, p)];
                }
                for q in 0..n {
                    tp += ax[(l, q, j)] * z[mu(q, k)];
                    tl -= aq[(l, k, j)] * z[mu(q, k)];
                }
                drift -= tp * dh[po + j] + tl * dh[lo + j];
            }
            for i in 0..n {
                drift += z[mu(i, k)] * dh[mu(i, l)];
            }
            for j in 0..n {
                drift -= z[mu(l, j)] * dh[mu(k, j)];
            }
            lines.push(symbolic(
                format!("dmu^{}_{}", l + 1, k + 1),
                "{{μ^ℓ_k, f}, f}",
                "{μ^ℓ_k, f}",
                Part::Value(
                    "−(A^p_{kj} δ^ℓ_q + A^ℓ_{qj} δ^p_k) μ^q_p ∂h/∂p_j − (B^p_{kj} δ^ℓ_q − B^ℓ_{kj} δ^p_k) μ^q_p ∂h/∂λ_j + (δ^ℓ_j μ^i_k − δ^i_k μ^ℓ_j) ∂h/∂μ^i_j",
                    drift,
                ),
            ));
        }
    }
    Ok(lines)
}
