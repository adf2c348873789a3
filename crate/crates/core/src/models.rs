//! Named, parameterised systems built from the constructors in this crate.
//!
//! Every model is described by a [`ModelDescriptor`] and instantiated from a
//! [`ModelParams`] value. Parameters serialize as
//! `{ name = "...", parameters = { ... } }`; all parameter fields are optional
//! and fall back to the defaults listed in the descriptor's schema.
//! Polynomial entries use the map format of [`Polynomial`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebroid::{LieAlgebroid, Section};
use crate::connection::{levi_civita, AffineConnection, GlRefinementConnection, LieAlgebraSpec, PrincipalConnection};
use crate::error::{Error, Result};
use crate::geometry::{ScalarField, Tensor3};
use crate::poisson::{
    antisymmetry_residual, check_jacobi, linear_lie_poisson, AdjointSign, AnchorSign, LambdaPairing, PoissonStructure,
};
use crate::polynomial::Polynomial;
use crate::rng::NoiseStream;
use crate::sde::expanded::{
    AdjointNoise, AffineNoise, AuditReport, ExpandedInputs, ExpandedKind, ExpandedSystem, GlNoise, WhitneyMetric,
    WhitneyNoise, AUDIT_TOLERANCE,
};
use crate::sde::StochasticHamiltonianSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum So3Preset {
    #[default]
    So3,
    So21,
    HeavyTop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct So3Params {
    pub preset: So3Preset,
    /// Principal moments of inertia.
    pub inertia: [f64; 3],
    /// `M g χ` for the heavy top; ignored by the other presets.
    pub gravity_lever: [f64; 3],
}

impl Default for So3Params {
    fn default() -> Self {
        So3Params {
            preset: So3Preset::So3,
            inertia: [1.0, 2.0, 3.0],
            gravity_lever: [0.0, 0.0, 1.0],
        }
    }
}

/// Anchor and structure functions as polynomials in the `n` base variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgebroidTable {
    pub n: usize,
    pub r: usize,
    /// `b_α^i` at `i·r + α`. Default: identity when `n = r`, zero otherwise.
    pub anchor: Option<Vec<Polynomial>>,
    /// `C^γ_{αβ}` at `(γ·r + α)·r + β`. Default: zero.
    pub structure: Option<Vec<Polynomial>>,
}

impl Default for AlgebroidTable {
    fn default() -> Self {
        AlgebroidTable {
            n: 2,
            r: 2,
            anchor: None,
            structure: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgebroidDualParams {
    pub algebroid: AlgebroidTable,
    pub anchor_sign: AnchorSign,
    /// On `(x, ξ)`. Default `½ Σ ξ_α²`.
    pub hamiltonian: Option<Polynomial>,
    /// Noise sections `a_s^α(x)`, one list of `r` polynomials each. Default: one constant section `e_1`.
    pub sections: Option<Vec<Vec<Polynomial>>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WhitneyMetricTable {
    /// `k^{ij}` at `i·n + j`. Default: identity.
    pub pp: Option<Vec<Polynomial>>,
    /// `k^{iα}` at `i·r + α`. Default: zero.
    pub p_xi: Option<Vec<Polynomial>>,
    /// `k^{αβ}` at `α·r + β`. Default: identity.
    pub xi_xi: Option<Vec<Polynomial>>,
}

/// `g = a^α ξ_α + d^i p_i` with coefficients on the base.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WhitneyNoiseTable {
    pub a: Vec<Polynomial>,
    pub d: Vec<Polynomial>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WhitneySumParams {
    pub algebroid: AlgebroidTable,
    pub metric: WhitneyMetricTable,
    /// Default: one noise with `a = e_1`, `d = 0`.
    pub noise: Option<Vec<WhitneyNoiseTable>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgebraPreset {
    #[default]
    So3,
    So21,
    Abelian,
    Gl,
    Ga,
}

/// `f = a^j p_j + d^a μ_a`, or the affine/GL analogues; empty lists mean zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiberNoiseTable {
    pub a: Vec<Polynomial>,
    pub d: Vec<Polynomial>,
    pub g: Vec<Polynomial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdjointBundleParams {
    pub n: usize,
    pub algebra: AlgebraPreset,
    /// Dimension of `abelian`, or the `n` of `gl(n)` / `ga(n)`.
    pub algebra_size: usize,
    /// `A_i^a` at `a·n + i`. Default: `A_2^1 = x¹`, `A_1^2 = ½ x¹x²`, `A_2^3 = −(x²)²` truncated to the algebra.
    pub connection: Option<Vec<Polynomial>>,
    pub sign: AdjointSign,
    /// On `(x, p, μ)`. Default `½|p|² + ½|μ|²`.
    pub hamiltonian: Option<Polynomial>,
    /// Uses `a` and `d`. Default `a = e_1`, `d = ½ e_last`.
    pub noise: Option<FiberNoiseTable>,
}

impl Default for AdjointBundleParams {
    fn default() -> Self {
        AdjointBundleParams {
            n: 2,
            algebra: AlgebraPreset::So3,
            algebra_size: 1,
            connection: None,
            sign: AdjointSign::default(),
            hamiltonian: None,
            noise: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AffineRefinementParams {
    pub n: usize,
    /// `A^u_{vi}` at `(u·n + v)·n + i`. Default: `½ x^i` on the diagonal `u = v = i`.
    pub linear: Option<Vec<Polynomial>>,
    /// `A^u_i` at `u·n + i`. Default: `0.3` on the diagonal.
    pub translation: Option<Vec<Polynomial>>,
    /// On `(x, p, μ^ℓ_k, μ_ℓ)`. Default: half the sum of squares of the momenta.
    pub hamiltonian: Option<Polynomial>,
    /// `d[ℓ·n + k]` multiplies `μ^ℓ_k`, `g[ℓ]` multiplies `μ_ℓ`. Default `a = e_1`, `d = ½ e_1`, `g = 0`.
    pub noise: Option<FiberNoiseTable>,
}

impl Default for AffineRefinementParams {
    fn default() -> Self {
        AffineRefinementParams {
            n: 1,
            linear: None,
            translation: None,
            hamiltonian: None,
            noise: None,
        }
    }
}

/// Curvature blocks of length `n⁴`, `B^ℓ_{kij}` at `((k·n + ℓ)·n + i)·n + j`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvatureTable {
    pub xx: Vec<Polynomial>,
    pub qq: Vec<Polynomial>,
    pub xq: Vec<Polynomial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlRefinementParams {
    pub n: usize,
    /// `A^u_{vi}(x, q)` at `(u·n + v)·n + i`. Default: `½ x^i` on the diagonal.
    pub x_part: Option<Vec<Polynomial>>,
    /// `B^u_{vi}(x, q)`, same layout. Default: `q^i` on the diagonal.
    pub q_part: Option<Vec<Polynomial>>,
    /// Overrides the curvature derived from the connection.
    pub curvature: Option<CurvatureTable>,
    pub pairing: LambdaPairing,
    /// On `(x, q, p, λ, μ)`. Default: half the sum of squares of the momenta.
    pub hamiltonian: Option<Polynomial>,
    /// `a`, `d` length `n`, `g[ℓ·n + k]` multiplies `μ^ℓ_k`; coefficients on `(x, q)`.
    /// Default `a = e_1`, `d = 0`, `g = ½ e_1`.
    pub noise: Option<FiberNoiseTable>,
}

impl Default for GlRefinementParams {
    fn default() -> Self {
        GlRefinementParams {
            n: 1,
            x_part: None,
            q_part: None,
            curvature: None,
            pairing: LambdaPairing::default(),
            hamiltonian: None,
            noise: None,
        }
    }
}

/// A model name together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "parameters", rename_all = "snake_case")]
pub enum ModelParams {
    So3LiePoisson(So3Params),
    AlgebroidDual(AlgebroidDualParams),
    WhitneySum(WhitneySumParams),
    AdjointBundle(AdjointBundleParams),
    AffineRefinement(AffineRefinementParams),
    GlRefinement(GlRefinementParams),
}

impl ModelParams {
    pub fn name(&self) -> &'static str {
        match self {
            ModelParams::So3LiePoisson(_) => "so3_lie_poisson",
            ModelParams::AlgebroidDual(_) => "algebroid_dual",
            ModelParams::WhitneySum(_) => "whitney_sum",
            ModelParams::AdjointBundle(_) => "adjoint_bundle",
            ModelParams::AffineRefinement(_) => "affine_refinement",
            ModelParams::GlRefinement(_) => "gl_refinement",
        }
    }

    /// Default parameters of a registered model.
    pub fn defaults(name: &str) -> Result<Self> {
        find(name)
            .map(|d| (d.defaults)())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model `{name}`")))
    }

    pub fn build(&self) -> Result<ModelInstance> {
        match self {
            ModelParams::So3LiePoisson(p) => build_so3(p),
            ModelParams::AlgebroidDual(p) => build_algebroid_dual(p),
            ModelParams::WhitneySum(p) => build_whitney(p),
            ModelParams::AdjointBundle(p) => build_adjoint(p),
            ModelParams::AffineRefinement(p) => build_affine(p),
            ModelParams::GlRefinement(p) => build_gl(p),
        }
    }
}

/// A named invariant shipped with a model.
#[derive(Debug, Clone)]
pub struct NamedField {
    pub name: String,
    pub polynomial: Polynomial,
    pub field: ScalarField,
}

impl NamedField {
    fn new(name: &str, dim: usize, polynomial: Polynomial) -> Result<Self> {
        Ok(NamedField {
            name: name.into(),
            field: polynomial.to_field(dim)?,
            polynomial,
        })
    }
}

/// Factory output.
#[derive(Debug, Clone)]
pub struct ModelInstance {
    pub name: &'static str,
    pub system: StochasticHamiltonianSystem,
    pub casimirs: Vec<NamedField>,
    /// The underlying algebroid, for models built from one.
    pub algebroid: Option<LieAlgebroid>,
    /// Structured inputs of the expanded equations, for §3/§4 models.
    pub expanded: Option<ExpandedSystem>,
}

impl ModelInstance {
    pub fn structure(&self) -> &PoissonStructure {
        self.system.poisson()
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn hamiltonian(&self) -> &ScalarField {
        self.system.hamiltonian()
    }

    pub fn noise(&self) -> &[ScalarField] {
        self.system.noise()
    }

    /// Audit of the model's expanded equations at `points` uniform samples in `[−1, 1]^m`.
    pub fn audit(&self, points: usize, seed: u64) -> Result<Option<AuditReport>> {
        let Some(expanded) = &self.expanded else {
            return Ok(None);
        };
        let samples = sample_points(self.dim(), points, seed);
        expanded.audit(&samples, AUDIT_TOLERANCE).map(Some)
    }

    /// Antisymmetry and Jacobi residuals at `points` uniform samples in `[−1, 1]^m`.
    pub fn structure_residuals(&self, points: usize, seed: u64) -> Result<(f64, f64)> {
        let samples = sample_points(self.dim(), points, seed);
        let anti = antisymmetry_residual(self.structure(), &samples)?.max();
        let jac = check_jacobi(self.structure(), &samples)?.max();
        Ok((anti, jac))
    }
}

/// Uniform points in `[−1, 1]^dim` from a seeded stream.
pub fn sample_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut stream = NoiseStream::new(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| 2.0 * stream.uniform() - 1.0).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: &'static str,
    pub default: &'static str,
    pub description: &'static str,
}

const fn param(name: &'static str, kind: &'static str, default: &'static str, description: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        kind,
        default,
        description,
    }
}

#[derive(Debug, Clone)]
pub struct ModelDescriptor {
    pub name: &'static str,
    pub summary: &'static str,
    pub dimensions: &'static str,
    pub schema: Vec<ParamSpec>,
    /// Whether Jacobi holds for every parameter choice. The printed refinement
    /// brackets may close for small defaults and fail for others.
    pub jacobi_expected: bool,
    pub defaults: fn() -> ModelParams,
}

impl ModelDescriptor {
    pub fn build_default(&self) -> Result<ModelInstance> {
        (self.defaults)().build()
    }
}

const ALGEBROID_SCHEMA: [ParamSpec; 4] = [
    param("algebroid.n", "integer", "2", "base dimension"),
    param("algebroid.r", "integer", "2", "fiber rank"),
    param(
        "algebroid.anchor",
        "n·r polynomials in x",
        "identity if n = r, else zero",
        "b_α^i at i·r + α",
    ),
    param("algebroid.structure", "r³ polynomials in x", "zero", "C^γ_{αβ} at (γ·r + α)·r + β"),
];

pub fn registry() -> Vec<ModelDescriptor> {
    vec![
        ModelDescriptor {
            name: "so3_lie_poisson",
            summary: "Lie–Poisson rigid body; presets so3, so21, heavy_top",
            dimensions: "3 (so3, so21), 6 (heavy_top)",
            schema: vec![
                param("preset", "so3 | so21 | heavy_top", "so3", "structure constants"),
                param("inertia", "3 reals", "[1, 2, 3]", "h = ½ Σ x_i²/I_i"),
                param("gravity_lever", "3 reals", "[0, 0, 1]", "heavy top: h += M g χ·Γ"),
            ],
            jacobi_expected: true,
            defaults: || ModelParams::So3LiePoisson(So3Params::default()),
        },
        ModelDescriptor {
            name: "algebroid_dual",
            summary: "dual of a Lie algebroid with fiber-linear noise",
            dimensions: "n + r",
            schema: [
                &ALGEBROID_SCHEMA[..],
                &[
                    param("anchor_sign", "as_printed | standard", "as_printed", "sign of {x^i, ξ_α}"),
                    param("hamiltonian", "polynomial in (x, ξ)", "½|ξ|²", "drift Hamiltonian"),
                    param("sections", "lists of r polynomials in x", "[e_1]", "noise sections a_s"),
                ],
            ]
            .concat(),
            jacobi_expected: true,
            defaults: || ModelParams::AlgebroidDual(AlgebroidDualParams::default()),
        },
        ModelDescriptor {
            name: "whitney_sum",
            summary: "T*M ⊕ A* with anchor-coupled mixed block",
            dimensions: "2n + r",
            schema: [
                &ALGEBROID_SCHEMA[..],
                &[
                    param("metric.pp", "n² polynomials in x", "identity", "k^{ij} in h"),
                    param("metric.p_xi", "n·r polynomials in x", "zero", "k^{iα} in h"),
                    param("metric.xi_xi", "r² polynomials in x", "identity", "k^{αβ} in h"),
                    param("noise", "list of {a: r, d: n polynomials}", "[{a = e_1}]", "g = a^α ξ_α + d^i p_i"),
                ],
            ]
            .concat(),
            jacobi_expected: true,
            defaults: || ModelParams::WhitneySum(WhitneySumParams::default()),
        },
        ModelDescriptor {
            name: "adjoint_bundle",
            summary: "T*M ⊕ dual adjoint bundle twisted by a principal connection",
            dimensions: "2n + p",
            schema: vec![
                param("n", "integer", "2", "base dimension"),
                param("algebra", "so3 | so21 | abelian | gl | ga", "so3", "structure algebra"),
                param("algebra_size", "integer", "1", "dimension of abelian, n of gl(n)/ga(n)"),
                param("connection", "p·n polynomials in x", "quadratic example", "A_i^a at a·n + i"),
                param("sign", "consistent | as_printed", "consistent", "sign of the {p, μ} block"),
                param("hamiltonian", "polynomial in (x, p, μ)", "½|p|² + ½|μ|²", "drift Hamiltonian"),
                param("noise", "{a: n, d: p polynomials}", "a = e_1, d = ½ e_p", "f = a^j p_j + d^a μ_a"),
            ],
            jacobi_expected: true,
            defaults: || ModelParams::AdjointBundle(AdjointBundleParams::default()),
        },
        ModelDescriptor {
            name: "affine_refinement",
            summary: "GA(n) refinement with an affine connection (printed blocks)",
            dimensions: "3n + n²",
            schema: vec![
                param("n", "integer", "1", "base dimension"),
                param("linear", "n³ polynomials in x", "½ x^i diagonal", "A^u_{vi} at (u·n + v)·n + i"),
                param("translation", "n² polynomials in x", "0.3 diagonal", "A^u_i at u·n + i"),
                param("hamiltonian", "polynomial in (x, p, μ)", "½|momenta|²", "drift Hamiltonian"),
                param("noise", "{a: n, d: n², g: n polynomials}", "a = e_1, d = ½ e_1", "fiber-linear noise"),
            ],
            jacobi_expected: false,
            defaults: || ModelParams::AffineRefinement(AffineRefinementParams::default()),
        },
        ModelDescriptor {
            name: "gl_refinement",
            summary: "GL(n) refinement over (x, q) (printed blocks, audit attached)",
            dimensions: "4n + n²",
            schema: vec![
                param("n", "integer", "1", "base dimension"),
                param("x_part", "n³ polynomials in (x, q)", "½ x^i diagonal", "A^u_{vi}"),
                param("q_part", "n³ polynomials in (x, q)", "q^i diagonal", "B^u_{vi}"),
                param("curvature", "{xx, qq, xq: n⁴ polynomials}", "derived", "curvature override"),
                param("pairing", "as_printed | corrected", "as_printed", "which coordinate pairs with λ"),
                param("hamiltonian", "polynomial in (x, q, p, λ, μ)", "½|momenta|²", "drift Hamiltonian"),
                param("noise", "{a: n, d: n, g: n² polynomials}", "a = e_1, g = ½ e_1", "fiber-linear noise"),
            ],
            jacobi_expected: false,
            defaults: || ModelParams::GlRefinement(GlRefinementParams::default()),
        },
    ]
}

pub fn find(name: &str) -> Option<ModelDescriptor> {
    registry().into_iter().find(|d| d.name == name)
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("parameter `{field}`: {msg}"))
}

fn to_fields(field: &str, polys: &[Polynomial], len: usize, dim: usize) -> Result<Vec<ScalarField>> {
    if polys.len() != len {
        return Err(invalid(field, format!("expected {len} entries, found {}", polys.len())));
    }
    polys
        .iter()
        .enumerate()
        .map(|(k, p)| p.to_field(dim).map_err(|e| invalid(&format!("{field}[{k}]"), e)))
        .collect()
}

/// Zero list of length `len` when the parameter is empty.
fn or_zero(polys: &[Polynomial], len: usize) -> Vec<Polynomial> {
    if polys.is_empty() {
        vec![Polynomial::zero(); len]
    } else {
        polys.to_vec()
    }
}

fn constants(dim: usize, values: &[f64]) -> Vec<Polynomial> {
    values.iter().map(|&v| Polynomial::constant(dim, v)).collect()
}

fn unit(len: usize, index: usize, value: f64) -> Vec<f64> {
    let mut v = vec![0.0; len];
    if index < len {
        v[index] = value;
    }
    v
}

/// `½ Σ z_i²` over the listed coordinates of a `dim`-variable space.
fn half_squares(dim: usize, coords: impl IntoIterator<Item = usize>) -> Polynomial {
    coords.into_iter().fold(Polynomial::zero(), |acc, i| {
        let mut e = vec![0; dim];
        e[i] = 2;
        acc.with_term(e, 0.5)
    })
}

fn monomial(dim: usize, powers: &[(usize, u32)], c: f64) -> Polynomial {
    let mut e = vec![0; dim];
    for &(i, k) in powers {
        e[i] += k;
    }
    Polynomial::zero().with_term(e, c)
}

fn so21_constants() -> Tensor3 {
    Tensor3::from_fn(3, 3, 3, |c, a, b| if c == 2 { -levi_civita(a, b, c) } else { levi_civita(a, b, c) })
}

fn se3_constants() -> Tensor3 {
    // Π at 0..3, Γ at 3..6: [Π_a, Π_b] = ε Π_c, [Π_a, Γ_b] = ε Γ_c.
    Tensor3::from_fn(6, 6, 6, |c, a, b| {
        let (ca, cb, cc) = (a % 3, b % 3, c % 3);
        let e = levi_civita(ca, cb, cc);
        match (a < 3, b < 3, c < 3) {
            (true, true, true) => e,
            (true, false, false) | (false, true, false) => e,
            _ => 0.0,
        }
    })
}

fn build_so3(p: &So3Params) -> Result<ModelInstance> {
    if let Some(k) = p.inertia.iter().position(|i| !(i.is_finite() && *i != 0.0)) {
        return Err(invalid(&format!("inertia[{k}]"), "must be finite and nonzero"));
    }
    let (algebra, m) = match p.preset {
        So3Preset::So3 => (LieAlgebraSpec::so3(), 3),
        So3Preset::So21 => (LieAlgebraSpec::new("so21", so21_constants())?, 3),
        So3Preset::HeavyTop => (LieAlgebraSpec::new("se3", se3_constants())?, 6),
    };
    let structure = linear_lie_poisson(&algebra.lie_poisson_tensor())?;
    let mut h = (0..3).fold(Polynomial::zero(), |acc, i| acc.add(&monomial(m, &[(i, 2)], 0.5 / p.inertia[i])));
    if p.preset == So3Preset::HeavyTop {
        for i in 0..3 {
            h = h.add(&monomial(m, &[(3 + i, 1)], p.gravity_lever[i]));
        }
    }
    let casimirs = match p.preset {
        So3Preset::So3 => vec![NamedField::new("norm_squared", m, half_squares(m, 0..3).scale(2.0))?],
        So3Preset::So21 => {
            let c = half_squares(m, 0..2).scale(2.0).add(&monomial(m, &[(2, 2)], -1.0));
            vec![NamedField::new("hyperbolic_norm", m, c)?]
        }
        So3Preset::HeavyTop => {
            let gamma = half_squares(m, 3..6).scale(2.0);
            let dot = (0..3).fold(Polynomial::zero(), |acc, i| acc.add(&monomial(m, &[(i, 1), (3 + i, 1)], 1.0)));
            vec![NamedField::new("gamma_squared", m, gamma)?, NamedField::new("pi_dot_gamma", m, dot)?]
        }
    };
    let system = StochasticHamiltonianSystem::new(structure, h.to_field(m)?, vec![ScalarField::coordinate(m, 0)])?;
    Ok(ModelInstance {
        name: "so3_lie_poisson",
        system,
        casimirs,
        algebroid: None,
        expanded: None,
    })
}

fn build_algebroid(t: &AlgebroidTable) -> Result<LieAlgebroid> {
    let (n, r) = (t.n, t.r);
    let anchor = match &t.anchor {
        Some(a) => a.clone(),
        None => {
            let id = DMatrix::<f64>::identity(n, r);
            let values: Vec<f64> = (0..n * r).map(|k| if n == r { id[(k / r, k % r)] } else { 0.0 }).collect();
            constants(n, &values)
        }
    };
    let structure = t.structure.clone().unwrap_or_else(|| vec![Polynomial::zero(); r * r * r]);
    let anchor = to_fields("algebroid.anchor", &anchor, n * r, n)?;
    let structure = to_fields("algebroid.structure", &structure, r * r * r, n)?;
    LieAlgebroid::new(n, r, anchor, structure).map_err(|e| invalid("algebroid", e))
}

fn finish(name: &'static str, kind: ExpandedKind, inputs: ExpandedInputs) -> Result<ModelInstance> {
    let algebroid = match &inputs {
        ExpandedInputs::AlgebroidDual { algebroid, .. } | ExpandedInputs::WhitneySum { algebroid, .. } => {
            Some(algebroid.clone())
        }
        _ => None,
    };
    let expanded = ExpandedSystem::new(kind, inputs)?;
    Ok(ModelInstance {
        name,
        system: expanded.system().clone(),
        casimirs: Vec::new(),
        algebroid,
        expanded: Some(expanded),
    })
}

fn build_algebroid_dual(p: &AlgebroidDualParams) -> Result<ModelInstance> {
    let algebroid = build_algebroid(&p.algebroid)?;
    let (n, r) = (p.algebroid.n, p.algebroid.r);
    let h = p.hamiltonian.clone().unwrap_or_else(|| half_squares(n + r, n..n + r));
    let h = h.to_field(n + r).map_err(|e| invalid("hamiltonian", e))?;
    let sections = match &p.sections {
        Some(list) => list
            .iter()
            .enumerate()
            .map(|(s, a)| Section::new(to_fields(&format!("sections[{s}]"), a, r, n)?))
            .collect::<Result<Vec<_>>>()?,
        None => vec![Section::constant(n, &unit(r, 0, 1.0))],
    };
    // A structure with a non-default anchor sign is not expressible through the
    // expanded inputs; build it directly.
    if p.anchor_sign != AnchorSign::AsPrinted {
        let noise = sections
            .iter()
            .map(crate::algebroid::fiber_linear_function)
            .collect::<Result<Vec<_>>>()?;
        let structure = crate::poisson::from_algebroid_with(&algebroid, p.anchor_sign);
        return Ok(ModelInstance {
            name: "algebroid_dual",
            system: StochasticHamiltonianSystem::new(structure, h, noise)?,
            casimirs: Vec::new(),
            algebroid: Some(algebroid),
            expanded: None,
        });
    }
    finish(
        "algebroid_dual",
        ExpandedKind::AlgebroidDual,
        ExpandedInputs::AlgebroidDual { algebroid, h, sections },
    )
}

fn build_whitney(p: &WhitneySumParams) -> Result<ModelInstance> {
    let algebroid = build_algebroid(&p.algebroid)?;
    let (n, r) = (p.algebroid.n, p.algebroid.r);
    let identity = |k: usize| -> Vec<Polynomial> {
        constants(n, &(0..k * k).map(|u| if u / k == u % k { 1.0 } else { 0.0 }).collect::<Vec<_>>())
    };
    let pp = p.metric.pp.clone().unwrap_or_else(|| identity(n));
    let p_xi = p.metric.p_xi.clone().unwrap_or_else(|| vec![Polynomial::zero(); n * r]);
    let xi_xi = p.metric.xi_xi.clone().unwrap_or_else(|| identity(r));
    let metric = WhitneyMetric {
        pp: to_fields("metric.pp", &pp, n * n, n)?,
        p_xi: to_fields("metric.p_xi", &p_xi, n * r, n)?,
        xi_xi: to_fields("metric.xi_xi", &xi_xi, r * r, n)?,
    };
    let tables = p.noise.clone().unwrap_or_else(|| {
        vec![WhitneyNoiseTable {
            a: constants(n, &unit(r, 0, 1.0)),
            d: Vec::new(),
        }]
    });
    let noise = tables
        .iter()
        .enumerate()
        .map(|(s, t)| {
            Ok(WhitneyNoise {
                a: Section::new(to_fields(&format!("noise[{s}].a"), &or_zero(&t.a, r), r, n)?)?,
                d: to_fields(&format!("noise[{s}].d"), &or_zero(&t.d, n), n, n)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    finish(
        "whitney_sum",
        ExpandedKind::WhitneySum,
        ExpandedInputs::WhitneySum { algebroid, metric, noise },
    )
}

fn algebra(preset: AlgebraPreset, size: usize) -> Result<LieAlgebraSpec> {
    Ok(match preset {
        AlgebraPreset::So3 => LieAlgebraSpec::so3(),
        AlgebraPreset::So21 => LieAlgebraSpec::new("so21", so21_constants())?,
        AlgebraPreset::Abelian => LieAlgebraSpec::abelian(size),
        AlgebraPreset::Gl => LieAlgebraSpec::gl(size),
        AlgebraPreset::Ga => LieAlgebraSpec::ga(size),
    })
}

fn build_adjoint(p: &AdjointBundleParams) -> Result<ModelInstance> {
    let n = p.n;
    let algebra = algebra(p.algebra, p.algebra_size)?;
    let dim_g = algebra.dim();
    let m = 2 * n + dim_g;
    let conn = match &p.connection {
        Some(c) => c.clone(),
        None => {
            let mut c = vec![Polynomial::zero(); dim_g * n];
            let mut set = |a: usize, i: usize, poly: Polynomial| {
                if a < dim_g && i < n {
                    c[a * n + i] = poly;
                }
            };
            if n >= 2 {
                set(0, 1, monomial(n, &[(0, 1)], 1.0));
                set(1, 0, monomial(n, &[(0, 1), (1, 1)], 0.5));
                set(2, 1, monomial(n, &[(1, 2)], -1.0));
            } else if n == 1 {
                set(0, 0, monomial(n, &[(0, 1)], 1.0));
            }
            c
        }
    };
    let fields = to_fields("connection", &conn, dim_g * n, n)?;
    let connection = PrincipalConnection::new(algebra, n, fields).map_err(|e| invalid("connection", e))?;
    let h = p.hamiltonian.clone().unwrap_or_else(|| half_squares(m, n..m));
    let h = h.to_field(m).map_err(|e| invalid("hamiltonian", e))?;
    let table = p.noise.clone().unwrap_or_else(|| FiberNoiseTable {
        a: constants(n, &unit(n, 0, 1.0)),
        d: constants(n, &unit(dim_g, dim_g.saturating_sub(1), 0.5)),
        g: Vec::new(),
    });
    let noise = AdjointNoise {
        a: to_fields("noise.a", &or_zero(&table.a, n), n, n)?,
        d: to_fields("noise.d", &or_zero(&table.d, dim_g), dim_g, n)?,
    };
    finish(
        "adjoint_bundle",
        ExpandedKind::AdjointBundle,
        ExpandedInputs::AdjointBundle {
            connection,
            sign: p.sign,
            h,
            noise,
        },
    )
}

fn diagonal3(n: usize, entry: impl Fn(usize) -> Polynomial) -> Vec<Polynomial> {
    let mut out = vec![Polynomial::zero(); n * n * n];
    for i in 0..n {
        out[(i * n + i) * n + i] = entry(i);
    }
    out
}

fn build_affine(p: &AffineRefinementParams) -> Result<ModelInstance> {
    let n = p.n;
    let m = 3 * n + n * n;
    let linear = p.linear.clone().unwrap_or_else(|| diagonal3(n, |i| monomial(n, &[(i, 1)], 0.5)));
    let translation = p.translation.clone().unwrap_or_else(|| {
        constants(n, &(0..n * n).map(|u| if u / n == u % n { 0.3 } else { 0.0 }).collect::<Vec<_>>())
    });
    let connection = AffineConnection::new(
        n,
        to_fields("linear", &linear, n * n * n, n)?,
        to_fields("translation", &translation, n * n, n)?,
    )?;
    let h = p.hamiltonian.clone().unwrap_or_else(|| half_squares(m, n..m));
    let h = h.to_field(m).map_err(|e| invalid("hamiltonian", e))?;
    let table = p.noise.clone().unwrap_or_else(|| FiberNoiseTable {
        a: constants(n, &unit(n, 0, 1.0)),
        d: constants(n, &unit(n * n, 0, 0.5)),
        g: Vec::new(),
    });
    let noise = AffineNoise {
        a: to_fields("noise.a", &or_zero(&table.a, n), n, n)?,
        d: to_fields("noise.d", &or_zero(&table.d, n * n), n * n, n)?,
        g: to_fields("noise.g", &or_zero(&table.g, n), n, n)?,
    };
    finish(
        "affine_refinement",
        ExpandedKind::AffineRefinement,
        ExpandedInputs::AffineRefinement { connection, h, noise },
    )
}

fn build_gl(p: &GlRefinementParams) -> Result<ModelInstance> {
    let n = p.n;
    let base = 2 * n;
    let m = 4 * n + n * n;
    let x_part = p.x_part.clone().unwrap_or_else(|| diagonal3(n, |i| monomial(base, &[(i, 1)], 0.5)));
    let q_part = p.q_part.clone().unwrap_or_else(|| diagonal3(n, |i| monomial(base, &[(n + i, 1)], 1.0)));
    let mut connection = GlRefinementConnection::new(
        n,
        to_fields("x_part", &x_part, n * n * n, base)?,
        to_fields("q_part", &q_part, n * n * n, base)?,
    )?;
    if let Some(c) = &p.curvature {
        connection = connection
            .with_curvature_polynomials(&c.xx, &c.qq, &c.xq)
            .map_err(|e| invalid("curvature", e))?;
    }
    let h = p.hamiltonian.clone().unwrap_or_else(|| half_squares(m, base..m));
    let h = h.to_field(m).map_err(|e| invalid("hamiltonian", e))?;
    let table = p.noise.clone().unwrap_or_else(|| FiberNoiseTable {
        a: constants(base, &unit(n, 0, 1.0)),
        d: Vec::new(),
        g: constants(base, &unit(n * n, 0, 0.5)),
    });
    let noise = GlNoise {
        a: to_fields("noise.a", &or_zero(&table.a, n), n, base)?,
        d: to_fields("noise.d", &or_zero(&table.d, n), n, base)?,
        g: to_fields("noise.g", &or_zero(&table.g, n * n), n * n, base)?,
    };
    finish(
        "gl_refinement",
        ExpandedKind::GlRefinement,
        ExpandedInputs::GlRefinement {
            connection,
            pairing: p.pairing,
            h,
            noise,
        },
    )
}
