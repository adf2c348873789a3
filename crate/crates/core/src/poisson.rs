//! The bracket engine: a dense antisymmetric matrix field `Λ^{IJ}(z) = {z^I, z^J}`
//! and constructors for the structures built from algebroids and connections.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::algebroid::LieAlgebroid;
use crate::connection::{AffineConnection, GlRefinementConnection, PrincipalConnection};
use crate::error::{Error, Result};
use crate::geometry::{check_point, fd_gradient, ScalarField, StepRule, Tensor3};

pub type MatrixField = Arc<dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync>;
type MatrixDerivative = Arc<dyn Fn(&[f64]) -> Result<Vec<DMatrix<f64>>> + Send + Sync>;

const ANTISYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone)]
pub struct PoissonStructure {
    name: String,
    labels: Vec<String>,
    lambda: MatrixField,
    /// `∂_L Λ`, one matrix per coordinate `L`.
    derivative: Option<MatrixDerivative>,
    /// `Λ^{ij}_k` when `Λ(x) = Λ^{ij}_k x^k`.
    linear: Option<Tensor3>,
}

impl fmt::Debug for PoissonStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PoissonStructure")
            .field("name", &self.name)
            .field("labels", &self.labels)
            .field("analytic_derivative", &self.derivative.is_some())
            .field("linear", &self.linear.is_some())
            .finish()
    }
}

impl PoissonStructure {
    pub fn new(
        name: impl Into<String>,
        labels: Vec<String>,
        lambda: impl Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    ) -> Self {
        PoissonStructure {
            name: name.into(),
            labels,
            lambda: Arc::new(lambda),
            derivative: None,
            linear: None,
        }
    }

    pub fn with_derivative(
        mut self,
        derivative: impl Fn(&[f64]) -> Result<Vec<DMatrix<f64>>> + Send + Sync + 'static,
    ) -> Self {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    /// A constant bivector.
    pub fn constant(name: impl Into<String>, labels: Vec<String>, lambda: DMatrix<f64>) -> Result<Self> {
        let m = labels.len();
        if lambda.shape() != (m, m) {
            return Err(Error::dim("constant bivector", m, lambda.nrows()));
        }
        let residual = (&lambda + lambda.transpose()).abs().max();
        if residual > ANTISYMMETRY_TOL {
            return Err(Error::NotAntisymmetric {
                context: "constant bivector".into(),
                residual,
            });
        }
        let l = lambda.clone();
        Ok(PoissonStructure::new(name, labels, move |_| Ok(l.clone()))
            .with_derivative(move |_| Ok(vec![DMatrix::zeros(m, m); m])))
    }

    /// Canonical `{q^i, p_i} = 1` on `(q, p)`.
    pub fn canonical(n: usize) -> Self {
        let labels = numbered("q", n).into_iter().chain(numbered("p", n)).collect();
        PoissonStructure::constant("canonical", labels, canonical_block(n)).expect("canonical bivector")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn linear_constants(&self) -> Option<&Tensor3> {
        self.linear.as_ref()
    }

    /// `Λ(z)`, checked antisymmetric to `1e-12·max(1, max|Λ|)`.
    pub fn matrix(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        check_point("Poisson structure", z, self.dim())?;
        self.matrix_unchecked(z)
    }

    fn matrix_unchecked(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        let l = (self.lambda)(z)?;
        let m = self.dim();
        if l.shape() != (m, m) {
            return Err(Error::dim(format!("{} bivector", self.name), m, l.nrows()));
        }
        if l.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                context: format!("{} bivector at {z:?}", self.name),
            });
        }
        let residual = (&l + l.transpose()).abs().max();
        if residual > ANTISYMMETRY_TOL * l.abs().max().max(1.0) {
            return Err(Error::NotAntisymmetric {
                context: format!("{} bivector", self.name),
                residual,
            });
        }
        Ok(l)
    }

    /// `∂_L Λ` for every coordinate, analytic if available.
    pub fn matrix_derivative(&self, z: &[f64], mode: DerivativeMode) -> Result<Vec<DMatrix<f64>>> {
        check_point("Poisson structure", z, self.dim())?;
        match (&self.derivative, mode) {
            (Some(d), DerivativeMode::Auto) => d(z),
            _ => self.fd_matrix_derivative(z),
        }
    }

    fn fd_matrix_derivative(&self, z: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let mut probe = z.to_vec();
        let mut out = Vec::with_capacity(z.len());
        for l in 0..z.len() {
            let h = StepRule::Cbrt.step(z[l]);
            probe[l] = z[l] + h;
            let up = self.matrix_unchecked(&probe).map_err(|_| Error::Differentiation { coordinate: l })?;
            probe[l] = z[l] - h;
            let down = self.matrix_unchecked(&probe).map_err(|_| Error::Differentiation { coordinate: l })?;
            probe[l] = z[l];
            out.push((up - down) / ((z[l] + h) - (z[l] - h)));
        }
        Ok(out)
    }
}

fn numbered(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

fn canonical_block(n: usize) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        l[(i, n + i)] = 1.0;
        l[(n + i, i)] = -1.0;
    }
    l
}

/// Sets `Λ^{IJ} = v` and `Λ^{JI} = −v`.
fn put(l: &mut DMatrix<f64>, i: usize, j: usize, v: f64) {
    l[(i, j)] = v;
    l[(j, i)] = -v;
}

fn put_d(ds: &mut [DMatrix<f64>], coord: usize, i: usize, j: usize, v: f64) {
    ds[coord][(i, j)] += v;
    ds[coord][(j, i)] -= v;
}

/// Source of `∂_L Λ` used by [`check_jacobi_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMode {
    /// Analytic when the structure carries one, else finite differences.
    Auto,
    FiniteDifference,
}

/// Per-sample maximum residual.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub per_sample: Vec<f64>,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.per_sample.iter().copied().fold(0.0, f64::max)
    }
}

fn check_dims(p: &PoissonStructure, fields: &[&ScalarField]) -> Result<()> {
    for f in fields {
        if f.dim() != p.dim() {
            return Err(Error::dim(format!("field on {}", p.name), p.dim(), f.dim()));
        }
    }
    Ok(())
}

/// `{f, g}(z) = ∂_I f Λ^{IJ}(z) ∂_J g`.
pub fn bracket(p: &PoissonStructure, f: &ScalarField, g: &ScalarField, z: &[f64]) -> Result<f64> {
    check_dims(p, &[f, g])?;
    let l = p.matrix(z)?;
    let df = fd_gradient(f, z, None)?;
    let dg = fd_gradient(g, z, None)?;
    Ok(df.dot(&(l * dg)))
}

/// The function `z ↦ {f, g}(z)`. It carries no analytic gradient; nested
/// brackets differentiate it numerically. Evaluation failures surface as
/// non-finite values.
pub fn bracket_field(p: &PoissonStructure, f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
    check_dims(p, &[f, g])?;
    let (p, f, g) = (p.clone(), f.clone(), g.clone());
    Ok(ScalarField::new(p.dim(), move |z| bracket(&p, &f, &g, z).unwrap_or(f64::NAN)))
}

/// `X_h^I = Λ^{IJ} ∂_J h`.
pub fn hamiltonian_field(p: &PoissonStructure, h: &ScalarField, z: &[f64]) -> Result<DVector<f64>> {
    check_dims(p, &[h])?;
    Ok(p.matrix(z)? * fd_gradient(h, z, None)?)
}

pub fn antisymmetry_residual(p: &PoissonStructure, samples: &[Vec<f64>]) -> Result<ResidualReport> {
    let mut per_sample = Vec::with_capacity(samples.len());
    for z in samples {
        check_point("antisymmetry sample", z, p.dim())?;
        let l = (p.lambda)(z)?;
        per_sample.push((&l + l.transpose()).abs().max());
    }
    Ok(ResidualReport { per_sample })
}

/// Max over `(I,J,K)` of `Λ^{LI}∂_LΛ^{JK} + Λ^{LJ}∂_LΛ^{KI} + Λ^{LK}∂_LΛ^{IJ}`.
pub fn check_jacobi(p: &PoissonStructure, samples: &[Vec<f64>]) -> Result<ResidualReport> {
    check_jacobi_with(p, samples, DerivativeMode::Auto)
}

pub fn check_jacobi_with(p: &PoissonStructure, samples: &[Vec<f64>], mode: DerivativeMode) -> Result<ResidualReport> {
    let m = p.dim();
    let mut per_sample = Vec::with_capacity(samples.len());
    for z in samples {
        let l = p.matrix(z)?;
        let d = p.matrix_derivative(z, mode)?;
        // t[(i, j, k)] = Σ_L Λ^{Li} ∂_L Λ^{jk}
        let mut t = Tensor3::zeros(m, m, m);
        for (ll, dl) in d.iter().enumerate() {
            for i in 0..m {
                let c = l[(ll, i)];
                if c == 0.0 {
                    continue;
                }
                for j in 0..m {
                    for k in 0..m {
                        t[(i, j, k)] += c * dl[(j, k)];
                    }
                }
            }
        }
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    worst = worst.max((t[(i, j, k)] + t[(j, k, i)] + t[(k, i, j)]).abs());
                }
            }
        }
        per_sample.push(worst);
    }
    Ok(ResidualReport { per_sample })
}

/// Linear Lie–Poisson structure `{x^i, x^j} = Λ^{ij}_k x^k`; `constants[(i, j, k)] = Λ^{ij}_k`.
pub fn linear_lie_poisson(constants: &Tensor3) -> Result<PoissonStructure> {
    let [n, n1, n2] = constants.shape();
    if n != n1 || n != n2 {
        return Err(Error::InvalidStructureConstants(format!(
            "Lie–Poisson tensor must be n×n×n, got {n}×{n1}×{n2}"
        )));
    }
    let residual = Tensor3::from_fn(n, n, n, |k, i, j| constants[(i, j, k)]).antisymmetry_residual();
    if residual > ANTISYMMETRY_TOL {
        return Err(Error::NotAntisymmetric {
            context: "Lie–Poisson constants Λ^{ij}_k in (i, j)".into(),
            residual,
        });
    }
    let c = constants.clone();
    let dc = constants.clone();
    let mut p = PoissonStructure::new("linear_lie_poisson", numbered("x", n), move |x| {
        Ok(DMatrix::from_fn(n, n, |i, j| (0..n).map(|k| c[(i, j, k)] * x[k]).sum()))
    })
    .with_derivative(move |_| Ok((0..n).map(|k| DMatrix::from_fn(n, n, |i, j| dc[(i, j, k)])).collect()));
    p.linear = Some(constants.clone());
    Ok(p)
}

/// Sign of the mixed block `{x^i, ξ_α} = ±b_α^i` on `A*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorSign {
    /// `{x^i, ξ_α} = b_α^i`, as in the coordinate presentation used here throughout.
    #[default]
    AsPrinted,
    /// `{x^i, ξ_α} = −b_α^i`: `a ↦ f_a` is then a bracket homomorphism for all sections.
    Standard,
}

/// Structure on `A*` with coordinates `(x, ξ)`:
/// `{x^i,x^j} = 0`, `{x^i, ξ_α} = b_α^i`, `{ξ_α, ξ_β} = C^γ_{αβ} ξ_γ`.
pub fn from_algebroid(algebroid: &LieAlgebroid) -> PoissonStructure {
    from_algebroid_with(algebroid, AnchorSign::AsPrinted)
}

pub fn from_algebroid_with(algebroid: &LieAlgebroid, sign: AnchorSign) -> PoissonStructure {
    let (n, r) = (algebroid.base_dim(), algebroid.rank());
    let m = n + r;
    let s = match sign {
        AnchorSign::AsPrinted => 1.0,
        AnchorSign::Standard => -1.0,
    };
    let labels = numbered("x", n).into_iter().chain(numbered("xi", r)).collect();
    let a = algebroid.clone();
    let mut p = PoissonStructure::new("algebroid_dual", labels, move |z| {
        let (x, xi) = z.split_at(n);
        let b = a.anchor_at(x)?;
        let c = a.structure_at(x)?;
        let mut l = DMatrix::zeros(m, m);
        for i in 0..n {
            for al in 0..r {
                put(&mut l, i, n + al, s * b[(i, al)]);
            }
        }
        for al in 0..r {
            for be in al + 1..r {
                let v = (0..r).map(|g| c[(g, al, be)] * xi[g]).sum();
                put(&mut l, n + al, n + be, v);
            }
        }
        Ok(l)
    });
    if algebroid.has_analytic_derivatives() {
        let a = algebroid.clone();
        p = p.with_derivative(move |z| {
            let (x, xi) = z.split_at(n);
            let db = a.anchor_derivative(x)?;
            let c = a.structure_at(x)?;
            let dc = a.structure_derivative(x)?;
            let mut ds = vec![DMatrix::zeros(m, m); m];
            for j in 0..n {
                for i in 0..n {
                    for al in 0..r {
                        put_d(&mut ds, j, i, n + al, s * db[j][(i, al)]);
                    }
                }
                for al in 0..r {
                    for be in al + 1..r {
                        let v = (0..r).map(|g| dc[j][(g, al, be)] * xi[g]).sum();
                        put_d(&mut ds, j, n + al, n + be, v);
                    }
                }
            }
            for g in 0..r {
                for al in 0..r {
                    for be in al + 1..r {
                        put_d(&mut ds, n + g, n + al, n + be, c[(g, al, be)]);
                    }
                }
            }
            Ok(ds)
        });
    }
    if n == 0 {
        p.linear = algebroid
            .structure_at(&[])
            .ok()
            .map(|c| Tensor3::from_fn(r, r, r, |a, b, g| c[(g, a, b)]));
    }
    p
}

/// A caller-supplied block of `Λ` as a function of the full point.
pub type BlockField = Arc<dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync>;

/// Blocks of the structure on `T*M ⊕ A*` that are not fixed by the algebroid.
/// Missing blocks are zero.
#[derive(Clone, Default)]
pub struct WhitneyBlocks {
    /// `{p_i, p_j}`, `n×n`, must be antisymmetric.
    pub pp: Option<BlockField>,
    /// `{x^i, ξ_α}`, `n×r`.
    pub x_xi: Option<BlockField>,
    /// `{p_i, ξ_α}`, `n×r`.
    pub p_xi: Option<BlockField>,
}

impl WhitneyBlocks {
    /// `{x^i, ξ_α} = b_α^i` taken from the algebroid anchor, other blocks zero.
    pub fn anchor_coupled(algebroid: &LieAlgebroid) -> Self {
        let a = algebroid.clone();
        let n = algebroid.base_dim();
        WhitneyBlocks {
            x_xi: Some(Arc::new(move |z: &[f64]| a.anchor_at(&z[..n]))),
            ..WhitneyBlocks::default()
        }
    }
}

/// Structure on `T*M ⊕ A*` with coordinates `(x, p, ξ)`:
/// `{x^i, p_j} = δ^i_j`, `{ξ_α, ξ_β} = C^γ_{αβ} ξ_γ` and the supplied blocks.
pub fn whitney_sum_structure(algebroid: &LieAlgebroid, blocks: WhitneyBlocks) -> Result<PoissonStructure> {
    let (n, r) = (algebroid.base_dim(), algebroid.rank());
    let m = 2 * n + r;
    let labels = numbered("x", n)
        .into_iter()
        .chain(numbered("p", n))
        .chain(numbered("xi", r))
        .collect();
    let a = algebroid.clone();
    let assemble = move |z: &[f64]| -> Result<DMatrix<f64>> {
        let x = &z[..n];
        let xi = &z[2 * n..];
        let c = a.structure_at(x)?;
        let mut l = DMatrix::zeros(m, m);
        for i in 0..n {
            put(&mut l, i, n + i, 1.0);
        }
        for al in 0..r {
            for be in al + 1..r {
                put(&mut l, 2 * n + al, 2 * n + be, (0..r).map(|g| c[(g, al, be)] * xi[g]).sum());
            }
        }
        let shaped = |block: &Option<BlockField>, rows: usize, cols: usize, what: &str| -> Result<Option<DMatrix<f64>>> {
            match block {
                None => Ok(None),
                Some(f) => {
                    let v = f(z)?;
                    if v.shape() != (rows, cols) {
                        return Err(Error::dim(format!("{what} block rows"), rows, v.nrows()));
                    }
                    Ok(Some(v))
                }
            }
        };
        if let Some(pp) = shaped(&blocks.pp, n, n, "{p,p}")? {
            let residual = (&pp + pp.transpose()).abs().max();
            if residual > ANTISYMMETRY_TOL * pp.abs().max().max(1.0) {
                return Err(Error::NotAntisymmetric {
                    context: "supplied {p_i, p_j} block".into(),
                    residual,
                });
            }
            for i in 0..n {
                for j in i + 1..n {
                    put(&mut l, n + i, n + j, pp[(i, j)]);
                }
            }
        }
        if let Some(xx) = shaped(&blocks.x_xi, n, r, "{x,ξ}")? {
            for i in 0..n {
                for al in 0..r {
                    put(&mut l, i, 2 * n + al, xx[(i, al)]);
                }
            }
        }
        if let Some(px) = shaped(&blocks.p_xi, n, r, "{p,ξ}")? {
            for i in 0..n {
                for al in 0..r {
                    put(&mut l, n + i, 2 * n + al, px[(i, al)]);
                }
            }
        }
        Ok(l)
    };
    // Probe once so malformed blocks fail at construction.
    for probe in [vec![0.0; m], vec![1.0; m]] {
        assemble(&probe)?;
    }
    Ok(PoissonStructure::new("whitney_sum", labels, assemble))
}

/// Sign convention of the connection terms on `T*M ⊕ g̃*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjointSign {
    /// `{p_i, μ_a} = −C^d_{ca} A_i^c μ_d` with `B = dA + [A, A]` as printed. Jacobi generally
    /// fails for non-abelian algebras.
    AsPrinted,
    /// `{p_i, μ_a} = +C^d_{ca} A_i^c μ_d` and `B^a_{ij} = ∂_i A_j^a − ∂_j A_i^a − C^a_{bc} A_i^b A_j^c`
    /// in the `{p_i, p_j}` block: the reduced bracket for `∇ = d − ad A`.
    #[default]
    Consistent,
}

/// Structure on `T*M ⊕ g̃*` with coordinates `(x, p, μ)`:
/// `{x^i,p_j} = δ^i_j`, `{p_i,p_j} = −B^c_{ij} μ_c`, `{p_i, μ_a} = ∓C^d_{ca} A_i^c μ_d`,
/// `{μ_a, μ_b} = C^c_{ab} μ_c`, `{x^i, μ_a} = 0`, signs per [`AdjointSign`].
pub fn adjoint_bundle_structure(conn: &PrincipalConnection) -> PoissonStructure {
    adjoint_bundle_structure_with(conn, AdjointSign::default())
}

pub fn adjoint_bundle_structure_with(conn: &PrincipalConnection, sign: AdjointSign) -> PoissonStructure {
    let s = match sign {
        AdjointSign::AsPrinted => 1.0,
        AdjointSign::Consistent => -1.0,
    };
    let n = conn.base_dim();
    let pd = conn.algebra().dim();
    let m = 2 * n + pd;
    let labels = numbered("x", n)
        .into_iter()
        .chain(numbered("p", n))
        .chain(numbered("mu", pd))
        .collect();
    let consts = conn.algebra().constants().clone();
    let c1 = conn.clone();
    let k1 = consts.clone();
    let mut p = PoissonStructure::new("adjoint_bundle", labels, move |z| {
        let x = &z[..n];
        let mu = &z[2 * n..];
        let a = c1.coefficients_at(x)?;
        let b = c1.curvature_with(x, s)?;
        let mut l = DMatrix::zeros(m, m);
        for i in 0..n {
            put(&mut l, i, n + i, 1.0);
            for j in i + 1..n {
                put(&mut l, n + i, n + j, -(0..pd).map(|c| b[(c, i, j)] * mu[c]).sum::<f64>());
            }
            for aa in 0..pd {
                let mut v = 0.0;
                for c in 0..pd {
                    for d in 0..pd {
                        v -= s * k1[(d, c, aa)] * a[(c, i)] * mu[d];
                    }
                }
                put(&mut l, n + i, 2 * n + aa, v);
            }
        }
        for aa in 0..pd {
            for bb in aa + 1..pd {
                put(&mut l, 2 * n + aa, 2 * n + bb, (0..pd).map(|c| k1[(c, aa, bb)] * mu[c]).sum());
            }
        }
        Ok(l)
    });
    if conn.has_analytic_second_derivatives() {
        let c2 = conn.clone();
        p = p.with_derivative(move |z| {
            let x = &z[..n];
            let mu = &z[2 * n..];
            let a = c2.coefficients_at(x)?;
            let da = c2.coefficient_derivatives(x)?;
            let b = c2.curvature_with(x, s)?;
            let db = c2.curvature_derivative_with(x, s)?;
            let mut ds = vec![DMatrix::zeros(m, m); m];
            for k in 0..n {
                for i in 0..n {
                    for j in i + 1..n {
                        let v = -(0..pd).map(|c| db[k][(c, i, j)] * mu[c]).sum::<f64>();
                        put_d(&mut ds, k, n + i, n + j, v);
                    }
                    for aa in 0..pd {
                        let mut v = 0.0;
                        for c in 0..pd {
                            for d in 0..pd {
                                v -= s * consts[(d, c, aa)] * da[k][(c, i)] * mu[d];
                            }
                        }
                        put_d(&mut ds, k, n + i, 2 * n + aa, v);
                    }
                }
            }
            for e in 0..pd {
                let coord = 2 * n + e;
                for i in 0..n {
                    for j in i + 1..n {
                        put_d(&mut ds, coord, n + i, n + j, -b[(e, i, j)]);
                    }
                    for aa in 0..pd {
                        let v = -s * (0..pd).map(|c| consts[(e, c, aa)] * a[(c, i)]).sum::<f64>();
                        put_d(&mut ds, coord, n + i, 2 * n + aa, v);
                    }
                }
                for aa in 0..pd {
                    for bb in aa + 1..pd {
                        put_d(&mut ds, coord, 2 * n + aa, 2 * n + bb, consts[(e, aa, bb)]);
                    }
                }
            }
            Ok(ds)
        });
    }
    p
}

/// Coordinate labels and offsets of `(x^i, p_i, μ^ℓ_k, μ_ℓ)`: `μ^ℓ_k` sits at
/// `2n + ℓ·n + k`, `μ_ℓ` at `2n + n² + ℓ`.
pub fn affine_refinement_labels(n: usize) -> Vec<String> {
    let mut labels: Vec<String> = numbered("x", n).into_iter().chain(numbered("p", n)).collect();
    for up in 1..=n {
        for lo in 1..=n {
            labels.push(format!("mu^{up}_{lo}"));
        }
    }
    labels.extend(numbered("mu_", n));
    labels
}

/// Structure on `T*M ⊕ g̃*` for the affine group, entries as printed:
///
/// - `{x^i, p_j} = δ^i_j`, all other `x` brackets zero, `{μ_i, μ_j} = 0`
/// - `{p_i, p_j} = −B^ℓ_{kij} μ^k_ℓ − B^ℓ_{ij} μ_ℓ`
/// - `{p_i, μ^ℓ_k} = (A^p_{ki} δ^ℓ_q − A^ℓ_{qi} δ^p_k) μ^q_p − A^ℓ_i μ_k`
/// - `{p_i, μ_k} = A^p_{ki} μ_p`
/// - `{μ^i_j, μ^ℓ_k} = δ^i_k μ^ℓ_j − δ^ℓ_j μ^i_k`, `{μ^i_k, μ_j} = δ^i_k μ_j`
///
/// In the `{p_i, μ}` line the free indices of the right-hand side (lower `k`,
/// upper `ℓ`) name the coordinate `μ^ℓ_k`.
pub fn affine_refinement_structure(conn: &AffineConnection) -> PoissonStructure {
    let n = conn.base_dim();
    let m = 2 * n + n * n + n;
    let gl = move |up: usize, lo: usize| 2 * n + up * n + lo;
    let tr = move |l: usize| 2 * n + n * n + l;
    let c = conn.clone();
    PoissonStructure::new("affine_refinement", affine_refinement_labels(n), move |z| {
        let x = &z[..n];
        let a_gl = c.gl_coefficients(x)?; // (h, k, r) = A^h_{kr}
        let a_tr = c.translation_coefficients(x)?; // (h, k) = A^h_k
        let (b_gl, b_tr) = c.split_curvature(x)?; // (k·n + ℓ, i, j) = B^ℓ_{kij}, (ℓ, i, j) = B^ℓ_{ij}
        let mut l = DMatrix::zeros(m, m);
        for i in 0..n {
            put(&mut l, i, n + i, 1.0);
            for j in i + 1..n {
                let mut v = 0.0;
                for k in 0..n {
                    for ll in 0..n {
                        v -= b_gl[(k * n + ll, i, j)] * z[gl(k, ll)];
                    }
                }
                for ll in 0..n {
                    v -= b_tr[(ll, i, j)] * z[tr(ll)];
                }
                put(&mut l, n + i, n + j, v);
            }
            for k in 0..n {
                for ll in 0..n {
                    let mut v = 0.0;
                    for p in 0..n {
                        v += a_gl[(p, k, i)] * z[gl(ll, p)];
                    }
                    for q in 0..n {
                        v -= a_gl[(ll, q, i)] * z[gl(q, k)];
                    }
                    v -= a_tr[(ll, i)] * z[tr(k)];
                    put(&mut l, n + i, gl(ll, k), v);
                }
                let v = (0..n).map(|p| a_gl[(p, k, i)] * z[tr(p)]).sum();
                put(&mut l, n + i, tr(k), v);
            }
        }
        gl_block(&mut l, z, n, 2 * n);
        for i_up in 0..n {
            for k in 0..n {
                for j in 0..n {
                    let v = if i_up == k { z[tr(j)] } else { 0.0 };
                    put(&mut l, gl(i_up, k), tr(j), v);
                }
            }
        }
        Ok(l)
    })
}

/// Which coordinate the momenta `λ_j` pair with canonically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaPairing {
    /// `{x^i, λ_j} = δ^i_j` and `{q^i, λ_j} = 0`, as printed.
    #[default]
    AsPrinted,
    /// `{q^i, λ_j} = δ^i_j` and `{x^i, λ_j} = 0`.
    Corrected,
}

/// Coordinate labels of `(x^i, q^i, p_i, λ_i, μ^ℓ_k)`; `μ^ℓ_k` sits at `4n + ℓ·n + k`.
pub fn gl_refinement_labels(n: usize) -> Vec<String> {
    let mut labels: Vec<String> = numbered("x", n)
        .into_iter()
        .chain(numbered("q", n))
        .chain(numbered("p", n))
        .chain(numbered("lambda", n))
        .collect();
    for up in 1..=n {
        for lo in 1..=n {
            labels.push(format!("mu^{up}_{lo}"));
        }
    }
    labels
}

/// Structure on `T*(P/K) ⊕ k̃*` for `K = GL(n)`, entries as printed:
///
/// - `{x^i, p_j} = δ^i_j`, `{x^i, λ_j} = δ^i_j` (or `{q^i, λ_j}` when corrected)
/// - `{p_i, p_j} = −½ B^ℓ_{kij} μ^k_ℓ` (x–x curvature block)
/// - `{p_i, λ_j} = −½ B^ℓ_{kij} μ^k_ℓ` (x–q block), `{λ_i, λ_j} = −½ B^ℓ_{kij} μ^k_ℓ` (q–q block)
/// - `{p_i, μ^ℓ_k} = (A^p_{ki} δ^ℓ_q − A^ℓ_{qi} δ^p_k) μ^q_p`
/// - `{λ_i, μ^ℓ_k} = (B^p_{ki} δ^ℓ_q − B^ℓ_{qi} δ^p_k) μ^q_p`
/// - `{μ^i_j, μ^ℓ_k} = δ^i_k μ^ℓ_j − δ^ℓ_j μ^i_k`
pub fn gl_refinement_structure(conn: &GlRefinementConnection, pairing: LambdaPairing) -> PoissonStructure {
    let n = conn.n();
    let m = 4 * n + n * n;
    let (xo, qo, po, lo) = (0, n, 2 * n, 3 * n);
    let mu = move |up: usize, low: usize| 4 * n + up * n + low;
    let c = conn.clone();
    PoissonStructure::new("gl_refinement", gl_refinement_labels(n), move |z| {
        let base = &z[..2 * n];
        let ax = c.x_coefficients(base)?;
        let aq = c.q_coefficients(base)?;
        let curv = c.curvature_blocks(base)?;
        let mut l = DMatrix::zeros(m, m);
        for i in 0..n {
            put(&mut l, xo + i, po + i, 1.0);
            match pairing {
                LambdaPairing::AsPrinted => put(&mut l, xo + i, lo + i, 1.0),
                LambdaPairing::Corrected => put(&mut l, qo + i, lo + i, 1.0),
            }
        }
        let contract = |t: &Tensor3, i: usize, j: usize| -> f64 {
            let mut v = 0.0;
            for k in 0..n {
                for ll in 0..n {
                    v += t[(k * n + ll, i, j)] * z[mu(k, ll)];
                }
            }
            -0.5 * v
        };
        for i in 0..n {
            for j in 0..n {
                if j > i {
                    put(&mut l, po + i, po + j, contract(&curv.xx, i, j));
                    put(&mut l, lo + i, lo + j, contract(&curv.qq, i, j));
                }
                put(&mut l, po + i, lo + j, contract(&curv.xq, i, j));
            }
            for k in 0..n {
                for ll in 0..n {
                    let mut vp = 0.0;
                    let mut vl = 0.0;
                    for p in 0..n {
                        vp += ax[(p, k, i)] * z[mu(ll, p)];
                        vl += aq[(p, k, i)] * z[mu(ll, p)];
                    }
                    for q in 0..n {
                        vp -= ax[(ll, q, i)] * z[mu(q, k)];
                        vl -= aq[(ll, q, i)] * z[mu(q, k)];
                    }
                    put(&mut l, po + i, mu(ll, k), vp);
                    put(&mut l, lo + i, mu(ll, k), vl);
                }
            }
        }
        gl_block(&mut l, z, n, 4 * n);
        Ok(l)
    })
}

/// `{μ^i_j, μ^ℓ_k} = δ^i_k μ^ℓ_j − δ^ℓ_j μ^i_k` on the block starting at `offset`.
fn gl_block(l: &mut DMatrix<f64>, z: &[f64], n: usize, offset: usize) {
    let mu = |up: usize, low: usize| offset + up * n + low;
    for i in 0..n {
        for j in 0..n {
            for ll in 0..n {
                for k in 0..n {
                    let (a, b) = (mu(i, j), mu(ll, k));
                    if b <= a {
                        continue;
                    }
                    let mut v = 0.0;
                    if i == k {
                        v += z[mu(ll, j)];
                    }
                    if ll == j {
                        v -= z[mu(i, k)];
                    }
                    put(l, a, b, v);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebroid::tests::{levi_civita, so3_constants};
    use crate::connection::LieAlgebraSpec;
    use crate::polynomial::Polynomial;
    use crate::rng::NoiseStream;

    pub(crate) fn so3_lie_poisson() -> PoissonStructure {
        linear_lie_poisson(&Tensor3::from_fn(3, 3, 3, levi_civita)).unwrap()
    }

    fn random_points(seed: u64, count: usize, dim: usize, radius: f64) -> Vec<Vec<f64>> {
        let mut s = NoiseStream::new(seed);
        (0..count)
            .map(|_| (0..dim).map(|_| radius * (2.0 * s.uniform() - 1.0)).collect())
            .collect()
    }

    fn x(i: usize) -> ScalarField {
        ScalarField::coordinate(3, i)
    }

    #[test]
    fn bracket_examples() {
        let p = so3_lie_poisson();
        let z = [1.0, 2.0, 3.0];
        assert_eq!(bracket(&p, &x(0), &x(1), &z).unwrap(), 3.0);
        let h = ScalarField::new(3, |z| z[0].sin() * z[1] + z[2] * z[2]);
        assert!(bracket(&p, &h, &h, &z).unwrap().abs() < 1e-10);
    }

    #[test]
    fn canonical_pairing_from_whitney_sum() {
        let a = LieAlgebroid::tangent(2);
        let p = whitney_sum_structure(&a, WhitneyBlocks::default()).unwrap();
        let m = p.dim();
        for z in random_points(11, 5, m, 3.0) {
            for i in 0..2 {
                let xi = ScalarField::coordinate(m, i);
                let pi = ScalarField::coordinate(m, 2 + i);
                assert_eq!(bracket(&p, &xi, &pi, &z).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn nested_bracket_field() {
        let p = so3_lie_poisson();
        let inner = bracket_field(&p, &x(1), &x(0)).unwrap();
        assert!((inner.eval(&[1.0, 2.0, 3.0]).unwrap() + 3.0).abs() < 1e-12);
        let outer = bracket(&p, &inner, &x(0), &[1.0, 2.0, 3.0]).unwrap();
        assert!((outer + 2.0).abs() < 1e-8);
        let ff = bracket_field(&p, &x(2), &x(2)).unwrap();
        assert_eq!(ff.eval(&[0.3, -1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn bracket_field_is_bilinear() {
        let p = so3_lie_poisson();
        let f = ScalarField::new(3, |z| z[0] * z[1]);
        let g = ScalarField::new(3, |z| z[2].exp());
        let h = ScalarField::new(3, |z| z[0] - z[1] * z[2]);
        let lhs = bracket_field(&p, &f.add(&g).unwrap(), &h).unwrap();
        let a = bracket_field(&p, &f, &h).unwrap();
        let b = bracket_field(&p, &g, &h).unwrap();
        for z in random_points(12, 20, 3, 1.5) {
            let d = lhs.eval(&z).unwrap() - a.eval(&z).unwrap() - b.eval(&z).unwrap();
            assert!(d.abs() < 1e-9);
        }
    }

    #[test]
    fn hamiltonian_field_examples() {
        let c = PoissonStructure::canonical(1);
        let h = ScalarField::new(2, |z| 0.5 * z[1] * z[1]);
        let v = hamiltonian_field(&c, &h, &[0.7, -1.3]).unwrap();
        assert!((v[0] + 1.3).abs() < 1e-9 && v[1].abs() < 1e-12);

        let p = so3_lie_poisson();
        let v = hamiltonian_field(&p, &ScalarField::constant(3, 4.0), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(v, DVector::zeros(3));
        let v = hamiltonian_field(&p, &x(0), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(v.as_slice(), &[0.0, -3.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = so3_lie_poisson();
        let f = ScalarField::coordinate(2, 0);
        assert!(matches!(bracket(&p, &f, &f, &[1.0, 2.0, 3.0]), Err(Error::DimensionMismatch { .. })));
        assert!(p.matrix(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn jacobi_on_lie_poisson_and_constant_structures() {
        let samples = random_points(13, 100, 3, 3.0);
        let p = so3_lie_poisson();
        assert!(check_jacobi(&p, &samples).unwrap().max() < 1e-9);
        assert!(check_jacobi_with(&p, &samples, DerivativeMode::FiniteDifference).unwrap().max() < 1e-9);
        let c = PoissonStructure::canonical(2);
        assert_eq!(check_jacobi(&c, &random_points(14, 10, 4, 1.0)).unwrap().max(), 0.0);
    }

    #[test]
    fn corrupted_lie_poisson_fails_jacobi() {
        let mut t = Tensor3::from_fn(3, 3, 3, levi_civita);
        t[(0, 1, 0)] = 1.0;
        t[(1, 0, 0)] = -1.0;
        let p = linear_lie_poisson(&t).unwrap();
        assert!(check_jacobi(&p, &random_points(15, 20, 3, 2.0)).unwrap().max() > 0.5);
    }

    #[test]
    fn linear_lie_poisson_matrix_and_validation() {
        let p = so3_lie_poisson();
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, 3.0, -2.0, -3.0, 0.0, 1.0, 2.0, -1.0, 0.0]);
        assert_eq!(p.matrix(&[1.0, 2.0, 3.0]).unwrap(), expected);
        let trivial = linear_lie_poisson(&Tensor3::zeros(2, 2, 2)).unwrap();
        assert_eq!(trivial.matrix(&[4.0, 5.0]).unwrap(), DMatrix::zeros(2, 2));
        let mut bad = Tensor3::zeros(2, 2, 2);
        bad[(0, 1, 0)] = 1.0;
        assert!(matches!(linear_lie_poisson(&bad), Err(Error::NotAntisymmetric { .. })));
    }

    #[test]
    fn from_algebroid_examples() {
        let t = from_algebroid(&LieAlgebroid::tangent(1));
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        for z in random_points(16, 5, 2, 5.0) {
            assert_eq!(t.matrix(&z).unwrap(), expected);
        }
        let over_point = from_algebroid(&LieAlgebroid::over_point(&so3_constants()).unwrap());
        let lp = so3_lie_poisson();
        for z in random_points(17, 20, 3, 2.0) {
            assert!((over_point.matrix(&z).unwrap() - lp.matrix(&z).unwrap()).abs().max() < 1e-12);
        }
        assert!(over_point.linear_constants().is_some());
    }

    #[test]
    fn whitney_defaults_and_injected_anchor() {
        let a = LieAlgebroid::tangent(1);
        let p = whitney_sum_structure(&a, WhitneyBlocks::default()).unwrap();
        let l = p.matrix(&[0.1, 0.2, 0.3]).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(l, expected);

        let coupled = whitney_sum_structure(&a, WhitneyBlocks::anchor_coupled(&a)).unwrap();
        let samples = random_points(18, 20, 3, 2.0);
        assert!(check_jacobi(&coupled, &samples).unwrap().max() < 1e-8);
        assert_eq!(coupled.matrix(&[0.0, 0.0, 0.0]).unwrap()[(0, 2)], 1.0);
        assert_eq!(antisymmetry_residual(&coupled, &samples).unwrap().max(), 0.0);
    }

    #[test]
    fn whitney_rejects_symmetric_pp_block() {
        let a = LieAlgebroid::tangent(2);
        let blocks = WhitneyBlocks {
            pp: Some(Arc::new(|_: &[f64]| Ok(DMatrix::from_element(2, 2, 1.0)))),
            ..WhitneyBlocks::default()
        };
        assert!(matches!(whitney_sum_structure(&a, blocks), Err(Error::NotAntisymmetric { .. })));
    }

    fn abelian_twisted(n: usize) -> PrincipalConnection {
        // p = 1 abelian, A_1 = 0, A_2 = x¹
        let fields = vec![Polynomial::zero(), Polynomial::variable(n, 0)];
        PrincipalConnection::from_polynomials(LieAlgebraSpec::abelian(1), n, &fields).unwrap()
    }

    #[test]
    fn adjoint_bundle_curvature_entry() {
        let p = adjoint_bundle_structure(&abelian_twisted(2));
        // (x1, x2, p1, p2, mu)
        let l = p.matrix(&[0.4, -0.2, 1.0, 2.0, 1.0]).unwrap();
        assert_eq!(l[(2, 3)], -1.0);
        assert_eq!(l[(0, 2)], 1.0);
        assert_eq!(l[(2, 4)], 0.0);
    }

    #[test]
    fn adjoint_bundle_zero_connection_is_canonical_plus_lie_poisson() {
        let so3 = LieAlgebraSpec::so3();
        let conn = PrincipalConnection::from_polynomials(so3.clone(), 2, &vec![Polynomial::zero(); 6]).unwrap();
        let p = adjoint_bundle_structure(&conn);
        let lp = linear_lie_poisson(&so3.lie_poisson_tensor()).unwrap();
        for z in random_points(19, 10, 7, 2.0) {
            let l = p.matrix(&z).unwrap();
            assert_eq!(l.view((0, 0), (4, 4)).into_owned(), canonical_block(2));
            assert_eq!(l.view((0, 4), (4, 3)).into_owned(), DMatrix::zeros(4, 3));
            assert!((l.view((4, 4), (3, 3)).into_owned() - lp.matrix(&z[4..]).unwrap()).abs().max() < 1e-12);
        }
    }

    #[test]
    fn adjoint_bundle_satisfies_jacobi_for_polynomial_connections() {
        let samples = random_points(20, 100, 5, 2.0);
        let abelian = adjoint_bundle_structure(&abelian_twisted(2));
        assert!(abelian.has_analytic_derivative());
        assert!(check_jacobi(&abelian, &samples).unwrap().max() < 1e-7);

        let n = 2;
        let fields = vec![
            Polynomial::variable(n, 1),
            Polynomial::constant(n, 0.5),
            Polynomial::zero().with_term(vec![1, 1], 1.0),
            Polynomial::variable(n, 0).scale(-1.0),
            Polynomial::zero().with_term(vec![2, 0], 0.3),
            Polynomial::constant(n, 1.0),
        ];
        let conn = PrincipalConnection::from_polynomials(LieAlgebraSpec::so3(), n, &fields).unwrap();
        let p = adjoint_bundle_structure(&conn);
        let samples = random_points(21, 100, 7, 2.0);
        let analytic = check_jacobi(&p, &samples).unwrap().max();
        let fd = check_jacobi_with(&p, &samples, DerivativeMode::FiniteDifference).unwrap().max();
        assert!(analytic < 1e-7, "{analytic}");
        assert!(fd < 1e-5, "{fd}");

        let printed = adjoint_bundle_structure_with(&conn, AdjointSign::AsPrinted);
        assert!(check_jacobi(&printed, &samples).unwrap().max() > 1.0);
    }

    #[test]
    fn affine_refinement_pinned_entries() {
        let n = 1;
        let zero = AffineConnection::from_polynomials(n, &[Polynomial::zero()], &[Polynomial::zero()]).unwrap();
        let p = affine_refinement_structure(&zero);
        let l = p.matrix(&[0.5, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(l[(2, 2)], 0.0);
        assert_eq!(l[(1, 2)], 0.0);
        assert_eq!(l[(1, 3)], 0.0);
        // {μ^1_1, μ_1} = μ_1
        assert_eq!(l[(2, 3)], 3.0);

        let n = 2;
        let zero2 = AffineConnection::from_polynomials(n, &vec![Polynomial::zero(); 8], &vec![Polynomial::zero(); 4]).unwrap();
        let p = affine_refinement_structure(&zero2);
        let mut z = vec![0.3, -0.1, 1.0, 2.0];
        z.extend([1.0, 0.0, 0.0, 1.0]); // μ^·_· = identity
        z.extend([0.4, -0.7]);
        let l = p.matrix(&z).unwrap();
        for a in 4..8 {
            for b in 4..8 {
                assert_eq!(l[(a, b)], 0.0);
            }
        }
        for i in 2..4 {
            for j in 2..10 {
                assert_eq!(l[(i, j)], 0.0, "p-row {i}, col {j}");
            }
        }
        // {μ^1_2, μ^2_1} = μ^2_2 − μ^1_1 at a generic point
        let mut w = z.clone();
        w[4..8].copy_from_slice(&[5.0, 6.0, 7.0, 8.0]);
        let l = p.matrix(&w).unwrap();
        assert_eq!(l[(5, 6)], 8.0 - 5.0);
    }

    #[test]
    fn affine_refinement_translation_entry() {
        // n = 1, A^1_{11} = c, A^1_1 = t: {p_1, μ_1} = c μ_1, {p_1, μ^1_1} = c μ^1_1 − c μ^1_1 − t μ_1
        let (c, t) = (0.7, -1.1);
        let conn = AffineConnection::from_polynomials(1, &[Polynomial::constant(1, c)], &[Polynomial::constant(1, t)]).unwrap();
        let l = affine_refinement_structure(&conn).matrix(&[0.2, 0.0, 2.0, 3.0]).unwrap();
        assert!((l[(1, 3)] - c * 3.0).abs() < 1e-15);
        assert!((l[(1, 2)] + t * 3.0).abs() < 1e-15);
    }

    fn zero_gl(n: usize) -> GlRefinementConnection {
        GlRefinementConnection::from_polynomials(n, &vec![Polynomial::zero(); n * n * n], &vec![Polynomial::zero(); n * n * n])
            .unwrap()
    }

    #[test]
    fn gl_refinement_zero_connection() {
        let n = 2;
        let p = gl_refinement_structure(&zero_gl(n), LambdaPairing::AsPrinted);
        let z: Vec<f64> = (0..p.dim()).map(|i| 0.1 * i as f64 + 0.3).collect();
        let l = p.matrix(&z).unwrap();
        for i in 0..n {
            assert_eq!(l[(i, 2 * n + i)], 1.0);
            assert_eq!(l[(i, 3 * n + i)], 1.0);
            assert_eq!(l[(n + i, 3 * n + i)], 0.0);
        }
        assert_eq!(l.view((2 * n, 2 * n), (2 * n, 2 * n)).into_owned(), DMatrix::zeros(2 * n, 2 * n));
        let corrected = gl_refinement_structure(&zero_gl(n), LambdaPairing::Corrected).matrix(&z).unwrap();
        assert_eq!(corrected[(n, 3 * n)], 1.0);
        assert_eq!(corrected[(0, 3 * n)], 0.0);
    }

    #[test]
    fn gl_blocks_of_both_refinements_agree() {
        let n = 2;
        let gl = gl_refinement_structure(&zero_gl(n), LambdaPairing::AsPrinted);
        let aff = affine_refinement_structure(
            &AffineConnection::from_polynomials(n, &vec![Polynomial::zero(); 8], &vec![Polynomial::zero(); 4]).unwrap(),
        );
        for w in random_points(22, 10, n * n, 2.0) {
            let mut zg = vec![0.0; 4 * n];
            zg.extend(&w);
            let mut za = vec![0.0; 2 * n];
            za.extend(&w);
            za.extend(vec![0.0; n]);
            let lg = gl.matrix(&zg).unwrap();
            let la = aff.matrix(&za).unwrap();
            assert_eq!(
                lg.view((4 * n, 4 * n), (n * n, n * n)).into_owned(),
                la.view((2 * n, 2 * n), (n * n, n * n)).into_owned()
            );
        }
    }

    #[test]
    fn gl_block_matches_gl_lie_poisson() {
        let n = 3;
        let lp = linear_lie_poisson(&LieAlgebraSpec::gl(n).lie_poisson_tensor()).unwrap();
        for w in random_points(23, 5, n * n, 2.0) {
            let mut l = DMatrix::zeros(n * n, n * n);
            gl_block(&mut l, &w, n, 0);
            assert!((l - lp.matrix(&w).unwrap()).abs().max() < 1e-12);
        }
    }

    #[test]
    fn every_constructor_is_antisymmetric() {
        let aff = AffineConnection::from_polynomials(
            2,
            &(0..8).map(|k| Polynomial::variable(2, k % 2).scale(0.1 * k as f64)).collect::<Vec<_>>(),
            &(0..4).map(|k| Polynomial::constant(2, k as f64 - 1.5)).collect::<Vec<_>>(),
        )
        .unwrap();
        let glc = GlRefinementConnection::from_polynomials(
            2,
            &(0..8).map(|k| Polynomial::variable(4, k % 4).scale(0.2)).collect::<Vec<_>>(),
            &(0..8).map(|k| Polynomial::variable(4, (k + 1) % 4).scale(-0.3)).collect::<Vec<_>>(),
        )
        .unwrap();
        let structures = vec![
            so3_lie_poisson(),
            from_algebroid(&LieAlgebroid::tangent(2)),
            adjoint_bundle_structure(&abelian_twisted(2)),
            affine_refinement_structure(&aff),
            gl_refinement_structure(&glc, LambdaPairing::AsPrinted),
        ];
        for p in structures {
            let samples = random_points(24, 100, p.dim(), 2.0);
            assert!(antisymmetry_residual(&p, &samples).unwrap().max() <= 1e-12, "{}", p.name());
        }
    }

    #[test]
    fn leibniz_rule() {
        let p = so3_lie_poisson();
        let f = ScalarField::new(3, |z| z[0] * z[0] + z[2]);
        let g = ScalarField::new(3, |z| (z[1] * z[2]).sin());
        let h = ScalarField::new(3, |z| z[0] * z[1] * z[2]);
        let fg = f.mul(&g).unwrap();
        for z in random_points(25, 30, 3, 1.5) {
            let lhs = bracket(&p, &fg, &h, &z).unwrap();
            let rhs = f.eval(&z).unwrap() * bracket(&p, &g, &h, &z).unwrap()
                + g.eval(&z).unwrap() * bracket(&p, &f, &h, &z).unwrap();
            assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn norm_squared_is_a_casimir_of_so3() {
        let p = so3_lie_poisson();
        let c = ScalarField::new(3, |z| z.iter().map(|v| v * v).sum());
        let h = ScalarField::new(3, |z| z[0].exp() * z[1] - z[2].powi(3));
        for z in random_points(26, 30, 3, 2.0) {
            assert!(bracket(&p, &c, &h, &z).unwrap().abs() < 1e-8);
        }
    }
}
