//! Lie algebras by structure constants, principal connections, curvature and
//! the bracket on sections of `TM ⊕ g̃`.
//!
//! Constants: `C^a_{bc}` at `(a, b, c)` with `[ε_b, ε_c] = C^a_{bc} ε_a`.
//! Connection coefficients: `A_i^a` at `(a, i)`. Curvature: `B^a_{ij}` at `(a, i, j)`.
//!
//! `gl(n)` uses the basis `e^i_j` flattened to `i·n + j` with
//! `[e^i_j, e^ℓ_k] = δ^i_k e^ℓ_j − δ^ℓ_j e^i_k`; `ga(n)` appends the translations
//! `e_j` at `n² + j` with `[e^i_j, e_k] = δ^i_k e_j` and `[e_i, e_j] = 0`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{check_point, fd_gradient, fd_jacobian, ScalarField, Tensor3};
use crate::polynomial::Polynomial;

const CONSTANT_TOL: f64 = 1e-12;

/// `ε_{ijk}` on zero-based indices.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebraSpec {
    label: String,
    constants: Tensor3,
}

impl LieAlgebraSpec {
    /// Validates antisymmetry and the Jacobi identity to `1e-12`.
    pub fn new(label: impl Into<String>, constants: Tensor3) -> Result<Self> {
        let [p, p1, p2] = constants.shape();
        if p != p1 || p != p2 {
            return Err(Error::InvalidStructureConstants(format!(
                "structure constants must be p×p×p, got {p}×{p1}×{p2}"
            )));
        }
        let asym = constants.antisymmetry_residual();
        if asym > CONSTANT_TOL {
            return Err(Error::NotAntisymmetric {
                context: "Lie algebra structure constants".into(),
                residual: asym,
            });
        }
        let jac = jacobi_residual(&constants);
        if jac > CONSTANT_TOL {
            return Err(Error::InvalidStructureConstants(format!(
                "Jacobi identity fails with residual {jac:e}"
            )));
        }
        Ok(LieAlgebraSpec {
            label: label.into(),
            constants,
        })
    }

    pub fn so3() -> Self {
        LieAlgebraSpec::new("so3", Tensor3::from_fn(3, 3, 3, |a, b, c| levi_civita(b, c, a))).expect("so(3)")
    }

    pub fn abelian(p: usize) -> Self {
        LieAlgebraSpec::new(format!("abelian({p})"), Tensor3::zeros(p, p, p)).expect("abelian")
    }

    pub fn gl(n: usize) -> Self {
        LieAlgebraSpec::new(format!("gl({n})"), affine_constants(n, false)).expect("gl(n)")
    }

    pub fn ga(n: usize) -> Self {
        LieAlgebraSpec::new(format!("ga({n})"), affine_constants(n, true)).expect("ga(n)")
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.constants.shape()[0]
    }

    pub fn constants(&self) -> &Tensor3 {
        &self.constants
    }

    /// `[ξ, η]^a = C^a_{bc} ξ^b η^c`.
    pub fn bracket(&self, xi: &[f64], eta: &[f64]) -> DVector<f64> {
        let p = self.dim();
        DVector::from_fn(p, |a, _| {
            let mut v = 0.0;
            for b in 0..p {
                for c in 0..p {
                    v += self.constants[(a, b, c)] * xi[b] * eta[c];
                }
            }
            v
        })
    }

    /// Constants `Λ^{ab}_c = C^c_{ab}` of the Lie–Poisson structure on the dual.
    pub fn lie_poisson_tensor(&self) -> Tensor3 {
        let p = self.dim();
        Tensor3::from_fn(p, p, p, |a, b, c| self.constants[(c, a, b)])
    }
}

fn jacobi_residual(c: &Tensor3) -> f64 {
    let p = c.shape()[0];
    let mut worst = 0.0f64;
    for a in 0..p {
        for b in 0..p {
            for cc in 0..p {
                for d in 0..p {
                    let mut v = 0.0;
                    for e in 0..p {
                        v += c[(d, a, e)] * c[(e, b, cc)] + c[(d, b, e)] * c[(e, cc, a)] + c[(d, cc, e)] * c[(e, a, b)];
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
    }
    worst
}

fn affine_constants(n: usize, translations: bool) -> Tensor3 {
    let p = if translations { n * n + n } else { n * n };
    let e = |i: usize, j: usize| i * n + j;
    let mut c = Tensor3::zeros(p, p, p);
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                for k in 0..n {
                    if i == k {
                        c[(e(l, j), e(i, j), e(l, k))] += 1.0;
                    }
                    if l == j {
                        c[(e(i, k), e(i, j), e(l, k))] -= 1.0;
                    }
                }
            }
            if translations {
                // [e^i_j, e_i] = e_j
                c[(n * n + j, e(i, j), n * n + i)] += 1.0;
                c[(n * n + j, n * n + i, e(i, j))] -= 1.0;
            }
        }
    }
    c
}

/// Principal connection over an `n`-dimensional chart, `A_i^a(x)` stored at `a·n + i`.
#[derive(Debug, Clone)]
pub struct PrincipalConnection {
    algebra: LieAlgebraSpec,
    n: usize,
    fields: Vec<ScalarField>,
}

impl PrincipalConnection {
    pub fn new(algebra: LieAlgebraSpec, n: usize, fields: Vec<ScalarField>) -> Result<Self> {
        let p = algebra.dim();
        if fields.len() != p * n {
            return Err(Error::dim("connection coefficients A_i^a", p * n, fields.len()));
        }
        if let Some(bad) = fields.iter().find(|f| f.dim() != n) {
            return Err(Error::dim("connection coefficient field", n, bad.dim()));
        }
        Ok(PrincipalConnection { algebra, n, fields })
    }

    /// Polynomial coefficients, `fields[a·n + i] = A_i^a`.
    pub fn from_polynomials(algebra: LieAlgebraSpec, n: usize, fields: &[Polynomial]) -> Result<Self> {
        let fields = fields.iter().map(|f| f.to_field(n)).collect::<Result<Vec<_>>>()?;
        PrincipalConnection::new(algebra, n, fields)
    }

    pub fn algebra(&self) -> &LieAlgebraSpec {
        &self.algebra
    }

    pub fn base_dim(&self) -> usize {
        self.n
    }

    pub fn fields(&self) -> &[ScalarField] {
        &self.fields
    }

    pub fn has_analytic_second_derivatives(&self) -> bool {
        self.fields.iter().all(|f| f.has_hessian())
    }

    /// `A_i^a` at `(a, i)`.
    pub fn coefficients_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_point("connection", x, self.n)?;
        let (p, n) = (self.algebra.dim(), self.n);
        let mut a = DMatrix::zeros(p, n);
        for aa in 0..p {
            for i in 0..n {
                a[(aa, i)] = self.fields[aa * n + i].eval(x)?;
            }
        }
        Ok(a)
    }

    /// `∂_k A_i^a` as one `p×n` matrix per `k`.
    pub fn coefficient_derivatives(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        check_point("connection", x, self.n)?;
        let (p, n) = (self.algebra.dim(), self.n);
        let mut out = vec![DMatrix::zeros(p, n); n];
        for aa in 0..p {
            for i in 0..n {
                let g = fd_gradient(&self.fields[aa * n + i], x, None)?;
                for (k, m) in out.iter_mut().enumerate() {
                    m[(aa, i)] = g[k];
                }
            }
        }
        Ok(out)
    }

    /// `B^a_{ij} = ∂_i A_j^a − ∂_j A_i^a + C^a_{bc} A_i^b A_j^c`.
    pub fn curvature(&self, x: &[f64]) -> Result<Tensor3> {
        self.curvature_with(x, 1.0)
    }

    /// Curvature with the quadratic term scaled by `coupling`.
    pub(crate) fn curvature_with(&self, x: &[f64], coupling: f64) -> Result<Tensor3> {
        let a = self.coefficients_at(x)?;
        let da = self.coefficient_derivatives(x)?;
        let c = self.algebra.constants();
        let (p, n) = (self.algebra.dim(), self.n);
        let mut b = Tensor3::zeros(p, n, n);
        for aa in 0..p {
            for i in 0..n {
                for j in i + 1..n {
                    let mut v = da[i][(aa, j)] - da[j][(aa, i)];
                    for bb in 0..p {
                        for cc in 0..p {
                            v += c[(aa, bb, cc)] * (a[(bb, i)] * a[(cc, j)] - a[(bb, j)] * a[(cc, i)]) * 0.5 * coupling;
                        }
                    }
                    b[(aa, i, j)] = v;
                    b[(aa, j, i)] = -v;
                }
            }
        }
        Ok(b)
    }

    /// `∂_k B^a_{ij}` for each `k`, from the Hessians of the coefficients.
    pub fn curvature_derivative(&self, x: &[f64]) -> Result<Vec<Tensor3>> {
        self.curvature_derivative_with(x, 1.0)
    }

    pub(crate) fn curvature_derivative_with(&self, x: &[f64], coupling: f64) -> Result<Vec<Tensor3>> {
        let a = self.coefficients_at(x)?;
        let da = self.coefficient_derivatives(x)?;
        let c = self.algebra.constants();
        let (p, n) = (self.algebra.dim(), self.n);
        let hess: Vec<DMatrix<f64>> = self.fields.iter().map(|f| f.hessian(x)).collect::<Result<_>>()?;
        let mut out = vec![Tensor3::zeros(p, n, n); n];
        for (k, dk) in out.iter_mut().enumerate() {
            for aa in 0..p {
                for i in 0..n {
                    for j in i + 1..n {
                        let mut v = hess[aa * n + j][(k, i)] - hess[aa * n + i][(k, j)];
                        for bb in 0..p {
                            for cc in 0..p {
                                let cabc = coupling * c[(aa, bb, cc)];
                                if cabc != 0.0 {
                                    v += cabc * (da[k][(bb, i)] * a[(cc, j)] + a[(bb, i)] * da[k][(cc, j)]);
                                }
                            }
                        }
                        dk[(aa, i, j)] = v;
                        dk[(aa, j, i)] = -v;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `(∇_X ξ)^a = X^i (∂_i ξ^a + C^a_{bc} A_i^b ξ^c)`.
    pub fn covariant_derivative(&self, v: &[ScalarField], xi: &[ScalarField], x: &[f64]) -> Result<DVector<f64>> {
        let (p, n) = (self.algebra.dim(), self.n);
        if v.len() != n {
            return Err(Error::dim("vector field components", n, v.len()));
        }
        if xi.len() != p {
            return Err(Error::dim("adjoint section components", p, xi.len()));
        }
        let xv: Vec<f64> = v.iter().map(|f| f.eval(x)).collect::<Result<_>>()?;
        let xiv: Vec<f64> = xi.iter().map(|f| f.eval(x)).collect::<Result<_>>()?;
        let dxi = fd_jacobian(xi, x)?;
        let a = self.coefficients_at(x)?;
        let c = self.algebra.constants();
        Ok(DVector::from_fn(p, |aa, _| {
            let mut total = 0.0;
            for i in 0..n {
                let mut t = dxi[(aa, i)];
                for bb in 0..p {
                    for cc in 0..p {
                        t += c[(aa, bb, cc)] * a[(bb, i)] * xiv[cc];
                    }
                }
                total += xv[i] * t;
            }
            total
        }))
    }

    /// `[X₁ ⊕ ξ₁, X₂ ⊕ ξ₂] = [X₁, X₂] ⊕ (∇_{X₁}ξ₂ − ∇_{X₂}ξ₁ − B(X₁, X₂) + [ξ₁, ξ₂])`.
    pub fn section_bracket(
        &self,
        first: (&[ScalarField], &[ScalarField]),
        second: (&[ScalarField], &[ScalarField]),
        x: &[f64],
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        let ((v1, xi1), (v2, xi2)) = (first, second);
        let n = self.n;
        let x1: Vec<f64> = v1.iter().map(|f| f.eval(x)).collect::<Result<_>>()?;
        let x2: Vec<f64> = v2.iter().map(|f| f.eval(x)).collect::<Result<_>>()?;
        let j1 = fd_jacobian(v1, x)?;
        let j2 = fd_jacobian(v2, x)?;
        let base = DVector::from_fn(n, |i, _| {
            (0..n).map(|j| x1[j] * j2[(i, j)] - x2[j] * j1[(i, j)]).sum::<f64>()
        });
        let b = self.curvature(x)?;
        let e1: Vec<f64> = xi1.iter().map(|f| f.eval(x)).collect::<Result<_>>()?;
        let e2: Vec<f64> = xi2.iter().map(|f| f.eval(x)).collect::<Result<_>>()?;
        let mut alg = self.covariant_derivative(v1, xi2, x)? - self.covariant_derivative(v2, xi1, x)?
            + self.algebra.bracket(&e1, &e2);
        for aa in 0..self.algebra.dim() {
            for i in 0..n {
                for j in 0..n {
                    alg[aa] -= b[(aa, i, j)] * x1[i] * x2[j];
                }
            }
        }
        Ok((base, alg))
    }
}

/// Connection on a principal `GA(n)` bundle given by `A^h_{kr}(x)` (linear
/// part, stored at `(h·n + k)·n + r`) and `A^h_k(x)` (translation part, at `h·n + k`).
///
/// As a `ga(n)`-valued form, `A_i` has coefficient `A^u_{vi}` on `e^v_u` and
/// `A^u_i` on `e_u`, which reproduces `∇_i e^ℓ_k = (A^p_{ki} δ^ℓ_q − A^ℓ_{qi} δ^p_k) e^q_p − A^ℓ_i e_k`.
#[derive(Debug, Clone)]
pub struct AffineConnection {
    n: usize,
    linear: Vec<ScalarField>,
    translation: Vec<ScalarField>,
    principal: PrincipalConnection,
}

impl AffineConnection {
    pub fn new(n: usize, linear: Vec<ScalarField>, translation: Vec<ScalarField>) -> Result<Self> {
        if linear.len() != n * n * n {
            return Err(Error::dim("affine connection A^h_{kr}", n * n * n, linear.len()));
        }
        if translation.len() != n * n {
            return Err(Error::dim("affine connection A^h_k", n * n, translation.len()));
        }
        let p = n * n + n;
        let mut fields = vec![ScalarField::zero(n); p * n];
        for v in 0..n {
            for u in 0..n {
                for i in 0..n {
                    fields[(v * n + u) * n + i] = linear[(u * n + v) * n + i].clone();
                }
            }
        }
        for u in 0..n {
            for i in 0..n {
                fields[(n * n + u) * n + i] = translation[u * n + i].clone();
            }
        }
        let principal = PrincipalConnection::new(LieAlgebraSpec::ga(n), n, fields)?;
        Ok(AffineConnection {
            n,
            linear,
            translation,
            principal,
        })
    }

    pub fn from_polynomials(n: usize, linear: &[Polynomial], translation: &[Polynomial]) -> Result<Self> {
        let lin = linear.iter().map(|p| p.to_field(n)).collect::<Result<Vec<_>>>()?;
        let tr = translation.iter().map(|p| p.to_field(n)).collect::<Result<Vec<_>>>()?;
        AffineConnection::new(n, lin, tr)
    }

    pub fn base_dim(&self) -> usize {
        self.n
    }

    pub fn to_principal(&self) -> &PrincipalConnection {
        &self.principal
    }

    /// `A^h_{kr}` at `(h, k, r)`.
    pub fn gl_coefficients(&self, x: &[f64]) -> Result<Tensor3> {
        check_point("affine connection", x, self.n)?;
        let n = self.n;
        let mut t = Tensor3::zeros(n, n, n);
        for h in 0..n {
            for k in 0..n {
                for r in 0..n {
                    t[(h, k, r)] = self.linear[(h * n + k) * n + r].eval(x)?;
                }
            }
        }
        Ok(t)
    }

    /// `A^h_k` at `(h, k)`.
    pub fn translation_coefficients(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_point("affine connection", x, self.n)?;
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        for h in 0..n {
            for k in 0..n {
                m[(h, k)] = self.translation[h * n + k].eval(x)?;
            }
        }
        Ok(m)
    }

    /// `∇_{∂_i} e^ℓ_k` as a `ga(n)` vector, from the printed formula.
    pub fn covariant_derivative_gl(&self, i: usize, l: usize, k: usize, x: &[f64]) -> Result<DVector<f64>> {
        let n = self.n;
        let a = self.gl_coefficients(x)?;
        let t = self.translation_coefficients(x)?;
        let mut out = DVector::zeros(n * n + n);
        for p in 0..n {
            out[l * n + p] += a[(p, k, i)];
        }
        for q in 0..n {
            out[q * n + k] -= a[(l, q, i)];
        }
        out[n * n + k] -= t[(l, i)];
        Ok(out)
    }

    /// `∇_{∂_r} e_k = A^i_{kr} e_i` as a `ga(n)` vector.
    pub fn covariant_derivative_translation(&self, r: usize, k: usize, x: &[f64]) -> Result<DVector<f64>> {
        let n = self.n;
        let a = self.gl_coefficients(x)?;
        let mut out = DVector::zeros(n * n + n);
        for i in 0..n {
            out[n * n + i] = a[(i, k, r)];
        }
        Ok(out)
    }

    /// Curvature split into `(B^ℓ_{kij}` at `(k·n + ℓ, i, j)`, `B^ℓ_{ij}` at `(ℓ, i, j))`:
    /// the components along `e^k_ℓ` and `e_ℓ`.
    pub fn split_curvature(&self, x: &[f64]) -> Result<(Tensor3, Tensor3)> {
        let n = self.n;
        let b = self.principal.curvature(x)?;
        let gl = Tensor3::from_fn(n * n, n, n, |a, i, j| b[(a, i, j)]);
        let tr = Tensor3::from_fn(n, n, n, |l, i, j| b[(n * n + l, i, j)]);
        Ok((gl, tr))
    }
}

/// The three curvature blocks on `(x, q)`, each `B^ℓ_{kij}` at `(k·n + ℓ, i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureBlocks {
    pub xx: Tensor3,
    pub qq: Tensor3,
    pub xq: Tensor3,
}

type CurvatureFn = Arc<dyn Fn(&[f64]) -> Result<CurvatureBlocks> + Send + Sync>;

/// `GL(n)` connection over `P/K` with chart `(x, q)`, given by `A^h_{kr}(x, q)`
/// (the `dx` part) and `B^h_{kr}(x, q)` (the `dq` part), both stored at `(h·n + k)·n + r`.
///
/// The curvature blocks default to the curvature of this `gl(n)` connection on
/// the `2n`-dimensional base, split by form type; callers may supply them instead.
#[derive(Clone)]
pub struct GlRefinementConnection {
    n: usize,
    x_part: Vec<ScalarField>,
    q_part: Vec<ScalarField>,
    principal: PrincipalConnection,
    curvature: Option<CurvatureFn>,
}

impl std::fmt::Debug for GlRefinementConnection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GlRefinementConnection")
            .field("n", &self.n)
            .field("curvature_override", &self.curvature.is_some())
            .finish()
    }
}

impl GlRefinementConnection {
    pub fn new(n: usize, x_part: Vec<ScalarField>, q_part: Vec<ScalarField>) -> Result<Self> {
        for (name, part) in [("A^h_{kr}", &x_part), ("B^h_{kr}", &q_part)] {
            if part.len() != n * n * n {
                return Err(Error::dim(format!("gl refinement connection {name}"), n * n * n, part.len()));
            }
        }
        let m = 2 * n;
        let mut fields = vec![ScalarField::zero(m); n * n * m];
        for v in 0..n {
            for u in 0..n {
                for i in 0..n {
                    fields[(v * n + u) * m + i] = x_part[(u * n + v) * n + i].clone();
                    fields[(v * n + u) * m + n + i] = q_part[(u * n + v) * n + i].clone();
                }
            }
        }
        let principal = PrincipalConnection::new(LieAlgebraSpec::gl(n), m, fields)?;
        Ok(GlRefinementConnection {
            n,
            x_part,
            q_part,
            principal,
            curvature: None,
        })
    }

    /// Polynomials in the `2n` variables `(x, q)`.
    pub fn from_polynomials(n: usize, x_part: &[Polynomial], q_part: &[Polynomial]) -> Result<Self> {
        let m = 2 * n;
        let a = x_part.iter().map(|p| p.to_field(m)).collect::<Result<Vec<_>>>()?;
        let b = q_part.iter().map(|p| p.to_field(m)).collect::<Result<Vec<_>>>()?;
        GlRefinementConnection::new(n, a, b)
    }

    /// Replace the derived curvature with caller-supplied blocks.
    pub fn with_curvature(
        mut self,
        blocks: impl Fn(&[f64]) -> Result<CurvatureBlocks> + Send + Sync + 'static,
    ) -> Self {
        self.curvature = Some(Arc::new(blocks));
        self
    }

    /// Polynomial curvature blocks, each of length `n⁴` with `B^ℓ_{kij}` at `((k·n + ℓ)·n + i)·n + j`.
    pub fn with_curvature_polynomials(self, xx: &[Polynomial], qq: &[Polynomial], xq: &[Polynomial]) -> Result<Self> {
        let n = self.n;
        let len = n * n * n * n;
        let mut tables = Vec::new();
        for (name, block) in [("xx", xx), ("qq", qq), ("xq", xq)] {
            if block.len() != len {
                return Err(Error::dim(format!("{name} curvature block"), len, block.len()));
            }
            tables.push(block.iter().map(|p| p.to_field(2 * n)).collect::<Result<Vec<_>>>()?);
        }
        let eval = move |t: &[ScalarField], z: &[f64]| -> Result<Tensor3> {
            let mut out = Tensor3::zeros(n * n, n, n);
            for a in 0..n * n {
                for i in 0..n {
                    for j in 0..n {
                        out[(a, i, j)] = t[(a * n + i) * n + j].eval(z)?;
                    }
                }
            }
            Ok(out)
        };
        Ok(self.with_curvature(move |z| {
            Ok(CurvatureBlocks {
                xx: eval(&tables[0], z)?,
                qq: eval(&tables[1], z)?,
                xq: eval(&tables[2], z)?,
            })
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn to_principal(&self) -> &PrincipalConnection {
        &self.principal
    }

    fn part(&self, part: &[ScalarField], base: &[f64]) -> Result<Tensor3> {
        check_point("gl refinement connection", base, 2 * self.n)?;
        let n = self.n;
        let mut t = Tensor3::zeros(n, n, n);
        for h in 0..n {
            for k in 0..n {
                for r in 0..n {
                    t[(h, k, r)] = part[(h * n + k) * n + r].eval(base)?;
                }
            }
        }
        Ok(t)
    }

    /// `A^h_{kr}` at `(h, k, r)`.
    pub fn x_coefficients(&self, base: &[f64]) -> Result<Tensor3> {
        self.part(&self.x_part, base)
    }

    /// `B^h_{kr}` at `(h, k, r)`.
    pub fn q_coefficients(&self, base: &[f64]) -> Result<Tensor3> {
        self.part(&self.q_part, base)
    }

    pub fn curvature_blocks(&self, base: &[f64]) -> Result<CurvatureBlocks> {
        if let Some(f) = &self.curvature {
            return f(base);
        }
        let n = self.n;
        let b = self.principal.curvature(base)?;
        Ok(CurvatureBlocks {
            xx: Tensor3::from_fn(n * n, n, n, |a, i, j| b[(a, i, j)]),
            qq: Tensor3::from_fn(n * n, n, n, |a, i, j| b[(a, n + i, n + j)]),
            xq: Tensor3::from_fn(n * n, n, n, |a, i, j| b[(a, i, n + j)]),
        })
    }
}
