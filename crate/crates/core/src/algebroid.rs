//! Lie algebroids given by structure functions in one chart.
//!
//! Index convention: `anchor(x)[(i, α)] = b_α^i(x)` and
//! `structure(x)[(γ, α, β)] = C^γ_{αβ}(x)` with `[e_α, e_β] = C^γ_{αβ} e_γ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{check_point, fd_gradient, ScalarField, Tensor3};

const ANTISYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LieAlgebroid {
    n: usize,
    r: usize,
    /// `b_α^i` at `i * r + α`.
    anchor: Vec<ScalarField>,
    /// `C^γ_{αβ}` at `(γ * r + α) * r + β`.
    structure: Vec<ScalarField>,
}

/// A section `a = a^α e_α` given by its component functions on the base.
#[derive(Debug, Clone)]
pub struct Section {
    components: Vec<ScalarField>,
}

impl Section {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        if let Some(first) = components.first() {
            if let Some(bad) = components.iter().find(|c| c.dim() != first.dim()) {
                return Err(Error::dim("section components", first.dim(), bad.dim()));
            }
        }
        Ok(Section { components })
    }

    pub fn constant(n: usize, values: &[f64]) -> Self {
        Section {
            components: values.iter().map(|&v| ScalarField::constant(n, v)).collect(),
        }
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, x: &[f64]) -> Result<DVector<f64>> {
        let v: Result<Vec<f64>> = self.components.iter().map(|c| c.eval(x)).collect();
        Ok(DVector::from_vec(v?))
    }

    /// `∂a^α/∂x^j` at `(α, j)`.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let mut jac = DMatrix::zeros(self.components.len(), x.len());
        for (a, c) in self.components.iter().enumerate() {
            jac.set_row(a, &fd_gradient(c, x, None)?.transpose());
        }
        Ok(jac)
    }
}

/// Per-sample maxima of the two compatibility residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityReport {
    pub anchor: Vec<f64>,
    pub jacobi: Vec<f64>,
}

impl CompatibilityReport {
    pub fn max_anchor(&self) -> f64 {
        self.anchor.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_jacobi(&self) -> f64 {
        self.jacobi.iter().copied().fold(0.0, f64::max)
    }
}

impl LieAlgebroid {
    /// Builds an algebroid from component fields. The structure functions are
    /// probed at the origin and at `(1,…,1)`; an antisymmetry violation above
    /// `1e-12` is rejected.
    pub fn new(n: usize, r: usize, anchor: Vec<ScalarField>, structure: Vec<ScalarField>) -> Result<Self> {
        if anchor.len() != n * r {
            return Err(Error::dim("anchor entries", n * r, anchor.len()));
        }
        if structure.len() != r * r * r {
            return Err(Error::dim("structure-function entries", r * r * r, structure.len()));
        }
        if let Some(f) = anchor.iter().chain(&structure).find(|f| f.dim() != n) {
            return Err(Error::dim("structure-function arity", n, f.dim()));
        }
        let algebroid = LieAlgebroid { n, r, anchor, structure };
        for probe in [vec![0.0; n], vec![1.0; n]] {
            algebroid.structure_at(&probe)?;
        }
        Ok(algebroid)
    }

    pub fn from_constants(anchor: &DMatrix<f64>, structure: &Tensor3) -> Result<Self> {
        let (n, r) = anchor.shape();
        if structure.shape() != [r, r, r] {
            return Err(Error::dim("structure constants", r, structure.shape()[0]));
        }
        let anchor = (0..n * r)
            .map(|k| ScalarField::constant(n, anchor[(k / r, k % r)]))
            .collect();
        let structure = structure.as_slice().iter().map(|&c| ScalarField::constant(n, c)).collect();
        LieAlgebroid::new(n, r, anchor, structure)
    }

    /// `TM → M` over `R^n`: identity anchor, vanishing brackets.
    pub fn tangent(n: usize) -> Self {
        LieAlgebroid::from_constants(&DMatrix::identity(n, n), &Tensor3::zeros(n, n, n))
            .expect("tangent algebroid is well formed")
    }

    /// A Lie algebra viewed as an algebroid over a point.
    pub fn over_point(structure: &Tensor3) -> Result<Self> {
        let r = structure.shape()[0];
        LieAlgebroid::from_constants(&DMatrix::zeros(0, r), structure)
    }

    pub fn base_dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.anchor.iter().chain(&self.structure).all(ScalarField::has_gradient)
    }

    pub fn anchor_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_point("algebroid base point", x, self.n)?;
        let mut b = DMatrix::zeros(self.n, self.r);
        for (k, f) in self.anchor.iter().enumerate() {
            b[(k / self.r, k % self.r)] = f.eval_unchecked(x)?;
        }
        Ok(b)
    }

    /// Structure functions at `x`, antisymmetrized after checking the
    /// violation is below tolerance.
    pub fn structure_at(&self, x: &[f64]) -> Result<Tensor3> {
        check_point("algebroid base point", x, self.n)?;
        let r = self.r;
        let mut c = Tensor3::zeros(r, r, r);
        for g in 0..r {
            for a in 0..r {
                for b in 0..r {
                    c[(g, a, b)] = self.structure[(g * r + a) * r + b].eval_unchecked(x)?;
                }
            }
        }
        let residual = c.antisymmetry_residual();
        if residual > ANTISYMMETRY_TOL {
            return Err(Error::NotAntisymmetric {
                context: "algebroid structure functions C^γ_{αβ}".into(),
                residual,
            });
        }
        Ok(Tensor3::from_fn(r, r, r, |g, a, b| 0.5 * (c[(g, a, b)] - c[(g, b, a)])))
    }

    /// `∂_j b_α^i`, one `n×r` matrix per base direction `j`.
    pub fn anchor_derivative(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        check_point("algebroid base point", x, self.n)?;
        let mut d = vec![DMatrix::zeros(self.n, self.r); self.n];
        for (k, f) in self.anchor.iter().enumerate() {
            let g = fd_gradient(f, x, None)?;
            for (j, dj) in d.iter_mut().enumerate() {
                dj[(k / self.r, k % self.r)] = g[j];
            }
        }
        Ok(d)
    }

    /// `∂_j C^γ_{αβ}`, one tensor per base direction `j`.
    pub fn structure_derivative(&self, x: &[f64]) -> Result<Vec<Tensor3>> {
        check_point("algebroid base point", x, self.n)?;
        let r = self.r;
        let mut d = vec![Tensor3::zeros(r, r, r); self.n];
        for g in 0..r {
            for a in 0..r {
                for b in 0..r {
                    let grad = fd_gradient(&self.structure[(g * r + a) * r + b], x, None)?;
                    for (j, dj) in d.iter_mut().enumerate() {
                        dj[(g, a, b)] = grad[j];
                    }
                }
            }
        }
        for dj in &mut d {
            *dj = Tensor3::from_fn(r, r, r, |g, a, b| 0.5 * (dj[(g, a, b)] - dj[(g, b, a)]));
        }
        Ok(d)
    }

    /// Bracket of two sections at `x`:
    /// `[a,b]^γ = a^α b_α^j ∂_j b^γ − b^α b_α^j ∂_j a^γ + C^γ_{αβ} a^α b^β`.
    pub fn section_bracket(&self, a: &Section, b: &Section, x: &[f64]) -> Result<DVector<f64>> {
        self.check_section(a)?;
        self.check_section(b)?;
        let anchor = self.anchor_at(x)?;
        let c = self.structure_at(x)?;
        let (va, vb) = (a.eval(x)?, b.eval(x)?);
        let (ja, jb) = (a.jacobian(x)?, b.jacobian(x)?);
        let along_a = &anchor * &va;
        let along_b = &anchor * &vb;
        let mut out = &jb * along_a - &ja * along_b;
        for g in 0..self.r {
            for al in 0..self.r {
                for be in 0..self.r {
                    out[g] += c[(g, al, be)] * va[al] * vb[be];
                }
            }
        }
        Ok(out)
    }

    fn check_section(&self, a: &Section) -> Result<()> {
        if a.rank() != self.r {
            return Err(Error::dim("section rank", self.r, a.rank()));
        }
        if let Some(c) = a.components.iter().find(|c| c.dim() != self.n) {
            return Err(Error::dim("section component arity", self.n, c.dim()));
        }
        Ok(())
    }
}

/// Residuals of the structure equations at each sample:
/// anchor homomorphism `b_α^j ∂_j b_β^i − b_β^j ∂_j b_α^i − C^γ_{αβ} b_γ^i` and the
/// Jacobi identity `Σ_cyc(α,β,γ) b_α^i ∂_i C^δ_{βγ} + C^δ_{αε} C^ε_{βγ}`.
pub fn check_compatibility(algebroid: &LieAlgebroid, samples: &[Vec<f64>]) -> Result<CompatibilityReport> {
    let (n, r) = (algebroid.n, algebroid.r);
    let mut report = CompatibilityReport {
        anchor: Vec::with_capacity(samples.len()),
        jacobi: Vec::with_capacity(samples.len()),
    };
    for x in samples {
        if x.len() != n {
            return Err(Error::dim("compatibility sample", n, x.len()));
        }
        let b = algebroid.anchor_at(x)?;
        let db = algebroid.anchor_derivative(x)?;
        let c = algebroid.structure_at(x)?;
        let dc = algebroid.structure_derivative(x)?;

        let mut anchor_worst = 0.0f64;
        for al in 0..r {
            for be in 0..r {
                for i in 0..n {
                    let mut v = 0.0;
                    for j in 0..n {
                        v += b[(j, al)] * db[j][(i, be)] - b[(j, be)] * db[j][(i, al)];
                    }
                    for g in 0..r {
                        v -= c[(g, al, be)] * b[(i, g)];
                    }
                    anchor_worst = anchor_worst.max(v.abs());
                }
            }
        }

        let term = |al: usize, be: usize, ga: usize, de: usize| -> f64 {
            let mut v = 0.0;
            for i in 0..n {
                v += b[(i, al)] * dc[i][(de, be, ga)];
            }
            for ep in 0..r {
                v += c[(de, al, ep)] * c[(ep, be, ga)];
            }
            v
        };
        let mut jacobi_worst = 0.0f64;
        for al in 0..r {
            for be in 0..r {
                for ga in 0..r {
                    for de in 0..r {
                        let v = term(al, be, ga, de) + term(be, ga, al, de) + term(ga, al, be, de);
                        jacobi_worst = jacobi_worst.max(v.abs());
                    }
                }
            }
        }
        report.anchor.push(anchor_worst);
        report.jacobi.push(jacobi_worst);
    }
    Ok(report)
}

/// The fiber-linear function `f_a(x, ξ) = a^α(x) ξ_α` on `A*` with coordinates `(x, ξ)`.
pub fn fiber_linear_function(a: &Section) -> Result<ScalarField> {
    let r = a.rank();
    let n = a.components.first().map_or(0, ScalarField::dim);
    let dim = n + r;
    let comps = a.components.clone();
    let value = {
        let comps = comps.clone();
        move |z: &[f64]| {
            let (x, xi) = z.split_at(n);
            comps.iter().zip(xi).map(|(c, s)| (c_value(c, x)) * s).sum::<f64>()
        }
    };
    let all_constant = comps.iter().all(|c| c.linear_coefficients().is_some_and(|l| l.iter().all(|v| *v == 0.0)));
    if all_constant {
        let mut coeffs = vec![0.0; dim];
        for (al, c) in comps.iter().enumerate() {
            coeffs[n + al] = c.eval(&vec![0.0; n])?;
        }
        return Ok(ScalarField::linear(coeffs));
    }
    let mut field = ScalarField::new(dim, value);
    if comps.iter().all(ScalarField::has_gradient) {
        let comps_g = comps.clone();
        field = field.with_gradient(move |z: &[f64]| {
            let (x, xi) = z.split_at(n);
            let mut g = vec![0.0; dim];
            for (al, c) in comps_g.iter().enumerate() {
                let grad = c.gradient(x).map(|v| v.as_slice().to_vec()).unwrap_or_else(|_| vec![f64::NAN; n]);
                for j in 0..n {
                    g[j] += grad[j] * xi[al];
                }
                g[n + al] = c_value(c, x);
            }
            g
        });
    }
    Ok(field)
}

fn c_value(c: &ScalarField, x: &[f64]) -> f64 {
    c.eval_unchecked(x).unwrap_or(f64::NAN)
}

/// Hamiltonian vector field of `f_a` at `z = (x, ξ)` from the structure functions:
/// base part `b_β^i a^β`, fiber part `(a^γ C^λ_{βγ} − b_β^j ∂_j a^λ) ξ_λ` in the `ξ_β` slot.
pub fn hamiltonian_field_of_section(algebroid: &LieAlgebroid, a: &Section, z: &[f64]) -> Result<DVector<f64>> {
    let (n, r) = (algebroid.n, algebroid.r);
    check_point("point on A*", z, n + r)?;
    algebroid.check_section(a)?;
    let (x, xi) = z.split_at(n);
    let b = algebroid.anchor_at(x)?;
    let c = algebroid.structure_at(x)?;
    let va = a.eval(x)?;
    let ja = a.jacobian(x)?;
    let mut out = DVector::zeros(n + r);
    out.rows_mut(0, n).copy_from(&(&b * &va));
    for be in 0..r {
        let mut v = 0.0;
        for la in 0..r {
            let mut coeff = 0.0;
            for ga in 0..r {
                coeff += va[ga] * c[(la, be, ga)];
            }
            for j in 0..n {
                coeff -= b[(j, be)] * ja[(la, j)];
            }
            v += coeff * xi[la];
        }
        out[n + be] = v;
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::poisson::{bracket, check_jacobi, from_algebroid, from_algebroid_with, hamiltonian_field, AnchorSign};
    use crate::rng::NoiseStream;

    pub(crate) use crate::connection::levi_civita;

    /// `C^γ_{αβ} = ε_{αβγ}`.
    pub(crate) fn so3_constants() -> Tensor3 {
        Tensor3::from_fn(3, 3, 3, |g, a, b| levi_civita(a, b, g))
    }

    fn so3_over(n: usize) -> LieAlgebroid {
        LieAlgebroid::from_constants(&DMatrix::zeros(n, 3), &so3_constants()).unwrap()
    }

    fn random_points(seed: u64, count: usize, dim: usize) -> Vec<Vec<f64>> {
        let mut s = NoiseStream::new(seed);
        (0..count).map(|_| (0..dim).map(|_| 4.0 * s.uniform() - 2.0).collect()).collect()
    }

    /// Rotation action of so(3) on R³: `b(e_α) = −ε_{αjk} x^j ∂_k`.
    fn so3_action() -> LieAlgebroid {
        let mut anchor = Vec::new();
        for k in 0..3 {
            for al in 0..3 {
                let coeffs = (0..3).map(|j| -levi_civita(al, j, k)).collect();
                anchor.push(ScalarField::linear(coeffs));
            }
        }
        let c = so3_constants();
        let structure = c.as_slice().iter().map(|&v| ScalarField::constant(3, v)).collect();
        LieAlgebroid::new(3, 3, anchor, structure).unwrap()
    }

    #[test]
    fn so3_over_point_is_compatible() {
        let report = check_compatibility(&so3_over(2), &random_points(1, 5, 2)).unwrap();
        assert!(report.max_anchor() < 1e-12 && report.max_jacobi() < 1e-12);
    }

    #[test]
    fn tangent_algebroid_is_exactly_compatible() {
        let report = check_compatibility(&LieAlgebroid::tangent(3), &random_points(2, 5, 3)).unwrap();
        assert_eq!(report.max_anchor(), 0.0);
        assert_eq!(report.max_jacobi(), 0.0);
    }

    #[test]
    fn rotation_action_algebroid_is_compatible() {
        let report = check_compatibility(&so3_action(), &random_points(3, 10, 3)).unwrap();
        assert!(report.max_anchor() < 1e-9, "{report:?}");
        assert!(report.max_jacobi() < 1e-9, "{report:?}");
    }

    #[test]
    fn corrupted_constants_break_jacobi() {
        // [e1,e2] = e3 + e1 instead of e3: the Jacobiator is e2.
        let mut c = so3_constants();
        c[(0, 0, 1)] = 1.0;
        c[(0, 1, 0)] = -1.0;
        let a = LieAlgebroid::from_constants(&DMatrix::zeros(1, 3), &c).unwrap();
        let report = check_compatibility(&a, &[vec![0.0]]).unwrap();
        assert!(report.max_jacobi() >= 1.0);
    }

    #[test]
    fn single_sign_flip_is_rejected_as_non_antisymmetric() {
        let mut c = so3_constants();
        c[(2, 0, 1)] = -1.0;
        let err = LieAlgebroid::from_constants(&DMatrix::zeros(1, 3), &c).unwrap_err();
        assert!(matches!(err, Error::NotAntisymmetric { .. }));
    }

    #[test]
    fn paired_sign_flip_gives_so21_which_is_a_lie_algebra() {
        let mut c = so3_constants();
        c[(2, 0, 1)] = -1.0;
        c[(2, 1, 0)] = 1.0;
        let a = LieAlgebroid::from_constants(&DMatrix::zeros(1, 3), &c).unwrap();
        assert!(check_compatibility(&a, &[vec![0.5]]).unwrap().max_jacobi() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_a_configuration_error() {
        assert!(check_compatibility(&LieAlgebroid::tangent(2), &[vec![0.0]]).is_err());
        assert!(LieAlgebroid::new(2, 1, vec![ScalarField::zero(2)], vec![ScalarField::zero(2)]).is_err());
    }

    #[test]
    fn fiber_linear_examples() {
        let e1 = Section::constant(2, &[1.0, 0.0, 0.0]);
        let f = fiber_linear_function(&e1).unwrap();
        assert_eq!(f.eval(&[7.0, -3.0, 4.0, 5.0, 6.0]).unwrap(), 4.0);

        let zero = Section::constant(2, &[0.0, 0.0]);
        assert_eq!(fiber_linear_function(&zero).unwrap().eval(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 0.0);

        let a = Section::new(vec![ScalarField::coordinate(1, 0)]).unwrap();
        assert_eq!(fiber_linear_function(&a).unwrap().eval(&[2.0, 3.0]).unwrap(), 6.0);
    }

    #[test]
    fn fiber_linear_is_linear_in_the_section() {
        let a = Section::new(vec![
            ScalarField::new(2, |x| x[0].sin()).with_gradient(|x| vec![x[0].cos(), 0.0]),
            ScalarField::coordinate(2, 1),
        ])
        .unwrap();
        let b = Section::new(vec![ScalarField::constant(2, 2.0), ScalarField::new(2, |x| x[0] * x[1])]).unwrap();
        let sum = Section::new(
            a.components().iter().zip(b.components()).map(|(p, q)| p.add(q).unwrap()).collect(),
        )
        .unwrap();
        let (fa, fb, fs) = (
            fiber_linear_function(&a).unwrap(),
            fiber_linear_function(&b).unwrap(),
            fiber_linear_function(&sum).unwrap(),
        );
        for z in random_points(4, 20, 4) {
            let lhs = fs.eval(&z).unwrap();
            let rhs = fa.eval(&z).unwrap() + fb.eval(&z).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn section_field_flat_case() {
        let a = Section::constant(2, &[0.5, -1.5]);
        let v = hamiltonian_field_of_section(&LieAlgebroid::tangent(2), &a, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(v.as_slice(), &[0.5, -1.5, 0.0, 0.0]);
    }

    #[test]
    fn section_field_so3_over_point() {
        let a = Section::constant(0, &[1.0, 0.0, 0.0]);
        let alg = LieAlgebroid::over_point(&so3_constants()).unwrap();
        let v = hamiltonian_field_of_section(&alg, &a, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(v.as_slice(), &[0.0, -3.0, 2.0]);
    }

    #[test]
    fn section_field_matches_poisson_hamiltonian_field() {
        let alg = so3_action();
        let p = from_algebroid(&alg);
        let a = Section::new(vec![
            ScalarField::new(3, |x| x[0] * x[1]).with_gradient(|x| vec![x[1], x[0], 0.0]),
            ScalarField::constant(3, 0.7),
            ScalarField::new(3, |x| x[2].cos()),
        ])
        .unwrap();
        let fa = fiber_linear_function(&a).unwrap();
        for z in random_points(5, 50, 6) {
            let direct = hamiltonian_field_of_section(&alg, &a, &z).unwrap();
            let oracle = hamiltonian_field(&p, &fa, &z).unwrap();
            let scale = oracle.norm().max(1.0);
            assert!((direct - oracle).norm() / scale < 1e-6);
        }
    }

    #[test]
    fn bracket_homomorphism_for_constant_sections() {
        let alg = so3_over(1);
        let p = from_algebroid(&alg);
        let mut s = NoiseStream::new(6);
        for _ in 0..20 {
            let av: Vec<f64> = (0..3).map(|_| s.normal()).collect();
            let bv: Vec<f64> = (0..3).map(|_| s.normal()).collect();
            let (a, b) = (Section::constant(1, &av), Section::constant(1, &bv));
            let ab = Section::constant(1, alg.section_bracket(&a, &b, &[0.3]).unwrap().as_slice());
            let z: Vec<f64> = (0..4).map(|_| s.normal()).collect();
            let lhs = fiber_linear_function(&ab).unwrap().eval(&z).unwrap();
            let rhs = bracket(
                &p,
                &fiber_linear_function(&a).unwrap(),
                &fiber_linear_function(&b).unwrap(),
                &z,
            )
            .unwrap();
            assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn bracket_homomorphism_for_varying_sections_needs_standard_sign() {
        let alg = so3_action();
        let p = from_algebroid_with(&alg, AnchorSign::Standard);
        let a = Section::new(vec![
            ScalarField::coordinate(3, 1),
            ScalarField::constant(3, 1.0),
            ScalarField::new(3, |x| x[0] * x[0]).with_gradient(|x| vec![2.0 * x[0], 0.0, 0.0]),
        ])
        .unwrap();
        let b = Section::new(vec![
            ScalarField::constant(3, -0.5),
            ScalarField::coordinate(3, 2),
            ScalarField::coordinate(3, 0),
        ])
        .unwrap();
        let (fa, fb) = (fiber_linear_function(&a).unwrap(), fiber_linear_function(&b).unwrap());
        for z in random_points(7, 20, 6) {
            let ab = alg.section_bracket(&a, &b, &z[..3]).unwrap();
            let lhs: f64 = ab.iter().zip(&z[3..]).map(|(u, v)| u * v).sum();
            let rhs = bracket(&p, &fa, &fb, &z).unwrap();
            assert!((lhs - rhs).abs() <= 1e-6 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn printed_sign_fails_jacobi_when_anchor_images_do_not_commute() {
        let alg = so3_action();
        let samples = random_points(8, 10, 6);
        let printed = check_jacobi(&from_algebroid(&alg), &samples).unwrap();
        let standard = check_jacobi(&from_algebroid_with(&alg, AnchorSign::Standard), &samples).unwrap();
        assert!(printed.max() > 0.1, "{printed:?}");
        assert!(standard.max() < 1e-7, "{standard:?}");
    }
}
