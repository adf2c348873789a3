//! Chart-coordinate numerics: points, scalar fields, small dense tensors and
//! central finite differences.

use std::fmt;
use std::ops::{Deref, Index, IndexMut};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type HessianFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;

/// Chart coordinates. Every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_finite(&coords)?;
        Ok(Point(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Point::new(coords)
    }
}

pub(crate) fn check_finite(z: &[f64]) -> Result<()> {
    match z.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFiniteInput { index }),
        None => Ok(()),
    }
}

pub(crate) fn check_point(context: &str, z: &[f64], dim: usize) -> Result<()> {
    if z.len() != dim {
        return Err(Error::dim(context, dim, z.len()));
    }
    check_finite(z)
}

/// Dense rank-3 array stored row-major; `[a][b][c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    shape: [usize; 3],
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(d0: usize, d1: usize, d2: usize) -> Self {
        Tensor3 {
            shape: [d0, d1, d2],
            data: vec![0.0; d0 * d1 * d2],
        }
    }

    pub fn from_fn(d0: usize, d1: usize, d2: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Tensor3::zeros(d0, d1, d2);
        for a in 0..d0 {
            for b in 0..d1 {
                for c in 0..d2 {
                    t[(a, b, c)] = f(a, b, c);
                }
            }
        }
        t
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, (a, b, c): (usize, usize, usize)) -> usize {
        debug_assert!(a < self.shape[0] && b < self.shape[1] && c < self.shape[2]);
        (a * self.shape[1] + b) * self.shape[2] + c
    }

    /// Largest `|T[a][b][c] + T[a][c][b]|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let [d0, d1, d2] = self.shape;
        if d1 != d2 {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for a in 0..d0 {
            for b in 0..d1 {
                for c in 0..d2 {
                    worst = worst.max((self[(a, b, c)] + self[(a, c, b)]).abs());
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;

    fn index(&self, idx: (usize, usize, usize)) -> &f64 {
        &self.data[self.offset(idx)]
    }
}

impl IndexMut<(usize, usize, usize)> for Tensor3 {
    fn index_mut(&mut self, idx: (usize, usize, usize)) -> &mut f64 {
        let o = self.offset(idx);
        &mut self.data[o]
    }
}

/// Smooth real function on chart coordinates, optionally carrying its
/// analytic gradient and Hessian.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    value: Arc<ValueFn>,
    gradient: Option<Arc<GradientFn>>,
    hessian: Option<Arc<HessianFn>>,
    /// Constant gradient, present when the field is known to be affine.
    linear: Option<Arc<[f64]>>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("analytic_gradient", &self.gradient.is_some())
            .field("analytic_hessian", &self.hessian.is_some())
            .field("affine", &self.linear.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn new(dim: usize, value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField {
            dim,
            value: Arc::new(value),
            gradient: None,
            hessian: None,
            linear: None,
        }
    }

    pub fn with_gradient(mut self, gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_hessian(mut self, hessian: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        ScalarField::affine(vec![0.0; dim], c)
    }

    pub fn zero(dim: usize) -> Self {
        ScalarField::constant(dim, 0.0)
    }

    /// `z ↦ coeffs · z + offset`.
    pub fn affine(coeffs: Vec<f64>, offset: f64) -> Self {
        let dim = coeffs.len();
        let coeffs: Arc<[f64]> = coeffs.into();
        let c1 = coeffs.clone();
        let c2 = coeffs.clone();
        ScalarField {
            dim,
            value: Arc::new(move |z: &[f64]| offset + c1.iter().zip(z).map(|(a, x)| a * x).sum::<f64>()),
            gradient: Some(Arc::new(move |_: &[f64]| c2.to_vec())),
            hessian: Some(Arc::new(move |_: &[f64]| DMatrix::zeros(dim, dim))),
            linear: Some(coeffs),
        }
    }

    pub fn linear(coeffs: Vec<f64>) -> Self {
        ScalarField::affine(coeffs, 0.0)
    }

    /// The coordinate function `z ↦ z^index`.
    pub fn coordinate(dim: usize, index: usize) -> Self {
        let mut coeffs = vec![0.0; dim];
        coeffs[index] = 1.0;
        ScalarField::linear(coeffs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    /// Constant gradient of an affine field.
    pub fn linear_coefficients(&self) -> Option<&[f64]> {
        self.linear.as_deref()
    }

    /// Evaluate, rejecting wrong-sized or non-finite input and non-finite output.
    pub fn eval(&self, z: &[f64]) -> Result<f64> {
        check_point("field evaluation", z, self.dim)?;
        self.eval_unchecked(z)
    }

    pub(crate) fn eval_unchecked(&self, z: &[f64]) -> Result<f64> {
        let v = (self.value)(z);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteValue {
                context: format!("scalar field at {z:?}"),
            })
        }
    }

    /// Analytic gradient if supplied, else central differences.
    pub fn gradient(&self, z: &[f64]) -> Result<DVector<f64>> {
        fd_gradient(self, z, None)
    }

    /// Analytic Hessian if supplied, else central differences of the gradient.
    pub fn hessian(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        check_point("hessian", z, self.dim)?;
        if let Some(h) = &self.hessian {
            let m = h(z);
            if m.iter().all(|v| v.is_finite()) {
                return Ok(m);
            }
            return Err(Error::NonFiniteValue {
                context: "analytic hessian".into(),
            });
        }
        let jac = central_jacobian(self.dim, z, StepRule::Cbrt, |p| self.gradient(p))?;
        Ok((&jac + jac.transpose()) * 0.5)
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &ScalarField, sign: f64) -> Result<ScalarField> {
        if self.dim != other.dim {
            return Err(Error::dim("field sum", self.dim, other.dim));
        }
        let (a, b) = (self.value.clone(), other.value.clone());
        let mut out = ScalarField::new(self.dim, move |z| a(z) + sign * b(z));
        if let (Some(ga), Some(gb)) = (self.gradient.clone(), other.gradient.clone()) {
            out.gradient = Some(Arc::new(move |z: &[f64]| {
                ga(z).iter().zip(gb(z)).map(|(x, y)| x + sign * y).collect()
            }));
        }
        if let (Some(ha), Some(hb)) = (self.hessian.clone(), other.hessian.clone()) {
            out.hessian = Some(Arc::new(move |z: &[f64]| ha(z) + hb(z) * sign));
        }
        if let (Some(la), Some(lb)) = (&self.linear, &other.linear) {
            out.linear = Some(la.iter().zip(lb.iter()).map(|(x, y)| x + sign * y).collect());
        }
        Ok(out)
    }

    pub fn scale(&self, k: f64) -> ScalarField {
        let a = self.value.clone();
        let mut out = ScalarField::new(self.dim, move |z| k * a(z));
        if let Some(g) = self.gradient.clone() {
            out.gradient = Some(Arc::new(move |z: &[f64]| g(z).into_iter().map(|v| k * v).collect()));
        }
        if let Some(h) = self.hessian.clone() {
            out.hessian = Some(Arc::new(move |z: &[f64]| h(z) * k));
        }
        out.linear = self.linear.as_ref().map(|l| l.iter().map(|v| k * v).collect());
        out
    }

    /// Pointwise product; derivatives by the product rule when both factors carry them.
    pub fn mul(&self, other: &ScalarField) -> Result<ScalarField> {
        if self.dim != other.dim {
            return Err(Error::dim("field product", self.dim, other.dim));
        }
        let (a, b) = (self.value.clone(), other.value.clone());
        let mut out = ScalarField::new(self.dim, move |z| a(z) * b(z));
        if let (Some(ga), Some(gb)) = (self.gradient.clone(), other.gradient.clone()) {
            let (a, b) = (self.value.clone(), other.value.clone());
            out.gradient = Some(Arc::new(move |z: &[f64]| {
                let (va, vb) = (a(z), b(z));
                ga(z).iter().zip(gb(z)).map(|(x, y)| x * vb + va * y).collect()
            }));
            if let (Some(ha), Some(hb)) = (self.hessian.clone(), other.hessian.clone()) {
                let (a, b) = (self.value.clone(), other.value.clone());
                let (ga, gb) = (self.gradient.clone().unwrap(), other.gradient.clone().unwrap());
                out.hessian = Some(Arc::new(move |z: &[f64]| {
                    let (va, vb) = (a(z), b(z));
                    let da = DVector::from_vec(ga(z));
                    let db = DVector::from_vec(gb(z));
                    ha(z) * vb + hb(z) * va + &da * db.transpose() + &db * da.transpose()
                }));
            }
        }
        Ok(out)
    }

    /// Pull back along `z ↦ z[range]`: a field on `dim` coordinates that
    /// reads only the sub-block starting at `offset`.
    pub fn embed(&self, dim: usize, offset: usize) -> Result<ScalarField> {
        if offset + self.dim > dim {
            return Err(Error::dim("field embedding", dim, offset + self.dim));
        }
        let inner_dim = self.dim;
        let v = self.value.clone();
        let mut out = ScalarField::new(dim, move |z| v(&z[offset..offset + inner_dim]));
        if let Some(g) = self.gradient.clone() {
            out.gradient = Some(Arc::new(move |z: &[f64]| {
                let mut full = vec![0.0; dim];
                full[offset..offset + inner_dim].copy_from_slice(&g(&z[offset..offset + inner_dim]));
                full
            }));
        }
        if let Some(h) = self.hessian.clone() {
            out.hessian = Some(Arc::new(move |z: &[f64]| {
                let mut full = DMatrix::zeros(dim, dim);
                full.view_mut((offset, offset), (inner_dim, inner_dim))
                    .copy_from(&h(&z[offset..offset + inner_dim]));
                full
            }));
        }
        out.linear = self.linear.as_ref().map(|l| {
            let mut full = vec![0.0; dim];
            full[offset..offset + inner_dim].copy_from_slice(l);
            full.into()
        });
        Ok(out)
    }
}

/// How the finite-difference step is chosen along coordinate `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `cbrt(eps) · max(1, |z_i|)`: balanced for one central difference.
    Cbrt,
    /// `eps^(1/4) · max(1, |z_i|)`: for differencing an already differenced quantity.
    Quartic,
    /// Fixed step.
    Fixed(f64),
}

impl StepRule {
    pub fn step(self, zi: f64) -> f64 {
        match self {
            StepRule::Cbrt => f64::EPSILON.cbrt() * zi.abs().max(1.0),
            StepRule::Quartic => f64::EPSILON.powf(0.25) * zi.abs().max(1.0),
            StepRule::Fixed(h) => h,
        }
    }
}

/// Gradient of `f` at `z`. Uses the analytic gradient when `f` carries one,
/// otherwise central differences with the given uniform `step`, or
/// `cbrt(eps)·max(1,|z_i|)` per coordinate when `step` is `None`.
pub fn fd_gradient(f: &ScalarField, z: &[f64], step: Option<f64>) -> Result<DVector<f64>> {
    check_point("gradient", z, f.dim)?;
    if let Some(g) = &f.gradient {
        let grad = g(z);
        if grad.len() != f.dim {
            return Err(Error::dim("analytic gradient", f.dim, grad.len()));
        }
        if let Some(i) = grad.iter().position(|v| !v.is_finite()) {
            return Err(Error::Differentiation { coordinate: i });
        }
        return Ok(DVector::from_vec(grad));
    }
    central_gradient(f, z, step)
}

/// Central-difference gradient, ignoring any analytic gradient.
pub fn central_gradient(f: &ScalarField, z: &[f64], step: Option<f64>) -> Result<DVector<f64>> {
    check_point("gradient", z, f.dim)?;
    if let Some(h) = step {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {h}")));
        }
    }
    let rule = step.map_or(StepRule::Cbrt, StepRule::Fixed);
    central_gradient_with(f.dim, z, rule, |p| (f.value)(p))
}

pub(crate) fn central_gradient_with(
    dim: usize,
    z: &[f64],
    rule: StepRule,
    f: impl Fn(&[f64]) -> f64,
) -> Result<DVector<f64>> {
    let mut probe = z.to_vec();
    let mut grad = DVector::zeros(dim);
    for i in 0..dim {
        let h = rule.step(z[i]);
        probe[i] = z[i] + h;
        let up = f(&probe);
        probe[i] = z[i] - h;
        let down = f(&probe);
        probe[i] = z[i];
        if !(up.is_finite() && down.is_finite()) {
            return Err(Error::Differentiation { coordinate: i });
        }
        // (z+h)-(z-h) is exactly representable more often than 2h
        grad[i] = (up - down) / ((z[i] + h) - (z[i] - h));
    }
    Ok(grad)
}

/// Jacobian of a vector-valued map by central differences: column `i` is the
/// derivative along coordinate `i`.
pub fn central_jacobian(
    dim: usize,
    z: &[f64],
    rule: StepRule,
    f: impl Fn(&[f64]) -> Result<DVector<f64>>,
) -> Result<DMatrix<f64>> {
    let mut probe = z.to_vec();
    let mut jac: Option<DMatrix<f64>> = None;
    for i in 0..dim {
        let h = rule.step(z[i]);
        probe[i] = z[i] + h;
        let up = f(&probe).map_err(|_| Error::Differentiation { coordinate: i })?;
        probe[i] = z[i] - h;
        let down = f(&probe).map_err(|_| Error::Differentiation { coordinate: i })?;
        probe[i] = z[i];
        let width = (z[i] + h) - (z[i] - h);
        let jac = jac.get_or_insert_with(|| DMatrix::zeros(up.len(), dim));
        for r in 0..up.len() {
            let d = (up[r] - down[r]) / width;
            if !d.is_finite() {
                return Err(Error::Differentiation { coordinate: i });
            }
            jac[(r, i)] = d;
        }
    }
    Ok(jac.unwrap_or_else(|| DMatrix::zeros(f(z).map(|v| v.len()).unwrap_or(0), 0)))
}

/// Jacobian of a list of scalar fields: row `I` is the gradient of component `I`.
pub fn fd_jacobian(components: &[ScalarField], z: &[f64]) -> Result<DMatrix<f64>> {
    let dim = components.first().map_or(z.len(), |c| c.dim);
    if let Some(bad) = components.iter().find(|c| c.dim != dim) {
        return Err(Error::dim("jacobian components", dim, bad.dim));
    }
    let mut jac = DMatrix::zeros(components.len(), dim);
    for (row, c) in components.iter().enumerate() {
        jac.set_row(row, &fd_gradient(c, z, None)?.transpose());
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square() -> ScalarField {
        ScalarField::new(1, |z| z[0] * z[0])
    }

    #[test]
    fn gradient_of_square() {
        let g = fd_gradient(&square(), &[3.0], None).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let f = ScalarField::new(3, |_| 7.5);
        let g = fd_gradient(&f, &[1.0, -2.0, 40.0], None).unwrap();
        assert_eq!(g, DVector::zeros(3));
    }

    #[test]
    fn gradient_of_bilinear() {
        let f = ScalarField::new(2, |z| z[0] * z[1]);
        let g = fd_gradient(&f, &[2.0, 5.0], None).unwrap();
        assert!((g[0] - 5.0).abs() < 1e-8 && (g[1] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn analytic_gradient_is_returned_directly() {
        let f = ScalarField::new(1, |z| z[0]).with_gradient(|_| vec![42.0]);
        assert_eq!(fd_gradient(&f, &[0.0], None).unwrap()[0], 42.0);
        assert!((central_gradient(&f, &[0.0], None).unwrap()[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_finite_probe_names_coordinate() {
        let f = ScalarField::new(2, |z| if z[1] > 1.0 { f64::NAN } else { z[0] });
        match fd_gradient(&f, &[0.0, 1.0], None) {
            Err(Error::Differentiation { coordinate }) => assert_eq!(coordinate, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_finite_points_and_bad_steps() {
        assert!(Point::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(matches!(square().eval(&[f64::NAN]), Err(Error::NonFiniteInput { index: 0 })));
        assert!(square().eval(&[1.0, 2.0]).is_err());
        assert!(central_gradient(&square(), &[1.0], Some(-1.0)).is_err());
    }

    #[test]
    fn jacobian_examples() {
        let swap = [ScalarField::coordinate(2, 1), ScalarField::coordinate(2, 0)];
        let j = fd_jacobian(&swap, &[1.0, 1.0]).unwrap();
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));

        let id: Vec<_> = (0..3).map(|i| ScalarField::coordinate(3, i)).collect();
        assert_eq!(fd_jacobian(&id, &[0.3, -2.0, 9.0]).unwrap(), DMatrix::identity(3, 3));

        let poly = [ScalarField::new(2, |z| z[0] * z[0]), ScalarField::new(2, |z| z[0] * z[1])];
        let j = fd_jacobian(&poly, &[2.0, 3.0]).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 3.0, 2.0]);
        assert!((j - expected).abs().max() < 1e-6);
    }

    #[test]
    fn product_rule_hessian() {
        let x = ScalarField::coordinate(2, 0);
        let y = ScalarField::coordinate(2, 1);
        let f = x.mul(&y).unwrap().mul(&x).unwrap(); // x^2 y
        let h = f.hessian(&[2.0, 3.0]).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[6.0, 4.0, 4.0, 0.0]);
        assert!((h - expected).abs().max() < 1e-12);
    }

    #[test]
    fn embed_reads_sub_block() {
        let f = ScalarField::new(2, |z| z[0] * z[1]).with_gradient(|z| vec![z[1], z[0]]);
        let e = f.embed(5, 2).unwrap();
        assert_eq!(e.eval(&[9.0, 9.0, 2.0, 3.0, 9.0]).unwrap(), 6.0);
        let g = e.gradient(&[9.0, 9.0, 2.0, 3.0, 9.0]).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 0.0, 3.0, 2.0, 0.0]);
    }

    fn trig_field() -> ScalarField {
        ScalarField::new(3, |z| (z[0] * z[1]).sin() + z[2].exp() * z[0] - z[1].powi(3))
            .with_gradient(|z| {
                vec![
                    z[1] * (z[0] * z[1]).cos() + z[2].exp(),
                    z[0] * (z[0] * z[1]).cos() - 3.0 * z[1] * z[1],
                    z[2].exp() * z[0],
                ]
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn analytic_gradient_matches_central_differences(
            x in -2.0f64..2.0, y in -2.0f64..2.0, w in -2.0f64..2.0
        ) {
            let f = trig_field();
            let z = [x, y, w];
            let exact = f.gradient(&z).unwrap();
            let approx = central_gradient(&f, &z, None).unwrap();
            for i in 0..3 {
                prop_assert!((approx[i] - exact[i]).abs() / (1.0 + exact[i].abs()) < 1e-5);
            }
        }

        #[test]
        fn gradient_is_linear(x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let f = ScalarField::new(2, |z| z[0].sin() * z[1]);
            let g = ScalarField::new(2, |z| z[0] * z[0] - z[1].cos());
            let z = [x, y];
            let lhs = central_gradient(&f.add(&g).unwrap(), &z, None).unwrap();
            let rhs = central_gradient(&f, &z, None).unwrap() + central_gradient(&g, &z, None).unwrap();
            prop_assert!((lhs - rhs).abs().max() < 1e-10);
        }
    }
}
