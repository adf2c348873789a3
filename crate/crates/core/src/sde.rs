//! Stochastic Hamiltonian systems on a Poisson manifold and their compiled
//! Stratonovich and Itô coefficients.
//!
//! For noise Hamiltonians `f_1..f_r` driven by independent Brownian motions,
//! the Stratonovich equation is `dz = X_h dt + Σ_s X_{f_s} ∘ dB^s` and the Itô
//! drift is `X_h + ½ Σ_s {{z, f_s}, f_s}`. The double bracket equals
//! `(DX_{f_s}) X_{f_s}`, the derivative of the diffusion column along itself.
//!
//! For a linear structure `{x^i, x^j} = Λ^{ij}_k x^k` and affine noise
//! `f_a = α_{aj} x^j + const`, everything is closed-form:
//! `σ^i_a(x) = α_{aj} Λ^{ij}_ℓ x^ℓ` and
//! `Σ_a {{x^i, f_a}, f_a} = α_{aj} α_{ak} Λ^{ij}_p Λ^{pk}_ℓ x^ℓ`.

pub mod expanded;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{central_gradient_with, central_jacobian, check_point, fd_gradient, ScalarField, StepRule, Tensor3};
use crate::poisson::{bracket_field, DerivativeMode, PoissonStructure};

pub use expanded::{AuditRecord, AuditReport, ExpandedKind, ExpandedSystem};

/// Factor in front of the double-bracket drift correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItoConvention {
    /// `½ Σ_s {{z, f_s}, f_s}`: the Stratonovich to Itô conversion.
    #[default]
    Standard,
    /// `Σ_s {{z, f_s}, f_s}` without the half.
    AsPrinted,
}

impl ItoConvention {
    pub fn factor(self) -> f64 {
        match self {
            ItoConvention::Standard => 0.5,
            ItoConvention::AsPrinted => 1.0,
        }
    }
}

impl fmt::Display for ItoConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ItoConvention::Standard => "standard",
            ItoConvention::AsPrinted => "as_printed",
        })
    }
}

impl FromStr for ItoConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" | "half" => Ok(ItoConvention::Standard),
            "as_printed" | "no_half" => Ok(ItoConvention::AsPrinted),
            other => Err(Error::InvalidArgument(format!(
                "unknown Itô convention `{other}` (expected `standard` or `as_printed`)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StochasticHamiltonianSystem {
    poisson: PoissonStructure,
    h: ScalarField,
    noise: Vec<ScalarField>,
}

impl StochasticHamiltonianSystem {
    pub fn new(poisson: PoissonStructure, h: ScalarField, noise: Vec<ScalarField>) -> Result<Self> {
        let m = poisson.dim();
        if h.dim() != m {
            return Err(Error::dim("drift Hamiltonian", m, h.dim()));
        }
        if let Some((s, f)) = noise.iter().enumerate().find(|(_, f)| f.dim() != m) {
            return Err(Error::dim(format!("noise Hamiltonian {}", s + 1), m, f.dim()));
        }
        Ok(StochasticHamiltonianSystem { poisson, h, noise })
    }

    pub fn poisson(&self) -> &PoissonStructure {
        &self.poisson
    }

    pub fn hamiltonian(&self) -> &ScalarField {
        &self.h
    }

    pub fn noise(&self) -> &[ScalarField] {
        &self.noise
    }

    pub fn dim(&self) -> usize {
        self.poisson.dim()
    }
}

#[derive(Debug, Clone)]
struct LinearCoefficients {
    /// `σ_a[(i, ℓ)] = α_{aj} Λ^{ij}_ℓ`.
    diffusion: Vec<DMatrix<f64>>,
    /// `K[(i, ℓ)] = Σ_a α_{aj} α_{ak} Λ^{ij}_p Λ^{pk}_ℓ`.
    double_bracket: DMatrix<f64>,
}

#[derive(Debug, Clone)]
enum Route {
    Generic,
    Linear(LinearCoefficients),
}

/// Executable coefficients of a stochastic Hamiltonian system.
#[derive(Debug, Clone)]
pub struct CompiledDynamics {
    poisson: PoissonStructure,
    h: ScalarField,
    noise: Vec<ScalarField>,
    convention: ItoConvention,
    route: Route,
}

/// Compile with the standard convention, using the closed-form path when the
/// structure is linear and every noise Hamiltonian is affine.
pub fn compile(sys: &StochasticHamiltonianSystem) -> CompiledDynamics {
    compile_with(sys, ItoConvention::Standard)
}

pub fn compile_with(sys: &StochasticHamiltonianSystem, convention: ItoConvention) -> CompiledDynamics {
    let linear = sys.poisson.linear_constants().and_then(|constants| {
        let rows: Option<Vec<Vec<f64>>> = sys
            .noise
            .iter()
            .map(|f| f.linear_coefficients().map(<[f64]>::to_vec))
            .collect();
        rows.map(|rows| linear_coefficients(constants, &DMatrix::from_fn(rows.len(), sys.dim(), |a, i| rows[a][i])))
    });
    CompiledDynamics {
        poisson: sys.poisson.clone(),
        h: sys.h.clone(),
        noise: sys.noise.clone(),
        convention,
        route: linear.map_or(Route::Generic, Route::Linear),
    }
}

/// Compile without the closed-form path.
pub fn compile_generic(sys: &StochasticHamiltonianSystem, convention: ItoConvention) -> CompiledDynamics {
    CompiledDynamics {
        poisson: sys.poisson.clone(),
        h: sys.h.clone(),
        noise: sys.noise.clone(),
        convention,
        route: Route::Generic,
    }
}

fn linear_coefficients(constants: &Tensor3, alphas: &DMatrix<f64>) -> LinearCoefficients {
    let n = constants.shape()[0];
    let diffusion: Vec<DMatrix<f64>> = (0..alphas.nrows())
        .map(|a| DMatrix::from_fn(n, n, |i, l| (0..n).map(|j| alphas[(a, j)] * constants[(i, j, l)]).sum()))
        .collect();
    // Σ_a σ_a σ_a as matrices: (σ_a)_{ip} (σ_a)_{pℓ} = α_{aj}Λ^{ij}_p α_{ak}Λ^{pk}_ℓ
    let double_bracket = diffusion.iter().fold(DMatrix::zeros(n, n), |acc, s| acc + s * s);
    LinearCoefficients {
        diffusion,
        double_bracket,
    }
}

/// Closed-form dynamics for `{x^i, x^j} = Λ^{ij}_k x^k` with noise `f_a = α_{ai} x^i`
/// (`alphas` is `r×n`).
pub fn linear_fast_path(
    constants: &Tensor3,
    h: &ScalarField,
    alphas: &DMatrix<f64>,
    convention: ItoConvention,
) -> Result<CompiledDynamics> {
    let poisson = crate::poisson::linear_lie_poisson(constants)?;
    let n = poisson.dim();
    if h.dim() != n {
        return Err(Error::dim("drift Hamiltonian", n, h.dim()));
    }
    if alphas.ncols() != n {
        return Err(Error::dim("noise coefficients α columns", n, alphas.ncols()));
    }
    let noise = (0..alphas.nrows())
        .map(|a| ScalarField::linear(alphas.row(a).iter().copied().collect()))
        .collect();
    Ok(CompiledDynamics {
        poisson,
        h: h.clone(),
        noise,
        convention,
        route: Route::Linear(linear_coefficients(constants, alphas)),
    })
}

impl CompiledDynamics {
    pub fn dim(&self) -> usize {
        self.poisson.dim()
    }

    pub fn noise_dim(&self) -> usize {
        self.noise.len()
    }

    pub fn convention(&self) -> ItoConvention {
        self.convention
    }

    pub fn poisson(&self) -> &PoissonStructure {
        &self.poisson
    }

    pub fn uses_linear_fast_path(&self) -> bool {
        matches!(self.route, Route::Linear(_))
    }

    /// The same dynamics under another correction convention.
    pub fn with_convention(&self, convention: ItoConvention) -> Self {
        CompiledDynamics {
            convention,
            ..self.clone()
        }
    }

    /// `X_h(z)`.
    pub fn stratonovich_drift(&self, z: &[f64]) -> Result<DVector<f64>> {
        check_point("drift", z, self.dim())?;
        Ok(self.poisson.matrix(z)? * fd_gradient(&self.h, z, None)?)
    }

    /// `m×r` matrix whose column `s` is `X_{f_s}(z)`.
    pub fn diffusion(&self, z: &[f64]) -> Result<DMatrix<f64>> {
        check_point("diffusion", z, self.dim())?;
        match &self.route {
            Route::Linear(lin) => Ok(linear_diffusion(lin, z)),
            Route::Generic => {
                let l = self.poisson.matrix(z)?;
                self.generic_diffusion(&l, z)
            }
        }
    }

    fn generic_diffusion(&self, l: &DMatrix<f64>, z: &[f64]) -> Result<DMatrix<f64>> {
        let mut sigma = DMatrix::zeros(self.dim(), self.noise.len());
        for (s, f) in self.noise.iter().enumerate() {
            sigma.set_column(s, &(l * fd_gradient(f, z, None)?));
        }
        Ok(sigma)
    }

    /// `Σ_s {{z^I, f_s}, f_s}(z)`, without the convention factor.
    pub fn double_bracket_sum(&self, z: &[f64]) -> Result<DVector<f64>> {
        check_point("Itô correction", z, self.dim())?;
        match &self.route {
            Route::Linear(lin) => Ok(&lin.double_bracket * DVector::from_column_slice(z)),
            Route::Generic => self.generic_double_bracket(z),
        }
    }

    fn generic_double_bracket(&self, z: &[f64]) -> Result<DVector<f64>> {
        let m = self.dim();
        let mut out = DVector::zeros(m);
        if self.noise.is_empty() {
            return Ok(out);
        }
        let l = self.poisson.matrix(z)?;
        let exact = self.poisson.has_analytic_derivative() && self.noise.iter().all(ScalarField::has_hessian);
        let dl = if exact {
            Some(self.poisson.matrix_derivative(z, DerivativeMode::Auto)?)
        } else {
            None
        };
        for f in &self.noise {
            let grad = fd_gradient(f, z, None)?;
            let x = &l * &grad;
            let jac = match &dl {
                Some(dl) => {
                    // (DX)^I_K = ∂_K Λ^{IJ} ∂_J f + Λ^{IJ} ∂_J ∂_K f
                    let hess = f.hessian(z)?;
                    let mut jac = &l * hess;
                    for (k, dlk) in dl.iter().enumerate() {
                        let col = dlk * &grad;
                        for i in 0..m {
                            jac[(i, k)] += col[i];
                        }
                    }
                    jac
                }
                None => {
                    let rule = if f.has_gradient() { StepRule::Cbrt } else { StepRule::Quartic };
                    central_jacobian(m, z, rule, |p| Ok(self.poisson.matrix(p)? * fd_gradient(f, p, None)?))?
                }
            };
            out += jac * x;
        }
        Ok(out)
    }

    /// `factor · Σ_s {{z, f_s}, f_s}(z)`.
    pub fn correction(&self, z: &[f64]) -> Result<DVector<f64>> {
        Ok(self.double_bracket_sum(z)? * self.convention.factor())
    }

    pub fn ito_drift(&self, z: &[f64]) -> Result<DVector<f64>> {
        Ok(self.stratonovich_drift(z)? + self.correction(z)?)
    }

    /// Stratonovich drift and diffusion sharing one evaluation of `Λ`.
    pub fn stratonovich_coefficients(&self, z: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        check_point("dynamics", z, self.dim())?;
        let l = self.poisson.matrix(z)?;
        let drift = &l * fd_gradient(&self.h, z, None)?;
        let sigma = match &self.route {
            Route::Linear(lin) => linear_diffusion(lin, z),
            Route::Generic => self.generic_diffusion(&l, z)?,
        };
        Ok((drift, sigma))
    }

    /// Itô drift and diffusion.
    pub fn ito_coefficients(&self, z: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let (drift, sigma) = self.stratonovich_coefficients(z)?;
        Ok((drift + self.correction(z)?, sigma))
    }
}

fn linear_diffusion(lin: &LinearCoefficients, z: &[f64]) -> DMatrix<f64> {
    let x = DVector::from_column_slice(z);
    let mut sigma = DMatrix::zeros(z.len(), lin.diffusion.len());
    for (a, s) in lin.diffusion.iter().enumerate() {
        sigma.set_column(a, &(s * &x));
    }
    sigma
}

/// `½ Σ_s {{z^I, f_s}, f_s}(z)` evaluated literally through nested brackets:
/// the inner bracket is a field without gradient, so the outer derivative is
/// a central difference with step `eps^(1/4)·max(1, |z_K|)`.
pub fn ito_correction(sys: &StochasticHamiltonianSystem, z: &[f64]) -> Result<DVector<f64>> {
    ito_correction_with(sys, z, ItoConvention::Standard)
}

pub fn ito_correction_with(sys: &StochasticHamiltonianSystem, z: &[f64], convention: ItoConvention) -> Result<DVector<f64>> {
    let m = sys.dim();
    check_point("Itô correction", z, m)?;
    let l = sys.poisson.matrix(z)?;
    let mut out = DVector::zeros(m);
    for f in &sys.noise {
        let outer = l.clone() * fd_gradient(f, z, None)?;
        for i in 0..m {
            let inner = bracket_field(&sys.poisson, &ScalarField::coordinate(m, i), f)?;
            let d_inner = central_gradient_with(m, z, StepRule::Quartic, |p| inner.eval(p).unwrap_or(f64::NAN))?;
            out[i] += d_inner.dot(&outer);
        }
    }
    Ok(out * convention.factor())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::levi_civita;
    use crate::geometry::fd_jacobian;
    use crate::poisson::{bracket, linear_lie_poisson};
    use crate::rng::NoiseStream;

    fn so3() -> PoissonStructure {
        linear_lie_poisson(&Tensor3::from_fn(3, 3, 3, levi_civita)).unwrap()
    }

    fn so3_system(h: ScalarField, noise: Vec<ScalarField>) -> StochasticHamiltonianSystem {
        StochasticHamiltonianSystem::new(so3(), h, noise).unwrap()
    }

    fn uniform_points(seed: u64, count: usize, dim: usize, radius: f64) -> Vec<Vec<f64>> {
        let mut s = NoiseStream::new(seed);
        (0..count)
            .map(|_| (0..dim).map(|_| radius * (2.0 * s.uniform() - 1.0)).collect())
            .collect()
    }

    fn rel(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a - b).amax() / b.amax().max(1.0)
    }

    #[test]
    fn deterministic_limit() {
        let h = ScalarField::new(3, |z| z[0] * z[1] + z[2].sin());
        let dynamics = compile(&so3_system(h, vec![]));
        let z = [0.3, 1.0, -2.0];
        assert_eq!(dynamics.diffusion(&z).unwrap().shape(), (3, 0));
        assert_eq!(dynamics.ito_drift(&z).unwrap(), dynamics.stratonovich_drift(&z).unwrap());
    }

    #[test]
    fn so3_single_noise_examples() {
        let sys = so3_system(ScalarField::zero(3), vec![ScalarField::coordinate(3, 0)]);
        let z = [1.0, 2.0, 3.0];
        for dynamics in [compile(&sys), compile_generic(&sys, ItoConvention::Standard)] {
            assert_eq!(dynamics.diffusion(&z).unwrap().column(0).as_slice(), &[0.0, -3.0, 2.0]);
            let c = dynamics.correction(&z).unwrap();
            assert!((c - DVector::from_vec(vec![0.0, -1.0, -1.5])).amax() < 1e-9);
            assert_eq!(dynamics.stratonovich_drift(&z).unwrap().amax(), 0.0);
        }
        assert!(compile(&sys).uses_linear_fast_path());
        let nested = ito_correction(&sys, &z).unwrap();
        assert!((nested - DVector::from_vec(vec![0.0, -1.0, -1.5])).amax() < 1e-6);
    }

    #[test]
    fn canonical_constant_diffusion_has_no_correction() {
        let sys = StochasticHamiltonianSystem::new(
            PoissonStructure::canonical(1),
            ScalarField::new(2, |z| 0.5 * z[1] * z[1]),
            vec![ScalarField::coordinate(2, 0)],
        )
        .unwrap();
        let dynamics = compile(&sys);
        let z = [0.4, -1.2];
        assert_eq!(dynamics.diffusion(&z).unwrap().column(0).as_slice(), &[0.0, -1.0]);
        assert_eq!(dynamics.correction(&z).unwrap().amax(), 0.0);
        assert!(ito_correction(&sys, &z).unwrap().amax() < 1e-9);
    }

    #[test]
    fn zero_noise_field_gives_zero_correction() {
        let sys = so3_system(ScalarField::zero(3), vec![ScalarField::zero(3)]);
        assert_eq!(compile(&sys).correction(&[1.0, 2.0, 3.0]).unwrap().amax(), 0.0);
        assert_eq!(ito_correction(&sys, &[1.0, 2.0, 3.0]).unwrap().amax(), 0.0);
    }

    #[test]
    fn convention_factor() {
        let sys = so3_system(ScalarField::zero(3), vec![ScalarField::coordinate(3, 0)]);
        let z = [1.0, 2.0, 3.0];
        let half = compile_with(&sys, ItoConvention::Standard).correction(&z).unwrap();
        let full = compile_with(&sys, ItoConvention::AsPrinted).correction(&z).unwrap();
        assert!((full - half * 2.0).amax() < 1e-12);
        assert_eq!("no_half".parse::<ItoConvention>().unwrap(), ItoConvention::AsPrinted);
        assert!("third".parse::<ItoConvention>().is_err());
    }

    #[test]
    fn correction_matches_jacobian_of_diffusion_oracle() {
        // Nonlinear noise on so(3), no analytic derivatives anywhere.
        let noise = vec![
            ScalarField::new(3, |z| z[0] * z[1] + 0.5 * z[2]),
            ScalarField::new(3, |z| (0.3 * z[2]).sin() + z[0] * z[0]),
        ];
        let sys = so3_system(ScalarField::new(3, |z| z[0] * z[2]), noise.clone());
        let dynamics = compile(&sys);
        assert!(!dynamics.uses_linear_fast_path());
        for z in uniform_points(41, 20, 3, 2.0) {
            let mut oracle = DVector::zeros(3);
            for f in &noise {
                let p = sys.poisson().clone();
                let column: Vec<ScalarField> = (0..3)
                    .map(|i| {
                        let (p, f) = (p.clone(), f.clone());
                        ScalarField::new(3, move |w| {
                            bracket(&p, &ScalarField::coordinate(3, i), &f, w).unwrap_or(f64::NAN)
                        })
                    })
                    .collect();
                let jac = fd_jacobian(&column, &z).unwrap();
                let x = p.matrix(&z).unwrap() * fd_gradient(f, &z, None).unwrap();
                oracle += jac * x;
            }
            oracle *= 0.5;
            let compiled = dynamics.correction(&z).unwrap();
            let nested = ito_correction(&sys, &z).unwrap();
            assert!(rel(&compiled, &oracle) < 1e-5, "{compiled} vs {oracle}");
            assert!(rel(&nested, &oracle) < 1e-5, "{nested} vs {oracle}");
        }
    }

    #[test]
    fn analytic_and_difference_routes_agree() {
        let poly = crate::polynomial::Polynomial::zero()
            .with_term(vec![1, 1, 0], 1.0)
            .with_term(vec![0, 0, 2], -0.5);
        let f = poly.to_field(3).unwrap();
        assert!(f.has_hessian());
        let sys = so3_system(ScalarField::zero(3), vec![f.clone()]);
        let stripped = ScalarField::new(3, move |z| poly.eval(z));
        let sys_fd = so3_system(ScalarField::zero(3), vec![stripped]);
        for z in uniform_points(42, 20, 3, 2.0) {
            let a = compile(&sys).correction(&z).unwrap();
            let b = compile(&sys_fd).correction(&z).unwrap();
            assert!(rel(&a, &b) < 1e-6);
        }
    }

    #[test]
    fn casimir_orthogonality() {
        let sys = so3_system(
            ScalarField::new(3, |z| 0.5 * (z[0] * z[0] + z[1] * z[1] / 2.0 + z[2] * z[2] / 3.0)),
            vec![ScalarField::new(3, |z| z[0].sin() * z[1]), ScalarField::coordinate(3, 2)],
        );
        let dynamics = compile(&sys);
        for z in uniform_points(43, 30, 3, 2.0) {
            let grad_c = DVector::from_column_slice(&z) * 2.0;
            assert!(grad_c.dot(&dynamics.stratonovich_drift(&z).unwrap()).abs() < 1e-7);
            let sigma = dynamics.diffusion(&z).unwrap();
            for s in 0..2 {
                assert!(grad_c.dot(&sigma.column(s)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn fast_path_matches_generic_on_so3() {
        let alphas = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
        let fast = linear_fast_path(&Tensor3::from_fn(3, 3, 3, levi_civita), &ScalarField::zero(3), &alphas, ItoConvention::Standard)
            .unwrap();
        let generic = compile_generic(&so3_system(ScalarField::zero(3), vec![ScalarField::coordinate(3, 0)]), ItoConvention::Standard);
        let z = [1.0, 2.0, 3.0];
        assert!(rel(&fast.correction(&z).unwrap(), &generic.correction(&z).unwrap()) < 1e-8);
        assert_eq!(fast.diffusion(&z).unwrap(), generic.diffusion(&z).unwrap());
        assert_eq!(fast.stratonovich_drift(&z).unwrap().amax(), 0.0);
    }

    #[test]
    fn fast_path_with_zero_alphas_is_deterministic_lie_poisson() {
        let h = ScalarField::new(3, |z| z[0] * z[0] + z[1] * z[2]);
        let fast = linear_fast_path(&Tensor3::from_fn(3, 3, 3, levi_civita), &h, &DMatrix::zeros(2, 3), ItoConvention::Standard)
            .unwrap();
        let z = [0.5, -1.0, 2.0];
        assert_eq!(fast.correction(&z).unwrap().amax(), 0.0);
        assert_eq!(fast.diffusion(&z).unwrap().amax(), 0.0);
        let expected = so3().matrix(&z).unwrap() * fd_gradient(&h, &z, None).unwrap();
        assert!((fast.stratonovich_drift(&z).unwrap() - expected).amax() < 1e-12);
    }

    #[test]
    fn fast_path_matches_generic_on_random_linear_systems() {
        let mut rng = NoiseStream::new(44);
        for _ in 0..50 {
            let n = 2 + (rng.next_u64() % 3) as usize;
            let r = 1 + (rng.next_u64() % 3) as usize;
            let mut t = Tensor3::zeros(n, n, n);
            for i in 0..n {
                for j in i + 1..n {
                    for k in 0..n {
                        let v = rng.normal();
                        t[(i, j, k)] = v;
                        t[(j, i, k)] = -v;
                    }
                }
            }
            let alphas = DMatrix::from_fn(r, n, |_, _| rng.normal());
            let h = ScalarField::zero(n);
            let fast = linear_fast_path(&t, &h, &alphas, ItoConvention::Standard).unwrap();
            let noise = (0..r).map(|a| ScalarField::linear(alphas.row(a).iter().copied().collect())).collect();
            let sys = StochasticHamiltonianSystem::new(linear_lie_poisson(&t).unwrap(), h, noise).unwrap();
            let generic = compile_generic(&sys, ItoConvention::Standard);
            let z: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            assert!(rel(&fast.correction(&z).unwrap(), &generic.correction(&z).unwrap()) < 1e-8);
            let d = (fast.diffusion(&z).unwrap() - generic.diffusion(&z).unwrap()).amax();
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn dimension_errors() {
        assert!(StochasticHamiltonianSystem::new(so3(), ScalarField::zero(2), vec![]).is_err());
        let err = StochasticHamiltonianSystem::new(so3(), ScalarField::zero(3), vec![ScalarField::zero(4)]).unwrap_err();
        assert!(err.to_string().contains("noise Hamiltonian 1"));
        let dynamics = compile(&so3_system(ScalarField::zero(3), vec![]));
        assert!(dynamics.ito_drift(&[1.0, f64::NAN, 0.0]).is_err());
    }
}
