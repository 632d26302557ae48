//! Four-dimensional case: potentials `𝒰(ρ₁, ρ₂)` on the upper half-plane.
//!
//! The chart is `(ρ₁, ρ₂, ψ₀, ψ₁)`, the same as the `n = 1` chart of
//! [`crate::qk`], and `𝒜 = 0` throughout.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::excalc::{hessians, jacobian, sym11, DerivScheme, Field, Gen, GenericMap, Plain, SharedField};
use crate::imhp::{cov_deriv, InhomPoint, Section};
use crate::qk::{qf_conj, qwedge, QForm, ReducedData};
use crate::scalar::{Dual, Scalar, D1, D2};

#[derive(Clone)]
pub struct CPPotential {
    /// `(ρ₁, ρ₂) ↦ [𝒰]`.
    pub field: SharedField,
    pub scheme: DerivScheme,
}

struct Rho1;
impl GenericMap for Rho1 {
    fn apply<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        vec![x[0]]
    }
}

struct LinearCombo(f64, f64);
impl GenericMap for LinearCombo {
    fn apply<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        vec![T::cst(self.0) * x[0] + T::cst(self.1) * x[1] * x[1]]
    }
}

struct Monomial2(f64);
impl GenericMap for Monomial2 {
    fn apply<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        vec![T::cst(self.0) * x[1]]
    }
}

struct Constant(f64);
impl GenericMap for Constant {
    fn apply<T: Scalar>(&self, _x: &[T]) -> Vec<T> {
        vec![T::cst(self.0)]
    }
}

impl CPPotential {
    pub fn from_generic<M: GenericMap + 'static>(m: M) -> Self {
        CPPotential { field: Arc::new(Gen(m)), scheme: DerivScheme::Dual }
    }
    /// Black-box potential; derivatives by central differences.
    pub fn plugin(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static, h: f64) -> Self {
        CPPotential { field: Arc::new(Plain(move |x: &[f64]| vec![f(x[0], x[1])])), scheme: DerivScheme::Central { h } }
    }
    pub fn rho1() -> Self {
        Self::from_generic(Rho1)
    }
    pub fn rho2sq() -> Self {
        Self::from_generic(LinearCombo(0.0, 1.0))
    }
    pub fn one() -> Self {
        Self::from_generic(Constant(1.0))
    }
    /// `𝒰 = ρ₂`, which violates the constraint.
    pub fn rho2() -> Self {
        Self::from_generic(Monomial2(1.0))
    }
    /// `a ρ₁ + b ρ₂²`.
    pub fn linear_combo(a: f64, b: f64) -> Self {
        Self::from_generic(LinearCombo(a, b))
    }

    pub fn value(&self, rho: [f64; 2]) -> f64 {
        self.field.eval(&rho)[0]
    }
    pub fn grad(&self, rho: [f64; 2]) -> [f64; 2] {
        let j = jacobian(self.field.as_ref(), &rho, self.scheme);
        [j[0][0], j[0][1]]
    }
    pub fn hessian(&self, rho: [f64; 2]) -> [[f64; 2]; 2] {
        let h = hessians(self.field.as_ref(), &rho, self.scheme);
        [[h[0][0][0], h[0][0][1]], [h[0][1][0], h[0][1][1]]]
    }
    /// `ε(v₁, v₂) = 𝒰𝒰_{ρ₂} − ρ₂(𝒰_{ρ₁}² + 𝒰_{ρ₂}²)`.
    pub fn eps_v(&self, rho: [f64; 2]) -> f64 {
        let u = self.value(rho);
        let [u1, u2] = self.grad(rho);
        u * u2 - rho[1] * (u1 * u1 + u2 * u2)
    }
    /// Sign of the scalar curvature for a positive definite metric.
    pub fn curvature_sign(&self, rho: [f64; 2]) -> f64 {
        self.eps_v(rho).signum()
    }
}

fn check_domain(rho: [f64; 2]) -> Result<()> {
    if rho[1] > 0.0 && rho[0].is_finite() && rho[1].is_finite() {
        Ok(())
    } else {
        Err(Error::Domain("ρ₂ must be positive"))
    }
}

/// `|ρ₂(𝒰_{ρ₁ρ₁} + 𝒰_{ρ₂ρ₂}) − 𝒰_{ρ₂}|`.
pub fn constraint_residual(u: &CPPotential, rho: [f64; 2]) -> f64 {
    let h = u.hessian(rho);
    let g = u.grad(rho);
    (rho[1] * (h[0][0] + h[1][1]) - g[1]).abs()
}

struct OverSqrt(SharedField);

impl OverSqrt {
    fn go<T: Scalar>(x: &[T], u: Option<Vec<T>>) -> Option<Vec<T>> {
        Some(vec![u?[0] / x[1].sqrt()])
    }
}

impl Field for OverSqrt {
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        Self::go(x, Some(self.0.eval(x))).unwrap_or_default()
    }
    fn eval_d1(&self, x: &[D1]) -> Option<Vec<D1>> {
        Self::go(x, self.0.eval_d1(x))
    }
    fn eval_d2(&self, x: &[D2]) -> Option<Vec<D2>> {
        Self::go(x, self.0.eval_d2(x))
    }
}

/// `|ρ₂²(∂²_{ρ₁} + ∂²_{ρ₂}) f − ¾ f|` for `f = 𝒰/√ρ₂`.
pub fn eigenfunction_residual(u: &CPPotential, rho: [f64; 2]) -> f64 {
    let f = OverSqrt(u.field.clone());
    let h = hessians(&f, &rho, u.scheme);
    let v = f.eval(&rho)[0];
    (rho[1] * rho[1] * (h[0][0][0] + h[0][1][1]) - 0.75 * v).abs()
}

/// `𝒰_IJ` from `𝒰_IJ ρ^I_i ρ^J_j = ½[[𝒰−ρ₂𝒰_{ρ₂}, ρ₂𝒰_{ρ₁}], [ρ₂𝒰_{ρ₁}, ρ₂𝒰_{ρ₂}]]`,
/// row-major.
fn higgs_generic<T: Scalar>(r1: T, r2: T, u: T, u1: T, u2: T) -> [T; 4] {
    let half = T::cst(0.5);
    let m00 = half * (u - r2 * u2);
    let m01 = half * r2 * u1;
    let m11 = half * r2 * u2;
    // ρ^I_i = R[I][i] with R = [[1, 0], [ρ₁, ρ₂]]; 𝒰 = R⁻ᵀ M R⁻¹.
    let a = r1 / r2;
    let b = T::one() / r2;
    let x00 = m00 - T::cst(2.0) * a * m01 + a * a * m11;
    let x01 = b * (m01 - a * m11);
    let x11 = b * b * m11;
    [x00, x01, x01, x11]
}

pub fn higgs_4d(u: &CPPotential, rho: [f64; 2]) -> Result<DMatrix<f64>> {
    check_domain(rho)?;
    let [u1, u2] = u.grad(rho);
    let v = higgs_generic(rho[0], rho[1], u.value(rho), u1, u2);
    Ok(DMatrix::from_row_slice(2, 2, &v))
}

/// `𝒰_IJ = ¼ ∇⃗_I·∇⃗_J 𝒰` through two covariant derivatives.
pub fn higgs_from_hessian(u: &CPPotential, rho: [f64; 2]) -> Result<DMatrix<f64>> {
    check_domain(rho)?;
    let s = Section::new(1, 1, 0, 1, u.field.clone(), u.scheme)?;
    let nn = cov_deriv(&cov_deriv(&s)?)?;
    let v = nn.at(&InhomPoint::new(1, rho.to_vec())?);
    // layout [J][I][i][j]
    Ok(DMatrix::from_fn(2, 2, |i, j| 0.25 * (0..3).map(|a| v[((j * 2 + i) * 3 + a) * 3 + a]).sum::<f64>()))
}

struct CpHiggs(CPPotential);

impl Field for CpHiggs {
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let u = &self.0;
        let r = [x[0], x[1]];
        let [u1, u2] = u.grad(r);
        higgs_generic(x[0], x[1], u.value(r), u1, u2).to_vec()
    }
    fn eval_d1(&self, x: &[D1]) -> Option<Vec<D1>> {
        let f = &self.0.field;
        if matches!(self.0.scheme, DerivScheme::Central { .. }) {
            return None;
        }
        let mut g = [D1::cst(0.0); 2];
        let mut val = D1::cst(0.0);
        for (k, gk) in g.iter_mut().enumerate() {
            let z: Vec<D2> =
                x.iter().enumerate().map(|(i, &xi)| Dual::new(xi, D1::cst(if i == k { 1.0 } else { 0.0 }))).collect();
            let r = f.eval_d2(&z)?;
            val = r[0].v;
            *gk = r[0].d;
        }
        Some(higgs_generic(x[0], x[1], val, g[0], g[1]).to_vec())
    }
}

struct ZeroConn;
impl GenericMap for ZeroConn {
    fn apply<T: Scalar>(&self, _x: &[T]) -> Vec<T> {
        vec![T::zero(); 8]
    }
}

/// Reduced data with Higgs field from [`higgs_4d`] and `𝒜 = 0`.
pub fn reduced_data(u: &CPPotential, s: f64) -> Result<ReducedData> {
    let higgs = Section::new(1, -1, 0, 4, Arc::new(CpHiggs(u.clone())), u.scheme)?;
    Ok(ReducedData { n: 1, higgs, conn: Arc::new(Gen(ZeroConn)), s, scheme: u.scheme })
}

/// `ξ = (dρ₁ i + dρ₂ j)/(2ρ₂) + (ε(v₁, dψ) + ε(v₂, dψ) k)/ε(v₁, v₂)` and the
/// prefactor `ρ₂ ε(v₁, v₂)/𝒰²`.
pub fn xi_form(u: &CPPotential, p: &[f64]) -> Result<(QForm, f64)> {
    let rho = [p[0], p[1]];
    check_domain(rho)?;
    let val = u.value(rho);
    if val == 0.0 {
        return Err(Error::Domain("potential vanishes"));
    }
    let [u1, u2] = u.grad(rho);
    let (r1, r2) = (rho[0], rho[1]);
    let v1 = [val - r1 * u1 - r2 * u2, u1];
    let v2 = [r2 * u1 - r1 * u2, u2];
    let e = v1[0] * v2[1] - v1[1] * v2[0];
    if e.abs() <= 1e-14 * (1.0 + val * val) {
        return Err(Error::Degenerate("ε(v₁, v₂) vanishes; curvature sign undefined"));
    }
    // ε(v, dψ) = v⁰ dψ₁ − v¹ dψ₀
    let xi = [
        vec![0.0, 0.0, -v1[1] / e, v1[0] / e],
        vec![1.0 / (2.0 * r2), 0.0, 0.0, 0.0],
        vec![0.0, 1.0 / (2.0 * r2), 0.0, 0.0],
        vec![0.0, 0.0, -v2[1] / e, v2[0] / e],
    ];
    Ok((xi, r2 * e / (val * val)))
}

/// `sω = ρ₂ε(v₁,v₂)/𝒰² ξ̄∧ξ` (imaginary parts) and `sg = ρ₂ε(v₁,v₂)/𝒰² |ξ|²`.
pub fn cp_metric_at(u: &CPPotential, p: &[f64]) -> Result<([DMatrix<f64>; 3], DMatrix<f64>)> {
    let (xi, c) = xi_form(u, p)?;
    let w = qwedge(&qf_conj(&xi), &xi);
    let mut g = DMatrix::zeros(4, 4);
    for comp in &xi {
        g += sym11(comp, comp);
    }
    Ok((core::array::from_fn(|i| &w[i + 1] * c), g * c))
}

/// `dθ_i + ε_ijk θ_j∧θ_k − sω_i` with `θ⃗` from the reduced data and `sω`
/// from [`cp_metric_at`].
pub fn cp_einstein_residual(u: &CPPotential, p: &[f64]) -> Result<f64> {
    let rd = reduced_data(u, 1.0)?;
    let st = crate::qk::qk_structure(&rd);
    let (om, _) = cp_metric_at(u, p)?;
    let th = st.theta_at(p)?;
    let dth = crate::qk::d_theta(&st, p);
    let mut r: f64 = 0.0;
    for i in 0..3 {
        let mut lhs = dth[i].clone();
        for j in 0..3 {
            for k in 0..3 {
                let e = crate::quatmath::eps(i, j, k);
                if e != 0.0 {
                    lhs += crate::excalc::wedge11(&th[j], &th[k]) * e;
                }
            }
        }
        r = r.max(crate::excalc::amax(&(lhs - &om[i])));
    }
    Ok(r)
}
