//! Hyperkähler cones from a single real potential `L(z, z̄, x)`.
//!
//! Base chart as in [`crate::gh`]: `x^I_i` at `3I + i`, with
//! `x^I = x^I_1` and `z^I = ½(x^I_2 + i x^I_3)`. Hence
//! `∂_z = ∂_2 − i∂_3`, `∂_z̄ = ∂_2 + i∂_3` and `dz = ½(dx_2 + i dx_3)`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::excalc::{jacobian, DerivScheme, Field, Gen, GenericMap, SharedField};
use crate::gh::{invert, GHData};
use crate::scalar::{Dual, Scalar, C64};

pub const MAX_NEWTON: usize = 100;

pub trait LPotential: Send + Sync {
    fn m(&self) -> usize;
    /// `L` at a base point of length `3m`.
    fn eval<T: Scalar>(&self, x: &[T]) -> T;
}

#[derive(Clone, Debug)]
pub struct LegendreResult {
    pub kappa: f64,
    pub x: Vec<f64>,
    pub u: Vec<C64>,
}

/// `∂_a L` at any scalar type.
pub fn d1_at<T: Scalar, L: LPotential + ?Sized>(l: &L, x: &[T], a: usize) -> T {
    let p: Vec<Dual<T>> = x
        .iter()
        .enumerate()
        .map(|(k, &v)| if k == a { Dual::var(v) } else { Dual::constant(v) })
        .collect();
    l.eval(&p).d
}

/// `∂_a ∂_b L` at any scalar type.
pub fn d2_at<T: Scalar, L: LPotential + ?Sized>(l: &L, x: &[T], a: usize, b: usize) -> T {
    let p: Vec<Dual<Dual<T>>> = x
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let inner = if k == b { Dual::var(v) } else { Dual::constant(v) };
            let d = if k == a { Dual::constant(T::one()) } else { Dual::constant(T::zero()) };
            Dual::new(inner, d)
        })
        .collect();
    l.eval(&p).d.d
}

pub fn l_grad<L: LPotential + ?Sized>(l: &L, x: &[f64]) -> Vec<f64> {
    (0..x.len()).map(|a| d1_at(l, x, a)).collect()
}

pub fn l_hessian<L: LPotential + ?Sized>(l: &L, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = d2_at(l, x, a, b);
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
    }
    h
}

/// `L_{x^I}`.
pub fn l_x<L: LPotential + ?Sized>(l: &L, x: &[f64]) -> Vec<f64> {
    (0..l.m()).map(|i| d1_at(l, x, 3 * i)).collect()
}

/// `L_{x^I x^J}`.
pub fn l_xx<L: LPotential + ?Sized>(l: &L, x: &[f64]) -> DMatrix<f64> {
    let m = l.m();
    DMatrix::from_fn(m, m, |i, j| d2_at(l, x, 3 * i, 3 * j))
}

/// `L_{x^I z^J}` as `[I][J]`.
pub fn l_xz<L: LPotential + ?Sized>(l: &L, x: &[f64]) -> Vec<Vec<C64>> {
    let m = l.m();
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| Complex::new(d2_at(l, x, 3 * i, 3 * j + 1), -d2_at(l, x, 3 * i, 3 * j + 2)))
                .collect()
        })
        .collect()
}

/// Sup residual of `L_{x^Ix^J} = −L_{z^Iz̄^J}` and `L_{x^Iz^J} = L_{x^Jz^I}`.
pub fn constraints_residual<L: LPotential + ?Sized>(l: &L, x: &[f64]) -> f64 {
    let m = l.m();
    let h = l_hessian(l, x);
    let mut r: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            let (xi, ai, bi) = (3 * i, 3 * i + 1, 3 * i + 2);
            let (xj, aj, bj) = (3 * j, 3 * j + 1, 3 * j + 2);
            // L_{zz̄} = L_aa + L_bb + i(L_ab − L_ba)
            r = r.max((h[(xi, xj)] + h[(ai, aj)] + h[(bi, bj)]).abs());
            r = r.max((h[(ai, bj)] - h[(bi, aj)]).abs());
            r = r.max((h[(xi, aj)] - h[(xj, ai)]).abs());
            r = r.max((h[(xi, bj)] - h[(xj, bi)]).abs());
        }
    }
    r
}

/// Residuals of `L₁(L) = 0` and `L₀(L) = L`.
pub fn hkc_parts<L: LPotential + ?Sized>(l: &L, x: &[f64]) -> (f64, f64) {
    let g = l_grad(l, x);
    let v = l.eval(x);
    let (mut rot, mut euler) = (0.0, 0.0);
    for i in 0..l.m() {
        let (a, b) = (x[3 * i + 1], x[3 * i + 2]);
        rot += a * g[3 * i + 2] - b * g[3 * i + 1];
        euler += x[3 * i] * g[3 * i] + a * g[3 * i + 1] + b * g[3 * i + 2];
    }
    (rot.abs(), (euler - v).abs())
}

pub fn hkc_residual<L: LPotential + ?Sized>(l: &L, x: &[f64]) -> f64 {
    let (a, b) = hkc_parts(l, x);
    a.max(b)
}

fn assemble(z: &[C64], xs: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; 3 * z.len()];
    for (i, zi) in z.iter().enumerate() {
        p[3 * i] = xs[i];
        p[3 * i + 1] = 2.0 * zi.re;
        p[3 * i + 2] = 2.0 * zi.im;
    }
    p
}

/// Solves `L_x(z, x) = 2 Im u` by Newton's method from `guess`.
pub fn transform_from<L: LPotential + ?Sized>(
    l: &L,
    z: &[C64],
    u: &[C64],
    guess: &[f64],
) -> Result<LegendreResult> {
    let m = l.m();
    if z.len() != m || u.len() != m || guess.len() != m {
        return Err(Error::Invalid("Legendre transform: length mismatch"));
    }
    let target: Vec<f64> = u.iter().map(|c| 2.0 * c.im).collect();
    let mut xs = guess.to_vec();
    let mut resid = f64::INFINITY;
    for _ in 0..MAX_NEWTON {
        let p = assemble(z, &xs);
        let f = DVector::from_iterator(m, l_x(l, &p).iter().zip(&target).map(|(a, b)| a - b));
        resid = f.amax();
        let jinv = invert(l_xx(l, &p), "L_xx")?;
        let step = jinv * f;
        for (xv, s) in xs.iter_mut().zip(step.iter()) {
            *xv -= s;
        }
        let scale = xs.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        if step.amax() < 1e-12 * scale {
            let p = assemble(z, &xs);
            let kappa = l.eval(&p) - xs.iter().zip(&target).map(|(a, t)| a * t).sum::<f64>();
            return Ok(LegendreResult { kappa, x: xs, u: u.to_vec() });
        }
    }
    Err(Error::NoConvergence { iterations: MAX_NEWTON, residual: resid })
}

/// Legendre transform with the default initial guess `x^I = 2 Im u_I`.
pub fn transform<L: LPotential + ?Sized>(l: &L, z: &[C64], u: &[C64]) -> Result<LegendreResult> {
    let g: Vec<f64> = u.iter().map(|c| 2.0 * c.im).collect();
    transform_from(l, z, u, &g)
}

/// Newton solver that starts from its last successful solution.
#[derive(Clone, Debug, Default)]
pub struct LegendreSolver {
    last: Option<Vec<f64>>,
}

impl LegendreSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn solve<L: LPotential + ?Sized>(&mut self, l: &L, z: &[C64], u: &[C64]) -> Result<LegendreResult> {
        let res = match &self.last {
            Some(g) if g.len() == u.len() => transform_from(l, z, u, &g.clone()),
            _ => transform(l, z, u),
        }?;
        self.last = Some(res.x.clone());
        Ok(res)
    }

    pub fn with_guess(x: Vec<f64>) -> Self {
        LegendreSolver { last: Some(x) }
    }

    pub fn reset(&mut self) {
        self.last = None;
    }
}

/// `U_IJ = −½ L_{x^Ix^J}`.
pub fn higgs_from_l<L: LPotential + ?Sized>(l: &L, x: &[f64]) -> DMatrix<f64> {
    l_xx(l, x) * -0.5
}

/// `Im(L_{x^Iz^J} dz^J)` on the `4m` total chart.
fn lxz_forms_at<T: Scalar, L: LPotential + ?Sized>(l: &L, x: &[T]) -> Vec<T> {
    let m = l.m();
    let n = 4 * m;
    let half = T::cst(0.5);
    let mut out = vec![T::zero(); m * n];
    for i in 0..m {
        for j in 0..m {
            // L_{x z} = L_{xa} − i L_{xb}; Im(c dz) = ½ Im c da + ½ Re c db
            out[i * n + 3 * j + 1] = -(d2_at(l, &x[..3 * m], 3 * i, 3 * j + 2)) * half;
            out[i * n + 3 * j + 2] = d2_at(l, &x[..3 * m], 3 * i, 3 * j + 1) * half;
        }
    }
    out
}

/// `A_I = Im(L_{x^Iz^J} dz^J) + dφ_I` as rows of length `4m`.
pub fn connection_from_l<L: LPotential + ?Sized>(l: &L, phi: &dyn Field, p: &[f64]) -> Vec<Vec<f64>> {
    let m = l.m();
    let n = 4 * m;
    let base = lxz_forms_at(l, p);
    let dphi = jacobian(phi, p, DerivScheme::Dual);
    (0..m)
        .map(|i| (0..n).map(|mu| base[i * n + mu] + dphi[i][mu]).collect())
        .collect()
}

/// `u_I = ψ_I + φ_I + (i/2) L_{x^I}`.
pub fn u_coords<L: LPotential + ?Sized>(l: &L, psi: &[f64], phi: &[f64], x: &[f64]) -> Vec<C64> {
    let lx = l_x(l, x);
    (0..l.m()).map(|i| Complex::new(psi[i] + phi[i], 0.5 * lx[i])).collect()
}

/// Max of `|(L₁+iL₀)u_I|` and `|(L₂+iL₃)u_I|`; `u` maps the `4m` total
/// chart to `(Re, Im)` pairs, one per function.
pub fn gauge_kernel_residual(m: usize, u: &dyn Field, p: &[f64], scheme: DerivScheme) -> f64 {
    let jac = jacobian(u, p, scheme);
    let ii = Complex::new(0.0, 1.0);
    let mut r: f64 = 0.0;
    for k in 0..jac.len() / 2 {
        let d = |mu: usize| Complex::new(jac[2 * k][mu], jac[2 * k + 1][mu]);
        let mut a = Complex::new(0.0, 0.0);
        let mut b = Complex::new(0.0, 0.0);
        for j in 0..m {
            let zj = Complex::new(0.5 * p[3 * j + 1], 0.5 * p[3 * j + 2]);
            let xj = p[3 * j];
            let dx = d(3 * j);
            let dzb = d(3 * j + 1) + ii * d(3 * j + 2);
            a += zj.conj() * dzb * 2.0 + dx * xj;
            b += zj * dx * 2.0 - dzb * xj;
        }
        r = r.max((ii * a).norm()).max((ii * b).norm());
    }
    r
}

/// Zero shifts on the `4m` chart.
#[derive(Clone, Copy, Debug)]
pub struct NoShift(pub usize);

impl GenericMap for NoShift {
    fn apply<T: Scalar>(&self, _: &[T]) -> Vec<T> {
        vec![T::zero(); self.0]
    }
}

struct LtHiggs<L>(Arc<L>);
struct LtConn<L, P>(Arc<L>, Arc<P>);

impl<L: LPotential> GenericMap for LtHiggs<L> {
    fn apply<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let m = self.0.m();
        let mut u = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                u.push(d2_at(self.0.as_ref(), x, 3 * i, 3 * j) * T::cst(-0.5));
            }
        }
        u
    }
}

impl<L: LPotential, P: GenericMap> GenericMap for LtConn<L, P> {
    fn apply<T: Scalar>(&self, p: &[T]) -> Vec<T> {
        let m = self.0.m();
        let n = 4 * m;
        let mut out = lxz_forms_at(self.0.as_ref(), p);
        for mu in 0..n {
            let q: Vec<Dual<T>> = p
                .iter()
                .enumerate()
                .map(|(k, &v)| if k == mu { Dual::var(v) } else { Dual::constant(v) })
                .collect();
            let phi = self.1.apply(&q);
            for i in 0..m {
                out[i * n + mu] = out[i * n + mu] + phi[i].d;
            }
        }
        out
    }
}

/// Gibbons-Hawking data `U = −½L_xx`, `A = Im(L_xz dz) + dφ` with exact jets.
pub fn gh_from_l<L: LPotential + 'static, P: GenericMap + 'static>(
    l: Arc<L>,
    phi: Arc<P>,
    scheme: DerivScheme,
) -> GHData {
    let m = l.m();
    let higgs: SharedField = Arc::new(Gen(LtHiggs(l.clone())));
    let conn: SharedField = Arc::new(Gen(LtConn(l, phi)));
    GHData::new(m, higgs, conn, scheme)
}
