//! From a homogeneous prepotential `F(η¹, …, ηⁿ)` to the hyperkähler cone
//! over the c-map space and down to its quaternionic Kähler base.
//!
//! Upstairs chart: the Gibbons-Hawking chart of [`crate::gh`] with
//! `m = n + 1` points, index `0` for the distinguished point. Downstairs
//! chart: the `4n` chart of [`crate::qk`], on which `ψ̃^A = ρ^A_1` and
//! `𝒳^A = ½(ρ^A_2 + iρ^A_3)`.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::excalc::{
    bracket, jacobian, sym11, DerivScheme, Gen, GenericMap, SharedField, VectorField,
};
use crate::gh::{invert, rotate_frame, xi, GHData};
use crate::imhp::{full_slots, RestrictedChart, Section};
use crate::legendre::{d1_at, gh_from_l, LPotential};
use crate::qk::ReducedData;
use crate::scalar::{Dual, HoloFn, Scalar, C64};

// ---------------------------------------------------------------------------
// complex helpers

fn cc<T: Scalar>(c: C64) -> Complex<T> {
    Complex::new(T::cst(c.re), T::cst(c.im))
}

fn czero<T: Scalar>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

fn cone<T: Scalar>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

fn conj<T: Scalar>(z: Complex<T>) -> Complex<T> {
    Complex::new(z.re, -z.im)
}

fn cpowi<T: Scalar>(z: Complex<T>, p: i32) -> Complex<T> {
    let mut acc = cone::<T>();
    for _ in 0..p.unsigned_abs() {
        acc = acc * z;
    }
    if p < 0 {
        cone::<T>() / acc
    } else {
        acc
    }
}

fn abs2<T: Scalar>(z: Complex<T>) -> T {
    z.re * z.re + z.im * z.im
}


// ---------------------------------------------------------------------------
// prepotentials

/// User-supplied holomorphic prepotential with its derivatives.
pub struct PluginPrepotential {
    pub n: usize,
    /// `F` as a one-element vector.
    pub f: Arc<HoloFn>,
    pub fa: Arc<HoloFn>,
    /// Row-major `F_AB`.
    pub fab: Arc<HoloFn>,
    /// Derivatives were produced by differencing `F`.
    pub derived: bool,
}

#[derive(Clone)]
pub enum Family {
    /// `F = ½ C_AB η^A η^B`, `C` symmetric, row-major.
    Quadratic(Vec<C64>),
    /// `F = c Π (η^A)^{p_A}` with `Σ p_A = 2`.
    Monomial { c: C64, powers: Vec<i32> },
    Plugin(Arc<PluginPrepotential>),
}

#[derive(Clone)]
pub struct Prepotential {
    pub n: usize,
    pub family: Family,
}

fn holo_diff(f: Arc<HoloFn>, n: usize, stride: usize) -> Arc<HoloFn> {
    // fourth-order central difference along each complex direction
    Arc::new(move |eta: &[C64]| {
        let scale = eta.iter().fold(1.0f64, |a, z| a.max(z.norm()));
        let h = 1e-3 * scale;
        let mut out = vec![Complex::new(0.0, 0.0); stride * n];
        for b in 0..n {
            let at = |s: f64| {
                let mut e = eta.to_vec();
                e[b] += Complex::new(s, 0.0);
                f(&e)
            };
            let (p1, m1, p2, m2) = (at(h), at(-h), at(2.0 * h), at(-2.0 * h));
            for a in 0..stride {
                out[a * n + b] = (8.0 * (p1[a] - m1[a]) - (p2[a] - m2[a])) / (12.0 * h);
            }
        }
        out
    })
}

impl Prepotential {
    pub fn quadratic(n: usize, c: Vec<C64>) -> Result<Self> {
        if c.len() != n * n || n == 0 {
            return Err(Error::Invalid("quadratic prepotential needs an n×n matrix"));
        }
        for a in 0..n {
            for b in 0..n {
                if (c[a * n + b] - c[b * n + a]).norm() > 1e-14 * (1.0 + c[a * n + b].norm()) {
                    return Err(Error::Invalid("quadratic prepotential matrix must be symmetric"));
                }
            }
        }
        Ok(Prepotential { n, family: Family::Quadratic(c) })
    }

    /// `F = (i c/2) Σ_A s_A (η^A)²`.
    pub fn diagonal(c: f64, signs: &[f64]) -> Self {
        let n = signs.len();
        let mut m = vec![Complex::new(0.0, 0.0); n * n];
        for (a, s) in signs.iter().enumerate() {
            m[a * n + a] = Complex::new(0.0, c * s);
        }
        Prepotential { n, family: Family::Quadratic(m) }
    }

    pub fn monomial(c: C64, powers: Vec<i32>) -> Result<Self> {
        if powers.is_empty() || powers.iter().sum::<i32>() != 2 {
            return Err(Error::Invalid("monomial prepotential powers must sum to 2"));
        }
        Ok(Prepotential { n: powers.len(), family: Family::Monomial { c, powers } })
    }

    /// Plug-in with analytic first and second derivatives.
    pub fn plugin(n: usize, f: Arc<HoloFn>, fa: Arc<HoloFn>, fab: Arc<HoloFn>) -> Self {
        let p = PluginPrepotential { n, f, fa, fab, derived: false };
        Prepotential { n, family: Family::Plugin(Arc::new(p)) }
    }

    /// Plug-in given by `F` alone; derivatives come from complex differences
    /// and are correspondingly less precise.
    pub fn plugin_from_f(n: usize, f: Arc<HoloFn>) -> Self {
        let fa = holo_diff(f.clone(), n, 1);
        let fab = holo_diff(fa.clone(), n, n);
        let p = PluginPrepotential { n, f, fa, fab, derived: true };
        Prepotential { n, family: Family::Plugin(Arc::new(p)) }
    }

    /// True when derivatives are not analytic.
    pub fn lower_precision(&self) -> bool {
        matches!(&self.family, Family::Plugin(p) if p.derived)
    }

    pub fn f<T: Scalar>(&self, eta: &[Complex<T>]) -> Complex<T> {
        match &self.family {
            Family::Quadratic(c) => {
                let n = self.n;
                let mut acc = czero::<T>();
                for a in 0..n {
                    for b in 0..n {
                        acc = acc + cc::<T>(c[a * n + b]) * eta[a] * eta[b];
                    }
                }
                acc * T::cst(0.5)
            }
            Family::Monomial { c, powers } => {
                let mut acc = cc::<T>(*c);
                for (e, &p) in eta.iter().zip(powers) {
                    acc = acc * cpowi(*e, p);
                }
                acc
            }
            Family::Plugin(p) => T::holo_lift(p.f.as_ref(), eta)[0],
        }
    }

    pub fn fa<T: Scalar>(&self, eta: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.n;
        match &self.family {
            Family::Quadratic(c) => (0..n)
                .map(|a| (0..n).fold(czero::<T>(), |s, b| s + cc::<T>(c[a * n + b]) * eta[b]))
                .collect(),
            Family::Monomial { c, powers } => (0..n)
                .map(|a| {
                    if powers[a] == 0 {
                        return czero();
                    }
                    let mut acc = cc::<T>(*c) * T::cst(powers[a] as f64);
                    for (b, (e, &p)) in eta.iter().zip(powers).enumerate() {
                        acc = acc * cpowi(*e, if a == b { p - 1 } else { p });
                    }
                    acc
                })
                .collect(),
            Family::Plugin(p) => T::holo_lift(p.fa.as_ref(), eta),
        }
    }

    /// Row-major `F_AB`.
    pub fn fab<T: Scalar>(&self, eta: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.n;
        match &self.family {
            Family::Quadratic(c) => c.iter().map(|v| cc::<T>(*v)).collect(),
            Family::Monomial { c, powers } => {
                let mut out = vec![czero::<T>(); n * n];
                for a in 0..n {
                    for b in 0..n {
                        let coef = if a == b {
                            powers[a] * (powers[a] - 1)
                        } else {
                            powers[a] * powers[b]
                        };
                        if coef == 0 {
                            continue;
                        }
                        let mut acc = cc::<T>(*c) * T::cst(coef as f64);
                        for (k, (e, &p)) in eta.iter().zip(powers).enumerate() {
                            let q = p - (k == a) as i32 - (k == b) as i32;
                            acc = acc * cpowi(*e, q);
                        }
                        out[a * n + b] = acc;
                    }
                }
                out
            }
            Family::Plugin(p) => T::holo_lift(p.fab.as_ref(), eta),
        }
    }

    /// Sup residual of `F_A η^A = 2F` and `F_AB η^B = F_A`.
    pub fn homogeneity_residual(&self, eta: &[C64]) -> f64 {
        let n = self.n;
        let f = self.f(eta);
        let fa = self.fa(eta);
        let fab = self.fab(eta);
        let mut r = (fa.iter().zip(eta).map(|(a, e)| a * e).sum::<C64>() - f * 2.0).norm();
        for a in 0..n {
            let s: C64 = (0..n).map(|b| fab[a * n + b] * eta[b]).sum();
            r = r.max((s - fa[a]).norm());
        }
        r
    }

    /// Minus the Legendre transform, when it has a closed form.
    pub fn dual(&self) -> Result<Prepotential> {
        match &self.family {
            Family::Quadratic(c) => {
                let n = self.n;
                let m = DMatrix::from_row_slice(n, n, c);
                let inv = m.try_inverse().ok_or(Error::Singular { what: "prepotential matrix", cond: f64::INFINITY })?;
                let mut v = Vec::with_capacity(n * n);
                for a in 0..n {
                    for b in 0..n {
                        v.push(-inv[(a, b)]);
                    }
                }
                Prepotential::quadratic(n, v)
            }
            _ => Err(Error::Invalid("closed-form dual only for quadratic prepotentials")),
        }
    }

    pub fn im_fab(&self, eta: &[C64]) -> DMatrix<f64> {
        let n = self.n;
        let f = self.fab(eta);
        DMatrix::from_fn(n, n, |a, b| f[a * n + b].im)
    }
}

// ---------------------------------------------------------------------------
// twistor data

/// `η^I(ζ) = z^I/ζ + x^I − z̄^I ζ` for one `I`.
#[derive(Clone, Copy, Debug)]
pub struct TwistorSection {
    pub z: C64,
    pub x: f64,
}

impl TwistorSection {
    pub fn at(&self, zeta: C64) -> C64 {
        self.z / zeta + self.x - self.z.conj() * zeta
    }
    pub fn r(&self) -> f64 {
        (self.x * self.x + 4.0 * self.z.norm_sqr()).sqrt()
    }
}

/// Sections of all `m` points at a base point.
pub fn sections(x: &[f64]) -> Vec<TwistorSection> {
    x.chunks(3)
        .map(|c| TwistorSection { z: Complex::new(0.5 * c[1], 0.5 * c[2]), x: c[0] })
        .collect()
}

/// `(ζ⁰₊, ζ⁰₋)`, the roots of `η⁰`, each from its well-conditioned form.
pub fn roots_zeta0(z0: C64, x0: f64) -> Result<(C64, C64)> {
    let r0 = (x0 * x0 + 4.0 * z0.norm_sqr()).sqrt();
    if r0 == 0.0 {
        return Err(Error::Degenerate("x⃗⁰ = 0"));
    }
    if z0.norm() <= 1e-300 {
        return Err(Error::Degenerate("z⁰ = 0 puts a root at the pole of the twistor sphere"));
    }
    let zb = z0.conj();
    let plus = if x0 >= 0.0 { -2.0 * z0 / (x0 + r0) } else { (x0 - r0) / (2.0 * zb) };
    let minus = if x0 <= 0.0 { -2.0 * z0 / (x0 - r0) } else { (x0 + r0) / (2.0 * zb) };
    Ok((plus, minus))
}

#[derive(Clone, Debug)]
pub struct Kin<T> {
    pub r0: T,
    pub x0: T,
    pub z0: Complex<T>,
    /// `z^A/z⁰`.
    pub w: Vec<Complex<T>>,
    pub chi: Vec<Complex<T>>,
    /// `ψ̃^A = x⃗⁰·x⃗^A/|x⃗⁰|²`.
    pub psit: Vec<T>,
}

/// Everything derived from the base point through the explicit formula for `χ`.
pub fn kin<T: Scalar>(n: usize, x: &[T]) -> Kin<T> {
    let half = T::cst(0.5);
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let r0 = r2.sqrt();
    let x0 = x[0];
    let z0 = Complex::new(x[1] * half, x[2] * half);
    let mut w = Vec::with_capacity(n);
    let mut chi = Vec::with_capacity(n);
    let mut psit = Vec::with_capacity(n);
    for a in 1..=n {
        let za = Complex::new(x[3 * a + 1] * half, x[3 * a + 2] * half);
        let wa = za / z0;
        chi.push(Complex::new(x[3 * a] / r0 - x0 / r0 * wa.re, -wa.im));
        w.push(wa);
        psit.push((x[0] * x[3 * a] + x[1] * x[3 * a + 1] + x[2] * x[3 * a + 2]) / r2);
    }
    Kin { r0, x0, z0, w, chi, psit }
}

/// Domain check for the upstairs formulas.
pub fn check_point(n: usize, x: &[f64]) -> Result<()> {
    if x.len() < 3 * (n + 1) {
        return Err(Error::Invalid("base point too short"));
    }
    let s = sections(&x[..3 * (n + 1)]);
    roots_zeta0(s[0].z, s[0].x)?;
    Ok(())
}

/// `(χ^A, χ̄^A)` from the roots of `η⁰`: `η^A(ζ⁰±)/r⁰`.
pub fn chi(n: usize, x: &[f64]) -> Result<(Vec<C64>, Vec<C64>)> {
    let s = sections(x);
    let (zp, zm) = roots_zeta0(s[0].z, s[0].x)?;
    let r0 = s[0].r();
    let a: Vec<C64> = (1..=n).map(|k| s[k].at(zp) / r0).collect();
    let b: Vec<C64> = (1..=n).map(|k| s[k].at(zm) / r0).collect();
    Ok((a, b))
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn vec3(x: &[f64], i: usize) -> [f64; 3] {
    [x[3 * i], x[3 * i + 1], x[3 * i + 2]]
}

// ---------------------------------------------------------------------------
// the L potential

/// `L = 2r⁰ Im F(χ)`.
#[derive(Clone)]
pub struct CmapL {
    pub prep: Prepotential,
}

impl LPotential for CmapL {
    fn m(&self) -> usize {
        self.prep.n + 1
    }
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let k = kin(self.prep.n, x);
        k.r0 * T::cst(2.0) * self.prep.f(&k.chi).im
    }
}

pub fn l_closed(prep: &Prepotential, x: &[f64]) -> f64 {
    CmapL { prep: prep.clone() }.eval(x)
}

pub const QUAD_POINTS: usize = 2048;

fn circle(f: &dyn Fn(C64) -> C64, c: C64, rad: f64, nq: usize) -> Result<C64> {
    let mut acc = Complex::new(0.0, 0.0);
    for k in 0..nq {
        let e = Complex::from_polar(1.0, 2.0 * PI * k as f64 / nq as f64);
        let v = f(c + e * rad) * e * Complex::new(0.0, rad);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::PoleCollision);
        }
        acc += v;
    }
    Ok(acc * (2.0 * PI / nq as f64))
}

/// Radius for a circle around `c`, halved until the integral is stable so
/// that no other singularity sits inside.
fn stable_radius(f: &dyn Fn(C64) -> C64, c: C64, avoid: &[C64], nq: usize) -> Result<f64> {
    let gap = avoid.iter().map(|p| (p - c).norm()).fold(f64::INFINITY, f64::min);
    if !(gap > 1e-9 * (1.0 + c.norm())) {
        return Err(Error::PoleCollision);
    }
    let mut rad = if gap.is_finite() { 0.5 * gap } else { 0.5 * (1.0 + c.norm()) };
    let mut prev = circle(f, c, rad, nq)?;
    for _ in 0..40 {
        let next = circle(f, c, 0.5 * rad, nq)?;
        if (next - prev).norm() <= 1e-11 * (1.0 + next.norm()) {
            return Ok(rad);
        }
        rad *= 0.5;
        prev = next;
    }
    Err(Error::PoleCollision)
}

/// Centres and radii of the two circles.
#[derive(Clone, Copy, Debug)]
pub struct Contour {
    pub plus: (C64, f64),
    pub minus: (C64, f64),
}

fn eta_at<T: Scalar>(x: &[T], i: usize, zeta: C64) -> Complex<T> {
    let half = T::cst(0.5);
    let z = Complex::new(x[3 * i + 1] * half, x[3 * i + 2] * half);
    let zt = cc::<T>(zeta);
    z / zt + Complex::new(x[3 * i], T::zero()) - conj(z) * zt
}

fn integrand_plus<T: Scalar>(prep: &Prepotential, x: &[T], zeta: C64) -> Complex<T> {
    let eta: Vec<Complex<T>> = (1..=prep.n).map(|a| eta_at(x, a, zeta)).collect();
    prep.f(&eta) / (eta_at(x, 0, zeta) * cc::<T>(zeta))
}

fn integrand_minus<T: Scalar>(prep: &Prepotential, x: &[T], zeta: C64) -> Complex<T> {
    let eta: Vec<Complex<T>> = (1..=prep.n).map(|a| conj(eta_at(x, a, zeta))).collect();
    conj(prep.f(&eta)) / (eta_at(x, 0, zeta) * cc::<T>(zeta))
}

/// Chooses the circles around `ζ⁰±` at a base point.
pub fn contour_for(prep: &Prepotential, x: &[f64], nq: usize) -> Result<Contour> {
    let n = prep.n;
    let s = sections(&x[..3 * (n + 1)]);
    let (zp, zm) = roots_zeta0(s[0].z, s[0].x)?;
    let mut avoid = vec![Complex::new(0.0, 0.0)];
    if let Family::Monomial { powers, .. } = &prep.family {
        for (a, &p) in powers.iter().enumerate() {
            if p < 0 {
                avoid.extend(section_zeros(&s[a + 1]));
            }
        }
    }
    let mut av_p = avoid.clone();
    av_p.push(zm);
    let mut av_m = avoid;
    av_m.push(zp);
    let rp = stable_radius(&|z| integrand_plus(prep, x, z), zp, &av_p, nq)?;
    let rm = stable_radius(&|z| integrand_minus(prep, x, z), zm, &av_m, nq)?;
    Ok(Contour { plus: (zp, rp), minus: (zm, rm) })
}

/// Trapezoid sum of `(1/2π) ∮ dζ/ζ (F(η)/η⁰ − F̄(η)/η⁰)`: anticlockwise
/// around `ζ⁰₊` for the first term, clockwise around `ζ⁰₋` for the second.
pub fn contour_sum<T: Scalar>(prep: &Prepotential, x: &[T], c: &Contour, nq: usize) -> T {
    let mut acc = czero::<T>();
    for k in 0..nq {
        let e = Complex::from_polar(1.0, 2.0 * PI * k as f64 / nq as f64);
        let (zp, rp) = c.plus;
        let (zm, rm) = c.minus;
        acc = acc + integrand_plus(prep, x, zp + e * rp) * cc::<T>(e * Complex::new(0.0, rp));
        // clockwise traversal of −F̄/(ζη⁰) is the anticlockwise one of F̄/(ζη⁰)
        acc = acc + integrand_minus(prep, x, zm + e * rm) * cc::<T>(e * Complex::new(0.0, rm));
    }
    acc.re * T::cst(1.0 / nq as f64)
}

pub fn l_contour(prep: &Prepotential, x: &[f64]) -> Result<f64> {
    let c = contour_for(prep, x, QUAD_POINTS)?;
    let v = contour_sum(prep, x, &c, QUAD_POINTS);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::PoleCollision)
    }
}

/// The contour integral as an `L` potential. Circles are fixed from the
/// value part of the point, so jets differentiate the quadrature rule.
#[derive(Clone)]
pub struct ContourL {
    pub prep: Prepotential,
    pub points: usize,
}

impl LPotential for ContourL {
    fn m(&self) -> usize {
        self.prep.n + 1
    }
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let xf: Vec<f64> = x.iter().map(|v| v.re()).collect();
        match contour_for(&self.prep, &xf, self.points) {
            Ok(c) => contour_sum(&self.prep, x, &c, self.points),
            Err(_) => T::cst(f64::NAN),
        }
    }
}

fn section_zeros(t: &TwistorSection) -> Vec<C64> {
    // z + xζ − z̄ζ² = 0
    let a = -t.z.conj();
    if a.norm() == 0.0 {
        return if t.x != 0.0 { vec![-t.z / t.x] } else { vec![] };
    }
    let disc = (Complex::new(t.x * t.x, 0.0) + 4.0 * a * t.z).sqrt();
    vec![(-t.x + disc) / (2.0 * a), (-t.x - disc) / (2.0 * a)]
}

// ---------------------------------------------------------------------------
// hyperkähler potential, shifts and Higgs field

fn hk_u<T: Scalar>(prep: &Prepotential, k: &Kin<T>) -> T {
    let fa = prep.fa(&k.chi);
    let s = k.chi.iter().zip(&fa).fold(czero::<T>(), |s, (c, f)| s + conj(*c) * *f);
    -(abs2(k.z0) * T::cst(4.0) / k.r0) * s.im
}

/// `U = −(4|z⁰|²/r⁰) Im[χ̄^A F_A(χ)]`.
pub fn hk_potential_cmap(prep: &Prepotential, x: &[f64]) -> f64 {
    hk_u(prep, &kin(prep.n, x))
}

/// `U = −(x⃗⁰×x⃗^A)·(x⃗⁰×x⃗^B) Im F_AB / |x⃗⁰|³`.
pub fn hk_potential_alt(prep: &Prepotential, x: &[f64]) -> f64 {
    let n = prep.n;
    let nn = prep.im_fab(&xi_vec(n, x));
    let v0 = vec3(x, 0);
    let r0 = dot(v0, v0).sqrt();
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            acc += dot(cross(v0, vec3(x, a + 1)), cross(v0, vec3(x, b + 1))) * nn[(a, b)];
        }
    }
    -acc / (r0 * r0 * r0)
}

/// `ξ^A = (x⃗⁰×x⃗^A)·(x⃗⁰×x⃗¹) − i|x⃗⁰| x⃗⁰·(x⃗^A×x⃗¹)`, a multiple of `χ^A`
/// that stays regular at `z⁰ = 0`.
fn xi_vec<T: Scalar>(n: usize, x: &[T]) -> Vec<Complex<T>> {
    let v = |i: usize| [x[3 * i], x[3 * i + 1], x[3 * i + 2]];
    let cr = |a: [T; 3], b: [T; 3]| {
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    };
    let dt = |a: [T; 3], b: [T; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let x0 = v(0);
    let r0 = dt(x0, x0).sqrt();
    let c1 = cr(x0, v(1));
    (1..=n)
        .map(|a| Complex::new(dt(cr(x0, v(a)), c1), -(r0 * dt(x0, cr(v(a), v(1))))))
        .collect()
}

fn higgs_generic<T: Scalar>(prep: &Prepotential, x: &[T]) -> Vec<T> {
    let n = prep.n;
    let m = n + 1;
    let fab = prep.fab(&xi_vec(n, x));
    let nn = |a: usize, b: usize| fab[a * n + b].im;
    let v = |i: usize| [x[3 * i], x[3 * i + 1], x[3 * i + 2]];
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let r0 = r2.sqrt();
    // y^A = x⃗^A − ψ̃^A x⃗⁰ is orthogonal to x⃗⁰
    let psit: Vec<T> = (1..=n)
        .map(|a| (x[0] * x[3 * a] + x[1] * x[3 * a + 1] + x[2] * x[3 * a + 2]) / r2)
        .collect();
    let y: Vec<[T; 3]> = (1..=n)
        .map(|a| {
            let va = v(a);
            [va[0] - psit[a - 1] * x[0], va[1] - psit[a - 1] * x[1], va[2] - psit[a - 1] * x[2]]
        })
        .collect();
    let mut r = T::zero();
    for a in 0..n {
        for b in 0..n {
            let yy = y[a][0] * y[b][0] + y[a][1] * y[b][1] + y[a][2] * y[b][2];
            r = r - nn(a, b) * yy;
        }
    }
    // R = U/2r⁰ with U = −r⁰⁻¹ y^A·y^B N_AB
    let r = r / (r2 * T::cst(2.0));
    let mut npt = vec![T::zero(); n];
    for a in 0..n {
        for b in 0..n {
            npt[a] = npt[a] + nn(a, b) * psit[b];
        }
    }
    let pnp = (0..n).fold(T::zero(), |s, a| s + npt[a] * psit[a]);
    let f = -(T::one() / r0);
    let mut u = vec![T::zero(); m * m];
    u[0] = (r + pnp) * f;
    for a in 0..n {
        u[a + 1] = -npt[a] * f;
        u[(a + 1) * m] = -npt[a] * f;
        for b in 0..n {
            u[(a + 1) * m + b + 1] = nn(a, b) * f;
        }
    }
    u
}

/// The closed-form Higgs field with `R = U/2r⁰`.
pub fn higgs_matrix(prep: &Prepotential, x: &[f64]) -> Result<(DMatrix<f64>, f64)> {
    let n = prep.n;
    let m = n + 1;
    let v0 = vec3(x, 0);
    let c = cross(v0, vec3(x, 1));
    if !(dot(c, c) > 1e-24 * dot(v0, v0).powi(2)) {
        return Err(Error::Degenerate("x⃗¹ parallel to x⃗⁰"));
    }
    invert(prep.im_fab(&xi_vec(n, x)), "Im F_AB")?;
    let u = higgs_generic(prep, x);
    let r = hk_potential_alt(prep, x) / (2.0 * dot(v0, v0).sqrt());
    Ok((DMatrix::from_row_slice(m, m, &u), r))
}

fn shifts_generic<T: Scalar>(prep: &Prepotential, p: &[T], zero_shift: bool) -> Vec<T> {
    let n = prep.n;
    let m = n + 1;
    if zero_shift {
        return vec![T::zero(); m];
    }
    let k = kin(n, &p[..3 * m]);
    let fa = prep.fa(&k.chi);
    let xd = k.x0 / k.r0;
    let half = T::cst(0.5);
    let mut out = vec![T::zero(); m];
    let mut tail = T::zero();
    for a in 0..n {
        let phi = xd * fa[a].re;
        out[a + 1] = phi;
        tail = tail - k.psit[a] * phi + half * xd * xd * k.chi[a].re * fa[a].re
            - half * k.chi[a].im * fa[a].im
            - half * k.psit[a] * p[3 * m + a + 1];
    }
    out[0] = tail;
    out
}

/// Shifts `φ_I` on the `4m` chart.
#[derive(Clone)]
pub struct CmapShifts {
    pub prep: Prepotential,
    pub zero: bool,
}

impl GenericMap for CmapShifts {
    fn apply<T: Scalar>(&self, p: &[T]) -> Vec<T> {
        shifts_generic(&self.prep, p, self.zero)
    }
}

#[derive(Clone, Debug)]
pub struct ShiftsAndCoords {
    pub phi: Vec<f64>,
    pub psi_tilde: Vec<f64>,
    /// `u_I` from the Legendre construction, `u_I = ψ_I + φ_I + (i/2)L_{x^I}`.
    pub u: Vec<C64>,
    /// `u_A` from its closed form in `F_A(χ)` and `F̄_A(χ̄)`.
    pub u_closed: Vec<C64>,
    /// `u₀` from `ψ₀ + ½(ψ_A ũ^A − ψ̃^A u_A) − ½u_A ũ^A`.
    pub u0_closed: C64,
    /// Residual of the `φ₀ + ψ̃^A φ_A` display against `L_{x⁰}` from jets.
    pub shift0_residual: f64,
}

pub fn shifts_and_coords(prep: &Prepotential, p: &[f64]) -> Result<ShiftsAndCoords> {
    let n = prep.n;
    let m = n + 1;
    check_point(n, p)?;
    let l = CmapL { prep: prep.clone() };
    let x = &p[..3 * m];
    let psi = &p[3 * m..4 * m];
    let phi = shifts_generic(prep, p, false);
    let lx: Vec<f64> = (0..m).map(|i| d1_at(&l, x, 3 * i)).collect();
    let u: Vec<C64> = (0..m).map(|i| Complex::new(psi[i] + phi[i], 0.5 * lx[i])).collect();
    let k = kin(n, x);
    let fa = prep.fa(&k.chi);
    let r0 = k.r0;
    let u_closed: Vec<C64> = (0..n)
        .map(|a| psi[a + 1] + fa[a] * ((k.x0 + r0) / (2.0 * r0)) + fa[a].conj() * ((k.x0 - r0) / (2.0 * r0)))
        .collect();
    let mut u0 = Complex::new(psi[0], 0.0);
    for a in 0..n {
        u0 += 0.5 * (psi[a + 1] * k.w[a] - k.psit[a] * u[a + 1]) - 0.5 * u[a + 1] * k.w[a];
    }
    let shift0_residual = (u0 - u[0]).norm();
    Ok(ShiftsAndCoords { phi, psi_tilde: k.psit, u, u_closed, u0_closed: u0, shift0_residual })
}

// ---------------------------------------------------------------------------
// connection 1-forms

fn conn_generic<T: Scalar>(prep: &Prepotential, p: &[T], exact_term: bool) -> Vec<T> {
    let n = prep.n;
    let m = n + 1;
    let dim = 4 * m;
    let x = &p[..3 * m];
    let k = kin(n, x);
    let fab = prep.fab(&k.chi);
    let nn = |a: usize, b: usize| fab[a * n + b].im;
    let z0d = k.z0 / k.r0;
    let x0d = k.x0 / k.r0;
    let mut out = vec![T::zero(); m * dim];
    for mu in 0..dim {
        let (dpsit, dx0d, imz, dchi) = if mu < 3 * m {
            let q: Vec<Dual<T>> = x
                .iter()
                .enumerate()
                .map(|(j, &v)| if j == mu { Dual::var(v) } else { Dual::constant(v) })
                .collect();
            let kd = kin(n, &q);
            let dz0d = {
                let zd = kd.z0 / kd.r0;
                Complex::new(zd.re.d, zd.im.d)
            };
            let dx0d = (kd.x0 / kd.r0).d;
            let dpsit: Vec<T> = kd.psit.iter().map(|v| v.d).collect();
            let dchi: Vec<Complex<T>> = kd.chi.iter().map(|c| Complex::new(c.re.d, c.im.d)).collect();
            (dpsit, dx0d, (conj(z0d) * dz0d).im, dchi)
        } else {
            (vec![T::zero(); n], T::zero(), T::zero(), vec![czero::<T>(); n])
        };
        let mut aa = vec![T::zero(); n];
        for a in 0..n {
            let mut v = T::zero();
            for b in 0..n {
                v = v + fab[a * n + b].re * dpsit[b]
                    - nn(a, b) * (k.chi[b].im * dx0d + T::cst(4.0) * k.chi[b].re * imz);
            }
            aa[a] = v;
            out[(a + 1) * dim + mu] = v;
        }
        let mut a0 = T::zero();
        for a in 0..n {
            a0 = a0 - k.psit[a] * aa[a];
            for b in 0..n {
                let t1 = abs2(z0d) * (conj(k.chi[a]) * dchi[b]).im;
                let t2 = (conj(k.chi[a]) * k.chi[b]).re * x0d * imz;
                a0 = a0 + T::cst(2.0) * nn(a, b) * (t1 + t2);
            }
            if !exact_term {
                continue;
            }
            // −½ d(ψ̃^A ψ_A)
            let mut dprod = dpsit[a] * p[3 * m + a + 1];
            if mu == 3 * m + a + 1 {
                dprod = dprod + k.psit[a];
            }
            a0 = a0 - T::cst(0.5) * dprod;
        }
        out[mu] = a0;
    }
    out
}

struct HiggsMap(Prepotential);
struct ConnMap(Prepotential, bool);

impl GenericMap for HiggsMap {
    fn apply<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        higgs_generic(&self.0, x)
    }
}
impl GenericMap for ConnMap {
    fn apply<T: Scalar>(&self, p: &[T]) -> Vec<T> {
        conn_generic(&self.0, p, self.1)
    }
}

/// `(A_A, A₀)` from the closed-form displays, as rows of length `4m`.
pub fn connection_1forms(prep: &Prepotential, p: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_point(prep.n, p)?;
    let dim = 4 * (prep.n + 1);
    Ok(conn_generic(prep, p, true).chunks(dim).map(|c| c.to_vec()).collect())
}

pub const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Cyclic permutation of the axes; moves the string of the closed-form
/// connection off the `x⃗⁰ ∥ e₁` half-lines.
pub const CYCLIC: [[f64; 3]; 3] = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];

/// Upstairs data from the closed-form Higgs field and connection.
pub fn gh_closed(prep: &Prepotential, scheme: DerivScheme) -> GHData {
    gh_closed_gauge(prep, true, scheme)
}

/// As [`gh_closed`]; without `exact_term` the `−½d(ψ̃^Aψ_A)` part of `A₀` is
/// dropped, which makes every `∂_{ψ_I}` a symmetry of the chart.
pub fn gh_closed_gauge(prep: &Prepotential, exact_term: bool, scheme: DerivScheme) -> GHData {
    let higgs: SharedField = Arc::new(Gen(HiggsMap(prep.clone())));
    let conn: SharedField = Arc::new(Gen(ConnMap(prep.clone(), exact_term)));
    GHData::new(prep.n + 1, higgs, conn, scheme)
}

/// As [`gh_closed`], with the connection written in a rotated frame. The
/// result is gauge equivalent and has the same Higgs field.
pub fn gh_closed_in_frame(prep: &Prepotential, rot: [[f64; 3]; 3], scheme: DerivScheme) -> GHData {
    rotate_frame(&gh_closed(prep, scheme), rot)
}

/// Upstairs data through the Legendre construction from `L = 2r⁰ Im F(χ)`
/// with the shifts `φ_I`.
pub fn gh_legendre(prep: &Prepotential, zero_shift: bool, scheme: DerivScheme) -> GHData {
    gh_legendre_from(prep, LSource::Closed, zero_shift, scheme)
}

/// Which expression for `L` feeds the Legendre construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LSource {
    Closed,
    /// Trapezoid rule with the given number of points per circle.
    Contour(usize),
}

pub fn gh_legendre_from(prep: &Prepotential, src: LSource, zero_shift: bool, scheme: DerivScheme) -> GHData {
    let shifts = Arc::new(CmapShifts { prep: prep.clone(), zero: zero_shift });
    match src {
        LSource::Closed => gh_from_l(Arc::new(CmapL { prep: prep.clone() }), shifts, scheme),
        LSource::Contour(points) => gh_from_l(Arc::new(ContourL { prep: prep.clone(), points }), shifts, scheme),
    }
}

/// `u_I` on the `4m` chart as `(Re u_I, Im u_I)` pairs.
#[derive(Clone)]
pub struct CmapU {
    pub prep: Prepotential,
    pub zero_shift: bool,
}

impl GenericMap for CmapU {
    fn apply<T: Scalar>(&self, p: &[T]) -> Vec<T> {
        let n = self.prep.n;
        let m = n + 1;
        let phi = shifts_generic(&self.prep, p, self.zero_shift);
        let l = CmapL { prep: self.prep.clone() };
        let mut out = Vec::with_capacity(2 * m);
        for i in 0..m {
            out.push(p[3 * m + i] + phi[i]);
            out.push(d1_at(&l, &p[..3 * m], 3 * i) * T::cst(0.5));
        }
        out
    }
}

/// Members of the kernel list, as `(Re, Im)` pairs on the `4m` chart.
#[derive(Clone, Copy, Debug)]
pub enum KernelItem {
    Psi0,
    PsiA(usize),
    Ratio(usize),
    ChiPlus(usize),
    ChiMinus(usize),
}

#[derive(Clone, Copy, Debug)]
pub struct KernelFn {
    pub n: usize,
    pub item: KernelItem,
}

impl GenericMap for KernelFn {
    fn apply<T: Scalar>(&self, p: &[T]) -> Vec<T> {
        let m = self.n + 1;
        let k = kin(self.n, &p[..3 * m]);
        let two = T::cst(2.0);
        let v: Complex<T> = match self.item {
            KernelItem::Psi0 => Complex::new(p[3 * m], T::zero()),
            KernelItem::PsiA(a) => Complex::new(p[3 * m + a], T::zero()),
            KernelItem::Ratio(a) => k.w[a - 1],
            KernelItem::ChiPlus(a) => k.chi[a - 1] * ((k.x0 + k.r0) / (two * k.r0)),
            KernelItem::ChiMinus(a) => conj(k.chi[a - 1]) * ((k.x0 - k.r0) / (two * k.r0)),
        };
        vec![v.re, v.im]
    }
}

// ---------------------------------------------------------------------------
// identities

/// `(name, residual)` pairs.
pub type ResidualTable = Vec<(&'static str, f64)>;

pub fn table_max(t: &ResidualTable) -> f64 {
    t.iter().fold(0.0, |a, (_, v)| a.max(*v))
}

/// `dχ^A` from the spherical-basis formula, as complex covectors on the base.
fn chi_diff_formula(n: usize, x: &[f64]) -> Result<Vec<Vec<C64>>> {
    let m = n + 1;
    let s = sections(x);
    let (zp, _) = roots_zeta0(s[0].z, s[0].x)?;
    let r0 = s[0].r();
    let k = kin(n, x);
    let ii = Complex::new(0.0, 1.0);
    // dη_m for m = +1 (z), 0 (x), −1 (−z̄), per real coordinate of one point
    let d_eta = |point: usize, mm: i32, mu: usize| -> C64 {
        if mu / 3 != point {
            return Complex::new(0.0, 0.0);
        }
        match (mm, mu % 3) {
            (0, 0) => Complex::new(1.0, 0.0),
            (1, 1) => Complex::new(0.5, 0.0),
            (1, 2) => 0.5 * ii,
            (-1, 1) => Complex::new(-0.5, 0.0),
            (-1, 2) => 0.5 * ii,
            _ => Complex::new(0.0, 0.0),
        }
    };
    Ok((1..=n)
        .map(|a| {
            (0..3 * m)
                .map(|mu| {
                    let mut acc = Complex::new(0.0, 0.0);
                    for mm in -1..=1 {
                        let pw = zp.powi(-mm);
                        acc += pw
                            * (d_eta(a, mm, mu) + (k.chi[a - 1] * mm as f64 - k.psit[a - 1]) * d_eta(0, mm, mu));
                    }
                    acc / r0
                })
                .collect()
        })
        .collect())
}

/// Residuals of the identities satisfied by `χ`, the roots, `L`, `U` and the
/// kernel list, at a point of the `4m` chart.
pub fn identity_suite(prep: &Prepotential, p: &[f64]) -> Result<ResidualTable> {
    let n = prep.n;
    let m = n + 1;
    check_point(n, p)?;
    let x = &p[..3 * m];
    let mut t: ResidualTable = Vec::new();
    let s = sections(x);
    let (zp, zm) = roots_zeta0(s[0].z, s[0].x)?;
    let r0 = s[0].r();
    t.push(("roots", s[0].at(zp).norm().max(s[0].at(zm).norm()) / (1.0 + r0)));
    t.push(("antipodal", (zm + 1.0 / zp.conj()).norm() / (1.0 + zm.norm())));

    let (chi_d, chib_d) = chi(n, x)?;
    let k = kin(n, x);
    let mut r: f64 = 0.0;
    for a in 0..n {
        r = r.max((chi_d[a] - k.chi[a]).norm()).max((chib_d[a] - k.chi[a].conj()).norm());
    }
    t.push(("chi_explicit", r));

    let v0 = vec3(x, 0);
    let e1 = [1.0, 0.0, 0.0];
    let c0 = cross(v0, e1);
    let c0n = dot(c0, c0);
    let mut r: f64 = 0.0;
    let mut rr: f64 = 0.0;
    let mut rq: f64 = 0.0;
    for a in 0..n {
        let va = vec3(x, a + 1);
        let num = Complex::new(dot(cross(v0, va), c0), -r0 * dot(v0, cross(va, e1)));
        r = r.max((num / (r0 * c0n) - k.chi[a]).norm());
        for b in 0..n {
            let vb = vec3(x, b + 1);
            let pair = Complex::new(dot(cross(v0, va), cross(v0, vb)), -r0 * dot(v0, cross(va, vb)));
            rr = rr.max((pair / (r0 * r0 * c0n) - k.chi[a] * k.chi[b].conj()).norm());
            let cb = cross(v0, vb);
            rq = rq.max((pair / dot(cb, cb) - k.chi[a] / k.chi[b]).norm());
        }
    }
    t.push(("chi_vector", r));
    t.push(("chi_chibar", rr));
    t.push(("chi_ratio", rq));

    let formula = chi_diff_formula(n, x)?;
    let mut r: f64 = 0.0;
    for mu in 0..3 * m {
        let q: Vec<Dual<f64>> = x
            .iter()
            .enumerate()
            .map(|(j, &v)| if j == mu { Dual::var(v) } else { Dual::constant(v) })
            .collect();
        let kd = kin(n, &q);
        for a in 0..n {
            let jet = Complex::new(kd.chi[a].re.d, kd.chi[a].im.d);
            r = r.max((jet - formula[a][mu]).norm());
        }
    }
    t.push(("chi_diff", r));

    let mut r: f64 = 0.0;
    for a in 0..n {
        let lhs = k.w[a] + k.chi[a] * ((k.x0 + r0) / (2.0 * r0)) + k.chi[a].conj() * ((k.x0 - r0) / (2.0 * r0));
        r = r.max((lhs - k.psit[a]).norm());
    }
    t.push(("psi_tilde", r));

    let mut items = vec![KernelItem::Psi0];
    for a in 1..=n {
        items.extend([KernelItem::PsiA(a), KernelItem::Ratio(a), KernelItem::ChiPlus(a), KernelItem::ChiMinus(a)]);
    }
    let mut r: f64 = 0.0;
    for item in items {
        let f = Gen(KernelFn { n, item });
        r = r.max(crate::legendre::gauge_kernel_residual(m, &f, p, DerivScheme::Dual));
    }
    t.push(("kernel_list", r));

    let l = CmapL { prep: prep.clone() };
    let lv = l.eval(x);
    let lx: Vec<f64> = (0..m).map(|i| d1_at(&l, x, 3 * i)).collect();
    let fa = prep.fa(&k.chi);
    let r = (0..n).fold(0.0f64, |r, a| r.max((lx[a + 1] - 2.0 * fa[a].im).abs()));
    t.push(("L_x", r));
    let lp: f64 = (0..m).map(|i| dot(v0, vec3(x, i)) * lx[i]).sum();
    t.push(("L_prop", (lp - k.x0 * lv).abs()));

    let u1 = hk_potential_cmap(prep, x);
    let u2 = hk_potential_alt(prep, x);
    t.push(("U_forms", (u1 - u2).abs()));

    let sc = shifts_and_coords(prep, p)?;
    let mut r = sc.shift0_residual;
    for a in 0..n {
        r = r.max((sc.u_closed[a] - sc.u[a + 1]).norm());
    }
    t.push(("shifts", r));
    Ok(t)
}

// ---------------------------------------------------------------------------
// Heisenberg algebra upstairs

/// `Q^A`, `P_A`, `I`, `W` on the `4m` chart.
pub struct Heisenberg {
    pub q: Vec<VectorField>,
    pub p: Vec<VectorField>,
    pub i: VectorField,
    pub w: VectorField,
}

fn phi_and_grad(prep: &Prepotential, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let phi = shifts_generic(prep, x, false);
    let j = jacobian(&Gen(CmapShifts { prep: prep.clone(), zero: false }), x, DerivScheme::Dual);
    (phi, j)
}

/// Fiber parts fixed by `V(u_I) = c_I` with the base part `h` given.
fn lift_fiber(prep: &Prepotential, x: &[f64], h: &[f64], target: impl Fn(usize, &[f64]) -> f64) -> Vec<f64> {
    let m = prep.n + 1;
    let dim = 4 * m;
    let (phi, j) = phi_and_grad(prep, x);
    let mut v = h.to_vec();
    v.resize(dim, 0.0);
    let base = |i: usize| -> f64 { (0..3 * m).map(|mu| j[i][mu] * h[mu]).sum() };
    for a in 1..m {
        v[3 * m + a] = target(a, &phi) - base(a);
    }
    // φ₀ depends on ψ_A
    let along: f64 = base(0) + (1..m).map(|a| j[0][3 * m + a] * v[3 * m + a]).sum::<f64>();
    v[3 * m] = target(0, &phi) - along;
    v
}

pub fn heisenberg_upstairs(prep: &Prepotential) -> Heisenberg {
    let n = prep.n;
    let m = n + 1;
    let dim = 4 * m;
    let q = (1..=n)
        .map(|a| {
            VectorField::new(dim, move |x: &[f64]| {
                let k = kin(n, &x[..3 * m]);
                let mut v = vec![0.0; dim];
                v[3 * m + a] = 1.0;
                v[3 * m] = 0.5 * k.psit[a - 1];
                v
            })
        })
        .collect();
    let p = (1..=n)
        .map(|a| {
            let pr = prep.clone();
            VectorField::new(dim, move |x: &[f64]| {
                let mut h = vec![0.0; 3 * m];
                for c in 0..3 {
                    h[xi(a, c)] = x[xi(0, c)];
                }
                // P(u_B) = 0, P(u₀) = −u_A
                lift_fiber(&pr, x, &h, |i, phi| if i == 0 { -(x[3 * m + a] + phi[a]) } else { 0.0 })
            })
        })
        .collect();
    let i = VectorField::coord(dim, 3 * m);
    let pr = prep.clone();
    let w = VectorField::new(dim, move |x: &[f64]| {
        let mut h = vec![0.0; 3 * m];
        for c in 0..3 {
            h[xi(0, c)] = 2.0 * x[xi(0, c)];
            for a in 1..m {
                h[xi(a, c)] = x[xi(a, c)];
            }
        }
        // W(u₀) = −2u₀, W(u_A) = −u_A
        lift_fiber(&pr, x, &h, |i, phi| {
            let wt = if i == 0 { 2.0 } else { 1.0 };
            -wt * (x[3 * m + i] + phi[i])
        })
    });
    Heisenberg { q, p, i, w }
}

fn vf_diff(a: &VectorField, b: &VectorField, p: &[f64]) -> f64 {
    let (u, v) = (a.at(p), b.at(p));
    u.iter().zip(&v).fold(0.0, |r, (x, y)| r.max((x - y).abs()))
}

fn vf_zero(dim: usize) -> VectorField {
    VectorField::new(dim, move |_| vec![0.0; dim])
}

/// Sup residual of the graded Heisenberg relations at `p`.
pub fn heisenberg_algebra_residual(h: &Heisenberg, p: &[f64], scheme: DerivScheme) -> f64 {
    let n = h.q.len();
    let dim = h.i.dim;
    let zero = vf_zero(dim);
    let mut r: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let expect = if a == b { h.i.clone() } else { zero.clone() };
            r = r.max(vf_diff(&bracket(&h.p[a], &h.q[b], scheme), &expect, p));
            r = r.max(vf_diff(&bracket(&h.p[a], &h.p[b], scheme), &zero, p));
            r = r.max(vf_diff(&bracket(&h.q[a], &h.q[b], scheme), &zero, p));
        }
        r = r.max(vf_diff(&bracket(&h.w, &h.p[a], scheme), &h.p[a], p));
        r = r.max(vf_diff(&bracket(&h.w, &h.q[a], scheme), &h.q[a], p));
        r = r.max(vf_diff(&bracket(&h.p[a], &h.i, scheme), &zero, p));
        r = r.max(vf_diff(&bracket(&h.q[a], &h.i, scheme), &zero, p));
    }
    r.max(vf_diff(&bracket(&h.w, &h.i, scheme), &h.i.scale(2.0), p))
}

/// Max of `|V(U)|` over all generators.
pub fn heisenberg_invariance_residual(prep: &Prepotential, h: &Heisenberg, p: &[f64]) -> f64 {
    let m = prep.n + 1;
    let x = &p[..3 * m];
    let g: Vec<f64> = (0..3 * m)
        .map(|mu| {
            let q: Vec<Dual<f64>> = x
                .iter()
                .enumerate()
                .map(|(j, &v)| if j == mu { Dual::var(v) } else { Dual::constant(v) })
                .collect();
            hk_u(prep, &kin(prep.n, &q)).d
        })
        .collect();
    let along = |v: &VectorField| -> f64 {
        let c = v.at(p);
        (0..3 * m).map(|mu| c[mu] * g[mu]).sum::<f64>().abs()
    };
    let mut r = along(&h.i).max(along(&h.w));
    for v in h.q.iter().chain(&h.p) {
        r = r.max(along(v));
    }
    r
}

// ---------------------------------------------------------------------------
// dualization

/// Holomorphic coordinates `(z^I, u_I)` of a point of the `4m` chart.
pub fn holomorphic_coords(prep: &Prepotential, p: &[f64]) -> Result<(Vec<C64>, Vec<C64>)> {
    let m = prep.n + 1;
    let sc = shifts_and_coords(prep, p)?;
    let z = (0..m).map(|i| Complex::new(0.5 * p[3 * i + 1], 0.5 * p[3 * i + 2])).collect();
    Ok((z, sc.u))
}

/// `z̃⁰ = z⁰`, `z̃_A = −z⁰u_A`, `ũ₀ = u₀ + (z^A/z⁰)u_A`, `ũ^A = z^A/z⁰`.
pub fn dual_holomorphic(z: &[C64], u: &[C64]) -> Result<(Vec<C64>, Vec<C64>)> {
    let z0 = z[0];
    if z0.norm() == 0.0 {
        return Err(Error::Domain("dual chart needs z⁰ ≠ 0"));
    }
    let m = z.len();
    let mut zt = vec![z0];
    let mut ut = vec![u[0]];
    for a in 1..m {
        zt.push(-z0 * u[a]);
        ut[0] += z[a] / z0 * u[a];
    }
    for a in 1..m {
        ut.push(z[a] / z0);
    }
    Ok((zt, ut))
}

/// Deviation of the double dual from `(z⁰, −z^A, u₀, −u_A)`.
pub fn double_dual_residual(z: &[C64], u: &[C64]) -> Result<f64> {
    let (z1, u1) = dual_holomorphic(z, u)?;
    let (z2, u2) = dual_holomorphic(&z1, &u1)?;
    let mut r = (z2[0] - z[0]).norm().max((u2[0] - u[0]).norm());
    for a in 1..z.len() {
        r = r.max((z2[a] + z[a]).norm()).max((u2[a] + u[a]).norm());
    }
    Ok(r)
}

/// `|J^T Ω J − Ω|` for `Ω₊ = du_I ∧ dz^I` and the complex Jacobian `J` of the
/// dualization map, by central differences.
pub fn omega_plus_pullback_residual(z: &[C64], u: &[C64], h: f64) -> Result<f64> {
    let m = z.len();
    let dim = 2 * m;
    let pack = |z: &[C64], u: &[C64]| -> Vec<C64> { z.iter().chain(u).cloned().collect() };
    let point = pack(z, u);
    let map = |v: &[C64]| -> Result<Vec<C64>> {
        let (a, b) = dual_holomorphic(&v[..m], &v[m..])?;
        Ok(pack(&a, &b))
    };
    let mut jac = DMatrix::<C64>::zeros(dim, dim);
    for c in 0..dim {
        let mut pp = point.clone();
        let mut pm = point.clone();
        pp[c] += h;
        pm[c] -= h;
        let (fp, fm) = (map(&pp)?, map(&pm)?);
        for r in 0..dim {
            jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    // Ω in (z, u) order: Ω(e_{u_I}, e_{z^I}) = 1
    let mut om = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..m {
        om[(m + i, i)] = Complex::new(1.0, 0.0);
        om[(i, m + i)] = Complex::new(-1.0, 0.0);
    }
    let pulled = jac.transpose() * &om * &jac;
    Ok((pulled - om).iter().fold(0.0f64, |a, v| a.max(v.norm())))
}

/// `τ_AB = F_AB − 2i (N𝒳̄)_A (N𝒳̄)_B / (𝒳̄N𝒳̄)` from `F_AB` at `𝒳`.
pub fn tau_from(fab: &DMatrix<C64>, x: &[C64]) -> DMatrix<C64> {
    let n = x.len();
    let nn = fab.map(|c| Complex::new(c.im, 0.0));
    let xb: Vec<C64> = x.iter().map(|v| v.conj()).collect();
    let nxb: Vec<C64> = (0..n).map(|a| (0..n).map(|b| nn[(a, b)] * xb[b]).sum()).collect();
    let xnx: C64 = (0..n).map(|a| xb[a] * nxb[a]).sum();
    DMatrix::from_fn(n, n, |a, b| fab[(a, b)] - Complex::new(0.0, 2.0) * nxb[a] * nxb[b] / xnx)
}

pub fn fab_matrix(prep: &Prepotential, x: &[C64]) -> DMatrix<C64> {
    let n = prep.n;
    let f = prep.fab(x);
    DMatrix::from_fn(n, n, |a, b| f[a * n + b])
}

#[derive(Clone, Debug)]
pub struct DualizationReport {
    pub double_dual: f64,
    pub omega_plus: f64,
    /// `|τ̃ + τ⁻¹|` with `τ̃` built from `F̃_AB(F_A(𝒳)) = −(F_AB(𝒳))⁻¹`.
    pub tau_modular: f64,
    /// `|Ũ − U|`, dual data from the pointwise replacement rules.
    pub potential_self_dual: f64,
    /// `|L̃ + L|` through the closed-form dual prepotential, if there is one.
    pub l_anti_self_dual: Option<f64>,
}

/// Dualization checks at a point of the `4m` chart.
pub fn dualization(prep: &Prepotential, p: &[f64]) -> Result<DualizationReport> {
    let n = prep.n;
    let m = n + 1;
    let (z, u) = holomorphic_coords(prep, p)?;
    let double_dual = double_dual_residual(&z, &u)?;
    let scale = z.iter().chain(&u).fold(1.0f64, |a, v| a.max(v.norm()));
    let omega_plus = omega_plus_pullback_residual(&z, &u, 1e-5 * scale)?;

    let x = &p[..3 * m];
    let k = kin(n, x);
    let fa = prep.fa(&k.chi);
    let fab = fab_matrix(prep, &k.chi);
    let tau = tau_from(&fab, &k.chi);
    let tinv = tau.clone().try_inverse().ok_or(Error::Singular { what: "τ", cond: f64::INFINITY })?;
    let fab_inv = fab.try_inverse().ok_or(Error::Singular { what: "F_AB", cond: f64::INFINITY })?;
    let tau_d = tau_from(&(-fab_inv), &fa);
    let tau_modular = (tau_d + tinv).iter().fold(0.0f64, |a, v| a.max(v.norm()));

    // Ũ: χ → F_A(χ), F_A → −χ
    let s = k.chi.iter().zip(&fa).fold(Complex::new(0.0, 0.0), |s, (c, f)| s + f.conj() * (-c));
    let u_dual = -(4.0 * k.z0.norm_sqr() / k.r0) * s.im;
    let potential_self_dual = (u_dual - hk_u(prep, &k)).abs();

    let l_anti_self_dual = match prep.dual() {
        Ok(d) => {
            let lt = 2.0 * k.r0 * d.f(&fa).im;
            Some((lt + 2.0 * k.r0 * prep.f(&k.chi).im).abs())
        }
        Err(_) => None,
    };
    Ok(DualizationReport { double_dual, omega_plus, tau_modular, potential_self_dual, l_anti_self_dual })
}

// ---------------------------------------------------------------------------
// reduction

/// `ψ̃^A`, `𝒳^A` and `|ρ⃗⁰|` read off the full slots of the canonical chart.
fn down<T: Scalar>(n: usize, full: &[T]) -> (Vec<T>, Vec<Complex<T>>, T) {
    let half = T::cst(0.5);
    let r0 = (full[0] * full[0] + full[1] * full[1] + full[2] * full[2]).sqrt();
    let psit = (1..=n).map(|a| full[3 * a]).collect();
    let xx = (1..=n).map(|a| Complex::new(full[3 * a + 1] * half, full[3 * a + 2] * half)).collect();
    (psit, xx, r0)
}

/// `R = −2(𝒳̄N𝒳)` and `N`.
fn r_and_n<T: Scalar>(prep: &Prepotential, xx: &[Complex<T>]) -> (T, Vec<T>) {
    let n = prep.n;
    let fab = prep.fab(xx);
    let nn: Vec<T> = fab.iter().map(|c| c.im).collect();
    let mut xnx = T::zero();
    for a in 0..n {
        for b in 0..n {
            xnx = xnx + nn[a * n + b] * (conj(xx[a]) * xx[b]).re;
        }
    }
    (-(xnx * T::cst(2.0)), nn)
}

struct RedHiggs(Prepotential);
struct RedConn(Prepotential, bool);

impl GenericMap for RedHiggs {
    fn apply<T: Scalar>(&self, f: &[T]) -> Vec<T> {
        let n = self.0.n;
        let m = n + 1;
        let full = full_slots(n, f);
        let (psit, xx, r0) = down(n, &full);
        let (r, nn) = r_and_n(&self.0, &xx);
        let mut npt = vec![T::zero(); n];
        for a in 0..n {
            for b in 0..n {
                npt[a] = npt[a] + nn[a * n + b] * psit[b];
            }
        }
        let pnp = (0..n).fold(T::zero(), |s, a| s + npt[a] * psit[a]);
        let c = -(T::one() / r0);
        let mut u = vec![T::zero(); m * m];
        u[0] = (r + pnp) * c;
        for a in 0..n {
            u[a + 1] = -npt[a] * c;
            u[(a + 1) * m] = -npt[a] * c;
            for b in 0..n {
                u[(a + 1) * m + b + 1] = nn[a * n + b] * c;
            }
        }
        u
    }
}

impl GenericMap for RedConn {
    fn apply<T: Scalar>(&self, p: &[T]) -> Vec<T> {
        let n = self.0.n;
        let m = n + 1;
        let dim = 4 * n;
        let nf = 3 * n - 1;
        let ch = RestrictedChart::new(n);
        let full = full_slots(n, &p[..nf]);
        let (psit, xx, _) = down(n, &full);
        let fab = self.0.fab(&xx);
        let rho0 = [full[0], full[1], full[2]];
        let r0 = (rho0[0] * rho0[0] + rho0[1] * rho0[1] + rho0[2] * rho0[2]).sqrt();
        let slot = |s: usize| ch.free_index(s);
        let mut out = vec![T::zero(); m * dim];
        for a in 0..n {
            for b in 0..n {
                if let Some(f) = slot(3 * (b + 1)) {
                    out[(a + 1) * dim + f] = out[(a + 1) * dim + f] + fab[a * n + b].re;
                }
            }
        }
        // 𝒜₀ = −ψ̃^A𝒜_A + ½N_AB ρ⃗⁰·(ρ⃗^A × dρ⃗^B)/|ρ⃗⁰|³ − ½d(ψ̃^Aψ_A)
        let c = T::cst(0.5) / (r0 * r0 * r0);
        for mu in 0..dim {
            let mut v = T::zero();
            for a in 0..n {
                v = v - psit[a] * out[(a + 1) * dim + mu];
            }
            out[mu] = v;
        }
        for a in 0..n {
            let ra = [full[3 * (a + 1)], full[3 * (a + 1) + 1], full[3 * (a + 1) + 2]];
            for b in 0..n {
                let nab = fab[a * n + b].im;
                for comp in 0..3 {
                    if let Some(f) = slot(3 * (b + 1) + comp) {
                        // coefficient of dρ^B_comp in ρ⃗⁰·(ρ⃗^A × dρ⃗^B)
                        let (i1, i2) = ((comp + 1) % 3, (comp + 2) % 3);
                        let coef = rho0[i1] * ra[i2] - rho0[i2] * ra[i1];
                        out[f] = out[f] + c * nab * coef;
                    }
                }
            }
            if !self.1 {
                continue;
            }
            let half = T::cst(0.5);
            if let Some(f) = slot(3 * (a + 1)) {
                out[f] = out[f] - half * p[nf + a + 1];
            }
            out[nf + a + 1] = out[nf + a + 1] - half * psit[a];
        }
        out
    }
}

/// Reduced data from the closed-form displays on the canonical chart.
pub fn reduce_cmap(prep: &Prepotential, s: f64, scheme: DerivScheme) -> Result<ReducedData> {
    reduce_cmap_gauge(prep, s, true, scheme)
}

/// With `exact_term = false` the `−½d(ψ̃^Aψ_A)` term of `𝒜₀` is dropped.
/// The metric is then the same up to `ψ₀ ↦ ψ₀ − ½ψ̃^Aψ_A`, and every
/// `∂_{ψ_I}` is Killing.
pub fn reduce_cmap_gauge(prep: &Prepotential, s: f64, exact_term: bool, scheme: DerivScheme) -> Result<ReducedData> {
    let n = prep.n;
    let m = n + 1;
    let higgs = Section::new(n, -1, 0, m * m, Arc::new(Gen(RedHiggs(prep.clone()))), scheme)?;
    let conn: SharedField = Arc::new(Gen(RedConn(prep.clone(), exact_term)));
    Ok(ReducedData { n, higgs, conn, s, scheme })
}

/// `𝒰^IJ` from its display.
pub fn reduced_higgs_inverse(prep: &Prepotential, p: &[f64]) -> Result<DMatrix<f64>> {
    let n = prep.n;
    let m = n + 1;
    let full = full_slots(n, &p[..3 * n - 1]);
    let (psit, xx, r0) = down(n, &full);
    let (r, nn) = r_and_n(prep, &xx);
    let ninv = invert(DMatrix::from_row_slice(n, n, &nn), "Im F_AB")?;
    let c = -r0 / r;
    Ok(DMatrix::from_fn(m, m, |i, j| {
        c * match (i, j) {
            (0, 0) => 1.0,
            (0, b) => psit[b - 1],
            (a, 0) => psit[a - 1],
            (a, b) => psit[a - 1] * psit[b - 1] + r * ninv[(a - 1, b - 1)],
        }
    }))
}

// ---------------------------------------------------------------------------
// Ferrara-Sabharwal assembly

#[derive(Clone, Debug)]
pub struct FSData {
    pub s: f64,
    pub r: f64,
    pub n: DMatrix<f64>,
    pub tau: DMatrix<C64>,
    /// `(Im τ)⁻¹` from its display.
    pub im_tau_inv: DMatrix<f64>,
    /// `(Im τ)⁻¹` by matrix inversion.
    pub im_tau_inv_direct: DMatrix<f64>,
    pub alpha: Vec<f64>,
    /// `dR/2R` from `Re(𝒳̄N d𝒳)/(𝒳̄N𝒳)`.
    pub theta0: Vec<f64>,
    /// `dR/2R` by differentiating `R`.
    pub theta0_direct: Vec<f64>,
    pub theta: [Vec<f64>; 3],
    pub g_psk: DMatrix<f64>,
    pub g_t: DMatrix<f64>,
    /// The metric `g`, from `2sg = g_PSK − (dR/2R)² − g_T/R − α²/R²`.
    pub metric: DMatrix<f64>,
}

fn herm(a: &[C64], b: &[C64]) -> DMatrix<f64> {
    // real part of the symmetrised a ⊗ b̄
    let n = a.len();
    DMatrix::from_fn(n, n, |i, j| 0.5 * (a[i] * b[j].conj() + a[j] * b[i].conj()).re)
}

/// Assembles the closed-form quaternionic Kähler data at a point of the `4n`
/// chart.
pub fn fs_assemble(prep: &Prepotential, s: f64, p: &[f64]) -> Result<FSData> {
    let n = prep.n;
    let dim = 4 * n;
    let nf = 3 * n - 1;
    let ch = RestrictedChart::new(n);
    let full = full_slots(n, &p[..nf]);
    let (psit, xx, _) = down(n, &full);
    if !(xx[0].re > 0.0) {
        return Err(Error::Domain("𝒳¹ must be positive"));
    }
    let (r, nv) = r_and_n(prep, &xx);
    if r.abs() < 1e-14 {
        return Err(Error::Domain("R = 0"));
    }
    let nn = DMatrix::from_row_slice(n, n, &nv);
    let fab = fab_matrix(prep, &xx);
    let fa = prep.fa(&xx);
    let psi = &p[nf..];

    let coord = |s: usize| -> Vec<f64> {
        let mut v = vec![0.0; dim];
        if let Some(f) = ch.free_index(s) {
            v[f] = 1.0;
        }
        v
    };
    let dpsi = |i: usize| -> Vec<f64> {
        let mut v = vec![0.0; dim];
        v[nf + i] = 1.0;
        v
    };
    let ii = Complex::new(0.0, 1.0);
    let dx: Vec<Vec<C64>> = (1..=n)
        .map(|a| {
            let (re, im) = (coord(3 * a + 1), coord(3 * a + 2));
            (0..dim).map(|mu| 0.5 * (re[mu] + ii * im[mu])).collect()
        })
        .collect();
    let dpt: Vec<Vec<f64>> = (1..=n).map(|a| coord(3 * a)).collect();

    let mut alpha = dpsi(0);
    for a in 0..n {
        for mu in 0..dim {
            alpha[mu] += 0.5 * (psit[a] * dpsi(a + 1)[mu] - psi[a + 1] * dpt[a][mu]);
        }
    }

    let xnx = -0.5 * r;
    // 𝒳̄N d𝒳 and d𝒳̄ N d𝒳
    let xnd: Vec<C64> = (0..dim)
        .map(|mu| {
            let mut acc = Complex::new(0.0, 0.0);
            for a in 0..n {
                for b in 0..n {
                    acc += xx[a].conj() * nn[(a, b)] * dx[b][mu];
                }
            }
            acc
        })
        .collect();
    let theta0: Vec<f64> = xnd.iter().map(|c| c.re / xnx).collect();
    let theta0_direct = {
        let g = jacobian(
            &Gen(RFun(prep.clone())),
            &p[..nf],
            DerivScheme::Dual,
        );
        let mut v = vec![0.0; dim];
        for f in 0..nf {
            v[f] = g[0][f] / (2.0 * r);
        }
        v
    };

    let mut dnd = DMatrix::zeros(dim, dim);
    for a in 0..n {
        for b in 0..n {
            dnd += herm(&dx[b], &dx[a]) * nn[(a, b)];
        }
    }
    let g_psk = (dnd * xnx - herm(&xnd, &xnd)) / (xnx * xnx);

    let tau = tau_from(&fab, &xx);
    let im_tau = tau.map(|c| c.im);
    let im_tau_inv_direct = invert(im_tau, "Im τ")?;
    let ninv = invert(nn.clone(), "Im F_AB")?;
    let im_tau_inv = DMatrix::from_fn(n, n, |a, b| {
        ninv[(a, b)] - (xx[a].conj() * xx[b] + xx[a] * xx[b].conj()).re / xnx
    });
    let vforms: Vec<Vec<C64>> = (0..n)
        .map(|a| {
            (0..dim)
                .map(|mu| {
                    let mut v = Complex::new(dpsi(a + 1)[mu], 0.0);
                    for c in 0..n {
                        v += tau[(a, c)] * dpt[c][mu];
                    }
                    v
                })
                .collect()
        })
        .collect();
    let mut g_t = DMatrix::zeros(dim, dim);
    for a in 0..n {
        for b in 0..n {
            g_t += herm(&vforms[a], &vforms[b]) * (0.5 * im_tau_inv_direct[(a, b)]);
        }
    }

    let two_sg = &g_psk - sym11(&theta0, &theta0) - &g_t / r - sym11(&alpha, &alpha) / (r * r);
    let metric = two_sg / (2.0 * s);

    // θ₁ = −(1/2R)[α + Re(𝒳̄^A dF_A − F_A d𝒳̄^A)], ½(θ₂ + iθ₃) = −(1/2R)[𝒳^A dψ_A + F_A dψ̃^A]
    let mut t1 = alpha.clone();
    let mut t23 = vec![Complex::new(0.0, 0.0); dim];
    for mu in 0..dim {
        let mut acc = Complex::new(0.0, 0.0);
        for a in 0..n {
            let dfa: C64 = (0..n).map(|b| fab[(a, b)] * dx[b][mu]).sum();
            acc += xx[a].conj() * dfa - fa[a] * dx[a][mu].conj();
            t23[mu] += xx[a] * dpsi(a + 1)[mu] + fa[a] * dpt[a][mu];
        }
        t1[mu] += acc.re;
    }
    let c = -1.0 / (2.0 * r);
    let theta = [
        t1.iter().map(|v| v * c).collect(),
        t23.iter().map(|v| 2.0 * c * v.re).collect(),
        t23.iter().map(|v| 2.0 * c * v.im).collect(),
    ];
    Ok(FSData {
        s,
        r,
        n: nn,
        tau,
        im_tau_inv,
        im_tau_inv_direct,
        alpha,
        theta0,
        theta0_direct,
        theta,
        g_psk,
        g_t,
        metric,
    })
}

struct RFun(Prepotential);

impl GenericMap for RFun {
    fn apply<T: Scalar>(&self, f: &[T]) -> Vec<T> {
        let n = self.0.n;
        let full = full_slots(n, f);
        let (_, xx, _) = down(n, &full);
        vec![r_and_n(&self.0, &xx).0]
    }
}

/// `(𝒳̄N𝒳)` at a point of the `4n` chart.
pub fn xnx(prep: &Prepotential, p: &[f64]) -> f64 {
    let n = prep.n;
    let full = full_slots(n, &p[..3 * n - 1]);
    let (_, xx, _) = down(n, &full);
    -0.5 * r_and_n(prep, &xx).0
}

/// Downstairs generators `𝒬^A`, `𝒫_A`, `ℐ`, `𝒲` on the `4n` chart.
pub fn heisenberg_downstairs(n: usize) -> Heisenberg {
    let dim = 4 * n;
    let nf = 3 * n - 1;
    let ch = RestrictedChart::new(n);
    let q = (1..=n)
        .map(|a| {
            VectorField::new(dim, move |p: &[f64]| {
                let mut v = vec![0.0; dim];
                v[nf + a] = 1.0;
                v[nf] = 0.5 * full_slots(n, &p[..nf])[3 * a];
                v
            })
        })
        .collect();
    let p = (1..=n)
        .map(|a| {
            VectorField::new(dim, move |p: &[f64]| {
                let mut v = vec![0.0; dim];
                v[ch.free_index(3 * a).unwrap_or(0)] = 1.0;
                v[nf] = -0.5 * p[nf + a];
                v
            })
        })
        .collect();
    let i = VectorField::coord(dim, nf);
    // −2R∂_R at fixed Z^A is the Euler field of the 𝒳^A
    let w = VectorField::new(dim, move |p: &[f64]| p.iter().enumerate().map(|(k, v)| if k == nf { -2.0 * v } else { -v }).collect());
    Heisenberg { q, p, i, w }
}

/// Max over the downstairs generators of the Lie derivative of the metric.
pub fn downstairs_killing_residual(
    g: &crate::excalc::MetricField,
    h: &Heisenberg,
    p: &[f64],
    scheme: DerivScheme,
) -> f64 {
    let mut r: f64 = 0.0;
    for v in h.q.iter().chain(&h.p).chain([&h.i, &h.w]) {
        let l = crate::excalc::lie_metric(v, g, scheme);
        r = r.max(crate::excalc::amax(&l.at(p)));
    }
    r
}

#[derive(Clone, Debug)]
pub struct SignatureReport {
    pub samples: usize,
    pub violations: usize,
    /// Common sign of the eigenvalues of `sg`, when there is one.
    pub sign: Option<f64>,
    /// `−g` positive definite with `s` of the opposite sign.
    pub flipped: bool,
    pub min_abs_eigenvalue: f64,
}

/// Checks that `sg` is definite at every sample.
pub fn signature_check(rd: &ReducedData, samples: &[Vec<f64>]) -> Result<SignatureReport> {
    let st = crate::qk::qk_structure(rd);
    let mut violations = 0;
    let mut sign: Option<f64> = None;
    let mut consistent = true;
    let mut min_abs = f64::INFINITY;
    for p in samples {
        let g = st.metric_at(p)? * rd.s;
        let ev = nalgebra::SymmetricEigen::new(g).eigenvalues;
        let pos = ev.iter().all(|v| *v > 0.0);
        let neg = ev.iter().all(|v| *v < 0.0);
        min_abs = ev.iter().fold(min_abs, |a, v| a.min(v.abs()));
        if !(pos || neg) {
            violations += 1;
            continue;
        }
        let sg = if pos { 1.0 } else { -1.0 };
        match sign {
            None => sign = Some(sg),
            Some(s0) if s0 != sg => consistent = false,
            _ => {}
        }
    }
    if !consistent {
        violations += 1;
        sign = None;
    }
    let flipped = sign == Some(-1.0);
    Ok(SignatureReport { samples: samples.len(), violations, sign, flipped, min_abs_eigenvalue: min_abs })
}

/// Boxed plug-in closure helper.
pub fn holo(f: impl Fn(&[C64]) -> Vec<C64> + Send + Sync + 'static) -> Arc<HoloFn> {
    let b: Box<HoloFn> = Box::new(f);
    Arc::from(b)
}
