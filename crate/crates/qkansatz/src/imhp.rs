//! Inhomogeneous charts on Im HPⁿ and covariant derivatives of sections.
//!
//! Only the chart built on the pair `(x⃗⁰, x⃗¹)` with the half-plane bounded
//! by the `i` axis, containing `j`, oriented by `k`.
//!
//! Slots `(I, i)` are numbered `3I + i` with `i = 0..3`. The four frozen
//! slots are `ρ⁰₁, ρ⁰₂, ρ⁰₃, ρ¹₃`; all other slots are free coordinates,
//! ordered `ρ¹₁, ρ¹₂, ρ²₁, ρ²₂, ρ²₃, …`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Matrix4;

use crate::error::{Error, Result};
use crate::excalc::{jacobian, DerivScheme, Field, SharedField};
use crate::quatmath::{eps, rot3, Quaternion};
use crate::scalar::{Dual, Scalar, D1, D2};

pub const FROZEN: [usize; 4] = [0, 1, 2, 5];

/// Point of the chart given by its `3n − 1` free coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct InhomPoint {
    pub n: usize,
    pub coords: Vec<f64>,
}

/// The canonical slice; carries `n` and the slot bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RestrictedChart {
    pub n: usize,
}

impl RestrictedChart {
    pub fn new(n: usize) -> Self {
        RestrictedChart { n }
    }
    pub fn slots(&self) -> usize {
        3 * (self.n + 1)
    }
    pub fn free_dim(&self) -> usize {
        3 * self.n - 1
    }
    /// Free-coordinate index of slot `s`, `None` for the frozen ones.
    pub fn free_index(&self, s: usize) -> Option<usize> {
        match s {
            0..=2 | 5 => None,
            3 | 4 => Some(s - 3),
            _ => Some(s - 4),
        }
    }
    pub fn free_slot(&self, f: usize) -> usize {
        if f < 2 {
            f + 3
        } else {
            f + 4
        }
    }
}

impl InhomPoint {
    pub fn new(n: usize, coords: Vec<f64>) -> Result<Self> {
        if n == 0 || coords.len() != 3 * n - 1 {
            return Err(Error::Invalid("inhomogeneous point needs 3n - 1 coordinates"));
        }
        if !(coords[1] > 0.0) {
            return Err(Error::Domain("second coordinate of the first point must be positive"));
        }
        Ok(InhomPoint { n, coords })
    }
    pub fn chart(&self) -> RestrictedChart {
        RestrictedChart::new(self.n)
    }
    /// All `3(n+1)` slot values.
    pub fn full(&self) -> Vec<f64> {
        full_slots(self.n, &self.coords)
    }
    pub fn vectors(&self) -> Vec<[f64; 3]> {
        self.full().chunks(3).map(|c| [c[0], c[1], c[2]]).collect()
    }
}

pub fn full_slots<T: Scalar>(n: usize, f: &[T]) -> Vec<T> {
    let mut r = vec![T::zero(); 3 * (n + 1)];
    r[0] = T::one();
    r[3] = f[0];
    r[4] = f[1];
    r[6..].copy_from_slice(&f[2..]);
    r
}

/// `𝔏_{a,j}^I = ⟨u_a u_j, ρ^I⟩` at slot `s = 3I + j`.
pub fn frak_l<T: Scalar>(full: &[T], a: usize, s: usize) -> T {
    let (i_pt, j) = (s / 3, s % 3);
    if a == 0 {
        return full[s];
    }
    let mut acc = T::zero();
    for k in 0..3 {
        let e = eps(a - 1, j, k);
        if e != 0.0 {
            acc = acc + T::cst(e) * full[3 * i_pt + k];
        }
    }
    acc
}

/// Quaternion-valued `𝔄_{Ii}` for every slot and the coefficient table of
/// `𝔇_{Ii}` over `∂/∂(free coordinates)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnCoeffs {
    pub n: usize,
    pub a: Vec<[f64; 4]>,
    pub d: Vec<Vec<f64>>,
}

/// Closed-form `𝔄` on the frozen slots, generic in the scalar type.
pub fn frozen_table<T: Scalar>(r11: T, r12: T) -> [[T; 4]; 4] {
    let (z, o) = (T::zero(), T::one());
    [
        [o, z, z, z],
        [z, z, z, -o],
        [z, r11 / r12, o, z],
        [z, -(o / r12), z, z],
    ]
}

fn d_table(n: usize, full: &[f64], a: &[[f64; 4]]) -> Vec<Vec<f64>> {
    let ch = RestrictedChart::new(n);
    (0..ch.slots())
        .map(|s| {
            let mut row = vec![0.0; ch.free_dim()];
            if let Some(f) = ch.free_index(s) {
                row[f] = 1.0;
            }
            for (k, &ak) in a[s].iter().enumerate() {
                if ak != 0.0 {
                    for (f, r) in row.iter_mut().enumerate() {
                        *r -= ak * frak_l(full, k, ch.free_slot(f));
                    }
                }
            }
            row
        })
        .collect()
}

/// Solves the linear conditions for `𝔄` on the frozen slots.
pub fn conn_coeffs(rho: &InhomPoint) -> Result<ConnCoeffs> {
    if !(rho.coords[1] > 0.0) {
        return Err(Error::Domain("second coordinate of the first point must be positive"));
    }
    let full = rho.full();
    let m = Matrix4::from_fn(|a, k| frak_l(&full, a, FROZEN[k]));
    let inv = m.try_inverse().ok_or(Error::Singular { what: "frozen-slot system", cond: f64::INFINITY })?;
    let mut a = vec![[0.0; 4]; 3 * (rho.n + 1)];
    for (k, &s) in FROZEN.iter().enumerate() {
        for b in 0..4 {
            a[s][b] = inv[(k, b)];
        }
    }
    let d = d_table(rho.n, &full, &a);
    Ok(ConnCoeffs { n: rho.n, a, d })
}

/// The same coefficients from the closed-form table.
pub fn conn_coeffs_table(rho: &InhomPoint) -> ConnCoeffs {
    let full = rho.full();
    let t = frozen_table(rho.coords[0], rho.coords[1]);
    let mut a = vec![[0.0; 4]; 3 * (rho.n + 1)];
    for (k, &s) in FROZEN.iter().enumerate() {
        a[s] = t[k];
    }
    let d = d_table(rho.n, &full, &a);
    ConnCoeffs { n: rho.n, a, d }
}

/// Residuals of the four defining conditions, in the order
/// `dρ·𝔄 = 0`, `𝔏·𝔄 = δ`, `dρ·𝔇 = d`, `𝔏·𝔇 = 0`.
pub fn al_residuals(cc: &ConnCoeffs, rho: &InhomPoint) -> [f64; 4] {
    let ch = rho.chart();
    let full = rho.full();
    let mut r = [0.0f64; 4];
    for s in 0..ch.slots() {
        if let Some(f) = ch.free_index(s) {
            for b in 0..4 {
                r[0] = r[0].max(cc.a[s][b].abs());
            }
            for g in 0..ch.free_dim() {
                let e = if f == g { 1.0 } else { 0.0 };
                r[2] = r[2].max((cc.d[s][g] - e).abs());
            }
        }
    }
    for a in 0..4 {
        for b in 0..4 {
            let v: f64 = (0..ch.slots()).map(|s| frak_l(&full, a, s) * cc.a[s][b]).sum();
            r[1] = r[1].max((v - if a == b { 1.0 } else { 0.0 }).abs());
        }
        for g in 0..ch.free_dim() {
            let v: f64 = (0..ch.slots()).map(|s| frak_l(&full, a, s) * cc.d[s][g]).sum();
            r[3] = r[3].max(v.abs());
        }
    }
    r
}

/// Embedding `x⃗^I = q̄ ρ⃗^I q`.
pub fn embed(rho: &InhomPoint, q: Quaternion) -> Vec<f64> {
    let full = rho.full();
    let mut x = Vec::with_capacity(full.len());
    for c in full.chunks(3) {
        let v = crate::quatmath::sandwich(q, crate::quatmath::ImQuaternion::from_slice(c));
        x.extend(v.to_array());
    }
    x
}

fn norm3(v: &[f64]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn cross3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Unit quaternion `u` with `v ↦ u v ū` given by the rotation matrix `m`.
fn quat_of_rotation(m: &[[f64; 3]; 3]) -> Quaternion {
    let tr = m[0][0] + m[1][1] + m[2][2];
    let (w, x, y, z);
    if tr > 0.0 {
        let s = 2.0 * (tr + 1.0).sqrt();
        w = 0.25 * s;
        x = (m[2][1] - m[1][2]) / s;
        y = (m[0][2] - m[2][0]) / s;
        z = (m[1][0] - m[0][1]) / s;
    } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
        let s = 2.0 * (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt();
        w = (m[2][1] - m[1][2]) / s;
        x = 0.25 * s;
        y = (m[0][1] + m[1][0]) / s;
        z = (m[0][2] + m[2][0]) / s;
    } else if m[1][1] > m[2][2] {
        let s = 2.0 * (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt();
        w = (m[0][2] - m[2][0]) / s;
        x = (m[0][1] + m[1][0]) / s;
        y = 0.25 * s;
        z = (m[1][2] + m[2][1]) / s;
    } else {
        let s = 2.0 * (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt();
        w = (m[1][0] - m[0][1]) / s;
        x = (m[0][2] + m[2][0]) / s;
        y = (m[1][2] + m[2][1]) / s;
        z = 0.25 * s;
    }
    Quaternion::new(w, x, y, z)
}

/// Inverse of [`embed`] on the chart domain. Returns the `q` whose first
/// nonzero component is positive.
pub fn project(x: &[f64]) -> Result<(InhomPoint, Quaternion)> {
    if x.len() < 6 || x.len() % 3 != 0 {
        return Err(Error::Invalid("configuration needs at least two points"));
    }
    let n = x.len() / 3 - 1;
    let (x0, x1) = (&x[0..3], &x[3..6]);
    let r0 = norm3(x0);
    let nv = cross3(x0, x1);
    let nn = norm3(&nv);
    let scale = r0 * norm3(x1);
    if r0 == 0.0 || !(nn > 1e-6 * scale) {
        return Err(Error::Degenerate("first two points vanish or are collinear"));
    }
    let e1 = [x0[0] / r0, x0[1] / r0, x0[2] / r0];
    let e3 = [nv[0] / nn, nv[1] / nn, nv[2] / nn];
    let e2 = cross3(&e3, &e1);
    // ρ = R x / |q|² with the frame as rows of R; the rotation v ↦ u v ū is Rᵀ
    let rows = [e1, e2, e3];
    let mut rt = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            rt[a][b] = rows[b][a];
        }
    }
    let u = quat_of_rotation(&rt).conj();
    let q = u.scale(r0.sqrt()).z2_canonical();
    let mut full = Vec::with_capacity(x.len());
    for c in x.chunks(3) {
        for e in &rows {
            full.push((e[0] * c[0] + e[1] * c[1] + e[2] * c[2]) / r0);
        }
    }
    let mut coords = vec![full[3], full[4]];
    coords.extend_from_slice(&full[6..]);
    Ok((InhomPoint { n, coords }, q))
}

/// Section of `E^(w, 3^⊗rank)` with `mult` copies; its evaluator maps the
/// free coordinates to `mult · 3^rank` values, tensor indices innermost.
#[derive(Clone)]
pub struct Section {
    pub n: usize,
    pub w: i32,
    pub rank: usize,
    pub mult: usize,
    pub field: SharedField,
    pub scheme: DerivScheme,
}

pub const MAX_RANK: usize = 4;

impl Section {
    pub fn new(n: usize, w: i32, rank: usize, mult: usize, field: SharedField, scheme: DerivScheme) -> Result<Self> {
        if rank > MAX_RANK {
            return Err(Error::Invalid("tensor rank above the supported maximum"));
        }
        Ok(Section { n, w, rank, mult, field, scheme })
    }
    pub fn scalar(n: usize, w: i32, field: SharedField) -> Self {
        Section { n, w, rank: 0, mult: 1, field, scheme: DerivScheme::Dual }
    }
    pub fn vector(n: usize, w: i32, field: SharedField) -> Self {
        Section { n, w, rank: 1, mult: 1, field, scheme: DerivScheme::Dual }
    }
    pub fn len(&self) -> usize {
        self.mult * 3usize.pow(self.rank as u32)
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn at(&self, rho: &InhomPoint) -> Vec<f64> {
        self.field.eval(&rho.coords)
    }
    /// Value of the lift at `embed(ρ, q)`:
    /// `|q|^{2w} R(q⁻¹) ⊗ … ⊗ R(q⁻¹) 𝓕(ρ)`.
    pub fn lift(&self, rho: &InhomPoint, q: Quaternion) -> Vec<f64> {
        let v = self.at(rho);
        let r = rot3(q.inv());
        let mut out = rotate_tensor(&v, self.rank, &r);
        let s = q.norm2().powi(self.w);
        for o in out.iter_mut() {
            *o *= s;
        }
        out
    }
}

/// Applies `r` to every tensor index of each block of `3^rank` values.
fn rotate_tensor(v: &[f64], rank: usize, r: &[[f64; 3]; 3]) -> Vec<f64> {
    let mut out = v.to_vec();
    let block = 3usize.pow(rank as u32);
    for p in 0..rank {
        let stride = 3usize.pow((rank - 1 - p) as u32);
        let prev = out.clone();
        for (o, val) in out.iter_mut().enumerate() {
            let t = o % block;
            let jp = (t / stride) % 3;
            let base = o - jp * stride;
            *val = (0..3).map(|l| r[jp][l] * prev[base + l * stride]).sum();
        }
    }
    out
}

/// `∇_{Ii}` of the values `vals` with Jacobian `jac` (`[out][free]`), using
/// the slot coefficients `a`. Output layout `[mult][I][i][tensor]`.
fn nabla_core<T: Scalar>(n: usize, w: i32, rank: usize, mult: usize, full: &[T], vals: &[T], jac: &[Vec<T>], a: &[[T; 4]]) -> Vec<T> {
    let ch = RestrictedChart::new(n);
    let block = 3usize.pow(rank as u32);
    let nf = ch.free_dim();
    // 𝔏_a·∂ applied to each component
    let ldf: Vec<Vec<T>> = (0..4)
        .map(|k| {
            (0..vals.len())
                .map(|o| {
                    let mut acc = T::zero();
                    for f in 0..nf {
                        acc = acc + frak_l(full, k, ch.free_slot(f)) * jac[o][f];
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let mut out = vec![T::zero(); mult * (n + 1) * 3 * block];
    for c in 0..mult {
        for s in 0..ch.slots() {
            let fs = ch.free_index(s);
            for t in 0..block {
                let o = c * block + t;
                let mut v = match fs {
                    Some(f) => jac[o][f],
                    None => T::zero(),
                };
                for k in 0..4 {
                    v = v - a[s][k] * ldf[k][o];
                }
                v = v + T::cst(w as f64) * a[s][0] * vals[o];
                for p in 0..rank {
                    let stride = 3usize.pow((rank - 1 - p) as u32);
                    let jp = (t / stride) % 3;
                    let base = o - jp * stride;
                    for k in 0..3 {
                        for l in 0..3 {
                            let e = eps(jp, k, l);
                            if e != 0.0 {
                                v = v - T::cst(e) * a[s][k + 1] * vals[base + l * stride];
                            }
                        }
                    }
                }
                out[(c * ch.slots() + s) * block + t] = v;
            }
        }
    }
    out
}

fn table_slots<T: Scalar>(n: usize, full: &[T]) -> Vec<[T; 4]> {
    let t = frozen_table(full[3], full[4]);
    let mut a = vec![[T::zero(); 4]; 3 * (n + 1)];
    for (k, &s) in FROZEN.iter().enumerate() {
        a[s] = t[k];
    }
    a
}

/// `∇_{Ii} 𝓕` at `ρ` with explicit coefficients, layout `[mult][I][i][tensor]`.
pub fn cov_deriv_with(s: &Section, rho: &InhomPoint, cc: &ConnCoeffs) -> Vec<f64> {
    let vals = s.at(rho);
    let jac = jacobian(s.field.as_ref(), &rho.coords, s.scheme);
    nabla_core(s.n, s.w, s.rank, s.mult, &rho.full(), &vals, &jac, &cc.a)
}

pub fn cov_deriv_at(s: &Section, rho: &InhomPoint) -> Result<Vec<f64>> {
    Ok(cov_deriv_with(s, rho, &conn_coeffs(rho)?))
}

struct CovDerivField(Section);

impl Field for CovDerivField {
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let s = &self.0;
        let vals = s.field.eval(x);
        let jac = jacobian(s.field.as_ref(), x, s.scheme);
        let full = full_slots(s.n, x);
        nabla_core(s.n, s.w, s.rank, s.mult, &full, &vals, &jac, &table_slots(s.n, &full))
    }
    fn eval_d1(&self, x: &[D1]) -> Option<Vec<D1>> {
        let s = &self.0;
        let vals = s.field.eval_d1(x)?;
        let nf = x.len();
        let mut jac = vec![vec![D1::cst(0.0); nf]; vals.len()];
        for f in 0..nf {
            let z: Vec<D2> = x
                .iter()
                .enumerate()
                .map(|(k, &xk)| Dual::new(xk, D1::cst(if k == f { 1.0 } else { 0.0 })))
                .collect();
            let r = s.field.eval_d2(&z)?;
            for (o, ro) in r.iter().enumerate() {
                jac[o][f] = ro.d;
            }
        }
        let full = full_slots(s.n, x);
        Some(nabla_core(s.n, s.w, s.rank, s.mult, &full, &vals, &jac, &table_slots(s.n, &full)))
    }
}

/// `∇𝓕` as a section of `M ⊗ E^(w−1, 3)` tensored with the input bundle:
/// weight `w − 1`, one more tensor index (first), `mult · (n+1)` copies.
pub fn cov_deriv(s: &Section) -> Result<Section> {
    Section::new(s.n, s.w - 1, s.rank + 1, s.mult * (s.n + 1), Arc::new(CovDerivField(s.clone())), s.scheme)
}

/// Section-type constraints `𝔏_a·∇𝓕 = w δ_{a0} 𝓕 + (rotation of the tensor
/// indices)`, i.e. `ρ⃗^I·∇⃗_I 𝓕 = w𝓕` and `−ρ⃗^I×∇⃗_I 𝓕 = (spin part)`.
pub fn section_constraints_with(s: &Section, rho: &InhomPoint, cc: &ConnCoeffs) -> f64 {
    let nab = cov_deriv_with(s, rho, cc);
    let vals = s.at(rho);
    let full = rho.full();
    let slots = 3 * (s.n + 1);
    let block = 3usize.pow(s.rank as u32);
    let mut r: f64 = 0.0;
    for c in 0..s.mult {
        for t in 0..block {
            let o = c * block + t;
            for a in 0..4 {
                let lhs: f64 = (0..slots).map(|sl| frak_l(&full, a, sl) * nab[(c * slots + sl) * block + t]).sum();
                let mut rhs = if a == 0 { s.w as f64 * vals[o] } else { 0.0 };
                if a > 0 {
                    for p in 0..s.rank {
                        let stride = 3usize.pow((s.rank - 1 - p) as u32);
                        let jp = (t / stride) % 3;
                        let base = o - jp * stride;
                        for l in 0..3 {
                            rhs += eps(a - 1, jp, l) * vals[base + l * stride];
                        }
                    }
                }
                r = r.max((lhs - rhs).abs());
            }
        }
    }
    r
}

pub fn section_constraints_residual(s: &Section, rho: &InhomPoint) -> Result<f64> {
    Ok(section_constraints_with(s, rho, &conn_coeffs(rho)?))
}

/// `dρ·𝔄 = 0` and `dρ·∇ = d` on the given test sections.
pub fn completeness_check_with(cc: &ConnCoeffs, rho: &InhomPoint, tests: &[Section]) -> f64 {
    let ch = rho.chart();
    let mut r: f64 = 0.0;
    for s in 0..ch.slots() {
        if ch.free_index(s).is_some() {
            for b in 0..4 {
                r = r.max(cc.a[s][b].abs());
            }
        }
    }
    for t in tests {
        let nab = cov_deriv_with(t, rho, cc);
        let jac = jacobian(t.field.as_ref(), &rho.coords, t.scheme);
        let block = 3usize.pow(t.rank as u32);
        for c in 0..t.mult {
            for s in 0..ch.slots() {
                if let Some(f) = ch.free_index(s) {
                    for tt in 0..block {
                        let v = nab[(c * ch.slots() + s) * block + tt];
                        r = r.max((v - jac[c * block + tt][f]).abs());
                    }
                }
            }
        }
    }
    r
}

struct Probe(usize);

impl crate::excalc::GenericMap for Probe {
    fn apply<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let k = x.len();
        let a = x[self.0 % k];
        let b = x[(self.0 + 1) % k];
        vec![a * a * b + T::cst(0.5) * b.sin(), a.exp() - b, a * b]
    }
}

/// Completeness relations on a small built-in family of test sections.
pub fn completeness_check(rho: &InhomPoint) -> Result<f64> {
    let cc = conn_coeffs(rho)?;
    let tests: Vec<Section> = (0..3)
        .map(|i| Section {
            n: rho.n,
            w: i as i32 - 1,
            rank: if i == 1 { 1 } else { 0 },
            mult: if i == 1 { 1 } else { 3 },
            field: Arc::new(crate::excalc::Gen(Probe(i))),
            scheme: DerivScheme::Dual,
        })
        .collect();
    Ok(completeness_check_with(&cc, rho, &tests))
}

/// `∂_{x^I_i} F` predicted from the section, `[mult][I][i][tensor]`.
pub fn lifted_gradient(s: &Section, rho: &InhomPoint, q: Quaternion) -> Result<Vec<f64>> {
    let nab = cov_deriv_at(s, rho)?;
    let r = rot3(q.inv());
    let mut out = rotate_tensor(&nab, s.rank + 1, &r);
    let f = q.norm2().powi(s.w - 1);
    for v in out.iter_mut() {
        *v *= f;
    }
    Ok(out)
}

/// Compares `∂_x F` of a homogeneous-coordinate function `lift` against
/// [`lifted_gradient`] at `x`, by central differences with step `h`.
pub fn lift_compat_residual(s: &Section, lift: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Result<f64> {
    let (rho, q) = project(x)?;
    let pred = lifted_gradient(s, &rho, q)?;
    let jac = crate::excalc::fd_jacobian(lift, x, h);
    let block = 3usize.pow(s.rank as u32);
    let slots = x.len();
    let mut r: f64 = 0.0;
    for c in 0..s.mult {
        for sl in 0..slots {
            for t in 0..block {
                let fd = jac[c * block + t][sl];
                r = r.max((fd - pred[(c * slots + sl) * block + t]).abs());
            }
        }
    }
    Ok(r)
}

/// `max |[∇_{Ii}, ∇_{Jj}] 𝓕|` at `ρ`.
pub fn flatness_residual(s: &Section, rho: &InhomPoint) -> Result<f64> {
    let d1 = cov_deriv(s)?;
    let d2 = cov_deriv_at(&d1, rho)?;
    // layout [c][I'][i'] [I][i] [tensor] with c the original copy index
    let slots = 3 * (s.n + 1);
    let block = 3usize.pow(s.rank as u32);
    let mut r: f64 = 0.0;
    for c in 0..s.mult {
        for a in 0..slots {
            for b in 0..slots {
                for t in 0..block {
                    let idx = |outer: usize, inner: usize| {
                        // d1 copy index = c·(n+1) + I_inner, its tensor = (i_inner, t)
                        let copy = c * (s.n + 1) + inner / 3;
                        let tens = (inner % 3) * block + t;
                        (copy * slots + outer) * 3 * block + tens
                    };
                    r = r.max((d2[idx(a, b)] - d2[idx(b, a)]).abs());
                }
            }
        }
    }
    Ok(r)
}
