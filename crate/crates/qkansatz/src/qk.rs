//! Quaternionic Kähler structures from reduced Gibbons-Hawking data.
//!
//! The base chart has dimension `4n`: the `3n − 1` free inhomogeneous
//! coordinates, then `ψ_0 … ψ_n`. Two-forms and metrics are kept as `sω⃗`
//! and `sg`.
//!
//! Swann-type checks use the `4n + 4` chart `(ρ, ψ, q)`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::excalc::{
    amax, d, fd4_jacobian, fd_jacobian, jacobian, lie_metric, sym11, wedge, wedge11, DerivScheme, Jet, JetGen, JetMap,
    KForm, MetricField, SharedField, VectorField,
};
use crate::gh::{invert, metric_matrix, omega_matrices, xi, GHData};
use crate::imhp::{cov_deriv_at, full_slots, InhomPoint, RestrictedChart, Section};
use crate::quatmath::{eps, sigma_r_matrix, Quaternion};

/// Quaternion-valued 1-form, components `[real, i, j, k][μ]`.
pub type QForm = [Vec<f64>; 4];
/// Quaternion-valued 2-form as four antisymmetric (or symmetric) matrices.
pub type QMat = [DMatrix<f64>; 4];

#[derive(Clone)]
pub struct ReducedData {
    pub n: usize,
    /// `𝒰_IJ` as a section with `(n+1)²` copies and weight −1.
    pub higgs: Section,
    /// `𝒜_K` on the `4n` chart, `[K][μ]` flattened.
    pub conn: SharedField,
    pub s: f64,
    pub scheme: DerivScheme,
}

impl ReducedData {
    pub fn m(&self) -> usize {
        self.n + 1
    }
    pub fn dim(&self) -> usize {
        4 * self.n
    }
    pub fn free_dim(&self) -> usize {
        3 * self.n - 1
    }
    pub fn rho(&self, p: &[f64]) -> InhomPoint {
        InhomPoint { n: self.n, coords: p[..self.free_dim()].to_vec() }
    }
    pub fn higgs_at(&self, p: &[f64]) -> DMatrix<f64> {
        let m = self.m();
        let v = self.higgs.field.eval(&p[..self.free_dim()]);
        DMatrix::from_fn(m, m, |i, j| 0.5 * (v[i * m + j] + v[j * m + i]))
    }
    pub fn conn_at(&self, p: &[f64]) -> Vec<Vec<f64>> {
        let v = self.conn.eval(p);
        v.chunks(self.dim()).map(|c| c.to_vec()).collect()
    }
    /// `𝒰 = 2𝒰_IJ ρ⃗^I·ρ⃗^J`.
    pub fn potential(&self, p: &[f64]) -> f64 {
        let full = full_slots(self.n, &p[..self.free_dim()]);
        let u = self.higgs_at(p);
        potential_of(&u, &full)
    }
}

fn potential_of(u: &DMatrix<f64>, full: &[f64]) -> f64 {
    let m = u.nrows();
    let mut acc = 0.0;
    for i in 0..m {
        for j in 0..m {
            acc += 2.0 * u[(i, j)] * (0..3).map(|c| full[3 * i + c] * full[3 * j + c]).sum::<f64>();
        }
    }
    acc
}

/// Everything the formula sets need at one point.
struct Frame {
    n: usize,
    dim: usize,
    full: Vec<f64>,
    u: DMatrix<f64>,
    uinv: DMatrix<f64>,
    cu: f64,
    /// `d𝒰`.
    du: Vec<f64>,
    /// `dρ^I_a` per slot.
    drho: Vec<Vec<f64>>,
    /// `dψ_I + 𝒜_I`.
    beta: Vec<Vec<f64>>,
}

impl Frame {
    fn new(rd: &ReducedData, p: &[f64]) -> Result<Self> {
        let (n, dim, m) = (rd.n, rd.dim(), rd.m());
        let nf = rd.free_dim();
        let full = full_slots(n, &p[..nf]);
        let u = rd.higgs_at(p);
        let uinv = invert(u.clone(), "reduced Higgs field")?;
        let cu = potential_of(&u, &full);
        if cu == 0.0 || !cu.is_finite() {
            return Err(Error::Domain("reduced potential vanishes"));
        }
        let ch = RestrictedChart::new(n);
        let jac = jacobian(rd.higgs.field.as_ref(), &p[..nf], rd.higgs.scheme);
        let mut du = vec![0.0; dim];
        for f in 0..nf {
            let sl = ch.free_slot(f);
            let (pt, c) = (sl / 3, sl % 3);
            let mut acc = 0.0;
            for i in 0..m {
                for j in 0..m {
                    let dot: f64 = (0..3).map(|k| full[3 * i + k] * full[3 * j + k]).sum();
                    acc += jac[i * m + j][f] * dot;
                }
                acc += 2.0 * u[(pt, i)] * full[3 * i + c];
            }
            du[f] = 2.0 * acc;
        }
        let drho = (0..3 * m)
            .map(|sl| {
                let mut v = vec![0.0; dim];
                if let Some(f) = ch.free_index(sl) {
                    v[f] = 1.0;
                }
                v
            })
            .collect();
        let mut beta = rd.conn_at(p);
        for (k, b) in beta.iter_mut().enumerate() {
            b[nf + k] += 1.0;
        }
        Ok(Frame { n, dim, full, u, uinv, cu, du, drho, beta })
    }

    fn m(&self) -> usize {
        self.n + 1
    }

    fn rho(&self, i: usize, a: usize) -> f64 {
        self.full[3 * i + a]
    }

    /// `θ₀ = 𝒰_IJ ρ⃗^J·dρ⃗^I / 𝒰`.
    fn theta0(&self) -> Vec<f64> {
        let m = self.m();
        let mut t = vec![0.0; self.dim];
        for i in 0..m {
            for j in 0..m {
                for a in 0..3 {
                    let c = self.u[(i, j)] * self.rho(j, a) / self.cu;
                    axpy(&mut t, c, &self.drho[3 * i + a]);
                }
            }
        }
        t
    }

    /// `θ⃗ = −[𝒰_IJ ρ⃗^J × dρ⃗^I + ρ⃗^I(dψ_I + 𝒜_I)] / 𝒰`.
    fn theta(&self) -> [Vec<f64>; 3] {
        let m = self.m();
        core::array::from_fn(|a| {
            let mut t = vec![0.0; self.dim];
            for i in 0..m {
                for j in 0..m {
                    for b in 0..3 {
                        for c in 0..3 {
                            let e = eps(a, b, c);
                            if e != 0.0 {
                                axpy(&mut t, -e * self.u[(i, j)] * self.rho(j, b) / self.cu, &self.drho[3 * i + c]);
                            }
                        }
                    }
                }
                axpy(&mut t, -self.rho(i, a) / self.cu, &self.beta[i]);
            }
            t
        })
    }

    /// `dρ⃗^I − 2θ₀ρ⃗^I + 2θ⃗×ρ⃗^I` and `dψ_I + 𝒜_I + 2𝒰_IK ρ⃗^K·θ⃗`.
    fn covariant(&self, th0: &[f64], th: &[Vec<f64>; 3]) -> (Vec<[Vec<f64>; 3]>, Vec<Vec<f64>>) {
        let m = self.m();
        let dd = (0..m)
            .map(|i| {
                core::array::from_fn(|a| {
                    let mut v = self.drho[3 * i + a].clone();
                    axpy(&mut v, -2.0 * self.rho(i, a), th0);
                    for b in 0..3 {
                        for c in 0..3 {
                            let e = eps(a, b, c);
                            if e != 0.0 {
                                axpy(&mut v, 2.0 * e * self.rho(i, c), &th[b]);
                            }
                        }
                    }
                    v
                })
            })
            .collect();
        let bb = (0..m)
            .map(|i| {
                let mut v = self.beta[i].clone();
                for k in 0..m {
                    for a in 0..3 {
                        axpy(&mut v, 2.0 * self.u[(i, k)] * self.rho(k, a), &th[a]);
                    }
                }
                v
            })
            .collect();
        (dd, bb)
    }

    /// Vectorial formula set.
    fn vector_set(&self) -> ([DMatrix<f64>; 3], DMatrix<f64>) {
        let (m, n) = (self.m(), self.dim);
        let (dd, bb) = self.covariant(&self.theta0(), &self.theta());
        let mut om: [DMatrix<f64>; 3] = core::array::from_fn(|_| DMatrix::zeros(n, n));
        let mut g = DMatrix::zeros(n, n);
        for i in 0..m {
            for j in 0..m {
                let c = self.u[(i, j)] / (2.0 * self.cu);
                for (k, w) in om.iter_mut().enumerate() {
                    for a in 0..3 {
                        for b in 0..3 {
                            let e = eps(k, a, b);
                            if e != 0.0 {
                                *w -= wedge11(&dd[i][a], &dd[j][b]) * (c * e);
                            }
                        }
                    }
                }
                for a in 0..3 {
                    g += sym11(&dd[i][a], &dd[j][a]) * c;
                }
                g += sym11(&bb[i], &bb[j]) * (self.uinv[(i, j)] / (2.0 * self.cu));
            }
            for (k, w) in om.iter_mut().enumerate() {
                *w -= wedge11(&dd[i][k], &bb[i]) / self.cu;
            }
        }
        (om, g)
    }

    /// `ν⃗^I = ρ⃗^I/𝒰` and `dν⃗^I` from the exact `d𝒰`.
    fn nu(&self) -> (Vec<[f64; 3]>, Vec<[Vec<f64>; 3]>) {
        let m = self.m();
        let nu = (0..m).map(|i| core::array::from_fn(|a| self.rho(i, a) / self.cu)).collect();
        let dnu = (0..m)
            .map(|i| {
                core::array::from_fn(|a| {
                    let mut v: Vec<f64> = self.drho[3 * i + a].iter().map(|x| x / self.cu).collect();
                    axpy(&mut v, -self.rho(i, a) / (self.cu * self.cu), &self.du);
                    v
                })
            })
            .collect();
        (nu, dnu)
    }

    /// The direct formula set in terms of `𝒲_IJ = 𝒰𝒰_IJ` and `ν⃗`.
    fn direct_set(&self) -> ([Vec<f64>; 3], [DMatrix<f64>; 3], DMatrix<f64>) {
        let (m, n) = (self.m(), self.dim);
        let w = &self.u * self.cu;
        let winv = &self.uinv / self.cu;
        let (nu, dnu) = self.nu();
        let th: [Vec<f64>; 3] = core::array::from_fn(|a| {
            let mut t = vec![0.0; n];
            for i in 0..m {
                for j in 0..m {
                    for b in 0..3 {
                        for c in 0..3 {
                            let e = eps(a, b, c);
                            if e != 0.0 {
                                axpy(&mut t, -e * w[(i, j)] * nu[j][b], &dnu[i][c]);
                            }
                        }
                    }
                }
                axpy(&mut t, -nu[i][a], &self.beta[i]);
            }
            t
        });
        let ee: Vec<[Vec<f64>; 3]> = (0..m)
            .map(|i| {
                core::array::from_fn(|a| {
                    let mut v = dnu[i][a].clone();
                    for b in 0..3 {
                        for c in 0..3 {
                            let e = eps(a, b, c);
                            if e != 0.0 {
                                axpy(&mut v, 2.0 * e * nu[i][c], &th[b]);
                            }
                        }
                    }
                    v
                })
            })
            .collect();
        let cc: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut v = self.beta[i].clone();
                for k in 0..m {
                    for a in 0..3 {
                        axpy(&mut v, 2.0 * w[(i, k)] * nu[k][a], &th[a]);
                    }
                }
                v
            })
            .collect();
        let mut om: [DMatrix<f64>; 3] = core::array::from_fn(|_| DMatrix::zeros(n, n));
        let mut g = DMatrix::zeros(n, n);
        for i in 0..m {
            for j in 0..m {
                for (k, o) in om.iter_mut().enumerate() {
                    for a in 0..3 {
                        for b in 0..3 {
                            let e = eps(k, a, b);
                            if e != 0.0 {
                                *o -= wedge11(&ee[i][a], &ee[j][b]) * (0.5 * w[(i, j)] * e);
                            }
                        }
                    }
                }
                for a in 0..3 {
                    g += sym11(&ee[i][a], &ee[j][a]) * (0.5 * w[(i, j)]);
                }
                g += sym11(&cc[i], &cc[j]) * (0.5 * winv[(i, j)]);
            }
            for (k, o) in om.iter_mut().enumerate() {
                *o -= wedge11(&ee[i][k], &cc[i]);
            }
        }
        (th, om, g)
    }

    /// `h^I = 𝒰^IJ(dψ_J + 𝒜_J) + dρ⃗^I`.
    fn h(&self) -> Vec<QForm> {
        let m = self.m();
        (0..m)
            .map(|i| {
                let mut re = vec![0.0; self.dim];
                for j in 0..m {
                    axpy(&mut re, self.uinv[(i, j)], &self.beta[j]);
                }
                [re, self.drho[3 * i].clone(), self.drho[3 * i + 1].clone(), self.drho[3 * i + 2].clone()]
            })
            .collect()
    }

    fn rho_q(&self, i: usize) -> [f64; 4] {
        [0.0, self.rho(i, 0), self.rho(i, 1), self.rho(i, 2)]
    }

    /// `θ = 𝒰_IJ ρ̄^I h^J / (2𝒰_MN ρ̄^M ρ^N)`.
    fn theta_quat(&self, h: &[QForm]) -> QForm {
        let m = self.m();
        let mut t = qf_zero(self.dim);
        for i in 0..m {
            for j in 0..m {
                let term = qf_left(qconj(self.rho_q(i)), &h[j]);
                qf_axpy(&mut t, self.u[(i, j)] / self.cu, &term);
            }
        }
        t
    }

    /// First quaternionic formula set, returned as full quaternion matrices.
    fn quat_set_1(&self) -> (QMat, QMat) {
        let (m, n) = (self.m(), self.dim);
        let h = self.h();
        let half = self.cu / 2.0;
        let mut a_w = qm_zero(n);
        let mut a_s = qm_zero(n);
        let mut p = qf_zero(n);
        let mut q = qf_zero(n);
        for i in 0..m {
            for j in 0..m {
                let hb = qf_conj(&h[i]);
                qm_axpy(&mut a_w, half * self.u[(i, j)], &qwedge(&hb, &h[j]));
                qm_axpy(&mut a_s, half * self.u[(i, j)], &qsym(&hb, &h[j]));
                qf_axpy(&mut p, self.u[(i, j)], &qf_right(&hb, self.rho_q(j)));
                qf_axpy(&mut q, self.u[(i, j)], &qf_left(qconj(self.rho_q(i)), &h[j]));
            }
        }
        let den = self.cu * self.cu;
        qm_axpy(&mut a_w, -1.0, &qwedge(&p, &q));
        qm_axpy(&mut a_s, -1.0, &qsym(&p, &q));
        (qm_scale(&a_w, 1.0 / den), qm_scale(&a_s, 1.0 / den))
    }

    /// Second quaternionic formula set, with `h^I − 2ρ^I θ`.
    fn quat_set_2(&self) -> (QMat, QMat) {
        let (m, n) = (self.m(), self.dim);
        let h = self.h();
        let th = self.theta_quat(&h);
        let k: Vec<QForm> = (0..m)
            .map(|i| {
                let mut v = h[i].clone();
                qf_axpy(&mut v, -2.0, &qf_left(self.rho_q(i), &th));
                v
            })
            .collect();
        let mut w = qm_zero(n);
        let mut s = qm_zero(n);
        for i in 0..m {
            for j in 0..m {
                let c = self.u[(i, j)] / (2.0 * self.cu);
                let kb = qf_conj(&k[i]);
                qm_axpy(&mut w, c, &qwedge(&kb, &k[j]));
                qm_axpy(&mut s, c, &qsym(&kb, &k[j]));
            }
        }
        (w, s)
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    if a != 0.0 {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += a * xi;
        }
    }
}

fn qconj(q: [f64; 4]) -> [f64; 4] {
    [q[0], -q[1], -q[2], -q[3]]
}

/// `(c, sign)` with `u_a u_b = sign · u_c`.
fn basis_product(a: usize, b: usize) -> (usize, f64) {
    let p = (Quaternion::<f64>::basis(a) * Quaternion::basis(b)).to_array();
    let c = p.iter().position(|v| *v != 0.0).unwrap_or(0);
    (c, p[c])
}

pub fn qf_zero(dim: usize) -> QForm {
    core::array::from_fn(|_| vec![0.0; dim])
}

pub fn qf_conj(a: &QForm) -> QForm {
    core::array::from_fn(|c| if c == 0 { a[0].clone() } else { a[c].iter().map(|v| -v).collect() })
}

fn qf_axpy(y: &mut QForm, s: f64, x: &QForm) {
    for c in 0..4 {
        axpy(&mut y[c], s, &x[c]);
    }
}

/// `q a` for a constant quaternion `q`.
pub fn qf_left(q: [f64; 4], a: &QForm) -> QForm {
    let mut out = qf_zero(a[0].len());
    for x in 0..4 {
        for y in 0..4 {
            if q[x] != 0.0 {
                let (c, s) = basis_product(x, y);
                axpy(&mut out[c], s * q[x], &a[y]);
            }
        }
    }
    out
}

/// `a q` for a constant quaternion `q`.
pub fn qf_right(a: &QForm, q: [f64; 4]) -> QForm {
    let mut out = qf_zero(a[0].len());
    for x in 0..4 {
        for y in 0..4 {
            if q[y] != 0.0 {
                let (c, s) = basis_product(x, y);
                axpy(&mut out[c], s * q[y], &a[x]);
            }
        }
    }
    out
}

fn qm_zero(n: usize) -> QMat {
    core::array::from_fn(|_| DMatrix::zeros(n, n))
}

fn qm_axpy(y: &mut QMat, s: f64, x: &QMat) {
    for c in 0..4 {
        y[c] += &x[c] * s;
    }
}

fn qm_scale(x: &QMat, s: f64) -> QMat {
    core::array::from_fn(|c| &x[c] * s)
}

/// `T = Σ u_x u_y a_x ⊗ b_y`.
fn qtensor(a: &QForm, b: &QForm) -> QMat {
    let n = a[0].len();
    let mut t = qm_zero(n);
    for x in 0..4 {
        for y in 0..4 {
            let (c, s) = basis_product(x, y);
            for mu in 0..n {
                if a[x][mu] != 0.0 {
                    for nu in 0..n {
                        t[c][(mu, nu)] += s * a[x][mu] * b[y][nu];
                    }
                }
            }
        }
    }
    t
}

/// `a ∧ b` for quaternion-valued 1-forms, factor order kept.
pub fn qwedge(a: &QForm, b: &QForm) -> QMat {
    let t = qtensor(a, b);
    core::array::from_fn(|c| &t[c] - t[c].transpose())
}

/// Symmetric product `a b`.
pub fn qsym(a: &QForm, b: &QForm) -> QMat {
    let t = qtensor(a, b);
    core::array::from_fn(|c| (&t[c] + t[c].transpose()) * 0.5)
}

/// Entry-wise `q̄ M q`.
fn qm_sandwich(q: Quaternion, mm: &QMat) -> QMat {
    let n = mm[0].nrows();
    let mut out = qm_zero(n);
    for mu in 0..n {
        for nu in 0..n {
            let v = Quaternion::new(mm[0][(mu, nu)], mm[1][(mu, nu)], mm[2][(mu, nu)], mm[3][(mu, nu)]);
            let r = (q.conj() * v * q).to_array();
            for c in 0..4 {
                out[c][(mu, nu)] = r[c];
            }
        }
    }
    out
}

/// `𝒰_IJ(ρ) = U_IJ(ρ⃗)` read on the `q = 1` slice.
pub fn reduce_higgs(gh: &GHData) -> Result<Section> {
    let n = gh.m.checked_sub(1).filter(|n| *n >= 1).ok_or(Error::Invalid("reduction needs at least two points"))?;
    Section::new(n, -1, 0, gh.m * gh.m, Arc::new(JetGen(SliceHiggs { n, f: gh.higgs.clone() })), gh.scheme)
}

struct SliceHiggs {
    n: usize,
    f: SharedField,
}

impl JetMap for SliceHiggs {
    fn apply<T: Jet>(&self, x: &[T]) -> Option<Vec<T>> {
        T::call(self.f.as_ref(), &full_slots(self.n, x))
    }
}

struct SliceConn {
    n: usize,
    f: SharedField,
}

impl JetMap for SliceConn {
    fn apply<T: Jet>(&self, p: &[T]) -> Option<Vec<T>> {
        let (n, m) = (self.n, self.n + 1);
        let nf = 3 * n - 1;
        let mut x = full_slots(n, &p[..nf]);
        x.extend_from_slice(&p[nf..nf + m]);
        let a = T::call(self.f.as_ref(), &x)?;
        let ch = RestrictedChart::new(n);
        let dim = 4 * n;
        let mut out = vec![T::zero(); m * dim];
        for k in 0..m {
            for f in 0..nf {
                out[k * dim + f] = a[k * 4 * m + ch.free_slot(f)];
            }
            for j in 0..m {
                out[k * dim + nf + j] = a[k * 4 * m + 3 * m + j];
            }
        }
        Some(out)
    }
}

/// `𝒜_K`: the pullback of `A_K` to the `q = 1` slice, where `σ⃗^R` has no
/// base components.
pub fn reduce_connection(gh: &GHData) -> Result<SharedField> {
    let n = gh.m.checked_sub(1).filter(|n| *n >= 1).ok_or(Error::Invalid("reduction needs at least two points"))?;
    Ok(Arc::new(JetGen(SliceConn { n, f: gh.conn.clone() })))
}

/// `∂x⃗/∂(ρ, q)` for `x⃗^I = q̄ ρ⃗^I q`: columns for the free coordinates,
/// then the four quaternion components.
fn embed_jacobian(n: usize, full: &[f64], q: Quaternion) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = n + 1;
    let ch = RestrictedChart::new(n);
    let nf = 3 * n - 1;
    let mut x = vec![0.0; 3 * m];
    let mut j = vec![vec![0.0; nf + 4]; 3 * m];
    for i in 0..m {
        let r = Quaternion::new(0.0, full[3 * i], full[3 * i + 1], full[3 * i + 2]);
        let v = (q.conj() * r * q).to_array();
        for a in 0..3 {
            x[xi(i, a)] = v[a + 1];
        }
        for b in 0..4 {
            let ub = Quaternion::basis(b);
            let dv = (ub.conj() * r * q + q.conj() * r * ub).to_array();
            for a in 0..3 {
                j[xi(i, a)][nf + b] = dv[a + 1];
            }
        }
    }
    for f in 0..nf {
        let sl = ch.free_slot(f);
        let mut e = [0.0; 4];
        e[sl % 3 + 1] = 1.0;
        let v = (q.conj() * Quaternion::from_array(e) * q).to_array();
        for a in 0..3 {
            j[xi(sl / 3, a)][f] = v[a + 1];
        }
    }
    (x, j)
}

/// Deviation from the equivariant decompositions `U_IJ = 𝒰_IJ/|q|²` and
/// `A_K = 𝒜_K + 2(𝒰_KJ ρ⃗^J)·σ⃗^R` at `(ρ, ψ, q)`.
pub fn equivariance_defect(gh: &GHData, rd: &ReducedData, p: &[f64], q: Quaternion) -> f64 {
    let (n, m) = (rd.n, rd.m());
    let nf = rd.free_dim();
    let full = full_slots(n, &p[..nf]);
    let (x, jx) = embed_jacobian(n, &full, q);
    let mut gp = x.clone();
    gp.extend_from_slice(&p[nf..nf + m]);
    let big = gh.higgs_at(&gp) * q.norm2();
    let small = rd.higgs_at(p);
    let mut r = amax(&(big - &small));
    let a = gh.conn_at(&gp);
    let abase = rd.conn_at(p);
    let sig = sigma_r_matrix(q);
    for k in 0..m {
        let pull = |col: usize| -> f64 { (0..3 * m).map(|mu| a[k][mu] * jx[mu][col]).sum() };
        for f in 0..nf {
            r = r.max((pull(f) - abase[k][f]).abs());
        }
        for j in 0..m {
            r = r.max((a[k][3 * m + j] - abase[k][nf + j]).abs());
        }
        for b in 0..4 {
            let mut expect = 0.0;
            for jj in 0..m {
                for c in 0..3 {
                    expect += 2.0 * small[(k, jj)] * full[3 * jj + c] * sig[c + 1][b];
                }
            }
            r = r.max((pull(nf + b) - expect).abs());
        }
    }
    r
}

const PROBE_Q: [[f64; 4]; 3] = [[0.9, -0.3, 0.5, 0.2], [0.4, 0.8, -0.6, 0.7], [-1.3, 0.1, 0.2, -0.4]];

/// Reduces cone-certified data, checking equivariance at the probe points
/// (`4n` chart) for three fixed values of `q`.
pub fn reduce(gh: &GHData, s: f64, probes: &[Vec<f64>]) -> Result<ReducedData> {
    let higgs = reduce_higgs(gh)?;
    let conn = reduce_connection(gh)?;
    let rd = ReducedData { n: higgs.n, higgs, conn, s, scheme: gh.scheme };
    for p in probes {
        let scale = 1.0 + amax(&rd.higgs_at(p));
        for q in PROBE_Q {
            let dev = equivariance_defect(gh, &rd, p, Quaternion::from_array(q));
            if !(dev <= 1e-8 * scale) {
                return Err(Error::NotEquivariant { deviation: dev });
            }
        }
    }
    Ok(rd)
}

/// `max |∇_{Ii}𝒰_KJ − ∇_{Ji}𝒰_KI|`.
pub fn red_bogo1_residual(rd: &ReducedData, rho: &InhomPoint) -> Result<f64> {
    let m = rd.m();
    let nab = cov_deriv_at(&rd.higgs, rho)?;
    let slots = 3 * m;
    let at = |k: usize, j: usize, i_pt: usize, c: usize| nab[(k * m + j) * slots + 3 * i_pt + c];
    let mut r: f64 = 0.0;
    for k in 0..m {
        for i in 0..m {
            for j in 0..m {
                for c in 0..3 {
                    r = r.max((at(k, j, i, c) - at(k, i, j, c)).abs());
                }
            }
        }
    }
    Ok(r)
}

/// `ℱ_K = ½ ∇⃗_I 𝒰_KJ · (dρ⃗^I ∧ dρ⃗^J)` as matrices on the `4n` chart.
pub fn reduced_curvature(rd: &ReducedData, p: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let (m, dim) = (rd.m(), rd.dim());
    let rho = rd.rho(p);
    let nab = cov_deriv_at(&rd.higgs, &rho)?;
    let ch = RestrictedChart::new(rd.n);
    let dr = |sl: usize| {
        let mut v = vec![0.0; dim];
        if let Some(f) = ch.free_index(sl) {
            v[f] = 1.0;
        }
        v
    };
    let slots = 3 * m;
    Ok((0..m)
        .map(|k| {
            let mut f = DMatrix::zeros(dim, dim);
            for i in 0..m {
                for j in 0..m {
                    for c in 0..3 {
                        let g = nab[(k * m + j) * slots + 3 * i + c];
                        for a in 0..3 {
                            for b in 0..3 {
                                let e = eps(c, a, b);
                                if e != 0.0 && g != 0.0 {
                                    f += wedge11(&dr(3 * i + a), &dr(3 * j + b)) * (0.5 * g * e);
                                }
                            }
                        }
                    }
                }
            }
            f
        })
        .collect())
}

/// `max_K |d𝒜_K − ℱ_K|` with `d𝒜` by differences.
pub fn red_bogo2_residual(rd: &ReducedData, p: &[f64]) -> Result<f64> {
    let f = reduced_curvature(rd, p)?;
    let dim = rd.dim();
    let fd = DerivScheme::Central { h: rd.scheme.step() };
    let mut r: f64 = 0.0;
    for (k, fk) in f.iter().enumerate() {
        let c = rd.conn.clone();
        let ak = KForm::one_form(dim, move |q| c.eval(q)[k * dim..(k + 1) * dim].to_vec());
        r = r.max(amax(&(d(&ak, fd).matrix(p) - fk)));
    }
    Ok(r)
}

/// `θ₀` and `θ⃗`.
pub fn theta(rd: &ReducedData, p: &[f64]) -> Result<(Vec<f64>, [Vec<f64>; 3])> {
    let fr = Frame::new(rd, p)?;
    Ok((fr.theta0(), fr.theta()))
}

#[derive(Clone)]
pub struct QKStructure {
    pub rd: ReducedData,
}

pub fn qk_structure(rd: &ReducedData) -> QKStructure {
    QKStructure { rd: rd.clone() }
}

fn nan_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_element(n, n, f64::NAN)
}

impl QKStructure {
    pub fn dim(&self) -> usize {
        self.rd.dim()
    }
    /// `θ⃗` of the direct formula set.
    pub fn theta_at(&self, p: &[f64]) -> Result<[Vec<f64>; 3]> {
        Ok(Frame::new(&self.rd, p)?.direct_set().0)
    }
    pub fn theta0_at(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(Frame::new(&self.rd, p)?.theta0())
    }
    /// `sω⃗` at `p`.
    pub fn omega_at(&self, p: &[f64]) -> Result<[DMatrix<f64>; 3]> {
        Ok(Frame::new(&self.rd, p)?.direct_set().1)
    }
    /// `sg` at `p`.
    pub fn metric_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        Ok(Frame::new(&self.rd, p)?.direct_set().2)
    }
    pub fn nu_at(&self, p: &[f64]) -> Result<Vec<[f64; 3]>> {
        Ok(Frame::new(&self.rd, p)?.nu().0)
    }
    pub fn theta_forms(&self) -> [KForm; 3] {
        core::array::from_fn(|a| {
            let s = self.clone();
            let n = self.dim();
            KForm::one_form(n, move |p| s.theta_at(p).map(|t| t[a].clone()).unwrap_or_else(|_| vec![f64::NAN; n]))
        })
    }
    pub fn omega_forms(&self) -> [KForm; 3] {
        core::array::from_fn(|a| {
            let s = self.clone();
            let n = self.dim();
            KForm::two_form(n, move |p| s.omega_at(p).map(|w| w[a].clone()).unwrap_or_else(|_| nan_matrix(n)))
        })
    }
    pub fn metric(&self) -> MetricField {
        let s = self.clone();
        let n = self.dim();
        MetricField::new(n, move |p| s.metric_at(p).unwrap_or_else(|_| nan_matrix(n)))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VariantResiduals {
    /// The two expressions for `θ₀`.
    pub theta0: f64,
    /// Quaternionic, vectorial and direct forms of `θ⃗`.
    pub theta: f64,
    pub omega: f64,
    pub metric: f64,
    /// Real part of the quaternionic `sω` and imaginary part of `sg`.
    pub spurious: f64,
}

impl VariantResiduals {
    pub fn max(&self) -> f64 {
        self.theta0.max(self.theta).max(self.omega).max(self.metric).max(self.spurious)
    }
}

fn vmax(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Pairwise deviations between the formula sets at `p`.
pub fn ansatz_variants_check(rd: &ReducedData, p: &[f64]) -> Result<VariantResiduals> {
    let fr = Frame::new(rd, p)?;
    let mut r = VariantResiduals::default();
    let th0 = fr.theta0();
    let th0b: Vec<f64> = fr.du.iter().map(|v| v / (2.0 * fr.cu)).collect();
    r.theta0 = vmax(&th0, &th0b);
    let thv = fr.theta();
    let (tht, omt, gt) = fr.direct_set();
    let thq = fr.theta_quat(&fr.h());
    r.theta = vmax(&thq[0], &th0);
    for a in 0..3 {
        r.theta = r.theta.max(vmax(&thv[a], &tht[a])).max(vmax(&thq[a + 1], &thv[a]));
    }
    let (omv, gv) = fr.vector_set();
    let (w1, s1) = fr.quat_set_1();
    let (w2, s2) = fr.quat_set_2();
    for a in 0..3 {
        r.omega = r
            .omega
            .max(amax(&(&omv[a] - &omt[a])))
            .max(amax(&(&w1[a + 1] - &omt[a])))
            .max(amax(&(&w2[a + 1] - &omt[a])));
    }
    r.metric = amax(&(&gv - &gt)).max(amax(&(&s1[0] - &gt))).max(amax(&(&s2[0] - &gt)));
    r.spurious = amax(&w1[0]).max(amax(&w2[0]));
    for c in 1..4 {
        r.spurious = r.spurious.max(amax(&s1[c])).max(amax(&s2[c]));
    }
    Ok(r)
}

/// `dθ_i + ε_ijk θ_j∧θ_k − sω_i` with `θ⃗` multiplied by `scale`.
pub fn einstein_residual_scaled(st: &QKStructure, p: &[f64], scale: f64) -> Result<f64> {
    let th = st.theta_at(p)?;
    let om = st.omega_at(p)?;
    let dth = d_theta(st, p);
    let mut r: f64 = 0.0;
    for i in 0..3 {
        let mut lhs = &dth[i] * scale;
        for j in 0..3 {
            for k in 0..3 {
                let e = eps(i, j, k);
                if e != 0.0 {
                    lhs += wedge11(&th[j], &th[k]) * (e * scale * scale);
                }
            }
        }
        r = r.max(amax(&(lhs - &om[i])));
    }
    Ok(r)
}

/// `dθ⃗` at `p` by a fourth-order stencil.
pub fn d_theta(st: &QKStructure, p: &[f64]) -> [DMatrix<f64>; 3] {
    let n = st.dim();
    let f = |q: &[f64]| -> Vec<f64> {
        st.theta_at(q).map(|t| t.concat()).unwrap_or_else(|_| vec![f64::NAN; 3 * n])
    };
    let j = fd4_jacobian(&f, p, 10.0 * st.rd.scheme.step());
    core::array::from_fn(|a| DMatrix::from_fn(n, n, |mu, nu| j[a * n + nu][mu] - j[a * n + mu][nu]))
}

pub fn einstein_residual(st: &QKStructure, p: &[f64]) -> Result<f64> {
    einstein_residual_scaled(st, p, 1.0)
}

/// `dθ + θ∧θ − sω` with the full quaternionic `θ`, real part included.
pub fn quaternionic_einstein_residual(st: &QKStructure, p: &[f64]) -> Result<f64> {
    let fd = DerivScheme::Central { h: st.rd.scheme.step() };
    let n = st.dim();
    let fr = Frame::new(&st.rd, p)?;
    let th = fr.theta_quat(&fr.h());
    let om = st.omega_at(p)?;
    let tt = qwedge(&th, &th);
    let mut r: f64 = 0.0;
    for c in 0..4 {
        let s = st.clone();
        let comp = KForm::one_form(n, move |q| {
            Frame::new(&s.rd, q).map(|f| f.theta_quat(&f.h())[c].clone()).unwrap_or_else(|_| vec![f64::NAN; n])
        });
        let lhs = d(&comp, fd).matrix(p) + &tt[c];
        let rhs = if c == 0 { DMatrix::zeros(n, n) } else { om[c - 1].clone() };
        r = r.max(amax(&(lhs - rhs)));
    }
    Ok(r)
}

/// `dω_i + 2ε_ijk θ_j∧ω_k` as a sup norm over 3-form components.
pub fn differential_condition_residual(st: &QKStructure, p: &[f64]) -> f64 {
    let fd = DerivScheme::Central { h: st.rd.scheme.step() };
    let th = st.theta_forms();
    let om = st.omega_forms();
    let mut r: f64 = 0.0;
    for i in 0..3 {
        let mut acc = d(&om[i], fd).coeffs(p);
        for j in 0..3 {
            for k in 0..3 {
                let e = eps(i, j, k);
                if e != 0.0 {
                    let w = wedge(&th[j], &om[k]).coeffs(p);
                    axpy(&mut acc, 2.0 * e, &w);
                }
            }
        }
        r = acc.iter().fold(r, |m, v| m.max(v.abs()));
    }
    r
}

/// `dν⃗^I + 2θ⃗×ν⃗^I − s ι_{∂ψ_I} ω⃗`, with `dν⃗` by differences.
pub fn moment_map_residual(st: &QKStructure, i_pt: usize, p: &[f64]) -> Result<f64> {
    moment_map_residual_with(st, i_pt, p, &|nu| nu)
}

/// As [`moment_map_residual`] with a modification applied to `ν⃗^I`.
pub fn moment_map_residual_with(st: &QKStructure, i_pt: usize, p: &[f64], modify: &dyn Fn([f64; 3]) -> [f64; 3]) -> Result<f64> {
    let nf = st.rd.free_dim();
    let h = st.rd.scheme.step();
    let nu_at = |q: &[f64]| -> Vec<f64> {
        st.nu_at(q).map(|v| modify(v[i_pt]).to_vec()).unwrap_or_else(|_| vec![f64::NAN; 3])
    };
    let dnu = fd_jacobian(&nu_at, p, h);
    let nu = nu_at(p);
    let th = st.theta_at(p)?;
    let om = st.omega_at(p)?;
    let col = nf + i_pt;
    let mut r: f64 = 0.0;
    for a in 0..3 {
        for mu in 0..st.dim() {
            let mut lhs = dnu[a][mu];
            for b in 0..3 {
                for c in 0..3 {
                    lhs += 2.0 * eps(a, b, c) * th[b][mu] * nu[c];
                }
            }
            r = r.max((lhs - om[a][(col, mu)]).abs());
        }
    }
    Ok(r)
}

/// `L_{∂ψ_I} g` for every `I`.
pub fn killing_residual(st: &QKStructure, p: &[f64]) -> f64 {
    let fd = DerivScheme::Central { h: st.rd.scheme.step() };
    let g = st.metric();
    let n = st.dim();
    let nf = st.rd.free_dim();
    (0..st.rd.m())
        .map(|i| amax(&lie_metric(&VectorField::coord(n, nf + i), &g, fd).at(p)))
        .fold(0.0, f64::max)
}

/// Pullback data of the Gibbons-Hawking structure to `(ρ, ψ, q)`; with
/// `rescaled` the fiber coordinate is `q' = |𝒰|^{1/2} q`.
fn swann_pullback(gh: &GHData, rd: &ReducedData, pt: &[f64], rescaled: bool) -> Result<(Frame, [DMatrix<f64>; 3], DMatrix<f64>, Quaternion)> {
    let (n, m) = (rd.n, rd.m());
    let nf = rd.free_dim();
    let big = 4 * m;
    let p = &pt[..4 * n];
    let q = Quaternion::from_array([pt[4 * n], pt[4 * n + 1], pt[4 * n + 2], pt[4 * n + 3]]);
    let fr = Frame::new(rd, p)?;
    let (x0, j0) = embed_jacobian(n, &fr.full, q);
    let f = if rescaled { 1.0 / fr.cu.abs() } else { 1.0 };
    let mut jac = DMatrix::zeros(big, big);
    let mut xg = vec![0.0; big];
    for mu in 0..3 * m {
        xg[mu] = x0[mu] * f;
        for c in 0..nf {
            jac[(mu, c)] = j0[mu][c] * f;
            if rescaled {
                jac[(mu, c)] -= x0[mu] * f * fr.du[c] / fr.cu;
            }
        }
        for b in 0..4 {
            jac[(mu, 4 * n + b)] = j0[mu][nf + b] * f;
        }
    }
    for j in 0..m {
        xg[3 * m + j] = p[nf + j];
        jac[(3 * m + j, nf + j)] = 1.0;
    }
    let om = omega_matrices(gh, &xg);
    let g = metric_matrix(gh, &xg)?;
    let jt = jac.transpose();
    let omp = core::array::from_fn(|i| &jt * &om[i] * &jac);
    Ok((fr, omp, &jt * g * &jac, q))
}

fn pad(v: &[f64], big: usize) -> Vec<f64> {
    let mut out = vec![0.0; big];
    out[..v.len()].copy_from_slice(v);
    out
}

fn pad_matrix(w: &DMatrix<f64>, big: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(big, big);
    out.view_mut((0, 0), (w.nrows(), w.ncols())).copy_from(w);
    out
}

/// Deviations from `Ω = 𝒰 q̄[sω + (σ̄^R−θ̄)∧(σ^R−θ)]q` and
/// `G = 𝒰|q|²(sg + |σ^R−θ|²)` at a point of the `4n + 4` chart; with
/// `rescaled`, the same after `q → |𝒰|^{1/2} q` and the sign rule for
/// `𝒰 < 0`.
pub fn swann_residual(gh: &GHData, rd: &ReducedData, pt: &[f64], rescaled: bool) -> Result<f64> {
    let (fr, omp, gp, q) = swann_pullback(gh, rd, pt, rescaled)?;
    let n = rd.n;
    let big = 4 * rd.m();
    let (th, om, g) = fr.direct_set();
    let mut sig = qf_zero(big);
    let sm = sigma_r_matrix(q);
    for a in 0..4 {
        for b in 0..4 {
            sig[a][4 * n + b] = sm[a][b];
        }
    }
    let mut x = sig;
    if !rescaled {
        axpy(&mut x[0], -1.0, &pad(&fr.theta0(), big));
    }
    for a in 0..3 {
        axpy(&mut x[a + 1], -1.0, &pad(&th[a], big));
    }
    let mut inner = qwedge(&qf_conj(&x), &x);
    for a in 0..3 {
        inner[a + 1] += pad_matrix(&om[a], big);
    }
    let factor = if rescaled { fr.cu.signum() } else { fr.cu };
    let rhs = qm_scale(&qm_sandwich(q, &inner), factor);
    let mut r = amax(&rhs[0]);
    for a in 0..3 {
        r = r.max(amax(&(&rhs[a + 1] - &omp[a])));
    }
    let mut gs = pad_matrix(&g, big);
    for c in 0..4 {
        gs += sym11(&x[c], &x[c]);
    }
    let grhs = gs * (factor * q.norm2());
    Ok(r.max(amax(&(grhs - gp))))
}

pub fn swann_consistency(gh: &GHData, rd: &ReducedData, pt: &[f64]) -> Result<f64> {
    Ok(swann_residual(gh, rd, pt, false)?.max(swann_residual(gh, rd, pt, true)?))
}

/// Checks `ι_{∂ψ_I}Ω⃗ = dμ⃗^I` on the rescaled chart with
/// `μ⃗^I = sign(𝒰) q̄ ν⃗^I q`.
pub fn moment_lift_check(gh: &GHData, rd: &ReducedData, pt: &[f64]) -> Result<f64> {
    let (_, omp, _, _) = swann_pullback(gh, rd, pt, true)?;
    let (n, m) = (rd.n, rd.m());
    let nf = rd.free_dim();
    let st = qk_structure(rd);
    let mu = |z: &[f64]| -> Vec<f64> {
        let q = Quaternion::from_array([z[4 * n], z[4 * n + 1], z[4 * n + 2], z[4 * n + 3]]);
        let p = &z[..4 * n];
        let sign = rd.potential(p).signum();
        match st.nu_at(p) {
            Ok(nu) => nu
                .iter()
                .flat_map(|v| {
                    let r = (q.conj() * Quaternion::new(0.0, v[0], v[1], v[2]) * q).to_array();
                    [sign * r[1], sign * r[2], sign * r[3]]
                })
                .collect(),
            Err(_) => vec![f64::NAN; 3 * m],
        }
    };
    let dmu = fd_jacobian(&mu, pt, rd.scheme.step());
    let mut r: f64 = 0.0;
    for i in 0..m {
        for a in 0..3 {
            for c in 0..4 * m {
                r = r.max((omp[a][(nf + i, c)] - dmu[3 * i + a][c]).abs());
            }
        }
    }
    Ok(r)
}
