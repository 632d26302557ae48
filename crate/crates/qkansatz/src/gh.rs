//! Extended Gibbons-Hawking hyperkähler data.
//!
//! Total-space chart: `x^I_i` at index `3I + i` (`i = 0, 1, 2`), then the
//! fiber coordinates `ψ_I` at `3m + I`. Connection evaluators return 1-forms
//! on the whole total space so that fiber-dependent gauges are allowed.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::excalc::{
    amax, d, fd_jacobian, jacobian, sym11, wedge11, DerivScheme, GenericMap, Jet, JetGen,
    JetMap, KForm, MetricField, SharedField,
};
use crate::quatmath::{eps, ImQuaternion, Quaternion};
use crate::scalar::Scalar;

#[derive(Clone)]
pub struct GHData {
    pub m: usize,
    /// Base point (3m) to row-major `U_IJ`.
    pub higgs: SharedField,
    /// Total-space point (4m) to `A_I` components, `I`-major.
    pub conn: SharedField,
    pub scheme: DerivScheme,
}

#[derive(Clone)]
pub struct HKTriple {
    pub forms: [KForm; 3],
}

/// Quaternion-valued 1-forms `H^I`, each as four real covectors.
#[derive(Clone)]
pub struct QCoframe {
    pub m: usize,
    gh: GHData,
}

impl GHData {
    pub fn new(m: usize, higgs: SharedField, conn: SharedField, scheme: DerivScheme) -> Self {
        GHData { m, higgs, conn, scheme }
    }

    pub fn dim(&self) -> usize {
        4 * self.m
    }

    pub fn higgs_at(&self, x: &[f64]) -> DMatrix<f64> {
        let m = self.m;
        let u = self.higgs.eval(&x[..3 * m]);
        DMatrix::from_row_slice(m, m, &u)
    }

    /// `A_I` as rows of length `4m`.
    pub fn conn_at(&self, p: &[f64]) -> Vec<Vec<f64>> {
        let n = self.dim();
        let a = self.conn.eval(p);
        a.chunks(n).map(|c| c.to_vec()).collect()
    }

    /// `β_I = dψ_I + A_I`.
    pub fn betas(&self, p: &[f64]) -> Vec<Vec<f64>> {
        let m = self.m;
        let mut b = self.conn_at(p);
        for (i, row) in b.iter_mut().enumerate() {
            row[3 * m + i] += 1.0;
        }
        b
    }

    pub fn higgs_inverse(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        invert(self.higgs_at(x), "Higgs field")
    }
}

/// Matrix inverse with a condition report on failure.
pub fn invert(m: DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let scale = amax(&m);
    let inv = m.clone().try_inverse();
    match inv {
        Some(i) => {
            let cond = scale * amax(&i);
            if !cond.is_finite() || cond > 1e14 {
                Err(Error::Singular { what, cond })
            } else {
                Ok(i)
            }
        }
        None => Err(Error::Singular { what, cond: f64::INFINITY }),
    }
}

/// Base index of `x^I_i`.
#[inline]
pub fn xi(i_point: usize, i: usize) -> usize {
    3 * i_point + i
}

/// `∂_{Ii} U_KJ` as `[K*m+J][3I+i]`.
fn higgs_jacobian(gh: &GHData, x: &[f64]) -> Vec<Vec<f64>> {
    jacobian(gh.higgs.as_ref(), &x[..3 * gh.m], gh.scheme)
}

/// First extended Bogomolny equation: `∂_{Ii}U_KJ = ∂_{Ji}U_KI`.
pub fn bogomolny1_residual(gh: &GHData, x: &[f64]) -> f64 {
    let m = gh.m;
    let j = higgs_jacobian(gh, x);
    let mut r: f64 = 0.0;
    for k in 0..m {
        for a in 0..m {
            for b in 0..m {
                for i in 0..3 {
                    r = r.max((j[k * m + b][xi(a, i)] - j[k * m + a][xi(b, i)]).abs());
                }
            }
        }
    }
    r
}

/// `⋆^I β = ½ β_{Jd} ε_dab dx^I_a ∧ dx^J_b` as a `dim × dim` matrix, for a
/// base 1-form `β` given on the first `3m` slots.
pub fn star_i(m: usize, dim: usize, i_point: usize, beta: &[f64]) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(dim, dim);
    for jp in 0..m {
        for dd in 0..3 {
            let bv = beta[xi(jp, dd)];
            if bv == 0.0 {
                continue;
            }
            for a in 0..3 {
                for b in 0..3 {
                    let e = eps(dd, a, b);
                    if e == 0.0 {
                        continue;
                    }
                    let c = 0.5 * bv * e;
                    w[(xi(i_point, a), xi(jp, b))] += c;
                    w[(xi(jp, b), xi(i_point, a))] -= c;
                }
            }
        }
    }
    w
}

/// Matrix of `dA_K` on the total space.
pub fn curvature(gh: &GHData, p: &[f64]) -> Vec<DMatrix<f64>> {
    let n = gh.dim();
    let j = jacobian(gh.conn.as_ref(), p, gh.scheme);
    (0..gh.m)
        .map(|k| DMatrix::from_fn(n, n, |mu, nu| j[k * n + nu][mu] - j[k * n + mu][nu]))
        .collect()
}

/// `Σ_I ⋆^I dU_KI` for each `K`.
pub fn star_du(gh: &GHData, p: &[f64]) -> Vec<DMatrix<f64>> {
    let (m, n) = (gh.m, gh.dim());
    let j = higgs_jacobian(gh, p);
    (0..m)
        .map(|k| {
            let mut w = DMatrix::zeros(n, n);
            for i in 0..m {
                w += star_i(m, n, i, &j[k * m + i]);
            }
            w
        })
        .collect()
}

/// Second extended Bogomolny equation `F_K = ⋆^I dU_KI`.
pub fn bogomolny2_residual(gh: &GHData, p: &[f64]) -> f64 {
    let f = curvature(gh, p);
    let s = star_du(gh, p);
    f.iter().zip(&s).fold(0.0, |r, (a, b)| r.max(amax(&(a - b))))
}

/// Pointwise matrices of `Ω_k`.
pub fn omega_matrices(gh: &GHData, p: &[f64]) -> [DMatrix<f64>; 3] {
    let (m, n) = (gh.m, gh.dim());
    let u = gh.higgs_at(p);
    let beta = gh.betas(p);
    core::array::from_fn(|k| {
        let mut w = DMatrix::zeros(n, n);
        for a in 0..m {
            for b in 0..m {
                for i in 0..3 {
                    for j in 0..3 {
                        let e = eps(k, i, j);
                        if e != 0.0 {
                            w[(xi(a, i), xi(b, j))] -= u[(a, b)] * e;
                        }
                    }
                }
            }
        }
        for (kk, bk) in beta.iter().enumerate() {
            let mut dx = vec![0.0; n];
            dx[xi(kk, k)] = 1.0;
            w -= wedge11(&dx, bk);
        }
        w
    })
}

/// Pointwise metric matrix.
pub fn metric_matrix(gh: &GHData, p: &[f64]) -> Result<DMatrix<f64>> {
    let (m, n) = (gh.m, gh.dim());
    let u = gh.higgs_at(p);
    let ui = invert(u.clone(), "Higgs field")?;
    let beta = gh.betas(p);
    let mut g = DMatrix::zeros(n, n);
    for a in 0..m {
        for b in 0..m {
            for i in 0..3 {
                g[(xi(a, i), xi(b, i))] += 0.5 * u[(a, b)];
            }
            g += sym11(&beta[a], &beta[b]) * (0.5 * ui[(a, b)]);
        }
    }
    Ok(g)
}

pub fn hk_forms(gh: &GHData) -> HKTriple {
    let n = gh.dim();
    let forms = core::array::from_fn(|k| {
        let g = gh.clone();
        KForm::two_form(n, move |p| omega_matrices(&g, p)[k].clone())
    });
    HKTriple { forms }
}

/// Metric field; singular Higgs values produce a NaN matrix so that the
/// failure is visible in any residual built on it.
pub fn hk_metric(gh: &GHData) -> MetricField {
    let g = gh.clone();
    MetricField::new(gh.dim(), move |p| {
        metric_matrix(&g, p).unwrap_or_else(|_| DMatrix::from_element(g.dim(), g.dim(), f64::NAN))
    })
}

impl HKTriple {
    pub fn matrices(&self, p: &[f64]) -> [DMatrix<f64>; 3] {
        core::array::from_fn(|k| self.forms[k].matrix(p))
    }
}

pub fn coframe(gh: &GHData) -> QCoframe {
    QCoframe { m: gh.m, gh: gh.clone() }
}

impl QCoframe {
    /// `H^I = U^IJ β_J + dx⃗^I` as `[I][a]` real covectors.
    pub fn at(&self, p: &[f64]) -> Result<Vec<[Vec<f64>; 4]>> {
        let (m, n) = (self.m, self.gh.dim());
        let ui = self.gh.higgs_inverse(p)?;
        let beta = self.gh.betas(p);
        Ok((0..m)
            .map(|i| {
                let mut real = vec![0.0; n];
                for j in 0..m {
                    for mu in 0..n {
                        real[mu] += ui[(i, j)] * beta[j][mu];
                    }
                }
                let imag: [Vec<f64>; 3] = core::array::from_fn(|c| {
                    let mut v = vec![0.0; n];
                    v[xi(i, c)] = 1.0;
                    v
                });
                let [a, b, c] = imag;
                [real, a, b, c]
            })
            .collect())
    }

    /// Determinant of the 4m×4m evaluation matrix of the real components.
    pub fn det(&self, p: &[f64]) -> Result<f64> {
        let h = self.at(p)?;
        let n = self.gh.dim();
        let mut mat = DMatrix::zeros(n, n);
        let mut r = 0;
        for hi in &h {
            for comp in hi {
                for mu in 0..n {
                    mat[(r, mu)] = comp[mu];
                }
                r += 1;
            }
        }
        Ok(mat.lu().determinant())
    }
}

/// Quaternion-valued bilinear `Σ U_IJ H̄^I ⊗ H^J` split into components;
/// returns (real part, imaginary parts) as `dim × dim` tensors.
pub fn quat_bilinear(h: &[[Vec<f64>; 4]], u: &DMatrix<f64>) -> [DMatrix<f64>; 4] {
    let n = h[0][0].len();
    let mut out: [DMatrix<f64>; 4] = core::array::from_fn(|_| DMatrix::zeros(n, n));
    for (i, hi) in h.iter().enumerate() {
        for (j, hj) in h.iter().enumerate() {
            let uij = u[(i, j)];
            if uij == 0.0 {
                continue;
            }
            for a in 0..4 {
                for b in 0..4 {
                    let prod = Quaternion::<f64>::basis(a).conj() * Quaternion::basis(b);
                    let pc = prod.to_array();
                    for c in 0..4 {
                        if pc[c] == 0.0 {
                            continue;
                        }
                        let s = uij * pc[c];
                        for mu in 0..n {
                            for nu in 0..n {
                                out[c][(mu, nu)] += s * hi[a][mu] * hj[b][nu];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Compares `Im ½U_IJ H̄^I∧H^J` with `Ω⃗` and `Re ½U_IJ H̄^I H^J` with `G`.
pub fn quat_forms_check(gh: &GHData, p: &[f64]) -> Result<f64> {
    let h = coframe(gh).at(p)?;
    let u = gh.higgs_at(p);
    let t = quat_bilinear(&h, &u);
    let om = omega_matrices(gh, p);
    let g = metric_matrix(gh, p)?;
    let mut r: f64 = 0.0;
    for k in 0..3 {
        // ½(T − Tᵀ) is the wedge H̄∧H in the α⊗β − β⊗α normalization
        let wedge = (&t[k + 1] - t[k + 1].transpose()) * 0.5;
        r = r.max(amax(&(wedge - &om[k])));
    }
    let sym = (&t[0] + t[0].transpose()) * 0.25;
    r = r.max(amax(&(sym - g)));
    Ok(r)
}

/// Algebraic part of the hyperkähler criterion at a point, for matrices.
///
/// With the wedge normalized as `α⊗β − β⊗α` the reconstructed tensor
/// `−ω₁ω₃⁻¹ω₂` equals twice the metric, so `g` is compared after doubling.
pub fn algebraic_residual(w: &[DMatrix<f64>; 3], g: &DMatrix<f64>) -> Result<f64> {
    let n = g.nrows();
    let inv: Vec<DMatrix<f64>> = w
        .iter()
        .map(|m| invert(m.clone(), "2-form"))
        .collect::<Result<_>>()?;
    let id = DMatrix::<f64>::identity(n, n);
    let i1 = &inv[2] * &w[1];
    let i2 = &inv[0] * &w[2];
    let i3 = &inv[1] * &w[0];
    let mut r: f64 = 0.0;
    for ii in [&i1, &i2, &i3] {
        r = r.max(amax(&(ii * ii + &id)));
    }
    r = r.max(amax(&(&i1 * &i2 * &i3 + &id)));
    let g1 = -(&w[0] * &i1);
    let g2 = -(&w[1] * &i2);
    let g3 = -(&w[2] * &i3);
    r = r.max(amax(&(&g1 - &g2))).max(amax(&(&g2 - &g3)));
    r = r.max(amax(&(&g1 - g1.transpose())));
    r = r.max(amax(&(g1 - g * 2.0)));
    Ok(r)
}

pub fn algebraic_check(t: &HKTriple, g: &MetricField, p: &[f64]) -> Result<f64> {
    algebraic_residual(&t.matrices(p), &g.at(p))
}

/// `max ‖dΩ_i‖` at a point.
pub fn closure_check(t: &HKTriple, p: &[f64], scheme: DerivScheme) -> f64 {
    t.forms.iter().fold(0.0, |r, f| r.max(d(f, scheme).sup(p)))
}

/// Residual of `ι_{∂ψK} Ω_i = dx^K_i`, the fiber moment-map relation.
pub fn fiber_contraction_residual(gh: &GHData, p: &[f64]) -> f64 {
    let (m, n) = (gh.m, gh.dim());
    let om = omega_matrices(gh, p);
    let mut r: f64 = 0.0;
    for k in 0..m {
        for i in 0..3 {
            for mu in 0..n {
                let v = om[i][(3 * m + k, mu)];
                let e = if mu == xi(k, i) { 1.0 } else { 0.0 };
                r = r.max((v - e).abs());
            }
        }
    }
    r
}

/// Finite-difference Jacobian helper re-exported for verifiers.
pub fn fd_higgs_jacobian(gh: &GHData, x: &[f64]) -> Vec<Vec<f64>> {
    let g = gh.clone();
    fd_jacobian(&move |q| g.higgs.eval(q), &x[..3 * gh.m], gh.scheme.step())
}

/// Gauge choice attached to one monopole term.
#[derive(Clone, Debug, PartialEq)]
pub enum MonopoleGauge {
    /// `(cos θ − 1) dφ` in the term's own variable, string on the negative third axis.
    Dirac,
    /// Moving frame built against a fixed reference direction.
    Fixed([f64; 3]),
    /// Moving frame built against the point combination `Σ b_K x⃗^K`;
    /// gauge-fixed with respect to collective rotations.
    Combo(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct MonopoleTerm {
    /// Coefficients of `y⃗ = Σ a_K x⃗^K`.
    pub a: Vec<f64>,
    pub lambda: f64,
    pub center: [f64; 3],
    pub gauge: MonopoleGauge,
}

/// Superposition `U_IJ = C_IJ + Σ λ a_I a_J / |y⃗ − p⃗|` with matching
/// connections; solves both Bogomolny equations for any choice of terms.
#[derive(Clone, Debug)]
pub struct MonopoleSum {
    pub m: usize,
    pub constant: Vec<f64>,
    pub terms: Vec<MonopoleTerm>,
}

fn combo<T: Scalar>(x: &[T], a: &[f64]) -> ImQuaternion<T> {
    let mut v = ImQuaternion::zero();
    for (k, &ak) in a.iter().enumerate() {
        if ak != 0.0 {
            v = v + ImQuaternion::from_slice(&x[3 * k..3 * k + 3]).scale(T::cst(ak));
        }
    }
    v
}

/// Pullback coefficients of `dy⃗_c` on the base for `y⃗ = Σ a_K x⃗^K`.
fn dcombo(a: &[f64], c: usize, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for (k, &ak) in a.iter().enumerate() {
        v[xi(k, c)] = ak;
    }
    v
}

impl MonopoleSum {
    pub fn higgs_generic<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let m = self.m;
        let mut u: Vec<T> = self.constant.iter().map(|&c| T::cst(c)).collect();
        if u.is_empty() {
            u = vec![T::zero(); m * m];
        }
        for t in &self.terms {
            let y = combo(x, &t.a) - ImQuaternion::from_array(t.center.map(T::cst));
            let inv = T::cst(t.lambda) / y.norm();
            for i in 0..m {
                for j in 0..m {
                    u[i * m + j] = u[i * m + j] + inv * T::cst(t.a[i] * t.a[j]);
                }
            }
        }
        u
    }

    /// Connection components on the `4m` total chart.
    pub fn conn_generic<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let m = self.m;
        let n = 4 * m;
        let mut out = vec![T::zero(); m * n];
        for t in &self.terms {
            let y = combo(x, &t.a) - ImQuaternion::from_array(t.center.map(T::cst));
            // 1-form coefficients of the term's connection on the base
            let form: Vec<T> = match &t.gauge {
                MonopoleGauge::Dirac => {
                    let r = y.norm();
                    let c = -T::one() / (r * (r + y.z));
                    let d0 = dcombo(&t.a, 0, n);
                    let d1 = dcombo(&t.a, 1, n);
                    (0..n)
                        .map(|mu| c * (y.x * T::cst(d1[mu]) - y.y * T::cst(d0[mu])))
                        .collect()
                }
                MonopoleGauge::Fixed(w) => frame_form(y, ImQuaternion::from_array(w.map(T::cst)), &t.a, None, n),
                MonopoleGauge::Combo(b) => frame_form(y, combo(x, b), &t.a, Some(b.as_slice()), n),
            };
            for k in 0..m {
                if t.a[k] == 0.0 {
                    continue;
                }
                let s = T::cst(t.lambda * t.a[k]);
                for mu in 0..n {
                    out[k * n + mu] = out[k * n + mu] + s * form[mu];
                }
            }
        }
        out
    }

    pub fn into_gh(self, scheme: DerivScheme) -> GHData {
        let m = self.m;
        let s = Arc::new(self);
        GHData::new(
            m,
            Arc::new(crate::excalc::Gen(HiggsOf(s.clone()))),
            Arc::new(crate::excalc::Gen(ConnOf(s))),
            scheme,
        )
    }
}

/// `e₃·de₂` for the frame `e₁ = ŷ`, `e₂ ∝ w − (w·e₁)e₁`, `e₃ = e₁×e₂`.
fn frame_form<T: Scalar>(
    y: ImQuaternion<T>,
    w: ImQuaternion<T>,
    a: &[f64],
    b: Option<&[f64]>,
    n: usize,
) -> Vec<T> {
    let ry = y.norm();
    let e1 = y.scale(T::one() / ry);
    let we = w.dot(e1);
    let p = w - e1.scale(we);
    let rp = p.norm();
    let e2 = p.scale(T::one() / rp);
    let e3 = e1.cross(e2);
    let e3a = e3.to_array();
    let mut out = vec![T::zero(); n];
    for c in 0..3 {
        let dy = dcombo(a, c, n);
        for mu in 0..n {
            if dy[mu] != 0.0 {
                out[mu] = out[mu] - e3a[c] * we * T::cst(dy[mu]) / (ry * rp);
            }
        }
        if let Some(b) = b {
            let dw = dcombo(b, c, n);
            for mu in 0..n {
                if dw[mu] != 0.0 {
                    out[mu] = out[mu] + e3a[c] * T::cst(dw[mu]) / rp;
                }
            }
        }
    }
    out
}

struct HiggsOf(Arc<MonopoleSum>);
struct ConnOf(Arc<MonopoleSum>);

impl GenericMap for HiggsOf {
    fn apply<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        self.0.higgs_generic(x)
    }
}
impl GenericMap for ConnOf {
    fn apply<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        self.0.conn_generic(x)
    }
}

/// Single Dirac monopole `U = 1/(2r)`.
pub fn dirac_monopole() -> MonopoleSum {
    MonopoleSum {
        m: 1,
        constant: Vec::new(),
        terms: vec![MonopoleTerm { a: vec![1.0], lambda: 0.5, center: [0.0; 3], gauge: MonopoleGauge::Dirac }],
    }
}

/// Constant Higgs field with vanishing connection.
pub fn flat(m: usize, u: &[f64]) -> MonopoleSum {
    MonopoleSum { m, constant: u.to_vec(), terms: Vec::new() }
}

/// `U_IJ = diag(1/(2|x⁰|), 1/(2|x¹|))` with gauge-fixed connections.
pub fn two_center_diag() -> MonopoleSum {
    MonopoleSum {
        m: 2,
        constant: Vec::new(),
        terms: vec![
            MonopoleTerm { a: vec![1.0, 0.0], lambda: 0.5, center: [0.0; 3], gauge: MonopoleGauge::Combo(vec![0.0, 1.0]) },
            MonopoleTerm { a: vec![0.0, 1.0], lambda: 0.5, center: [0.0; 3], gauge: MonopoleGauge::Combo(vec![1.0, 0.0]) },
        ],
    }
}

/// Higgs field of the potential `2(|x⁰| + |x¹| + |x⁰ + x¹|)`.
pub fn three_center() -> MonopoleSum {
    MonopoleSum {
        m: 2,
        constant: Vec::new(),
        terms: vec![
            MonopoleTerm { a: vec![1.0, 0.0], lambda: 1.0, center: [0.0; 3], gauge: MonopoleGauge::Combo(vec![0.0, 1.0]) },
            MonopoleTerm { a: vec![0.0, 1.0], lambda: 1.0, center: [0.0; 3], gauge: MonopoleGauge::Combo(vec![1.0, 0.0]) },
            MonopoleTerm { a: vec![1.0, 1.0], lambda: 1.0, center: [0.0; 3], gauge: MonopoleGauge::Combo(vec![1.0, 0.0]) },
        ],
    }
}

/// Cone family `U_IJ = C + Σ λ a_I a_J / |Σ_K a_K x⃗^K|`, each term in the
/// frame gauge built against its reference combination `b`.
pub fn cone_monopoles(m: usize, terms: &[(f64, Vec<f64>, Vec<f64>)]) -> MonopoleSum {
    MonopoleSum {
        m,
        constant: Vec::new(),
        terms: terms
            .iter()
            .map(|(l, a, b)| MonopoleTerm { a: a.clone(), lambda: *l, center: [0.0; 3], gauge: MonopoleGauge::Combo(b.clone()) })
            .collect(),
    }
}

/// Four monopole terms on three points.
pub fn four_center() -> MonopoleSum {
    cone_monopoles(
        3,
        &[
            (0.5, vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]),
            (0.7, vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]),
            (0.4, vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]),
            (0.3, vec![1.0, 1.0, 1.0], vec![1.0, 0.0, 0.0]),
        ],
    )
}

/// A Bogomolny solution with no cone structure: constant background plus
/// monopoles at shifted centers.
pub fn shifted_centers() -> MonopoleSum {
    MonopoleSum {
        m: 2,
        constant: vec![1.0, 0.2, 0.2, 0.8],
        terms: vec![
            MonopoleTerm { a: vec![1.0, 0.0], lambda: 0.5, center: [0.3, -0.2, 0.1], gauge: MonopoleGauge::Dirac },
            MonopoleTerm { a: vec![1.0, -1.0], lambda: 0.7, center: [-0.4, 0.5, 0.2], gauge: MonopoleGauge::Fixed([0.6, 0.0, 0.8]) },
            MonopoleTerm { a: vec![0.5, 1.0], lambda: 0.3, center: [0.1, 0.2, -0.6], gauge: MonopoleGauge::Dirac },
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_forms_match_expansion() {
        let gh = flat(1, &[0.5]).into_gh(DerivScheme::default());
        let p = [0.1, 0.2, 0.3, 0.4];
        let w = omega_matrices(&gh, &p);
        // Ω₁ = −½ dx₂∧dx₃ − dx₁∧dψ
        assert!((w[0][(1, 2)] + 0.5).abs() < 1e-15);
        assert!((w[0][(0, 3)] + 1.0).abs() < 1e-15);
        let g = metric_matrix(&gh, &p).unwrap();
        assert!((g[(0, 0)] - 0.25).abs() < 1e-15 && (g[(3, 3)] - 1.0).abs() < 1e-15);
        assert!(algebraic_residual(&w, &g).unwrap() < 1e-12);
    }

    #[test]
    fn monopole_solves_bogomolny() {
        let gh = dirac_monopole().into_gh(DerivScheme::Dual);
        let p = [0.4, -0.7, 0.9, 0.3];
        assert_eq!(bogomolny1_residual(&gh, &p), 0.0);
        assert!(bogomolny2_residual(&gh, &p) < 1e-12);
    }
}

struct RotHiggs {
    m: usize,
    f: SharedField,
    rot: [[f64; 3]; 3],
}

struct RotConn {
    m: usize,
    f: SharedField,
    rot: [[f64; 3]; 3],
}

fn rotate_points<T: Scalar>(m: usize, x: &[T], rot: &[[f64; 3]; 3]) -> Vec<T> {
    let mut q = x.to_vec();
    for i in 0..m {
        for r in 0..3 {
            q[3 * i + r] = (0..3).fold(T::zero(), |s, c| s + T::cst(rot[r][c]) * x[3 * i + c]);
        }
    }
    q
}

impl JetMap for RotHiggs {
    fn apply<T: Jet>(&self, x: &[T]) -> Option<Vec<T>> {
        T::call(self.f.as_ref(), &rotate_points(self.m, x, &self.rot))
    }
}

impl JetMap for RotConn {
    fn apply<T: Jet>(&self, p: &[T]) -> Option<Vec<T>> {
        let m = self.m;
        let dim = 4 * m;
        let a = T::call(self.f.as_ref(), &rotate_points(m, p, &self.rot))?;
        let mut out = a.clone();
        for k in 0..m {
            for i in 0..m {
                for c in 0..3 {
                    out[k * dim + 3 * i + c] =
                        (0..3).fold(T::zero(), |s, r| s + a[k * dim + 3 * i + r] * T::cst(self.rot[r][c]));
                }
            }
        }
        Some(out)
    }
}

/// Pullback of the data along `x⃗^I ↦ R x⃗^I` for a rotation `R`. The
/// Bogomolny equations are preserved; a rotation invariant Higgs field is
/// unchanged and the connection moves within its gauge class.
pub fn rotate_frame(gh: &GHData, rot: [[f64; 3]; 3]) -> GHData {
    let m = gh.m;
    let higgs: SharedField = Arc::new(JetGen(RotHiggs { m, f: gh.higgs.clone(), rot }));
    let conn: SharedField = Arc::new(JetGen(RotConn { m, f: gh.conn.clone(), rot }));
    GHData::new(m, higgs, conn, gh.scheme)
}
