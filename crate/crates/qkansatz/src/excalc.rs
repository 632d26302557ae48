//! Pointwise exterior calculus on coordinate charts.
//!
//! A k-form is a closure returning its coefficients on the sorted index
//! tuples of length k, in lexicographic order. Derivatives are taken by
//! central differences unless the form carries a dual-number evaluator.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, D1, D2};

pub const DEFAULT_H: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct Chart {
    pub names: Vec<String>,
}

impl Chart {
    pub fn new(names: Vec<String>) -> Result<Self> {
        for (i, a) in names.iter().enumerate() {
            if names[i + 1..].contains(a) {
                return Err(Error::Invalid("duplicate coordinate name"));
            }
        }
        Ok(Chart { names })
    }
    pub fn dim(&self) -> usize {
        self.names.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivScheme {
    Analytic,
    Central { h: f64 },
    Dual,
}

impl Default for DerivScheme {
    fn default() -> Self {
        DerivScheme::Central { h: DEFAULT_H }
    }
}

impl DerivScheme {
    pub fn step(&self) -> f64 {
        match self {
            DerivScheme::Central { h } => *h,
            _ => DEFAULT_H,
        }
    }
}

/// A smooth vector-valued map that may also be evaluated on jets.
pub trait Field: Send + Sync {
    fn eval(&self, x: &[f64]) -> Vec<f64>;
    fn eval_d1(&self, _x: &[D1]) -> Option<Vec<D1>> {
        None
    }
    fn eval_d2(&self, _x: &[D2]) -> Option<Vec<D2>> {
        None
    }
}

/// A map written once for every scalar type.
pub trait GenericMap: Send + Sync {
    fn apply<T: Scalar>(&self, x: &[T]) -> Vec<T>;
}

/// Adapter turning a [`GenericMap`] into a [`Field`] with exact jets.
pub struct Gen<M>(pub M);

impl<M: GenericMap> Field for Gen<M> {
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.0.apply(x)
    }
    fn eval_d1(&self, x: &[D1]) -> Option<Vec<D1>> {
        Some(self.0.apply(x))
    }
    fn eval_d2(&self, x: &[D2]) -> Option<Vec<D2>> {
        Some(self.0.apply(x))
    }
}

/// Adapter for plain closures; derivatives fall back to differences.
pub struct Plain<F>(pub F);

impl<F: Fn(&[f64]) -> Vec<f64> + Send + Sync> Field for Plain<F> {
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.0)(x)
    }
}

pub type SharedField = Arc<dyn Field>;

/// Scalar types at which a [`Field`] can be called.
pub trait Jet: Scalar {
    fn call(f: &dyn Field, x: &[Self]) -> Option<Vec<Self>>;
}

impl Jet for f64 {
    fn call(f: &dyn Field, x: &[f64]) -> Option<Vec<f64>> {
        Some(f.eval(x))
    }
}
impl Jet for D1 {
    fn call(f: &dyn Field, x: &[D1]) -> Option<Vec<D1>> {
        f.eval_d1(x)
    }
}
impl Jet for D2 {
    fn call(f: &dyn Field, x: &[D2]) -> Option<Vec<D2>> {
        f.eval_d2(x)
    }
}

/// A generic map built on other fields; jets are available when the
/// inner fields provide them.
pub trait JetMap: Send + Sync {
    fn apply<T: Jet>(&self, x: &[T]) -> Option<Vec<T>>;
}

pub struct JetGen<M>(pub M);

impl<M: JetMap> Field for JetGen<M> {
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.0.apply(x).unwrap_or_default()
    }
    fn eval_d1(&self, x: &[D1]) -> Option<Vec<D1>> {
        self.0.apply(x)
    }
    fn eval_d2(&self, x: &[D2]) -> Option<Vec<D2>> {
        self.0.apply(x)
    }
}

fn fd_step(h: f64, x: f64) -> f64 {
    h * x.abs().max(1.0)
}

/// Jacobian `J[out][in]` by central differences.
pub fn fd_jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let mut p = x.to_vec();
    let mut cols = Vec::with_capacity(x.len());
    for mu in 0..x.len() {
        let s = fd_step(h, x[mu]);
        p[mu] = x[mu] + s;
        let fp = f(&p);
        p[mu] = x[mu] - s;
        let fm = f(&p);
        p[mu] = x[mu];
        cols.push(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * s)).collect::<Vec<_>>());
    }
    let nout = cols.first().map_or(0, |c| c.len());
    (0..nout).map(|o| cols.iter().map(|c| c[o]).collect()).collect()
}

/// Jacobian by the five-point stencil, error `O(h⁴)`.
pub fn fd4_jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let mut p = x.to_vec();
    let mut cols = Vec::with_capacity(x.len());
    for mu in 0..x.len() {
        let s = fd_step(h, x[mu]);
        let mut at = |t: f64| {
            p[mu] = x[mu] + t;
            let v = f(&p);
            p[mu] = x[mu];
            v
        };
        let (f2, f1, m1, m2) = (at(2.0 * s), at(s), at(-s), at(-2.0 * s));
        cols.push((0..f1.len()).map(|o| (8.0 * (f1[o] - m1[o]) - (f2[o] - m2[o])) / (12.0 * s)).collect::<Vec<_>>());
    }
    let nout = cols.first().map_or(0, |c| c.len());
    (0..nout).map(|o| cols.iter().map(|c| c[o]).collect()).collect()
}

/// Jacobian of a field, exact when the field supports first-order jets
/// and the scheme is not forced to central differences.
pub fn jacobian(f: &dyn Field, x: &[f64], scheme: DerivScheme) -> Vec<Vec<f64>> {
    if !matches!(scheme, DerivScheme::Central { .. }) {
        let mut p: Vec<D1> = x.iter().map(|&v| D1::constant(v)).collect();
        let mut cols = Vec::with_capacity(x.len());
        let mut ok = true;
        for mu in 0..x.len() {
            p[mu].d = 1.0;
            match f.eval_d1(&p) {
                Some(r) => cols.push(r.iter().map(|c| c.d).collect::<Vec<_>>()),
                None => {
                    ok = false;
                    break;
                }
            }
            p[mu].d = 0.0;
        }
        if ok {
            let nout = cols.first().map_or(0, |c| c.len());
            return (0..nout).map(|o| cols.iter().map(|c| c[o]).collect()).collect();
        }
    }
    fd_jacobian(&|p| f.eval(p), x, scheme.step())
}

/// Second derivatives `H[out][a][b]`, exact for fields with second-order jets.
pub fn hessians(f: &dyn Field, x: &[f64], scheme: DerivScheme) -> Vec<Vec<Vec<f64>>> {
    let n = x.len();
    let central = matches!(scheme, DerivScheme::Central { .. });
    if !central {
        if let Some(first) = f.eval_d2(&crate::scalar::seed2(x, 0, 0)) {
            let nout = first.len();
            let mut h = vec![vec![vec![0.0; n]; n]; nout];
            for a in 0..n {
                for b in a..n {
                    let r = f.eval_d2(&crate::scalar::seed2(x, a, b)).unwrap_or_default();
                    for o in 0..nout {
                        h[o][a][b] = r[o].d.d;
                        h[o][b][a] = r[o].d.d;
                    }
                }
            }
            return h;
        }
    }
    // difference the (exact if possible) Jacobian once more, with a wider step
    let inner = if central { scheme } else { DerivScheme::Dual };
    let jf = |p: &[f64]| -> Vec<f64> { jacobian(f, p, inner).into_iter().flatten().collect() };
    let jj = fd_jacobian(&jf, x, scheme.step() * 10.0);
    let nout = jj.len() / n.max(1);
    let mut h = vec![vec![vec![0.0; n]; n]; nout];
    for o in 0..nout {
        for a in 0..n {
            for b in 0..n {
                h[o][a][b] = 0.5 * (jj[o * n + a][b] + jj[o * n + b][a]);
            }
        }
    }
    h
}

pub fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// All strictly increasing tuples of length `k` in `0..n`, lexicographic.
pub fn tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binom(n, k));
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if c[i] < n - k + i {
                c[i] += 1;
                for j in i + 1..k {
                    c[j] = c[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Lexicographic rank of a strictly increasing tuple.
pub fn rank(n: usize, t: &[usize]) -> usize {
    let k = t.len();
    let mut r = 0;
    let mut prev = 0usize;
    for (i, &ci) in t.iter().enumerate() {
        for j in prev..ci {
            r += binom(n - 1 - j, k - 1 - i);
        }
        prev = ci + 1;
    }
    r
}

/// Sorts a tuple, returning the permutation sign, or `None` on repeats.
pub fn sort_sign(t: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut v = t.to_vec();
    let mut sign = 1.0;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] == v[j + 1] {
                return None;
            }
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

type CoeffFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct KForm {
    pub dim: usize,
    pub deg: usize,
    f: CoeffFn,
    jet: Option<SharedField>,
}

impl KForm {
    pub fn new(dim: usize, deg: usize, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        KForm { dim, deg, f: Arc::new(f), jet: None }
    }

    /// A form whose coefficient map supports dual-number evaluation.
    pub fn from_field(dim: usize, deg: usize, field: SharedField) -> Self {
        let g = field.clone();
        KForm { dim, deg, f: Arc::new(move |x| g.eval(x)), jet: Some(field) }
    }

    pub fn zero(dim: usize, deg: usize) -> Self {
        let n = binom(dim, deg);
        KForm::new(dim, deg, move |_| vec![0.0; n])
    }

    pub fn function(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        KForm::new(dim, 0, move |x| vec![f(x)])
    }

    /// 1-form from a closure returning its `dim` components.
    pub fn one_form(dim: usize, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        KForm::new(dim, 1, f)
    }

    /// 2-form from its antisymmetric matrix `W[μ][ν] = ω(∂_μ, ∂_ν)`.
    pub fn two_form(dim: usize, f: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        KForm::new(dim, 2, move |x| {
            let m = f(x);
            let mut out = Vec::with_capacity(binom(dim, 2));
            for i in 0..dim {
                for j in i + 1..dim {
                    out.push(m[(i, j)]);
                }
            }
            out
        })
    }

    pub fn coeffs(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }

    /// Component on an arbitrary index tuple.
    pub fn component(&self, x: &[f64], t: &[usize]) -> f64 {
        match sort_sign(t) {
            None => 0.0,
            Some((s, sign)) => sign * self.coeffs(x)[rank(self.dim, &s)],
        }
    }

    pub fn matrix(&self, x: &[f64]) -> DMatrix<f64> {
        assert_eq!(self.deg, 2, "matrix form only for 2-forms");
        let c = self.coeffs(x);
        let mut m = DMatrix::zeros(self.dim, self.dim);
        let mut k = 0;
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                m[(i, j)] = c[k];
                m[(j, i)] = -c[k];
                k += 1;
            }
        }
        m
    }

    pub fn sup(&self, x: &[f64]) -> f64 {
        self.coeffs(x).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add(&self, o: &KForm) -> KForm {
        assert_eq!((self.dim, self.deg), (o.dim, o.deg));
        let (a, b) = (self.f.clone(), o.f.clone());
        KForm::new(self.dim, self.deg, move |x| {
            a(x).iter().zip(b(x)).map(|(p, q)| p + q).collect()
        })
    }

    pub fn sub(&self, o: &KForm) -> KForm {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> KForm {
        let a = self.f.clone();
        KForm::new(self.dim, self.deg, move |x| a(x).iter().map(|v| v * s).collect())
    }

    /// Multiplication by a function.
    pub fn mul_fn(&self, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> KForm {
        let a = self.f.clone();
        KForm::new(self.dim, self.deg, move |x| {
            let s = g(x);
            a(x).iter().map(|v| v * s).collect()
        })
    }
}

#[derive(Clone)]
pub struct VectorField {
    pub dim: usize,
    f: CoeffFn,
}

impl VectorField {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        VectorField { dim, f: Arc::new(f) }
    }
    pub fn coord(dim: usize, mu: usize) -> Self {
        VectorField::new(dim, move |_| {
            let mut v = vec![0.0; dim];
            v[mu] = 1.0;
            v
        })
    }
    pub fn at(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
    pub fn add(&self, o: &VectorField) -> VectorField {
        let (a, b) = (self.f.clone(), o.f.clone());
        VectorField::new(self.dim, move |x| a(x).iter().zip(b(x)).map(|(p, q)| p + q).collect())
    }
    pub fn scale(&self, s: f64) -> VectorField {
        let a = self.f.clone();
        VectorField::new(self.dim, move |x| a(x).iter().map(|v| v * s).collect())
    }
    pub fn sup(&self, x: &[f64]) -> f64 {
        self.at(x).iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone)]
pub struct MetricField {
    pub dim: usize,
    f: Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>,
}

impl MetricField {
    /// The evaluator is symmetrized on every call.
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        MetricField {
            dim,
            f: Arc::new(move |x| {
                let m = f(x);
                (&m + m.transpose()) * 0.5
            }),
        }
    }
    pub fn at(&self, x: &[f64]) -> DMatrix<f64> {
        (self.f)(x)
    }
    /// Checks invertibility at a point and returns the determinant.
    pub fn nondegenerate(&self, x: &[f64]) -> Result<f64> {
        let m = self.at(x);
        let det = m.clone().lu().determinant();
        let scale = m.amax().max(1e-300);
        if det.abs() <= 1e-12 * scale.powi(self.dim as i32) {
            return Err(Error::Singular { what: "metric", cond: f64::INFINITY });
        }
        Ok(det)
    }
}

/// Exterior derivative. The result of differentiating a top form is the
/// empty (dim+1)-form.
pub fn d(w: &KForm, scheme: DerivScheme) -> KForm {
    let (n, k) = (w.dim, w.deg);
    if k >= n {
        return KForm::new(n, k + 1, |_| Vec::new());
    }
    let out_t = tuples(n, k + 1);
    let assemble = move |jac: &dyn Fn(usize, usize) -> f64| -> Vec<f64> {
        out_t
            .iter()
            .map(|t| {
                let mut acc = 0.0;
                for j in 0..t.len() {
                    let mut rest = t.clone();
                    let mu = rest.remove(j);
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    acc += sign * jac(rank(n, &rest), mu);
                }
                acc
            })
            .collect()
    };
    match (&w.jet, scheme) {
        (Some(field), DerivScheme::Dual) | (Some(field), DerivScheme::Analytic) => {
            let field = field.clone();
            let g = field.clone();
            let asm = Arc::new(assemble);
            let asm2 = asm.clone();
            let eval = move |x: &[f64]| {
                let j = jacobian(g.as_ref(), x, DerivScheme::Dual);
                asm(&|o, mu| j[o][mu])
            };
            let jet = DField { inner: field, asm: asm2 };
            let mut out = KForm::new(n, k + 1, eval);
            out.jet = Some(Arc::new(jet));
            out
        }
        _ => {
            let h = scheme.step();
            let f = w.f.clone();
            KForm::new(n, k + 1, move |x| {
                let j = fd_jacobian(&|p| f(p), x, h);
                assemble(&|o, mu| j[o][mu])
            })
        }
    }
}

type Assembler = Arc<dyn Fn(&dyn Fn(usize, usize) -> f64) -> Vec<f64> + Send + Sync>;

/// Exterior derivative of a form carrying jets, itself carrying one fewer
/// level of jets.
struct DField {
    inner: SharedField,
    asm: Assembler,
}

impl Field for DField {
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        let j = jacobian(self.inner.as_ref(), x, DerivScheme::Dual);
        (self.asm)(&|o, mu| j[o][mu])
    }
    fn eval_d1(&self, x: &[D1]) -> Option<Vec<D1>> {
        let n = x.len();
        // differentiate each coefficient along every coordinate with the
        // outer jet level carrying the caller's tangent
        let mut cols: Vec<Vec<D1>> = Vec::with_capacity(n);
        for mu in 0..n {
            let p: Vec<D2> = x
                .iter()
                .enumerate()
                .map(|(i, v)| D2::new(*v, D1::new(if i == mu { 1.0 } else { 0.0 }, 0.0)))
                .collect();
            // D2 = Dual<D1>: outer tangent seeds ∂_μ, inner carries x's tangent
            let r = self.inner.eval_d2(&p)?;
            cols.push(r.iter().map(|c| c.d).collect());
        }
        let vals: Vec<D1> = {
            let nout = cols.first().map_or(0, |c| c.len());
            let mut out = Vec::new();
            let re = (self.asm)(&|o, mu| cols[mu][o].v);
            let im = (self.asm)(&|o, mu| cols[mu][o].d);
            for i in 0..re.len() {
                out.push(D1::new(re[i], im[i]));
            }
            let _ = nout;
            out
        };
        Some(vals)
    }
}

/// Wedge product.
pub fn wedge(a: &KForm, b: &KForm) -> KForm {
    assert_eq!(a.dim, b.dim);
    let n = a.dim;
    let (p, q) = (a.deg, b.deg);
    let out_t = tuples(n, p + q);
    let sub_t = tuples(p + q, p);
    let (fa, fb) = (a.f.clone(), b.f.clone());
    KForm::new(n, p + q, move |x| {
        let ca = fa(x);
        let cb = fb(x);
        out_t
            .iter()
            .map(|t| {
                let mut acc = 0.0;
                for s in &sub_t {
                    let left: Vec<usize> = s.iter().map(|&i| t[i]).collect();
                    let right: Vec<usize> = (0..p + q).filter(|i| !s.contains(i)).map(|i| t[i]).collect();
                    let perm: Vec<usize> = s.iter().copied().chain((0..p + q).filter(|i| !s.contains(i))).collect();
                    let sign = sort_sign(&perm).map_or(0.0, |(_, sg)| sg);
                    acc += sign * ca[rank(n, &left)] * cb[rank(n, &right)];
                }
                acc
            })
            .collect()
    })
}

/// Contraction in the first slot.
pub fn interior(x: &VectorField, w: &KForm) -> Result<KForm> {
    if w.deg == 0 {
        return Err(Error::ZeroFormContraction);
    }
    let n = w.dim;
    let out_t = tuples(n, w.deg - 1);
    let (fx, fw) = (x.f.clone(), w.f.clone());
    Ok(KForm::new(n, w.deg - 1, move |p| {
        let v = fx(p);
        let c = fw(p);
        out_t
            .iter()
            .map(|t| {
                let mut acc = 0.0;
                for mu in 0..n {
                    if v[mu] == 0.0 || t.contains(&mu) {
                        continue;
                    }
                    let mut full = Vec::with_capacity(t.len() + 1);
                    full.push(mu);
                    full.extend_from_slice(t);
                    if let Some((s, sign)) = sort_sign(&full) {
                        acc += v[mu] * sign * c[rank(n, &s)];
                    }
                }
                acc
            })
            .collect()
    }))
}

/// Lie derivative of a form by the Cartan formula.
pub fn lie_form(x: &VectorField, w: &KForm, scheme: DerivScheme) -> KForm {
    let a = interior(x, &d(w, scheme)).unwrap_or_else(|_| KForm::zero(w.dim, w.deg));
    if w.deg == 0 {
        return a;
    }
    let b = d(&interior(x, w).expect("degree checked"), scheme);
    a.add(&b)
}

/// Coordinate Lie derivative of a symmetric 2-tensor.
pub fn lie_metric(x: &VectorField, g: &MetricField, scheme: DerivScheme) -> MetricField {
    let n = g.dim;
    let h = scheme.step();
    let (fx, fg) = (x.f.clone(), g.f.clone());
    MetricField::new(n, move |p| {
        let v = fx(p);
        let g0 = fg(p);
        let dx = fd_jacobian(&|q| fx(q), p, h);
        let dg = fd_jacobian(&|q| fg(q).as_slice().to_vec(), p, h);
        let mut out = DMatrix::zeros(n, n);
        for mu in 0..n {
            for nu in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    // column-major storage: entry (mu, nu) sits at mu + n*nu
                    acc += v[l] * dg[mu + n * nu][l];
                    acc += g0[(l, nu)] * dx[l][mu];
                    acc += g0[(mu, l)] * dx[l][nu];
                }
                out[(mu, nu)] = acc;
            }
        }
        out
    })
}

/// Lie bracket `[X, Y]`.
pub fn bracket(x: &VectorField, y: &VectorField, scheme: DerivScheme) -> VectorField {
    let n = x.dim;
    let h = scheme.step();
    let (fx, fy) = (x.f.clone(), y.f.clone());
    VectorField::new(n, move |p| {
        let vx = fx(p);
        let vy = fy(p);
        let jx = fd_jacobian(&|q| fx(q), p, h);
        let jy = fd_jacobian(&|q| fy(q), p, h);
        (0..n)
            .map(|mu| (0..n).map(|nu| vx[nu] * jy[mu][nu] - vy[nu] * jx[mu][nu]).sum())
            .collect()
    })
}

/// Outer product 2-form `a ∧ b = a⊗b − b⊗a` of two covectors, as a matrix.
pub fn wedge11(a: &[f64], b: &[f64]) -> DMatrix<f64> {
    let n = a.len();
    DMatrix::from_fn(n, n, |i, j| a[i] * b[j] - b[i] * a[j])
}

/// Symmetric product `½(a⊗b + b⊗a)`.
pub fn sym11(a: &[f64], b: &[f64]) -> DMatrix<f64> {
    let n = a.len();
    DMatrix::from_fn(n, n, |i, j| 0.5 * (a[i] * b[j] + b[i] * a[j]))
}

/// Largest absolute entry of a matrix.
pub fn amax(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a: f64, v| if v.is_nan() { f64::NAN } else { a.max(v.abs()) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuple_rank_roundtrip() {
        for n in 1..7 {
            for k in 0..=n {
                for (i, t) in tuples(n, k).iter().enumerate() {
                    assert_eq!(rank(n, t), i);
                }
                assert_eq!(tuples(n, k).len(), binom(n, k));
            }
        }
    }

    #[test]
    fn d_of_x1_dx2() {
        let w = KForm::one_form(3, |x| vec![0.0, x[0], 0.0]);
        let dw = d(&w, DerivScheme::default());
        let p = [0.4, 1.0, -2.0];
        assert!((dw.component(&p, &[0, 1]) - 1.0).abs() < 1e-10);
        assert!(dw.component(&p, &[1, 2]).abs() < 1e-12);
    }

    #[test]
    fn d_of_top_form_is_empty() {
        let w = KForm::zero(2, 2);
        assert_eq!(d(&w, DerivScheme::default()).coeffs(&[0.0, 0.0]).len(), 0);
    }

    #[test]
    fn interior_signs() {
        let w = KForm::new(2, 2, |_| vec![1.0]);
        let a = interior(&VectorField::coord(2, 0), &w).unwrap();
        let b = interior(&VectorField::coord(2, 1), &w).unwrap();
        assert_eq!(a.coeffs(&[0.0, 0.0]), vec![0.0, 1.0]);
        assert_eq!(b.coeffs(&[0.0, 0.0]), vec![-1.0, 0.0]);
        assert!(interior(&VectorField::coord(2, 0), &KForm::function(2, |_| 1.0)).is_err());
    }

    #[test]
    fn euler_scaling() {
        let w = KForm::one_form(2, |_| vec![1.0, 0.0]);
        let x = VectorField::new(2, |p| vec![p[0], 0.0]);
        let l = lie_form(&x, &w, DerivScheme::default());
        let c = l.coeffs(&[0.7, 0.2]);
        assert!((c[0] - 1.0).abs() < 1e-9 && c[1].abs() < 1e-9);
    }

    #[test]
    fn rotation_bracket() {
        let a = VectorField::new(3, |p| vec![-p[1], p[0], 0.0]);
        let b = VectorField::new(3, |p| vec![0.0, -p[2], p[1]]);
        let c = bracket(&a, &b, DerivScheme::default());
        let p = [0.3, -0.8, 1.1];
        // hand expansion of X^ν∂_νY − Y^ν∂_νX gives +(x1∂3 − x3∂1)
        let e = [-p[2], 0.0, p[0]];
        for (u, v) in c.at(&p).iter().zip(e) {
            assert!((u - v).abs() < 1e-9);
        }
    }
}
