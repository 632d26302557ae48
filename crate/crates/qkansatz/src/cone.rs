//! Hyperkähler cone structure on extended Gibbons-Hawking data.
//!
//! Collective generators act on every point at once: `L₀` scales and
//! `L_a x⃗ = −e⃗_a × x⃗` rotates, so that `[L_i, L_j] = ε_ijk L_k`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::excalc::{
    amax, bracket, d, hessians, interior, jacobian, lie_form, DerivScheme, Field, GenericMap,
    KForm, SharedField, VectorField,
};
use crate::gh::{hk_forms, omega_matrices, star_i, xi, GHData};
use crate::quatmath::{eps, ImQuaternion};
use crate::scalar::{Scalar, D1, D2};

/// Hyperkähler potential candidate on the `3m` base.
#[derive(Clone)]
pub struct ConePotential {
    pub m: usize,
    pub f: SharedField,
    pub scheme: DerivScheme,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConeReport {
    pub checks: Vec<(&'static str, f64, bool)>,
    pub samples: usize,
    pub seed: u64,
}

impl ConeReport {
    pub fn push(&mut self, name: &'static str, residual: f64, tol: f64) {
        self.checks.push((name, residual, residual <= tol));
    }
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.2)
    }
}

/// Component of `L_a` (`a = 0..3`) at base slot `(K, j)`.
fn generator_component(a: usize, x: &[f64], k: usize, j: usize) -> f64 {
    if a == 0 {
        return x[xi(k, j)];
    }
    (0..3).map(|i| -eps(a - 1, i, j) * x[xi(k, i)]).sum()
}

/// `L_a` as vector fields on a chart of dimension `dim ≥ 3m` whose first
/// `3m` coordinates are the points.
pub fn collective_generators(m: usize, dim: usize) -> [VectorField; 4] {
    core::array::from_fn(|a| {
        VectorField::new(dim, move |x| {
            let mut v = vec![0.0; dim];
            for k in 0..m {
                for j in 0..3 {
                    v[xi(k, j)] = generator_component(a, x, k, j);
                }
            }
            v
        })
    })
}

/// Residual of `[L_i, L_j] = ε_ijk L_k` and `[L_i, L₀] = 0` at `x`.
pub fn generator_bracket_residual(m: usize, x: &[f64], scheme: DerivScheme) -> f64 {
    let l = collective_generators(m, x.len());
    let mut r: f64 = 0.0;
    for i in 1..4 {
        r = r.max(bracket(&l[i], &l[0], scheme).sup(x));
        for j in 1..4 {
            let b = bracket(&l[i], &l[j], scheme).at(x);
            let mut e = vec![0.0; x.len()];
            for k in 1..4 {
                let c = eps(i - 1, j - 1, k - 1);
                if c != 0.0 {
                    for (ev, lv) in e.iter_mut().zip(l[k].at(x)) {
                        *ev += c * lv;
                    }
                }
            }
            r = r.max(b.iter().zip(&e).fold(0.0, |m, (p, q)| m.max((p - q).abs())));
        }
    }
    r
}

/// `L_a U_IJ` for `a = 0..3`, as `[a][I*m+J]`.
pub fn higgs_generator_derivs(gh: &GHData, x: &[f64]) -> Vec<Vec<f64>> {
    let m = gh.m;
    let j = jacobian(gh.higgs.as_ref(), &x[..3 * m], gh.scheme);
    (0..4)
        .map(|a| {
            (0..m * m)
                .map(|o| {
                    let mut acc = 0.0;
                    for k in 0..m {
                        for c in 0..3 {
                            acc += generator_component(a, x, k, c) * j[o][xi(k, c)];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Residual of `L⃗U_IJ = 0`, `L₀U_IJ = −U_IJ`.
pub fn hkc_higgs_residual(gh: &GHData, x: &[f64]) -> f64 {
    let m = gh.m;
    let lu = higgs_generator_derivs(gh, x);
    let u = gh.higgs.eval(&x[..3 * m]);
    let mut r: f64 = 0.0;
    for o in 0..m * m {
        r = r.max((lu[0][o] + u[o]).abs());
        for a in 1..4 {
            r = r.max(lu[a][o].abs());
        }
    }
    r
}

/// `U = 2 U_IJ x⃗^I·x⃗^J`.
pub fn hk_potential(gh: &GHData, x: &[f64]) -> f64 {
    let m = gh.m;
    let u = gh.higgs_at(x);
    let mut acc = 0.0;
    for i in 0..m {
        for j in 0..m {
            let dot: f64 = (0..3).map(|c| x[xi(i, c)] * x[xi(j, c)]).sum();
            acc += 2.0 * u[(i, j)] * dot;
        }
    }
    acc
}

struct PotentialOf(GHData);

impl PotentialOf {
    fn combine<T: Scalar>(&self, x: &[T], u: Vec<T>) -> Vec<T> {
        let m = self.0.m;
        let mut acc = T::zero();
        for i in 0..m {
            for j in 0..m {
                let mut dot = T::zero();
                for c in 0..3 {
                    dot = dot + x[xi(i, c)] * x[xi(j, c)];
                }
                acc = acc + T::cst(2.0) * u[i * m + j] * dot;
            }
        }
        vec![acc]
    }
}

impl Field for PotentialOf {
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.combine(x, self.0.higgs.eval(x))
    }
    fn eval_d1(&self, x: &[D1]) -> Option<Vec<D1>> {
        Some(self.combine(x, self.0.higgs.eval_d1(x)?))
    }
    fn eval_d2(&self, x: &[D2]) -> Option<Vec<D2>> {
        Some(self.combine(x, self.0.higgs.eval_d2(x)?))
    }
}

/// The hyperkähler potential of `gh` as a [`ConePotential`].
pub fn potential_of(gh: &GHData) -> ConePotential {
    ConePotential { m: gh.m, f: Arc::new(PotentialOf(gh.clone())), scheme: gh.scheme }
}

#[derive(Clone, Debug)]
pub struct HiggsFromPotential {
    pub u: DMatrix<f64>,
    /// Set when `U_IJ` is singular at the point.
    pub degenerate: bool,
}

/// `U_IJ = ¼ ∂⃗_I·∂⃗_J U`.
pub fn potential_to_higgs(p: &ConePotential, x: &[f64]) -> HiggsFromPotential {
    let m = p.m;
    let h = &hessians(p.f.as_ref(), &x[..3 * m], p.scheme)[0];
    let u = DMatrix::from_fn(m, m, |i, j| 0.25 * (0..3).map(|c| h[xi(i, c)][xi(j, c)]).sum::<f64>());
    let det = u.clone().lu().determinant();
    let degenerate = det.abs() <= 1e-10 * amax(&u).powi(m as i32).max(1e-300);
    HiggsFromPotential { u, degenerate }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PotentialResiduals {
    /// `∂⃗_I × ∂⃗_J U`.
    pub cross: f64,
    /// `L⃗ U`.
    pub rotation: f64,
    /// `L₀ U − U`.
    pub homogeneity: f64,
    /// `∂⃗_I U − 2 U_IJ x⃗^J`.
    pub del_u: f64,
}

impl PotentialResiduals {
    pub fn max(&self) -> f64 {
        self.cross.max(self.rotation).max(self.homogeneity).max(self.del_u)
    }
}

pub fn potential_constraints(p: &ConePotential, x: &[f64]) -> PotentialResiduals {
    let m = p.m;
    let xb = &x[..3 * m];
    let g = &jacobian(p.f.as_ref(), xb, p.scheme)[0];
    let h = &hessians(p.f.as_ref(), xb, p.scheme)[0];
    let val = p.f.eval(xb)[0];
    let mut r = PotentialResiduals::default();
    for i in 0..m {
        for j in 0..m {
            for k in 0..3 {
                let mut c = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        c += eps(k, a, b) * h[xi(i, a)][xi(j, b)];
                    }
                }
                r.cross = r.cross.max(c.abs());
            }
        }
    }
    for a in 0..4 {
        let mut lu = 0.0;
        for k in 0..m {
            for c in 0..3 {
                lu += generator_component(a, xb, k, c) * g[xi(k, c)];
            }
        }
        if a == 0 {
            r.homogeneity = (lu - val).abs();
        } else {
            r.rotation = r.rotation.max(lu.abs());
        }
    }
    let u = potential_to_higgs(p, x).u;
    for i in 0..m {
        for c in 0..3 {
            let rhs: f64 = (0..m).map(|j| 2.0 * u[(i, j)] * xb[xi(j, c)]).sum();
            r.del_u = r.del_u.max((g[xi(i, c)] - rhs).abs());
        }
    }
    r
}

/// `ι_{L_a} A_I + U_IJ x^J_a` as `[a][I]`; zero everywhere when the
/// connection is gauge-fixed.
pub fn gauge_fix_table(gh: &GHData, p: &[f64]) -> [Vec<f64>; 4] {
    let (m, n) = (gh.m, gh.dim());
    let a = gh.conn_at(p);
    let u = gh.higgs_at(p);
    let l = collective_generators(m, n);
    core::array::from_fn(|g| {
        let v = l[g].at(p);
        (0..m)
            .map(|i| {
                let contr: f64 = (0..n).map(|mu| v[mu] * a[i][mu]).sum();
                let ux: f64 = if g == 0 {
                    0.0
                } else {
                    (0..m).map(|j| u[(i, j)] * p[xi(j, g - 1)]).sum()
                };
                contr + ux
            })
            .collect()
    })
}

pub fn gauge_fix_residual(gh: &GHData, p: &[f64]) -> f64 {
    gauge_fix_table(gh, p)
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0, |m, v| m.max(v.abs()))
}

/// `X_a = L_a − (ι_{L_a}A_I + U_IJ x^J_a) ∂_{ψ_I}`.
pub fn lifted_generators(gh: &GHData) -> [VectorField; 4] {
    let (m, n) = (gh.m, gh.dim());
    core::array::from_fn(|a| {
        let g = gh.clone();
        VectorField::new(n, move |p| {
            let mut v = vec![0.0; n];
            for k in 0..m {
                for j in 0..3 {
                    v[xi(k, j)] = generator_component(a, p, k, j);
                }
            }
            let t = gauge_fix_table(&g, p);
            for i in 0..m {
                v[3 * m + i] = -t[a][i];
            }
            v
        })
    })
}

/// `κ' = U_IJ x⃗^I·x⃗^J` and its differential on the total chart.
fn half_potential_differential(gh: &GHData, p: &[f64]) -> Vec<f64> {
    let (m, n) = (gh.m, gh.dim());
    let j = jacobian(gh.higgs.as_ref(), &p[..3 * m], gh.scheme);
    let u = gh.higgs_at(p);
    let mut out = vec![0.0; n];
    for mu in 0..3 * m {
        let mut acc = 0.0;
        for a in 0..m {
            for b in 0..m {
                let dot: f64 = (0..3).map(|c| p[xi(a, c)] * p[xi(b, c)]).sum();
                acc += j[a * m + b][mu] * dot;
            }
        }
        out[mu] = acc;
    }
    for a in 0..m {
        for c in 0..3 {
            let s: f64 = (0..m).map(|b| 2.0 * u[(a, b)] * p[xi(b, c)]).sum();
            out[xi(a, c)] += s;
        }
    }
    out
}

/// Residuals of the cone criterion for gauge-fixed data satisfying the
/// Higgs constraints: `ι_{X_i}Ω_j − ε_ijk ι_{X₀}Ω_k + δ_ij d(U_IJ x⃗^I·x⃗^J)`
/// and `L_{X₀}Ω_k − Ω_k`.
pub fn cone_criterion_residual(gh: &GHData, p: &[f64]) -> f64 {
    let (r1, r2) = cone_criterion_parts(gh, p);
    r1.max(r2)
}

pub fn cone_criterion_parts(gh: &GHData, p: &[f64]) -> (f64, f64) {
    let n = gh.dim();
    let x = lifted_generators(gh);
    let xv: Vec<Vec<f64>> = x.iter().map(|v| v.at(p)).collect();
    let om = omega_matrices(gh, p);
    let dk = half_potential_differential(gh, p);
    let contract = |v: &[f64], w: &DMatrix<f64>| -> Vec<f64> {
        (0..n).map(|nu| (0..n).map(|mu| v[mu] * w[(mu, nu)]).sum()).collect()
    };
    let mut r1: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let lhs = contract(&xv[i + 1], &om[j]);
            let mut rhs = vec![0.0; n];
            for k in 0..3 {
                let e = eps(i, j, k);
                if e != 0.0 {
                    for (r, c) in rhs.iter_mut().zip(contract(&xv[0], &om[k])) {
                        *r += e * c;
                    }
                }
            }
            if i == j {
                for (r, c) in rhs.iter_mut().zip(&dk) {
                    *r -= c;
                }
            }
            r1 = r1.max(lhs.iter().zip(&rhs).fold(0.0, |m, (a, b)| m.max((a - b).abs())));
        }
    }
    let t = hk_forms(gh);
    let mut r2: f64 = 0.0;
    for k in 0..3 {
        let l = lie_form(&x[0], &t.forms[k], DerivScheme::Central { h: gh.scheme.step() });
        r2 = r2.max(amax(&(l.matrix(p) - &om[k])));
    }
    (r1, r2)
}

/// `c_{I0}` and `c⃗_I` as 1-forms on the total chart: `[I][a][μ]`.
pub fn c_terms(gh: &GHData, p: &[f64]) -> Vec<[Vec<f64>; 4]> {
    let (m, n) = (gh.m, gh.dim());
    let lu = higgs_generator_derivs(gh, p);
    let u = gh.higgs_at(p);
    (0..m)
        .map(|i| {
            let mut c: [Vec<f64>; 4] = core::array::from_fn(|_| vec![0.0; n]);
            for j in 0..m {
                let o = i * m + j;
                for a in 0..3 {
                    c[0][xi(j, a)] += lu[a + 1][o];
                }
                for k in 0..3 {
                    for a in 0..3 {
                        for b in 0..3 {
                            let e = eps(k, a, b);
                            if e != 0.0 {
                                c[k + 1][xi(j, b)] -= e * lu[a + 1][o];
                            }
                        }
                    }
                    c[k + 1][xi(j, k)] -= lu[0][o] + u[(i, j)];
                }
            }
            c
        })
        .collect()
}

/// `x⃗^I·c⃗_I`.
fn x_dot_c(gh: &GHData, p: &[f64]) -> Vec<f64> {
    let n = gh.dim();
    let c = c_terms(gh, p);
    let mut out = vec![0.0; n];
    for (i, ci) in c.iter().enumerate() {
        for k in 0..3 {
            for mu in 0..n {
                out[mu] += p[xi(i, k)] * ci[k + 1][mu];
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ObstructionResiduals {
    /// `ι_{X_i}Ω_j = ε_ijk ι_{X₀}Ω_k − δ_ij [d(U_IJ x⃗^I·x⃗^J) + x⃗^I·c⃗_I]`.
    pub contraction: f64,
    /// `L_{X₀}Ω_k = Ω_k + ⋆^I c_{Ik}`.
    pub lie: f64,
    /// `x⃗^I·c⃗_I = ½U_IJ d(x⃗^I·x⃗^J) − d(U_IJ x⃗^I·x⃗^J)`.
    pub xc: f64,
    /// `⋆^I c_{I0} = d(x⃗^I·c⃗_I)`.
    pub starc0: f64,
}

impl ObstructionResiduals {
    pub fn max(&self) -> f64 {
        self.contraction.max(self.lie).max(self.xc).max(self.starc0)
    }
}

/// The obstruction identities with `c`-terms, valid for any data solving
/// the Bogomolny equations.
pub fn obstruction_identities(gh: &GHData, p: &[f64]) -> ObstructionResiduals {
    let (m, n) = (gh.m, gh.dim());
    let x = lifted_generators(gh);
    let xv: Vec<Vec<f64>> = x.iter().map(|v| v.at(p)).collect();
    let om = omega_matrices(gh, p);
    let dk = half_potential_differential(gh, p);
    let xc = x_dot_c(gh, p);
    let contract = |v: &[f64], w: &DMatrix<f64>| -> Vec<f64> {
        (0..n).map(|nu| (0..n).map(|mu| v[mu] * w[(mu, nu)]).sum()).collect()
    };
    let mut out = ObstructionResiduals::default();
    for i in 0..3 {
        for j in 0..3 {
            let lhs = contract(&xv[i + 1], &om[j]);
            let mut rhs = vec![0.0; n];
            for k in 0..3 {
                let e = eps(i, j, k);
                if e != 0.0 {
                    for (r, c) in rhs.iter_mut().zip(contract(&xv[0], &om[k])) {
                        *r += e * c;
                    }
                }
            }
            if i == j {
                for mu in 0..n {
                    rhs[mu] -= dk[mu] + xc[mu];
                }
            }
            out.contraction = out
                .contraction
                .max(lhs.iter().zip(&rhs).fold(0.0, |m, (a, b)| m.max((a - b).abs())));
        }
    }
    let t = hk_forms(gh);
    let c = c_terms(gh, p);
    let fd = DerivScheme::Central { h: gh.scheme.step() };
    for k in 0..3 {
        let l = lie_form(&x[0], &t.forms[k], fd).matrix(p);
        let mut star = DMatrix::zeros(n, n);
        for (i, ci) in c.iter().enumerate() {
            star += star_i(m, n, i, &ci[k + 1]);
        }
        out.lie = out.lie.max(amax(&(l - &om[k] - star)));
    }
    // ½U_IJ d(x⃗^I·x⃗^J) − d(U_IJ x⃗^I·x⃗^J)
    let u = gh.higgs_at(p);
    let mut rhs = vec![0.0; n];
    for a in 0..m {
        for cc in 0..3 {
            let s: f64 = (0..m).map(|b| u[(a, b)] * p[xi(b, cc)]).sum();
            rhs[xi(a, cc)] += s;
        }
    }
    for mu in 0..n {
        rhs[mu] -= dk[mu];
    }
    out.xc = xc.iter().zip(&rhs).fold(0.0, |m, (a, b)| m.max((a - b).abs()));
    let g = gh.clone();
    let xcf = KForm::one_form(n, move |q| x_dot_c(&g, q));
    let dxc = d(&xcf, fd).matrix(p);
    let mut star0 = DMatrix::zeros(n, n);
    for (i, ci) in c.iter().enumerate() {
        star0 += star_i(m, n, i, &ci[0]);
    }
    out.starc0 = amax(&(star0 - dxc));
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AlgebraResiduals {
    /// Defect of the base components.
    pub horizontal: f64,
    /// Defect of the `∂_ψ` components.
    pub vertical: f64,
}

/// `[X_i, X_j] = ε_ijk X_k`, `[X_i, X₀] = 0` for the lifted generators.
pub fn generator_algebra_check(gh: &GHData, p: &[f64]) -> AlgebraResiduals {
    let m = gh.m;
    let x = lifted_generators(gh);
    let fd = DerivScheme::Central { h: gh.scheme.step() };
    let mut out = AlgebraResiduals::default();
    let mut record = |v: Vec<f64>| {
        for (mu, val) in v.iter().enumerate() {
            if mu < 3 * m {
                out.horizontal = out.horizontal.max(val.abs());
            } else {
                out.vertical = out.vertical.max(val.abs());
            }
        }
    };
    for i in 1..4 {
        record(bracket(&x[i], &x[0], fd).at(p));
        for j in 1..4 {
            let mut b = bracket(&x[i], &x[j], fd).at(p);
            for k in 1..4 {
                let e = eps(i - 1, j - 1, k - 1);
                if e != 0.0 {
                    for (bv, xv) in b.iter_mut().zip(x[k].at(p)) {
                        *bv -= e * xv;
                    }
                }
            }
            record(b);
        }
    }
    out
}

/// `Σ_c w_c |Σ_K a_cK x⃗^K|`, a family of cone potentials.
#[derive(Clone, Debug)]
pub struct NormSum {
    pub m: usize,
    pub terms: Vec<(f64, Vec<f64>)>,
}

impl GenericMap for NormSum {
    fn apply<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let mut acc = T::zero();
        for (w, a) in &self.terms {
            let mut y = ImQuaternion::zero();
            for (k, &ak) in a.iter().enumerate() {
                y = y + ImQuaternion::from_slice(&x[3 * k..3 * k + 3]).scale(T::cst(ak));
            }
            acc = acc + T::cst(*w) * y.norm();
        }
        vec![acc]
    }
}

impl NormSum {
    pub fn into_potential(self, scheme: DerivScheme) -> ConePotential {
        ConePotential { m: self.m, f: Arc::new(crate::excalc::Gen(self)), scheme }
    }
}

/// `2(|x⁰| + |x¹| + |x⁰ + x¹|)`.
pub fn three_center_potential() -> NormSum {
    NormSum { m: 2, terms: vec![(2.0, vec![1.0, 0.0]), (2.0, vec![0.0, 1.0]), (2.0, vec![1.0, 1.0])] }
}

/// Residual check of a potential round trip through a Higgs field.
pub fn round_trip_residual(gh: &GHData, x: &[f64]) -> Result<f64> {
    let p = potential_of(gh);
    let back = potential_to_higgs(&p, x).u;
    Ok(amax(&(back - gh.higgs_at(x))))
}

/// Contraction helper exposed for reports: `ι_X ω` at a point.
pub fn contract_at(v: &VectorField, w: &KForm, p: &[f64]) -> Result<Vec<f64>> {
    Ok(interior(v, w)?.coeffs(p))
}
