mod common;

use std::sync::Arc;

use num_complex::Complex;
use qkansatz::cmap::{self, CmapL, CmapU};
use qkansatz::excalc::{DerivScheme, Gen};
use qkansatz::gh::*;
use qkansatz::legendre::*;
use qkansatz::scalar::{Scalar, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `L = Σ_I c_I(−(x^I)² + ½((x^I_2)² + (x^I_3)²))`, flat with `U = diag(c)`.
struct Flat(Vec<f64>);

impl LPotential for Flat {
    fn m(&self) -> usize {
        self.0.len()
    }
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        self.0.iter().enumerate().fold(T::zero(), |s, (i, c)| {
            let (a, b, e) = (x[3 * i], x[3 * i + 1], x[3 * i + 2]);
            s + T::cst(*c) * (-(a * a) + T::cst(0.5) * (b * b + e * e))
        })
    }
}

/// `L + ε (x⁰)³`, which breaks the Laplace-type constraints.
struct Perturbed<L>(L, f64);

impl<L: LPotential> LPotential for Perturbed<L> {
    fn m(&self) -> usize {
        self.0.m()
    }
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        self.0.eval(x) + T::cst(self.1) * x[0] * x[0] * x[0]
    }
}

fn zs(x: &[f64]) -> Vec<C64> {
    x.chunks(3).map(|c| Complex::new(0.5 * c[1], 0.5 * c[2])).collect()
}

#[test]
fn flat_potential_solves_linearly() {
    let l = Flat(vec![1.5, 0.5]);
    let z = vec![Complex::new(0.2, -0.1), Complex::new(0.4, 0.3)];
    let u = vec![Complex::new(0.7, -0.9), Complex::new(-0.2, 0.6)];
    let r = transform(&l, &z, &u).unwrap();
    // L_x = −2c x = 2 Im u
    for i in 0..2 {
        assert!((r.x[i] + u[i].im / l.0[i]).abs() < 1e-13);
    }
    assert!(constraints_residual(&l, &[0.1, 0.2, 0.3, -0.4, 0.5, 0.6]) < 1e-13);
    let h = higgs_from_l(&l, &[0.1, 0.2, 0.3, -0.4, 0.5, 0.6]);
    assert!((h[(0, 0)] - 1.5).abs() < 1e-14 && (h[(1, 1)] - 0.5).abs() < 1e-14 && h[(0, 1)].abs() < 1e-14);
    // degree 2 rather than 1: not a cone
    assert!(hkc_residual(&l, &[0.1, 0.2, 0.3, -0.4, 0.5, 0.6]) > 1e-3);
}

#[test]
fn cmap_potential_constraints_and_cone() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for prep in [common::quad_n1(), common::quad_lorentz(), common::cubic_over_linear()] {
        let l = CmapL { prep: prep.clone() };
        for _ in 0..10 {
            let p = common::upstairs(&mut rng, &prep);
            let x = &p[..3 * l.m()];
            assert!(constraints_residual(&l, x) < 1e-9, "{}", constraints_residual(&l, x));
            assert!(hkc_residual(&l, x) < 1e-10);
        }
    }
}

#[test]
fn transform_fixed_point_and_involution() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let prep = common::quad_lorentz();
    let l = CmapL { prep: prep.clone() };
    for _ in 0..5 {
        let p = common::upstairs(&mut rng, &prep);
        let x = &p[..9];
        let z = zs(x);
        // u from the point, then solve back for x
        let lx = l_x(&l, x);
        let u: Vec<C64> = lx.iter().zip(&p[9..]).map(|(v, psi)| Complex::new(*psi, 0.5 * v)).collect();
        let guess: Vec<f64> = (0..3).map(|i| x[3 * i] + 0.05).collect();
        let r = transform_from(&l, &z, &u, &guess).unwrap();
        for i in 0..3 {
            assert!((r.x[i] - x[3 * i]).abs() < 1e-9, "{:?}", r.x);
        }
        let lx2 = l_x(&l, &{
            let mut q = x.to_vec();
            for i in 0..3 {
                q[3 * i] = r.x[i];
            }
            q
        });
        for i in 0..3 {
            assert!((lx2[i] - 2.0 * u[i].im).abs() < 1e-10);
        }
        // ∂κ/∂(Im u_I) = −2x^I, by central differences of κ
        let h = 1e-5;
        for i in 0..3 {
            let mut up = u.clone();
            let mut um = u.clone();
            up[i].im += h;
            um[i].im -= h;
            let kp = transform_from(&l, &z, &up, &r.x).unwrap().kappa;
            let km = transform_from(&l, &z, &um, &r.x).unwrap().kappa;
            assert!(((kp - km) / (2.0 * h) + 2.0 * r.x[i]).abs() < 1e-7);
        }
        // warm-started path: small steps in u stay on the branch
        let mut solver = LegendreSolver::with_guess(guess.clone());
        let mut ut = u.clone();
        for k in 0..5 {
            for v in ut.iter_mut() {
                v.im += 0.01;
            }
            let w = solver.solve(&l, &z, &ut).unwrap();
            let lxw = l_x(&l, &{
                let mut q = x.to_vec();
                for i in 0..3 {
                    q[3 * i] = w.x[i];
                }
                q
            });
            for i in 0..3 {
                assert!((lxw[i] - 2.0 * ut[i].im).abs() < 1e-10, "step {k}");
            }
        }
    }
}

#[test]
fn kappa_is_the_hyperkahler_potential() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for prep in [common::quad_n1(), common::quad_lorentz()] {
        let l = CmapL { prep: prep.clone() };
        let m = l.m();
        for _ in 0..5 {
            let p = common::upstairs(&mut rng, &prep);
            let x = &p[..3 * m];
            let lx = l_x(&l, x);
            let u: Vec<C64> = lx.iter().map(|v| Complex::new(0.0, 0.5 * v)).collect();
            let r = transform_from(&l, &zs(x), &u, &(0..m).map(|i| x[3 * i]).collect::<Vec<_>>()).unwrap();
            let uhk = cmap::hk_potential_cmap(&prep, x);
            assert!((r.kappa - uhk).abs() < 1e-11 * (1.0 + uhk.abs()), "{} {}", r.kappa, uhk);
        }
    }
}

#[test]
fn singular_hessian_is_reported() {
    let l = Flat(vec![0.0]);
    let r = transform(&l, &[Complex::new(0.1, 0.0)], &[Complex::new(0.0, 1.0)]);
    assert!(matches!(r, Err(qkansatz::error::Error::Singular { .. })));
}

struct X0;

impl qkansatz::excalc::GenericMap for X0 {
    fn apply<T: Scalar>(&self, p: &[T]) -> Vec<T> {
        vec![p[0], T::zero()]
    }
}

#[test]
fn perturbed_potential_breaks_bogomolny() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let prep = common::quad_lorentz();
    let base = CmapL { prep: prep.clone() };
    let good = gh_from_l(Arc::new(base.clone()), Arc::new(NoShift(3)), DerivScheme::Dual);
    let bad = gh_from_l(Arc::new(Perturbed(base, 0.1)), Arc::new(NoShift(3)), DerivScheme::Dual);
    for _ in 0..5 {
        let p = common::upstairs(&mut rng, &prep);
        let g = bogomolny2_residual(&good, &p);
        let b = bogomolny2_residual(&bad, &p);
        assert!(g < 1e-10 && b > 1e-3, "{g} {b}");
    }
}

#[test]
fn gauge_kernel_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let prep = common::quad_lorentz();
    let u = Gen(CmapU { prep: prep.clone(), zero_shift: false });
    let x0 = Gen(X0);
    for _ in 0..5 {
        let p = common::upstairs(&mut rng, &prep);
        assert!(gauge_kernel_residual(3, &u, &p, DerivScheme::Dual) < 1e-10);
        assert!(gauge_kernel_residual(3, &x0, &p, DerivScheme::Dual) > 1e-2);
    }
}
