mod common;

use num_complex::Complex;
use proptest::prelude::*;
use qkansatz::cmap::*;
use qkansatz::error::Error;
use qkansatz::excalc::{amax, DerivScheme};
use qkansatz::gh::*;
use qkansatz::qk::{self, qk_structure};
use qkansatz::scalar::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const D: DerivScheme = DerivScheme::Dual;

fn families() -> Vec<Prepotential> {
    vec![common::quad_n1(), common::quad_lorentz(), common::cubic_over_linear(), common::quad_generic()]
}

fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).fold(0.0, |r, (u, v)| u.iter().zip(v).fold(r, |r, (x, y)| r.max((x - y).abs())))
}

#[test]
fn contour_integral_against_closed_form() {
    // The trapezoid sum carries the opposite overall sign to 2r⁰ Im F(χ).
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for prep in [common::quad_n1(), common::quad_lorentz(), common::cubic_over_linear()] {
        for _ in 0..5 {
            let p = common::upstairs(&mut rng, &prep);
            let x = &p[..3 * (prep.n + 1)];
            let c = l_contour(&prep, x).unwrap();
            let l = l_closed(&prep, x);
            assert!((c + l).abs() < 1e-10 * (1.0 + l.abs()), "{c} {l}");
        }
    }
}

#[test]
fn quadrature_converges_geometrically() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let prep = common::cubic_over_linear();
    let p = common::upstairs(&mut rng, &prep);
    let x = &p[..9];
    let l = l_closed(&prep, x);
    let c = contour_for(&prep, x, QUAD_POINTS).unwrap();
    let e8 = (contour_sum(&prep, x, &c, 8) + l).abs();
    let e64 = (contour_sum(&prep, x, &c, 64) + l).abs();
    assert!(e64 < 1e-12 * (1.0 + l.abs()) && e64 <= e8, "{e8} {e64}");
}

#[test]
fn identity_suite_all_families() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for prep in families() {
        for _ in 0..10 {
            let p = common::upstairs(&mut rng, &prep);
            let t = identity_suite(&prep, &p).unwrap();
            let tol = 1e-9;
            for (name, v) in &t {
                assert!(*v < tol, "{name} {v}");
            }
            assert!(table_max(&t) < tol);
        }
    }
}

#[test]
fn hk_potential_two_routes() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for prep in families() {
        for _ in 0..10 {
            let p = common::upstairs(&mut rng, &prep);
            let a = hk_potential_cmap(&prep, &p);
            let b = hk_potential_alt(&prep, &p);
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{a} {b}");
        }
    }
}

#[test]
fn closed_data_matches_legendre_construction() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    for prep in [common::quad_lorentz(), common::cubic_over_linear()] {
        let c = gh_closed(&prep, D);
        let l = gh_legendre(&prep, false, D);
        for _ in 0..5 {
            let p = common::upstairs(&mut rng, &prep);
            let m = prep.n + 1;
            let hc = c.higgs_at(&p[..3 * m]);
            let hl = l.higgs_at(&p[..3 * m]);
            assert!(amax(&(hc - hl)) < 1e-10);
            assert!(max_diff(&c.conn_at(&p), &l.conn_at(&p)) < 1e-10);
            let fc = curvature(&c, &p);
            let fl = curvature(&l, &p);
            for (a, b) in fc.iter().zip(&fl) {
                assert!(amax(&(a - b)) < 1e-9);
            }
        }
    }
}

#[test]
fn higgs_matrix_against_jets() {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    let prep = common::quad_generic();
    let g = gh_closed(&prep, D);
    for _ in 0..5 {
        let p = common::upstairs(&mut rng, &prep);
        let (h, _) = higgs_matrix(&prep, &p[..9]).unwrap();
        assert!(amax(&(h - g.higgs_at(&p[..9]))) < 1e-10);
    }
}

#[test]
fn bogomolny_and_gauge_fix() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for prep in families() {
        let g = gh_closed(&prep, D);
        let m = prep.n + 1;
        for _ in 0..5 {
            let p = common::upstairs(&mut rng, &prep);
            let scale = 1.0 + amax(&g.higgs_at(&p[..3 * m]));
            assert!(bogomolny1_residual(&g, &p[..3 * m]) < 1e-9 * scale);
            assert!(bogomolny2_residual(&g, &p) < 1e-8 * scale);
            assert!(qkansatz::cone::gauge_fix_residual(&g, &p) < 1e-9 * scale);
        }
    }
}

#[test]
fn heisenberg_symmetry_upstairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(38);
    for prep in [common::quad_lorentz(), common::cubic_over_linear()] {
        let h = heisenberg_upstairs(&prep);
        for _ in 0..3 {
            let p = common::upstairs(&mut rng, &prep);
            assert!(heisenberg_algebra_residual(&h, &p, DerivScheme::Central { h: 1e-4 }) < 1e-6);
            assert!(heisenberg_invariance_residual(&prep, &h, &p) < 1e-9);
        }
    }
}

#[test]
fn dualization_quadratic() {
    let mut rng = ChaCha8Rng::seed_from_u64(39);
    let prep = common::quad_generic();
    for _ in 0..5 {
        let p = common::upstairs(&mut rng, &prep);
        let r = dualization(&prep, &p).unwrap();
        assert!(r.double_dual < 1e-12);
        assert!(r.omega_plus < 1e-7);
        assert!(r.tau_modular < 1e-10);
        assert!(r.potential_self_dual < 1e-9 * (1.0 + hk_potential_cmap(&prep, &p).abs()));
        assert!(r.l_anti_self_dual.unwrap() < 1e-10);
    }
    let quad_dual = prep.dual().unwrap();
    let mono = common::cubic_over_linear();
    assert!(mono.dual().is_err());
    assert!(matches!(quad_dual.family, Family::Quadratic(_)));
}

#[test]
fn dualization_monomial() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let prep = common::cubic_over_linear();
    for _ in 0..5 {
        let p = common::upstairs(&mut rng, &prep);
        let r = dualization(&prep, &p).unwrap();
        assert!(r.double_dual < 1e-12 && r.tau_modular < 1e-9 && r.l_anti_self_dual.is_none());
    }
}

#[test]
fn dual_holomorphic_domain_error() {
    let z = vec![Complex::new(0.0, 0.0), Complex::new(0.3, 0.1)];
    let u = vec![Complex::new(0.2, 0.5), Complex::new(0.1, -0.4)];
    assert!(matches!(dual_holomorphic(&z, &u), Err(Error::Domain(_)) | Err(Error::Degenerate(_))));
}

fn probes(rng: &mut ChaCha8Rng, prep: &Prepotential, k: usize) -> Vec<Vec<f64>> {
    (0..k).map(|_| common::downstairs(rng, prep)).collect()
}

#[test]
fn reduction_matches_generic_reduction_in_rotated_frame() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for prep in [common::quad_lorentz(), common::cubic_over_linear()] {
        let pr = probes(&mut rng, &prep, 2);
        let generic = qk::reduce(&gh_closed_in_frame(&prep, CYCLIC, D), 1.0, &pr).unwrap();
        let closed = reduce_cmap(&prep, 1.0, D).unwrap();
        for _ in 0..5 {
            let p = common::downstairs(&mut rng, &prep);
            let scale = 1.0 + amax(&closed.higgs_at(&p));
            assert!(amax(&(generic.higgs_at(&p) - closed.higgs_at(&p))) < 1e-9 * scale);
            assert!(max_diff(&generic.conn_at(&p), &closed.conn_at(&p)) < 1e-9 * scale);
            let fa = qk::reduced_curvature(&generic, &p).unwrap();
            let fb = qk::reduced_curvature(&closed, &p).unwrap();
            for (a, b) in fa.iter().zip(&fb) {
                assert!(amax(&(a - b)) < 1e-8 * scale);
            }
        }
    }
}

#[test]
fn closed_form_metric_against_reduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for prep in [common::quad_n1(), common::quad_lorentz(), common::cubic_over_linear()] {
        for s in [1.0, -0.5] {
            let rd = reduce_cmap(&prep, s, D).unwrap();
            let st = qk_structure(&rd);
            for _ in 0..3 {
                let p = common::downstairs(&mut rng, &prep);
                let fs = fs_assemble(&prep, s, &p).unwrap();
                let g = st.metric_at(&p).unwrap();
                let scale = 1.0 + amax(&g);
                assert!(amax(&(g - &fs.metric * s)) < 1e-10 * scale);
                let th = st.theta_at(&p).unwrap();
                for k in 0..3 {
                    let d = th[k].iter().zip(&fs.theta[k]).fold(0.0f64, |r, (a, b)| r.max((a - b).abs()));
                    assert!(d < 1e-10 * scale);
                }
                assert!(amax(&(&fs.im_tau_inv - &fs.im_tau_inv_direct)) < 1e-10 * (1.0 + amax(&fs.im_tau_inv)));
                let t0 = fs.theta0.iter().zip(&fs.theta0_direct).fold(0.0f64, |r, (a, b)| r.max((a - b).abs()));
                assert!(t0 < 1e-10);
            }
        }
    }
}

#[test]
fn legendre_pipeline_end_to_end() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let prep = common::quad_lorentz();
    let pr = probes(&mut rng, &prep, 2);
    let up = rotate_frame(&gh_legendre(&prep, false, D), CYCLIC);
    let rd = qk::reduce(&up, 1.0, &pr).unwrap();
    let st = qk_structure(&rd);
    for _ in 0..3 {
        let p = common::downstairs(&mut rng, &prep);
        let fs = fs_assemble(&prep, 1.0, &p).unwrap();
        let g = st.metric_at(&p).unwrap();
        assert!(amax(&(g.clone() - &fs.metric)) < 1e-9 * (1.0 + amax(&g)));
    }
}

#[test]
fn contour_fed_pipeline_is_not_equivariant() {
    // The contour L differs from the closed one by an overall sign, which
    // flips the Higgs field and spoils the cone structure.
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let prep = common::quad_lorentz();
    let pr = probes(&mut rng, &prep, 1);
    let up = rotate_frame(&gh_legendre_from(&prep, LSource::Contour(64), false, D), CYCLIC);
    assert!(matches!(qk::reduce(&up, 1.0, &pr), Err(Error::NotEquivariant { .. })));
}

#[test]
fn downstairs_einstein_moment_maps_killing() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    for prep in [common::quad_lorentz(), common::cubic_over_linear()] {
        let rd = reduce_cmap_gauge(&prep, 1.0, false, D).unwrap();
        let st = qk_structure(&rd);
        for _ in 0..3 {
            let p = common::downstairs(&mut rng, &prep);
            assert!(qk::einstein_residual(&st, &p).unwrap() < 1e-8);
            for i in 0..rd.m() {
                assert!(qk::moment_map_residual(&st, i, &p).unwrap() < 1e-7);
            }
            assert!(qk::killing_residual(&st, &p) < 1e-6);
            // the Heisenberg fields are written in the coordinates of the
            // gauge with the exact term
            let g = qk_structure(&reduce_cmap(&prep, 1.0, D).unwrap()).metric();
            let h = heisenberg_downstairs(prep.n);
            let k = downstairs_killing_residual(&g, &h, &p, DerivScheme::Central { h: 2e-5 });
            assert!(k < 1e-6);
        }
    }
}

#[test]
fn signature_definite_for_lorentzian_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    for prep in [common::quad_n1(), common::quad_lorentz(), common::cubic_over_linear()] {
        let rd = reduce_cmap(&prep, 1.0, D).unwrap();
        let samples: Vec<Vec<f64>> = (0..10).map(|_| common::downstairs_lorentzian(&mut rng, &prep)).collect();
        let r = signature_check(&rd, &samples).unwrap();
        assert_eq!(r.violations, 0, "{r:?}");
        assert!(r.sign.is_some());
    }
}

#[test]
fn monomial_derivatives_against_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let prep = common::cubic_over_linear();
    for _ in 0..10 {
        let eta: Vec<C64> = (0..2).map(|_| Complex::new(rng.gen_range(0.5..1.5), rng.gen_range(-1.0..1.0))).collect();
        let f = |e: &[C64]| (e[1] * e[1] * e[1]) / e[0];
        assert!((prep.f(&eta) - f(&eta)).norm() < 1e-12 * (1.0 + f(&eta).norm()));
        let fa = prep.fa(&eta);
        let fab = prep.fab(&eta);
        let h = 1e-4;
        for a in 0..2 {
            let step = |k: f64| {
                let mut e = eta.clone();
                e[a] += h * k;
                e
            };
            let d = (-f(&step(2.0)) + f(&step(1.0)) * 8.0 - f(&step(-1.0)) * 8.0 + f(&step(-2.0))) / (12.0 * h);
            assert!((fa[a] - d).norm() < 1e-8 * (1.0 + d.norm()));
            for b in 0..2 {
                let g = |e: &[C64]| prep.fa(e)[b];
                let d2 = (-g(&step(2.0)) + g(&step(1.0)) * 8.0 - g(&step(-1.0)) * 8.0 + g(&step(-2.0))) / (12.0 * h);
                assert!((fab[2 * a + b] - d2).norm() < 1e-7 * (1.0 + d2.norm()));
            }
        }
        assert!(prep.homogeneity_residual(&eta) < 1e-11);
    }
}

#[test]
fn plugin_matches_builtin() {
    let mut rng = ChaCha8Rng::seed_from_u64(48);
    let mono = common::cubic_over_linear();
    let exact = Prepotential::plugin(
        2,
        holo(|e| vec![e[1] * e[1] * e[1] / e[0]]),
        holo(|e| vec![-(e[1] * e[1] * e[1]) / (e[0] * e[0]), e[1] * e[1] * 3.0 / e[0]]),
        holo(|e| {
            let (x, y) = (e[0], e[1]);
            let xy = -(y * y) * 3.0 / (x * x);
            vec![y * y * y * 2.0 / (x * x * x), xy, xy, y * 6.0 / x]
        }),
    );
    let fd = Prepotential::plugin_from_f(2, holo(|e| vec![e[1] * e[1] * e[1] / e[0]]));
    assert!(!exact.lower_precision() && fd.lower_precision());
    for _ in 0..5 {
        let p = common::upstairs(&mut rng, &mono);
        let u = hk_potential_cmap(&mono, &p);
        assert!((hk_potential_cmap(&exact, &p) - u).abs() < 1e-11 * (1.0 + u.abs()));
        assert!((hk_potential_cmap(&fd, &p) - u).abs() < 1e-6 * (1.0 + u.abs()));
    }
}

#[test]
fn construction_errors() {
    let bad = Prepotential::quadratic(2, vec![Complex::new(1.0, 0.0), Complex::new(0.2, 0.0), Complex::new(0.3, 0.0), Complex::new(1.0, 0.0)]);
    assert!(matches!(bad, Err(Error::Invalid(_))));
    assert!(Prepotential::monomial(Complex::new(1.0, 0.0), vec![1, 3]).is_err());
    assert!(matches!(roots_zeta0(Complex::new(0.0, 0.0), 1.0), Err(Error::Degenerate(_))));
    // x¹ parallel to x⁰
    let prep = common::quad_n1();
    let x = [0.3, 0.4, -0.2, 0.6, 0.8, -0.4];
    assert!(matches!(higgs_matrix(&prep, &x), Err(Error::Degenerate(_))));
}

#[test]
fn frame_rotation_preserves_higgs_and_bogomolny() {
    let mut rng = ChaCha8Rng::seed_from_u64(49);
    let prep = common::quad_lorentz();
    let g = gh_closed(&prep, D);
    let r = gh_closed_in_frame(&prep, CYCLIC, D);
    for _ in 0..5 {
        let p = common::upstairs(&mut rng, &prep);
        assert!(amax(&(g.higgs_at(&p[..9]) - r.higgs_at(&p[..9]))) < 1e-12);
        assert!(bogomolny2_residual(&r, &p) < 1e-9 * (1.0 + amax(&r.higgs_at(&p[..9]))));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_quadratic_homogeneity(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0, t in 0.2f64..3.0) {
        let prep = common::quad_generic();
        let eta = vec![Complex::new(a, b), Complex::new(c, d)];
        prop_assert!(prep.homogeneity_residual(&eta) < 1e-12 * (1.0 + a.abs() + b.abs() + c.abs() + d.abs()).powi(2));
        let scaled: Vec<C64> = eta.iter().map(|v| v * t).collect();
        let lhs = prep.f(&scaled);
        let rhs = prep.f(&eta) * (t * t);
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn prop_l_is_degree_one(seed in 0u64..1000, t in 0.3f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prep = common::quad_lorentz();
        let p = common::upstairs(&mut rng, &prep);
        let x: Vec<f64> = p[..9].to_vec();
        let xs: Vec<f64> = x.iter().map(|v| v * t).collect();
        let l = l_closed(&prep, &x);
        prop_assert!((l_closed(&prep, &xs) - t * l).abs() < 1e-11 * (1.0 + t * l.abs()));
    }
}

#[test]
fn swann_pair_in_invariant_gauge() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for prep in [common::quad_n1(), common::cubic_over_linear()] {
        for exact in [true, false] {
            let up = rotate_frame(&gh_closed_gauge(&prep, exact, D), CYCLIC);
            let rd = reduce_cmap_gauge(&prep, 1.0, exact, D).unwrap();
            for _ in 0..4 {
                let mut p = common::downstairs(&mut rng, &prep);
                p.extend((0..4).map(|_| rng.gen_range(-1.0..1.0)));
                assert!(qk::swann_consistency(&up, &rd, &p).unwrap() < 1e-9);
                let mom = qk::moment_lift_check(&up, &rd, &p).unwrap();
                // the exact term makes ∂_{ψ_A} a non-symmetry of the chart
                assert!(if exact { mom > 1e-3 } else { mom < 1e-6 }, "{mom}");
            }
        }
    }
}
