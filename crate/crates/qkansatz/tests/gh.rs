use qkansatz::excalc::DerivScheme;
use qkansatz::gh::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn point(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..4 * m).map(|_| rng.gen_range(-1.5..1.5)).collect()
}

#[test]
fn families_solve_bogomolny() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for fam in [dirac_monopole(), two_center_diag(), three_center(), shifted_centers()] {
        let gh = fam.clone().into_gh(DerivScheme::Dual);
        for _ in 0..20 {
            let p = point(&mut rng, gh.m);
            let b1 = bogomolny1_residual(&gh, &p);
            let b2 = bogomolny2_residual(&gh, &p);
            assert!(b1 < 1e-10 && b2 < 1e-9, "{:?} {b1} {b2}", fam.terms.len());
        }
    }
}

#[test]
fn monopole_hyperkahler() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for fam in [dirac_monopole(), three_center(), shifted_centers()] {
        let gh = fam.into_gh(DerivScheme::Dual);
        let t = hk_forms(&gh);
        let g = hk_metric(&gh);
        for _ in 0..10 {
            let p = point(&mut rng, gh.m);
            let c = closure_check(&t, &p, DerivScheme::default());
            let a = algebraic_check(&t, &g, &p).unwrap();
            let q = quat_forms_check(&gh, &p).unwrap();
            assert!(c < 1e-6, "closure {c}");
            assert!(a < 1e-8, "algebraic {a}");
            assert!(q < 1e-10, "quat {q}");
            assert!(fiber_contraction_residual(&gh, &p) == 0.0);
        }
    }
}

#[test]
fn dirac_monopole_fifty_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let gh = dirac_monopole().into_gh(DerivScheme::default());
    let t = hk_forms(&gh);
    let g = hk_metric(&gh);
    let mut worst = [0.0f64; 5];
    for _ in 0..50 {
        let p = loop {
            let p = point(&mut rng, 1);
            // keep off the Dirac string and the origin
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            if r > 0.3 && p[2] + r > 0.3 {
                break p;
            }
        };
        let v = [
            bogomolny1_residual(&gh, &p),
            bogomolny2_residual(&gh, &p),
            closure_check(&t, &p, DerivScheme::default()),
            algebraic_check(&t, &g, &p).unwrap(),
            quat_forms_check(&gh, &p).unwrap(),
        ];
        for (w, x) in worst.iter_mut().zip(v) {
            *w = w.max(x);
        }
    }
    assert!(worst[0] < 1e-6 && worst[1] < 1e-6, "{worst:?}");
    assert!(worst[2] < 1e-6, "{worst:?}");
    assert!(worst[3] < 1e-8 && worst[4] < 1e-8, "{worst:?}");
}
