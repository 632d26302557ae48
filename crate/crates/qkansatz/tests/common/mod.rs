#![allow(dead_code)]

use num_complex::Complex;
use qkansatz::cmap::{self, Prepotential};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `F = (i/2)(η¹)²`.
pub fn quad_n1() -> Prepotential {
    Prepotential::diagonal(1.0, &[1.0])
}

/// `N = diag(1, −1)`.
pub fn quad_lorentz() -> Prepotential {
    Prepotential::diagonal(1.0, &[1.0, -1.0])
}

/// `F = (η²)³/η¹`.
pub fn cubic_over_linear() -> Prepotential {
    Prepotential::monomial(Complex::new(1.0, 0.0), vec![-1, 3]).unwrap()
}

/// A symmetric quadratic with generic complex entries.
pub fn quad_generic() -> Prepotential {
    let c = vec![
        Complex::new(0.3, -0.8),
        Complex::new(0.1, 0.2),
        Complex::new(0.1, 0.2),
        Complex::new(-0.2, 0.6),
    ];
    Prepotential::quadratic(2, c).unwrap()
}

fn norm3(v: &[f64]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Point of the `4m` chart with `|x⃗^I| ≥ 0.4`, `|z⁰| ≥ 0.2` and no pole of the
/// prepotential near the twistor roots.
pub fn upstairs(rng: &mut ChaCha8Rng, prep: &Prepotential) -> Vec<f64> {
    let m = prep.n + 1;
    loop {
        let p: Vec<f64> = (0..4 * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if (0..m).any(|i| norm3(&p[3 * i..3 * i + 3]) < 0.4) {
            continue;
        }
        if (p[1] * p[1] + p[2] * p[2]).sqrt() < 0.4 {
            continue;
        }
        if let Ok(t) = cmap::identity_suite(prep, &p) {
            let fa = prep.fa(&cmap::kin(prep.n, &p).chi);
            if t.iter().all(|(_, v)| v.is_finite()) && fa.iter().all(|v| v.norm() < 50.0) {
                return p;
            }
        }
    }
}

/// Point of the `4n` chart with `𝒳¹ ∈ [0.5, 1]`, `|(𝒳̄N𝒳)| ≥ 0.05` and
/// `N` invertible.
pub fn downstairs(rng: &mut ChaCha8Rng, prep: &Prepotential) -> Vec<f64> {
    let n = prep.n;
    loop {
        let mut p: Vec<f64> = (0..4 * n).map(|_| rng.gen_range(-0.8..0.8)).collect();
        p[1] = rng.gen_range(1.0..2.0);
        let x = cmap::xnx(prep, &p);
        if x.abs() < 0.05 {
            continue;
        }
        let full = qkansatz::imhp::full_slots(n, &p[..3 * n - 1]);
        let xx: Vec<Complex<f64>> =
            (1..=n).map(|a| Complex::new(0.5 * full[3 * a + 1], 0.5 * full[3 * a + 2])).collect();
        if xx.iter().any(|v| v.norm() < 0.1) {
            continue;
        }
        let nn = prep.im_fab(&xx);
        if nn.determinant().abs() < 1e-3 || prep.fa(&xx).iter().any(|v| v.norm() > 30.0) {
            continue;
        }
        return p;
    }
}

/// As [`downstairs`], restricted to `(𝒳̄N𝒳) > 0` with `N` of signature
/// `(1, n−1)`.
pub fn downstairs_lorentzian(rng: &mut ChaCha8Rng, prep: &Prepotential) -> Vec<f64> {
    let n = prep.n;
    loop {
        let p = downstairs(rng, prep);
        if cmap::xnx(prep, &p) <= 0.0 {
            continue;
        }
        let full = qkansatz::imhp::full_slots(n, &p[..3 * n - 1]);
        let xx: Vec<Complex<f64>> =
            (1..=n).map(|a| Complex::new(0.5 * full[3 * a + 1], 0.5 * full[3 * a + 2])).collect();
        let ev = nalgebra::SymmetricEigen::new(prep.im_fab(&xx)).eigenvalues;
        if ev.iter().filter(|v| **v > 0.0).count() == 1 {
            return p;
        }
    }
}
