//! Sample domains. Every sampler draws from a ChaCha stream seeded by the
//! run configuration and rejects points near the singular loci.

use nalgebra::SymmetricEigen;
use num_complex::Complex;
use qkansatz::cmap::{self, Prepotential};
use qkansatz::imhp::full_slots;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn norm3(v: &[f64]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// `4m` chart, box `[−1.5, 1.5]`, every `|x⃗^I| ≥ 0.3` and off the
/// negative `x₃` axis of each point.
pub fn gh_point(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..4 * m).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let ok = (0..m).all(|i| {
            let x = &p[3 * i..3 * i + 3];
            let r = norm3(x);
            r > 0.3 && x[2] + r > 0.3
        });
        if ok {
            return p;
        }
    }
}

/// `m = 2` point with `|x⁰|`, `|x¹|`, `|x⁰ + x¹|` all at least 0.5.
pub fn cone_point(rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let s: Vec<f64> = (0..3).map(|c| p[c] + p[3 + c]).collect();
        if norm3(&p[0..3]) > 0.5 && norm3(&p[3..6]) > 0.5 && norm3(&s) > 0.5 {
            return p;
        }
    }
}

/// `4n` chart of the reduced data, `ρ¹₂ ∈ [0.4, 1.5]`.
pub fn qk_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let mut p: Vec<f64> = (0..4 * n).map(|_| rng.gen_range(-1.5..1.5)).collect();
        p[1] = rng.gen_range(0.4..1.5);
        if n == 1 {
            return p;
        }
        let x2 = [p[2], p[3], p[4]];
        let s = [1.0 + p[0] + x2[0], p[1] + x2[1], x2[2]];
        if norm3(&x2) > 0.5 && norm3(&s) > 0.5 {
            return p;
        }
    }
}

/// Appends a quaternion fiber coordinate in `[−1, 1]⁴`.
pub fn with_fiber(rng: &mut ChaCha8Rng, p: &[f64]) -> Vec<f64> {
    let mut pt = p.to_vec();
    pt.extend((0..4).map(|_| rng.gen_range(-1.0..1.0)));
    pt
}

/// `(ρ₁, ρ₂, ψ₀, ψ₁)` with `ρ₂ ∈ [0.2, 3]`.
pub fn cp_point(rng: &mut ChaCha8Rng) -> Vec<f64> {
    vec![rng.gen_range(-2.0..2.0), rng.gen_range(0.2..3.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
}

/// `4m` chart for the c-map: `|x⃗^I| ≥ 0.4`, `|z⁰| ≥ 0.2`, finite identities
/// and `|F_A(χ)| < 50`.
pub fn cmap_upstairs(rng: &mut ChaCha8Rng, prep: &Prepotential) -> Vec<f64> {
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

fn special_coords(prep: &Prepotential, p: &[f64]) -> Vec<Complex<f64>> {
    let n = prep.n;
    let full = full_slots(n, &p[..3 * n - 1]);
    (1..=n).map(|a| Complex::new(0.5 * full[3 * a + 1], 0.5 * full[3 * a + 2])).collect()
}

/// `4n` chart for the c-map: `𝒳¹` with real part in `[1, 2]`,
/// `|𝒳̄N𝒳| ≥ 0.05`, `|𝒳^A| ≥ 0.1`, `|det N| ≥ 10⁻³`, `|F_A| < 30`.
pub fn cmap_downstairs(rng: &mut ChaCha8Rng, prep: &Prepotential) -> Vec<f64> {
    let n = prep.n;
    loop {
        let mut p: Vec<f64> = (0..4 * n).map(|_| rng.gen_range(-0.8..0.8)).collect();
        p[1] = rng.gen_range(1.0..2.0);
        if cmap::xnx(prep, &p).abs() < 0.05 {
            continue;
        }
        let xx = special_coords(prep, &p);
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

/// As [`cmap_downstairs`] on the domain `𝒳̄N𝒳 > 0` with `N` of signature
/// `(1, n−1)`, where `R < 0`.
pub fn cmap_downstairs_lorentzian(rng: &mut ChaCha8Rng, prep: &Prepotential) -> Option<Vec<f64>> {
    // some prepotentials have no such domain
    for _ in 0..10_000 {
        let p = cmap_downstairs(rng, prep);
        if cmap::xnx(prep, &p) <= 0.0 {
            continue;
        }
        let ev = SymmetricEigen::new(prep.im_fab(&special_coords(prep, &p))).eigenvalues;
        if ev.iter().filter(|v| **v > 0.0).count() == 1 {
            return Some(p);
        }
    }
    None
}
