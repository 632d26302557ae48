//! Real scalars and forward-mode dual numbers.
//!
//! Every analytic evaluator in the crate is written once, generically over
//! [`Scalar`], and then run on `f64`, [`D1`] (first derivatives) or [`D2`]
//! (second derivatives).

use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Neg, Rem, Sub};

use alloc::vec::Vec;
use num_complex::Complex;
use num_traits::{Float, Num, One, Zero};

pub type C64 = Complex<f64>;

/// A holomorphic vector-valued map evaluated at plain complex points.
pub type HoloFn = dyn Fn(&[C64]) -> Vec<C64> + Send + Sync;

pub trait Scalar:
    Copy + Debug + Num + Neg<Output = Self> + Send + Sync + 'static
{
    fn cst(v: f64) -> Self;
    /// Underlying real value with all infinitesimal parts dropped.
    fn re(&self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn atan(self) -> Self;

    fn powi(self, n: i32) -> Self {
        if n < 0 {
            return Self::one() / self.powi(-n);
        }
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }
    fn abs(self) -> Self {
        if self.re() < 0.0 {
            -self
        } else {
            self
        }
    }
    fn recip(self) -> Self {
        Self::one() / self
    }

    /// Evaluates a plain holomorphic map on jets of complex points. The
    /// tangent parts are pushed through by a complex central difference,
    /// so this is a lower-precision fallback for black-box maps.
    fn holo_lift(f: &HoloFn, z: &[Complex<Self>]) -> Vec<Complex<Self>>;
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn re(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        Float::sqrt(self)
    }
    fn exp(self) -> Self {
        Float::exp(self)
    }
    fn ln(self) -> Self {
        Float::ln(self)
    }
    fn sin(self) -> Self {
        Float::sin(self)
    }
    fn cos(self) -> Self {
        Float::cos(self)
    }
    fn atan(self) -> Self {
        Float::atan(self)
    }
    fn powi(self, n: i32) -> Self {
        Float::powi(self, n)
    }
    fn abs(self) -> Self {
        Float::abs(self)
    }
    fn holo_lift(f: &HoloFn, z: &[Complex<Self>]) -> Vec<Complex<Self>> {
        f(z)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dual<T> {
    pub v: T,
    pub d: T,
}

pub type D1 = Dual<f64>;
pub type D2 = Dual<D1>;

impl<T: Scalar> Dual<T> {
    pub fn new(v: T, d: T) -> Self {
        Dual { v, d }
    }
    pub fn constant(v: T) -> Self {
        Dual { v, d: T::zero() }
    }
    pub fn var(v: T) -> Self {
        Dual { v, d: T::one() }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}
impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}
impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.v * o.v, self.v * o.d + self.d * o.v)
    }
}
impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = T::one() / o.v;
        let q = self.v * inv;
        Dual::new(q, (self.d - q * o.d) * inv)
    }
}
impl<T: Scalar> Rem for Dual<T> {
    type Output = Self;
    fn rem(self, o: Self) -> Self {
        Dual::new(self.v % o.v, self.d)
    }
}
impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.v, -self.d)
    }
}
impl<T: Scalar> Zero for Dual<T> {
    fn zero() -> Self {
        Dual::constant(T::zero())
    }
    fn is_zero(&self) -> bool {
        self.v.is_zero() && self.d.is_zero()
    }
}
impl<T: Scalar> One for Dual<T> {
    fn one() -> Self {
        Dual::constant(T::one())
    }
}
impl<T: Scalar> Num for Dual<T> {
    type FromStrRadixErr = T::FromStrRadixErr;
    fn from_str_radix(s: &str, r: u32) -> Result<Self, Self::FromStrRadixErr> {
        T::from_str_radix(s, r).map(Dual::constant)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn cst(v: f64) -> Self {
        Dual::constant(T::cst(v))
    }
    fn re(&self) -> f64 {
        self.v.re()
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        Dual::new(s, self.d / (s + s))
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        Dual::new(e, self.d * e)
    }
    fn ln(self) -> Self {
        Dual::new(self.v.ln(), self.d / self.v)
    }
    fn sin(self) -> Self {
        Dual::new(self.v.sin(), self.d * self.v.cos())
    }
    fn cos(self) -> Self {
        Dual::new(self.v.cos(), -(self.d * self.v.sin()))
    }
    fn atan(self) -> Self {
        Dual::new(self.v.atan(), self.d / (T::one() + self.v * self.v))
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        let p = self.v.powi(n - 1);
        Dual::new(p * self.v, self.d * T::cst(n as f64) * p)
    }
    fn holo_lift(f: &HoloFn, z: &[Complex<Self>]) -> Vec<Complex<Self>> {
        let v: Vec<Complex<T>> = z.iter().map(|c| Complex::new(c.re.v, c.im.v)).collect();
        let t: Vec<Complex<T>> = z.iter().map(|c| Complex::new(c.re.d, c.im.d)).collect();
        let base = T::holo_lift(f, &v);
        let scale = v.iter().fold(1.0f64, |m, c| m.max(c.re.re().abs()).max(c.im.re().abs()));
        let h = T::cst(1e-4 * scale);
        let shift = |s: T| -> Vec<Complex<T>> {
            let p: Vec<Complex<T>> = v
                .iter()
                .zip(&t)
                .map(|(a, b)| Complex::new(a.re + s * b.re, a.im + s * b.im))
                .collect();
            T::holo_lift(f, &p)
        };
        let fp = shift(h);
        let fm = shift(-h);
        let two_h = h + h;
        base.iter()
            .zip(fp.iter().zip(&fm))
            .map(|(b, (p, m))| {
                let dr = (p.re - m.re) / two_h;
                let di = (p.im - m.im) / two_h;
                Complex::new(Dual::new(b.re, dr), Dual::new(b.im, di))
            })
            .collect()
    }
}

impl<T: Scalar> PartialOrd for Dual<T> {
    fn partial_cmp(&self, o: &Self) -> Option<core::cmp::Ordering> {
        self.re().partial_cmp(&o.re())
    }
}

/// Lifts a real scalar into any scalar type.
pub fn lift<T: Scalar>(v: f64) -> T {
    T::cst(v)
}

/// Gradient of a scalar function by forward mode, one direction per pass.
pub fn grad<F: Fn(&[D1]) -> D1>(f: F, x: &[f64]) -> Vec<f64> {
    let mut g = Vec::with_capacity(x.len());
    let mut p: Vec<D1> = x.iter().map(|&v| D1::constant(v)).collect();
    for i in 0..x.len() {
        p[i].d = 1.0;
        g.push(f(&p).d);
        p[i].d = 0.0;
    }
    g
}

/// Seeds a point for the mixed second derivative in directions `a`, `b`.
pub fn seed2(x: &[f64], a: usize, b: usize) -> Vec<D2> {
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let inner = D1::new(v, if i == a { 1.0 } else { 0.0 });
            let outer = D1::new(if i == b { 1.0 } else { 0.0 }, 0.0);
            Dual::new(inner, outer)
        })
        .collect()
}

/// Dense Hessian of a scalar function via nested duals.
pub fn hessian<F: Fn(&[D2]) -> D2>(f: F, x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut h = alloc::vec![alloc::vec![0.0; n]; n];
    for a in 0..n {
        for b in a..n {
            let r = f(&seed2(x, a, b));
            h[a][b] = r.d.d;
            h[b][a] = r.d.d;
        }
    }
    h
}
