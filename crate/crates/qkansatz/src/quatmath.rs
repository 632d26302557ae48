//! Quaternions, the adjoint representation and Cartan-Maurer forms.
//!
//! Hamilton convention `ij = k`. The adjoint matrix is defined by
//! `q⁻¹ u_a q = R_ab(q) u_b`, which makes `R(pq) = R(p) R(q)`.

use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quaternion<T = f64> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

/// Imaginary quaternion, also used as an R³ vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImQuaternion<T = f64> {
    pub x: T,
    pub y: T,
    pub z: T,
}

pub type AdjointMatrix = [[f64; 4]; 4];

impl<T: Scalar> Quaternion<T> {
    pub fn new(w: T, x: T, y: T, z: T) -> Self {
        Quaternion { w, x, y, z }
    }
    pub fn from_array(a: [T; 4]) -> Self {
        Quaternion::new(a[0], a[1], a[2], a[3])
    }
    pub fn to_array(self) -> [T; 4] {
        [self.w, self.x, self.y, self.z]
    }
    pub fn real(w: T) -> Self {
        Quaternion::new(w, T::zero(), T::zero(), T::zero())
    }
    pub fn one() -> Self {
        Self::real(T::one())
    }
    pub fn zero() -> Self {
        Self::real(T::zero())
    }
    /// Basis element `u_a`, `a = 0..3`.
    pub fn basis(a: usize) -> Self {
        let mut c = [T::zero(); 4];
        c[a] = T::one();
        Self::from_array(c)
    }
    pub fn conj(self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }
    pub fn norm2(self) -> T {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }
    pub fn norm(self) -> T {
        self.norm2().sqrt()
    }
    pub fn scale(self, s: T) -> Self {
        Quaternion::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }
    pub fn imag(self) -> ImQuaternion<T> {
        ImQuaternion::new(self.x, self.y, self.z)
    }
    pub fn try_inv(self) -> Result<Self> {
        let n = self.norm2();
        if n.re() == 0.0 {
            return Err(Error::Domain("inverse of the zero quaternion"));
        }
        Ok(self.conj().scale(T::one() / n))
    }
    pub fn inv(self) -> Self {
        self.conj().scale(T::one() / self.norm2())
    }
    pub fn dot(self, o: Self) -> T {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }
}

impl Quaternion<f64> {
    /// Representative of `±q` whose first nonzero component is positive.
    pub fn z2_canonical(self) -> Self {
        for c in self.to_array() {
            if c != 0.0 {
                return if c > 0.0 { self } else { -self };
            }
        }
        self
    }
}

impl<T: Scalar> Add for Quaternion<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Quaternion::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}
impl<T: Scalar> Sub for Quaternion<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Quaternion::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}
impl<T: Scalar> Neg for Quaternion<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}
impl<T: Scalar> Mul for Quaternion<T> {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        qmul(self, b)
    }
}

/// Hamilton product.
pub fn qmul<T: Scalar>(a: Quaternion<T>, b: Quaternion<T>) -> Quaternion<T> {
    Quaternion::new(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )
}

impl<T: Scalar> ImQuaternion<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        ImQuaternion { x, y, z }
    }
    pub fn from_array(a: [T; 3]) -> Self {
        ImQuaternion::new(a[0], a[1], a[2])
    }
    pub fn from_slice(a: &[T]) -> Self {
        ImQuaternion::new(a[0], a[1], a[2])
    }
    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }
    pub fn zero() -> Self {
        ImQuaternion::new(T::zero(), T::zero(), T::zero())
    }
    pub fn quat(self) -> Quaternion<T> {
        Quaternion::new(T::zero(), self.x, self.y, self.z)
    }
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }
    pub fn cross(self, o: Self) -> Self {
        ImQuaternion::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }
    pub fn norm2(self) -> T {
        self.dot(self)
    }
    pub fn norm(self) -> T {
        self.norm2().sqrt()
    }
    pub fn scale(self, s: T) -> Self {
        ImQuaternion::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Scalar> Add for ImQuaternion<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        ImQuaternion::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}
impl<T: Scalar> Sub for ImQuaternion<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        ImQuaternion::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}
impl<T: Scalar> Neg for ImQuaternion<T> {
    type Output = Self;
    fn neg(self) -> Self {
        ImQuaternion::new(-self.x, -self.y, -self.z)
    }
}

/// `R_ab(q)` with `q⁻¹ u_a q = R_ab u_b`.
pub fn adjoint(q: Quaternion) -> Result<AdjointMatrix> {
    let qi = q.try_inv()?;
    let mut r = [[0.0; 4]; 4];
    for (a, row) in r.iter_mut().enumerate() {
        *row = (qi * Quaternion::basis(a) * q).to_array();
    }
    Ok(r)
}

/// The 3×3 rotation block `R_ij(q)`, generic and without error handling.
pub fn rot3<T: Scalar>(q: Quaternion<T>) -> [[T; 3]; 3] {
    let qi = q.inv();
    let mut r = [[T::zero(); 3]; 3];
    for (i, row) in r.iter_mut().enumerate() {
        let v = qi * Quaternion::basis(i + 1) * q;
        *row = [v.x, v.y, v.z];
    }
    r
}

/// `q̄ v q`.
pub fn sandwich<T: Scalar>(q: Quaternion<T>, v: ImQuaternion<T>) -> ImQuaternion<T> {
    (q.conj() * v.quat() * q).imag()
}

/// Left and right invariant forms `σ_L = q⁻¹dq`, `σ_R = q dq⁻¹ = −dq q⁻¹`
/// evaluated on the increment `dq`.
pub fn cartan_maurer(q: Quaternion, dq: Quaternion) -> Result<(Quaternion, Quaternion)> {
    let qi = q.try_inv()?;
    Ok((qi * dq, -(dq * qi)))
}

/// Matrix of `σ^R_a` as 1-forms on the four quaternion coordinates:
/// row `a`, column `b` is `σ^R_a(∂/∂q_b)`.
pub fn sigma_r_matrix<T: Scalar>(q: Quaternion<T>) -> [[T; 4]; 4] {
    let qi = q.inv();
    let mut m = [[T::zero(); 4]; 4];
    for b in 0..4 {
        let s = -(Quaternion::basis(b) * qi);
        let s = s.to_array();
        for a in 0..4 {
            m[a][b] = s[a];
        }
    }
    m
}

/// Levi-Civita symbol on three indices in `0..3`.
pub fn eps(i: usize, j: usize, k: usize) -> f64 {
    if i == j || j == k || i == k {
        return 0.0;
    }
    if (i, j, k) == (0, 1, 2) || (i, j, k) == (1, 2, 0) || (i, j, k) == (2, 0, 1) {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(w: f64, x: f64, y: f64, z: f64) -> Quaternion {
        Quaternion::new(w, x, y, z)
    }

    #[test]
    fn defining_relations() {
        let i = Quaternion::<f64>::basis(1);
        let j = Quaternion::<f64>::basis(2);
        assert_eq!(i * j, Quaternion::basis(3));
        assert_eq!(q(1.0, 1.0, 0.0, 0.0) * q(1.0, -1.0, 0.0, 0.0), q(2.0, 0.0, 0.0, 0.0));
        let a = q(2.0, 3.0, -1.0, 0.0);
        let p = a * a.inv();
        assert!((p - Quaternion::one()).norm() < 1e-15);
    }

    #[test]
    fn adjoint_of_i() {
        let r = adjoint(Quaternion::basis(1)).unwrap();
        let diag = [1.0, 1.0, -1.0, -1.0];
        for a in 0..4 {
            for b in 0..4 {
                let e = if a == b { diag[a] } else { 0.0 };
                assert!((r[a][b] - e).abs() < 1e-15);
            }
        }
        assert!(adjoint(Quaternion::zero()).is_err());
    }

    #[test]
    fn sandwich_scaling() {
        let v = ImQuaternion::new(1.0, 0.0, 0.0);
        assert_eq!(sandwich(Quaternion::one(), v), v);
        assert!((sandwich(Quaternion::real(2.0), v).norm() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn cartan_maurer_at_identity() {
        let (l, r) = cartan_maurer(Quaternion::one(), Quaternion::basis(1)).unwrap();
        assert_eq!(l, Quaternion::basis(1));
        assert_eq!(r, -Quaternion::basis(1));
        let a = q(0.3, -1.0, 2.0, 0.5);
        let (l, _) = cartan_maurer(a, a).unwrap();
        assert!((l.w - 1.0).abs() < 1e-15);
    }

    #[test]
    fn canonical_representative() {
        assert_eq!(q(0.0, -1.0, 2.0, 0.0).z2_canonical(), q(0.0, 1.0, -2.0, 0.0));
    }
}
