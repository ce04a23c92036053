//! Symmetric tensors in two and three dimensions and the isotropic Hooke law.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `N`-vector, `N` in {2, 3}.
pub type Vector<const N: usize> = [f64; N];

/// Shorthand for planar vectors.
pub type Vec2 = Vector<2>;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Euclidean dot product.
#[inline]
pub fn dot<const N: usize>(a: &Vector<N>, b: &Vector<N>) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm<const N: usize>(a: &Vector<N>) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn vscale<const N: usize>(s: f64, a: &Vector<N>) -> Vector<N> {
    let mut out = *a;
    out.iter_mut().for_each(|x| *x *= s);
    out
}

#[inline]
pub fn vadd<const N: usize>(a: &Vector<N>, b: &Vector<N>) -> Vector<N> {
    let mut out = *a;
    out.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    out
}

#[inline]
pub fn vsub<const N: usize>(a: &Vector<N>, b: &Vector<N>) -> Vector<N> {
    let mut out = *a;
    out.iter_mut().zip(b).for_each(|(x, y)| *x -= y);
    out
}

/// Splits `z` into its component along the unit vector `nu` and the tangential remainder.
#[inline]
pub fn normal_tangential<const N: usize>(z: &Vector<N>, nu: &Vector<N>) -> (f64, Vector<N>) {
    let zn = dot(z, nu);
    (zn, vsub(z, &vscale(zn, nu)))
}

/// Maps an upper-triangle index pair `(i, j)` to a storage slot.
///
/// Storage is the fixed layout `[xx, yy, zz, xy, xz, yz]`; the `zz`, `xz` and `yz` slots
/// stay zero when `N == 2`.
#[inline]
const fn slot(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) | (1, 0) => 3,
        (0, 2) | (2, 0) => 4,
        _ => 5,
    }
}

/// Dense symmetric `N x N` matrix stored by its upper triangle.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct SymMat<const N: usize> {
    c: [f64; 6],
}

pub type Sym2 = SymMat<2>;
pub type Sym3 = SymMat<3>;

impl<const N: usize> SymMat<N> {
    const VALID_DIM: () = assert!(N == 2 || N == 3, "SymMat supports N = 2 or N = 3");

    /// Number of independent components, `N(N+1)/2`.
    pub const COMPONENTS: usize = N * (N + 1) / 2;

    pub fn zero() -> Self {
        #[allow(clippy::let_unit_value)]
        let () = Self::VALID_DIM;
        Self { c: [0.0; 6] }
    }

    pub fn identity() -> Self {
        Self::scaled_identity(1.0)
    }

    pub fn scaled_identity(s: f64) -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            m.c[i] = s;
        }
        m
    }

    /// Builds from a full matrix, symmetrizing it.
    pub fn from_full(a: &[[f64; N]; N]) -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            for j in i..N {
                m.c[slot(i, j)] = 0.5 * (a[i][j] + a[j][i]);
            }
        }
        m
    }

    pub fn diag(d: Vector<N>) -> Self {
        let mut m = Self::zero();
        m.c[..N].copy_from_slice(&d);
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c[slot(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.c[slot(i, j)] = v;
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.c[0] + self.c[1] + self.c[2]
    }

    /// Frobenius inner product `A : B`.
    #[inline]
    pub fn ddot(&self, other: &Self) -> f64 {
        let a = &self.c;
        let b = &other.c;
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + 2.0 * (a[3] * b[3] + a[4] * b[4] + a[5] * b[5])
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Self {
        let mut c = self.c;
        c.iter_mut().for_each(|x| *x *= s);
        Self { c }
    }

    /// Deviatoric part and mean stress: `A = A_D + mean * Id`.
    pub fn dev_split(&self) -> (Self, f64) {
        let mean = self.trace() / N as f64;
        let mut d = *self;
        for i in 0..N {
            d.c[i] -= mean;
        }
        (d, mean)
    }

    #[inline]
    pub fn deviator(&self) -> Self {
        self.dev_split().0
    }

    pub fn mul_vec(&self, v: &Vector<N>) -> Vector<N> {
        let mut out = [0.0; N];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..N).map(|j| self.get(i, j) * v[j]).sum();
        }
        out
    }

    /// Components in an orthonormal basis of `M^N_sym` (Mandel ordering: diagonal first,
    /// then `sqrt(2)` times the off-diagonal entries).
    pub fn to_mandel(&self) -> [f64; 6] {
        let mut out = [0.0; 6];
        self.write_mandel(&mut out[..Self::COMPONENTS]);
        out
    }

    pub fn write_mandel(&self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), Self::COMPONENTS);
        out[..N].copy_from_slice(&self.c[..N]);
        if N == 2 {
            out[2] = SQRT_2 * self.c[3];
        } else {
            out[3] = SQRT_2 * self.c[3];
            out[4] = SQRT_2 * self.c[4];
            out[5] = SQRT_2 * self.c[5];
        }
    }

    pub fn from_mandel(v: &[f64]) -> Self {
        debug_assert!(v.len() >= Self::COMPONENTS);
        let mut m = Self::zero();
        m.c[..N].copy_from_slice(&v[..N]);
        if N == 2 {
            m.c[3] = v[2] / SQRT_2;
        } else {
            m.c[3] = v[3] / SQRT_2;
            m.c[4] = v[4] / SQRT_2;
            m.c[5] = v[5] / SQRT_2;
        }
        m
    }

    /// Raw upper-triangle components in `[xx, yy, (zz,) xy, (xz, yz)]` order.
    pub fn components(&self) -> Vec<f64> {
        if N == 2 {
            vec![self.c[0], self.c[1], self.c[3]]
        } else {
            self.c.to_vec()
        }
    }

    pub fn from_components(v: &[f64]) -> Self {
        let mut m = Self::zero();
        if N == 2 {
            m.c[0] = v[0];
            m.c[1] = v[1];
            m.c[3] = v[2];
        } else {
            m.c.copy_from_slice(&v[..6]);
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_finite())
    }
}

impl Sym2 {
    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        Self { c: [xx, yy, 0.0, xy, 0.0, 0.0] }
    }
}

impl Sym3 {
    pub fn new(xx: f64, yy: f64, zz: f64, xy: f64, xz: f64, yz: f64) -> Self {
        Self { c: [xx, yy, zz, xy, xz, yz] }
    }
}

impl<const N: usize> Add for SymMat<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<const N: usize> AddAssign for SymMat<N> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.c.iter_mut().zip(rhs.c).for_each(|(a, b)| *a += b);
    }
}

impl<const N: usize> Sub for SymMat<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self -= rhs;
        self
    }
}

impl<const N: usize> SubAssign for SymMat<N> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        self.c.iter_mut().zip(rhs.c).for_each(|(a, b)| *a -= b);
    }
}

impl<const N: usize> Neg for SymMat<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul<SymMat<N>> for f64 {
    type Output = SymMat<N>;
    #[inline]
    fn mul(self, rhs: SymMat<N>) -> SymMat<N> {
        rhs.scale(self)
    }
}

/// Symmetric tensor product `a ⊙ b = (a bᵀ + b aᵀ) / 2`.
pub fn sym_outer<const N: usize>(a: &Vector<N>, b: &Vector<N>) -> SymMat<N> {
    let mut m = SymMat::zero();
    for i in 0..N {
        for j in i..N {
            m.set(i, j, 0.5 * (a[i] * b[j] + b[i] * a[j]));
        }
    }
    m
}

/// Slice-based variant of [`sym_outer`] that reports a dimension mismatch instead of
/// relying on the type system.
pub fn sym_outer_checked<const N: usize>(a: &[f64], b: &[f64]) -> Result<SymMat<N>> {
    if a.len() != N || b.len() != N {
        return Err(Error::DimensionMismatch { expected: N, found: a.len().max(b.len()) });
    }
    let mut av = [0.0; N];
    let mut bv = [0.0; N];
    av.copy_from_slice(a);
    bv.copy_from_slice(b);
    Ok(sym_outer(&av, &bv))
}

/// Isotropic elasticity tensor `A e = λ (tr e) Id + 2µ e`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hooke {
    lambda: f64,
    mu: f64,
}

impl Hooke {
    /// Validates ellipticity (`µ > 0` and `nλ + 2µ > 0`) in both supported dimensions.
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        Self::new_in_dim(lambda, mu, 2)?;
        Self::new_in_dim(lambda, mu, 3)
    }

    /// Like [`Hooke::new`] but only checks ellipticity in dimension `n`.
    pub fn new_in_dim(lambda: f64, mu: f64, n: usize) -> Result<Self> {
        if !(lambda.is_finite() && mu.is_finite()) || mu <= 0.0 || n as f64 * lambda + 2.0 * mu <= 0.0
        {
            return Err(Error::NotElliptic { lambda, mu });
        }
        Ok(Self { lambda, mu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Bulk-like modulus acting on the spherical part, `nλ + 2µ`.
    pub fn spherical_modulus(&self, n: usize) -> f64 {
        n as f64 * self.lambda + 2.0 * self.mu
    }

    /// Ellipticity bounds `(α, β)` with `α|ξ|² ≤ Aξ:ξ ≤ β|ξ|²`.
    pub fn bounds(&self, n: usize) -> (f64, f64) {
        let s = self.spherical_modulus(n);
        let d = 2.0 * self.mu;
        (s.min(d), s.max(d))
    }

    /// P-wave speed at unit density.
    pub fn p_wave_speed(&self) -> f64 {
        (self.lambda + 2.0 * self.mu).sqrt()
    }

    #[inline]
    pub fn apply<const N: usize>(&self, e: &SymMat<N>) -> SymMat<N> {
        e.scale(2.0 * self.mu) + SymMat::scaled_identity(self.lambda * e.trace())
    }

    #[inline]
    pub fn inverse<const N: usize>(&self, sigma: &SymMat<N>) -> SymMat<N> {
        let two_mu = 2.0 * self.mu;
        let coef = self.lambda * sigma.trace() / (two_mu * self.spherical_modulus(N));
        sigma.scale(1.0 / two_mu) - SymMat::scaled_identity(coef)
    }

    /// Stored energy density `Q(e) = ½ Ae:e = (λ/2)(tr e)² + µ|e|²`.
    #[inline]
    pub fn energy<const N: usize>(&self, e: &SymMat<N>) -> f64 {
        let tr = e.trace();
        0.5 * self.lambda * tr * tr + self.mu * e.ddot(e)
    }

    /// Complementary energy norm squared, `A⁻¹σ:σ`.
    #[inline]
    pub fn compliance_norm_sq<const N: usize>(&self, sigma: &SymMat<N>) -> f64 {
        self.inverse(sigma).ddot(sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym<const N: usize>(rng: &mut impl Rng) -> SymMat<N> {
        let mut full = [[0.0; N]; N];
        for row in full.iter_mut() {
            for x in row.iter_mut() {
                *x = rng.gen_range(-2.0..2.0);
            }
        }
        SymMat::from_full(&full)
    }

    #[test]
    fn sym_outer_basis_vectors() {
        let e1 = [1.0, 0.0];
        let e2 = [0.0, 1.0];
        assert_eq!(sym_outer(&e1, &e1), Sym2::new(1.0, 0.0, 0.0));
        assert_eq!(sym_outer(&e1, &e2), Sym2::new(0.0, 0.0, 0.5));
        assert_eq!(sym_outer(&e1, &e2).get(1, 0), 0.5);
    }

    #[test]
    fn sym_outer_trace_is_dot() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let a: Vector<3> = [rng.gen(), rng.gen(), rng.gen()];
            let b: Vector<3> = [rng.gen(), rng.gen(), rng.gen()];
            assert!((sym_outer(&a, &b).trace() - dot(&a, &b)).abs() < 1e-15);
        }
    }

    #[test]
    fn sym_outer_checked_rejects_mismatch() {
        assert!(matches!(
            sym_outer_checked::<2>(&[1.0, 0.0, 0.0], &[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(sym_outer_checked::<3>(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).is_ok());
    }

    #[test]
    fn dev_split_examples() {
        let (d, m) = Sym2::identity().dev_split();
        assert_eq!((d, m), (Sym2::zero(), 1.0));
        let (d, m) = Sym2::diag([1.0, -1.0]).dev_split();
        assert_eq!((d, m), (Sym2::diag([1.0, -1.0]), 0.0));
        let (d, m) = Sym2::diag([3.0, 1.0]).dev_split();
        assert_eq!((d, m), (Sym2::diag([1.0, -1.0]), 2.0));
    }

    #[test]
    fn dev_split_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let a: Sym3 = random_sym(&mut rng);
            let (d, m) = a.dev_split();
            assert!(d.trace().abs() < 1e-14);
            assert!(d.ddot(&Sym3::identity()).abs() < 1e-14);
            assert!((d + Sym3::scaled_identity(m) - a).norm() < 1e-14);
        }
    }

    #[test]
    fn hooke_examples() {
        let a = Hooke::new(1.0, 1.0).unwrap();
        assert_eq!(a.apply(&Sym2::identity()), Sym2::scaled_identity(4.0));
        assert_eq!(a.apply(&Sym2::zero()), Sym2::zero());
        let b = Hooke::new(7.3, 0.5).unwrap();
        assert_eq!(b.apply(&Sym2::diag([1.0, -1.0])), Sym2::diag([1.0, -1.0]));
        assert_eq!(a.energy(&Sym2::identity()), 4.0);
        assert_eq!(a.energy(&Sym2::zero()), 0.0);
    }

    #[test]
    fn hooke_inverse_spherical_example() {
        // λ = µ = 1, n = 2: spherical modulus nλ + 2µ = 4, so 4·Id ↦ Id.
        let a = Hooke::new(1.0, 1.0).unwrap();
        let e = a.inverse(&Sym2::scaled_identity(4.0));
        assert!((e - Sym2::identity()).norm() < 1e-15);
        assert_eq!(a.inverse(&Sym2::zero()), Sym2::zero());
    }

    #[test]
    fn hooke_inverse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Hooke::new(2.5, 0.7).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let s: Sym2 = random_sym(&mut rng);
            let back = a.apply(&a.inverse(&s));
            worst = worst.max((back - s).norm() / s.norm());
            let s3: Sym3 = random_sym(&mut rng);
            let back3 = a.apply(&a.inverse(&s3));
            worst = worst.max((back3 - s3).norm() / s3.norm());
        }
        assert!(worst <= 1e-12, "worst relative error {worst}");
    }

    #[test]
    fn energy_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = Hooke::new(-0.4, 1.3).unwrap();
        for _ in 0..500 {
            let e: Sym3 = random_sym(&mut rng);
            let q = a.energy(&e);
            assert!((q - 0.5 * a.apply(&e).ddot(&e)).abs() <= 1e-13 * (1.0 + q));
        }
    }

    #[test]
    fn ellipticity_bounds_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (lambda, mu) in [(1.0, 1.0), (-0.5, 1.0), (10.0, 0.1)] {
            let a = Hooke::new(lambda, mu).unwrap();
            let (alpha, beta) = a.bounds(2);
            for _ in 0..10_000 {
                let xi: Sym2 = random_sym(&mut rng);
                let q = a.apply(&xi).ddot(&xi);
                let n2 = xi.ddot(&xi);
                assert!(alpha * n2 <= q + 1e-12 && q <= beta * n2 + 1e-12);
            }
        }
    }

    #[test]
    fn spherical_deviatoric_decoupling() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = Hooke::new(1.7, 0.9).unwrap();
        for _ in 0..500 {
            let xi: Sym3 = random_sym(&mut rng);
            let s = a.apply(&xi);
            assert!((s.deviator() - xi.deviator().scale(2.0 * a.mu())).norm() < 1e-13);
            assert!((s.trace() - a.spherical_modulus(3) * xi.trace()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_elliptic() {
        assert!(Hooke::new(1.0, 0.0).is_err());
        assert!(Hooke::new(-2.0, 1.0).is_err());
        assert!(Hooke::new_in_dim(-0.9, 1.0, 2).is_ok());
        assert!(Hooke::new_in_dim(-0.9, 1.0, 3).is_err());
    }

    #[test]
    fn mandel_is_isometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let a: Sym2 = random_sym(&mut rng);
            let b: Sym2 = random_sym(&mut rng);
            let ma = a.to_mandel();
            let mb = b.to_mandel();
            let d: f64 = ma.iter().zip(&mb).map(|(x, y)| x * y).sum();
            assert!((d - a.ddot(&b)).abs() < 1e-14);
            assert!((Sym2::from_mandel(&ma) - a).norm() < 1e-15);
        }
    }
}
