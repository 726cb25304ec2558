//! Fixed-size complex kernels: 2- and 3-component vectors, 2×2 and 3×3
//! matrices, the half-plane square root and a closed-form 2×2 eigensolver.
//!
//! Everything here is `Copy` and allocation-free so the λ scan loop can call
//! it millions of times.

use std::f64::consts::TAU;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

pub use num_complex::Complex64 as Complex;

pub const ZERO: Complex = Complex::new(0.0, 0.0);
pub const ONE: Complex = Complex::new(1.0, 0.0);
pub const I: Complex = Complex::new(0.0, 1.0);

/// `e^{iθ}`.
#[inline]
pub fn cis(theta: f64) -> Complex {
    Complex::new(theta.cos(), theta.sin())
}

/// Argument mapped into `[0, 2π)`.
#[inline]
pub fn arg_2pi(z: Complex) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        // atan2 can return -0.0 or values so close to zero that adding TAU
        // rounds to exactly TAU.
        let b = a + TAU;
        if b >= TAU {
            0.0
        } else {
            b
        }
    } else {
        a
    }
}

/// Reduce an angle into `[0, 2π)`.
#[inline]
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed angular distance `a - b` folded into `(-π, π]`.
#[inline]
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

/// Square root on the branch `√|a|·e^{iθ/2}` with `θ = arg a ∈ [0, 2π)`.
///
/// The image is the closed upper half plane minus the negative real axis,
/// i.e. `arg √a ∈ [0, π)`.
#[inline]
pub fn branch_sqrt(a: Complex) -> Complex {
    let r = a.norm();
    if r == 0.0 {
        return ZERO;
    }
    let theta = arg_2pi(a);
    cis(theta / 2.0) * r.sqrt()
}

#[inline]
pub fn is_finite(z: Complex) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec2(pub [Complex; 2]);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec3(pub [Complex; 3]);

/// Row-major 2×2 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[Complex; 2]; 2]);

/// Row-major 3×3 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3(pub [[Complex; 3]; 3]);

impl Vec2 {
    pub const ZERO: Vec2 = Vec2([ZERO, ZERO]);

    pub fn new(a: Complex, b: Complex) -> Self {
        Vec2([a, b])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0[0].norm_sqr() + self.0[1].norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: Complex) -> Self {
        Vec2([self.0[0] * s, self.0[1] * s])
    }

    /// `x₁y₂ − x₂y₁`. Vanishes iff the two vectors are parallel.
    pub fn cross(&self, other: &Vec2) -> Complex {
        self.0[0] * other.0[1] - self.0[1] * other.0[0]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| is_finite(*z))
    }

    /// Unit vector with the first non-negligible entry real and positive.
    /// Returns the zero vector unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return *self;
        }
        let v = self.scale(Complex::from(1.0 / n));
        let pivot = v
            .0
            .iter()
            .find(|z| z.norm() > 1e-14)
            .copied()
            .unwrap_or(ONE);
        v.scale(pivot.conj() / pivot.norm())
    }
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([ZERO, ZERO, ZERO]);

    pub fn new(a: Complex, b: Complex, c: Complex) -> Self {
        Vec3([a, b, c])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: Complex) -> Self {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Index<usize> for Vec2 {
    type Output = Complex;
    fn index(&self, i: usize) -> &Complex {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vec2 {
    fn index_mut(&mut self, i: usize) -> &mut Complex {
        &mut self.0[i]
    }
}

impl Index<usize> for Vec3 {
    type Output = Complex;
    fn index(&self, i: usize) -> &Complex {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vec3 {
    fn index_mut(&mut self, i: usize) -> &mut Complex {
        &mut self.0[i]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2([self.0[0] - o.0[0], self.0[1] - o.0[1]])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);

    pub fn new(a: Complex, b: Complex, c: Complex, d: Complex) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn det(&self) -> Complex {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> Complex {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, s: Complex) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| is_finite(*z))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        let a = &self.0;
        Vec2([
            a[0][0] * v.0[0] + a[0][1] * v.0[1],
            a[1][0] * v.0[0] + a[1][1] * v.0[1],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        let mut out = self;
        for (r, row) in out.0.iter_mut().enumerate() {
            for (c, z) in row.iter_mut().enumerate() {
                *z -= o.0[r][c];
            }
        }
        out
    }
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[ONE, ZERO, ZERO], [ZERO, ONE, ZERO], [ZERO, ZERO, ONE]]);

    pub fn det(&self) -> Complex {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Mat3 {
        let mut out = [[ZERO; 3]; 3];
        for (r, row) in self.0.iter().enumerate() {
            for (c, z) in row.iter().enumerate() {
                out[c][r] = z.conj();
            }
        }
        Mat3(out)
    }

    pub fn scale(&self, s: Complex) -> Mat3 {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    /// Largest entry modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Mat3) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| is_finite(*z))
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut out = [[ZERO; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, z) in row.iter_mut().enumerate() {
                *z = (0..3).map(|k| self.0[r][k] * o.0[k][c]).sum();
            }
        }
        Mat3(out)
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3([
            m[0][0] * v.0[0] + m[0][1] * v.0[1] + m[0][2] * v.0[2],
            m[1][0] * v.0[0] + m[1][1] * v.0[1] + m[1][2] * v.0[2],
            m[2][0] * v.0[0] + m[2][1] * v.0[1] + m[2][2] * v.0[2],
        ])
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2([-self.0[0], -self.0[1]])
    }
}

/// True iff `max |(C†C − I)_{ij}| ≤ tol`.
pub fn mat3_is_unitary(c: &Mat3, tol: f64) -> bool {
    unitarity_defect(c) <= tol
}

/// `max |(C†C − I)_{ij}|`.
pub fn unitarity_defect(c: &Mat3) -> f64 {
    (c.adjoint() * *c).max_abs_diff(&Mat3::IDENTITY)
}

/// Eigen-decomposition of a 2×2 matrix.
#[derive(Clone, Copy, Debug)]
pub struct Eig2 {
    /// `(tr + √(tr² − 4 det)) / 2` on the half-plane branch.
    pub plus: Complex,
    /// `(tr − √(tr² − 4 det)) / 2`.
    pub minus: Complex,
    pub v_plus: Vec2,
    pub v_minus: Vec2,
    /// Set when the discriminant is numerically zero; the eigenvectors are
    /// then not trustworthy (a defective matrix has only one).
    pub degenerate: bool,
}

/// Relative discriminant threshold below which the matrix counts as defective.
pub const DEFECTIVE_TOL: f64 = 1e-12;

pub fn eig2(m: &Mat2) -> Eig2 {
    let tr = m.trace();
    let det = m.det();
    let disc = tr * tr - det * 4.0;
    let s = branch_sqrt(disc);
    let plus = (tr + s) * 0.5;
    let minus = (tr - s) * 0.5;
    let degenerate = disc.norm() <= DEFECTIVE_TOL * tr.norm_sqr().max(1.0);

    let (v_plus, v_minus) = if degenerate {
        // Pick any null direction for the shared eigenvalue and pair it with
        // its orthogonal complement so callers still get an orthonormal basis.
        let v = eigenvector_for(m, plus).unwrap_or(Vec2::new(ONE, ZERO));
        let w = Vec2::new(-v.0[1].conj(), v.0[0].conj()).normalized();
        (v, w)
    } else {
        (
            eigenvector_for(m, plus).unwrap_or(Vec2::new(ONE, ZERO)),
            eigenvector_for(m, minus).unwrap_or(Vec2::new(ZERO, ONE)),
        )
    };
    Eig2 {
        plus,
        minus,
        v_plus,
        v_minus,
        degenerate,
    }
}

/// Null vector of `m − z I`, picked from whichever row of `m − z I` has the
/// larger norm. `None` when `m − z I` vanishes (scalar matrix).
fn eigenvector_for(m: &Mat2, z: Complex) -> Option<Vec2> {
    let a = m.0[0][0] - z;
    let b = m.0[0][1];
    let c = m.0[1][0];
    let d = m.0[1][1] - z;
    let from_row0 = Vec2::new(-b, a);
    let from_row1 = Vec2::new(-d, c);
    let v = if from_row0.norm_sqr() >= from_row1.norm_sqr() {
        from_row0
    } else {
        from_row1
    };
    let scale = m.max_abs().max(z.norm()).max(f64::MIN_POSITIVE);
    if v.norm() <= 1e-14 * scale {
        None
    } else {
        Some(v.normalized())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn branch_sqrt_examples() {
        assert_eq!(branch_sqrt(ONE), ONE);
        assert_eq!(branch_sqrt(ZERO), ZERO);
        let r = branch_sqrt(c(-1.0, 0.0));
        assert_abs_diff_eq!(r.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.im, 1.0, epsilon = 1e-15);
        // -0.0 imaginary part must land on the same branch.
        let r = branch_sqrt(c(-1.0, -0.0));
        assert_abs_diff_eq!(r.im, 1.0, epsilon = 1e-15);
        // -i: θ = 3π/2, so √ = e^{i3π/4} = (-1 + i)/√2.
        let r = branch_sqrt(c(0.0, -1.0));
        assert_abs_diff_eq!(r.re, -FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(r.im, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!((r * r - c(0.0, -1.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn branch_sqrt_random_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let modulus = 10f64.powf(rng.gen_range(-6.0..6.0));
            let a = cis(rng.gen_range(-PI..PI)) * modulus;
            let s = branch_sqrt(a);
            assert!((s * s - a).norm() <= 1e-12 * a.norm());
            let arg = s.arg();
            assert!((0.0..PI).contains(&arg), "arg {arg} for {a}");
        }
    }

    #[test]
    fn eig2_identity() {
        let e = eig2(&Mat2::IDENTITY);
        assert_eq!(e.plus, ONE);
        assert_eq!(e.minus, ONE);
        assert!(e.degenerate);
        assert_abs_diff_eq!(e.v_plus.norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.v_minus.norm(), 1.0, epsilon = 1e-15);
        let overlap = e.v_plus.0[0].conj() * e.v_minus.0[0] + e.v_plus.0[1].conj() * e.v_minus.0[1];
        assert_abs_diff_eq!(overlap.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn eig2_diagonal() {
        let m = Mat2::new(c(2.0, 0.0), ZERO, ZERO, c(0.5, 0.0));
        let e = eig2(&m);
        assert!(!e.degenerate);
        assert_abs_diff_eq!((e.plus - c(2.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((e.minus - c(0.5, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(e.v_plus, Vec2::new(ONE, ZERO));
        assert_eq!(e.v_minus, Vec2::new(ZERO, ONE));
    }

    #[test]
    fn eig2_swap_matrix() {
        let m = Mat2::new(ZERO, ONE, ONE, ZERO);
        let e = eig2(&m);
        assert_abs_diff_eq!((e.plus - ONE).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((e.minus + ONE).norm(), 0.0, epsilon = 1e-15);
        let h = FRAC_1_SQRT_2;
        assert_abs_diff_eq!((e.v_plus - Vec2::new(c(h, 0.0), c(h, 0.0))).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((e.v_minus - Vec2::new(c(h, 0.0), c(-h, 0.0))).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn eig2_random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut z = || c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        for _ in 0..10_000 {
            let m = Mat2::new(z(), z(), z(), z());
            let e = eig2(&m);
            assert!((e.plus * e.minus - m.det()).norm() <= 1e-10);
            assert!((e.plus + e.minus - m.trace()).norm() <= 1e-10);
            if !e.degenerate {
                assert!((m * e.v_plus - e.v_plus.scale(e.plus)).norm() <= 1e-10);
                assert!((m * e.v_minus - e.v_minus.scale(e.minus)).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn mat3_product_is_associative_on_unitaries() {
        let w = cis(2.0 * PI / 3.0);
        let s = 1.0 / 3f64.sqrt();
        let f = Mat3([[ONE, ONE, ONE], [ONE, w, w * w], [ONE, w * w, w]]).scale(c(s, 0.0));
        let g = Mat3([[ZERO, ONE, ZERO], [ZERO, ZERO, I], [ONE, ZERO, ZERO]]);
        let lhs = (f * g) * f.adjoint();
        let rhs = f * (g * f.adjoint());
        assert!(lhs.max_abs_diff(&rhs) < 1e-15);
    }

    #[test]
    fn unitarity_check() {
        assert!(mat3_is_unitary(&Mat3::IDENTITY, 1e-12));
        let mut m = Mat3::IDENTITY;
        m.0[0][0] = c(2.0, 0.0);
        assert!(!mat3_is_unitary(&m, 1e-3));
    }

    #[test]
    fn angle_helpers() {
        assert_eq!(wrap_angle(-0.0), 0.0);
        assert_abs_diff_eq!(wrap_angle(-PI / 2.0), 1.5 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(angle_diff(0.1, 2.0 * PI - 0.1), 0.2, epsilon = 1e-15);
        assert_eq!(arg_2pi(c(1.0, -0.0)), 0.0);
    }
}
