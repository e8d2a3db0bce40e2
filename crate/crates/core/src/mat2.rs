//! 2×2 complex matrices over the spin basis ordered `(|−1⟩, |1⟩)`.

use core::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Tolerance used when checking Hermiticity of user-supplied operators.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// One of the two spin states. Index 0 is `|−1⟩`, index 1 is `|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    pub const ALL: [Spin; 2] = [Spin::Down, Spin::Up];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Spin::Down => 0,
            Spin::Up => 1,
        }
    }

    /// Eigenvalue of σ_z, i.e. the state label `−1` or `1`.
    #[inline]
    pub fn label(self) -> i32 {
        match self {
            Spin::Down => -1,
            Spin::Up => 1,
        }
    }

    pub fn from_label(label: i32) -> Option<Spin> {
        match label {
            -1 => Some(Spin::Down),
            1 => Some(Spin::Up),
            _ => None,
        }
    }
}

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Default for Mat2 {
    fn default() -> Self {
        Mat2::zero()
    }
}

impl Mat2 {
    #[inline]
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Mat2([
            [c(m[0][0], 0.0), c(m[0][1], 0.0)],
            [c(m[1][0], 0.0), c(m[1][1], 0.0)],
        ])
    }

    #[inline]
    pub fn zero() -> Self {
        Mat2([[C64::zero(); 2]; 2])
    }

    #[inline]
    pub fn identity() -> Self {
        Self::from_real([[1.0, 0.0], [0.0, 1.0]])
    }

    /// σ_z = |1⟩⟨1| − |−1⟩⟨−1|.
    pub fn sigma_z() -> Self {
        Self::from_real([[-1.0, 0.0], [0.0, 1.0]])
    }

    /// σ_x = |−1⟩⟨1| + |1⟩⟨−1|.
    pub fn sigma_x() -> Self {
        Self::from_real([[0.0, 1.0], [1.0, 0.0]])
    }

    /// The dyad `|i⟩⟨j|`.
    pub fn dyad(i: Spin, j: Spin) -> Self {
        let mut m = Mat2::zero();
        m.0[i.index()][j.index()] = c(1.0, 0.0);
        m
    }

    #[inline]
    pub fn get(&self, i: Spin, j: Spin) -> C64 {
        self.0[i.index()][j.index()]
    }

    #[inline]
    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    #[inline]
    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    #[inline]
    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    #[inline]
    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    #[inline]
    pub fn scale_re(&self, s: f64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `max |A − A†|` entrywise.
    pub fn hermitian_deviation(&self) -> f64 {
        (*self - self.adjoint()).max_abs()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol * (1.0 + self.max_abs())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `A B − B A`.
    #[inline]
    pub fn commutator(&self, other: &Mat2) -> Mat2 {
        *self * *other - *other * *self
    }

    /// Outer product `u vᵀ` (no conjugation).
    #[inline]
    pub fn outer(u: [C64; 2], v: [C64; 2]) -> Mat2 {
        Mat2([[u[0] * v[0], u[0] * v[1]], [u[1] * v[0], u[1] * v[1]]])
    }

    #[inline]
    pub fn column(&self, j: usize) -> [C64; 2] {
        [self.0[0][j], self.0[1][j]]
    }

    #[inline]
    pub fn row(&self, i: usize) -> [C64; 2] {
        self.0[i]
    }

    pub fn entries(&self) -> [C64; 4] {
        [self.0[0][0], self.0[0][1], self.0[1][0], self.0[1][1]]
    }

    pub fn dist(&self, other: &Mat2) -> f64 {
        (*self - *other).max_abs()
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    #[inline]
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl AddAssign for Mat2 {
    #[inline]
    fn add_assign(&mut self, o: Mat2) {
        *self = *self + o;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    #[inline]
    fn sub(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2([
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ])
    }
}

impl SubAssign for Mat2 {
    #[inline]
    fn sub_assign(&mut self, o: Mat2) {
        *self = *self - o;
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    #[inline]
    fn neg(self) -> Mat2 {
        self.scale_re(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
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

impl MulAssign for Mat2 {
    #[inline]
    fn mul_assign(&mut self, o: Mat2) {
        *self = *self * o;
    }
}

impl Mul<C64> for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, s: C64) -> Mat2 {
        self.scale(s)
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, s: f64) -> Mat2 {
        self.scale_re(s)
    }
}

/// Precomputed split `H = α·I + A` of a Hermitian matrix, with `A` traceless,
/// so that `e^{iθH} = e^{iθα}(cos(θr)·I + i·sin(θr)/r·A)` where `A² = r²·I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianExp {
    alpha: f64,
    traceless: Mat2,
    radius: f64,
}

impl HermitianExp {
    pub fn new(h: &Mat2) -> Result<Self> {
        if !h.is_finite() {
            return Err(Error::NonFinite("hermitian generator"));
        }
        if !h.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::NotHermitian(h.hermitian_deviation()));
        }
        let alpha = 0.5 * (h.0[0][0].re + h.0[1][1].re);
        let traceless = *h - Mat2::identity().scale_re(alpha);
        let d = 0.5 * (traceless.0[0][0].re - traceless.0[1][1].re);
        let off = traceless.0[0][1];
        let radius = (d * d + off.norm_sqr()).sqrt();
        Ok(Self { alpha, traceless, radius })
    }

    /// `e^{iθH}`.
    #[inline]
    pub fn exp_i(&self, theta: f64) -> Mat2 {
        let x = theta * self.radius;
        // sin(θr)/r, continued to θ at r = 0
        let sinc = if x.abs() < 1e-6 {
            theta * (1.0 - x * x / 6.0)
        } else {
            x.sin() / self.radius
        };
        let (s, co) = (theta * self.alpha).sin_cos();
        let phase = c(co, s);
        let mut m = self.traceless.scale(c(0.0, sinc));
        m.0[0][0] += c(x.cos(), 0.0);
        m.0[1][1] += c(x.cos(), 0.0);
        m.scale(phase)
    }
}

/// `e^{iθH}` for Hermitian `H`, evaluated in closed form.
pub fn matexp_herm(h: &Mat2, theta: f64) -> Result<Mat2> {
    Ok(HermitianExp::new(h)?.exp_i(theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    fn taylor_exp_i(h: &Mat2, theta: f64) -> Mat2 {
        // oracle: truncated power series of e^{iθH}
        let x = h.scale(c(0.0, theta));
        let mut term = Mat2::identity();
        let mut sum = Mat2::identity();
        for k in 1..60 {
            term = (term * x).scale_re(1.0 / k as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn exp_at_zero_is_identity() {
        let h = Mat2::sigma_x() * 0.3 + Mat2::sigma_z() * 1.7;
        assert!(matexp_herm(&h, 0.0).unwrap().dist(&Mat2::identity()) < 1e-15);
    }

    #[test]
    fn exp_of_sigma_z_is_diagonal_phase() {
        let theta = 0.731;
        let e = matexp_herm(&Mat2::sigma_z(), theta).unwrap();
        let expected = Mat2::new(
            C64::from_polar(1.0, -theta),
            C64::zero(),
            C64::zero(),
            C64::from_polar(1.0, theta),
        );
        assert!(e.dist(&expected) < 1e-15);
    }

    #[test]
    fn exp_of_sigma_x_quarter_turn() {
        let e = matexp_herm(&Mat2::sigma_x(), FRAC_PI_2).unwrap();
        let expected = Mat2::sigma_x().scale(c(0.0, 1.0));
        assert!(e.dist(&expected) < 1e-15);
        assert!(taylor_exp_i(&Mat2::sigma_x(), FRAC_PI_2).dist(&expected) < 1e-13);
    }

    #[test]
    fn exp_matches_series_and_is_unitary() {
        let h = Mat2::new(c(0.4, 0.0), c(0.3, -1.1), c(0.3, 1.1), c(-2.0, 0.0));
        for &theta in &[-1.3, 0.01, 0.5, 2.2] {
            let e = matexp_herm(&h, theta).unwrap();
            assert!(e.dist(&taylor_exp_i(&h, theta)) < 1e-12);
            assert!((e * e.adjoint()).dist(&Mat2::identity()) < 1e-14);
        }
    }

    #[test]
    fn exp_of_scalar_multiple_of_identity() {
        let h = Mat2::identity() * 2.0;
        let e = matexp_herm(&h, 0.25).unwrap();
        assert!(e.dist(&Mat2::identity().scale(C64::from_polar(1.0, 0.5))) < 1e-15);
    }

    #[test]
    fn non_hermitian_generator_rejected() {
        let h = Mat2::new(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert!(matches!(matexp_herm(&h, 1.0), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn spin_labels_round_trip() {
        for s in Spin::ALL {
            assert_eq!(Spin::from_label(s.label()), Some(s));
        }
        assert_eq!(Spin::from_label(0), None);
        assert_eq!(Mat2::sigma_z().get(Spin::Up, Spin::Up).re, 1.0);
    }
}
