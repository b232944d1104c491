//! Symmetric 2x2 matrix algebra and moment containers for a single mode.
//!
//! Conventions: hbar = 1, `[X, P] = i`, vacuum quadrature variance 1/2.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// Slack used by the physicality test `det >= 1/4`.
pub const PHYSICAL_TOL: f64 = 1e-10;

/// Symmetric 2x2 matrix `[[gxx, gxp], [gxp, gpp]]`.
///
/// The same layout holds covariance matrices `G`, second-moment matrices
/// `G2`, heterodyne-shifted matrices and raw estimates, so construction
/// via [`CovarianceMatrix::symmetric`] performs no validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    pub gxx: f64,
    pub gxp: f64,
    pub gpp: f64,
}

impl CovarianceMatrix {
    /// Validated constructor: entries finite and the matrix positive definite.
    pub fn new(gxx: f64, gxp: f64, gpp: f64) -> Result<Self> {
        let g = Self::symmetric(gxx, gxp, gpp);
        if !(gxx.is_finite() && gxp.is_finite() && gpp.is_finite()) {
            return Err(Error::InvalidParameter("non-finite covariance entry".into()));
        }
        if !g.is_positive_definite() {
            return Err(Error::InvalidParameter(format!(
                "covariance [[{gxx}, {gxp}], [{gxp}, {gpp}]] is not positive definite"
            )));
        }
        Ok(g)
    }

    /// Validated constructor that also enforces `det >= 1/4`.
    pub fn physical(gxx: f64, gxp: f64, gpp: f64) -> Result<Self> {
        let g = Self::new(gxx, gxp, gpp)?;
        if !g.is_physical() {
            return Err(Error::Unphysical { det: g.det() });
        }
        Ok(g)
    }

    pub const fn symmetric(gxx: f64, gxp: f64, gpp: f64) -> Self {
        Self { gxx, gxp, gpp }
    }

    pub const fn identity() -> Self {
        Self::symmetric(1.0, 0.0, 1.0)
    }

    pub fn scalar(s: f64) -> Self {
        Self::symmetric(s, 0.0, s)
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self::symmetric(a, 0.0, b)
    }

    /// `r r^T`.
    pub fn outer(r: FirstMoments) -> Self {
        Self::symmetric(r.rx * r.rx, r.rx * r.rp, r.rp * r.rp)
    }

    pub fn det(&self) -> f64 {
        self.gxx * self.gpp - self.gxp * self.gxp
    }

    pub fn trace(&self) -> f64 {
        self.gxx + self.gpp
    }

    pub fn is_positive_definite(&self) -> bool {
        self.gxx > 0.0 && self.gpp > 0.0 && self.det() > 0.0
    }

    /// Heisenberg-Robertson-Schroedinger bound `det G >= 1/4`.
    pub fn is_physical(&self) -> bool {
        self.is_positive_definite() && self.det() >= 0.25 - PHYSICAL_TOL
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::symmetric(self.gxx + o.gxx, self.gxp + o.gxp, self.gpp + o.gpp)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::symmetric(self.gxx - o.gxx, self.gxp - o.gxp, self.gpp - o.gpp)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::symmetric(s * self.gxx, s * self.gxp, s * self.gpp)
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        Self::symmetric(self.gxx + s, self.gxp, self.gpp + s)
    }

    /// `Tr(A B)`.
    pub fn trace_product(&self, o: &Self) -> f64 {
        self.gxx * o.gxx + 2.0 * self.gxp * o.gxp + self.gpp * o.gpp
    }

    /// Frobenius norm squared.
    pub fn norm_sq(&self) -> f64 {
        self.trace_product(self)
    }

    /// `u^T G u`.
    pub fn quad_form(&self, ux: f64, up: f64) -> f64 {
        self.gxx * ux * ux + 2.0 * self.gxp * ux * up + self.gpp * up * up
    }

    pub fn inverse(&self) -> Result<Self> {
        let d = self.det();
        if d.abs() <= f64::EPSILON * self.norm_sq() {
            return Err(Error::Singular("2x2 inverse"));
        }
        Ok(Self::symmetric(self.gpp / d, -self.gxp / d, self.gxx / d))
    }

    /// `R(phi) G R(phi)^T` with `R(phi) = [[cos, -sin], [sin, cos]]`.
    pub fn rotated(&self, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        let (c2, s2, cs) = (c * c, s * s, c * s);
        Self::symmetric(
            c2 * self.gxx - 2.0 * cs * self.gxp + s2 * self.gpp,
            cs * (self.gxx - self.gpp) + (c2 - s2) * self.gxp,
            s2 * self.gxx + 2.0 * cs * self.gxp + c2 * self.gpp,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.gxx.is_finite() && self.gxp.is_finite() && self.gpp.is_finite()
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        (self.gxx - o.gxx)
            .abs()
            .max((self.gxp - o.gxp).abs())
            .max((self.gpp - o.gpp).abs())
    }
}

/// First moments `r = (<X>, <P>)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FirstMoments {
    pub rx: f64,
    pub rp: f64,
}

impl FirstMoments {
    pub const fn new(rx: f64, rp: f64) -> Self {
        Self { rx, rp }
    }

    pub fn norm_sq(&self) -> f64 {
        self.rx * self.rx + self.rp * self.rp
    }

    /// `u_theta^T r`.
    pub fn along(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        c * self.rx + s * self.rp
    }

    pub fn rotated(&self, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Self::new(c * self.rx - s * self.rp, s * self.rx + c * self.rp)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.rx - o.rx, self.rp - o.rp)
    }

    pub fn is_finite(&self) -> bool {
        self.rx.is_finite() && self.rp.is_finite()
    }
}

/// Vectorized symmetric matrix `(y1, sqrt2 y2, y3)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SymmetricVec3 {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
}

impl SymmetricVec3 {
    pub const fn new(v1: f64, v2: f64, v3: f64) -> Self {
        Self { v1, v2, v3 }
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.v1 * o.v1 + self.v2 * o.v2 + self.v3 * o.v3
    }

    pub fn unvec(&self) -> CovarianceMatrix {
        CovarianceMatrix::symmetric(self.v1, self.v2 / SQRT_2, self.v3)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.v1, self.v2, self.v3]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

pub fn vec(m: &CovarianceMatrix) -> SymmetricVec3 {
    SymmetricVec3::new(m.gxx, SQRT_2 * m.gxp, m.gpp)
}

/// Gaussian covariance parametrized by temperature `mu`, squeezing `lambda`
/// and orientation `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianShape {
    pub mu: f64,
    pub lambda: f64,
    pub phi: f64,
}

impl GaussianShape {
    pub fn new(mu: f64, lambda: f64, phi: f64) -> Result<Self> {
        if !(mu >= 1.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu = {mu} must be >= 1")));
        }
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} must be >= 1")));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidParameter("phi must be finite".into()));
        }
        Ok(Self { mu, lambda, phi })
    }
}

/// `G = R(phi) diag(mu/(2 lambda), mu lambda/2) R(phi)^T`.
pub fn gaussian_cov_from_shape(s: &GaussianShape) -> Result<CovarianceMatrix> {
    let s = GaussianShape::new(s.mu, s.lambda, s.phi)?;
    Ok(CovarianceMatrix::diag(s.mu / (2.0 * s.lambda), s.mu * s.lambda / 2.0).rotated(s.phi))
}

/// Inverse of [`gaussian_cov_from_shape`] for a physical covariance.
pub fn shape_from_cov(g: &CovarianceMatrix) -> Result<GaussianShape> {
    if !g.is_physical() {
        return Err(Error::Unphysical { det: g.det() });
    }
    let (lo, hi, phi) = spectral(g);
    let mu = (2.0 * g.det().sqrt()).max(1.0);
    let lambda = (hi / lo).sqrt().max(1.0);
    GaussianShape::new(mu, lambda, phi)
}

/// `G_het = G + I/2`.
pub fn het_shift(g: &CovarianceMatrix) -> CovarianceMatrix {
    g.add_scalar(0.5)
}

/// Eigen-decomposition `g = R(phi) diag(lo, hi) R(phi)^T`, `phi` in `[0, pi)`.
///
/// The first column of `R(phi)` is the eigenvector of the smaller eigenvalue.
pub fn spectral(g: &CovarianceMatrix) -> (f64, f64, f64) {
    let half_tr = 0.5 * g.trace();
    let b = 0.5 * (g.gxx - g.gpp);
    let c = g.gxp;
    let rho = b.hypot(c);
    let lo = half_tr - rho;
    let hi = half_tr + rho;
    if rho <= 1e-15 * half_tr.abs().max(1e-300) {
        return (lo, hi, 0.0);
    }
    // The direction (cos phi, sin phi) minimizing u^T g u satisfies
    // 2 phi = atan2(c, b) + pi.
    let mut phi = 0.5 * (c.atan2(b) + PI);
    if phi >= PI {
        phi -= PI;
    }
    if phi < 0.0 {
        phi += PI;
    }
    (lo, hi, phi)
}

/// Rotation acting on vectorized symmetric matrices:
/// `vec(R(phi) Y R(phi)^T) = Q(phi) vec(Y)`.
pub fn vec_rotation(phi: f64) -> nalgebra::Matrix3<f64> {
    let (s, c) = phi.sin_cos();
    let r2cs = SQRT_2 * c * s;
    nalgebra::Matrix3::new(
        c * c, -r2cs, s * s, //
        r2cs, c * c - s * s, -r2cs, //
        s * s, r2cs, c * c,
    )
}

/// Normalize an angle into `[0, pi)`.
pub fn wrap_half_turn(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    if t >= PI {
        0.0
    } else {
        t
    }
}

/// `u_theta = (cos theta, sin theta)`.
pub fn direction(theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (c, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn mat_mul_trace(a: &CovarianceMatrix, b: &CovarianceMatrix) -> f64 {
        let a = [[a.gxx, a.gxp], [a.gxp, a.gpp]];
        let b = [[b.gxx, b.gxp], [b.gxp, b.gpp]];
        let mut t = 0.0;
        for i in 0..2 {
            for k in 0..2 {
                t += a[i][k] * b[k][i];
            }
        }
        t
    }

    #[test]
    fn vec_examples() {
        let v = vec(&CovarianceMatrix::identity());
        assert_eq!(v.as_array(), [1.0, 0.0, 1.0]);
        let v = vec(&CovarianceMatrix::symmetric(1.0, 2.0, 3.0));
        assert_relative_eq!(v.v2, 2.0 * SQRT_2, epsilon = 1e-15);
        let a = CovarianceMatrix::symmetric(2.0, 1.0, 4.0);
        let b = CovarianceMatrix::identity();
        assert_relative_eq!(vec(&a).dot(&vec(&b)), 6.0);
        assert_relative_eq!(mat_mul_trace(&a, &b), 6.0);
    }

    #[test]
    fn shape_examples() {
        let g = gaussian_cov_from_shape(&GaussianShape { mu: 1.0, lambda: 1.0, phi: 0.7 }).unwrap();
        assert!(g.max_abs_diff(&CovarianceMatrix::scalar(0.5)) < 1e-15);
        let g = gaussian_cov_from_shape(&GaussianShape { mu: 2.0, lambda: 1.0, phi: 0.0 }).unwrap();
        assert_eq!(g, CovarianceMatrix::diag(1.0, 1.0));
        let g = gaussian_cov_from_shape(&GaussianShape { mu: 1.0, lambda: 2.0, phi: 0.0 }).unwrap();
        assert_eq!(g, CovarianceMatrix::diag(0.25, 1.0));
        assert!(g.is_physical());
        assert!(gaussian_cov_from_shape(&GaussianShape { mu: 0.5, lambda: 1.0, phi: 0.0 }).is_err());
        assert!(gaussian_cov_from_shape(&GaussianShape { mu: 1.0, lambda: 0.9, phi: 0.0 }).is_err());
    }

    #[test]
    fn het_shift_examples() {
        let h = het_shift(&CovarianceMatrix::scalar(0.5));
        assert_eq!(h, CovarianceMatrix::identity());
        assert_eq!(h.gxx * h.gpp, 1.0);
        assert_eq!(het_shift(&CovarianceMatrix::diag(0.25, 1.0)), CovarianceMatrix::diag(0.75, 1.5));
        assert_eq!(het_shift(&CovarianceMatrix::scalar(1.5)), CovarianceMatrix::scalar(2.0));
    }

    #[test]
    fn spectral_examples() {
        assert_eq!(spectral(&CovarianceMatrix::scalar(0.5)), (0.5, 0.5, 0.0));
        assert_eq!(spectral(&CovarianceMatrix::diag(1.0, 4.0)), (1.0, 4.0, 0.0));
        let g = CovarianceMatrix::symmetric(2.0, 1.0, 2.0);
        let (lo, hi, phi) = spectral(&g);
        assert_relative_eq!(lo, 1.0, epsilon = 1e-15);
        assert_relative_eq!(hi, 3.0, epsilon = 1e-15);
        // Smallest-variance direction is (1, -1)/sqrt2.
        assert_relative_eq!(phi, 3.0 * PI / 4.0, epsilon = 1e-15);
        let back = CovarianceMatrix::diag(lo, hi).rotated(phi);
        assert!(back.max_abs_diff(&g) < 1e-12);
    }

    #[test]
    fn diag_ordered_descending_gets_quarter_turn() {
        let (lo, hi, phi) = spectral(&CovarianceMatrix::diag(4.0, 1.0));
        assert_eq!((lo, hi), (1.0, 4.0));
        assert_relative_eq!(phi, FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn physicality() {
        assert!(CovarianceMatrix::physical(0.5, 0.0, 0.5).is_ok());
        assert!(matches!(
            CovarianceMatrix::physical(0.2, 0.0, 0.5),
            Err(Error::Unphysical { .. })
        ));
        assert!(CovarianceMatrix::new(1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn vec_rotation_matches_matrix_rotation() {
        let y = CovarianceMatrix::symmetric(0.3, -0.7, 1.9);
        let q = vec_rotation(0.41);
        let lhs = vec(&y.rotated(0.41));
        let rhs = q * nalgebra::Vector3::from(vec(&y).as_array());
        for i in 0..3 {
            assert_relative_eq!(lhs.as_array()[i], rhs[i], epsilon = 1e-14);
        }
        assert!((q * q.transpose() - nalgebra::Matrix3::identity()).norm() < 1e-14);
    }

    fn sym() -> impl Strategy<Value = CovarianceMatrix> {
        (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64)
            .prop_map(|(a, b, c)| CovarianceMatrix::symmetric(a, b, c))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn vec_preserves_trace_products(a in sym(), b in sym()) {
            let lhs = vec(&a).dot(&vec(&b));
            let rhs = mat_mul_trace(&a, &b);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
            prop_assert!(vec(&a).unvec().max_abs_diff(&a) <= 1e-15 * (1.0 + a.norm_sq().sqrt()));
        }

        #[test]
        fn shape_determinant(mu in 1.0..50.0f64, lambda in 1.0..50.0f64, phi in -7.0..7.0f64) {
            let g = gaussian_cov_from_shape(&GaussianShape { mu, lambda, phi }).unwrap();
            prop_assert!((g.det() - mu * mu / 4.0).abs() <= 1e-12 * mu * mu * lambda);
            let (lo, hi, _) = spectral(&g);
            prop_assert!((lo - mu / (2.0 * lambda)).abs() <= 1e-12 * mu * lambda);
            prop_assert!((hi - mu * lambda / 2.0).abs() <= 1e-12 * mu * lambda);
        }

        #[test]
        fn het_shift_commutes_with_rotation(g in sym(), phi in -4.0..4.0f64) {
            let a = het_shift(&g.rotated(phi));
            let b = het_shift(&g).rotated(phi);
            prop_assert!(a.max_abs_diff(&b) <= 1e-13);
        }

        #[test]
        fn spectral_reconstructs(g in sym()) {
            let (lo, hi, phi) = spectral(&g);
            prop_assert!(lo <= hi);
            prop_assert!((0.0..PI).contains(&phi));
            let back = CovarianceMatrix::diag(lo, hi).rotated(phi);
            prop_assert!(back.max_abs_diff(&g) <= 1e-12 * (1.0 + g.norm_sq().sqrt()));
        }
    }
}
