use num_complex::Complex64;
use std::f64::consts::{PI, SQRT_2};

use super::{FockExpansion, Parity, StateModel};
use crate::error::Result;
use crate::phase_space::{het_shift, CovarianceMatrix, FirstMoments};
use crate::special::{hermite_each, hermite_function, hyp1f1_scaled, ln_factorial};

const INV_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Probability density of `X_theta` for a fixed state and angle.
#[derive(Debug, Clone)]
pub enum QuadratureDensity {
    Normal { mean: f64, var: f64 },
    /// `phi_n(x - shift)^2`.
    ShiftedFock { n: u32, shift: f64 },
    /// Two-component cat interference pattern.
    Cat { s: f64, k: f64, sign: f64, norm2: f64 },
    /// `|sum_n c_n phi_n(x)|^2`.
    Expansion { coefficients: Vec<Complex64> },
}

impl QuadratureDensity {
    pub fn new(st: &StateModel, theta: f64) -> Result<Self> {
        Ok(match *st {
            StateModel::Gaussian { r0, g } => {
                let (s, c) = theta.sin_cos();
                QuadratureDensity::Normal { mean: r0.along(theta), var: g.quad_form(c, s) }
            }
            StateModel::Fock { n } => QuadratureDensity::ShiftedFock { n, shift: 0.0 },
            StateModel::DisplacedFock { alpha0, m } => {
                let beta = alpha0 * Complex64::from_polar(1.0, -theta);
                QuadratureDensity::ShiftedFock { n: m, shift: SQRT_2 * beta.re }
            }
            StateModel::EvenOddCoherent { alpha0, parity } => {
                let beta = alpha0 * Complex64::from_polar(1.0, -theta);
                let x = alpha0.norm_sqr();
                let denom = match parity {
                    Parity::Even => 1.0 + (-2.0 * x).exp(),
                    Parity::Odd => -(-2.0 * x).exp_m1(),
                };
                QuadratureDensity::Cat {
                    s: SQRT_2 * beta.re,
                    k: 2.0 * SQRT_2 * beta.im,
                    sign: parity.sign(),
                    norm2: 1.0 / (2.0 * denom),
                }
            }
            StateModel::PhotonAddedCoherent { .. } => Self::from_expansion(st, theta)?,
        })
    }

    /// Density built from the truncated Fock expansion.
    pub fn from_expansion(st: &StateModel, theta: f64) -> Result<Self> {
        let e = st.default_fock_expansion()?;
        Ok(Self::from_coefficients(&e, theta))
    }

    pub fn from_coefficients(e: &FockExpansion, theta: f64) -> Self {
        QuadratureDensity::Expansion { coefficients: e.rotated(theta) }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            QuadratureDensity::Normal { mean, var } => {
                let d = x - mean;
                (-0.5 * d * d / var).exp() / (2.0 * PI * var).sqrt()
            }
            QuadratureDensity::ShiftedFock { n, shift } => {
                let v = hermite_function(*n as usize, x - shift);
                v * v
            }
            QuadratureDensity::Cat { s, k, sign, norm2 } => {
                let a = (-(x - s) * (x - s)).exp();
                let b = (-(x + s) * (x + s)).exp();
                let c = 2.0 * (-x * x - s * s).exp() * (k * x).cos();
                (norm2 * INV_SQRT_PI * (a + b + sign * c)).max(0.0)
            }
            QuadratureDensity::Expansion { coefficients } => {
                let mut amp = Complex64::new(0.0, 0.0);
                hermite_each(coefficients.len() - 1, x, |n, v| amp += coefficients[n] * v);
                amp.norm_sqr()
            }
        }
    }
}

/// Husimi function `Q(x, p)` in the `(x, p)` measure.
#[derive(Debug, Clone)]
pub enum HusimiDensity {
    Normal { mean: FirstMoments, cov: CovarianceMatrix, inv: CovarianceMatrix },
    /// `e^{-|a - a0|^2} |a - a0|^{2m} / (2 pi m!)`.
    DisplacedFock { alpha0: Complex64, m: u32 },
    Cat { alpha0: Complex64, sign: f64, norm2: f64 },
    /// `|a|^{2m} e^{-|a - a0|^2} / (2 pi K)`.
    PhotonAdded { alpha0: Complex64, m: u32, ln_norm: f64 },
    /// `|<a|psi>|^2 / (2 pi)` from Fock amplitudes.
    Expansion { coefficients: Vec<Complex64> },
}

impl HusimiDensity {
    pub fn new(st: &StateModel) -> Result<Self> {
        Ok(match *st {
            StateModel::Gaussian { r0, g } => {
                let cov = het_shift(&g);
                HusimiDensity::Normal { mean: r0, cov, inv: cov.inverse()? }
            }
            StateModel::Fock { n } => HusimiDensity::DisplacedFock { alpha0: Complex64::new(0.0, 0.0), m: n },
            StateModel::DisplacedFock { alpha0, m } => HusimiDensity::DisplacedFock { alpha0, m },
            StateModel::EvenOddCoherent { alpha0, parity } => {
                let x = alpha0.norm_sqr();
                let denom = match parity {
                    Parity::Even => 1.0 + (-2.0 * x).exp(),
                    Parity::Odd => -(-2.0 * x).exp_m1(),
                };
                HusimiDensity::Cat { alpha0, sign: parity.sign(), norm2: 1.0 / (2.0 * denom) }
            }
            StateModel::PhotonAddedCoherent { alpha0, m } => {
                let x = alpha0.norm_sqr();
                // <a0| a^m a^dag^m |a0> = m! e^{-x} 1F1(m+1; 1; x)
                let ln_norm = ln_factorial(m) + hyp1f1_scaled(m as f64 + 1.0, 1.0, x).ln();
                HusimiDensity::PhotonAdded { alpha0, m, ln_norm }
            }
        })
    }

    pub fn from_expansion(st: &StateModel) -> Result<Self> {
        let e = st.default_fock_expansion()?;
        Ok(HusimiDensity::Expansion { coefficients: e.coefficients })
    }

    pub fn pdf(&self, x: f64, p: f64) -> f64 {
        let a = Complex64::new(x, p) / SQRT_2;
        match self {
            HusimiDensity::Normal { mean, cov, inv } => {
                let (dx, dp) = (x - mean.rx, p - mean.rp);
                (-0.5 * inv.quad_form(dx, dp)).exp() / (2.0 * PI * cov.det().sqrt())
            }
            HusimiDensity::DisplacedFock { alpha0, m } => {
                let rho = (a - alpha0).norm_sqr();
                if rho == 0.0 {
                    return if *m == 0 { 1.0 / (2.0 * PI) } else { 0.0 };
                }
                (-rho + *m as f64 * rho.ln() - ln_factorial(*m)).exp() / (2.0 * PI)
            }
            HusimiDensity::Cat { alpha0, sign, norm2 } => {
                let e1 = (-(a - alpha0).norm_sqr()).exp();
                let e2 = (-(a + alpha0).norm_sqr()).exp();
                let cross = (-a.norm_sqr() - alpha0.norm_sqr()).exp() * (2.0 * (a.conj() * alpha0).im).cos();
                (norm2 * (e1 + e2 + 2.0 * sign * cross)).max(0.0) / (2.0 * PI)
            }
            HusimiDensity::PhotonAdded { alpha0, m, ln_norm } => {
                let r2 = a.norm_sqr();
                if r2 == 0.0 {
                    return if *m == 0 { (-alpha0.norm_sqr() - ln_norm).exp() / (2.0 * PI) } else { 0.0 };
                }
                (*m as f64 * r2.ln() - (a - alpha0).norm_sqr() - ln_norm).exp() / (2.0 * PI)
            }
            HusimiDensity::Expansion { coefficients } => {
                // <a|psi> = e^{-|a|^2/2} sum_n c_n conj(a)^n / sqrt(n!)
                let ac = a.conj();
                let mut term = Complex64::new(1.0, 0.0);
                let mut amp = Complex64::new(0.0, 0.0);
                for (n, c) in coefficients.iter().enumerate() {
                    if n > 0 {
                        term *= ac / (n as f64).sqrt();
                    }
                    amp += c * term;
                }
                (-a.norm_sqr()).exp() * amp.norm_sqr() / (2.0 * PI)
            }
        }
    }
}
