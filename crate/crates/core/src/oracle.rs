//! Brute-force reference numerics: moments by density integration and by
//! differentiating characteristic functions, and a Simpson-rule Fisher
//! matrix. None of these routes share code with the moment engine.

use nalgebra::{Matrix2, Matrix3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::crb::{MomentOrder, ScaledFisher};
use crate::error::{Error, Result};
use crate::phase_space::{het_shift, spectral};
use crate::special::{hyp1f1, hyp1f1_complex, laguerre};
use crate::states::{HusimiDensity, Parity, QuadratureDensity, QuadratureMomentEngine, StateModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Integration half-width in units of the largest standard deviation.
    pub grid_extent: f64,
    /// Simpson nodes per axis for 1-D integrals.
    pub nodes_1d: usize,
    /// Simpson nodes per axis for the Husimi tensor grid.
    pub nodes_2d: usize,
    /// Initial finite-difference step in units of `1 / sigma`.
    pub fd_step: f64,
    pub richardson_levels: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { grid_extent: 10.0, nodes_1d: 2049, nodes_2d: 513, fd_step: 0.5, richardson_levels: 3 }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_1d % 2 == 0 || self.nodes_2d % 2 == 0 || self.nodes_1d < 5 || self.nodes_2d < 5 {
            return Err(Error::InvalidParameter("Simpson node counts must be odd and >= 5".into()));
        }
        if !(self.grid_extent > 5.0) {
            return Err(Error::InvalidParameter(format!("grid_extent {} must exceed 5", self.grid_extent)));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::InvalidParameter("fd_step must be positive".into()));
        }
        Ok(())
    }
}

const DENSITY_TOL: f64 = 1e-6;
const MAX_REFINEMENTS: usize = 3;

fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

/// Half-width `extent * sqrt(largest second moment) + |first moment|`;
/// `shift = 1/2` for the Husimi second moments.
fn half_width(s: &StateModel, extent: f64, shift: f64) -> f64 {
    let (_, hi, _) = spectral(&s.second_moment_matrix().add_scalar(shift));
    extent * hi.sqrt() + s.first_moments().norm_sq().sqrt()
}

/// `<X_theta^m>` by composite Simpson integration of the quadrature density.
pub fn numeric_quadrature_moment(s: &StateModel, theta: f64, m: u32, cfg: &OracleConfig) -> Result<f64> {
    cfg.validate()?;
    if m > 6 {
        return Err(Error::InvalidParameter(format!("quadrature moment order {m} > 6")));
    }
    let dens = QuadratureDensity::new(s, theta)?;
    let l = half_width(s, cfg.grid_extent, 0.0);
    let mut n = cfg.nodes_1d;
    for _ in 0..=MAX_REFINEMENTS {
        let h = 2.0 * l / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|i| -l + i as f64 * h).collect();
        let f: Vec<f64> = xs.iter().map(|&x| dens.pdf(x) * x.powi(m as i32)).collect();
        let fine = simpson_weights(n, h).iter().zip(&f).map(|(w, v)| w * v).sum::<f64>();
        // Same nodes at double spacing for the error estimate.
        let nc = n.div_ceil(2);
        let coarse = simpson_weights(nc, 2.0 * h).iter().zip(f.iter().step_by(2)).map(|(w, v)| w * v).sum::<f64>();
        let scale = simpson_weights(n, h).iter().zip(&f).map(|(w, v)| w * v.abs()).sum::<f64>();
        if (fine - coarse).abs() <= DENSITY_TOL * scale.max(f64::MIN_POSITIVE) {
            return Ok(fine);
        }
        n = 2 * n - 1;
    }
    Err(Error::NonConvergence(format!("density integration of <X^{m}> at theta = {theta}")))
}

/// Husimi averages of `x^k p^l` (`k + l <= 4`) by tensor-product Simpson
/// integration of the Husimi function; entry `[k][l]`.
pub fn numeric_husimi_moments(s: &StateModel, cfg: &OracleConfig) -> Result<[[f64; 5]; 5]> {
    cfg.validate()?;
    let dens = HusimiDensity::new(s)?;
    let l = half_width(s, cfg.grid_extent, 0.5);
    let mut n = cfg.nodes_2d;
    for _ in 0..=MAX_REFINEMENTS {
        let h = 2.0 * l / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|i| -l + i as f64 * h).collect();
        let wf = simpson_weights(n, h);
        let wc = simpson_weights(n.div_ceil(2), 2.0 * h);
        let mut fine = [[0.0; 5]; 5];
        let mut coarse = [[0.0; 5]; 5];
        let mut absm = [[0.0; 5]; 5];
        for (i, &x) in xs.iter().enumerate() {
            for (j, &p) in xs.iter().enumerate() {
                let q = dens.pdf(x, p);
                if q == 0.0 {
                    continue;
                }
                let wij = wf[i] * wf[j];
                let wcij = if i % 2 == 0 && j % 2 == 0 { wc[i / 2] * wc[j / 2] } else { 0.0 };
                for k in 0..=4 {
                    let xk = x.powi(k as i32);
                    for ll in 0..=(4 - k) {
                        let v = q * xk * p.powi(ll as i32);
                        fine[k][ll] += wij * v;
                        coarse[k][ll] += wcij * v;
                        absm[k][ll] += wij * v.abs();
                    }
                }
            }
        }
        let ok = (0..=4).all(|k| (0..=(4 - k)).all(|ll| (fine[k][ll] - coarse[k][ll]).abs() <= DENSITY_TOL * absm[k][ll]));
        if ok {
            return Ok(fine);
        }
        n = 2 * n - 1;
    }
    Err(Error::NonConvergence("Husimi density integration".into()))
}

/// Quadrature characteristic function `<exp(i k X_theta)>` from the
/// closed-form table.
pub fn quadrature_cf(s: &StateModel, theta: f64, k: f64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let (sn, c) = theta.sin_cos();
    match *s {
        StateModel::Gaussian { r0, g } => {
            let v = g.quad_form(c, sn);
            (Complex64::new(-0.5 * v * k * k, 0.0) + i * k * r0.along(theta)).exp()
        }
        StateModel::Fock { n } => Complex64::new((-0.25 * k * k).exp() * laguerre(n, 0.0, 0.5 * k * k), 0.0),
        StateModel::EvenOddCoherent { alpha0, parity } => {
            let a = alpha0 * Complex64::from_polar(1.0, -theta);
            let (xt, pt) = (SQRT_2 * a.re, SQRT_2 * a.im);
            let e = (-2.0 * alpha0.norm_sqr()).exp();
            let sg = parity.sign();
            let v = (-0.25 * k * k).exp() * ((k * xt).cos() + sg * e * (k * pt).cosh()) / (1.0 + sg * e);
            Complex64::new(v, 0.0)
        }
        StateModel::DisplacedFock { alpha0, m } => {
            let xt = SQRT_2 * (alpha0 * Complex64::from_polar(1.0, -theta)).re;
            (Complex64::new(-0.25 * k * k, k * xt)).exp() * laguerre(m, 0.0, 0.5 * k * k)
        }
        StateModel::PhotonAddedCoherent { alpha0, m } => {
            let a = m as f64 + 1.0;
            let z = (alpha0 + i * k * Complex64::from_polar(1.0, theta) / SQRT_2)
                * (alpha0.conj() + i * k * Complex64::from_polar(1.0, -theta) / SQRT_2);
            (0.25 * k * k).exp() * hyp1f1_complex(a, 1.0, z) / hyp1f1(a, 1.0, alpha0.norm_sqr())
        }
    }
}

/// Husimi characteristic function `E_Q[exp(u x + v p)]`, i.e. the table's
/// `exp(g* alpha + g alpha*)` average with `g = (u + i v)/sqrt2`.
pub fn husimi_cf(s: &StateModel, u: f64, v: f64) -> f64 {
    let g = Complex64::new(u, v) / SQRT_2;
    let g2 = g.norm_sqr();
    match *s {
        StateModel::Gaussian { r0, g: cov } => {
            // det(G_het)/2 g^dag M g reduces to w^T G_het w / 2 with w = (u, v).
            let gh = het_shift(&cov);
            (u * r0.rx + v * r0.rp + 0.5 * gh.quad_form(u, v)).exp()
        }
        StateModel::Fock { n } => hyp1f1(n as f64 + 1.0, 1.0, g2),
        StateModel::EvenOddCoherent { alpha0, parity } => {
            let x = alpha0.norm_sqr();
            let sg = match parity {
                Parity::Even => 1.0,
                Parity::Odd => -1.0,
            };
            let cross = ((g.conj() - alpha0.conj()) * (g + alpha0)).exp();
            let bracket = (g + alpha0).norm_sqr().exp() + (g - alpha0).norm_sqr().exp() + sg * 2.0 * cross.re;
            (-x).exp() / (2.0 + 2.0 * sg * (-2.0 * x).exp()) * bracket
        }
        StateModel::DisplacedFock { alpha0, m } => {
            let lin = 2.0 * (g.conj() * alpha0).re;
            lin.exp() * hyp1f1(m as f64 + 1.0, 1.0, g2)
        }
        StateModel::PhotonAddedCoherent { alpha0, m } => {
            let a = m as f64 + 1.0;
            hyp1f1(a, 1.0, (g + alpha0).norm_sqr()) / hyp1f1(a, 1.0, alpha0.norm_sqr())
        }
    }
}

/// Central-difference stencils on offsets `-2..=2` for derivative orders 0..=4.
const STENCIL: [[f64; 5]; 5] = [
    [0.0, 0.0, 1.0, 0.0, 0.0],
    [0.0, -0.5, 0.0, 0.5, 0.0],
    [0.0, 1.0, -2.0, 1.0, 0.0],
    [-0.5, 1.0, 0.0, -1.0, 0.5],
    [1.0, -4.0, 6.0, -4.0, 1.0],
];

/// Richardson extrapolation of an estimate whose error is even in `h`.
fn richardson(est: impl Fn(f64) -> f64, h0: f64, levels: usize) -> Result<f64> {
    let mut table: Vec<f64> = (0..=levels).map(|j| est(h0 / 2f64.powi(j as i32))).collect();
    for col in 1..=levels {
        let f = 4f64.powi(col as i32);
        for j in (col..=levels).rev() {
            table[j] = (f * table[j] - table[j - 1]) / (f - 1.0);
        }
    }
    let v = table[levels];
    if !v.is_finite() {
        return Err(Error::NonConvergence("finite-difference step-size breakdown".into()));
    }
    Ok(v)
}

/// Scale of the quadrature `1/sigma`-type step.
fn quadrature_step(s: &StateModel, theta: f64, cfg: &OracleConfig) -> f64 {
    let (sn, c) = theta.sin_cos();
    let g2 = s.second_moment_matrix();
    cfg.fd_step / g2.quad_form(c, sn).max(0.25).sqrt()
}

/// Which characteristic function to differentiate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentKind {
    /// `<X_theta^m>`.
    Quadrature { theta: f64, m: u32 },
    /// Husimi average of `x^k p^l`.
    Husimi { k: u32, l: u32 },
}

/// Moments by Richardson-extrapolated central differences of the
/// characteristic functions.
pub fn cf_finite_difference_moment(s: &StateModel, kind: MomentKind, cfg: &OracleConfig) -> Result<f64> {
    cfg.validate()?;
    match kind {
        MomentKind::Quadrature { theta, m } => {
            if m > 4 {
                return Err(Error::InvalidParameter(format!("finite-difference order {m} > 4")));
            }
            let w = STENCIL[m as usize];
            let est = |h: f64| -> f64 {
                let mut d = Complex64::new(0.0, 0.0);
                for (j, wj) in w.iter().enumerate() {
                    if *wj != 0.0 {
                        d += *wj * quadrature_cf(s, theta, (j as f64 - 2.0) * h);
                    }
                }
                // <X^m> = (-i d/dk)^m phi(0)
                (d * Complex64::new(0.0, -1.0).powu(m)).re / h.powi(m as i32)
            };
            richardson(est, quadrature_step(s, theta, cfg), cfg.richardson_levels)
        }
        MomentKind::Husimi { k, l } => {
            if k + l > 4 {
                return Err(Error::InvalidParameter(format!("finite-difference order {} > 4", k + l)));
            }
            let (wu, wv) = (STENCIL[k as usize], STENCIL[l as usize]);
            let est = |h: f64| -> f64 {
                let mut d = 0.0;
                for (i, a) in wu.iter().enumerate() {
                    if *a == 0.0 {
                        continue;
                    }
                    for (j, b) in wv.iter().enumerate() {
                        if *b != 0.0 {
                            d += a * b * husimi_cf(s, (i as f64 - 2.0) * h, (j as f64 - 2.0) * h);
                        }
                    }
                }
                d / h.powi((k + l) as i32)
            };
            let (_, hi, _) = spectral(&s.second_moment_matrix().add_scalar(0.5));
            richardson(est, cfg.fd_step / hi.sqrt(), cfg.richardson_levels)
        }
    }
}

const FISHER_TOL: f64 = 1e-11;
const FISHER_START: usize = 257;
const FISHER_MAX: usize = (1 << 17) + 1;

/// Scaled homodyne Fisher matrix by composite Simpson over `[0, pi]`.
pub fn numeric_fisher(s: &StateModel, order: MomentOrder) -> Result<ScaledFisher> {
    let eng = QuadratureMomentEngine::new(s);
    let integrand = |th: f64| -> [f64; 6] {
        let (sn, c) = th.sin_cos();
        match order {
            MomentOrder::First => {
                let v = eng.variance(th);
                [c * c / v, c * sn / v, sn * sn / v, 0.0, 0.0, 0.0]
            }
            MomentOrder::Second => {
                let v = eng.variance_sq(th);
                let u = [c * c, SQRT_2 * c * sn, sn * sn];
                [u[0] * u[0] / v, u[0] * u[1] / v, u[0] * u[2] / v, u[1] * u[1] / v, u[1] * u[2] / v, u[2] * u[2] / v]
            }
        }
    };
    let mut n = FISHER_START;
    let mut prev: Option<[f64; 6]> = None;
    while n <= FISHER_MAX {
        let h = PI / (n - 1) as f64;
        let w = simpson_weights(n, h);
        let mut acc = [0.0; 6];
        for (i, wi) in w.iter().enumerate() {
            let v = integrand(i as f64 * h);
            for e in 0..6 {
                acc[e] += wi * v[e] / PI;
            }
        }
        if acc.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateVariance { theta: f64::NAN });
        }
        if let Some(p) = prev {
            let scale = acc.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let d = acc.iter().zip(&p).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if d <= FISHER_TOL * scale {
                return Ok(match order {
                    MomentOrder::First => ScaledFisher::First(Matrix2::new(acc[0], acc[1], acc[1], acc[2])),
                    MomentOrder::Second => ScaledFisher::Second(Matrix3::new(
                        acc[0], acc[1], acc[2], acc[1], acc[3], acc[4], acc[2], acc[4], acc[5],
                    )),
                });
            }
        }
        prev = Some(acc);
        n = 2 * n - 1;
    }
    Err(Error::NonConvergence("Simpson Fisher integral".into()))
}
