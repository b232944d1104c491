use num_complex::Complex64;

use super::{Parity, StateModel};
use crate::error::{Error, Result};
use crate::special::{hyp1f1_scaled, laguerre, ln_factorial};

/// Default tolerated norm deficit of a truncated expansion.
pub const DEFAULT_TRUNCATION: f64 = 1e-10;

/// Truncated Fock-basis amplitudes `c_0..=c_N` of a pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct FockExpansion {
    pub coefficients: Vec<Complex64>,
}

impl FockExpansion {
    pub fn new(s: &StateModel, cutoff: usize, eps_trunc: f64) -> Result<Self> {
        let n = cutoff + 1;
        let coefficients = match *s {
            StateModel::Gaussian { .. } => {
                return Err(Error::InvalidParameter(
                    "Fock expansion is only available for the pure non-Gaussian families".into(),
                ))
            }
            StateModel::Fock { n: k } => {
                let mut c = vec![Complex64::new(0.0, 0.0); n];
                if (k as usize) < n {
                    c[k as usize] = Complex64::new(1.0, 0.0);
                }
                c
            }
            StateModel::EvenOddCoherent { alpha0, parity } => cat(alpha0, parity, n),
            StateModel::DisplacedFock { alpha0, m } => displaced_fock(alpha0, m, n),
            StateModel::PhotonAddedCoherent { alpha0, m } => photon_added(alpha0, m, n),
        };
        let e = Self { coefficients };
        let deficit = 1.0 - e.norm_sq();
        if deficit > eps_trunc {
            return Err(Error::CutoffTooSmall { cutoff, deficit });
        }
        Ok(e)
    }

    pub fn cutoff(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn norm_sq(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Amplitudes of the state seen at local-oscillator phase `theta`:
    /// `c_n e^{-i n theta}`.
    pub fn rotated(&self, theta: f64) -> Vec<Complex64> {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(n, c)| c * Complex64::from_polar(1.0, -(n as f64) * theta))
            .collect()
    }
}

/// Coherent amplitudes `e^{-|a|^2/2} a^n / sqrt(n!)`, summed in log space.
fn coherent(alpha: Complex64, len: usize) -> Vec<Complex64> {
    let r = alpha.norm();
    let phase = alpha.arg();
    (0..len)
        .map(|n| {
            if r == 0.0 {
                return Complex64::new(if n == 0 { 1.0 } else { 0.0 }, 0.0);
            }
            let ln = -0.5 * r * r + n as f64 * r.ln() - 0.5 * ln_factorial(n as u32);
            Complex64::from_polar(ln.exp(), n as f64 * phase)
        })
        .collect()
}

fn cat(alpha: Complex64, parity: Parity, len: usize) -> Vec<Complex64> {
    let x = alpha.norm_sqr();
    // 1 +- e^{-2x} with the odd case free of cancellation.
    let denom = match parity {
        Parity::Even => 1.0 + (-2.0 * x).exp(),
        Parity::Odd => -(-2.0 * x).exp_m1(),
    };
    let norm = (2.0 * denom).sqrt().recip();
    let keep = match parity {
        Parity::Even => 0,
        Parity::Odd => 1,
    };
    coherent(alpha, len)
        .into_iter()
        .enumerate()
        .map(|(n, c)| if n % 2 == keep { c * (2.0 * norm) } else { Complex64::new(0.0, 0.0) })
        .collect()
}

/// `<n| D(alpha) |m>` through associated Laguerre polynomials.
fn displaced_fock(alpha: Complex64, m: u32, len: usize) -> Vec<Complex64> {
    let x = alpha.norm_sqr();
    let r = alpha.norm();
    let phase = alpha.arg();
    (0..len)
        .map(|n| {
            let n = n as u32;
            if r == 0.0 {
                return Complex64::new(if n == m { 1.0 } else { 0.0 }, 0.0);
            }
            let (lo, hi) = (n.min(m), n.max(m));
            let d = hi - lo;
            let lag = laguerre(lo, d as f64, x);
            let ln = 0.5 * (ln_factorial(lo) - ln_factorial(hi)) + d as f64 * r.ln() - 0.5 * x;
            let mag = ln.exp() * lag;
            if n >= m {
                Complex64::from_polar(mag, d as f64 * phase)
            } else {
                // (-alpha*)^{m-n}
                let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
                Complex64::from_polar(sign * mag, -(d as f64) * phase)
            }
        })
        .collect()
}

/// `c_n = N e^{-|a|^2/2} sqrt(n!) a^{n-m} / (n-m)!` for `n >= m`.
fn photon_added(alpha: Complex64, m: u32, len: usize) -> Vec<Complex64> {
    let x = alpha.norm_sqr();
    let r = alpha.norm();
    let phase = alpha.arg();
    // N^2 e^{-x} m! = 1 / 1F1(m+1; 1; x)
    let ln_hyp = if x == 0.0 { 0.0 } else { x + hyp1f1_scaled(m as f64 + 1.0, 1.0, x).ln() };
    (0..len)
        .map(|n| {
            let n = n as u32;
            if n < m {
                return Complex64::new(0.0, 0.0);
            }
            let d = n - m;
            if r == 0.0 {
                return Complex64::new(if d == 0 { 1.0 } else { 0.0 }, 0.0);
            }
            let ln = -0.5 * ln_hyp + 0.5 * (ln_factorial(n) - ln_factorial(m)) + d as f64 * r.ln()
                - ln_factorial(d);
            Complex64::from_polar(ln.exp(), d as f64 * phase)
        })
        .collect()
}
