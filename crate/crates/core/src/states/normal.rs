use num_complex::Complex64;
use std::f64::consts::SQRT_2;

use super::moments::gaussian_raw_moments;
use super::Parity;
use crate::phase_space::{CovarianceMatrix, FirstMoments};
use crate::special::{binomial, falling};

const MAX_DEG: usize = 4;

/// Normally ordered moments `n[j][k] = <a^dag^j a^k>` for `j + k <= 4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalTable {
    n: [[Complex64; MAX_DEG + 1]; MAX_DEG + 1],
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

impl NormalTable {
    fn build(mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut n = [[zero(); MAX_DEG + 1]; MAX_DEG + 1];
        for j in 0..=MAX_DEG {
            for k in 0..=(MAX_DEG - j) {
                n[j][k] = f(j, k);
            }
        }
        Self { n }
    }

    /// `<a^dag^j a^k>`; panics beyond total degree 4.
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        assert!(j + k <= MAX_DEG, "normal moment of degree {} requested", j + k);
        self.n[j][k]
    }

    pub fn fock(n: u32) -> Self {
        Self::build(|j, k| {
            if j == k {
                Complex64::new(falling(n, k as u32), 0.0)
            } else {
                zero()
            }
        })
    }

    /// `<a^dag^j a^k>` of `D(alpha) |m>`.
    pub fn displaced_fock(alpha: Complex64, m: u32) -> Self {
        let ac = alpha.conj();
        Self::build(|j, k| {
            let mut s = zero();
            for p in 0..=j.min(k).min(m as usize) {
                let c = binomial(j as u32, p as u32) * binomial(k as u32, p as u32) * falling(m, p as u32);
                s += ac.powu((j - p) as u32) * alpha.powu((k - p) as u32) * c;
            }
            s
        })
    }

    /// Even (`+`) and odd (`-`) superpositions of `|alpha>` and `|-alpha>`.
    pub fn cat(alpha: Complex64, parity: Parity) -> Self {
        let x = alpha.norm_sqr();
        let e = (-2.0 * x).exp();
        // 1 - e^{-2|alpha|^2} without cancellation.
        let one_minus = -(-2.0 * x).exp_m1();
        let ac = alpha.conj();
        Self::build(|j, k| {
            if (j + k) % 2 == 1 {
                return zero();
            }
            // n_jk = alpha*^j alpha^k (1 +- (-1)^k e) / (1 +- e)
            let k_odd = k % 2 == 1;
            let ratio = match (parity, k_odd) {
                (Parity::Even, false) | (Parity::Odd, false) => 1.0,
                (Parity::Even, true) => one_minus / (1.0 + e),
                (Parity::Odd, true) => (1.0 + e) / one_minus,
            };
            ac.powu(j as u32) * alpha.powu(k as u32) * ratio
        })
    }

    /// `<a^dag^j a^k>` of the normalized `a^dag^m |alpha>`.
    pub fn photon_added(alpha: Complex64, m: u32) -> Self {
        let r = alpha.norm();
        let phase = if r > 0.0 { alpha / r } else { Complex64::new(1.0, 0.0) };
        // K(p, q) = <r| a^p a^dag^q |r> for real r.
        let k_inner = |p: u32, q: u32| -> f64 {
            (0..=p.min(q))
                .map(|t| {
                    binomial(p, t) * binomial(q, t) * falling(t, t) * r.powi((p + q - 2 * t) as i32)
                })
                .sum::<f64>()
        };
        let norm = k_inner(m, m);
        Self::build(|j, k| {
            let (j, k) = (j as u32, k as u32);
            let mut s = 0.0;
            for sj in 0..=j.min(m) {
                let left = binomial(j, sj) * falling(m, sj) * r.powi((j - sj) as i32);
                for rk in 0..=k.min(m) {
                    let right = binomial(k, rk) * falling(m, rk) * r.powi((k - rk) as i32);
                    s += left * right * k_inner(m - sj, m - rk);
                }
            }
            phase.powi(k as i32 - j as i32) * (s / norm)
        })
    }

    /// Formal normal-ordered moments of a Gaussian: with `alpha = (x + i p)/sqrt2`,
    /// `<a^dag^j a^k>` is the average of `alpha*^j alpha^k` over a normal
    /// distribution with mean `r` and (formal) covariance `G - I/2`.
    pub fn gaussian(r: FirstMoments, g: CovarianceMatrix) -> Self {
        let raw = gaussian_raw_moments(r, g.add_scalar(-0.5));
        // (x - i p)^j (x + i p)^k expanded as a polynomial in x and p.
        Self::build(|j, k| {
            let mut poly = [[zero(); MAX_DEG + 1]; MAX_DEG + 1];
            poly[0][0] = Complex64::new(1.0, 0.0);
            let mut deg = 0;
            for factor in std::iter::repeat_n(-1.0, j).chain(std::iter::repeat_n(1.0, k)) {
                let mut next = [[zero(); MAX_DEG + 1]; MAX_DEG + 1];
                for a in 0..=deg {
                    for b in 0..=(deg - a) {
                        let c = poly[a][b];
                        next[a + 1][b] += c;
                        next[a][b + 1] += c * Complex64::new(0.0, factor);
                    }
                }
                poly = next;
                deg += 1;
            }
            let mut s = zero();
            for a in 0..=deg {
                for b in 0..=(deg - a) {
                    s += poly[a][b] * raw[a][b];
                }
            }
            s / SQRT_2.powi(deg as i32)
        })
    }

    pub fn first_moments(&self) -> FirstMoments {
        let a = self.get(0, 1);
        FirstMoments::new(SQRT_2 * a.re, SQRT_2 * a.im)
    }

    /// `G2 = Re <R R^T>`.
    pub fn second_moment_matrix(&self) -> CovarianceMatrix {
        let a2 = self.get(0, 2);
        let n = self.get(1, 1).re;
        CovarianceMatrix::symmetric(a2.re + n + 0.5, a2.im, -a2.re + n + 0.5)
    }

    /// Anti-normally ordered moment `<a^p a^dag^q>`, i.e. the Husimi average
    /// of `alpha^p alpha*^q`.
    pub fn anti_normal(&self, p: usize, q: usize) -> Complex64 {
        let mut s = zero();
        for t in 0..=p.min(q) {
            let c = binomial(p as u32, t as u32) * binomial(q as u32, t as u32) * falling(t as u32, t as u32);
            s += self.get(q - t, p - t) * c;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::hyp1f1_scaled;
    use approx::assert_relative_eq;

    fn close(a: &NormalTable, b: &NormalTable, tol: f64) {
        for j in 0..=4 {
            for k in 0..=(4 - j) {
                let (x, y) = (a.get(j, k), b.get(j, k));
                assert!((x - y).norm() <= tol * (1.0 + y.norm()), "({j},{k}): {x} vs {y}");
            }
        }
    }

    #[test]
    fn coherent_is_product_of_amplitudes() {
        let a = Complex64::new(0.7, -0.4);
        let t = NormalTable::displaced_fock(a, 0);
        for j in 0..=4usize {
            for k in 0..=(4 - j) {
                let expect = a.conj().powu(j as u32) * a.powu(k as u32);
                assert!((t.get(j, k) - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn families_agree_on_coherent_limits() {
        let a = Complex64::new(0.9, 0.3);
        let coh = NormalTable::displaced_fock(a, 0);
        close(&NormalTable::photon_added(a, 0), &coh, 1e-13);
        let r = FirstMoments::new(SQRT_2 * a.re, SQRT_2 * a.im);
        close(&NormalTable::gaussian(r, CovarianceMatrix::scalar(0.5)), &coh, 1e-13);
        close(&NormalTable::displaced_fock(Complex64::new(0.0, 0.0), 3), &NormalTable::fock(3), 0.0);
        close(&NormalTable::photon_added(Complex64::new(0.0, 0.0), 3), &NormalTable::fock(3), 1e-14);
    }

    #[test]
    fn photon_added_single_photon_mean_number() {
        // <a^dag a> of a^dag|alpha>/norm = (x^2 + 3x + 1)/(1 + x) for x = |alpha|^2.
        let alpha = 1.3f64;
        let x = alpha * alpha;
        let t = NormalTable::photon_added(Complex64::new(alpha, 0.0), 1);
        assert_relative_eq!(t.get(1, 1).re, (x * x + 3.0 * x + 1.0) / (1.0 + x), max_relative = 1e-14);
    }

    #[test]
    fn photon_added_normalization_is_laguerre() {
        // <alpha| a^m a^dag^m |alpha> = m! e^{-x} 1F1(m+1; 1; x); the table is
        // built from the polynomial form, so unit trace checks the identity.
        for (alpha, m) in [(0.3f64, 2u32), (2.0, 5), (6.0, 9)] {
            let t = NormalTable::photon_added(Complex64::new(alpha, 0.0), m);
            assert_relative_eq!(t.get(0, 0).re, 1.0, max_relative = 1e-13);
            let x = alpha * alpha;
            let poly: f64 = (0..=m)
                .map(|t| binomial(m, t).powi(2) * falling(t, t) * x.powi((m - t) as i32))
                .sum();
            let hyp = falling(m, m) * hyp1f1_scaled(m as f64 + 1.0, 1.0, x);
            assert_relative_eq!(poly, hyp, max_relative = 1e-12);
        }
    }

    #[test]
    fn odd_cat_tends_to_single_photon() {
        let t = NormalTable::cat(Complex64::new(1e-5, 0.0), Parity::Odd);
        close(&t, &NormalTable::fock(1), 1e-9);
        let t = NormalTable::cat(Complex64::new(1e-5, 0.0), Parity::Even);
        close(&t, &NormalTable::fock(0), 1e-9);
    }

    #[test]
    fn thermal_gaussian_number_moments() {
        // Thermal state with mean photon number nbar: <a^dag^k a^k> = k! nbar^k.
        let nbar = 1.7;
        let t = NormalTable::gaussian(FirstMoments::default(), CovarianceMatrix::scalar(nbar + 0.5));
        assert_relative_eq!(t.get(1, 1).re, nbar, max_relative = 1e-14);
        assert_relative_eq!(t.get(2, 2).re, 2.0 * nbar * nbar, max_relative = 1e-14);
        assert!(t.get(0, 2).norm() < 1e-15);
    }

    #[test]
    fn anti_normal_vacuum() {
        let t = NormalTable::fock(0);
        // <a^p a^dag^p> = p! in the vacuum.
        assert_eq!(t.anti_normal(2, 2).re, 2.0);
        assert_eq!(t.anti_normal(1, 1).re, 1.0);
    }
}
