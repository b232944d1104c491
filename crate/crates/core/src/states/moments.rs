use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{NormalTable, StateModel};
use crate::phase_space::{het_shift, CovarianceMatrix, FirstMoments};
use crate::special::binomial;

/// `<X_theta^m>` for `m = 1..=4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMomentTable {
    pub theta: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

impl QuadratureMomentTable {
    pub fn variance(&self) -> f64 {
        self.m2 - self.m1 * self.m1
    }

    /// Variance of `X_theta^2`.
    pub fn variance_sq(&self) -> f64 {
        self.m4 - self.m2 * self.m2
    }

    pub fn get(&self, m: usize) -> f64 {
        match m {
            0 => 1.0,
            1 => self.m1,
            2 => self.m2,
            3 => self.m3,
            4 => self.m4,
            _ => panic!("quadrature moment of order {m} is not tabulated"),
        }
    }
}

/// Husimi averages of `x^k p^l`, `k + l <= 4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HusimiMomentSet {
    pub mx: f64,
    pub mp: f64,
    pub mxx: f64,
    pub mxp: f64,
    pub mpp: f64,
    pub mx4: f64,
    pub mx2p2: f64,
    pub mp4: f64,
    pub mx3p: f64,
    pub mxp3: f64,
    grid: [[f64; 5]; 5],
}

impl HusimiMomentSet {
    fn from_grid(grid: [[f64; 5]; 5]) -> Self {
        Self {
            mx: grid[1][0],
            mp: grid[0][1],
            mxx: grid[2][0],
            mxp: grid[1][1],
            mpp: grid[0][2],
            mx4: grid[4][0],
            mx2p2: grid[2][2],
            mp4: grid[0][4],
            mx3p: grid[3][1],
            mxp3: grid[1][3],
            grid,
        }
    }

    pub fn from_state(s: &StateModel) -> Self {
        match *s {
            StateModel::Gaussian { r0, g } => Self::from_grid(gaussian_raw_moments(r0, het_shift(&g))),
            _ => Self::from_normal(&s.normal_table()),
        }
    }

    /// Husimi moments from normally ordered moments via anti-normal reordering.
    pub fn from_normal(t: &NormalTable) -> Self {
        let mut grid = [[0.0; 5]; 5];
        for k in 0..=4usize {
            for l in 0..=(4 - k) {
                // x^k p^l = 2^{-(k+l)/2} (-i)^l (alpha + alpha*)^k (alpha - alpha*)^l
                let mut s = Complex64::new(0.0, 0.0);
                for a in 0..=k {
                    for b in 0..=l {
                        let sign = if (l - b) % 2 == 0 { 1.0 } else { -1.0 };
                        let c = binomial(k as u32, a as u32) * binomial(l as u32, b as u32) * sign;
                        let p = a + b;
                        let q = k + l - p;
                        s += t.anti_normal(p, q) * c;
                    }
                }
                let pre = Complex64::new(0.0, -1.0).powu(l as u32) / 2f64.powf((k + l) as f64 / 2.0);
                grid[k][l] = (s * pre).re;
            }
        }
        Self::from_grid(grid)
    }

    /// Husimi average of `x^k p^l`; panics beyond total degree 4.
    pub fn moment(&self, k: usize, l: usize) -> f64 {
        assert!(k + l <= 4, "Husimi moment of degree {} is not tabulated", k + l);
        self.grid[k][l]
    }

    pub fn mean(&self) -> FirstMoments {
        FirstMoments::new(self.mx, self.mp)
    }

    /// Husimi covariance, equal to `G + I/2`.
    pub fn covariance(&self) -> CovarianceMatrix {
        CovarianceMatrix::symmetric(
            self.mxx - self.mx * self.mx,
            self.mxp - self.mx * self.mp,
            self.mpp - self.mp * self.mp,
        )
    }

    /// Uncentered second moments, equal to `G2 + I/2`.
    pub fn second_moments(&self) -> CovarianceMatrix {
        CovarianceMatrix::symmetric(self.mxx, self.mxp, self.mpp)
    }

    pub fn var_x2(&self) -> f64 {
        self.mx4 - self.mxx * self.mxx
    }

    pub fn var_p2(&self) -> f64 {
        self.mp4 - self.mpp * self.mpp
    }

    pub fn var_xp(&self) -> f64 {
        self.mx2p2 - self.mxp * self.mxp
    }
}

/// Raw moments `E[x^a p^b]`, `a + b <= 4`, of a bivariate normal law with the
/// given mean and covariance. The covariance may be indefinite (formal use).
pub fn gaussian_raw_moments(mean: FirstMoments, cov: CovarianceMatrix) -> [[f64; 5]; 5] {
    let mut e = [[0.0; 5]; 5];
    e[0][0] = 1.0;
    // Stein recursion on the x index, then on p for a = 0.
    for b in 1..=4usize {
        let mut v = mean.rp * e[0][b - 1];
        if b >= 2 {
            v += (b - 1) as f64 * cov.gpp * e[0][b - 2];
        }
        e[0][b] = v;
    }
    for a in 1..=4usize {
        for b in 0..=(4 - a) {
            let mut v = mean.rx * e[a - 1][b];
            if a >= 2 {
                v += (a - 1) as f64 * cov.gxx * e[a - 2][b];
            }
            if b >= 1 {
                v += b as f64 * cov.gxp * e[a - 1][b - 1];
            }
            e[a][b] = v;
        }
    }
    e
}

/// Evaluates `<X_theta^m>` at many angles for one state.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureMomentEngine {
    inner: Inner,
}

#[derive(Debug, Clone, Copy)]
enum Inner {
    Gaussian { r: FirstMoments, g: CovarianceMatrix },
    Normal(NormalTable),
}

impl QuadratureMomentEngine {
    pub fn new(s: &StateModel) -> Self {
        let inner = match *s {
            StateModel::Gaussian { r0, g } => Inner::Gaussian { r: r0, g },
            _ => Inner::Normal(s.normal_table()),
        };
        Self { inner }
    }

    pub fn table(&self, theta: f64) -> QuadratureMomentTable {
        let [m1, m2, m3, m4] = self.raw(theta);
        QuadratureMomentTable { theta, m1, m2, m3, m4 }
    }

    /// `[<X>, <X^2>, <X^3>, <X^4>]` at angle `theta`.
    pub fn raw(&self, theta: f64) -> [f64; 4] {
        match self.inner {
            Inner::Gaussian { r, g } => {
                let (s, c) = theta.sin_cos();
                let mu = r.along(theta);
                let v = g.quad_form(c, s);
                let mu2 = mu * mu;
                [mu, mu2 + v, mu * (mu2 + 3.0 * v), mu2 * mu2 + 6.0 * mu2 * v + 3.0 * v * v]
            }
            Inner::Normal(t) => {
                // e^{i q theta} for q = -4..=4
                let mut rot = [Complex64::new(0.0, 0.0); 9];
                for (i, q) in (-4i32..=4).enumerate() {
                    rot[i] = Complex64::from_polar(1.0, q as f64 * theta);
                }
                // Normal-ordered powers :(b + b^dag)^q: with b = a e^{-i theta}.
                let mut nq = [0.0f64; 5];
                for (q, slot) in nq.iter_mut().enumerate() {
                    let mut s = Complex64::new(0.0, 0.0);
                    for j in 0..=q {
                        let shift = 2 * j as i32 - q as i32;
                        s += rot[(shift + 4) as usize] * t.get(j, q - j) * binomial(q as u32, j as u32);
                    }
                    *slot = s.re;
                }
                // (b + b^dag)^m = sum_s m!/(s! 2^s (m-2s)!) :(b + b^dag)^{m-2s}:
                let m1 = nq[1];
                let m2 = nq[2] + 1.0;
                let m3 = nq[3] + 3.0 * nq[1];
                let m4 = nq[4] + 6.0 * nq[2] + 3.0;
                [m1 / 2f64.sqrt(), m2 / 2.0, m3 / 8f64.sqrt(), m4 / 4.0]
            }
        }
    }

    /// Variance of `X_theta`.
    pub fn variance(&self, theta: f64) -> f64 {
        match self.inner {
            Inner::Gaussian { g, .. } => {
                let (s, c) = theta.sin_cos();
                g.quad_form(c, s)
            }
            Inner::Normal(_) => {
                let [m1, m2, ..] = self.raw(theta);
                m2 - m1 * m1
            }
        }
    }

    /// Variance of `X_theta^2`.
    pub fn variance_sq(&self, theta: f64) -> f64 {
        match self.inner {
            Inner::Gaussian { r, g } => {
                let (s, c) = theta.sin_cos();
                let mu = r.along(theta);
                let v = g.quad_form(c, s);
                2.0 * v * (v + 2.0 * mu * mu)
            }
            Inner::Normal(_) => {
                let [_, m2, _, m4] = self.raw(theta);
                m4 - m2 * m2
            }
        }
    }
}
