//! Scaled Fisher matrices, scaled Cramer-Rao bounds (sCRBs) for homodyne and
//! heterodyne moment tomography, performance ratios and the 1-D searches
//! over displacement amplitude.

use nalgebra::{Matrix2, Matrix3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::phase_space::{spectral, vec_rotation, CovarianceMatrix, FirstMoments};
use crate::states::{Parity, QuadratureMomentEngine, StateModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentOrder {
    First,
    Second,
}

/// How a Fisher matrix or bound was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
}

/// Per-sample homodyne Fisher matrix, scaled by the total sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaledFisher {
    /// Parameters `(<X>, <P>)`.
    First(Matrix2<f64>),
    /// Parameters `vec(G2) = (<X^2>, sqrt2 <{X,P}>/2, <P^2>)`.
    Second(Matrix3<f64>),
}

impl ScaledFisher {
    pub fn order(&self) -> MomentOrder {
        match self {
            ScaledFisher::First(_) => MomentOrder::First,
            ScaledFisher::Second(_) => MomentOrder::Second,
        }
    }

    /// `Tr F^{-1}`, the scaled Cramer-Rao bound.
    pub fn trace_inverse(&self) -> Result<f64> {
        match self {
            ScaledFisher::First(f) => f.try_inverse().map(|i| i.trace()).ok_or(Error::Singular("Fisher matrix")),
            ScaledFisher::Second(f) => f.try_inverse().map(|i| i.trace()).ok_or(Error::Singular("Fisher matrix")),
        }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        match self {
            ScaledFisher::First(f) => (0..2).map(|i| (0..2).map(|j| f[(i, j)]).collect()).collect(),
            ScaledFisher::Second(f) => (0..3).map(|i| (0..3).map(|j| f[(i, j)]).collect()).collect(),
        }
    }

    pub fn is_positive_definite(&self) -> bool {
        match self {
            ScaledFisher::First(f) => f.cholesky().is_some(),
            ScaledFisher::Second(f) => f.cholesky().is_some(),
        }
    }

    /// Largest entrywise relative deviation, normalized by the largest entry.
    pub fn max_rel_diff(&self, o: &Self) -> f64 {
        let (a, b) = (self.rows(), o.rows());
        let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs() / scale))
    }
}

/// All four scaled bounds and the two performance ratios of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrbReport {
    pub h1_hom: f64,
    pub h1_het: f64,
    pub h2_hom: f64,
    pub h2_het: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub methods: CrbMethods,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrbMethods {
    pub h1_hom: Method,
    pub h1_het: Method,
    pub h2_hom: Method,
    pub h2_het: Method,
}

/// Relative stopping tolerance of the periodic trapezoid rule.
const QUAD_TOL: f64 = 1e-14;
/// Accepted once successive refinements stop improving, i.e. the rounding
/// floor of the moment cancellation is reached (large displacements).
const QUAD_NOISE_TOL: f64 = 1e-9;
const QUAD_NOISE_MIN_NODES: usize = 2048;
const QUAD_MIN_NODES: usize = 64;
const QUAD_MAX_NODES: usize = 1 << 17;

/// `(1/pi) int_0^pi f(theta) d theta` entrywise, by the trapezoid rule with
/// node doubling. The integrands are smooth and pi-periodic, so convergence
/// is spectral.
pub fn periodic_average<const D: usize>(f: impl Fn(f64) -> Result<[f64; D]>) -> Result<[f64; D]> {
    let mut n = QUAD_MIN_NODES;
    let mut sum = [0.0; D];
    for k in 0..n {
        let v = f(k as f64 * PI / n as f64)?;
        for i in 0..D {
            sum[i] += v[i];
        }
    }
    let mut prev = sum.map(|s| s / n as f64);
    let mut prev_delta = f64::INFINITY;
    while n < QUAD_MAX_NODES {
        for k in 0..n {
            let v = f((k as f64 + 0.5) * PI / n as f64)?;
            for i in 0..D {
                sum[i] += v[i];
            }
        }
        n *= 2;
        let cur = sum.map(|s| s / n as f64);
        let scale = cur.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let delta = cur.iter().zip(&prev).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if delta <= QUAD_TOL * scale {
            return Ok(cur);
        }
        if n >= QUAD_NOISE_MIN_NODES && delta <= QUAD_NOISE_TOL * scale && delta > 0.25 * prev_delta {
            return Ok(cur);
        }
        prev = cur;
        prev_delta = delta;
    }
    Err(Error::NonConvergence(format!("periodic quadrature with {n} nodes")))
}

/// Entries `(11, 12, 13, 22, 23, 33)` of a symmetric 3x3 matrix.
fn sym3(e: [f64; 6]) -> Matrix3<f64> {
    Matrix3::new(e[0], e[1], e[2], e[1], e[3], e[4], e[2], e[4], e[5])
}

fn check_variance(v: f64, scale: f64, theta: f64) -> Result<()> {
    if !(v > 1e-13 * scale.max(1e-300)) {
        return Err(Error::DegenerateVariance { theta });
    }
    Ok(())
}

/// `F1 = (1/pi) int u u^T / var(X_theta) d theta`.
pub fn fisher_hom_first(s: &StateModel) -> Result<ScaledFisher> {
    let eng = QuadratureMomentEngine::new(s);
    let e = periodic_average(|th| {
        let [m1, m2, ..] = eng.raw(th);
        let v = eng.variance(th);
        check_variance(v, m2.max(m1 * m1), th)?;
        let (sn, c) = th.sin_cos();
        Ok([c * c / v, c * sn / v, sn * sn / v])
    })?;
    Ok(ScaledFisher::First(Matrix2::new(e[0], e[1], e[1], e[2])))
}

/// `F2 = (1/pi) int vec(m) vec(m)^T / var(X_theta^2) d theta`.
pub fn fisher_hom_second(s: &StateModel, method: Method) -> Result<ScaledFisher> {
    match method {
        Method::Quadrature => fisher_hom_second_quadrature(s),
        Method::ClosedForm => fisher_hom_second_closed(s),
    }
}

fn fisher_hom_second_quadrature(s: &StateModel) -> Result<ScaledFisher> {
    let eng = QuadratureMomentEngine::new(s);
    let e = periodic_average(|th| {
        let [_, m2, _, m4] = eng.raw(th);
        let v = eng.variance_sq(th);
        check_variance(v, m4.max(m2 * m2), th)?;
        let (sn, c) = th.sin_cos();
        let u = [c * c, SQRT_2 * c * sn, sn * sn];
        Ok([
            u[0] * u[0] / v,
            u[0] * u[1] / v,
            u[0] * u[2] / v,
            u[1] * u[1] / v,
            u[1] * u[2] / v,
            u[2] * u[2] / v,
        ])
    })?;
    Ok(ScaledFisher::Second(sym3(e)))
}

/// Parameters `(m, l, phi)` with `var(X_theta^2) = m + l cos 2(theta - phi)`
/// for the families where this form holds.
pub fn second_moment_variance_form(s: &StateModel) -> Option<(f64, f64, f64)> {
    match *s {
        StateModel::Fock { n } => {
            let n = n as f64;
            Some((0.5 * (n * n + n + 1.0), 0.0, 0.0))
        }
        StateModel::EvenOddCoherent { alpha0, parity } => {
            let x = alpha0.norm_sqr();
            let e = (-2.0 * x).exp();
            let one_minus = -(-2.0 * x).exp_m1();
            let (t, tail) = match parity {
                // tanh(x) and 4 x^2 e^{-2x}/(1 + e^{-2x})^2
                Parity::Even => (one_minus / (1.0 + e), 4.0 * x * x * e / ((1.0 + e) * (1.0 + e))),
                Parity::Odd => ((1.0 + e) / one_minus, -4.0 * x * x * e / (one_minus * one_minus)),
            };
            Some((0.5 + 2.0 * x * t + tail, 2.0 * x, alpha0.arg()))
        }
        StateModel::DisplacedFock { alpha0, m } => {
            let x = alpha0.norm_sqr();
            let m = m as f64;
            Some((0.5 * (m * m + m + 1.0) + x * (4.0 * m + 2.0), 2.0 * x * (2.0 * m + 1.0), alpha0.arg()))
        }
        _ => None,
    }
}

/// Fisher matrix for `var(X_theta^2) = m + l cos 2(theta - phi)`.
fn fisher_from_ml(m: f64, l: f64, phi: f64) -> Matrix3<f64> {
    let d = ((m - l) * (m + l)).sqrt();
    let i0 = 1.0 / d;
    let i1 = -l / (d * (d + m));
    let i2 = m / (d * (d + m));
    let f0 = sym3([
        0.25 * (i0 + 2.0 * i1 + i2),
        0.0,
        0.25 * (i0 - i2),
        0.5 * (i0 - i2),
        0.0,
        0.25 * (i0 - 2.0 * i1 + i2),
    ]);
    rotate_fisher(&f0, phi)
}

fn rotate_fisher(f: &Matrix3<f64>, phi: f64) -> Matrix3<f64> {
    let q = vec_rotation(phi);
    q * f * q.transpose()
}

/// Relative size below which displacement or anisotropy is treated as
/// exactly zero in the Gaussian closed form.
const GAUSS_DEGENERACY: f64 = 1e-13;

/// Closed-form homodyne second-moment Fisher matrix of a Gaussian state,
/// from the residues of `var(X_theta^2) = 2 sigma^2 (sigma^2 + 2 mu^2)`
/// inside the unit circle.
pub fn gaussian_fisher_second(r0: FirstMoments, g: CovarianceMatrix) -> Matrix3<f64> {
    let a = 0.5 * g.trace();
    let b = 0.5 * (g.gxx - g.gpp);
    let c = g.gxp;
    let r2 = r0.norm_sq();
    let w1 = a + r2;
    let w2 = b + r0.rx * r0.rx - r0.rp * r0.rp;
    let w3 = c + 2.0 * r0.rx * r0.rp;
    let aniso = b.hypot(c);
    let waniso = w2.hypot(w3);

    if r2 <= GAUSS_DEGENERACY * a {
        return gaussian_fisher_central(g);
    }
    if aniso <= GAUSS_DEGENERACY * a {
        // sigma^2 = a: var = 2a (w1 + |w| cos(t - t0))
        return fisher_from_ml(2.0 * a * w1, 2.0 * a * waniso, 0.5 * w3.atan2(w2));
    }
    if waniso <= GAUSS_DEGENERACY * w1 {
        return fisher_from_ml(2.0 * w1 * a, 2.0 * w1 * aniso, 0.5 * c.atan2(b));
    }

    // With z = e^{2 i theta}: P(t) = a + b cos t + c sin t = Q(z) / (2z),
    // Q(z) = beta z^2 + 2 a z + conj(beta) = (z - z_in) L(z) with
    // L(z) = beta z + a + d, d = sqrt(a^2 - |beta|^2); L has no zero in the disk.
    let beta = Complex64::new(b, -c);
    let omega = Complex64::new(w2, -w3);
    let factor = |lead: Complex64, mid: f64| -> (Complex64, [Complex64; 2]) {
        let n = lead.norm();
        let d = ((mid - n) * (mid + n)).sqrt();
        (lead.conj() / (-mid - d), [Complex64::new(mid + d, 0.0), lead])
    };
    let (z1, l1) = factor(beta, a);
    let (z2, l2) = factor(omega, w1);
    let l = [l1[0] * l2[0], l1[0] * l2[1] + l1[1] * l2[0], l1[1] * l2[1]];

    // z vec(m_theta) as quadratics in z.
    let i = Complex64::new(0.0, 1.0);
    let r = 1.0 / (2.0 * SQRT_2);
    let zv: [[Complex64; 3]; 3] = [
        [0.25.into(), 0.5.into(), 0.25.into()],
        [i * r, 0.0.into(), -i * r],
        [(-0.25).into(), 0.5.into(), (-0.25).into()],
    ];

    // The integrand F / (z (z - z1) (z - z2) L1 L2) with F = 2 (z v_p)(z v_q)
    // has residue sum (F / L)[0, z1, z2]; the divided difference is built
    // with the Leibniz rule so that coalescing poles cost no accuracy.
    let h = |n: usize| -> Complex64 { (0..=n).map(|k| z1.powu(k as u32) * z2.powu((n - k) as u32)).sum() };
    let hs: Vec<Complex64> = (0..4).map(h).collect();
    let dd01 = |c: &[Complex64]| -> Complex64 { c.iter().enumerate().skip(1).map(|(j, cj)| cj * z1.powu(j as u32 - 1)).sum() };
    let dd12 = |c: &[Complex64]| -> Complex64 { c.iter().enumerate().skip(1).map(|(j, cj)| cj * hs[j - 1]).sum() };
    let dd012 = |c: &[Complex64]| -> Complex64 { c.iter().enumerate().skip(2).map(|(j, cj)| cj * hs[j - 2]).sum() };
    let eval = |c: &[Complex64], z: Complex64| -> Complex64 { c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, cj| acc * z + cj) };
    let (l0, l_z1, l_z2) = (l[0], eval(&l, z1), eval(&l, z2));
    let (l01, l12, l012) = (dd01(&l), dd12(&l), dd012(&l));

    let mut f = Matrix3::zeros();
    for p in 0..3 {
        for q in p..3 {
            let mut fp = [Complex64::new(0.0, 0.0); 5];
            for (j, u) in zv[p].iter().enumerate() {
                for (k, v) in zv[q].iter().enumerate() {
                    fp[j + k] += 2.0 * u * v;
                }
            }
            let h0 = fp[0] / l0;
            let h01 = (dd01(&fp) - h0 * l01) / l_z1;
            let h012 = (dd012(&fp) - h0 * l012 - h01 * l12) / l_z2;
            f[(p, q)] = h012.re;
            f[(q, p)] = h012.re;
        }
    }
    f
}

/// Central Gaussian: `var(X_theta^2) = 2 (a + rho cos 2(theta - phi))^2` in the
/// principal frame of `G`.
fn gaussian_fisher_central(g: CovarianceMatrix) -> Matrix3<f64> {
    let (lo, hi, phi) = spectral(&g);
    let a = 0.5 * (lo + hi);
    let rho = 0.5 * (lo - hi);
    let d = ((a - rho) * (a + rho)).sqrt();
    let d3 = d * d * d;
    let j0 = a / d3;
    let j1 = -rho / d3;
    let j2 = (a * d + rho * rho) / ((d + a) * d3);
    let f0 = sym3([
        0.125 * (j0 + 2.0 * j1 + j2),
        0.0,
        0.125 * (j0 - j2),
        0.25 * (j0 - j2),
        0.0,
        0.125 * (j0 - 2.0 * j1 + j2),
    ]);
    rotate_fisher(&f0, phi)
}

fn fisher_hom_second_closed(s: &StateModel) -> Result<ScaledFisher> {
    if let StateModel::Gaussian { r0, g } = *s {
        return Ok(ScaledFisher::Second(gaussian_fisher_second(r0, g)));
    }
    let (m, l, phi) = second_moment_variance_form(s).ok_or_else(|| {
        Error::UnsupportedClosedForm(format!("second-moment homodyne Fisher matrix of {}", s.family_name()))
    })?;
    if !(m > l.abs()) {
        return Err(Error::DegenerateVariance { theta: phi + 0.5 * PI });
    }
    Ok(ScaledFisher::Second(fisher_from_ml(m, l, phi)))
}

/// `H1,hom = Tr G + 2 sqrt(det G)`.
pub fn scrb_hom_first(s: &StateModel) -> f64 {
    let g = s.covariance();
    g.trace() + 2.0 * g.det().max(0.0).sqrt()
}

/// `H1,het = Tr G + 1`.
pub fn scrb_het_first(s: &StateModel) -> f64 {
    s.covariance().trace() + 1.0
}

pub fn gamma1(s: &StateModel) -> f64 {
    scrb_het_first(s) / scrb_hom_first(s)
}

/// `H2,hom = Tr F2^{-1}`; closed form when available, quadrature otherwise.
pub fn scrb_hom_second(s: &StateModel) -> Result<(f64, Method)> {
    if let Some((m, l, _)) = second_moment_variance_form(s) {
        if m > l.abs() {
            return Ok((6.0 * m + 4.0 * ((m - l) * (m + l)).sqrt(), Method::ClosedForm));
        }
    }
    let method = if matches!(s, StateModel::Gaussian { .. }) { Method::ClosedForm } else { Method::Quadrature };
    Ok((fisher_hom_second(s, method)?.trace_inverse()?, method))
}

/// `H2,het = var_Q(x^2) + var_Q(p^2) + 2 var_Q(xp)` from Husimi moments.
pub fn scrb_het_second(s: &StateModel) -> f64 {
    match *s {
        // Direct Gaussian form avoids cancellation for large displacements.
        StateModel::Gaussian { r0, g } => gaussian_h2_het(r0, g),
        _ => {
            let h = s.husimi_moments();
            h.var_x2() + h.var_p2() + 2.0 * h.var_xp()
        }
    }
}

/// `2 ((Tr G_het)^2 - det G_het + r^T G_het r + Tr G_het |r|^2)`.
pub fn gaussian_h2_het(r0: FirstMoments, g: CovarianceMatrix) -> f64 {
    let gh = g.add_scalar(0.5);
    let t = gh.trace();
    2.0 * (t * t - gh.det() + gh.quad_form(r0.rx, r0.rp) + t * r0.norm_sq())
}

/// Per-family closed forms of `H2,het`, used to cross-check the moment route.
pub fn scrb_het_second_closed_form(s: &StateModel) -> Result<f64> {
    use crate::special::hyp1f1;
    Ok(match *s {
        StateModel::Gaussian { r0, g } => gaussian_h2_het(r0, g),
        StateModel::Fock { n } => {
            let n = n as f64;
            2.0 * (n + 1.0) * (n + 3.0)
        }
        StateModel::EvenOddCoherent { alpha0, parity } => {
            let x = alpha0.norm_sqr();
            let e = (-2.0 * x).exp();
            let one_minus = -(-2.0 * x).exp_m1();
            // 8 x^2 / (e^x +- e^-x)^2 = 8 x^2 e^{-2x} / (1 +- e^{-2x})^2
            match parity {
                Parity::Even => 6.0 + 12.0 * x * one_minus / (1.0 + e) + 8.0 * x * x * e / (1.0 + e).powi(2),
                Parity::Odd => 6.0 + 12.0 * x * (1.0 + e) / one_minus - 8.0 * x * x * e / one_minus.powi(2),
            }
        }
        StateModel::DisplacedFock { alpha0, m } => {
            let m = m as f64;
            2.0 * (m + 1.0) * (m + 3.0 + 6.0 * alpha0.norm_sqr())
        }
        StateModel::PhotonAddedCoherent { alpha0, m } => {
            let x = alpha0.norm_sqr();
            let mf = m as f64;
            let f1 = hyp1f1(mf + 1.0, 1.0, x);
            let f2 = hyp1f1(mf + 1.0, 2.0, x);
            let bracket = 2.0 * (x * x - 3.0 * x - mf) * f1 + mf * (2.0 * x * x - 2.0 * x + 1.0) * f2;
            2.0 * (3.0 + 4.0 * mf + 2.0 * x * (mf + 3.0) - mf * f2 / (f1 * f1) * bracket)
        }
    })
}

pub fn gamma2(s: &StateModel) -> Result<f64> {
    Ok(scrb_het_second(s) / scrb_hom_second(s)?.0)
}

pub fn crb_report(s: &StateModel) -> Result<CrbReport> {
    let h1_hom = scrb_hom_first(s);
    let h1_het = scrb_het_first(s);
    let (h2_hom, m2) = scrb_hom_second(s)?;
    let h2_het = scrb_het_second(s);
    Ok(CrbReport {
        h1_hom,
        h1_het,
        h2_hom,
        h2_het,
        gamma1: h1_het / h1_hom,
        gamma2: h2_het / h2_hom,
        methods: CrbMethods {
            h1_hom: Method::ClosedForm,
            h1_het: Method::ClosedForm,
            h2_hom: m2,
            h2_het: Method::ClosedForm,
        },
    })
}

/// One-parameter family of states indexed by a real amplitude `alpha0 >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", content = "m", rename_all = "kebab-case")]
pub enum AmplitudeFamily {
    Coherent,
    EvenCoherent,
    OddCoherent,
    DisplacedFock(u32),
    PhotonAdded(u32),
}

impl AmplitudeFamily {
    /// The state at real amplitude `alpha0`; the odd family at the origin is
    /// its single-photon limit.
    pub fn state(&self, alpha0: f64) -> Result<StateModel> {
        let a = Complex64::new(alpha0, 0.0);
        match *self {
            AmplitudeFamily::Coherent => StateModel::coherent(a),
            AmplitudeFamily::EvenCoherent => StateModel::even_coherent(a),
            AmplitudeFamily::OddCoherent if alpha0 == 0.0 => Ok(StateModel::fock(1)),
            AmplitudeFamily::OddCoherent => StateModel::odd_coherent(a),
            AmplitudeFamily::DisplacedFock(m) => StateModel::displaced_fock(a, m),
            AmplitudeFamily::PhotonAdded(m) => StateModel::photon_added(a, m),
        }
    }

    pub fn m(&self) -> u32 {
        match *self {
            AmplitudeFamily::DisplacedFock(m) | AmplitudeFamily::PhotonAdded(m) => m,
            _ => 0,
        }
    }

    /// Parse a family name plus order, e.g. `("displaced-fock", 2)`.
    pub fn parse(name: &str, m: u32) -> Result<Self> {
        Ok(match name {
            "coherent" => AmplitudeFamily::Coherent,
            "even-coherent" => AmplitudeFamily::EvenCoherent,
            "odd-coherent" => AmplitudeFamily::OddCoherent,
            "displaced-fock" => AmplitudeFamily::DisplacedFock(m),
            "photon-added" => AmplitudeFamily::PhotonAdded(m),
            other => return Err(Error::Config(format!("`{other}` is not an amplitude family"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            AmplitudeFamily::Coherent => "coherent",
            AmplitudeFamily::EvenCoherent => "even-coherent",
            AmplitudeFamily::OddCoherent => "odd-coherent",
            AmplitudeFamily::DisplacedFock(_) => "displaced-fock",
            AmplitudeFamily::PhotonAdded(_) => "photon-added",
        }
    }

    pub fn gamma2(&self, alpha0: f64) -> Result<f64> {
        gamma2(&self.state(alpha0)?)
    }

    /// Default minimization bracket `[0, max(5, 3 sqrt m)]`.
    pub fn default_min_bracket(&self) -> (f64, f64) {
        (0.0, 5f64.max(3.0 * (self.m() as f64).sqrt()))
    }
}

pub const DEFAULT_CROSSOVER_BRACKET: (f64, f64) = (0.0, 20.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Crossover {
    /// `gamma2(alpha0) = 1`, with the common value of both bounds.
    At { alpha0: f64, h2: f64 },
    AlwaysBelowUnity,
}

const SCAN_STEPS: usize = 2000;
const ARG_TOL: f64 = 1e-12;

/// First amplitude in `bracket` at which `gamma2` drops through unity.
pub fn find_crossover(family: AmplitudeFamily, bracket: (f64, f64)) -> Result<Crossover> {
    let (lo, hi) = bracket;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!("bad bracket [{lo}, {hi}]")));
    }
    let g = |a: f64| family.gamma2(a).map(|v| v - 1.0);
    let mut a0 = lo;
    let mut g0 = g(a0)?;
    if g0 <= 0.0 {
        return Ok(Crossover::AlwaysBelowUnity);
    }
    let h = (hi - lo) / SCAN_STEPS as f64;
    for i in 1..=SCAN_STEPS {
        let a1 = lo + i as f64 * h;
        let g1 = g(a1)?;
        if g1 <= 0.0 {
            let root = bisect(&g, a0, a1)?;
            let s = family.state(root)?;
            return Ok(Crossover::At { alpha0: root, h2: scrb_het_second(&s) });
        }
        a0 = a1;
        g0 = g1;
    }
    let _ = g0;
    Err(Error::NoSignChange { lo, hi })
}

fn bisect(g: &impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= ARG_TOL * mid.max(1.0) {
            break;
        }
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Grid scan followed by golden-section refinement.
pub fn minimize_scalar(f: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, steps: usize) -> Result<(f64, f64)> {
    if !(hi > lo) || steps < 2 {
        return Err(Error::Bracket(format!("empty interval [{lo}, {hi}]")));
    }
    let h = (hi - lo) / steps as f64;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..=steps {
        let v = f(lo + i as f64 * h)?;
        if !v.is_finite() {
            return Err(Error::Bracket(format!("objective not finite at {}", lo + i as f64 * h)));
        }
        if v < best.1 {
            best = (i, v);
        }
    }
    let mut a = lo + best.0.saturating_sub(1) as f64 * h;
    let mut b = lo + (best.0 + 1).min(steps) as f64 * h;
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > ARG_TOL * (1.0 + c.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x)?;
    // Keep the grid point if refinement did not improve on it (edge minima).
    if best.1 < fx {
        return Ok((lo + best.0 as f64 * h, best.1));
    }
    Ok((x, fx))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gamma2Minimum {
    pub alpha0: f64,
    pub gamma2: f64,
}

/// Minimum of `gamma2` over the amplitude.
pub fn minimize_gamma2(family: AmplitudeFamily, bracket: Option<(f64, f64)>) -> Result<Gamma2Minimum> {
    if family == AmplitudeFamily::Coherent {
        return Err(Error::InvalidParameter("gamma2 of coherent states decreases monotonically".into()));
    }
    let (lo, hi) = bracket.unwrap_or_else(|| family.default_min_bracket());
    let (alpha0, gamma2) = minimize_scalar(|a| family.gamma2(a), lo, hi, 500)?;
    Ok(Gamma2Minimum { alpha0, gamma2 })
}

/// Minimum of `gamma1` over the amplitude.
pub fn minimize_gamma1(family: AmplitudeFamily, bracket: (f64, f64)) -> Result<(f64, f64)> {
    minimize_scalar(|a| Ok(gamma1(&family.state(a)?)), bracket.0, bracket.1, 500)
}

#[cfg(test)]
mod tests;
