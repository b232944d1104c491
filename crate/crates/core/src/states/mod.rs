//! The five single-mode state families and their moments and densities.

mod density;
mod fock;
mod moments;
mod normal;

pub use density::{HusimiDensity, QuadratureDensity};
pub use fock::{FockExpansion, DEFAULT_TRUNCATION};
pub use moments::{gaussian_raw_moments, HusimiMomentSet, QuadratureMomentEngine, QuadratureMomentTable};
pub use normal::NormalTable;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::fmt;

use crate::error::{Error, Result};
use crate::phase_space::{gaussian_cov_from_shape, CovarianceMatrix, FirstMoments, GaussianShape};

/// Largest photon-addition order accepted (keeps the normalization finite).
pub const MAX_PHOTON_ADDED: u32 = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// `+1` for even, `-1` for odd.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// A single-mode state from one of the supported families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum StateModel {
    Gaussian { r0: FirstMoments, g: CovarianceMatrix },
    Fock { n: u32 },
    EvenOddCoherent { alpha0: Complex64, parity: Parity },
    DisplacedFock { alpha0: Complex64, m: u32 },
    PhotonAddedCoherent { alpha0: Complex64, m: u32 },
}

impl StateModel {
    pub fn gaussian(r0: FirstMoments, g: CovarianceMatrix) -> Result<Self> {
        let s = StateModel::Gaussian { r0, g };
        s.validate()?;
        Ok(s)
    }

    pub fn gaussian_from_shape(r0: FirstMoments, shape: GaussianShape) -> Result<Self> {
        Self::gaussian(r0, gaussian_cov_from_shape(&shape)?)
    }

    pub fn vacuum() -> Self {
        StateModel::Fock { n: 0 }
    }

    pub fn fock(n: u32) -> Self {
        StateModel::Fock { n }
    }

    /// Gaussian state with `G = (mu/2) I` centered at the origin.
    pub fn thermal(mu: f64) -> Result<Self> {
        Self::gaussian_from_shape(FirstMoments::default(), GaussianShape::new(mu, 1.0, 0.0)?)
    }

    /// Pure squeezed vacuum with `G = R(phi) diag(1/(2 lambda), lambda/2) R(phi)^T`.
    pub fn squeezed(lambda: f64, phi: f64) -> Result<Self> {
        Self::gaussian_from_shape(FirstMoments::default(), GaussianShape::new(1.0, lambda, phi)?)
    }

    /// Coherent state as the `m = 0` displaced Fock state.
    pub fn coherent(alpha0: Complex64) -> Result<Self> {
        Self::displaced_fock(alpha0, 0)
    }

    pub fn even_coherent(alpha0: Complex64) -> Result<Self> {
        Self::cat(alpha0, Parity::Even)
    }

    pub fn odd_coherent(alpha0: Complex64) -> Result<Self> {
        Self::cat(alpha0, Parity::Odd)
    }

    pub fn cat(alpha0: Complex64, parity: Parity) -> Result<Self> {
        let s = StateModel::EvenOddCoherent { alpha0, parity };
        s.validate()?;
        Ok(s)
    }

    pub fn displaced_fock(alpha0: Complex64, m: u32) -> Result<Self> {
        let s = StateModel::DisplacedFock { alpha0, m };
        s.validate()?;
        Ok(s)
    }

    pub fn photon_added(alpha0: Complex64, m: u32) -> Result<Self> {
        let s = StateModel::PhotonAddedCoherent { alpha0, m };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StateModel::Gaussian { r0, g } => {
                if !r0.is_finite() || !g.is_finite() {
                    return Err(Error::InvalidParameter("non-finite Gaussian parameters".into()));
                }
                if !g.is_physical() {
                    return Err(Error::Unphysical { det: g.det() });
                }
            }
            StateModel::Fock { .. } => {}
            StateModel::EvenOddCoherent { alpha0, parity } => {
                check_amplitude(alpha0)?;
                if parity == Parity::Odd && alpha0.norm_sqr() == 0.0 {
                    return Err(Error::InvalidParameter(
                        "odd coherent state needs a nonzero amplitude".into(),
                    ));
                }
            }
            StateModel::DisplacedFock { alpha0, .. } => check_amplitude(alpha0)?,
            StateModel::PhotonAddedCoherent { alpha0, m } => {
                check_amplitude(alpha0)?;
                if m > MAX_PHOTON_ADDED {
                    return Err(Error::InvalidParameter(format!(
                        "photon-added order {m} exceeds {MAX_PHOTON_ADDED}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, StateModel::Gaussian { .. })
            || matches!(*self, StateModel::Fock { n: 0 })
            || matches!(*self, StateModel::DisplacedFock { m: 0, .. })
            || matches!(*self, StateModel::PhotonAddedCoherent { m: 0, .. })
    }

    /// Complex displacement amplitude, zero for Fock and central Gaussians.
    pub fn amplitude(&self) -> Complex64 {
        match *self {
            StateModel::Gaussian { r0, .. } => Complex64::new(r0.rx, r0.rp) / SQRT_2,
            StateModel::Fock { .. } => Complex64::new(0.0, 0.0),
            StateModel::EvenOddCoherent { alpha0, .. }
            | StateModel::DisplacedFock { alpha0, .. }
            | StateModel::PhotonAddedCoherent { alpha0, .. } => alpha0,
        }
    }

    /// The same state rotated in phase space by `phi` (`alpha0 -> alpha0 e^{i phi}`).
    pub fn rotated(&self, phi: f64) -> Self {
        let rot = Complex64::from_polar(1.0, phi);
        match *self {
            StateModel::Gaussian { r0, g } => StateModel::Gaussian { r0: r0.rotated(phi), g: g.rotated(phi) },
            StateModel::Fock { n } => StateModel::Fock { n },
            StateModel::EvenOddCoherent { alpha0, parity } => {
                StateModel::EvenOddCoherent { alpha0: alpha0 * rot, parity }
            }
            StateModel::DisplacedFock { alpha0, m } => StateModel::DisplacedFock { alpha0: alpha0 * rot, m },
            StateModel::PhotonAddedCoherent { alpha0, m } => {
                StateModel::PhotonAddedCoherent { alpha0: alpha0 * rot, m }
            }
        }
    }

    /// Normally ordered moments `<a^dag^j a^k>` for `j + k <= 4`.
    pub fn normal_table(&self) -> NormalTable {
        match *self {
            StateModel::Gaussian { r0, g } => NormalTable::gaussian(r0, g),
            StateModel::Fock { n } => NormalTable::fock(n),
            StateModel::EvenOddCoherent { alpha0, parity } => NormalTable::cat(alpha0, parity),
            StateModel::DisplacedFock { alpha0, m } => NormalTable::displaced_fock(alpha0, m),
            StateModel::PhotonAddedCoherent { alpha0, m } => NormalTable::photon_added(alpha0, m),
        }
    }

    pub fn first_moments(&self) -> FirstMoments {
        match *self {
            StateModel::Gaussian { r0, .. } => r0,
            _ => self.normal_table().first_moments(),
        }
    }

    /// Covariance matrix `G = G2 - r r^T`.
    pub fn covariance(&self) -> CovarianceMatrix {
        match *self {
            StateModel::Gaussian { g, .. } => g,
            StateModel::Fock { n } => CovarianceMatrix::scalar(n as f64 + 0.5),
            _ => {
                let t = self.normal_table();
                t.second_moment_matrix().sub(&CovarianceMatrix::outer(t.first_moments()))
            }
        }
    }

    /// Second-moment matrix `G2 = Re <R R^T> = G + r r^T`.
    pub fn second_moment_matrix(&self) -> CovarianceMatrix {
        match *self {
            StateModel::Gaussian { r0, g } => g.add(&CovarianceMatrix::outer(r0)),
            _ => self.normal_table().second_moment_matrix(),
        }
    }

    /// `<X_theta^m>` for `m = 1..=4`.
    pub fn quadrature_moments(&self, theta: f64) -> QuadratureMomentTable {
        QuadratureMomentEngine::new(self).table(theta)
    }

    /// Husimi averages of `x^k p^l` up to total degree 4.
    pub fn husimi_moments(&self) -> HusimiMomentSet {
        HusimiMomentSet::from_state(self)
    }

    /// Fock-basis truncation that keeps the norm deficit below `1e-10`.
    pub fn default_cutoff(&self) -> usize {
        let (a2, m) = match *self {
            StateModel::Gaussian { .. } => (0.0, 0),
            StateModel::Fock { n } => (0.0, n),
            StateModel::EvenOddCoherent { alpha0, .. } => (alpha0.norm_sqr(), 0),
            StateModel::DisplacedFock { alpha0, m } | StateModel::PhotonAddedCoherent { alpha0, m } => {
                (alpha0.norm_sqr(), m)
            }
        };
        let m = m as f64;
        (a2 + m + 10.0 * (a2 + m + 1.0).sqrt() + 20.0).ceil() as usize
    }

    pub fn fock_expansion(&self, cutoff: usize) -> Result<FockExpansion> {
        FockExpansion::new(self, cutoff, DEFAULT_TRUNCATION)
    }

    pub fn default_fock_expansion(&self) -> Result<FockExpansion> {
        self.fock_expansion(self.default_cutoff())
    }

    /// Probability density of the quadrature `X_theta` at `x`.
    pub fn quadrature_pdf(&self, theta: f64, x: f64) -> Result<f64> {
        Ok(QuadratureDensity::new(self, theta)?.pdf(x))
    }

    /// Husimi function in the `(x, p)` measure.
    pub fn husimi_pdf(&self, x: f64, p: f64) -> Result<f64> {
        Ok(HusimiDensity::new(self)?.pdf(x, p))
    }

    /// Short human-readable family name.
    pub fn family_name(&self) -> &'static str {
        match self {
            StateModel::Gaussian { .. } => "gaussian",
            StateModel::Fock { .. } => "fock",
            StateModel::EvenOddCoherent { parity: Parity::Even, .. } => "even-coherent",
            StateModel::EvenOddCoherent { parity: Parity::Odd, .. } => "odd-coherent",
            StateModel::DisplacedFock { .. } => "displaced-fock",
            StateModel::PhotonAddedCoherent { .. } => "photon-added",
        }
    }

    /// Canonical `key=value` descriptor, parsed back by [`StateModel::from_descriptor`].
    pub fn descriptor(&self) -> String {
        let mut out = format!("family={}", self.family_name());
        match *self {
            StateModel::Gaussian { r0, g } => {
                out += &format!(
                    " rx={} rp={} gxx={} gxp={} gpp={}",
                    r0.rx, r0.rp, g.gxx, g.gxp, g.gpp
                );
            }
            StateModel::Fock { n } => out += &format!(" n={n}"),
            StateModel::EvenOddCoherent { alpha0, .. } => {
                out += &format!(" alpha_re={} alpha_im={}", alpha0.re, alpha0.im)
            }
            StateModel::DisplacedFock { alpha0, m } | StateModel::PhotonAddedCoherent { alpha0, m } => {
                out += &format!(" alpha_re={} alpha_im={} m={m}", alpha0.re, alpha0.im)
            }
        }
        out
    }

    /// Parse a whitespace-separated `key=value` descriptor.
    pub fn from_descriptor(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for tok in text.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got `{tok}`")))?;
            map.insert(k.to_string(), v.to_string());
        }
        Self::from_pairs(&map)
    }

    /// Build a state from configuration keys.
    ///
    /// Recognized families: `vacuum`, `coherent`, `thermal`, `squeezed`,
    /// `gaussian`, `fock`, `even-coherent`, `odd-coherent`, `displaced-fock`,
    /// `photon-added`. Amplitudes are given either as `alpha` (real) or as
    /// `alpha_re`/`alpha_im`; Gaussian covariances either as `gxx gxp gpp`
    /// or as `mu lambda phi`.
    pub fn from_pairs(map: &BTreeMap<String, String>) -> Result<Self> {
        let family = map
            .get("family")
            .ok_or_else(|| Error::Config("missing key `family`".into()))?
            .as_str();
        let f = |k: &str, default: f64| -> Result<f64> {
            match map.get(k) {
                None => Ok(default),
                Some(v) => v
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("`{k}` is not a number: `{v}`"))),
            }
        };
        let u = |k: &str, default: u32| -> Result<u32> {
            match map.get(k) {
                None => Ok(default),
                Some(v) => v
                    .trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Config(format!("`{k}` is not a nonnegative integer: `{v}`"))),
            }
        };
        let alpha = || -> Result<Complex64> {
            if map.contains_key("alpha") {
                Ok(Complex64::new(f("alpha", 0.0)?, 0.0))
            } else {
                Ok(Complex64::new(f("alpha_re", 0.0)?, f("alpha_im", 0.0)?))
            }
        };
        let r0 = || -> Result<FirstMoments> { Ok(FirstMoments::new(f("rx", 0.0)?, f("rp", 0.0)?)) };
        let allowed: &[&str] = match family {
            "vacuum" => &[],
            "fock" => &["n"],
            "coherent" | "even-coherent" | "odd-coherent" => &["alpha", "alpha_re", "alpha_im"],
            "thermal" => &["mu", "rx", "rp"],
            "squeezed" => &["mu", "lambda", "phi", "rx", "rp"],
            "gaussian" => &["mu", "lambda", "phi", "rx", "rp", "gxx", "gxp", "gpp"],
            "displaced-fock" | "photon-added" => &["alpha", "alpha_re", "alpha_im", "m"],
            _ => &[],
        };
        if let Some(k) = map.keys().find(|k| *k != "family" && !allowed.contains(&k.as_str())) {
            return Err(Error::Config(format!("key `{k}` does not apply to family `{family}`")));
        }
        match family {
            "vacuum" => Ok(Self::vacuum()),
            "fock" => Ok(Self::fock(u("n", 0)?)),
            "coherent" => Self::coherent(alpha()?),
            "thermal" => {
                Self::gaussian_from_shape(r0()?, GaussianShape::new(f("mu", 1.0)?, 1.0, 0.0)?)
            }
            "squeezed" => Self::gaussian_from_shape(
                r0()?,
                GaussianShape::new(f("mu", 1.0)?, f("lambda", 1.0)?, f("phi", 0.0)?)?,
            ),
            "gaussian" => {
                if map.contains_key("gxx") {
                    let g = CovarianceMatrix::new(f("gxx", 0.5)?, f("gxp", 0.0)?, f("gpp", 0.5)?)?;
                    Self::gaussian(r0()?, g)
                } else {
                    Self::gaussian_from_shape(
                        r0()?,
                        GaussianShape::new(f("mu", 1.0)?, f("lambda", 1.0)?, f("phi", 0.0)?)?,
                    )
                }
            }
            "even-coherent" => Self::even_coherent(alpha()?),
            "odd-coherent" => Self::odd_coherent(alpha()?),
            "displaced-fock" => Self::displaced_fock(alpha()?, u("m", 0)?),
            "photon-added" => Self::photon_added(alpha()?, u("m", 0)?),
            other => Err(Error::Config(format!("unknown state family `{other}`"))),
        }
    }
}

impl fmt::Display for StateModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor())
    }
}

fn check_amplitude(a: Complex64) -> Result<()> {
    if a.re.is_finite() && a.im.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter("amplitude must be finite".into()))
    }
}
