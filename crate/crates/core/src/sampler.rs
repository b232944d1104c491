//! Synthetic homodyne and heterodyne data.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::phase_space::{het_shift, spectral};
use crate::rng::{stream, tag};
use crate::states::{HusimiDensity, Parity, QuadratureDensity, StateModel};

/// Rejection is abandoned in favor of a tabulated inverse CDF below this
/// acceptance rate.
const MIN_ACCEPTANCE: f64 = 0.1;
const ENVELOPE_INFLATION: f64 = 3.0;
const BOUND_SAFETY: f64 = 1.05;
const TABLE_NODES: usize = 4096;
const HET_CHUNK: usize = 1 << 16;

/// Draws `X_theta` for one state and angle.
#[derive(Debug, Clone)]
pub struct QuadratureSampler {
    kind: QuadKind,
}

#[derive(Debug, Clone)]
enum QuadKind {
    Normal { mean: f64, sd: f64 },
    /// Envelope: equal-weight Gaussian mixture with common width.
    Rejection { density: QuadratureDensity, centers: Vec<f64>, sd: f64, bound: f64 },
    Table { xs: Vec<f64>, cdf: Vec<f64> },
}

fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}

fn mixture_pdf(x: f64, centers: &[f64], sd: f64) -> f64 {
    centers.iter().map(|&c| normal_pdf(x, c, sd)).sum::<f64>() / centers.len() as f64
}

impl QuadratureSampler {
    pub fn new(s: &StateModel, theta: f64) -> Result<Self> {
        let density = QuadratureDensity::new(s, theta)?;
        if let QuadratureDensity::Normal { mean, var } = density {
            return Ok(Self { kind: QuadKind::Normal { mean, sd: var.sqrt() } });
        }
        let t = s.quadrature_moments(theta);
        let mean = t.m1;
        let var = t.variance();
        if !(var > 0.0) {
            return Err(Error::Sampling(format!("{s}: vanishing quadrature variance at theta = {theta}")));
        }
        // Generic envelope: single Gaussian with inflated variance.
        let sd = (ENVELOPE_INFLATION * var).sqrt();
        let mut best = (vec![mean], sd, scan_bound_1d(&density, &[mean], sd, mean, 6.0 * sd));
        // Cats: pdf <= 4 norm2 * mixture of the two coherent components.
        if let QuadratureDensity::Cat { s: shift, norm2, .. } = density {
            let bound = 4.0 * norm2;
            if bound < best.2 {
                best = (vec![-shift, shift], std::f64::consts::FRAC_1_SQRT_2, bound);
            }
        }
        let (centers, sd, bound) = best;
        if 1.0 / bound >= MIN_ACCEPTANCE {
            return Ok(Self { kind: QuadKind::Rejection { density, centers, sd, bound } });
        }
        let half = 12.0 * var.sqrt() + 6.0;
        Ok(Self { kind: tabulate(&density, mean - half, mean + half) })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            QuadKind::Normal { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            }
            QuadKind::Rejection { density, centers, sd, bound } => loop {
                let c = centers[if centers.len() == 1 { 0 } else { rng.random_range(0..centers.len()) }];
                let z: f64 = rng.sample(StandardNormal);
                let x = c + sd * z;
                let u: f64 = rng.random();
                if u * bound * mixture_pdf(x, centers, *sd) <= density.pdf(x) {
                    return x;
                }
            },
            QuadKind::Table { xs, cdf } => {
                let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
                let i = cdf.partition_point(|&c| c < u).clamp(1, cdf.len() - 1);
                let (c0, c1) = (cdf[i - 1], cdf[i]);
                let f = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
                xs[i - 1] + f * (xs[i] - xs[i - 1])
            }
        }
    }

    /// Acceptance probability of the rejection step (1 for exact methods).
    pub fn acceptance(&self) -> f64 {
        match &self.kind {
            QuadKind::Rejection { bound, .. } => 1.0 / bound,
            _ => 1.0,
        }
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.kind, QuadKind::Table { .. })
    }
}

fn scan_bound_1d(density: &QuadratureDensity, centers: &[f64], sd: f64, mid: f64, half: f64) -> f64 {
    let n = 4001;
    let mut m = 0.0f64;
    for i in 0..n {
        let x = mid - half + 2.0 * half * i as f64 / (n - 1) as f64;
        let e = mixture_pdf(x, centers, sd);
        if e > 0.0 {
            m = m.max(density.pdf(x) / e);
        }
    }
    m * BOUND_SAFETY
}

fn tabulate(density: &QuadratureDensity, lo: f64, hi: f64) -> QuadKind {
    let h = (hi - lo) / (TABLE_NODES - 1) as f64;
    let xs: Vec<f64> = (0..TABLE_NODES).map(|i| lo + i as f64 * h).collect();
    let f: Vec<f64> = xs.iter().map(|&x| density.pdf(x)).collect();
    let mut cdf = Vec::with_capacity(TABLE_NODES);
    let mut acc = 0.0;
    cdf.push(0.0);
    for i in 1..TABLE_NODES {
        acc += 0.5 * h * (f[i - 1] + f[i]);
        cdf.push(acc);
    }
    QuadKind::Table { xs, cdf }
}

/// Draws phase-space points from the Husimi function.
#[derive(Debug, Clone)]
pub struct HusimiSampler {
    kind: HusimiKind,
}

#[derive(Debug, Clone)]
enum HusimiKind {
    Normal { mean: (f64, f64), l11: f64, l21: f64, l22: f64 },
    /// `|alpha - alpha0|^2 ~ Gamma(m + 1)` with uniform angle.
    Radial { center: (f64, f64), gamma: Gamma<f64> },
    Rejection { density: HusimiDensity, centers: Vec<(f64, f64)>, sd: f64, bound: f64 },
}

fn mixture_pdf_2d(x: f64, p: f64, centers: &[(f64, f64)], sd: f64) -> f64 {
    let v = sd * sd;
    centers.iter().map(|&(cx, cp)| (-0.5 * ((x - cx).powi(2) + (p - cp).powi(2)) / v).exp()).sum::<f64>()
        / (2.0 * PI * v * centers.len() as f64)
}

impl HusimiSampler {
    pub fn new(s: &StateModel) -> Result<Self> {
        let kind = match *s {
            StateModel::Gaussian { r0, g } => {
                let gh = het_shift(&g);
                let l11 = gh.gxx.sqrt();
                let l21 = gh.gxp / l11;
                let l22 = (gh.gpp - l21 * l21).sqrt();
                HusimiKind::Normal { mean: (r0.rx, r0.rp), l11, l21, l22 }
            }
            StateModel::Fock { n } => HusimiKind::Radial { center: (0.0, 0.0), gamma: gamma(n)? },
            StateModel::DisplacedFock { alpha0, m } => HusimiKind::Radial {
                center: (SQRT_2 * alpha0.re, SQRT_2 * alpha0.im),
                gamma: gamma(m)?,
            },
            StateModel::EvenOddCoherent { alpha0, parity } => {
                let density = HusimiDensity::new(s)?;
                let r = (SQRT_2 * alpha0.re, SQRT_2 * alpha0.im);
                let centers = vec![r, (-r.0, -r.1)];
                let (generic_sd, generic_bound) = generic_envelope(s, &density, &centers);
                // Q <= 4 norm2 * mixture of the two coherent components.
                let x = alpha0.norm_sqr();
                let norm2 = 0.5
                    / match parity {
                        Parity::Even => 1.0 + (-2.0 * x).exp(),
                        Parity::Odd => -(-2.0 * x).exp_m1(),
                    };
                let (sd, bound) = if 4.0 * norm2 < generic_bound { (1.0, 4.0 * norm2) } else { (generic_sd, generic_bound) };
                HusimiKind::Rejection { density, centers, sd, bound }
            }
            StateModel::PhotonAddedCoherent { alpha0, .. } => {
                let density = HusimiDensity::new(s)?;
                let centers = vec![(SQRT_2 * alpha0.re, SQRT_2 * alpha0.im)];
                let (sd, bound) = generic_envelope(s, &density, &centers);
                HusimiKind::Rejection { density, centers, sd, bound }
            }
        };
        if let HusimiKind::Rejection { bound, .. } = &kind {
            if !(bound.is_finite() && *bound >= 1.0 / BOUND_SAFETY) {
                return Err(Error::Sampling(format!("{s}: Husimi rejection envelope failed (bound {bound})")));
            }
        }
        Ok(Self { kind })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match &self.kind {
            HusimiKind::Normal { mean, l11, l21, l22 } => {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                (mean.0 + l11 * z1, mean.1 + l21 * z1 + l22 * z2)
            }
            HusimiKind::Radial { center, gamma } => {
                let g = gamma.sample(rng);
                let r = (2.0 * g).sqrt();
                let phi: f64 = rng.random::<f64>() * 2.0 * PI;
                let (s, c) = phi.sin_cos();
                (center.0 + r * c, center.1 + r * s)
            }
            HusimiKind::Rejection { density, centers, sd, bound } => loop {
                let c = centers[if centers.len() == 1 { 0 } else { rng.random_range(0..centers.len()) }];
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let (x, p) = (c.0 + sd * z1, c.1 + sd * z2);
                let u: f64 = rng.random();
                if u * bound * mixture_pdf_2d(x, p, centers, *sd) <= density.pdf(x, p) {
                    return (x, p);
                }
            },
        }
    }

    pub fn acceptance(&self) -> f64 {
        match &self.kind {
            HusimiKind::Rejection { bound, .. } => 1.0 / bound,
            _ => 1.0,
        }
    }
}

fn gamma(m: u32) -> Result<Gamma<f64>> {
    Gamma::new(m as f64 + 1.0, 1.0).map_err(|e| Error::Sampling(format!("Gamma({}) radial law: {e}", m + 1)))
}

/// Mixture with covariance `2 lambda_max(G_het) I` and a grid-scanned bound.
fn generic_envelope(s: &StateModel, density: &HusimiDensity, centers: &[(f64, f64)]) -> (f64, f64) {
    let gh = s.covariance().add_scalar(0.5);
    let (_, hi, _) = spectral(&gh);
    let sd = (2.0 * hi).sqrt();
    let (mut xmin, mut xmax, mut pmin, mut pmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, p) in centers {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        pmin = pmin.min(p);
        pmax = pmax.max(p);
    }
    let pad = 6.0 * sd;
    let n = 301;
    let mut m = 0.0f64;
    for i in 0..n {
        let x = xmin - pad + (xmax - xmin + 2.0 * pad) * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let p = pmin - pad + (pmax - pmin + 2.0 * pad) * j as f64 / (n - 1) as f64;
            let e = mixture_pdf_2d(x, p, centers, sd);
            if e > 0.0 {
                m = m.max(density.pdf(x, p) / e);
            }
        }
    }
    (sd, m * BOUND_SAFETY)
}

/// Equally spaced phases `k pi / n_theta`.
pub fn phases(n_theta: usize) -> Vec<f64> {
    (0..n_theta).map(|k| k as f64 * PI / n_theta as f64).collect()
}

/// `N_k`: `N / n_theta` each, remainder to the lowest phases.
pub fn allocate(n: usize, n_theta: usize) -> Vec<usize> {
    let (base, rem) = (n / n_theta, n % n_theta);
    (0..n_theta).map(|k| base + usize::from(k < rem)).collect()
}

pub fn check_homodyne_sizes(n_theta: usize, n: usize) -> Result<()> {
    if n_theta < 3 {
        return Err(Error::InvalidParameter(format!("n_theta = {n_theta}; at least 3 phases are needed")));
    }
    if n < n_theta {
        return Err(Error::InvalidParameter(format!("N = {n} is smaller than n_theta = {n_theta}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomodyneDataset {
    pub state: String,
    pub phases: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
    pub seed: u64,
}

impl HomodyneDataset {
    pub fn counts(&self) -> Vec<usize> {
        self.samples.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// CSV with `#` header lines and columns `theta,x`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# state={}", self.state)?;
        writeln!(w, "# N={}", self.len())?;
        writeln!(w, "# n_theta={}", self.phases.len())?;
        writeln!(w, "# seed={}", self.seed)?;
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record(["theta", "x"]).map_err(csv_err)?;
        for (th, xs) in self.phases.iter().zip(&self.samples) {
            for x in xs {
                cw.write_record([th.to_string(), x.to_string()]).map_err(csv_err)?;
            }
        }
        cw.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let (meta, rows) = read_table(r, &["theta", "x"])?;
        let mut phases: Vec<f64> = Vec::new();
        let mut samples: Vec<Vec<f64>> = Vec::new();
        for row in rows {
            if phases.last() != Some(&row[0]) {
                if phases.iter().any(|&t| t == row[0]) {
                    return Err(Error::Config(format!("phase {} is not contiguous", row[0])));
                }
                phases.push(row[0]);
                samples.push(Vec::new());
            }
            samples.last_mut().unwrap().push(row[1]);
        }
        Ok(Self { state: meta_get(&meta, "state")?, phases, samples, seed: meta_parse(&meta, "seed")? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeterodyneDataset {
    pub state: String,
    pub points: Vec<(f64, f64)>,
    pub seed: u64,
}

impl HeterodyneDataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// CSV with `#` header lines and columns `x,p`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# state={}", self.state)?;
        writeln!(w, "# N={}", self.len())?;
        writeln!(w, "# seed={}", self.seed)?;
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record(["x", "p"]).map_err(csv_err)?;
        for (x, p) in &self.points {
            cw.write_record([x.to_string(), p.to_string()]).map_err(csv_err)?;
        }
        cw.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let (meta, rows) = read_table(r, &["x", "p"])?;
        Ok(Self {
            state: meta_get(&meta, "state")?,
            points: rows.into_iter().map(|r| (r[0], r[1])).collect(),
            seed: meta_parse(&meta, "seed")?,
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("CSV: {e}"))
}

type Meta = Vec<(String, String)>;

fn read_table<R: BufRead>(mut r: R, header: &[&str]) -> Result<(Meta, Vec<Vec<f64>>)> {
    let mut meta = Vec::new();
    let mut body = String::new();
    let mut line = String::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            break;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
        } else {
            body.push_str(&line);
            r.read_to_string(&mut body)?;
            break;
        }
    }
    let mut cr = csv::Reader::from_reader(body.as_bytes());
    let got: Vec<String> = cr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if got != header {
        return Err(Error::Config(format!("expected columns {header:?}, found {got:?}")));
    }
    let mut rows = Vec::new();
    for rec in cr.records() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad number `{f}`: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((meta, rows))
}

fn meta_get(meta: &Meta, key: &str) -> Result<String> {
    meta.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.clone())
        .ok_or_else(|| Error::Config(format!("missing `# {key}=` header line")))
}

fn meta_parse<T: std::str::FromStr>(meta: &Meta, key: &str) -> Result<T> {
    meta_get(meta, key)?.parse().map_err(|_| Error::Config(format!("unparseable `{key}` header")))
}

/// `n_theta` equally spaced phases, `N_k` i.i.d. draws at each.
pub fn sample_homodyne(s: &StateModel, n_theta: usize, n: usize, seed: u64) -> Result<HomodyneDataset> {
    check_homodyne_sizes(n_theta, n)?;
    let ph = phases(n_theta);
    let counts = allocate(n, n_theta);
    let samples = ph
        .par_iter()
        .zip(counts.par_iter())
        .enumerate()
        .map(|(k, (&th, &nk))| {
            let sampler = QuadratureSampler::new(s, th)?;
            let mut rng = stream(seed, &[tag::HOMODYNE_PHASE, k as u64]);
            Ok((0..nk).map(|_| sampler.sample(&mut rng)).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(HomodyneDataset { state: s.descriptor(), phases: ph, samples, seed })
}

/// `N` i.i.d. Husimi-distributed points.
pub fn sample_heterodyne(s: &StateModel, n: usize, seed: u64) -> Result<HeterodyneDataset> {
    if n == 0 {
        return Err(Error::InvalidParameter("heterodyne sample size must be at least 1".into()));
    }
    let sampler = HusimiSampler::new(s)?;
    let chunks = n.div_ceil(HET_CHUNK);
    let points = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = HET_CHUNK.min(n - c * HET_CHUNK);
            let mut rng = stream(seed, &[tag::HETERODYNE_CHUNK, c as u64]);
            (0..len).map(|_| sampler.sample(&mut rng)).collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat();
    Ok(HeterodyneDataset { state: s.descriptor(), points, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn allocation_and_phases() {
        assert_eq!(allocate(10, 4), vec![3, 3, 2, 2]);
        assert_eq!(phases(4), vec![0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0]);
        assert!(check_homodyne_sizes(2, 10).is_err());
        assert!(check_homodyne_sizes(5, 4).is_err());
    }

    #[test]
    fn vacuum_phase_variances() {
        let d = sample_homodyne(&StateModel::vacuum(), 4, 400_000, 11).unwrap();
        for xs in &d.samples {
            let n = xs.len() as f64;
            let m = xs.iter().sum::<f64>() / n;
            let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
            assert!((v - 0.5).abs() < 0.005, "{v}");
        }
    }

    #[test]
    fn fock_one_quadrature_moments() {
        let s = StateModel::fock(1);
        let smp = QuadratureSampler::new(&s, 0.0).unwrap();
        let mut rng = stream(3, &[0]);
        let n = 1_000_000;
        let (mut m2, mut m4) = (0.0, 0.0);
        for _ in 0..n {
            let x = smp.sample(&mut rng);
            m2 += x * x;
            m4 += x.powi(4);
        }
        assert!((m2 / n as f64 - 1.5).abs() < 0.01);
        assert!((m4 / n as f64 - 3.75).abs() < 0.05);
    }

    #[test]
    fn deterministic_per_seed() {
        let s = StateModel::even_coherent(c(1.0, 0.3)).unwrap();
        assert_eq!(sample_homodyne(&s, 5, 1000, 9).unwrap(), sample_homodyne(&s, 5, 1000, 9).unwrap());
        assert_eq!(sample_heterodyne(&s, 70_000, 9).unwrap(), sample_heterodyne(&s, 70_000, 9).unwrap());
        assert_ne!(sample_heterodyne(&s, 10, 9).unwrap(), sample_heterodyne(&s, 10, 10).unwrap());
    }

    #[test]
    fn heterodyne_zero_is_rejected() {
        assert!(sample_heterodyne(&StateModel::vacuum(), 0, 1).is_err());
    }

    #[test]
    fn fock_heterodyne_radius() {
        let n = 3u32;
        let d = sample_heterodyne(&StateModel::fock(n), 200_000, 5).unwrap();
        let vals: Vec<f64> = d.points.iter().map(|(x, p)| 0.5 * (x * x + p * p)).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        // Gamma(n+1) has mean and variance n + 1.
        let se = ((n + 1) as f64 / vals.len() as f64).sqrt();
        assert!((mean - (n + 1) as f64).abs() < 3.0 * se);
    }

    #[test]
    fn gaussian_heterodyne_covariance() {
        let g = crate::phase_space::CovarianceMatrix::symmetric(0.9, 0.3, 0.4);
        let s = StateModel::gaussian(crate::phase_space::FirstMoments::new(1.0, -0.5), g).unwrap();
        let d = sample_heterodyne(&s, 400_000, 2).unwrap();
        let n = d.len() as f64;
        let (mx, mp) = d.points.iter().fold((0.0, 0.0), |a, (x, p)| (a.0 + x / n, a.1 + p / n));
        let cxx = d.points.iter().map(|(x, _)| (x - mx).powi(2)).sum::<f64>() / n;
        let cxp = d.points.iter().map(|(x, p)| (x - mx) * (p - mp)).sum::<f64>() / n;
        assert!((cxx - 1.4).abs() < 0.01 && (cxp - 0.3).abs() < 0.01);
    }

    #[test]
    fn rejection_bounds_hold_on_fine_grid() {
        let states = [
            StateModel::fock(4),
            StateModel::odd_coherent(c(0.4, 0.0)).unwrap(),
            StateModel::even_coherent(c(2.0, 1.0)).unwrap(),
            StateModel::displaced_fock(c(1.0, -0.5), 2).unwrap(),
            StateModel::photon_added(c(0.8, 0.3), 3).unwrap(),
        ];
        for s in &states {
            for th in [0.0, 0.7, 2.0] {
                let smp = QuadratureSampler::new(s, th).unwrap();
                if let QuadKind::Rejection { density, centers, sd, bound } = &smp.kind {
                    for i in 0..20001 {
                        let x = -15.0 + 30.0 * i as f64 / 20000.0;
                        assert!(density.pdf(x) <= bound * mixture_pdf(x, centers, *sd) * (1.0 + 1e-12) + 1e-300);
                    }
                }
            }
            let smp = HusimiSampler::new(s).unwrap();
            if let HusimiKind::Rejection { density, centers, sd, bound } = &smp.kind {
                for i in 0..400 {
                    for j in 0..400 {
                        let (x, p) = (-10.0 + 0.05 * i as f64, -10.0 + 0.05 * j as f64);
                        assert!(density.pdf(x, p) <= bound * mixture_pdf_2d(x, p, centers, *sd) * (1.0 + 1e-12) + 1e-300);
                    }
                }
            }
        }
    }

    #[test]
    fn large_cat_uses_table_or_cat_envelope() {
        let s = StateModel::even_coherent(c(6.0, 0.0)).unwrap();
        let smp = QuadratureSampler::new(&s, 0.0).unwrap();
        assert!(smp.acceptance() >= MIN_ACCEPTANCE || smp.is_tabulated());
    }

    #[test]
    fn csv_round_trip() {
        let s = StateModel::squeezed(2.0, 0.3).unwrap();
        let d = sample_homodyne(&s, 3, 30, 4).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(HomodyneDataset::read_csv(&buf[..]).unwrap(), d);
        let h = sample_heterodyne(&s, 25, 4).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert_eq!(HeterodyneDataset::read_csv(&buf[..]).unwrap(), h);
        assert!(HeterodyneDataset::read_csv(&b"# state=x\n# seed=1\nx,q\n1,2\n"[..]).is_err());
    }
}
