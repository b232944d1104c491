//! Moment estimators for homodyne and heterodyne data, and the Monte-Carlo
//! driver that measures their scaled mean squared error.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector2, Vector3};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use crate::crb::{scrb_het_first, scrb_het_second, scrb_hom_first, scrb_hom_second, MomentOrder};
use crate::error::{Error, Result};
use crate::phase_space::{vec, CovarianceMatrix, FirstMoments, SymmetricVec3};
use crate::rng::{stream, tag};
use crate::sampler::{allocate, check_homodyne_sizes, phases, HeterodyneDataset, HomodyneDataset, HusimiSampler, QuadratureSampler};
use crate::states::StateModel;

/// Phases whose estimated variance falls below this are left out of the
/// optimal-estimator sums.
pub const EPS_VAR: f64 = 1e-9;

/// Trials that fail beyond this fraction abort a Monte-Carlo run.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    HomLinear,
    HomOptimal,
    Het,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::HomLinear => "hom_linear",
            Scheme::HomOptimal => "hom_optimal",
            Scheme::Het => "het",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "hom_linear" | "linear" => Ok(Scheme::HomLinear),
            "hom_optimal" | "hom" | "optimal" => Ok(Scheme::HomOptimal),
            "het" | "heterodyne" => Ok(Scheme::Het),
            other => Err(Error::Config(format!("unknown scheme `{other}` (hom_linear, hom_optimal, het)"))),
        }
    }

    pub fn supports(self, order: MomentOrder) -> bool {
        !(self == Scheme::HomLinear && order == MomentOrder::Second)
    }
}

/// Per-phase empirical moments `(1/N_k) sum_j x_jk^m`, `m = 1..4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessedMoments {
    pub phases: Vec<f64>,
    pub counts: Vec<usize>,
    pub m: Vec<[f64; 4]>,
    pub seed: u64,
}

impl ProcessedMoments {
    /// From per-phase power sums `[sum x, sum x^2, sum x^3, sum x^4]`.
    pub fn from_sums(phases: Vec<f64>, counts: Vec<usize>, sums: &[[f64; 4]], seed: u64) -> Result<Self> {
        if phases.is_empty() || phases.len() != counts.len() || counts.len() != sums.len() {
            return Err(Error::Estimator("phase, count and sum lists must be nonempty and of equal length".into()));
        }
        if let Some(k) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Estimator(format!("empty bin at phase {}", phases[k])));
        }
        let m = counts
            .iter()
            .zip(sums)
            .map(|(&c, s)| {
                let c = c as f64;
                [s[0] / c, s[1] / c, s[2] / c, s[3] / c]
            })
            .collect();
        Ok(Self { phases, counts, m, seed })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// `m2 - m1^2` at phase `k`.
    pub fn var1(&self, k: usize) -> f64 {
        self.m[k][1] - self.m[k][0] * self.m[k][0]
    }

    /// `m4 - m2^2` at phase `k`.
    pub fn var2(&self, k: usize) -> f64 {
        self.m[k][3] - self.m[k][1] * self.m[k][1]
    }

    /// Phases whose first- or second-order denominator is unusable.
    pub fn degenerate(&self, order: MomentOrder) -> Vec<usize> {
        (0..self.phases.len())
            .filter(|&k| {
                let v = match order {
                    MomentOrder::First => self.var1(k),
                    MomentOrder::Second => self.var2(k),
                };
                !(v > EPS_VAR)
            })
            .collect()
    }
}

pub fn processed_moments(d: &HomodyneDataset) -> Result<ProcessedMoments> {
    let sums: Vec<[f64; 4]> = d
        .samples
        .iter()
        .map(|xs| {
            let mut s = [0.0; 4];
            for &x in xs {
                let x2 = x * x;
                s[0] += x;
                s[1] += x2;
                s[2] += x2 * x;
                s[3] += x2 * x2;
            }
            s
        })
        .collect();
    ProcessedMoments::from_sums(d.phases.clone(), d.counts(), &sums, d.seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "order", rename_all = "lowercase")]
pub enum EstimateValue {
    First { r_hat: FirstMoments },
    Second { g2_hat: CovarianceMatrix },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub scheme: Scheme,
    #[serde(flatten)]
    pub value: EstimateValue,
    /// Raw heterodyne second-moment matrix, before the `I/2` shift.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g2_het_hat: Option<CovarianceMatrix>,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
}

impl MomentEstimate {
    pub fn r_hat(&self) -> Option<FirstMoments> {
        match self.value {
            EstimateValue::First { r_hat } => Some(r_hat),
            EstimateValue::Second { .. } => None,
        }
    }

    pub fn g2_hat(&self) -> Option<CovarianceMatrix> {
        match self.value {
            EstimateValue::Second { g2_hat } => Some(g2_hat),
            EstimateValue::First { .. } => None,
        }
    }
}

fn first(scheme: Scheme, r: Vector2<f64>, n: usize, seed: u64) -> MomentEstimate {
    MomentEstimate { scheme, value: EstimateValue::First { r_hat: FirstMoments::new(r[0], r[1]) }, g2_het_hat: None, n, seed }
}

fn u_vec(theta: f64) -> Vector2<f64> {
    let (s, c) = theta.sin_cos();
    Vector2::new(c, s)
}

fn m_vec(theta: f64) -> Vector3<f64> {
    let (s, c) = theta.sin_cos();
    Vector3::new(c * c, SQRT_2 * c * s, s * s)
}

/// Pseudoinverse of the stacked directions applied to the per-phase means.
pub fn linear_first_estimator(p: &ProcessedMoments) -> Result<MomentEstimate> {
    let n = p.phases.len();
    let l = DMatrix::from_fn(n, 2, |k, j| u_vec(p.phases[k])[j]);
    let y = DVector::from_fn(n, |k, _| p.m[k][0]);
    let svd = l.svd(true, true);
    let smax = svd.singular_values.max();
    if !(svd.singular_values.min() > 1e-10 * smax) {
        return Err(Error::Singular("linear first-moment design (need two distinct phases)"));
    }
    let pinv = svd.pseudo_inverse(1e-10 * smax).map_err(|e| Error::Estimator(e.to_string()))?;
    let r = &pinv * y;
    Ok(first(Scheme::HomLinear, Vector2::new(r[0], r[1]), p.total(), p.seed))
}

/// `W1^{-1} sum_k u_k N_k m1_k / v_k` with per-phase variance weights.
fn weighted_first(p: &ProcessedMoments, var: impl Fn(usize) -> f64) -> Result<(Vector2<f64>, Matrix2<f64>)> {
    let mut w = Matrix2::zeros();
    let mut b = Vector2::zeros();
    for k in 0..p.phases.len() {
        let v = var(k);
        if !(v > EPS_VAR) {
            continue;
        }
        let u = u_vec(p.phases[k]);
        let wk = p.counts[k] as f64 / v;
        w += wk * u * u.transpose();
        b += wk * p.m[k][0] * u;
    }
    let inv = w.try_inverse().ok_or(Error::Singular("W1"))?;
    Ok((inv * b, inv))
}

/// `W2^{-1} sum_k vec(m_k) N_k m2_k / v_k` with fourth-moment weights.
fn weighted_second(p: &ProcessedMoments, var: impl Fn(usize) -> f64) -> Result<(Vector3<f64>, Matrix3<f64>)> {
    let mut w = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for k in 0..p.phases.len() {
        let v = var(k);
        if !(v > EPS_VAR) {
            continue;
        }
        let m = m_vec(p.phases[k]);
        let wk = p.counts[k] as f64 / v;
        w += wk * m * m.transpose();
        b += wk * p.m[k][1] * m;
    }
    let inv = w.try_inverse().ok_or(Error::Singular("W2"))?;
    Ok((inv * b, inv))
}

fn warn_degenerate(p: &ProcessedMoments, order: MomentOrder) {
    let bad = p.degenerate(order);
    if !bad.is_empty() {
        log::warn!("{} of {} phases have degenerate {order:?}-order variance and are skipped", bad.len(), p.phases.len());
    }
}

pub fn optimal_first_estimator(p: &ProcessedMoments) -> Result<MomentEstimate> {
    warn_degenerate(p, MomentOrder::First);
    let (r, _) = weighted_first(p, |k| p.var1(k))?;
    Ok(first(Scheme::HomOptimal, r, p.total(), p.seed))
}

pub fn optimal_second_estimator(p: &ProcessedMoments) -> Result<MomentEstimate> {
    if p.phases.len() < 3 {
        return Err(Error::Estimator(format!("second moments need at least 3 phases, got {}", p.phases.len())));
    }
    warn_degenerate(p, MomentOrder::Second);
    let (v, _) = weighted_second(p, |k| p.var2(k))?;
    Ok(MomentEstimate {
        scheme: Scheme::HomOptimal,
        value: EstimateValue::Second { g2_hat: SymmetricVec3::new(v[0], v[1], v[2]).unvec() },
        g2_het_hat: None,
        n: p.total(),
        seed: p.seed,
    })
}

/// Power sums of heterodyne points: `[x, p, x^2, xp, p^2]`.
fn het_sums(points: &[(f64, f64)]) -> [f64; 5] {
    let mut s = [0.0; 5];
    for &(x, p) in points {
        s[0] += x;
        s[1] += p;
        s[2] += x * x;
        s[3] += x * p;
        s[4] += p * p;
    }
    s
}

fn het_first_from_sums(s: &[f64; 5], n: usize, seed: u64) -> MomentEstimate {
    let nf = n as f64;
    first(Scheme::Het, Vector2::new(s[0] / nf, s[1] / nf), n, seed)
}

fn het_second_from_sums(s: &[f64; 5], n: usize, seed: u64) -> MomentEstimate {
    let nf = n as f64;
    let g2het = CovarianceMatrix::symmetric(s[2] / nf, s[3] / nf, s[4] / nf);
    MomentEstimate {
        scheme: Scheme::Het,
        value: EstimateValue::Second { g2_hat: g2het.add_scalar(-0.5) },
        g2_het_hat: Some(g2het),
        n,
        seed,
    }
}

pub fn het_first_estimator(d: &HeterodyneDataset) -> Result<MomentEstimate> {
    if d.is_empty() {
        return Err(Error::Estimator("empty heterodyne dataset".into()));
    }
    Ok(het_first_from_sums(&het_sums(&d.points), d.len(), d.seed))
}

/// Returns `G2_het` in `g2_het_hat` and `G2_het - I/2` as the estimate.
pub fn het_second_estimator(d: &HeterodyneDataset) -> Result<MomentEstimate> {
    if d.is_empty() {
        return Err(Error::Estimator("empty heterodyne dataset".into()));
    }
    Ok(het_second_from_sums(&het_sums(&d.points), d.len(), d.seed))
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut s = Neumaier::default();
    xs.iter().for_each(|&x| s.add(x));
    let mean = s.value() / n;
    let mut v = Neumaier::default();
    xs.iter().for_each(|&x| v.add((x - mean) * (x - mean)));
    (mean, (v.value() / (n - 1.0) / n).sqrt())
}

/// Monte-Carlo summary for one scheme and moment order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub scheme: Scheme,
    pub order: MomentOrder,
    #[serde(rename = "N")]
    pub n: usize,
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_theta: Option<usize>,
    /// Mean of `N |error|^2` over trials (control-variate corrected when
    /// `control_variate` is set).
    pub scaled_mse: f64,
    pub stderr: f64,
    pub scrb: f64,
    pub ratio: f64,
    pub seed: u64,
    /// Plain trial mean of `N |error|^2`.
    pub raw_scaled_mse: f64,
    pub raw_stderr: f64,
    pub control_variate: bool,
    pub failures: usize,
    /// Trial mean of the error vector (`r` or `vec G2`) and its standard error.
    pub mean_error: Vec<f64>,
    pub mean_error_stderr: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McSettings {
    #[serde(rename = "N")]
    pub n: usize,
    pub trials: usize,
    pub n_theta: usize,
    pub seed: u64,
}

/// One trial's errors for an order: estimator error and, for homodyne, the
/// error of the true-weight estimator on the same data.
#[derive(Debug, Clone)]
struct TrialErrors {
    est: Vec<f64>,
    blue: Option<(Vec<f64>, f64)>,
}

fn hom_sums<R: Rng>(sampler: &QuadratureSampler, n: usize, rng: &mut R) -> [f64; 4] {
    let mut s = [0.0; 4];
    for _ in 0..n {
        let x = sampler.sample(rng);
        let x2 = x * x;
        s[0] += x;
        s[1] += x2;
        s[2] += x2 * x;
        s[3] += x2 * x2;
    }
    s
}

struct HomSetup {
    phases: Vec<f64>,
    counts: Vec<usize>,
    samplers: Vec<QuadratureSampler>,
    true_var1: Vec<f64>,
    true_var2: Vec<f64>,
}

impl HomSetup {
    fn new(s: &StateModel, n_theta: usize, n: usize) -> Result<Self> {
        check_homodyne_sizes(n_theta, n)?;
        let phases = phases(n_theta);
        let samplers = phases.iter().map(|&t| QuadratureSampler::new(s, t)).collect::<Result<Vec<_>>>()?;
        let tables: Vec<_> = phases.iter().map(|&t| s.quadrature_moments(t)).collect();
        Ok(Self {
            counts: allocate(n, n_theta),
            true_var1: tables.iter().map(|t| t.variance()).collect(),
            true_var2: tables.iter().map(|t| t.variance_sq()).collect(),
            samplers,
            phases,
        })
    }

    fn trial(&self, seed: u64, t: usize) -> Result<ProcessedMoments> {
        let sums: Vec<[f64; 4]> = self
            .samplers
            .iter()
            .zip(&self.counts)
            .enumerate()
            .map(|(k, (smp, &nk))| hom_sums(smp, nk, &mut stream(seed, &[tag::TRIAL, t as u64, tag::HOMODYNE_PHASE, k as u64])))
            .collect();
        ProcessedMoments::from_sums(self.phases.clone(), self.counts.clone(), &sums, seed)
    }
}

fn first_err(e: &MomentEstimate, truth: FirstMoments) -> Vec<f64> {
    let r = e.r_hat().expect("first-order estimate");
    vec![r.rx - truth.rx, r.rp - truth.rp]
}

fn second_err(g: &CovarianceMatrix, truth: &CovarianceMatrix) -> Vec<f64> {
    vec(&g.sub(truth)).as_array().to_vec()
}

fn run_hom(s: &StateModel, scheme: Scheme, cfg: &McSettings) -> Result<Vec<Vec<Result<TrialErrors>>>> {
    let setup = HomSetup::new(s, cfg.n_theta, cfg.n)?;
    let r = s.first_moments();
    let g2 = s.second_moment_matrix();
    let outcomes: Vec<Result<ProcessedMoments>> =
        (0..cfg.trials).into_par_iter().map(|t| setup.trial(cfg.seed, t)).collect();
    let mut firsts = Vec::with_capacity(cfg.trials);
    let mut seconds = Vec::with_capacity(cfg.trials);
    for o in outcomes {
        let p = o?;
        let blue1 = weighted_first(&p, |k| setup.true_var1[k]).map(|(v, w)| {
            (vec![v[0] - r.rx, v[1] - r.rp], w.trace())
        });
        match scheme {
            Scheme::HomLinear => {
                firsts.push(linear_first_estimator(&p).and_then(|e| {
                    Ok(TrialErrors { est: first_err(&e, r), blue: Some(blue1?) })
                }));
            }
            _ => {
                firsts.push(optimal_first_estimator(&p).and_then(|e| {
                    Ok(TrialErrors { est: first_err(&e, r), blue: Some(blue1?) })
                }));
                let blue2 = weighted_second(&p, |k| setup.true_var2[k])
                    .map(|(v, w)| (vec![v[0] - vec(&g2).v1, v[1] - vec(&g2).v2, v[2] - vec(&g2).v3], w.trace()));
                seconds.push(optimal_second_estimator(&p).and_then(|e| {
                    Ok(TrialErrors { est: second_err(&e.g2_hat().unwrap(), &g2), blue: Some(blue2?) })
                }));
            }
        }
    }
    Ok(vec![firsts, seconds])
}

fn run_het(s: &StateModel, cfg: &McSettings) -> Result<Vec<Vec<Result<TrialErrors>>>> {
    let sampler = HusimiSampler::new(s)?;
    let r = s.first_moments();
    let g2 = s.second_moment_matrix();
    let sums: Vec<[f64; 5]> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(cfg.seed, &[tag::TRIAL, t as u64, tag::HETERODYNE_CHUNK]);
            let mut s = [0.0; 5];
            for _ in 0..cfg.n {
                let (x, p) = sampler.sample(&mut rng);
                s[0] += x;
                s[1] += p;
                s[2] += x * x;
                s[3] += x * p;
                s[4] += p * p;
            }
            s
        })
        .collect();
    let firsts = sums
        .iter()
        .map(|sm| Ok(TrialErrors { est: first_err(&het_first_from_sums(sm, cfg.n, cfg.seed), r), blue: None }))
        .collect();
    let seconds = sums
        .iter()
        .map(|sm| {
            let g = het_second_from_sums(sm, cfg.n, cfg.seed).g2_hat().unwrap();
            Ok(TrialErrors { est: second_err(&g, &g2), blue: None })
        })
        .collect();
    Ok(vec![firsts, seconds])
}

fn summarize(
    scheme: Scheme,
    order: MomentOrder,
    cfg: &McSettings,
    scrb: f64,
    trials: Vec<Result<TrialErrors>>,
) -> Result<McReport> {
    let total = trials.len();
    let mut ok = Vec::with_capacity(total);
    let mut failures = 0usize;
    let mut first_failure = None;
    for t in trials {
        match t {
            Ok(e) if e.est.iter().all(|v| v.is_finite()) => ok.push(e),
            Ok(_) => failures += 1,
            Err(e) => {
                failures += 1;
                first_failure.get_or_insert(e.to_string());
            }
        }
    }
    if failures as f64 > MAX_FAILURE_FRACTION * total as f64 || ok.len() < 2 {
        return Err(Error::Estimator(format!(
            "{failures} of {total} trials failed ({})",
            first_failure.unwrap_or_else(|| "non-finite estimate".into())
        )));
    }
    let nf = cfg.n as f64;
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let raw: Vec<f64> = ok.iter().map(|e| nf * sq(&e.est)).collect();
    let (raw_mean, raw_se) = mean_stderr(&raw);
    let cv = ok.iter().all(|e| e.blue.is_some());
    let (mean, se) = if cv {
        // True-weight estimator on the same data: E[N |e|^2] = N Tr W^{-1}.
        let y: Vec<f64> = ok
            .iter()
            .map(|e| {
                let (b, tr) = e.blue.as_ref().unwrap();
                nf * sq(&e.est) - (nf * sq(b) - nf * tr)
            })
            .collect();
        mean_stderr(&y)
    } else {
        (raw_mean, raw_se)
    };
    let dim = ok[0].est.len();
    let (mean_error, mean_error_stderr) = (0..dim)
        .map(|i| mean_stderr(&ok.iter().map(|e| e.est[i]).collect::<Vec<_>>()))
        .unzip();
    Ok(McReport {
        scheme,
        order,
        n: cfg.n,
        trials: total,
        n_theta: (scheme != Scheme::Het).then_some(cfg.n_theta),
        scaled_mse: mean,
        stderr: se,
        scrb,
        ratio: mean / scrb,
        seed: cfg.seed,
        raw_scaled_mse: raw_mean,
        raw_stderr: raw_se,
        control_variate: cv,
        failures,
        mean_error,
        mean_error_stderr,
    })
}

fn check_settings(cfg: &McSettings) -> Result<()> {
    if cfg.trials < 2 {
        return Err(Error::InvalidParameter(format!("trials = {}; at least 2 are needed", cfg.trials)));
    }
    if cfg.n == 0 {
        return Err(Error::InvalidParameter("N must be positive".into()));
    }
    Ok(())
}

/// Every order the scheme supports, all computed from the same simulated data.
pub fn monte_carlo_all(s: &StateModel, scheme: Scheme, cfg: &McSettings) -> Result<Vec<McReport>> {
    check_settings(cfg)?;
    let runs = match scheme {
        Scheme::Het => run_het(s, cfg)?,
        _ => run_hom(s, scheme, cfg)?,
    };
    let mut out = Vec::new();
    for (order, trials) in [MomentOrder::First, MomentOrder::Second].into_iter().zip(runs) {
        if !scheme.supports(order) {
            continue;
        }
        let scrb = match (scheme, order) {
            (Scheme::Het, MomentOrder::First) => scrb_het_first(s),
            (Scheme::Het, MomentOrder::Second) => scrb_het_second(s),
            (_, MomentOrder::First) => scrb_hom_first(s),
            (_, MomentOrder::Second) => scrb_hom_second(s)?.0,
        };
        out.push(summarize(scheme, order, cfg, scrb, trials)?);
    }
    Ok(out)
}

/// Scaled MSE of one estimator with its standard error.
pub fn monte_carlo_mse(s: &StateModel, scheme: Scheme, order: MomentOrder, cfg: &McSettings) -> Result<McReport> {
    if !scheme.supports(order) {
        return Err(Error::Config(format!("scheme {} has no {order:?}-order estimator", scheme.name())));
    }
    monte_carlo_all(s, scheme, cfg)?
        .into_iter()
        .find(|r| r.order == order)
        .ok_or_else(|| Error::Estimator("missing order in Monte-Carlo output".into()))
}
