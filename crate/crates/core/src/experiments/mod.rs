//! Experiment runner behind the `mtlab` command line.

pub mod config;
pub mod report;

use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

pub use config::Config;
pub use report::{Cell, ExperimentReport, Format};

use crate::crb::{
    crb_report, find_crossover, minimize_gamma2, AmplitudeFamily, CrbReport, Crossover, Method, MomentOrder,
    DEFAULT_CROSSOVER_BRACKET,
};
use crate::error::{Error, Result};
use crate::estimators::{monte_carlo_all, McReport, McSettings, Scheme};
use crate::phase_space::{FirstMoments, GaussianShape};
use crate::states::StateModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Crb,
    GammaSweep,
    Crossover,
    Gamma2Min,
    McVerify,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::Crb,
        Experiment::GammaSweep,
        Experiment::Crossover,
        Experiment::Gamma2Min,
        Experiment::McVerify,
        Experiment::Fig2,
        Experiment::Fig3,
        Experiment::Fig4,
        Experiment::Fig5,
        Experiment::Fig6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Crb => "crb",
            Experiment::GammaSweep => "gamma-sweep",
            Experiment::Crossover => "crossover",
            Experiment::Gamma2Min => "gamma2-min",
            Experiment::McVerify => "mc-verify",
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::Fig5 => "fig5",
            Experiment::Fig6 => "fig6",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// Parsed configuration plus the output choices that do not affect results.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub config: Config,
    pub format: Format,
    pub out: Option<String>,
}

impl ExperimentConfig {
    /// `experiment` overrides the config file's `experiment` key when given.
    pub fn new(mut config: Config, experiment: Option<&str>) -> Result<Self> {
        if let Some(e) = experiment {
            config.insert("experiment", e);
        }
        let experiment = Experiment::parse(
            config.get("experiment").ok_or_else(|| Error::Config("no experiment given".into()))?,
        )?;
        let out = config.get("out").map(str::to_string);
        let format = match config.get("format") {
            Some(f) => Format::parse(f)?,
            None if out.as_deref().is_some_and(|o| o.ends_with(".json")) => Format::Json,
            None => Format::Csv,
        };
        Ok(Self { experiment, config, format, out })
    }

    pub fn from_text(text: &str, experiment: Option<&str>) -> Result<Self> {
        Self::new(Config::parse(text)?, experiment)
    }
}

/// Inclusive linear grid `start..=stop` with `steps` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        (0..self.steps)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.steps - 1) as f64)
            .collect()
    }

    fn read(c: &Config, prefix: &str, default: Range) -> Result<Range> {
        let r = Range {
            start: c.parse_or(&format!("{prefix}_start"), default.start)?,
            stop: c.parse_or(&format!("{prefix}_stop"), default.stop)?,
            steps: c.parse_or(&format!("{prefix}_steps"), default.steps)?,
        };
        r.check(prefix)?;
        Ok(r)
    }

    fn check(&self, what: &str) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config(format!("empty sweep `{what}` (steps = 0)")));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::Config(format!("non-finite bounds for `{what}`")));
        }
        Ok(())
    }
}

fn int_range(c: &Config, prefix: &str, default: (u32, u32)) -> Result<Vec<u32>> {
    let a: u32 = c.parse_or(&format!("{prefix}_start"), default.0)?;
    let b: u32 = c.parse_or(&format!("{prefix}_stop"), default.1)?;
    if b < a {
        return Err(Error::Config(format!("empty sweep `{prefix}` ({a} > {b})")));
    }
    Ok((a..=b).collect())
}

/// One swept state key of `gamma-sweep`.
#[derive(Debug, Clone, PartialEq)]
struct Axis {
    key: String,
    values: Vec<f64>,
    integer: bool,
}

const INTEGER_KEYS: [&str; 2] = ["n", "m"];

impl Axis {
    fn read(c: &Config, suffix: &str) -> Result<Option<Axis>> {
        let Some(key) = c.get(&format!("sweep.param{suffix}")).map(str::to_string) else {
            return Ok(None);
        };
        let range = Range {
            start: c.require(&format!("sweep.start{suffix}"))?,
            stop: c.require(&format!("sweep.stop{suffix}"))?,
            steps: c.require(&format!("sweep.steps{suffix}"))?,
        };
        range.check(&key)?;
        let integer = INTEGER_KEYS.contains(&key.as_str());
        let values = range.values();
        if integer && values.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
            return Err(Error::Config(format!("sweep over `{key}` must land on nonnegative integers")));
        }
        Ok(Some(Axis { key, values, integer }))
    }

    fn cell(&self, v: f64) -> Cell {
        if self.integer {
            Cell::Int(v as i64)
        } else {
            Cell::Num(v)
        }
    }

    fn text(&self, v: f64) -> String {
        if self.integer {
            format!("{}", v as i64)
        } else {
            format!("{v}")
        }
    }
}

const CRB_COLUMNS: [&str; 7] = ["h1_hom", "h1_het", "h2_hom", "h2_het", "gamma1", "gamma2", "h2_hom_method"];

fn crb_cells(r: &CrbReport) -> Vec<Cell> {
    let method = match r.methods.h2_hom {
        Method::ClosedForm => "closed_form",
        Method::Quadrature => "quadrature",
    };
    vec![
        r.h1_hom.into(),
        r.h1_het.into(),
        r.h2_hom.into(),
        r.h2_het.into(),
        r.gamma1.into(),
        r.gamma2.into(),
        method.into(),
    ]
}

fn columns(prefix: &[&str], rest: &[&str]) -> Vec<String> {
    prefix.iter().chain(rest).map(|s| s.to_string()).collect()
}

/// Fixed-order parallel map over a grid.
fn par_rows<T: Sync, F>(items: &[T], f: F) -> Result<Vec<Vec<Cell>>>
where
    F: Fn(&T) -> Result<Vec<Cell>> + Sync + Send,
{
    items.par_iter().map(f).collect()
}

enum Plan {
    Crb { state: StateModel },
    GammaSweep { base: BTreeMap<String, String>, axes: Vec<Axis> },
    Crossover { family: AmplitudeFamily, bracket: (f64, f64) },
    Gamma2Min { families: Vec<AmplitudeFamily>, bracket: Option<(f64, f64)> },
    McVerify { state: StateModel, schemes: Vec<Scheme>, orders: Vec<MomentOrder>, settings: McSettings },
    Fig2 { alphas: Vec<f64>, mu: Range, lambda: Range },
    Fig3 { mus: Vec<f64>, x0: Range, p0: Range },
    Fig4 { ns: Vec<u32> },
    Fig5 { alpha: Range },
    Fig6 { families: Vec<AmplitudeFamily> },
}

fn read_family(c: &Config) -> Result<AmplitudeFamily> {
    let name: String = c.require("state.family")?;
    AmplitudeFamily::parse(&name, c.parse_or("state.m", 0)?)
}

fn read_bracket(c: &Config) -> Result<Option<(f64, f64)>> {
    match (c.get("search.lo").is_some(), c.get("search.hi").is_some()) {
        (false, false) => Ok(None),
        (true, true) => {
            let b = (c.require("search.lo")?, c.require("search.hi")?);
            if !(b.0 >= 0.0 && b.1 > b.0) {
                return Err(Error::Config(format!("bad search bracket [{}, {}]", b.0, b.1)));
            }
            Ok(Some(b))
        }
        _ => Err(Error::Config("give both search.lo and search.hi".into())),
    }
}

fn read_seed(c: &Config) -> Result<u64> {
    c.parse_or("seed", 0)
}

fn plan(cfg: &ExperimentConfig) -> Result<Plan> {
    let c = &cfg.config;
    let p = match cfg.experiment {
        Experiment::Crb => Plan::Crb { state: StateModel::from_pairs(&c.section("state"))? },
        Experiment::GammaSweep => {
            let base = c.section("state");
            let axes: Vec<Axis> = [Axis::read(c, "")?, Axis::read(c, "2")?].into_iter().flatten().collect();
            if axes.is_empty() {
                return Err(Error::Config("gamma-sweep needs sweep.param, sweep.start, sweep.stop, sweep.steps".into()));
            }
            Plan::GammaSweep { base, axes }
        }
        Experiment::Crossover => Plan::Crossover {
            family: read_family(c)?,
            bracket: read_bracket(c)?.unwrap_or(DEFAULT_CROSSOVER_BRACKET),
        },
        Experiment::Gamma2Min => {
            let name: String = c.require("state.family")?;
            let ms: Vec<u32> = if c.get("search.m_start").is_some() || c.get("search.m_stop").is_some() {
                int_range(c, "search.m", (0, 0))?
            } else {
                vec![c.parse_or("state.m", 0)?]
            };
            let families = ms.into_iter().map(|m| AmplitudeFamily::parse(&name, m)).collect::<Result<Vec<_>>>()?;
            if families.contains(&AmplitudeFamily::Coherent) {
                return Err(Error::Config("gamma2-min is not defined for coherent states (no interior minimum)".into()));
            }
            Plan::Gamma2Min { families, bracket: read_bracket(c)? }
        }
        Experiment::McVerify => {
            let state = StateModel::from_pairs(&c.section("state"))?;
            let schemes = match c.get("mc.scheme").unwrap_or("all") {
                "all" => vec![Scheme::HomOptimal, Scheme::HomLinear, Scheme::Het],
                list => list.split(',').map(Scheme::parse).collect::<Result<Vec<_>>>()?,
            };
            let orders = match c.get("mc.order").unwrap_or("both") {
                "both" => vec![MomentOrder::First, MomentOrder::Second],
                "first" => vec![MomentOrder::First],
                "second" => vec![MomentOrder::Second],
                other => return Err(Error::Config(format!("mc.order must be first, second or both, got `{other}`"))),
            };
            if schemes.iter().all(|s| orders.iter().all(|o| !s.supports(*o))) {
                return Err(Error::Config("no estimator matches the chosen schemes and orders".into()));
            }
            let settings = McSettings {
                n: c.parse_or("mc.N", 100_000)?,
                trials: c.parse_or("mc.trials", 100)?,
                n_theta: c.parse_or("mc.n_theta", 24)?,
                seed: read_seed(c)?,
            };
            if settings.trials < 2 || settings.n == 0 {
                return Err(Error::Config("mc.N must be positive and mc.trials at least 2".into()));
            }
            Plan::McVerify { state, schemes, orders, settings }
        }
        Experiment::Fig2 => Plan::Fig2 {
            alphas: c.list_or("fig2.alpha0", &[0.0, 0.2, (5.0f64 / 32.0).sqrt(), 0.6, 1.0])?,
            mu: Range::read(c, "fig2.mu", Range { start: 1.0, stop: 4.0, steps: 31 })?,
            lambda: Range::read(c, "fig2.lambda", Range { start: 1.0, stop: 4.0, steps: 31 })?,
        },
        Experiment::Fig3 => Plan::Fig3 {
            mus: c.list_or("fig3.mu", &[1.0, 2.0, 5.0, 10.0])?,
            x0: Range::read(c, "fig3.x0", Range { start: -3.0, stop: 3.0, steps: 25 })?,
            p0: Range::read(c, "fig3.p0", Range { start: -3.0, stop: 3.0, steps: 25 })?,
        },
        Experiment::Fig4 => Plan::Fig4 { ns: int_range(c, "fig4.n", (0, 30))? },
        Experiment::Fig5 => Plan::Fig5 { alpha: Range::read(c, "fig5.alpha", Range { start: 0.0, stop: 3.0, steps: 301 })? },
        Experiment::Fig6 => {
            let names: Vec<String> = c.list_or("fig6.families", &["displaced-fock".to_string(), "photon-added".to_string()])?;
            let ms = int_range(c, "fig6.m", (1, 40))?;
            let mut families = Vec::new();
            for name in &names {
                for &m in &ms {
                    let f = AmplitudeFamily::parse(name, m)?;
                    if matches!(f, AmplitudeFamily::DisplacedFock(0) | AmplitudeFamily::Coherent) {
                        return Err(Error::Config("fig6 needs m >= 1 for displaced Fock states".into()));
                    }
                    families.push(f);
                }
            }
            if families.is_empty() {
                return Err(Error::Config("empty fig6.families".into()));
            }
            Plan::Fig6 { families }
        }
    };
    if matches!(p, Plan::McVerify { .. }) {
        read_seed(c)?;
    } else if c.get("seed").is_some() {
        log::debug!("seed is ignored by deterministic experiment {}", cfg.experiment.name());
    }
    c.check_all_used()?;
    Ok(p)
}

fn gaussian(rx: f64, rp: f64, mu: f64, lambda: f64) -> Result<StateModel> {
    StateModel::gaussian_from_shape(FirstMoments::new(rx, rp), GaussianShape::new(mu, lambda, 0.0)?)
}

fn mc_cells(state: &StateModel, r: &McReport) -> Vec<Cell> {
    vec![
        state.descriptor().into(),
        r.scheme.name().into(),
        match r.order {
            MomentOrder::First => "first",
            MomentOrder::Second => "second",
        }
        .into(),
        r.n.into(),
        r.n_theta.into(),
        r.trials.into(),
        r.scaled_mse.into(),
        r.stderr.into(),
        r.scrb.into(),
        r.ratio.into(),
        r.raw_scaled_mse.into(),
        r.raw_stderr.into(),
        r.control_variate.into(),
        r.failures.into(),
        r.seed.into(),
    ]
}

const MC_COLUMNS: [&str; 15] = [
    "state",
    "scheme",
    "order",
    "N",
    "n_theta",
    "trials",
    "scaled_mse",
    "stderr",
    "scrb",
    "ratio",
    "raw_scaled_mse",
    "raw_stderr",
    "control_variate",
    "failures",
    "seed",
];

/// Validate, execute and collect rows; nothing is written here.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let plan = plan(cfg)?;
    let mut sampled = false;
    let (cols, rows): (Vec<String>, Vec<Vec<Cell>>) = match plan {
        Plan::Crb { state } => {
            let mut row = vec![state.descriptor().into()];
            row.extend(crb_cells(&crb_report(&state)?));
            (columns(&["state"], &CRB_COLUMNS), vec![row])
        }
        Plan::GammaSweep { base, axes } => {
            let grid: Vec<Vec<f64>> = match axes.as_slice() {
                [a] => a.values.iter().map(|&v| vec![v]).collect(),
                [a, b] => a.values.iter().flat_map(|&u| b.values.iter().map(move |&v| vec![u, v])).collect(),
                _ => unreachable!(),
            };
            let rows = par_rows(&grid, |point| {
                let mut map = base.clone();
                for (ax, &v) in axes.iter().zip(point) {
                    map.insert(ax.key.clone(), ax.text(v));
                }
                let state = StateModel::from_pairs(&map)?;
                let mut row: Vec<Cell> = axes.iter().zip(point).map(|(ax, &v)| ax.cell(v)).collect();
                row.extend(crb_cells(&crb_report(&state)?));
                Ok(row)
            })?;
            let names: Vec<&str> = axes.iter().map(|a| a.key.as_str()).collect();
            (columns(&names, &CRB_COLUMNS), rows)
        }
        Plan::Crossover { family, bracket } => {
            let row = match find_crossover(family, bracket)? {
                Crossover::At { alpha0, h2 } => {
                    vec![family.name().into(), family.m().into(), "at".into(), alpha0.into(), h2.into()]
                }
                Crossover::AlwaysBelowUnity => {
                    vec![family.name().into(), family.m().into(), "always_below_unity".into(), Cell::Missing, Cell::Missing]
                }
            };
            (columns(&["family", "m", "kind", "alpha0", "h2"], &[]), vec![row])
        }
        Plan::Gamma2Min { families, bracket } => {
            let rows = par_rows(&families, |f| {
                let r = minimize_gamma2(*f, bracket)?;
                Ok(vec![f.name().into(), f.m().into(), r.alpha0.into(), r.gamma2.into()])
            })?;
            (columns(&["family", "m", "alpha0", "gamma2"], &[]), rows)
        }
        Plan::McVerify { state, schemes, orders, settings } => {
            sampled = true;
            let mut rows = Vec::new();
            for scheme in schemes {
                if !orders.iter().any(|o| scheme.supports(*o)) {
                    continue;
                }
                for r in monte_carlo_all(&state, scheme, &settings)? {
                    if orders.contains(&r.order) {
                        rows.push(mc_cells(&state, &r));
                    }
                }
            }
            (columns(&MC_COLUMNS, &[]), rows)
        }
        Plan::Fig2 { alphas, mu, lambda } => {
            let grid: Vec<(f64, f64, f64)> = alphas
                .iter()
                .flat_map(|&a| mu.values().into_iter().flat_map(move |m| lambda.values().into_iter().map(move |l| (a, m, l))))
                .collect();
            let rows = par_rows(&grid, |&(a, m, l)| {
                let r = crb_report(&gaussian(SQRT_2 * a, 0.0, m, l)?)?;
                Ok(vec![a.into(), m.into(), l.into(), r.h2_hom.into(), r.h2_het.into(), r.gamma2.into()])
            })?;
            (columns(&["alpha0", "mu", "lambda", "h2_hom", "h2_het", "gamma2"], &[]), rows)
        }
        Plan::Fig3 { mus, x0, p0 } => {
            let grid: Vec<(f64, f64, f64)> = mus
                .iter()
                .flat_map(|&m| x0.values().into_iter().flat_map(move |x| p0.values().into_iter().map(move |p| (m, x, p))))
                .collect();
            let rows = par_rows(&grid, |&(m, x, p)| {
                let r = crb_report(&gaussian(x, p, m, m)?)?;
                Ok(vec![m.into(), m.into(), x.into(), p.into(), r.h2_hom.into(), r.h2_het.into(), r.gamma2.into()])
            })?;
            (columns(&["mu", "lambda", "x0", "p0", "h2_hom", "h2_het", "gamma2"], &[]), rows)
        }
        Plan::Fig4 { ns } => {
            let rows = par_rows(&ns, |&n| {
                let mut row = vec![n.into()];
                row.extend(crb_cells(&crb_report(&StateModel::fock(n))?));
                Ok(row)
            })?;
            (columns(&["n"], &CRB_COLUMNS), rows)
        }
        Plan::Fig5 { alpha } => {
            let rows = par_rows(&alpha.values(), |&a| {
                let mut row = vec![a.into()];
                for f in [AmplitudeFamily::EvenCoherent, AmplitudeFamily::OddCoherent] {
                    let r = crb_report(&f.state(a)?)?;
                    row.extend([r.h2_hom.into(), r.h2_het.into(), r.gamma2.into()]);
                }
                Ok(row)
            })?;
            let cols = ["alpha0", "h2_hom_even", "h2_het_even", "gamma2_even", "h2_hom_odd", "h2_het_odd", "gamma2_odd"];
            (columns(&cols, &[]), rows)
        }
        Plan::Fig6 { families } => {
            let rows = par_rows(&families, |f| {
                let r = minimize_gamma2(*f, None)?;
                Ok(vec![f.name().into(), f.m().into(), r.alpha0.into(), r.gamma2.into()])
            })?;
            (columns(&["family", "m", "alpha0", "gamma2"], &[]), rows)
        }
    };
    let mut report = ExperimentReport { meta: Vec::new(), columns: cols, rows };
    report.meta.push(("schema_version".into(), report::SCHEMA_VERSION.to_string()));
    report.meta.push(("tool".into(), format!("mtlab {}", env!("CARGO_PKG_VERSION"))));
    report.meta.push(("experiment".into(), cfg.experiment.name().into()));
    if sampled {
        report.meta.push(("seed".into(), read_seed(&cfg.config)?.to_string()));
    }
    for (k, v) in cfg.config.entries() {
        if !matches!(k.as_str(), "experiment" | "out" | "format") {
            report.meta.push((format!("config.{k}"), v.clone()));
        }
    }
    Ok(report)
}

/// Write the report to `cfg.out`, or to `w` when no path is set.
pub fn emit_report<W: std::io::Write>(r: &ExperimentReport, cfg: &ExperimentConfig, w: W) -> Result<()> {
    match &cfg.out {
        Some(path) => {
            let mut buf = Vec::new();
            r.write(&mut buf, cfg.format)?;
            std::fs::write(path, buf)?;
            Ok(())
        }
        None => r.write(w, cfg.format),
    }
}
