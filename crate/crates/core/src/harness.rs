//! Learning-rate by sample-size sweeps, boundary fits and result files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::dynamics::{alignment_at_steps, median, run, RunConfig};
use crate::error::{Error, Result};
use crate::model::{InitMode, NoiseSpec, TeacherSpec};
use crate::oracles::{mu_table, OracleKind, OracleSpec};
use crate::poly::MonomialPoly;
use crate::rng::SeedTree;
use crate::theory::{analytic_boundaries, gamma_auto, phase_boundaries, GammaMode, PhaseBoundary};

/// `count` log-spaced points from `min` to `max` inclusive.
pub fn log_grid(count: usize, min: f64, max: f64) -> Result<Vec<f64>> {
    if count == 0 || !(min > 0.0) || !(max >= min) {
        return Err(Error::InvalidArgument(format!("bad log grid ({count}, {min}, {max})")));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let (a, b) = (min.ln(), max.ln());
    Ok((0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect())
}

/// Rounded log grid of sample sizes with duplicates removed.
pub fn log_grid_usize(count: usize, min: usize, max: usize) -> Result<Vec<usize>> {
    let mut g: Vec<usize> = log_grid(count, min as f64, max as f64)?
        .into_iter()
        .map(|v| v.round() as usize)
        .collect();
    g.dedup();
    Ok(g)
}

/// Which learning rate the sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Eta,
    Gamma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Seeding {
    /// An independent run per (rate, n, replicate) with seed
    /// `hash(master, rate index, n index, replicate)`.
    PerCell,
    /// One run per (rate, replicate) with seed `hash(master, replicate)`,
    /// read at every `n` on the grid.
    SharedStream,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NStarRule {
    Median,
    Mean,
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub base: RunConfig,
    pub axis: SweepAxis,
    /// Values of the swept rate, strictly increasing.
    pub rate_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub jobs: usize,
    pub seeding: Seeding,
    pub rule: NStarRule,
    /// Fixed `gamma` for eta sweeps; `None` uses `gamma_auto`.
    pub gamma: Option<f64>,
    /// Multiplier applied to `gamma_auto`.
    pub gamma_scale: f64,
    pub master_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let inc_f = self.rate_grid.windows(2).all(|w| w[0] < w[1]);
        let inc_n = self.n_grid.windows(2).all(|w| w[0] < w[1]);
        if self.rate_grid.is_empty() || self.n_grid.is_empty() || !inc_f || !inc_n {
            return Err(Error::Config("grids must be nonempty and strictly increasing".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be >= 1".into()));
        }
        if self.n_grid[0] < self.base.batch {
            return Err(Error::Config(format!(
                "smallest n ({}) is below the batch size ({})",
                self.n_grid[0], self.base.batch
            )));
        }
        Ok(())
    }

    /// Oracle settings of row `k` of the rate grid.
    pub fn oracle_at(&self, k: usize) -> Result<OracleSpec> {
        let mut o = self.base.oracle.clone();
        let v = self.rate_grid[k];
        match self.axis {
            SweepAxis::Gamma => o.gamma = v,
            SweepAxis::Eta => {
                o.eta = v;
                o.gamma = match self.gamma {
                    Some(g) => g,
                    None => self.gamma_scale * gamma_auto(&o, &self.base.teacher.link, &[], self.base.d(), GammaMode::Weak)?,
                };
            }
        }
        Ok(o)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    /// Value of the swept rate.
    pub rate: f64,
    pub gamma: f64,
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    /// NaN when the run diverged.
    pub final_alignment: f64,
    pub recovered: bool,
    pub samples_seen: usize,
    pub diverged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub rate: f64,
    pub n_star: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rate_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub threshold: f64,
    pub rule: NStarRule,
    pub cells: Vec<Cell>,
    pub summary: Vec<SummaryRow>,
}

impl SweepResult {
    /// Aggregated final alignment per (rate, n), row-major.
    pub fn aggregate_grid(&self) -> Vec<Vec<f64>> {
        aggregate(&self.cells, &self.rate_grid, &self.n_grid, self.rule)
    }
}

pub fn sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    spec.base.validate()?;
    let oracles: Vec<OracleSpec> = (0..spec.rate_grid.len()).map(|k| spec.oracle_at(k)).collect::<Result<_>>()?;
    let master = SeedTree::new(spec.master_seed);
    let c = spec.base.weak_threshold;
    let b = spec.base.batch;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let make_cell = |k: usize, n: usize, r: usize, seed: u64, kappa: f64| {
        let diverged = kappa.is_nan();
        Cell {
            rate: spec.rate_grid[k],
            gamma: oracles[k].gamma,
            n,
            replicate: r,
            seed,
            final_alignment: kappa,
            recovered: kappa >= c,
            samples_seen: (n / b) * b,
            diverged,
        }
    };

    let cells: Vec<Cell> = match spec.seeding {
        Seeding::PerCell => {
            let tasks: Vec<(usize, usize, usize)> = (0..spec.rate_grid.len())
                .flat_map(|k| (0..spec.n_grid.len()).flat_map(move |m| (0..spec.replicates).map(move |r| (k, m, r))))
                .collect();
            pool.install(|| {
                tasks
                    .par_iter()
                    .map(|&(k, m, r)| {
                        let seed = master.child(k as u64).child(m as u64).child(r as u64).seed();
                        let n = spec.n_grid[m];
                        let cfg = RunConfig {
                            oracle: oracles[k].clone(),
                            n,
                            seed: SeedTree::new(seed),
                            audit: false,
                            ..spec.base.clone()
                        };
                        let t = run(&cfg)?;
                        let kappa = if t.diverged { f64::NAN } else { t.final_alignment() };
                        Ok(make_cell(k, n, r, seed, kappa))
                    })
                    .collect::<Result<Vec<_>>>()
            })?
        }
        Seeding::SharedStream => {
            let steps: Vec<usize> = spec.n_grid.iter().map(|&n| n / b).collect();
            let tasks: Vec<(usize, usize)> = (0..spec.rate_grid.len())
                .flat_map(|k| (0..spec.replicates).map(move |r| (k, r)))
                .collect();
            let runs: Vec<(usize, usize, u64, Vec<f64>)> = pool.install(|| {
                tasks
                    .par_iter()
                    .map(|&(k, r)| {
                        let seed = master.child(r as u64).seed();
                        let cfg = RunConfig {
                            oracle: oracles[k].clone(),
                            seed: SeedTree::new(seed),
                            audit: false,
                            ..spec.base.clone()
                        };
                        Ok((k, r, seed, alignment_at_steps(&cfg, &steps)?))
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            let mut by_key: BTreeMap<(usize, usize), (u64, Vec<f64>)> = BTreeMap::new();
            for (k, r, seed, v) in runs {
                by_key.insert((k, r), (seed, v));
            }
            let mut cells = Vec::new();
            for k in 0..spec.rate_grid.len() {
                for (m, &n) in spec.n_grid.iter().enumerate() {
                    for r in 0..spec.replicates {
                        let (seed, v) = &by_key[&(k, r)];
                        cells.push(make_cell(k, n, r, *seed, v[m]));
                    }
                }
            }
            cells
        }
    };
    let summary = summarize(&cells, &spec.rate_grid, &spec.n_grid, c, spec.rule);
    Ok(SweepResult {
        axis: spec.axis,
        rate_grid: spec.rate_grid.clone(),
        n_grid: spec.n_grid.clone(),
        threshold: c,
        rule: spec.rule,
        cells,
        summary,
    })
}

fn position(grid: &[f64], v: f64) -> Option<usize> {
    grid.iter().position(|g| *g == v)
}

fn aggregate(cells: &[Cell], rates: &[f64], ns: &[usize], rule: NStarRule) -> Vec<Vec<f64>> {
    let mut buckets = vec![vec![Vec::new(); ns.len()]; rates.len()];
    for c in cells {
        if let (Some(k), Some(m)) = (position(rates, c.rate), ns.iter().position(|n| *n == c.n)) {
            buckets[k][m].push(c.final_alignment);
        }
    }
    buckets
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| match rule {
                    NStarRule::Median => median(v),
                    // diverged runs count as zero alignment
                    NStarRule::Mean if v.is_empty() => f64::NAN,
                    NStarRule::Mean => v.iter().map(|x| if x.is_nan() { 0.0 } else { *x }).sum::<f64>() / v.len() as f64,
                })
                .collect()
        })
        .collect()
}

/// Smallest grid `n` per rate whose aggregated final alignment reaches the
/// threshold. Depends only on the cells.
pub fn summarize(cells: &[Cell], rates: &[f64], ns: &[usize], threshold: f64, rule: NStarRule) -> Vec<SummaryRow> {
    aggregate(cells, rates, ns, rule)
        .iter()
        .zip(rates)
        .map(|(row, &rate)| SummaryRow {
            rate,
            n_star: ns.iter().zip(row).find(|(_, a)| **a >= threshold).map(|(n, _)| *n),
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub points: usize,
}

/// OLS of `log n*` on `log rate` over rows with `rate` in `window` and a
/// finite `n*`.
pub fn fit_boundary_slope(summary: &[SummaryRow], window: (f64, f64)) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> = summary
        .iter()
        .filter(|r| r.rate >= window.0 && r.rate <= window.1)
        .filter_map(|r| r.n_star.map(|n| (r.rate.ln(), (n as f64).ln())))
        .collect();
    const NEED: usize = 4;
    if pts.len() < NEED {
        return Err(Error::InsufficientPoints {
            lo: window.0,
            hi: window.1,
            found: pts.len(),
            need: NEED,
        });
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("window holds a single rate".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (ssr / (m - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        stderr,
        points: pts.len(),
    })
}

/// Largest ratio `max n* / min n*` over rows in `window` with finite `n*`.
pub fn flat_spread(summary: &[SummaryRow], window: (f64, f64)) -> Option<f64> {
    let ns: Vec<f64> = summary
        .iter()
        .filter(|r| r.rate >= window.0 && r.rate <= window.1)
        .filter_map(|r| r.n_star.map(|n| n as f64))
        .collect();
    if ns.is_empty() {
        return None;
    }
    let hi = ns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = ns.iter().copied().fold(f64::INFINITY, f64::min);
    Some(hi / lo)
}

/// Rate where the fitted decay line reaches the median `n*` of the flat
/// window.
pub fn knee_location(summary: &[SummaryRow], flat_window: (f64, f64), decay_window: (f64, f64)) -> Result<f64> {
    let flat: Vec<f64> = summary
        .iter()
        .filter(|r| r.rate >= flat_window.0 && r.rate <= flat_window.1)
        .filter_map(|r| r.n_star.map(|n| n as f64))
        .collect();
    if flat.is_empty() {
        return Err(Error::InsufficientPoints {
            lo: flat_window.0,
            hi: flat_window.1,
            found: 0,
            need: 1,
        });
    }
    let level = median(&flat).ln();
    let fit = fit_boundary_slope(summary, decay_window)?;
    if fit.slope == 0.0 {
        return Err(Error::InvalidArgument("decay fit has zero slope".into()));
    }
    Ok(((level - fit.intercept) / fit.slope).exp())
}

fn fmt_opt(v: Option<usize>) -> String {
    v.map_or_else(|| "none".to_string(), |n| n.to_string())
}

pub fn cells_csv(result: &SweepResult) -> String {
    let mut s = String::from("eta,n,replicate,seed,final_alignment,recovered,samples_seen,diverged\n");
    for c in &result.cells {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            c.rate,
            c.n,
            c.replicate,
            c.seed,
            c.final_alignment,
            c.recovered as u8,
            c.samples_seen,
            c.diverged as u8
        );
    }
    s
}

pub fn summary_csv(summary: &[SummaryRow]) -> String {
    let mut s = String::from("eta,n_star\n");
    for r in summary {
        let _ = writeln!(s, "{},{}", r.rate, fmt_opt(r.n_star));
    }
    s
}

pub fn phase_csv(boundaries: &[PhaseBoundary]) -> String {
    let mut s = String::from("i,j,eta_star\n");
    for b in boundaries {
        let _ = writeln!(s, "{},{},{}", b.i, b.j, b.eta_star);
    }
    s
}

/// Rows are rates, columns are sample sizes, entries are 1 when the
/// aggregated alignment reaches the threshold.
pub fn plotdata(result: &SweepResult) -> String {
    let grid = result.aggregate_grid();
    let mut s = String::from("eta");
    for n in &result.n_grid {
        let _ = write!(s, " {n}");
    }
    s.push('\n');
    for (rate, row) in result.rate_grid.iter().zip(&grid) {
        let _ = write!(s, "{rate}");
        for a in row {
            let _ = write!(s, " {}", (*a >= result.threshold) as u8);
        }
        s.push('\n');
    }
    s
}

pub fn markers(boundaries: &[PhaseBoundary]) -> String {
    let mut s = String::from("# i j eta_star exponent active degenerate\n");
    for b in boundaries {
        let e = b.exponent.map_or_else(|| "none".to_string(), |e| e.to_string());
        let _ = writeln!(s, "{} {} {} {} {} {}", b.i, b.j, b.eta_star, e, b.active as u8, b.degenerate as u8);
    }
    s
}

/// Writes `cells.csv`, `summary.csv`, `phase.csv`, `grid.plotdata` and the
/// marker sidecar `grid.markers` into `dir`.
pub fn emit(result: &SweepResult, boundaries: &[PhaseBoundary], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("cells.csv"), cells_csv(result))?;
    fs::write(dir.join("summary.csv"), summary_csv(&result.summary))?;
    fs::write(dir.join("phase.csv"), phase_csv(boundaries))?;
    fs::write(dir.join("grid.plotdata"), plotdata(result))?;
    fs::write(dir.join("grid.markers"), markers(boundaries))?;
    Ok(())
}

/// Phase boundaries of the swept oracle over the rate grid, computed from
/// drift coefficients of the exact mixed Hermite table.
pub fn sweep_boundaries(spec: &SweepSpec) -> Result<Vec<PhaseBoundary>> {
    if spec.axis != SweepAxis::Eta || spec.base.oracle.kind == OracleKind::Online {
        return Ok(Vec::new());
    }
    let base = &spec.base;
    let hints = analytic_boundaries(&base.oracle, &base.teacher.link)?;
    let lo = spec.rate_grid[0];
    let hi = *spec.rate_grid.last().unwrap();
    if hi <= lo {
        return Ok(Vec::new());
    }
    phase_boundaries(
        |eta| {
            let o = OracleSpec { eta, ..base.oracle.clone() };
            Ok(mu_table(&o, &base.teacher.link, &base.teacher.noise, base.d())?.drift_coeffs())
        },
        base.d(),
        (lo, hi),
        &hints,
    )
}

/// Line-oriented `key = value` configuration. `#` starts a comment.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub oracle: OracleKind,
    pub link: String,
    pub act: String,
    pub d: usize,
    pub depth: usize,
    pub width: usize,
    pub noise: String,
    pub tau: f64,
    pub init: InitMode,
    pub axis: SweepAxis,
    pub rate_min: f64,
    pub rate_max: f64,
    pub rate_count: usize,
    /// Fixed eta for gamma sweeps.
    pub eta: f64,
    /// `None` selects `gamma_auto`.
    pub gamma: Option<f64>,
    pub gamma_scale: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub n_count: usize,
    pub batch: usize,
    pub replicates: usize,
    pub threshold: f64,
    pub seed: u64,
    pub jobs: usize,
    pub seeding: Seeding,
    pub rule: NStarRule,
    pub out: String,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            oracle: OracleKind::Alternating,
            link: "He3".into(),
            act: "He3".into(),
            d: 50,
            depth: 3,
            width: 1,
            noise: "none".into(),
            tau: 0.0,
            init: InitMode::PinnedAlignment,
            axis: SweepAxis::Eta,
            rate_min: 1e-3,
            rate_max: 1.0,
            rate_count: 50,
            eta: 0.0,
            gamma: None,
            gamma_scale: 1.0,
            n_min: 1000,
            n_max: 500_000,
            n_count: 100,
            batch: 128,
            replicates: 10,
            threshold: 0.5,
            seed: 0,
            jobs: 1,
            seeding: Seeding::PerCell,
            rule: NStarRule::Median,
            out: "sweep_out".into(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

impl SweepConfig {
    pub const KEYS: &'static [&'static str] = &[
        "oracle", "link", "act", "d", "depth", "width", "noise", "tau", "init", "axis", "rate_min", "rate_max",
        "rate_count", "eta", "gamma", "gamma_scale", "n_min", "n_max", "n_count", "batch", "replicates", "threshold",
        "seed", "jobs", "seeding", "rule", "out",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "oracle" => self.oracle = OracleKind::parse(v)?,
            "link" => self.link = v.to_string(),
            "act" => self.act = v.to_string(),
            "d" => self.d = parse_num(key, v)?,
            "depth" => self.depth = parse_num(key, v)?,
            "width" => self.width = parse_num(key, v)?,
            "noise" => self.noise = v.to_string(),
            "tau" => self.tau = parse_num(key, v)?,
            "init" => self.init = InitMode::parse(v)?,
            "axis" => {
                self.axis = match v {
                    "eta" => SweepAxis::Eta,
                    "gamma" => SweepAxis::Gamma,
                    _ => return Err(Error::Config(format!("`axis` must be eta or gamma, got `{v}`"))),
                }
            }
            "rate_min" => self.rate_min = parse_num(key, v)?,
            "rate_max" => self.rate_max = parse_num(key, v)?,
            "rate_count" => self.rate_count = parse_num(key, v)?,
            "eta" => self.eta = parse_num(key, v)?,
            "gamma" => self.gamma = if v == "auto" { None } else { Some(parse_num(key, v)?) },
            "gamma_scale" => self.gamma_scale = parse_num(key, v)?,
            "n_min" => self.n_min = parse_num(key, v)?,
            "n_max" => self.n_max = parse_num(key, v)?,
            "n_count" => self.n_count = parse_num(key, v)?,
            "batch" => self.batch = parse_num(key, v)?,
            "replicates" => self.replicates = parse_num(key, v)?,
            "threshold" => self.threshold = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "jobs" => self.jobs = parse_num(key, v)?,
            "seeding" => {
                self.seeding = match v {
                    "per_cell" => Seeding::PerCell,
                    "shared_stream" => Seeding::SharedStream,
                    _ => return Err(Error::Config(format!("`seeding` must be per_cell or shared_stream, got `{v}`"))),
                }
            }
            "rule" => {
                self.rule = match v {
                    "median" => NStarRule::Median,
                    "mean" => NStarRule::Mean,
                    _ => return Err(Error::Config(format!("`rule` must be median or mean, got `{v}`"))),
                }
            }
            "out" => self.out = v.to_string(),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn to_spec(&self) -> Result<SweepSpec> {
        let link = MonomialPoly::parse(&self.link)?;
        let act = MonomialPoly::parse(&self.act)?;
        let noise = NoiseSpec::parse(&self.noise, self.tau)?;
        let teacher = TeacherSpec::canonical(self.d, link, noise)?;
        let eta = if self.axis == SweepAxis::Gamma { self.eta } else { self.rate_min };
        let oracle = OracleSpec::new(self.oracle, act, eta, self.gamma.unwrap_or(1.0)).with_depth(self.depth);
        let mut base = RunConfig::new(teacher, oracle, self.n_max, self.batch, SeedTree::new(self.seed));
        base.width = self.width;
        base.init = self.init;
        base.weak_threshold = self.threshold;
        let spec = SweepSpec {
            base,
            axis: self.axis,
            rate_grid: log_grid(self.rate_count, self.rate_min, self.rate_max)?,
            n_grid: log_grid_usize(self.n_count, self.n_min, self.n_max)?,
            replicates: self.replicates,
            jobs: self.jobs,
            seeding: self.seeding,
            rule: self.rule,
            gamma: self.gamma,
            gamma_scale: self.gamma_scale,
            master_seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}
