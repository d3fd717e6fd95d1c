//! Single-pass spherical SGD on a two-layer student, recovery detection and
//! the second-layer ridge fit.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{dot, init_network, InitMode, NetworkSpec, TeacherSpec};
use crate::oracles::{DeepState, Oracle, OracleKind, OracleSpec, StepOutcome, Workspace};
use crate::rng::{role, SeedTree, SimRng};

/// Slack for the pathwise normalization bound.
pub const AUDIT_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub teacher: TeacherSpec,
    /// Number of hidden neurons `N`.
    pub width: usize,
    pub init: InitMode,
    pub oracle: OracleSpec,
    /// Total sample budget; the run executes `n / batch` updates.
    pub n: usize,
    pub batch: usize,
    pub weak_threshold: f64,
    pub strong_eps: f64,
    pub record_every: usize,
    pub seed: SeedTree,
    pub audit: bool,
}

impl RunConfig {
    pub fn new(teacher: TeacherSpec, oracle: OracleSpec, n: usize, batch: usize, seed: SeedTree) -> Self {
        Self {
            teacher,
            width: 1,
            init: InitMode::PinnedAlignment,
            oracle,
            n,
            batch,
            weak_threshold: 0.5,
            strong_eps: 0.05,
            record_every: 100,
            seed,
            audit: false,
        }
    }

    pub fn d(&self) -> usize {
        self.teacher.dim()
    }

    pub fn steps(&self) -> usize {
        self.n / self.batch.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.batch == 0 || self.n < self.batch {
            return bad(format!("need n >= batch >= 1, got n = {}, batch = {}", self.n, self.batch));
        }
        if !(self.weak_threshold > 0.0 && self.weak_threshold < 1.0) {
            return bad(format!("weak threshold must lie in (0, 1), got {}", self.weak_threshold));
        }
        if !(self.strong_eps > 0.0 && self.strong_eps < 1.0) {
            return bad(format!("strong eps must lie in (0, 1), got {}", self.strong_eps));
        }
        if self.record_every == 0 {
            return bad("record_every must be positive".into());
        }
        if self.width == 0 {
            return bad("width must be positive".into());
        }
        if self.d() < 2 {
            return bad(format!("dimension must be >= 2, got {}", self.d()));
        }
        self.oracle.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Checkpoint {
    pub step: usize,
    pub samples_seen: usize,
    /// Largest alignment over the neurons.
    pub kappa: f64,
}

/// Outcome of the per-step check `kappa' >= kappa + gamma <theta, g>
/// - gamma^2 kappa |g|^2 - gamma^3 |<theta, g>| |g|^2` on steps with `kappa >= 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AuditReport {
    pub audited_steps: usize,
    pub skipped_negative: usize,
    pub violations: usize,
    /// Largest `bound - kappa'` seen; nonpositive means the bound held.
    pub max_violation: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub checkpoints: Vec<Checkpoint>,
    pub weak_recovery_step: Option<usize>,
    pub strong_recovery_step: Option<usize>,
    pub diverged: bool,
    pub rejected_steps: usize,
    pub steps: usize,
    pub samples_seen: usize,
    pub final_alignments: Vec<f64>,
    pub final_network: NetworkSpec,
    pub audit: Option<AuditReport>,
}

impl Trajectory {
    /// Largest final alignment over neurons.
    pub fn final_alignment(&self) -> f64 {
        max_kappa(&self.final_alignments)
    }

    /// First checkpoint step with recorded alignment at least `c`.
    pub fn first_crossing(&self, c: f64) -> Option<usize> {
        self.checkpoints.iter().find(|cp| cp.kappa >= c).map(|cp| cp.step)
    }
}

fn max_kappa(k: &[f64]) -> f64 {
    k.iter().copied().fold(f64::NEG_INFINITY, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

struct SimEnd {
    network: NetworkSpec,
    kappas: Vec<f64>,
    steps: usize,
    diverged: bool,
    rejected: usize,
    audit: Option<AuditReport>,
}

/// Runs up to `horizon` updates, calling `visit(step, kappas)` at step 0 and
/// after every update. The run stops early on divergence.
fn simulate<F: FnMut(usize, &[f64])>(cfg: &RunConfig, horizon: usize, mut visit: F) -> Result<SimEnd> {
    cfg.validate()?;
    let d = cfg.d();
    let teacher = &cfg.teacher;
    let mut init_rng = cfg.seed.stream(role::INIT);
    let mut data_rng: SimRng = cfg.seed.stream(role::DATA);
    let mut net = init_network(&teacher.theta, cfg.width, cfg.oracle.activation.clone(), cfg.init, &mut init_rng)?;
    let oracles: Vec<Oracle> = net
        .neurons
        .iter()
        .map(|nr| {
            Oracle::new(OracleSpec {
                a: if cfg.oracle.kind == OracleKind::Alternating { nr.a } else { cfg.oracle.a },
                ..cfg.oracle.clone()
            })
        })
        .collect::<Result<_>>()?;
    let deep = DeepState::ones(cfg.oracle.depth);
    let deep_ref = (cfg.oracle.kind == OracleKind::DeepAlternating).then_some(&deep);
    let gamma = cfg.oracle.gamma;

    let b = cfg.batch;
    let mut xs = vec![0.0; b * d];
    let mut ys = vec![0.0; b];
    let mut ws = Workspace::new(d);
    let mut kappas: Vec<f64> = net.neurons.iter().map(|n| dot(&n.w, &teacher.theta)).collect();
    let mut audit = cfg.audit.then(|| AuditReport {
        max_violation: f64::NEG_INFINITY,
        ..Default::default()
    });
    let mut rejected = 0;
    let mut diverged = false;
    let mut steps = 0;
    visit(0, &kappas);
    for step in 1..=horizon {
        for (x, y) in xs.chunks_exact_mut(d).zip(ys.iter_mut()) {
            *y = teacher.fill_sample(&mut data_rng, x);
        }
        for ((neuron, oracle), kappa) in net.neurons.iter_mut().zip(&oracles).zip(kappas.iter_mut()) {
            let before = *kappa;
            match oracle.step(&mut neuron.w, &xs, &ys, deep_ref, &mut ws) {
                StepOutcome::Applied { .. } => {
                    *kappa = dot(&neuron.w, &teacher.theta);
                    if !kappa.is_finite() {
                        diverged = true;
                    }
                }
                StepOutcome::Rejected => rejected += 1,
                StepOutcome::Diverged { .. } => diverged = true,
            }
            if let Some(rep) = audit.as_mut() {
                if diverged {
                    continue;
                }
                if before >= 0.0 {
                    let tg = dot(&teacher.theta, &ws.g);
                    let g2 = dot(&ws.g, &ws.g);
                    let bound = before + gamma * tg - gamma * gamma * before * g2 - gamma.powi(3) * tg.abs() * g2;
                    let v = bound - *kappa;
                    rep.audited_steps += 1;
                    rep.max_violation = rep.max_violation.max(v);
                    if v > AUDIT_TOL {
                        rep.violations += 1;
                    }
                } else {
                    rep.skipped_negative += 1;
                }
            }
        }
        if diverged {
            break;
        }
        steps = step;
        visit(step, &kappas);
    }
    Ok(SimEnd {
        network: net,
        kappas,
        steps,
        diverged,
        rejected,
        audit,
    })
}

/// Executes `n / batch` single-pass updates, recording the alignment every
/// `record_every` steps and at the last step.
pub fn run(cfg: &RunConfig) -> Result<Trajectory> {
    let horizon = cfg.steps();
    let b = cfg.batch;
    let mut checkpoints = Vec::new();
    let end = simulate(cfg, horizon, |step, kappas| {
        if step % cfg.record_every == 0 || step == horizon {
            checkpoints.push(Checkpoint {
                step,
                samples_seen: step * b,
                kappa: max_kappa(kappas),
            });
        }
    })?;
    if end.diverged && checkpoints.last().map(|c| c.step) != Some(end.steps) {
        checkpoints.push(Checkpoint {
            step: end.steps,
            samples_seen: end.steps * b,
            kappa: max_kappa(&end.kappas),
        });
    }
    let find = |c: f64| checkpoints.iter().find(|cp| cp.kappa >= c).map(|cp| cp.step);
    let weak = find(cfg.weak_threshold);
    let strong = find(1.0 - cfg.strong_eps);
    Ok(Trajectory {
        weak_recovery_step: weak,
        strong_recovery_step: strong,
        diverged: end.diverged,
        rejected_steps: end.rejected,
        steps: end.steps,
        samples_seen: end.steps * b,
        final_alignments: end.kappas,
        final_network: end.network,
        audit: end.audit,
        checkpoints,
    })
}

/// Largest-neuron alignment after each of `steps` updates of one run
/// (`steps` need not be sorted). A sample budget `n` corresponds to step
/// `n / batch`, so one run answers every budget on a grid. Entries after a
/// divergence are NaN.
pub fn alignment_at_steps(cfg: &RunConfig, steps: &[usize]) -> Result<Vec<f64>> {
    let horizon = steps.iter().copied().max().unwrap_or(0);
    let mut out = vec![f64::NAN; steps.len()];
    let mut order: Vec<usize> = (0..steps.len()).collect();
    order.sort_by_key(|&i| steps[i]);
    let mut next = 0;
    let mut probe = RunConfig {
        n: horizon.max(1) * cfg.batch,
        audit: false,
        ..cfg.clone()
    };
    probe.record_every = probe.record_every.max(1);
    simulate(&probe, horizon, |step, kappas| {
        while next < order.len() && steps[order[next]] == step {
            out[order[next]] = max_kappa(kappas);
            next += 1;
        }
    })?;
    Ok(out)
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v: Vec<f64> = values.iter().map(|x| if x.is_nan() { f64::NEG_INFINITY } else { *x }).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    /// One run per replicate up to the largest budget, then bisection over
    /// the grid of medians.
    Bisect,
    /// An independent full run for every (budget, replicate) pair.
    Scan,
}

/// Smallest `n` on `n_grid` whose median (over replicates) final alignment
/// reaches the weak threshold. Replicate `r` uses seed path `cfg.seed/r`.
pub fn weak_recovery_sample_size(
    cfg: &RunConfig,
    n_grid: &[usize],
    replicates: usize,
    mode: SearchMode,
) -> Result<Option<usize>> {
    if n_grid.is_empty() {
        return Err(Error::InvalidArgument("n_grid must be nonempty".into()));
    }
    if replicates == 0 {
        return Err(Error::InvalidArgument("need at least one replicate".into()));
    }
    let c = cfg.weak_threshold;
    let medians: Vec<f64> = match mode {
        SearchMode::Bisect => {
            let steps: Vec<usize> = n_grid.iter().map(|&n| n / cfg.batch).collect();
            let per_rep: Vec<Vec<f64>> = (0..replicates)
                .map(|r| {
                    alignment_at_steps(
                        &RunConfig {
                            seed: cfg.seed.child(r as u64),
                            ..cfg.clone()
                        },
                        &steps,
                    )
                })
                .collect::<Result<_>>()?;
            (0..n_grid.len())
                .map(|k| median(&per_rep.iter().map(|v| v[k]).collect::<Vec<_>>()))
                .collect()
        }
        SearchMode::Scan => n_grid
            .iter()
            .map(|&n| {
                let finals = (0..replicates)
                    .map(|r| {
                        run(&RunConfig {
                            n,
                            seed: cfg.seed.child(r as u64),
                            ..cfg.clone()
                        })
                        .map(|t| if t.diverged { f64::NAN } else { t.final_alignment() })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(median(&finals))
            })
            .collect::<Result<_>>()?,
    };
    Ok(match mode {
        SearchMode::Scan => n_grid.iter().zip(&medians).find(|(_, m)| **m >= c).map(|(n, _)| *n),
        SearchMode::Bisect => {
            if !(medians[medians.len() - 1] >= c) {
                return Ok(None);
            }
            let (mut lo, mut hi) = (0usize, medians.len() - 1);
            if medians[0] >= c {
                return Ok(Some(n_grid[0]));
            }
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if medians[mid] >= c {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(n_grid[hi])
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RidgeConfig {
    pub lambda: f64,
    pub n_fit: usize,
    pub n_test: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RidgeFit {
    pub a: Vec<f64>,
    pub test_mse: f64,
    /// Empirical `E[y^2]` on the test set.
    pub label_second_moment: f64,
}

/// Second-layer ridge regression on the frozen features
/// `phi_j(x) = sigma(<x, w_j> + b_j) / N`, minimizing
/// `(1/n) sum (f(x) - y)^2 + lambda |a|^2`.
pub fn ridge_fit(net: &NetworkSpec, teacher: &TeacherSpec, cfg: &RidgeConfig, rng: &mut SimRng) -> Result<RidgeFit> {
    let n_feat = net.width();
    let d = teacher.dim();
    if net.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: net.dim(),
        });
    }
    if cfg.lambda < 0.0 || !cfg.lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {}", cfg.lambda)));
    }
    if cfg.n_fit < n_feat || cfg.n_test == 0 {
        return Err(Error::InvalidArgument(format!(
            "need n_fit >= width ({n_feat}) and n_test >= 1"
        )));
    }
    let inv_n = 1.0 / n_feat as f64;
    let features = |x: &[f64], out: &mut [f64]| {
        for (o, nr) in out.iter_mut().zip(&net.neurons) {
            *o = net.activation.eval(dot(x, &nr.w) + nr.b) * inv_n;
        }
    };
    let mut x = vec![0.0; d];
    let mut phi = vec![0.0; n_feat];
    let mut gram = DMatrix::<f64>::zeros(n_feat, n_feat);
    let mut rhs = DVector::<f64>::zeros(n_feat);
    for _ in 0..cfg.n_fit {
        let y = teacher.fill_sample(rng, &mut x);
        features(&x, &mut phi);
        let p = DVector::from_column_slice(&phi);
        gram.ger(1.0, &p, &p, 1.0);
        rhs.axpy(y, &p, 1.0);
    }
    let nf = cfg.n_fit as f64;
    gram /= nf;
    rhs /= nf;
    for i in 0..n_feat {
        gram[(i, i)] += cfg.lambda;
    }
    let eig = gram.clone().symmetric_eigenvalues();
    let top = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if eig.iter().any(|&v| v <= 1e-12 * top) || top == 0.0 {
        return Err(Error::SingularSystem);
    }
    let a = match gram.cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => return Err(Error::SingularSystem),
    };
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    let (mut sse, mut yy) = (0.0, 0.0);
    for _ in 0..cfg.n_test {
        let y = teacher.fill_sample(rng, &mut x);
        features(&x, &mut phi);
        let f: f64 = phi.iter().zip(a.iter()).map(|(p, c)| p * c).sum();
        sse += (f - y) * (f - y);
        yy += y * y;
    }
    let nt = cfg.n_test as f64;
    Ok(RidgeFit {
        a: a.iter().copied().collect(),
        test_mse: sse / nt,
        label_second_moment: yy / nt,
    })
}
