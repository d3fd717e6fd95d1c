use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use silab::dynamics::{run, RunConfig};
use silab::harness::{emit, sweep, sweep_boundaries, SweepConfig};
use silab::hermite::exponent_report;
use silab::model::{InitMode, NoiseSpec, TeacherSpec};
use silab::oracles::{check_sign_assumption, mu_table, OracleKind, OracleSpec};
use silab::rng::{role, SeedTree};
use silab::theory::{analytic_boundaries, gamma_auto, phase_boundaries, predict_t, GammaMode};
use silab::MonomialPoly;

#[derive(Parser)]
#[command(name = "silab", version, about = "Single-index SGD experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exponent report and Hermite coefficients of the powers of a link.
    Hermite {
        /// `He<k>`, `z^<k>` or monomial coefficients `c0,c1,...`.
        #[arg(long)]
        link: String,
        #[arg(long, default_value_t = 4)]
        powers: usize,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Samples from the teacher as CSV.
    GenData {
        #[arg(long, default_value = "He3")]
        link: String,
        #[arg(long, default_value_t = 50)]
        d: usize,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "none")]
        noise: String,
        #[arg(long, default_value_t = 0.0)]
        tau: f64,
    },
    /// Mixed Hermite coefficients of an oracle.
    Mu(OracleArgs),
    /// One training run.
    Simulate(SimulateArgs),
    /// Predicted weak-recovery time.
    Predict(PredictArgs),
    /// Learning-rate thresholds where the dominant term changes.
    Phase(PhaseArgs),
    /// Learning-rate by sample-size sweep.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct OracleArgs {
    #[arg(long, default_value = "alternating")]
    oracle: String,
    #[arg(long, default_value = "He3")]
    link: String,
    #[arg(long, default_value = "He3")]
    act: String,
    #[arg(long, default_value_t = 50)]
    d: usize,
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value = "none")]
    noise: String,
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
}

struct Parsed {
    link: MonomialPoly,
    noise: NoiseSpec,
    oracle: OracleSpec,
}

impl OracleArgs {
    fn parse(&self) -> Result<Parsed> {
        let kind = OracleKind::parse(&self.oracle)?;
        let act = MonomialPoly::parse(&self.act)?;
        Ok(Parsed {
            link: MonomialPoly::parse(&self.link)?,
            noise: NoiseSpec::parse(&self.noise, self.tau)?,
            oracle: OracleSpec::new(kind, act, self.eta, 1.0).with_depth(self.depth),
        })
    }
}

/// `auto` or a positive number.
fn resolve_gamma(arg: &str, oracle: &OracleSpec, link: &MonomialPoly, d: usize) -> Result<f64> {
    if arg == "auto" {
        Ok(gamma_auto(oracle, link, &[], d, GammaMode::Weak)?)
    } else {
        arg.parse().with_context(|| format!("bad --gamma `{arg}`"))
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: OracleArgs,
    #[arg(long, default_value = "auto")]
    gamma: String,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 128)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    record_every: usize,
    #[arg(long)]
    audit: bool,
    #[arg(long, default_value_t = 1)]
    width: usize,
    /// `pinned` or `uniform`.
    #[arg(long, default_value = "pinned")]
    init: String,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Trajectory CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    model: OracleArgs,
    #[arg(long, default_value = "auto")]
    gamma: String,
}

#[derive(Args)]
struct PhaseArgs {
    #[command(flatten)]
    model: OracleArgs,
    #[arg(long, default_value_t = 1e-3)]
    eta_min: f64,
    #[arg(long, default_value_t = 1.0)]
    eta_max: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides any config key, e.g. `--set d=25`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cli.cmd {
        Cmd::Hermite { link, powers, tol } => {
            let link = MonomialPoly::parse(&link)?;
            let r = exponent_report(&link, powers, tol)?;
            let show = |v: Option<usize>| v.map_or_else(|| "none".to_string(), |v| v.to_string());
            writeln!(out, "# ie={}", show(r.ie))?;
            for (i, p) in &r.power_ies {
                writeln!(out, "# ie_power_{i}={}", show(*p))?;
            }
            writeln!(out, "# ge_upper_bound={} witness_power={}", show(r.ge_upper_bound), show(r.witness_power))?;
            writeln!(out, "power,k,u_k")?;
            for (i, e) in r.expansions.iter().enumerate() {
                for (k, u) in e.coeffs().iter().enumerate() {
                    writeln!(out, "{},{k},{u}", i + 1)?;
                }
            }
        }
        Cmd::GenData { link, d, n, seed, noise, tau } => {
            let teacher = TeacherSpec::canonical(d, MonomialPoly::parse(&link)?, NoiseSpec::parse(&noise, tau)?)?;
            let mut rng = SeedTree::new(seed).stream(role::DATA);
            let header: Vec<String> = (1..=d).map(|j| format!("x_{j}")).collect();
            writeln!(out, "{},y", header.join(","))?;
            let mut x = vec![0.0; d];
            for _ in 0..n {
                let y = teacher.fill_sample(&mut rng, &mut x);
                for v in &x {
                    write!(out, "{v},")?;
                }
                writeln!(out, "{y}")?;
            }
        }
        Cmd::Mu(args) => {
            let p = args.parse()?;
            let table = mu_table(&p.oracle, &p.link, &p.noise, args.d)?;
            writeln!(out, "i,mu_i,istar_flag")?;
            for (j, m) in table.mus.iter().enumerate() {
                let i = j + 1;
                writeln!(out, "{i},{m},{}", table.istar.contains(&i) as u8)?;
            }
            let verdict = match check_sign_assumption(&table.mus, args.d) {
                Ok(c) if c.pass => "pass",
                Ok(_) => "fail",
                Err(_) => "degenerate",
            };
            writeln!(out, "# sign_assumption={verdict}")?;
        }
        Cmd::Simulate(a) => {
            let p = a.model.parse()?;
            let d = a.model.d;
            let mut oracle = p.oracle;
            oracle.gamma = resolve_gamma(&a.gamma, &oracle, &p.link, d)?;
            let teacher = TeacherSpec::canonical(d, p.link, p.noise)?;
            let mut cfg = RunConfig::new(teacher, oracle, a.n, a.batch, SeedTree::new(a.seed));
            cfg.record_every = a.record_every;
            cfg.audit = a.audit;
            cfg.width = a.width;
            cfg.init = InitMode::parse(&a.init)?;
            cfg.weak_threshold = a.threshold;
            let t = run(&cfg)?;
            let mut csv = String::from("step,samples_seen,kappa\n");
            for c in &t.checkpoints {
                csv.push_str(&format!("{},{},{}\n", c.step, c.samples_seen, c.kappa));
            }
            let show = |v: Option<usize>| v.map_or_else(|| "none".to_string(), |v| v.to_string());
            let mut summary = format!(
                "weak_step={} strong_step={} diverged={}",
                show(t.weak_recovery_step),
                show(t.strong_recovery_step),
                t.diverged
            );
            if let Some(r) = &t.audit {
                summary.push_str(&format!(" audit_violations={} audit_max={}", r.violations, r.max_violation));
            }
            match &a.out {
                Some(path) => {
                    fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
                    writeln!(out, "{summary}")?;
                }
                None => {
                    out.write_all(csv.as_bytes())?;
                    eprintln!("{summary}");
                }
            }
        }
        Cmd::Predict(a) => {
            let p = a.model.parse()?;
            let d = a.model.d;
            let gamma = resolve_gamma(&a.gamma, &p.oracle, &p.link, d)?;
            let coeffs = mu_table(&p.oracle, &p.link, &p.noise, d)?.drift_coeffs();
            let pred = predict_t(&coeffs, gamma, d)?;
            writeln!(out, "i,t_i,t,dominant_i,gamma_auto")?;
            for (i, t) in &pred.t_per_i {
                writeln!(out, "{i},{t},{},{},{gamma}", pred.t, pred.dominant_i)?;
            }
        }
        Cmd::Phase(a) => {
            let p = a.model.parse()?;
            let d = a.model.d;
            let hints = analytic_boundaries(&p.oracle, &p.link)?;
            let base = p.oracle.clone();
            let (link, noise) = (p.link, p.noise);
            let rows = phase_boundaries(
                |eta| Ok(mu_table(&OracleSpec { eta, ..base.clone() }, &link, &noise, d)?.drift_coeffs()),
                d,
                (a.eta_min, a.eta_max),
                &hints,
            )?;
            writeln!(out, "i,j,eta_star,exponent")?;
            for b in rows {
                let e = b.exponent.map_or_else(String::new, |e| e.to_string());
                writeln!(out, "{},{},{},{e}", b.i, b.j, b.eta_star)?;
            }
        }
        Cmd::Sweep(a) => {
            let mut cfg = SweepConfig::default();
            if let Some(path) = &a.config {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                cfg.apply_text(&text)?;
            }
            for kv in &a.overrides {
                let Some((k, v)) = kv.split_once('=') else {
                    bail!("--set expects KEY=VALUE, got `{kv}`");
                };
                cfg.set(k, v)?;
            }
            if let Some(o) = a.out {
                cfg.out = o;
            }
            if let Some(j) = a.jobs {
                cfg.jobs = j;
            }
            let spec = cfg.to_spec()?;
            let result = sweep(&spec)?;
            let boundaries = sweep_boundaries(&spec)?;
            emit(&result, &boundaries, std::path::Path::new(&cfg.out))?;
            writeln!(out, "wrote {} cells to {}", result.cells.len(), cfg.out)?;
        }
    }
    out.flush()?;
    Ok(())
}
