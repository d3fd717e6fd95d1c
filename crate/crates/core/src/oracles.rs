//! Update oracles for spherical online SGD.
//!
//! Every variant produces, per sample, a raw update `g = psi * P_w x` with
//! `P_w = I - w w^T`; the step then moves to `(w + gamma g) / |w + gamma g|`.
//! The literal procedures live in [`Oracle::sample_coefficient`] and
//! [`Oracle::step`]. For analysis, [`effective_psi`] gives the single-step
//! oracle as a polynomial in `(y, z)` and [`mu_table`] its mixed Hermite
//! coefficients `mu_i = E[psi(sigma_*(a) + zeta, b) He_i(a) He_{i-1}(b)]`.

use crate::error::{Error, Result};
use crate::hermite::{expand, factorial, HermiteExpansion};
use crate::model::{dot, NoiseSpec};
use crate::poly::{MonomialPoly, MAX_DEGREE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OracleKind {
    Online,
    BatchReuse,
    Alternating,
    DeepAlternating,
}

impl OracleKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "online" => Ok(Self::Online),
            "batch_reuse" | "batchreuse" | "reuse" => Ok(Self::BatchReuse),
            "alternating" | "alt" => Ok(Self::Alternating),
            "deep_alternating" | "deep" => Ok(Self::DeepAlternating),
            other => Err(Error::Parse(format!("unknown oracle `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Online => "online",
            Self::BatchReuse => "batch_reuse",
            Self::Alternating => "alternating",
            Self::DeepAlternating => "deep_alternating",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSpec {
    pub kind: OracleKind,
    /// Rate of the inner (label-transforming) step. Ignored by `Online`.
    pub eta: f64,
    /// Rate of the spherical step on `w`.
    pub gamma: f64,
    /// Number of layers for `DeepAlternating` (ignored otherwise).
    pub depth: usize,
    pub activation: MonomialPoly,
    /// Persistent second-layer weight used by `Alternating`.
    pub a: f64,
    /// Optional cap on the per-argument degree of the effective oracle.
    pub degree_bound: Option<usize>,
}

impl OracleSpec {
    pub fn new(kind: OracleKind, activation: MonomialPoly, eta: f64, gamma: f64) -> Self {
        Self {
            kind,
            eta,
            gamma,
            depth: 2,
            activation,
            a: 1.0,
            degree_bound: None,
        }
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidArgument(format!("eta must be >= 0, got {}", self.eta)));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidArgument(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if self.kind == OracleKind::DeepAlternating && self.depth < 2 {
            return Err(Error::InvalidArgument(format!("depth must be >= 2, got {}", self.depth)));
        }
        Ok(())
    }
}

/// A compiled oracle: the spec plus cached derivatives of the activation.
#[derive(Clone, Debug)]
pub struct Oracle {
    spec: OracleSpec,
    act: MonomialPoly,
    act_prime: MonomialPoly,
}

/// Per-neuron state carried by the deep variant: the layer scalars
/// `a^(1..D-1)`, which stay at their initial value.
#[derive(Clone, Debug, PartialEq)]
pub struct DeepState {
    pub layers: Vec<f64>,
}

impl DeepState {
    pub fn ones(depth: usize) -> Self {
        Self {
            layers: vec![1.0; depth.saturating_sub(1)],
        }
    }
}

/// Result of applying one spherical step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepOutcome {
    /// `w` was replaced by the normalized update; `denominator = |w + gamma g|`.
    Applied { denominator: f64 },
    /// `|w + gamma g| = 0`; `w` is unchanged.
    Rejected,
    /// Non-finite update or `|w + gamma g| >= DIVERGENCE_NORM`; `w` is unchanged.
    Diverged { denominator: f64 },
}

pub const DIVERGENCE_NORM: f64 = 1e12;

/// Scratch buffers reused across steps.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    /// Batch-averaged raw update from the last call to [`Oracle::step`].
    pub g: Vec<f64>,
    w_tilde: Vec<f64>,
}

impl Workspace {
    pub fn new(d: usize) -> Self {
        Self {
            g: vec![0.0; d],
            w_tilde: vec![0.0; d],
        }
    }
}

impl Oracle {
    pub fn new(spec: OracleSpec) -> Result<Self> {
        spec.validate()?;
        let act = spec.activation.clone();
        let act_prime = act.derivative();
        Ok(Self {
            spec,
            act,
            act_prime,
        })
    }

    pub fn spec(&self) -> &OracleSpec {
        &self.spec
    }

    pub fn kind(&self) -> OracleKind {
        self.spec.kind
    }

    /// Scalar `psi` such that the raw update of one sample is `psi * P_w x`.
    /// `z = <x, w>` must be precomputed. `w_tilde` is scratch of length `d`.
    pub fn sample_coefficient(
        &self,
        w: &[f64],
        x: &[f64],
        z: f64,
        y: f64,
        deep: Option<&DeepState>,
        w_tilde: &mut [f64],
    ) -> f64 {
        let s = &self.spec;
        match s.kind {
            OracleKind::Online => y * self.act_prime.eval(z),
            OracleKind::BatchReuse => {
                // w~ = w + eta y sigma'(z) P_w x, then a second gradient at w~
                let c = s.eta * (y * self.act_prime.eval(z));
                for ((wt, &wi), &xi) in w_tilde.iter_mut().zip(w).zip(x) {
                    *wt = wi + c * (xi - z * wi);
                }
                let z_tilde = dot(x, w_tilde);
                y * self.act_prime.eval(z_tilde)
            }
            OracleKind::Alternating => {
                let a_tilde = s.a + s.eta * (y * self.act.eval(z));
                y * a_tilde * self.act_prime.eval(z)
            }
            OracleKind::DeepAlternating => {
                let fallback;
                let layers = match deep {
                    Some(st) => &st.layers,
                    None => {
                        fallback = DeepState::ones(s.depth);
                        &fallback.layers
                    }
                };
                self.deep_coefficient(layers, z, y)
            }
        }
    }

    fn deep_coefficient(&self, layers: &[f64], z: f64, y: f64) -> f64 {
        let eta = self.spec.eta;
        let m = layers.len();
        // F_0 = z, F_i = a_i sigma(F_{i-1}); keep sigma(F_{i-1}) and sigma'(F_{i-1})
        let mut sig = Vec::with_capacity(m);
        let mut sig_prime = Vec::with_capacity(m);
        let mut f = z;
        for &a in layers {
            sig.push(self.act.eval(f));
            sig_prime.push(self.act_prime.eval(f));
            f = a * self.act.eval(f);
        }
        // suffix[i] = prod_{j > i} a_j sigma'(F_{j-1})
        let mut suffix = vec![1.0; m + 1];
        for i in (0..m).rev() {
            suffix[i] = if i + 1 < m {
                suffix[i + 1] * layers[i + 1] * sig_prime[i + 1]
            } else {
                1.0
            };
        }
        let mut prod = y;
        for i in 0..m {
            let a_tilde = layers[i] + eta * y * suffix[i] * sig[i];
            prod *= a_tilde * sig_prime[i];
        }
        prod
    }

    /// One spherical update from a mini-batch stored row-major in `xs`
    /// (`ys.len()` rows of length `w.len()`). The raw updates are averaged
    /// over the batch before the single normalization; the average is left in
    /// `ws.g`.
    pub fn step(
        &self,
        w: &mut [f64],
        xs: &[f64],
        ys: &[f64],
        deep: Option<&DeepState>,
        ws: &mut Workspace,
    ) -> StepOutcome {
        let d = w.len();
        let b = ys.len();
        debug_assert_eq!(xs.len(), b * d);
        if ws.g.len() != d {
            *ws = Workspace::new(d);
        }
        ws.g.iter_mut().for_each(|v| *v = 0.0);
        let inv_b = 1.0 / b as f64;
        for (x, &y) in xs.chunks_exact(d).zip(ys) {
            let z = dot(x, w);
            let psi = self.sample_coefficient(w, x, z, y, deep, &mut ws.w_tilde);
            let c = psi * inv_b;
            for ((gi, &xi), &wi) in ws.g.iter_mut().zip(x).zip(w.iter()) {
                *gi += c * (xi - z * wi);
            }
        }
        apply_update(w, &ws.g, self.spec.gamma)
    }
}

/// `w <- (w + gamma g) / |w + gamma g|` unless that is degenerate.
pub fn apply_update(w: &mut [f64], g: &[f64], gamma: f64) -> StepOutcome {
    let sq: f64 = w
        .iter()
        .zip(g)
        .map(|(wi, gi)| {
            let v = wi + gamma * gi;
            v * v
        })
        .sum();
    let denominator = sq.sqrt();
    if !denominator.is_finite() || denominator >= DIVERGENCE_NORM {
        return StepOutcome::Diverged { denominator };
    }
    if denominator == 0.0 {
        return StepOutcome::Rejected;
    }
    for (wi, gi) in w.iter_mut().zip(g) {
        *wi = (*wi + gamma * gi) / denominator;
    }
    StepOutcome::Applied { denominator }
}

fn single_step(oracle: &Oracle, w: &[f64], x: &[f64], y: f64, deep: Option<&DeepState>) -> (Vec<f64>, StepOutcome) {
    let mut out = w.to_vec();
    let mut ws = Workspace::new(w.len());
    let outcome = oracle.step(&mut out, x, &[y], deep, &mut ws);
    (out, outcome)
}

/// One online SGD step on a single sample.
pub fn step_online(w: &[f64], x: &[f64], y: f64, spec: &OracleSpec) -> Result<(Vec<f64>, StepOutcome)> {
    let oracle = Oracle::new(OracleSpec {
        kind: OracleKind::Online,
        ..spec.clone()
    })?;
    Ok(single_step(&oracle, w, x, y, None))
}

/// Two gradient evaluations on the same sample (rates `eta` then `gamma`).
pub fn step_batch_reuse(w: &[f64], x: &[f64], y: f64, spec: &OracleSpec) -> Result<(Vec<f64>, StepOutcome)> {
    let oracle = Oracle::new(OracleSpec {
        kind: OracleKind::BatchReuse,
        ..spec.clone()
    })?;
    Ok(single_step(&oracle, w, x, y, None))
}

/// Second-layer step feeding the first-layer step. The persistent `a` is
/// returned unchanged.
pub fn step_alternating(
    w: &[f64],
    a: f64,
    x: &[f64],
    y: f64,
    spec: &OracleSpec,
) -> Result<(Vec<f64>, f64, StepOutcome)> {
    let oracle = Oracle::new(OracleSpec {
        kind: OracleKind::Alternating,
        a,
        ..spec.clone()
    })?;
    let (w_new, outcome) = single_step(&oracle, w, x, y, None);
    Ok((w_new, a, outcome))
}

/// Layer-by-layer step on the sparse deep network.
pub fn step_deep_alternating(
    w: &[f64],
    state: &DeepState,
    x: &[f64],
    y: f64,
    spec: &OracleSpec,
) -> Result<(Vec<f64>, StepOutcome)> {
    let oracle = Oracle::new(OracleSpec {
        kind: OracleKind::DeepAlternating,
        depth: state.layers.len() + 1,
        ..spec.clone()
    })?;
    Ok(single_step(&oracle, w, x, y, Some(state)))
}

/// `psi(y, z) = sum_k y^k q_k(z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BivariatePoly {
    terms: Vec<MonomialPoly>,
}

impl BivariatePoly {
    pub fn from_terms(terms: Vec<MonomialPoly>) -> Self {
        let mut terms = terms;
        while terms.len() > 1 && terms.last().unwrap().is_zero() {
            terms.pop();
        }
        Self { terms }
    }

    /// `q_k`, the coefficient polynomial of `y^k`.
    pub fn term(&self, k: usize) -> MonomialPoly {
        self.terms.get(k).cloned().unwrap_or_else(MonomialPoly::zero)
    }

    pub fn terms(&self) -> &[MonomialPoly] {
        &self.terms
    }

    pub fn degree_y(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn degree_z(&self) -> usize {
        self.terms.iter().map(|t| t.degree()).max().unwrap_or(0)
    }

    pub fn eval(&self, y: f64, z: f64) -> f64 {
        self.terms.iter().rev().fold(0.0, |acc, q| acc * y + q.eval(z))
    }

    fn mul(&self, other: &Self) -> Result<Self> {
        let mut out = vec![MonomialPoly::zero(); self.terms.len() + other.terms.len() - 1];
        for (i, p) in self.terms.iter().enumerate() {
            for (j, q) in other.terms.iter().enumerate() {
                out[i + j] = out[i + j].add(&p.multiply(q)?);
            }
        }
        Ok(Self::from_terms(out))
    }
}

/// The single-step oracle analyzed by the theory, as a polynomial in `(y, z)`.
///
/// Batch reuse uses the Taylor surrogate with `|P_w x|^2` replaced by `d`;
/// the deep variant fixes every layer scalar at 1.
pub fn effective_psi(spec: &OracleSpec, d: usize) -> Result<BivariatePoly> {
    spec.validate()?;
    let act = &spec.activation;
    let act_prime = act.derivative();
    let psi = match spec.kind {
        OracleKind::Online => BivariatePoly::from_terms(vec![MonomialPoly::zero(), act_prime]),
        OracleKind::Alternating => {
            let cross = act.multiply(&act_prime)?.scale(spec.eta);
            BivariatePoly::from_terms(vec![MonomialPoly::zero(), act_prime.scale(spec.a), cross])
        }
        OracleKind::BatchReuse => {
            let mut terms = vec![MonomialPoly::zero()];
            let ed = spec.eta * d as f64;
            for k in 1..=act.degree().max(1) {
                let coef = ed.powi(k as i32 - 1) / factorial(k - 1);
                let q = act
                    .nth_derivative(k)
                    .multiply(&act_prime.power(k as u32 - 1)?)?
                    .scale(coef);
                terms.push(q);
            }
            BivariatePoly::from_terms(terms)
        }
        OracleKind::DeepAlternating => deep_effective_psi(act, &act_prime, spec.depth, spec.eta)?,
    };
    if let Some(r) = spec.degree_bound {
        let worst = psi.degree_y().max(psi.degree_z());
        if worst > r {
            return Err(Error::DegreeOverflow { degree: worst, max: r });
        }
    }
    Ok(psi)
}

fn deep_effective_psi(act: &MonomialPoly, act_prime: &MonomialPoly, depth: usize, eta: f64) -> Result<BivariatePoly> {
    let m = depth - 1;
    // F_0 = z, F_i = sigma(F_{i-1})
    let mut f = vec![MonomialPoly::identity()];
    for i in 1..m {
        f.push(act.compose(&f[i - 1])?);
    }
    let sig: Vec<MonomialPoly> = f.iter().map(|fi| act.compose(fi)).collect::<Result<_>>()?;
    let sig_prime: Vec<MonomialPoly> = f.iter().map(|fi| act_prime.compose(fi)).collect::<Result<_>>()?;
    let mut acc = BivariatePoly::from_terms(vec![MonomialPoly::zero(), MonomialPoly::constant(1.0)]);
    for i in 0..m {
        let mut h = sig[i].clone();
        for sp in &sig_prime[i + 1..] {
            h = h.multiply(sp)?;
        }
        // (1 + eta y h_i) sigma'(F_{i-1})
        let factor = BivariatePoly::from_terms(vec![
            sig_prime[i].clone(),
            h.multiply(&sig_prime[i])?.scale(eta),
        ]);
        acc = acc.mul(&factor)?;
    }
    if acc.degree_z() > MAX_DEGREE {
        return Err(Error::DegreeOverflow {
            degree: acc.degree_z(),
            max: MAX_DEGREE,
        });
    }
    Ok(acc)
}

/// Mixed Hermite coefficients `mu_1..=mu_r` of an oracle and the index set
/// selected by the sign assumption.
#[derive(Clone, Debug, PartialEq)]
pub struct MuTable {
    /// `mus[i - 1] = mu_i`.
    pub mus: Vec<f64>,
    pub istar: Vec<usize>,
}

impl MuTable {
    pub fn from_mus(mus: Vec<f64>, d: usize) -> Self {
        let istar = argmin_indices(&mus, d);
        Self { mus, istar }
    }

    pub fn r(&self) -> usize {
        self.mus.len()
    }

    pub fn mu(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.mus.get(i - 1).copied().unwrap_or(0.0)
        }
    }

    /// `beta_i = mu_i / (i - 1)!`: the coefficient of `kappa^{i-1} (1 - kappa^2)`
    /// in the expected alignment gain `E[<theta_*, g>]`.
    pub fn drift_coeffs(&self) -> Vec<f64> {
        self.mus
            .iter()
            .enumerate()
            .map(|(j, m)| m / factorial(j))
            .collect()
    }

    /// `mu_i / (i! (i-1)!)`: the coefficient of `He_i(a) He_{i-1}(b)` in the
    /// expansion of `psi`.
    pub fn expansion_coeffs(&self) -> Vec<f64> {
        self.mus
            .iter()
            .enumerate()
            .map(|(j, m)| m / (factorial(j + 1) * factorial(j)))
            .collect()
    }

    /// `E[<theta_*, g>]` at alignment `kappa`.
    pub fn one_step_drift(&self, kappa: f64) -> f64 {
        self.expansion_coeffs()
            .iter()
            .enumerate()
            .map(|(j, c)| factorial(j + 1) * c * kappa.powi(j as i32))
            .sum::<f64>()
            * (1.0 - kappa * kappa)
    }
}

fn is_nonzero(m: f64, scale: f64) -> bool {
    m.abs() > 1e-12 * scale
}

fn mu_scale(mus: &[f64]) -> f64 {
    mus.iter().fold(0.0f64, |s, m| s.max(m.abs()))
}

/// `d^{(i-2)/2 v 0}`.
pub fn d_weight(i: usize, d: f64) -> f64 {
    if i <= 2 {
        1.0
    } else {
        d.powf((i as f64 - 2.0) / 2.0)
    }
}

fn argmin_indices(mus: &[f64], d: usize) -> Vec<usize> {
    let scale = mu_scale(mus);
    let df = d as f64;
    let costs: Vec<(usize, f64)> = mus
        .iter()
        .enumerate()
        .filter(|(_, m)| is_nonzero(**m, scale))
        .map(|(j, m)| (j + 1, d_weight(j + 1, df) / m.abs()))
        .collect();
    let Some(best) = costs.iter().map(|c| c.1).reduce(f64::min) else {
        return Vec::new();
    };
    costs
        .iter()
        .filter(|c| c.1 <= best * (1.0 + 1e-12))
        .map(|c| c.0)
        .collect()
}

/// Exact `mu_i` for `i = 1..=r`, folding symmetric label noise in through its
/// moments. `r` is the largest index that can be nonzero given the degrees of
/// the link and of `psi`.
pub fn mu_table(spec: &OracleSpec, link: &MonomialPoly, noise: &NoiseSpec, d: usize) -> Result<MuTable> {
    let psi = effective_psi(spec, d)?;
    mu_table_for_psi(&psi, link, noise, d)
}

pub fn mu_table_for_psi(psi: &BivariatePoly, link: &MonomialPoly, noise: &NoiseSpec, d: usize) -> Result<MuTable> {
    let active: Vec<(usize, &MonomialPoly)> = psi
        .terms()
        .iter()
        .enumerate()
        .filter(|(_, q)| !q.is_zero())
        .collect();
    if active.is_empty() {
        return Ok(MuTable::from_mus(Vec::new(), d));
    }
    let max_k = active.iter().map(|(k, _)| *k).max().unwrap();
    let deg_a = max_k * link.degree();
    let deg_b = active.iter().map(|(_, q)| q.degree()).max().unwrap();
    let r = deg_a.min(deg_b + 1);
    if deg_a > MAX_DEGREE {
        return Err(Error::DegreeOverflow {
            degree: deg_a,
            max: MAX_DEGREE,
        });
    }
    // u_i(link^l) for l = 0..=max_k
    let mut link_powers: Vec<HermiteExpansion> = Vec::with_capacity(max_k + 1);
    let mut pow = MonomialPoly::constant(1.0);
    for l in 0..=max_k {
        if l > 0 {
            pow = pow.multiply(link)?;
        }
        link_powers.push(expand(&pow));
    }
    let mut mus = vec![0.0; r];
    for (k, q) in active {
        let qb = expand(q);
        for i in 1..=r {
            let ub = qb.coeff(i - 1);
            if ub == 0.0 {
                continue;
            }
            // E[(sigma_*(a) + zeta)^k He_i(a)]
            let mut ua = 0.0;
            for l in 0..=k {
                let m = noise.moment(k - l);
                if m != 0.0 {
                    ua += binomial(k, l) * m * link_powers[l].coeff(i);
                }
            }
            mus[i - 1] += ua * ub;
        }
    }
    Ok(MuTable::from_mus(mus, d))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Verdict of the sign assumption: every minimizer of
/// `|mu_i|^{-1} d^{(i-2)/2 v 0}` over nonzero `mu_i` must have `mu_i > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignCheck {
    pub pass: bool,
    pub istar: Vec<usize>,
}

pub fn check_sign_assumption(mus: &[f64], d: usize) -> Result<SignCheck> {
    let istar = argmin_indices(mus, d);
    if istar.is_empty() {
        return Err(Error::DegenerateOracle);
    }
    let pass = istar.iter().all(|&i| mus[i - 1] > 0.0);
    Ok(SignCheck { pass, istar })
}
