//! Order-level sample-complexity predictors and deterministic recursions.
//!
//! Predictors take a coefficient vector `c[i - 1]` for indices `i = 1..=r`.
//! The callers in this crate pass the drift coefficients
//! ([`MuTable::drift_coeffs`](crate::oracles::MuTable::drift_coeffs)), which
//! make `gamma * sum_i c_i kappa^{i-1}` the expected one-step alignment gain
//! near `kappa = 0`. All unknown constants are set to 1.

use crate::error::{Error, Result};
use crate::hermite::{expand, information_exponent};
use crate::oracles::{OracleKind, OracleSpec};
use crate::poly::MonomialPoly;

/// `d^{(i-2)/2 v 0}`.
fn weight_eq5(i: usize, d: f64) -> f64 {
    if i <= 2 {
        1.0
    } else {
        d.powf((i as f64 - 2.0) / 2.0)
    }
}

/// `(i - 1) v 1`.
fn exp_eq6(i: usize) -> f64 {
    (i as f64 - 1.0).max(1.0)
}

/// `i/2 v 1`.
fn half_or_one(i: usize) -> f64 {
    (i as f64 / 2.0).max(1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    /// `(i, gamma^{-1} c_i^{-1} d^{(i-2)/2 v 0})` for every positive `c_i`.
    pub t_per_i: Vec<(usize, f64)>,
    pub t: f64,
    pub dominant_i: usize,
    /// `max_i c_i d^{-(i/2 v 1)}`.
    pub gamma_max: f64,
    /// `(i, c_i^{-2} d^{(i-1) v 1})`: the same prediction at `gamma = gamma_max`.
    pub t_opt_per_i: Vec<(usize, f64)>,
    pub t_opt: f64,
    pub dominant_opt: usize,
}

fn argmin(v: &[(usize, f64)]) -> (usize, f64) {
    v.iter()
        .copied()
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

pub fn predict_t(coeffs: &[f64], gamma: f64, d: usize) -> Result<Prediction> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    let df = d as f64;
    let pos: Vec<(usize, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0.0)
        .map(|(j, c)| (j + 1, *c))
        .collect();
    if pos.is_empty() {
        return Err(Error::NoPositiveMu);
    }
    let t_per_i: Vec<(usize, f64)> = pos.iter().map(|&(i, c)| (i, weight_eq5(i, df) / (gamma * c))).collect();
    let t_opt_per_i: Vec<(usize, f64)> = pos.iter().map(|&(i, c)| (i, df.powf(exp_eq6(i)) / (c * c))).collect();
    let gamma_max = pos
        .iter()
        .map(|&(i, c)| c * df.powf(-half_or_one(i)))
        .fold(f64::NEG_INFINITY, f64::max);
    let (dominant_i, t) = argmin(&t_per_i);
    let (dominant_opt, t_opt) = argmin(&t_opt_per_i);
    Ok(Prediction {
        t_per_i,
        t,
        dominant_i,
        gamma_max,
        t_opt_per_i,
        t_opt,
        dominant_opt,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseBoundary {
    pub i: usize,
    pub j: usize,
    pub eta_star: f64,
    /// Analytic `d`-exponent of the threshold, where the oracle admits one.
    pub exponent: Option<f64>,
    /// Both indices attain the minimum predicted time at `eta_star`, so the
    /// dominant index switches there.
    pub active: bool,
    /// Closed-form boundary sitting at the edge of the validity range.
    pub degenerate: bool,
}

/// Closed-form threshold between two competing terms, from the corollaries.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticBoundary {
    /// Hermite indices of the competing terms.
    pub i: usize,
    pub j: usize,
    pub exponent: f64,
    pub degenerate: bool,
}

/// Analytic phase-transition exponents `eta_star ~ d^{exponent}`.
///
/// Alternating: `-(1/2)[(p - p_2) v (p - 2)]` between `p_2` and `p`.
/// Batch reuse: for label powers `k < l`,
/// `[((p_l - 1) v 1) - ((p_k - 1) v 1)] / (2(l - k)) - 1`, degenerate when
/// `p_k = p_l`.
pub fn analytic_boundaries(spec: &OracleSpec, link: &MonomialPoly) -> Result<Vec<AnalyticBoundary>> {
    let ie_pow = |k: u32| -> Result<Option<usize>> {
        let e = expand(&link.power(k)?);
        Ok(information_exponent(&e, e.default_tol()))
    };
    let mut out = Vec::new();
    match spec.kind {
        OracleKind::Alternating => {
            if let (Some(p), Some(p2)) = (ie_pow(1)?, ie_pow(2)?) {
                if p != p2 {
                    let e = -0.5 * ((p as f64 - p2 as f64).max(p as f64 - 2.0));
                    out.push(AnalyticBoundary {
                        i: p2.min(p),
                        j: p2.max(p),
                        exponent: e,
                        degenerate: false,
                    });
                }
            }
        }
        OracleKind::BatchReuse => {
            let kmax = spec.activation.degree().max(1) as u32;
            let ps: Vec<(u32, usize)> = (1..=kmax)
                .filter_map(|k| ie_pow(k).transpose().map(|p| p.map(|p| (k, p))))
                .collect::<Result<_>>()?;
            for (a, &(k, pk)) in ps.iter().enumerate() {
                for &(l, pl) in &ps[a + 1..] {
                    let e = (exp_eq6(pl) - exp_eq6(pk)) / (2.0 * (l - k) as f64) - 1.0;
                    out.push(AnalyticBoundary {
                        i: pk.min(pl),
                        j: pk.max(pl),
                        exponent: e,
                        degenerate: pk == pl,
                    });
                }
            }
        }
        _ => {}
    }
    Ok(out)
}

/// `log T_i - log T_j` under the optimal-gamma form.
fn log_gap(c: &[f64], i: usize, j: usize, d: f64) -> Option<f64> {
    let (ci, cj) = (*c.get(i - 1)?, *c.get(j - 1)?);
    if ci <= 0.0 || cj <= 0.0 {
        return None;
    }
    Some(-2.0 * ci.ln() + exp_eq6(i) * d.ln() + 2.0 * cj.ln() - exp_eq6(j) * d.ln())
}

/// Crossings of the optimal-gamma predicted times of every pair of indices
/// with positive coefficients, located by bisection in `log eta` to `1e-6`
/// relative. `coeffs_at(eta)` returns the coefficient vector at `eta`.
pub fn phase_boundaries<F>(coeffs_at: F, d: usize, eta_range: (f64, f64), analytic: &[AnalyticBoundary]) -> Result<Vec<PhaseBoundary>>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    let (lo, hi) = eta_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("need 0 < eta_lo < eta_hi, got ({lo}, {hi})")));
    }
    let df = d as f64;
    const SCAN: usize = 400;
    let etas: Vec<f64> = (0..=SCAN)
        .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / SCAN as f64).exp())
        .collect();
    let table: Vec<Vec<f64>> = etas.iter().map(|&e| coeffs_at(e)).collect::<Result<_>>()?;
    let r = table.iter().map(|c| c.len()).max().unwrap_or(0);
    let mut out = Vec::new();
    for i in 1..=r {
        for j in i + 1..=r {
            for k in 0..SCAN {
                let (Some(g0), Some(g1)) = (log_gap(&table[k], i, j, df), log_gap(&table[k + 1], i, j, df)) else {
                    continue;
                };
                if g0 == 0.0 || g0.signum() == g1.signum() {
                    continue;
                }
                let (mut a, mut b, ga) = (etas[k], etas[k + 1], g0);
                while b / a - 1.0 > 1e-7 {
                    let m = (a * b).sqrt();
                    let gm = log_gap(&coeffs_at(m)?, i, j, df).unwrap_or(ga);
                    if gm.signum() == ga.signum() {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                let eta_star = (a * b).sqrt();
                let pred = predict_t(&coeffs_at(eta_star)?, 1.0, d)?;
                let t_i = pred.t_opt_per_i.iter().find(|p| p.0 == i).map(|p| p.1);
                let t_j = pred.t_opt_per_i.iter().find(|p| p.0 == j).map(|p| p.1);
                let active = match (t_i, t_j) {
                    (Some(x), Some(y)) => x.min(y) <= pred.t_opt * (1.0 + 1e-5),
                    _ => false,
                };
                let hint = analytic.iter().find(|h| h.i == i && h.j == j && !h.degenerate);
                out.push(PhaseBoundary {
                    i,
                    j,
                    eta_star,
                    exponent: hint.map(|h| h.exponent),
                    active,
                    degenerate: false,
                });
            }
        }
    }
    for h in analytic.iter().filter(|h| h.degenerate) {
        out.push(PhaseBoundary {
            i: h.i,
            j: h.j,
            eta_star: df.powf(h.exponent),
            exponent: Some(h.exponent),
            active: false,
            degenerate: true,
        });
    }
    Ok(out)
}

/// First `t` with `alpha_t >= c_target` for
/// `alpha_{t+1} = alpha_t + gamma sum_i c_i alpha_t^{i-1}`, `alpha_0 = d^{-1/2}`.
/// Negative coefficients are dropped unless `include_negative`.
pub fn recursion_oracle(
    coeffs: &[f64],
    gamma: f64,
    d: usize,
    c_target: f64,
    t_max: usize,
    include_negative: bool,
) -> Result<Option<usize>> {
    if !(c_target > 0.0 && c_target < 1.0) {
        return Err(Error::InvalidArgument(format!("c_target must lie in (0, 1), got {c_target}")));
    }
    let c: Vec<f64> = coeffs
        .iter()
        .map(|&v| if v < 0.0 && !include_negative { 0.0 } else { v })
        .collect();
    let mut alpha = 1.0 / (d as f64).sqrt();
    for t in 0..=t_max {
        if alpha >= c_target {
            return Ok(Some(t));
        }
        if !alpha.is_finite() {
            return Ok(None);
        }
        let drift: f64 = c.iter().rev().fold(0.0, |acc, &ci| acc * alpha + ci);
        alpha += gamma * drift;
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LemmaCheck {
    /// Largest relative amount by which a bound was violated; `<= 0` when
    /// every bound held.
    pub max_violation: f64,
    pub steps_checked: usize,
    /// `t_max` was cut to the lemma's validity window.
    pub truncated: bool,
}

/// Relative slack granted to floating-point evaluation of the bounds.
pub const LEMMA_SLACK: f64 = 1e-12;

impl LemmaCheck {
    pub fn holds(&self) -> bool {
        self.max_violation <= LEMMA_SLACK
    }
}

/// Equality sequence `m_t = a + c sum_{j<t} m_j` against `a(1+c)^t` (both
/// directions) and `a e^{ct}`.
pub fn gronwall_check(a: f64, c: f64, t_max: usize) -> Result<LemmaCheck> {
    if !(a > 0.0 && c > 0.0) {
        return Err(Error::InvalidArgument("need a, c > 0".into()));
    }
    let mut worst = f64::NEG_INFINITY;
    let (mut m, mut sum) = (a, 0.0);
    let mut steps = 0;
    for t in 0..=t_max {
        let tight = a * (1.0 + c).powi(t as i32);
        let loose = a * (c * t as f64).exp();
        if !tight.is_finite() || !m.is_finite() {
            break;
        }
        worst = worst.max((m - tight) / tight).max((tight - m) / tight);
        if loose.is_finite() {
            worst = worst.max((tight - loose) / loose);
        }
        steps = t + 1;
        sum += m;
        m = a + c * sum;
    }
    Ok(LemmaCheck {
        max_violation: worst,
        steps_checked: steps,
        truncated: false,
    })
}

/// Equality sequence `m_t = a + c sum_{j<t} m_j^{k-1}` against the upper
/// bound `a / (1 - (k-2) c a^{k-2} t)^{1/(k-2)}` and the lower bound
/// `a / (1 - (c/2) a^{k-2} t)^{1/(k-2)}` inside their windows.
pub fn bihari_lasalle_check(a: f64, c: f64, k: u32, t_max: usize) -> Result<LemmaCheck> {
    if !(a > 0.0 && c > 0.0) || k < 3 {
        return Err(Error::InvalidArgument("need a, c > 0 and k >= 3".into()));
    }
    let q = (k - 2) as f64;
    let ak = a.powf(q);
    let upper_window = 1.0 / (c * q * ak);
    let lower_window = (1.0 / ak - c) / (c * q);
    let window = upper_window.max(lower_window);
    let truncated = (t_max as f64) >= window;
    let mut worst = f64::NEG_INFINITY;
    let (mut m, mut sum) = (a, 0.0);
    let mut steps = 0;
    for t in 0..=t_max {
        let tf = t as f64;
        if tf >= window || !m.is_finite() {
            break;
        }
        if tf < upper_window {
            let ub = a / (1.0 - q * c * ak * tf).powf(1.0 / q);
            if ub.is_finite() {
                worst = worst.max((m - ub) / ub);
            }
        }
        if tf < lower_window {
            let lb = a / (1.0 - 0.5 * c * ak * tf).powf(1.0 / q);
            worst = worst.max((lb - m) / lb);
        }
        steps = t + 1;
        sum += m.powi(k as i32 - 1);
        m = a + c * sum;
    }
    Ok(LemmaCheck {
        max_violation: worst,
        steps_checked: steps,
        truncated,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GammaMode {
    Weak,
    /// Scaled for strong recovery at accuracy `eps` from alignment `c`.
    Strong { eps: f64, c: f64 },
}

/// Corollary-level learning rate with constants 1.
///
/// online `d^{-(p/2 v 1)}`; alternating `max(d^{-(p/2 v 1)}, eta d^{-(p_2/2 v 1)})`;
/// batch reuse `max_i (eta d)^{i-1} d^{-(p_i/2 v 1)}` over `i <= deg sigma`;
/// deep `max_i eta^{i-1} d^{-(p_i/2 v 1)}` over `i <= D`. Here `p_i` is the
/// information exponent of `link^i`. Strong mode returns
/// `d^{-1} eps max_i c_i c^{i-1}`.
pub fn gamma_auto(spec: &OracleSpec, link: &MonomialPoly, coeffs: &[f64], d: usize, mode: GammaMode) -> Result<f64> {
    let df = d as f64;
    if let GammaMode::Strong { eps, c } = mode {
        let m = coeffs
            .iter()
            .enumerate()
            .map(|(j, v)| v * c.powi(j as i32))
            .fold(f64::NEG_INFINITY, f64::max);
        if !(m > 0.0) {
            return Err(Error::NoPositiveMu);
        }
        return Ok(eps * m / df);
    }
    let scale = |k: u32| -> Result<Option<f64>> {
        let e = expand(&link.power(k)?);
        Ok(information_exponent(&e, e.default_tol()).map(|p| df.powf(-half_or_one(p))))
    };
    let eta = spec.eta;
    let mut best = f64::NEG_INFINITY;
    let mut consider = |v: Option<f64>, w: f64| {
        if let Some(v) = v {
            best = best.max(w * v);
        }
    };
    match spec.kind {
        OracleKind::Online => consider(scale(1)?, 1.0),
        OracleKind::Alternating => {
            consider(scale(1)?, 1.0);
            consider(scale(2)?, eta);
        }
        OracleKind::BatchReuse => {
            for i in 1..=spec.activation.degree().max(1) as u32 {
                consider(scale(i)?, (eta * df).powi(i as i32 - 1));
            }
        }
        OracleKind::DeepAlternating => {
            for i in 1..=spec.depth as u32 {
                consider(scale(i)?, eta.powi(i as i32 - 1));
            }
        }
    }
    if !(best > 0.0) {
        return Err(Error::InvalidArgument("link has no nonzero Hermite coefficient of positive degree".into()));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NoiseSpec;
    use crate::oracles::mu_table;

    fn he(k: usize) -> MonomialPoly {
        MonomialPoly::hermite(k).unwrap()
    }

    #[test]
    fn eq5_and_eq6_agree_at_gamma_max() {
        for (coeffs, d) in [
            (vec![0.0, 648.0, 18.0], 50usize),
            (vec![0.3, 0.0, 5.0, 2.0], 25),
            (vec![0.0, 0.0, 18.0], 100),
        ] {
            let p = predict_t(&coeffs, 1.0, d).unwrap();
            let q = predict_t(&coeffs, p.gamma_max, d).unwrap();
            assert!((q.t - p.t_opt).abs() <= 1e-12 * p.t_opt);
            assert_eq!(q.dominant_i, p.dominant_opt);
        }
    }

    #[test]
    fn single_linear_term_has_no_d_factor() {
        let p = predict_t(&[2.0], 0.5, 1000).unwrap();
        assert_eq!(p.t, 1.0);
        assert_eq!(p.dominant_i, 1);
    }

    #[test]
    fn online_he3_ratio_is_four() {
        let c = [0.0, 0.0, 18.0];
        let t50 = predict_t(&c, 50f64.powf(-1.5), 50).unwrap().t;
        let t25 = predict_t(&c, 25f64.powf(-1.5), 25).unwrap().t;
        assert!((t50 / t25 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn no_positive_coefficient() {
        assert!(matches!(predict_t(&[0.0, -1.0], 1.0, 10), Err(Error::NoPositiveMu)));
    }

    #[test]
    fn alternating_shape_matches_corollary() {
        // T_opt = min(d^2 / c_3^2, eta^-2 d / c_2'^2)
        let d = 50;
        for eta in [1e-3, 1e-2, 0.1, 1.0] {
            let p = predict_t(&[0.0, 648.0 * eta, 108.0], 1.0, d).unwrap();
            let want = (2500.0 / (108.0f64 * 108.0)).min(50.0 / (648.0 * eta * 648.0 * eta));
            assert!((p.t_opt - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn alternating_boundary_exponent() {
        let spec = OracleSpec::new(OracleKind::Alternating, he(3), 0.0, 1.0);
        let hints = analytic_boundaries(&spec, &he(3)).unwrap();
        assert_eq!(hints.len(), 1);
        assert_eq!((hints[0].i, hints[0].j), (2, 3));
        assert_eq!(hints[0].exponent, -0.5);
        // crossing of c_2 = 648 eta against c_3 = 108 sits at d^{-1/2} scale
        let b = phase_boundaries(|eta| Ok(vec![0.0, 648.0 * eta, 108.0]), 50, (1e-4, 10.0), &hints).unwrap();
        assert_eq!(b.len(), 1);
        let want = 108.0 / (648.0 * 50f64.sqrt());
        let p = predict_t(&[0.0, 648.0 * b[0].eta_star, 108.0], 1.0, 50).unwrap();
        assert!((p.t_opt_per_i[0].1 / p.t_opt_per_i[1].1 - 1.0).abs() < 1e-6);
        assert!((b[0].eta_star / want - 1.0).abs() < 1e-6);
        assert_eq!(b[0].exponent, Some(-0.5));
        assert!(b[0].active);
    }

    #[test]
    fn boundary_switches_dominant_index() {
        let f = |eta: f64| -> Result<Vec<f64>> {
            let spec = OracleSpec::new(OracleKind::Alternating, he(3), eta, 1.0);
            Ok(mu_table(&spec, &he(3), &NoiseSpec::NONE, 50)?.drift_coeffs())
        };
        let b = phase_boundaries(f, 50, (1e-3, 1.0), &[]).unwrap();
        let first = b.iter().filter(|x| x.active).map(|x| x.eta_star).fold(f64::INFINITY, f64::min);
        let below = predict_t(&f(first * 0.99).unwrap(), 1.0, 50).unwrap().dominant_opt;
        let above = predict_t(&f(first * 1.01).unwrap(), 1.0, 50).unwrap().dominant_opt;
        assert_ne!(below, above);
    }

    #[test]
    fn batch_reuse_degenerate_pair() {
        let spec = OracleSpec::new(OracleKind::BatchReuse, he(3), 0.0, 1.0);
        let hints = analytic_boundaries(&spec, &he(3)).unwrap();
        // label powers 1, 2, 3 have exponents 3, 2, 1
        let e12 = hints.iter().find(|h| (h.i, h.j) == (2, 3)).unwrap();
        assert_eq!(e12.exponent, -1.5);
        assert!(hints.iter().all(|h| !h.degenerate));
        // He_2 and He_2^2 both have information exponent 2
        let spec = OracleSpec::new(OracleKind::BatchReuse, he(2), 0.0, 1.0);
        let hints = analytic_boundaries(&spec, &he(2)).unwrap();
        let deg = hints.iter().find(|h| h.degenerate).unwrap();
        assert_eq!(deg.exponent, -1.0);
        let b = phase_boundaries(|_| Ok(vec![0.0, 1.0]), 40, (1e-4, 1.0), &hints).unwrap();
        assert!(b.iter().any(|x| x.degenerate && (x.eta_star - 1.0 / 40.0).abs() < 1e-15));
    }

    #[test]
    fn single_index_has_no_boundary() {
        assert!(phase_boundaries(|_| Ok(vec![0.0, 0.0, 3.0]), 50, (1e-3, 1.0), &[]).unwrap().is_empty());
    }

    #[test]
    fn recursion_linear_case() {
        let (mu1, gamma, d, c) = (2.0, 0.01, 25, 0.5);
        let t = recursion_oracle(&[mu1], gamma, d, c, 1_000_000, false).unwrap().unwrap();
        let want = ((c - 0.2) / (gamma * mu1)).ceil() as usize;
        assert!(t.abs_diff(want) <= 1);
    }

    #[test]
    fn recursion_quadratic_case() {
        let (mu2, gamma, d, c) = (3.0, 0.01, 100, 0.5);
        let t = recursion_oracle(&[0.0, mu2], gamma, d, c, 1_000_000, false).unwrap().unwrap() as f64;
        let want = (c * (d as f64).sqrt()).ln() / (1.0 + gamma * mu2).ln();
        assert!((t - want).abs() <= 2.0);
    }

    #[test]
    fn recursion_cubic_case() {
        let (mu3, gamma, d, c) = (18.0, 1e-4, 50, 0.5);
        let t = recursion_oracle(&[0.0, 0.0, mu3], gamma, d, c, 10_000_000, false).unwrap().unwrap() as f64;
        let scale = (d as f64).sqrt() / (gamma * mu3);
        assert!(t > scale / 2.0 && t < scale * 2.0);
    }

    #[test]
    fn recursion_drops_negative_terms() {
        let with = recursion_oracle(&[0.0, -100.0, 18.0], 1e-3, 50, 0.5, 100_000, true).unwrap();
        let without = recursion_oracle(&[0.0, -100.0, 18.0], 1e-3, 50, 0.5, 100_000, false).unwrap();
        assert_eq!(with, None);
        assert!(without.is_some());
        assert_eq!(recursion_oracle(&[1.0], 0.0, 50, 0.5, 1000, false).unwrap(), None);
    }

    #[test]
    fn gronwall_equality_case() {
        let r = gronwall_check(1.0, 1.0, 60).unwrap();
        assert_eq!(r.max_violation, 0.0);
        assert!(r.holds());
    }

    #[test]
    fn bihari_lasalle_example() {
        let r = bihari_lasalle_check(0.1, 0.01, 3, 500).unwrap();
        assert!(r.holds(), "{r:?}");
        assert!(!r.truncated);
        // window edge for k = 3 is t = 1 / (c a) = 1000
        let r = bihari_lasalle_check(0.1, 0.01, 3, 5000).unwrap();
        assert!(r.holds());
        assert!(r.truncated);
        assert!(r.steps_checked <= 1000);
    }

    #[test]
    fn gamma_auto_examples() {
        let online = OracleSpec::new(OracleKind::Online, he(3), 0.0, 1.0);
        assert_eq!(gamma_auto(&online, &he(3), &[], 50, GammaMode::Weak).unwrap(), 50f64.powf(-1.5));
        let alt = OracleSpec::new(OracleKind::Alternating, he(3), 1.0, 1.0);
        assert!((gamma_auto(&alt, &he(3), &[], 50, GammaMode::Weak).unwrap() - 0.02).abs() < 1e-15);
        let reuse = OracleSpec::new(OracleKind::BatchReuse, he(3), 1.0 / 50.0, 1.0);
        // max(d^{-3/2}, (eta d) d^{-1}, (eta d)^2 d^{-1})
        assert!((gamma_auto(&reuse, &he(3), &[], 50, GammaMode::Weak).unwrap() - 0.02).abs() < 1e-15);
        let s = gamma_auto(&online, &he(3), &[0.0, 0.0, 18.0], 50, GammaMode::Strong { eps: 0.1, c: 0.5 }).unwrap();
        assert!((s - 0.1 * 18.0 * 0.25 / 50.0).abs() < 1e-15);
    }
}
