//! Probabilist's Hermite machinery.
//!
//! Coefficients are stored unnormalized: `u_k(g) = E[g(z) He_k(z)]` for
//! `z ~ N(0, 1)`, so that `g = sum_k u_k / k! He_k`. Expansions of polynomials
//! are computed exactly from Gaussian moment identities; Gauss-Hermite
//! quadrature is provided as an independent route and for black-box
//! integrands.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::poly::{MonomialPoly, MAX_DEGREE};

/// `k!` as a float. Exact for `k <= 22`, correctly rounded beyond.
pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// `(2m - 1)!!`, the `2m`-th standard Gaussian moment.
pub fn double_factorial_odd(m: usize) -> f64 {
    (1..=m).fold(1.0, |acc, i| acc * (2 * i - 1) as f64)
}

/// `E[z^j]` for `z ~ N(0, 1)`.
pub fn gaussian_moment(j: usize) -> f64 {
    if j % 2 == 1 {
        0.0
    } else {
        double_factorial_odd(j / 2)
    }
}

/// `E[z^j He_k(z)]`: nonzero only when `j - k = 2m >= 0`, where it equals
/// `j! / (m! 2^m)`.
pub fn monomial_hermite_moment(j: usize, k: usize) -> f64 {
    if k > j || (j - k) % 2 == 1 {
        return 0.0;
    }
    let m = (j - k) / 2;
    // j! / (m! 2^m) = prod_{i=m+1}^{j} i / 2^m
    let mut v = 1.0;
    for i in (m + 1)..=j {
        v *= i as f64;
    }
    v / 2f64.powi(m as i32)
}

/// `He_k(z)` by the three-term recurrence `He_{k+1} = z He_k - k He_{k-1}`.
pub fn hermite_eval(k: usize, z: f64) -> Result<f64> {
    if k > MAX_DEGREE {
        return Err(Error::DegreeOverflow {
            degree: k,
            max: MAX_DEGREE,
        });
    }
    Ok(hermite_eval_unchecked(k, z))
}

pub(crate) fn hermite_eval_unchecked(k: usize, z: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, z);
    if k == 0 {
        return prev;
    }
    for j in 1..k {
        let next = z * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Finite Hermite expansion with unnormalized coefficients `u_0..=u_K`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteExpansion {
    coeffs: Vec<f64>,
}

impl HermiteExpansion {
    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "an expansion needs at least u_0");
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `u_k`, zero beyond the stored range.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// `sum_k u_k / k! He_k(z)`.
    pub fn reconstruct(&self, z: f64) -> f64 {
        let mut acc = 0.0;
        let (mut prev, mut cur) = (1.0, z);
        let mut fact = 1.0;
        for (k, &u) in self.coeffs.iter().enumerate() {
            let he = match k {
                0 => 1.0,
                1 => z,
                _ => {
                    let next = z * cur - (k - 1) as f64 * prev;
                    prev = cur;
                    cur = next;
                    cur
                }
            };
            if k > 0 {
                fact *= k as f64;
            }
            acc += u / fact * he;
        }
        acc
    }

    /// `E[g(z)^2] = sum_k u_k^2 / k!`.
    pub fn second_moment(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, u)| u * u / factorial(k))
            .sum()
    }

    /// Default numerical-zero threshold `1e-9 (1 + max |u_k|)`.
    pub fn default_tol(&self) -> f64 {
        let max = self.coeffs.iter().fold(0.0f64, |m, u| m.max(u.abs()));
        1e-9 * (1.0 + max)
    }
}

/// Exact change of basis from monomials to (unnormalized) Hermite coefficients.
pub fn expand(p: &MonomialPoly) -> HermiteExpansion {
    let q = p.degree();
    let coeffs = (0..=q)
        .map(|k| {
            p.coeffs()
                .iter()
                .enumerate()
                .skip(k)
                .map(|(j, c)| c * monomial_hermite_moment(j, k))
                .sum()
        })
        .collect();
    HermiteExpansion { coeffs }
}

/// Smallest `k >= 1` with `|u_k| > tol`, or `None` when there is none.
pub fn information_exponent(g: &HermiteExpansion, tol: f64) -> Option<usize> {
    g.coeffs
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, u)| u.abs() > tol)
        .map(|(k, _)| k)
}

/// Information exponents of the powers of a link and their minimum, an upper
/// bound on the generative exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentReport {
    pub ie: Option<usize>,
    pub power_ies: Vec<(usize, Option<usize>)>,
    pub ge_upper_bound: Option<usize>,
    pub witness_power: Option<usize>,
    pub expansions: Vec<HermiteExpansion>,
}

/// Searches `IE(link^i)` for `i = 1..=k_pow`. A `tol` of `None` applies the
/// relative default of each expansion.
pub fn exponent_report(link: &MonomialPoly, k_pow: usize, tol: Option<f64>) -> Result<ExponentReport> {
    if link.is_constant() {
        return Err(Error::InvalidArgument("link must be nonconstant".into()));
    }
    if k_pow == 0 {
        return Err(Error::InvalidArgument("k_pow must be positive".into()));
    }
    let degree = k_pow * link.degree();
    if degree > MAX_DEGREE {
        return Err(Error::DegreeOverflow {
            degree,
            max: MAX_DEGREE,
        });
    }
    let mut power_ies = Vec::with_capacity(k_pow);
    let mut expansions = Vec::with_capacity(k_pow);
    let mut pow = MonomialPoly::constant(1.0);
    for i in 1..=k_pow {
        pow = pow.multiply(link)?;
        let e = expand(&pow);
        let t = tol.unwrap_or_else(|| e.default_tol());
        power_ies.push((i, information_exponent(&e, t)));
        expansions.push(e);
    }
    let mut best: Option<(usize, usize)> = None;
    for &(i, ie) in &power_ies {
        if let Some(p) = ie {
            if best.map_or(true, |(_, bp)| p < bp) {
                best = Some((i, p));
            }
        }
    }
    Ok(ExponentReport {
        ie: power_ies[0].1,
        power_ies,
        ge_upper_bound: best.map(|(_, p)| p),
        witness_power: best.map(|(i, _)| i),
        expansions,
    })
}

/// Gauss-Hermite rule for the standard normal weight `e^{-z^2/2} / sqrt(2 pi)`.
#[derive(Clone, Debug)]
pub struct GaussHermiteRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermiteRule {
    /// Physicists' nodes from the eigenvalues of the Jacobi matrix, each
    /// polished by Newton iteration on the orthonormal recurrence, with
    /// weights `2 / p_n'(x)^2`; then the change of variables `z = sqrt(2) x`,
    /// `w -> w / sqrt(pi)`.
    pub fn new(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
        }
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let mut x: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        x.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let gap = |i: usize, x: &[f64]| {
            let left = if i > 0 { x[i - 1] - x[i] } else { f64::INFINITY };
            let right = if i + 1 < n { x[i] - x[i + 1] } else { f64::INFINITY };
            left.min(right)
        };
        let mut w = vec![0.0; n];
        for i in 0..n {
            let half_gap = 0.5 * gap(i, &x);
            let start = x[i];
            let mut z = start;
            let (_, mut pp) = orthonormal_hermite(n, z);
            for _ in 0..20 {
                let (p, d) = orthonormal_hermite(n, z);
                pp = d;
                let z1 = z - p / d;
                if !z1.is_finite() || (z1 - start).abs() > half_gap {
                    break;
                }
                let done = (z1 - z).abs() <= 1e-15 * (1.0 + z1.abs());
                z = z1;
                if done {
                    pp = orthonormal_hermite(n, z).1;
                    break;
                }
            }
            x[i] = z;
            w[i] = 2.0 / (pp * pp);
        }
        let sqrt2 = std::f64::consts::SQRT_2;
        let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
        Ok(Self {
            nodes: x.iter().map(|v| v * sqrt2).collect(),
            weights: w.iter().map(|v| v * inv_sqrt_pi).collect(),
        })
    }

    /// `E[f(z)]` under `N(0, 1)`.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .sum()
    }
}

/// Orthonormal physicists' Hermite function value `p_n(x)` and the scaled
/// derivative `sqrt(2n) p_{n-1}(x)`.
fn orthonormal_hermite(n: usize, x: f64) -> (f64, f64) {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let (mut p1, mut p2) = (PIM4, 0.0);
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = x * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Quadrature estimate of `u_k(g) = E[g(z) He_k(z)]`.
pub fn gauss_hermite_coeff<F: Fn(f64) -> f64>(g: F, k: usize, nodes: usize) -> Result<f64> {
    let rule = GaussHermiteRule::new(nodes)?;
    Ok(rule.expect(|z| g(z) * hermite_eval_unchecked(k, z)))
}
